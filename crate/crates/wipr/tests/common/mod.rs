//! Shared fixtures and independent oracles for the integration suites.
//!
//! The dense solver here is deliberately written from scratch (full Gaussian
//! elimination with partial pivoting) so the banded factorizations in the
//! crate are checked against arithmetic that shares none of their code.

#![allow(dead_code)]

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wipr::helmholtz::HelmholtzSystem;
use wipr::linalg::DenseMatrix;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Dense complex linear solve by Gaussian elimination with partial pivoting.
/// `a` is row-major n×n and is consumed; panics on an exactly singular pivot
/// (never expected in these fixtures).
pub fn dense_gauss_solve(mut a: Vec<C64>, mut b: Vec<C64>, n: usize) -> Vec<C64> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm();
        for r in col + 1..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        assert!(best > 0.0, "singular matrix in oracle at column {col}");
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
            let bv = b[col];
            b[r] -= f * bv;
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in col + 1..n {
            s -= a[col * n + j] * b[j];
        }
        b[col] = s / a[col * n + col];
    }
    b
}

/// Materializes the operator column by column through `apply`, giving the
/// dense oracle the exact same matrix the banded code factors.
pub fn materialize(system: &HelmholtzSystem<f64>) -> Vec<C64> {
    let n = system.n();
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let col = system.apply(&e).unwrap();
        e[j] = C64::new(0.0, 0.0);
        for i in 0..n {
            a[i * n + j] = col[i];
        }
    }
    a
}

/// Same matrix wrapped for the phase-retrieval operator trait.
pub fn materialize_dense(system: &HelmholtzSystem<f64>) -> DenseMatrix<f64> {
    let n = system.n();
    let a = materialize(system);
    DenseMatrix::from_fn(n, n, |i, j| a[i * n + j])
}

/// Smooth strictly positive velocity field: a constant plus a few random
/// low-order cosine modes, bounded away from zero by construction.
pub fn smooth_velocity(rng: &mut ChaCha8Rng, nx: usize, nz: usize, base: f64, swing: f64) -> Vec<f64> {
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let norm: f64 = modes.iter().map(|m| m.3.abs()).sum::<f64>().max(1.0);
    let mut v = Vec::with_capacity(nx * nz);
    for ix in 0..nx {
        for iz in 0..nz {
            let x = ix as f64 / (nx - 1) as f64;
            let z = iz as f64 / (nz - 1) as f64;
            let mut s = 0.0;
            for &(kx, kz, ph, w) in &modes {
                s += w * (std::f64::consts::TAU * (kx * x + kz * z) + ph).cos();
            }
            v.push(base + swing * s / norm);
        }
    }
    v
}

pub fn rel_err_c(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn rel_err_r(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}
