//! Model updates from reconstructed wavefields.
//!
//! The operator splits as A(m)u = Δu + L(u)m where L(u) = ω²·diag(C·Bu) is
//! diagonal in m. With the field fixed, the source equation A(m)u = b̄
//! becomes the pointwise linear system L(u)m = b̄ − Δu =: y, so the
//! least-squares model over all sources is a ratio of per-node sums. The
//! phase-retrieval variant first replaces each y with |y| carrying the phase
//! of L(u)m at the current model, discarding phase errors the cycle-skipped
//! data forced into y.

use num_complex::Complex;

use crate::grid::Grid2D;
use crate::helmholtz::{plain_laplacian_apply, HelmholtzSystem};
use crate::phase_retrieval::unit_phase;
use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Diagonal factor and right-hand side of the pointwise model equation of
/// one (frequency, source) pair: diag(m) · diag = rhs.
#[derive(Debug, Clone)]
pub struct VirtualSource<T: Scalar> {
    pub diag: Vec<Complex<T>>,
    pub rhs: Vec<Complex<T>>,
}

/// Builds the virtual source of a reconstructed field: diag = ω²·C·(Bu),
/// rhs = b̄ − Δu, both against the system the field was reconstructed with.
pub fn virtual_source<T: Scalar>(
    system: &HelmholtzSystem<T>,
    u: &[Complex<T>],
    b_aug: &[Complex<T>],
) -> Result<VirtualSource<T>> {
    if b_aug.len() != system.n() {
        return Err(WiprError::DimensionMismatch { expected: system.n(), got: b_aug.len() });
    }
    let om2 = system.omega() * system.omega();
    let bu = system.apply_b(u)?;
    let c = system.c_diag();
    let diag: Vec<Complex<T>> = bu.iter().zip(c).map(|(&v, &ci)| ci * v * om2).collect();
    let lap = system.apply_laplacian_part(u)?;
    let rhs: Vec<Complex<T>> = b_aug.iter().zip(&lap).map(|(&b, &l)| b - l).collect();
    Ok(VirtualSource { diag, rhs })
}

/// Result of a pointwise least-squares model fit across sources.
#[derive(Debug, Clone)]
pub struct ModelUpdate<T: Scalar> {
    /// Raw fitted squared slowness, before any floor or bound projection.
    pub values: Vec<T>,
    /// Per-node quadratic weights Σₛ|lₛ|², reusable as data weights.
    pub fit_weights: Vec<T>,
    /// Per-node linear terms Re Σₛ conj(lₛ)yₛ.
    pub fit_rhs: Vec<T>,
    /// A relative ridge was added because some denominators collapsed.
    pub ridged: bool,
    /// ‖Im Σ conj(l)y‖ / ‖Σ conj(l)y‖, small when fields and data are
    /// mutually consistent.
    pub imag_fraction: T,
    /// Count of zero-magnitude phase anchors hit while aligning.
    pub zero_phase_events: usize,
}

fn ls_core<T: Scalar>(
    sources: &[(&[Complex<T>], &[Complex<T>])],
    zero_phase_events: usize,
) -> Result<ModelUpdate<T>> {
    let n = sources[0].0.len();
    let mut num_re = vec![T::zero(); n];
    let mut num_im_sq = T::zero();
    let mut num_sq = T::zero();
    let mut den = vec![T::zero(); n];
    for (diag, rhs) in sources {
        for i in 0..n {
            let prod = diag[i].conj() * rhs[i];
            num_re[i] += prod.re;
            num_im_sq += prod.im * prod.im;
            num_sq += prod.norm_sqr();
            den[i] += diag[i].norm_sqr();
        }
    }
    let den_max = den.iter().cloned().fold(T::zero(), T::max);
    if den_max == T::zero() {
        return Err(WiprError::SingularOperator(
            "virtual sources vanished: every diagonal entry is zero".into(),
        ));
    }
    let den_min = den.iter().cloned().fold(T::infinity(), T::min);
    let mut ridge = T::zero();
    let ridged = den_min <= T::real(1e-14) * den_max;
    if ridged {
        let mean = den.iter().cloned().sum::<T>() / T::real(n as f64);
        ridge = T::real(1e-10) * mean;
    }
    let values: Vec<T> = (0..n).map(|i| num_re[i] / (den[i] + ridge)).collect();
    let imag_fraction = if num_sq > T::zero() { (num_im_sq / num_sq).sqrt() } else { T::zero() };
    Ok(ModelUpdate {
        values,
        fit_weights: den,
        fit_rhs: num_re,
        ridged,
        imag_fraction,
        zero_phase_events,
    })
}

/// Least-squares model from virtual sources: mᵢ = Re Σ conj(l)y / Σ|l|².
pub fn update_model_ls<T: Scalar>(sources: &[VirtualSource<T>]) -> Result<ModelUpdate<T>> {
    if sources.is_empty() {
        return Err(WiprError::InvalidConfig("model update needs at least one source".into()));
    }
    let pairs: Vec<(&[Complex<T>], &[Complex<T>])> =
        sources.iter().map(|s| (s.diag.as_slice(), s.rhs.as_slice())).collect();
    ls_core(&pairs, 0)
}

/// Replaces each rhs value with its magnitude carrying the phase of
/// lᵢ·mᵢ at the current model; returns the aligned rhs and the number of
/// zero-magnitude anchors that fell back to phase 0.
pub fn phase_align<T: Scalar>(
    vs: &VirtualSource<T>,
    m_current: &[T],
) -> (Vec<Complex<T>>, usize) {
    let mut zeros = 0usize;
    let aligned = vs
        .diag
        .iter()
        .zip(&vs.rhs)
        .zip(m_current)
        .map(|((&l, &y), &m)| {
            let (phase, was_zero) = unit_phase(l * m);
            if was_zero {
                zeros += 1;
            }
            phase * y.norm()
        })
        .collect();
    (aligned, zeros)
}

/// Phase-retrieval model update: align every rhs against the current model,
/// then fit by least squares.
pub fn update_model_pr<T: Scalar>(
    sources: &[VirtualSource<T>],
    m_current: &[T],
) -> Result<ModelUpdate<T>> {
    if sources.is_empty() {
        return Err(WiprError::InvalidConfig("model update needs at least one source".into()));
    }
    let mut zeros = 0usize;
    let aligned: Vec<Vec<Complex<T>>> = sources
        .iter()
        .map(|vs| {
            let (a, z) = phase_align(vs, m_current);
            zeros += z;
            a
        })
        .collect();
    let pairs: Vec<(&[Complex<T>], &[Complex<T>])> = sources
        .iter()
        .zip(&aligned)
        .map(|(s, a)| (s.diag.as_slice(), a.as_slice()))
        .collect();
    ls_core(&pairs, zeros)
}

/// Pointwise model estimates read directly off one field through the plain
/// interior stencil: m ≈ (b − Δu)/(ω²u). Nodes within `margin` of the edge
/// or where |u| ≤ threshold·max|u| are masked out.
#[derive(Debug, Clone)]
pub struct BilinearRecovery<T: Scalar> {
    pub values: Vec<T>,
    pub magnitudes: Vec<T>,
    pub valid: Vec<bool>,
    pub masked_fraction: T,
}

pub fn bilinear_recovery<T: Scalar>(
    grid: Grid2D<T>,
    omega: T,
    u: &[Complex<T>],
    b: &[Complex<T>],
    margin: usize,
    threshold: T,
) -> Result<BilinearRecovery<T>> {
    if u.len() != grid.n() {
        return Err(WiprError::DimensionMismatch { expected: grid.n(), got: u.len() });
    }
    if b.len() != grid.n() {
        return Err(WiprError::DimensionMismatch { expected: grid.n(), got: b.len() });
    }
    if !(threshold >= T::zero()) {
        return Err(WiprError::InvalidConfig("mask threshold must be nonnegative".into()));
    }
    let lap = plain_laplacian_apply(grid, u)?;
    let om2 = omega * omega;
    let umax = u.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let cut = threshold * umax;
    let n = grid.n();
    let mut values = vec![T::zero(); n];
    let mut magnitudes = vec![T::zero(); n];
    let mut valid = vec![false; n];
    let mut masked = 0usize;
    for i in 0..n {
        let (ix, iz) = grid.coords(i);
        if !grid.is_interior(ix, iz, margin) {
            masked += 1;
            continue;
        }
        let ui = u[i];
        if ui.norm() <= cut {
            masked += 1;
            continue;
        }
        let y = b[i] - lap[i];
        values[i] = (y / (ui * om2)).re;
        magnitudes[i] = y.norm() / (ui.norm() * om2);
        valid[i] = true;
    }
    Ok(BilinearRecovery {
        values,
        magnitudes,
        valid,
        masked_fraction: T::real(masked as f64) / T::real(n as f64),
    })
}

/// Mean absolute model deviation in percent: 100·‖m − m*‖₁/‖m*‖₁.
pub fn model_error<T: Scalar>(m: &[T], reference: &[T]) -> Result<T> {
    if m.len() != reference.len() {
        return Err(WiprError::DimensionMismatch { expected: reference.len(), got: m.len() });
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for (a, b) in m.iter().zip(reference) {
        num += (*a - *b).abs();
        den += b.abs();
    }
    if den == T::zero() {
        return Err(WiprError::InvalidModel("reference model has zero norm".into()));
    }
    Ok(T::real(100.0) * num / den)
}
