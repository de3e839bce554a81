//! Banded factorizations: LU with partial pivoting and Hermitian Cholesky.

use num_complex::ComplexFloat;
use num_traits::{NumAssignOps, NumCast, ToPrimitive, Zero};

use crate::{Result, WiprError};

/// Matrix element: real or complex float. `Real` gives pivot magnitudes,
/// `conj` makes the same Cholesky serve symmetric and Hermitian systems.
pub trait Element: ComplexFloat + NumAssignOps + std::fmt::Debug + Send + Sync + 'static {}
impl<E: ComplexFloat + NumAssignOps + std::fmt::Debug + Send + Sync + 'static> Element for E {}

fn abs_f64<E: Element>(v: E) -> f64 {
    v.abs().to_f64().unwrap_or(f64::NAN)
}

fn from_real<E: Element>(v: <E as ComplexFloat>::Real) -> E {
    <E as NumCast>::from(v).expect("real scalar converts into element type")
}

/// LU factorization of a band matrix with partial pivoting.
///
/// Rows are stored diagonal-aligned with width m1+m2+1; row interchanges
/// shift eliminated rows left by one slot, which keeps every stored row's
/// first slot on the current pivot column (fill from pivoting extends U's
/// bandwidth to at most m1+m2, which the storage width covers exactly).
pub struct BandLu<E: Element> {
    n: usize,
    m1: usize,
    w: usize,
    upper: Vec<E>,
    mults: Vec<E>,
    piv: Vec<usize>,
    pivot_min: f64,
    pivot_max: f64,
}

impl<E: Element> BandLu<E> {
    /// Factors an n×n band matrix with lower bandwidth `m1` and upper
    /// bandwidth `m2`. `row` must push the (column, value) entries of each
    /// row; duplicate columns accumulate.
    pub fn factor_from_rows(
        n: usize,
        m1: usize,
        m2: usize,
        mut row: impl FnMut(usize, &mut Vec<(usize, E)>),
    ) -> Result<Self> {
        let w = m1 + m2 + 1;
        let mut upper = vec![E::zero(); n * w];
        let mut buf: Vec<(usize, E)> = Vec::with_capacity(16);
        for i in 0..n {
            buf.clear();
            row(i, &mut buf);
            let col0 = i.saturating_sub(m1);
            for &(j, v) in buf.iter() {
                debug_assert!(
                    j + m1 >= i && j <= i + m2,
                    "entry ({i},{j}) outside declared band ({m1},{m2})"
                );
                upper[i * w + (j - col0)] += v;
            }
        }

        let mut mults = vec![E::zero(); n * m1.max(1)];
        let mut piv = vec![0usize; n];
        let mut pivot_min = f64::INFINITY;
        let mut pivot_max = 0.0f64;

        for k in 0..n {
            let l = m1.min(n - 1 - k);
            let mut p = k;
            let mut best = abs_f64(upper[k * w]);
            for r in (k + 1)..=(k + l) {
                let a = abs_f64(upper[r * w]);
                if a > best {
                    best = a;
                    p = r;
                }
            }
            piv[k] = p;
            if !(best > 0.0) {
                return Err(WiprError::SingularOperator(format!(
                    "zero pivot at elimination column {k} (pivot range so far [{pivot_min:.3e}, {pivot_max:.3e}])"
                )));
            }
            if p != k {
                for j in 0..w {
                    upper.swap(k * w + j, p * w + j);
                }
            }
            pivot_min = pivot_min.min(best);
            pivot_max = pivot_max.max(best);
            let pivval = upper[k * w];
            for r in (k + 1)..=(k + l) {
                let mult = upper[r * w] / pivval;
                mults[k * m1 + (r - k - 1)] = mult;
                for j in 1..w {
                    upper[r * w + j - 1] = upper[r * w + j] - mult * upper[k * w + j];
                }
                upper[r * w + w - 1] = E::zero();
            }
        }

        Ok(Self { n, m1, w, upper, mults, piv, pivot_min, pivot_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// min|pivot| / max|pivot|, a cheap ill-conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        if self.pivot_max > 0.0 {
            self.pivot_min / self.pivot_max
        } else {
            0.0
        }
    }

    pub fn solve(&self, b: &[E]) -> Vec<E> {
        assert_eq!(b.len(), self.n);
        let (n, m1, w) = (self.n, self.m1, self.w);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let l = m1.min(n - 1 - k);
            for r in (k + 1)..=(k + l) {
                let m = self.mults[k * m1 + (r - k - 1)];
                x[r] = x[r] - m * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            let jmax = (w - 1).min(n - 1 - i);
            for j in 1..=jmax {
                s = s - self.upper[i * w + j] * x[i + j];
            }
            x[i] = s / self.upper[i * w];
        }
        x
    }
}

/// Hermitian (or real symmetric) band matrix, lower triangle stored
/// diagonal-aligned: slot hb holds the diagonal, slot hb-k holds column i-k.
#[derive(Clone)]
pub struct HermBand<E: Element> {
    n: usize,
    hb: usize,
    w: usize,
    lo: Vec<E>,
}

impl<E: Element> HermBand<E> {
    pub fn zeros(n: usize, hb: usize) -> Self {
        let w = hb + 1;
        Self { n, hb, w, lo: vec![E::zero(); n * w] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.hb
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.hb);
        i * self.w + (j + self.hb - i)
    }

    /// Accumulates into entry (i, j). Only the lower triangle is stored;
    /// callers pass i ≥ j.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: E) {
        let s = self.slot(i, j);
        self.lo[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> E {
        self.lo[self.slot(i, j)]
    }

    /// Adds `delta` to every diagonal entry.
    pub fn add_ridge(&mut self, delta: <E as ComplexFloat>::Real) {
        let d = from_real::<E>(delta);
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.lo[s] += d;
        }
    }

    /// Mean of the real parts of the diagonal.
    pub fn mean_diag(&self) -> <E as ComplexFloat>::Real {
        let mut acc = <<E as ComplexFloat>::Real as Zero>::zero();
        for i in 0..self.n {
            acc = acc + self.lo[self.slot(i, i)].re();
        }
        acc / <<E as ComplexFloat>::Real as NumCast>::from(self.n).unwrap()
    }

    /// y = A·x using Hermitian symmetry for the strict upper triangle.
    pub fn matvec(&self, x: &[E]) -> Vec<E> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![E::zero(); self.n];
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.hb);
            for j in jmin..i {
                let v = self.lo[self.slot(i, j)];
                y[i] += v * x[j];
                y[j] += v.conj() * x[i];
            }
            y[i] += self.lo[self.slot(i, i)] * x[i];
        }
        y
    }

    /// Cholesky factorization A = L·Lᴴ. Fails if a pivot is not strictly
    /// positive, reporting the offending row.
    pub fn cholesky(&self) -> Result<BandChol<E>> {
        let (n, hb, w) = (self.n, self.hb, self.w);
        let mut l = self.lo.clone();
        let at = |buf: &Vec<E>, i: usize, j: usize| buf[i * w + (j + hb - i)];
        for i in 0..n {
            let jmin = i.saturating_sub(hb);
            for j in jmin..=i {
                let mut s = at(&l, i, j);
                for k in jmin.max(j.saturating_sub(hb))..j {
                    s = s - at(&l, i, k) * at(&l, j, k).conj();
                }
                if j == i {
                    let d = s.re();
                    if !(d > <<E as ComplexFloat>::Real as Zero>::zero())
                        || d.to_f64().map_or(true, |v| !v.is_finite())
                    {
                        return Err(WiprError::SingularOperator(format!(
                            "Cholesky pivot {} not positive at row {i}",
                            d.to_f64().unwrap_or(f64::NAN)
                        )));
                    }
                    l[i * w + hb] = from_real::<E>(d.sqrt());
                } else {
                    let d = at(&l, j, j);
                    l[i * w + (j + hb - i)] = s / d;
                }
            }
        }
        Ok(BandChol { n, hb, w, l })
    }
}

/// Cholesky factor of a [`HermBand`] system.
pub struct BandChol<E: Element> {
    n: usize,
    hb: usize,
    w: usize,
    l: Vec<E>,
}

impl<E: Element> BandChol<E> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> E {
        self.l[i * self.w + (j + self.hb - i)]
    }

    pub fn solve(&self, b: &[E]) -> Vec<E> {
        assert_eq!(b.len(), self.n);
        let (n, hb) = (self.n, self.hb);
        let mut y = b.to_vec();
        for i in 0..n {
            let jmin = i.saturating_sub(hb);
            let mut s = y[i];
            for k in jmin..i {
                s = s - self.at(i, k) * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let kmax = (i + hb).min(n - 1);
            let mut s = y[i];
            for k in (i + 1)..=kmax {
                s = s - self.at(k, i).conj() * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    type C64 = Complex<f64>;

    /// Independent oracle: dense Gaussian elimination with partial pivoting.
    fn dense_gauss(a0: &[Vec<C64>], b0: &[C64]) -> Vec<C64> {
        let n = b0.len();
        let mut a: Vec<Vec<C64>> = a0.to_vec();
        let mut b = b0.to_vec();
        for k in 0..n {
            let mut p = k;
            for r in k + 1..n {
                if a[r][k].norm() > a[p][k].norm() {
                    p = r;
                }
            }
            a.swap(k, p);
            b.swap(k, p);
            for r in k + 1..n {
                let m = a[r][k] / a[k][k];
                for j in k..n {
                    let akj = a[k][j];
                    a[r][j] -= m * akj;
                }
                let bk = b[k];
                b[r] -= m * bk;
            }
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= a[i][j] * x[j];
            }
            x[i] = s / a[i][i];
        }
        x
    }

    fn random_band(
        rng: &mut ChaCha8Rng,
        n: usize,
        m1: usize,
        m2: usize,
    ) -> (Vec<Vec<C64>>, Vec<Vec<(usize, C64)>>) {
        let mut dense = vec![vec![C64::new(0.0, 0.0); n]; n];
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for i in 0..n {
            let lo = i.saturating_sub(m1);
            let hi = (i + m2).min(n - 1);
            for j in lo..=hi {
                let mut v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if i == j {
                    // diagonal dominance keeps the test matrices comfortably regular
                    v += C64::new(4.0 * (m1 + m2 + 1) as f64, 1.0);
                }
                dense[i][j] = v;
                rows[i].push((j, v));
            }
        }
        (dense, rows)
    }

    #[test]
    fn band_lu_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, m1, m2) in &[(1usize, 0usize, 0usize), (9, 2, 3), (40, 5, 5), (60, 1, 4)] {
            let (dense, rows) = random_band(&mut rng, n, m1, m2);
            let lu = BandLu::factor_from_rows(n, m1, m2, |i, buf| {
                buf.extend_from_slice(&rows[i]);
            })
            .unwrap();
            let b: Vec<C64> =
                (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let x = lu.solve(&b);
            let y = dense_gauss(&dense, &b);
            for (u, v) in x.iter().zip(&y) {
                assert!((u - v).norm() < 1e-11, "band vs dense mismatch: {u} {v}");
            }
            assert!(lu.pivot_ratio() > 0.0);
        }
    }

    #[test]
    fn band_lu_reports_singular() {
        // second row is a duplicate of the first within the band
        let rows = vec![vec![(0usize, C64::new(1.0, 0.0)), (1, C64::new(2.0, 0.0))]; 2];
        let r = BandLu::factor_from_rows(2, 1, 1, |i, buf| buf.extend_from_slice(&rows[i]));
        assert!(matches!(r, Err(WiprError::SingularOperator(_))));
    }

    #[test]
    fn herm_band_cholesky_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, hb) in &[(6usize, 2usize), (30, 4), (50, 7)] {
            // Build HPD matrix as G = B·Bᴴ + n·I with B banded
            let (_, rows) = random_band(&mut rng, n, hb / 2, hb - hb / 2);
            let mut dense = vec![vec![C64::new(0.0, 0.0); n]; n];
            for r in 0..n {
                for &(i, vi) in &rows[r] {
                    for &(j, vj) in &rows[r] {
                        dense[i][j] += vi.conj() * vj;
                    }
                }
            }
            for i in 0..n {
                dense[i][i] += C64::new(n as f64, 0.0);
            }
            let mut hb_mat = HermBand::<C64>::zeros(n, hb);
            for i in 0..n {
                for j in i.saturating_sub(hb)..=i {
                    hb_mat.add(i, j, dense[i][j]);
                }
            }
            let b: Vec<C64> =
                (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let chol = hb_mat.cholesky().unwrap();
            let x = chol.solve(&b);
            let y = dense_gauss(&dense, &b);
            for (u, v) in x.iter().zip(&y) {
                assert!((u - v).norm() < 1e-10, "chol vs dense mismatch: {u} {v}");
            }
            // matvec consistency: A x ≈ b
            let ax = hb_mat.matvec(&x);
            let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm()).sum();
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut m = HermBand::<f64>::zeros(2, 1);
        m.add(0, 0, 1.0);
        m.add(1, 0, 3.0);
        m.add(1, 1, 1.0); // 1 - 9 < 0 in the second pivot
        assert!(m.cholesky().is_err());
    }

    #[test]
    fn real_symmetric_cholesky_works_via_same_code() {
        let mut m = HermBand::<f64>::zeros(3, 1);
        m.add(0, 0, 4.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 4.0);
        m.add(2, 1, 1.0);
        m.add(2, 2, 4.0);
        let x = m.cholesky().unwrap().solve(&[1.0, 2.0, 3.0]);
        let ax = m.matvec(&x);
        for (a, b) in ax.iter().zip(&[1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ridge_shifts_diagonal_only() {
        let mut m = HermBand::<f64>::zeros(2, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 2.0);
        m.add(1, 0, 0.5);
        m.add_ridge(0.25);
        assert_eq!(m.get(0, 0), 1.25);
        assert_eq!(m.get(1, 1), 2.25);
        assert_eq!(m.get(1, 0), 0.5);
        assert!((m.mean_diag() - 1.75).abs() < 1e-15);
    }
}
