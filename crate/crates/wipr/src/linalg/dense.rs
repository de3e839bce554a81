//! Dense complex matrices and Hermitian Cholesky, sized for the small
//! normal-equation systems of the phase-retrieval module.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Row-major dense complex matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![Complex::zero(); self.rows];
        for i in 0..self.rows {
            let mut s = Complex::zero();
            for j in 0..self.cols {
                s = s + self.data[i * self.cols + j] * x[j];
            }
            y[i] = s;
        }
        y
    }

    /// y = Aᴴ x (conjugate transpose).
    pub fn apply_adjoint(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![Complex::zero(); self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                y[j] = y[j] + self.data[i * self.cols + j].conj() * x[i];
            }
        }
        y
    }
}

/// Cholesky factor of a dense Hermitian positive definite matrix stored as a
/// full n×n buffer (only the lower triangle of the input is read).
pub struct DenseHermChol<T: Scalar> {
    n: usize,
    l: Vec<Complex<T>>,
}

impl<T: Scalar> DenseHermChol<T> {
    /// `a` is the lower triangle (full row-major n×n buffer). Fails on a
    /// nonpositive pivot, reporting its row.
    pub fn factor(a: &[Complex<T>], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![Complex::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k].conj();
                }
                if i == j {
                    let d = s.re;
                    if !(d > T::zero()) || !d.is_finite() {
                        return Err(WiprError::SingularOperator(format!(
                            "dense Cholesky pivot {d} not positive at row {i}"
                        )));
                    }
                    l[i * n + i] = Complex::new(d.sqrt(), T::zero());
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.l[k * n + i].conj() * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}
