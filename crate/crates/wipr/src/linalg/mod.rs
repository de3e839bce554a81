//! Small dense/banded linear algebra used by the solvers.
//!
//! The Helmholtz operator under z-fastest ordering is banded with half
//! bandwidth nz, so desk-scale systems are factored directly: general banded
//! LU with partial pivoting for A itself, banded Cholesky for the Hermitian
//! positive definite normal operators. Both are generic over real and complex
//! elements through `num_complex::ComplexFloat`.

pub mod band;
pub mod dense;

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Scalar;

pub use band::{BandChol, BandLu, Element, HermBand};
pub use dense::{DenseHermChol, DenseMatrix};

/// Conjugating dot product ⟨a, b⟩ = Σ conj(a_i)·b_i.
pub fn cdot<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.conj() * *y;
    }
    acc
}

/// Squared Euclidean norm of a complex vector.
pub fn norm2_sq<T: Scalar>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Euclidean norm of a complex vector.
pub fn norm2<T: Scalar>(a: &[Complex<T>]) -> T {
    norm2_sq(a).sqrt()
}

/// Euclidean norm of a real vector.
pub fn rnorm2<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Max magnitude of a complex vector (0 for empty input).
pub fn max_abs<T: Scalar>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm()).fold(T::zero(), T::max)
}
