//! Regular 2D grid and unconstrained fields on it.
//!
//! Storage convention: z varies fastest, so a column of constant x is
//! contiguous and the flat index of (ix, iz) is `ix * nz + iz`.

use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Regular grid with square cells of spacing `h` meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D<T: Scalar> {
    nx: usize,
    nz: usize,
    h: T,
}

impl<T: Scalar> Grid2D<T> {
    pub fn new(nx: usize, nz: usize, h: T) -> Result<Self> {
        if nx < 3 || nz < 3 {
            return Err(WiprError::InvalidGrid(format!(
                "need at least 3 cells per axis, got {nx}x{nz}"
            )));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(WiprError::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        Ok(Self { nx, nz, h })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Total node count nx·nz.
    pub fn n(&self) -> usize {
        self.nx * self.nz
    }

    /// Flat index of (ix, iz), z fastest.
    #[inline]
    pub fn idx(&self, ix: usize, iz: usize) -> usize {
        debug_assert!(ix < self.nx && iz < self.nz);
        ix * self.nz + iz
    }

    /// Inverse of [`idx`](Self::idx).
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        debug_assert!(i < self.n());
        (i / self.nz, i % self.nz)
    }

    /// True when (ix, iz) lies at least `margin` cells away from every edge.
    pub fn is_interior(&self, ix: usize, iz: usize, margin: usize) -> bool {
        ix >= margin && iz >= margin && ix + margin < self.nx && iz + margin < self.nz
    }
}

/// Real-valued field on a grid with no sign constraint. Model iterates that
/// must stay positive use [`crate::model::ModelField`] instead.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T: Scalar> {
    grid: Grid2D<T>,
    values: Vec<T>,
}

impl<T: Scalar> GridField<T> {
    pub fn new(grid: Grid2D<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(WiprError::DimensionMismatch { expected: grid.n(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WiprError::InvalidModel("non-finite field value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D<T>) -> Self {
        let n = grid.n();
        Self { grid, values: vec![T::zero(); n] }
    }

    pub fn grid(&self) -> Grid2D<T> {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}
