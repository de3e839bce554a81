//! Model parameterization: squared slowness fields, bounds, toy models.
//!
//! The inverted parameter is squared slowness m = 1/v² in s²/m², so the
//! Helmholtz mass term ω²·m is linear in the unknown.

use crate::grid::{Grid2D, GridField};
use crate::scalar::Scalar;
use crate::{Result, WiprError};

/// Squared-slowness field. The public constructor enforces strictly positive,
/// finite values; inversion internals that can transiently leave that set use
/// [`ModelField::from_values_unchecked`] and restore validity before output.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelField<T: Scalar> {
    grid: Grid2D<T>,
    values: Vec<T>,
}

impl<T: Scalar> ModelField<T> {
    pub fn new(grid: Grid2D<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(WiprError::DimensionMismatch { expected: grid.n(), got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v <= T::zero()) {
            return Err(WiprError::InvalidModel(format!(
                "squared slowness must be strictly positive and finite, got {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Constant model from a single squared-slowness value.
    pub fn constant(grid: Grid2D<T>, value: T) -> Result<Self> {
        Self::new(grid, vec![value; grid.n()])
    }

    /// Skips the positivity check. Only finiteness is asserted in debug
    /// builds; intended for intermediate inversion iterates.
    pub fn from_values_unchecked(grid: Grid2D<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { grid, values }
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

    pub fn min_value(&self) -> T {
        self.values.iter().cloned().fold(T::infinity(), T::min)
    }
}

/// Converts a velocity field (m/s) to squared slowness.
pub fn velocity_to_sq_slowness<T: Scalar>(grid: Grid2D<T>, velocity: &[T]) -> Result<ModelField<T>> {
    if velocity.len() != grid.n() {
        return Err(WiprError::DimensionMismatch { expected: grid.n(), got: velocity.len() });
    }
    if let Some(v) = velocity.iter().find(|v| !v.is_finite() || **v <= T::zero()) {
        return Err(WiprError::InvalidModel(format!("velocity must be positive, got {v}")));
    }
    let values = velocity.iter().map(|&v| (v * v).recip()).collect();
    ModelField::new(grid, values)
}

/// Inverse of [`velocity_to_sq_slowness`], for reporting.
pub fn sq_slowness_to_velocity<T: Scalar>(m: &ModelField<T>) -> Vec<T> {
    m.values().iter().map(|&s| s.sqrt().recip()).collect()
}

/// Elementwise box constraints on squared slowness, lower < upper everywhere.
#[derive(Debug, Clone)]
pub struct Bounds<T: Scalar> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn from_fields(lower: &ModelField<T>, upper: &ModelField<T>) -> Result<Self> {
        if lower.grid() != upper.grid() {
            return Err(WiprError::InvalidConfig("bound fields on different grids".into()));
        }
        let (lo, up) = (lower.values().to_vec(), upper.values().to_vec());
        if lo.iter().zip(&up).any(|(l, u)| !(l < u)) {
            return Err(WiprError::InvalidConfig("bounds require lower < upper elementwise".into()));
        }
        Ok(Self { lower: lo, upper: up })
    }

    /// Constant bounds over the whole grid.
    pub fn constant(grid: Grid2D<T>, lower: T, upper: T) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(WiprError::InvalidConfig(format!(
                "bounds require finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower: vec![lower; grid.n()], upper: vec![upper; grid.n()] })
    }

    /// Constant bounds given as velocities (m/s); converts and orders them in
    /// squared slowness, where fast velocity is the *lower* bound.
    pub fn from_velocities(grid: Grid2D<T>, v_min: T, v_max: T) -> Result<Self> {
        if !(v_min > T::zero()) || !(v_max > v_min) {
            return Err(WiprError::InvalidConfig(format!(
                "velocity bounds require 0 < v_min < v_max, got [{v_min}, {v_max}]"
            )));
        }
        let lower = (v_max * v_max).recip();
        let upper = (v_min * v_min).recip();
        Self::constant(grid, lower, upper)
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn n(&self) -> usize {
        self.lower.len()
    }

    /// Elementwise clamp of `values` into the box.
    pub fn clamp(&self, values: &mut [T]) {
        debug_assert_eq!(values.len(), self.lower.len());
        for ((v, &lo), &up) in values.iter_mut().zip(&self.lower).zip(&self.upper) {
            if *v < lo {
                *v = lo;
            } else if *v > up {
                *v = up;
            }
        }
    }

    pub fn contains(&self, values: &[T]) -> bool {
        values.len() == self.lower.len()
            && values
                .iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, lo), up)| *lo <= *v && *v <= *up)
    }
}

/// Additive split of a model into a blocky part (m1) and a smooth part (m2).
/// The components are unconstrained fields; only their sum is a model.
#[derive(Debug, Clone)]
pub struct ModelDecomposition<T: Scalar> {
    pub m1: GridField<T>,
    pub m2: GridField<T>,
}

impl<T: Scalar> ModelDecomposition<T> {
    pub fn new(m1: GridField<T>, m2: GridField<T>) -> Result<Self> {
        if m1.grid() != m2.grid() {
            return Err(WiprError::InvalidGrid("decomposition parts on different grids".into()));
        }
        Ok(Self { m1, m2 })
    }

    /// Recomposed model values m1 + m2.
    pub fn composite(&self) -> Vec<T> {
        self.m1.values().iter().zip(self.m2.values()).map(|(&a, &b)| a + b).collect()
    }
}

/// Toy model kinds used by tests and the `model` subcommand.
#[derive(Debug, Clone)]
pub enum ToyModel<T: Scalar> {
    /// Single velocity everywhere.
    Homogeneous { velocity: T },
    /// Piecewise constant in depth: `velocities[k]` fills from `interfaces[k-1]`
    /// (inclusive) down to the next interface; `interfaces` are ascending z
    /// indices, one fewer than velocities.
    Layered { velocities: Vec<T>, interfaces: Vec<usize> },
    /// Rectangular anomaly over an inclusive index box inside a background.
    Inclusion { background: T, anomaly: T, x0: usize, x1: usize, z0: usize, z1: usize },
}

/// Builds a toy velocity structure and converts it to squared slowness.
pub fn make_toy_model<T: Scalar>(grid: Grid2D<T>, kind: &ToyModel<T>) -> Result<ModelField<T>> {
    let mut v = vec![T::zero(); grid.n()];
    match kind {
        ToyModel::Homogeneous { velocity } => {
            v.fill(*velocity);
        }
        ToyModel::Layered { velocities, interfaces } => {
            if velocities.is_empty() || interfaces.len() + 1 != velocities.len() {
                return Err(WiprError::InvalidConfig(format!(
                    "layered model needs k velocities and k-1 interfaces, got {} and {}",
                    velocities.len(),
                    interfaces.len()
                )));
            }
            if interfaces.windows(2).any(|w| w[0] >= w[1]) {
                return Err(WiprError::InvalidConfig("interfaces must be strictly ascending".into()));
            }
            if interfaces.last().is_some_and(|&z| z >= grid.nz()) {
                return Err(WiprError::Geometry(format!(
                    "interface at z={} outside grid of nz={}",
                    interfaces.last().unwrap(),
                    grid.nz()
                )));
            }
            for iz in 0..grid.nz() {
                let layer = interfaces.iter().take_while(|&&z| z <= iz).count();
                let vel = velocities[layer];
                for ix in 0..grid.nx() {
                    v[grid.idx(ix, iz)] = vel;
                }
            }
        }
        ToyModel::Inclusion { background, anomaly, x0, x1, z0, z1 } => {
            if x0 > x1 || z0 > z1 || *x1 >= grid.nx() || *z1 >= grid.nz() {
                return Err(WiprError::Geometry(format!(
                    "inclusion box [{x0},{x1}]x[{z0},{z1}] outside {}x{} grid",
                    grid.nx(),
                    grid.nz()
                )));
            }
            v.fill(*background);
            for ix in *x0..=*x1 {
                for iz in *z0..=*z1 {
                    v[grid.idx(ix, iz)] = *anomaly;
                }
            }
        }
    }
    velocity_to_sq_slowness(grid, &v)
}
