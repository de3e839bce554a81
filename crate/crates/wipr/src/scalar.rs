//! Real scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the solvers are generic over. `f64` is the working
/// type everywhere in the binary; `f32` is supported for callers that trade
/// accuracy for footprint (the pinned file formats stay f64 on disk).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an f64 constant (exact for f64 itself).
    fn real(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant must convert")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
