//! Scalar abstraction over the floating-point type used for all power,
//! energy and distance arithmetic.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar: f32 or f64.
///
/// All kW/kWh/km math in this crate is generic over `Scalar`; pick `f32`
/// for memory-lean town-scale runs and `f64` for reference results (the
/// CLI uses `f64` throughout).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Convert from `f64`, panicking only for values a float type cannot
    /// represent at all (never the case for finite config constants).
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("f64 value representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
