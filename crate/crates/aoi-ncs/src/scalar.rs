//! Scalar abstraction used throughout the crate.
//!
//! All numeric state (penalty tables, value functions, simulation metrics)
//! is generic over [`Scalar`] so the same code runs in `f32` or `f64`.
//! The crate root exports `f64` aliases, which are what the CLI uses.

use std::fmt::Display;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
///
/// `nalgebra::RealField` is required on top of `num_traits::Float` so loop
/// models can use matrix decompositions (Cholesky, symmetric eigen) for
/// noise sampling and validation. Where the two traits overlap (`sqrt`,
/// `abs`, ...) call sites disambiguate via `Float::...`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Display + nalgebra::RealField + Send + Sync + 'static
{
    /// Shorthand for lossy conversion from `f64` constants.
    fn from_config(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
