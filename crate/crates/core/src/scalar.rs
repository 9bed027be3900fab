//! Scalar abstraction so the math core runs in either precision.
//!
//! Training uses `f32`; gradient checks instantiate the same code at `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssignOps};
use rand::Rng;
use serde::{de::DeserializeOwned, Serialize};

pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssignOps
    + ScalarOperand
    + Sum
    + Serialize
    + DeserializeOwned
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn of_f64(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 conversion")
    }

    fn as_f64(self) -> f64;

    /// One draw from N(0, 1).
    fn standard_normal<R: Rng>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn standard_normal<R: Rng>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

impl Scalar for f64 {
    fn as_f64(self) -> f64 {
        self
    }

    fn standard_normal<R: Rng>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}
