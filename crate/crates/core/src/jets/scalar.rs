use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Jet;

/// A smooth scalar: either a plain value or a jet carrying derivatives.
///
/// The tensor pipeline is written once against this trait. Running it over
/// jets whose entries come from a higher-order jet of F differentiates the
/// whole pipeline exactly. Partial functions (`powf`, `ln`) assume the
/// caller has checked the domain on `value()`.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    fn constant_like(&self, c: f64) -> Self;
    fn powf(&self, r: f64) -> Self;
    fn ln(&self) -> Self;

    fn abs(&self) -> Self {
        if self.value() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    fn one_like(&self) -> Self {
        self.constant_like(1.0)
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn powf(&self, r: f64) -> Self {
        f64::powf(*self, r)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn constant_like(&self, c: f64) -> Self {
        Jet::constant_like(self, c)
    }
    fn powf(&self, r: f64) -> Self {
        self.powf_unchecked(r)
    }
    fn ln(&self) -> Self {
        self.ln_unchecked()
    }
}
