//! Complex field abstraction shared by the double and extended precision
//! eigensolvers.

use num_complex::Complex64;

/// Minimal complex arithmetic needed by the Schur iteration.
///
/// Every value carries its own working precision, so constants are derived
/// from an existing value (`zero_like`, `from_c64_like`).
pub trait ComplexScalar: Clone {
    fn zero_like(&self) -> Self;
    fn from_c64_like(&self, z: Complex64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn conj(&self) -> Self;
    /// Principal square root.
    fn sqrt(&self) -> Self;
    /// `sqrt(|a|^2 + |b|^2)` as a real-valued scalar.
    fn pair_norm(a: &Self, b: &Self) -> Self;
    fn is_zero(&self) -> bool;
    /// Magnitude rounded to double precision, for comparisons only.
    fn approx_abs(&self) -> f64;
    fn to_c64(&self) -> Complex64;
    /// Unit roundoff of the working precision.
    fn epsilon(&self) -> f64;
}

impl ComplexScalar for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn from_c64_like(&self, z: Complex64) -> Self {
        z
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn sqrt(&self) -> Self {
        Complex64::sqrt(*self)
    }

    fn pair_norm(a: &Self, b: &Self) -> Self {
        Complex64::new(a.norm().hypot(b.norm()), 0.0)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn approx_abs(&self) -> f64 {
        self.norm()
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn epsilon(&self) -> f64 {
        f64::EPSILON
    }
}

/// Real counterpart of [`ComplexScalar`] for the real double-shift iteration.
pub trait RealScalar: Clone + PartialOrd {
    fn from_f64_like(&self, x: f64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    /// Square root of a non-negative value.
    fn sqrt(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn approx(&self) -> f64;
    fn epsilon(&self) -> f64;
}

impl RealScalar for f64 {
    fn from_f64_like(&self, x: f64) -> Self {
        x
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn approx(&self) -> f64 {
        *self
    }

    fn epsilon(&self) -> f64 {
        f64::EPSILON
    }
}
