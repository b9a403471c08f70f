//! Minimal complex arithmetic over any [`Real`] scalar.
//!
//! Complex values are stored as independent real and imaginary parts, so the
//! same code runs on plain `f64` and on tape variables.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::autodiff::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cplx<R = f64> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Cplx<R> {
    pub fn new(re: R, im: R) -> Self {
        Self { re, im }
    }

    /// Real-valued complex number `re + 0i` in the context of `re`.
    pub fn real(re: R) -> Self {
        Self {
            re,
            im: re.constant(0.0),
        }
    }

    /// `e^{i·angle}`.
    pub fn expi(angle: R) -> Self {
        Self {
            re: angle.cos(),
            im: angle.sin(),
        }
    }

    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm_sqr(self) -> R {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, k: R) -> Self {
        Self {
            re: self.re * k,
            im: self.im * k,
        }
    }

    pub fn value(self) -> Cplx<f64> {
        Cplx {
            re: self.re.value(),
            im: self.im.value(),
        }
    }
}

impl Cplx<f64> {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };
    pub const ONE: Self = Self { re: 1.0, im: 0.0 };
}

impl<R: Real> Add for Cplx<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<R: Real> Sub for Cplx<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl<R: Real> Mul for Cplx<R> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl<R: Real> Neg for Cplx<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl From<Cplx<f64>> for Complex64 {
    fn from(c: Cplx<f64>) -> Self {
        Complex64::new(c.re, c.im)
    }
}

impl From<Complex64> for Cplx<f64> {
    fn from(c: Complex64) -> Self {
        Cplx { re: c.re, im: c.im }
    }
}
