//! Scalar abstraction and forward-mode dual numbers.
//!
//! Every field in the crate is written once against [`Scalar`] and evaluated
//! either on plain `f64` or on [`Dual`] numbers carrying one tangent slot per
//! phase-space direction. Duals nest (`Dual<Dual<f64>>`), which is how second
//! derivatives are obtained for fields that are themselves built from
//! Jacobians (the pulled-back recursion operator).

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Phase-space dimension: four coordinates and four momenta.
pub const DIM: usize = 8;

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn cst(v: f64) -> Self;

    /// Real (value) part, ignoring all tangent components.
    fn re(&self) -> f64;

    fn sqrt(self) -> Self;

    /// Largest absolute value over the value and every tangent component.
    fn magnitude(&self) -> f64;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc *= self;
        }
        acc
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }

    #[inline]
    fn re(&self) -> f64 {
        *self
    }

    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

/// A number `v + Σ d[k] ε_k` with `ε_j ε_k = 0`, one tangent slot per direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub v: S,
    pub d: [S; DIM],
}

impl<S: Scalar> Dual<S> {
    pub fn constant(v: S) -> Self {
        Dual {
            v,
            d: [S::zero(); DIM],
        }
    }

    /// The `k`-th independent variable with value `v`.
    pub fn variable(v: S, k: usize) -> Self {
        let mut d = [S::zero(); DIM];
        d[k] = S::cst(1.0);
        Dual { v, d }
    }

    /// Seeds all eight directions at once: `x[k]` becomes variable `k`.
    pub fn seed(x: &[S; DIM]) -> [Self; DIM] {
        std::array::from_fn(|k| Self::variable(x[k], k))
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual {
            v: self.v + rhs.v,
            d: std::array::from_fn(|k| self.d[k] + rhs.d[k]),
        }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual {
            v: self.v - rhs.v,
            d: std::array::from_fn(|k| self.d[k] - rhs.d[k]),
        }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual {
            v: self.v * rhs.v,
            d: std::array::from_fn(|k| self.v * rhs.d[k] + self.d[k] * rhs.v),
        }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = S::cst(1.0) / rhs.v;
        let v = self.v * inv;
        Dual {
            v,
            d: std::array::from_fn(|k| (self.d[k] - v * rhs.d[k]) * inv),
        }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            v: -self.v,
            d: std::array::from_fn(|k| -self.d[k]),
        }
    }
}

impl<S: Scalar> Add<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.v = self.v + rhs;
        self
    }
}

impl<S: Scalar> Sub<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.v = self.v - rhs;
        self
    }
}

impl<S: Scalar> Mul<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Dual {
            v: self.v * rhs,
            d: std::array::from_fn(|k| self.d[k] * rhs),
        }
    }
}

impl<S: Scalar> Div<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        Dual {
            v: self.v / rhs,
            d: std::array::from_fn(|k| self.d[k] / rhs),
        }
    }
}

impl<S: Scalar> AddAssign for Dual<S> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<S: Scalar> SubAssign for Dual<S> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<S: Scalar> MulAssign for Dual<S> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn cst(v: f64) -> Self {
        Dual::constant(S::cst(v))
    }

    fn re(&self) -> f64 {
        self.v.re()
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let half_inv = S::cst(0.5) / s;
        Dual {
            v: s,
            d: std::array::from_fn(|k| self.d[k] * half_inv),
        }
    }

    fn magnitude(&self) -> f64 {
        self.d
            .iter()
            .map(Scalar::magnitude)
            .fold(self.v.magnitude(), f64::max)
    }
}
