//! Hamilton–Jacobi solution, generating function, and the canonical map
//! between `(q, p)` and `(Q, P)`.
//!
//! Forward map: `P1 = q1/p1`, `P_k = −p_k q1/p1 − q_k`, `Q1 = H(q, p)`,
//! `Q_k = p_k`. The inverse recovers `q_k = −P_k − Q_k P1` first and then
//! `p1 = √(Σ_k ϖ_k² − 2Q1)` with `ϖ_k = Q_k + ½Σ_j λ_kj q_j`, so it is an
//! exact inverse for every λ (at λ = 0 the radicand is `ΣQ_k² − 2Q1`).
//! Only the positive root is used.

use crate::calculus::{ScalarField, VectorField};
use crate::dynamics::hamiltonian_value;
use crate::error::{Error, Result};
use crate::linalg::Vec8;
use crate::params::{DeformationParams, Mat4};
use crate::point::{CanonicalPoint, PhasePoint};
use crate::scalar::Scalar;

/// `a1 = +√(Σ_k (a_k + ½Σ_j λ_kj q_j)² − 2E)` for the separated ansatz
/// `W = Σ_i a_i q_i`.
pub fn hj_momentum(
    a: [f64; 3],
    q: [f64; 4],
    energy: f64,
    params: &DeformationParams,
) -> Result<f64> {
    let lambda = params.lambda();
    let mut radicand = -2.0 * energy;
    for k in 1..4 {
        let mut w = a[k - 1];
        for j in 0..4 {
            w += 0.5 * lambda[k][j] * q[j];
        }
        radicand += w * w;
    }
    if radicand <= 0.0 {
        return Err(Error::domain(format!(
            "Hamilton-Jacobi radicand {radicand:e} is not positive"
        )));
    }
    Ok(radicand.sqrt())
}

/// `W(q, Q) = √(ΣQ_k² − 2Q1) q1 + Σ_k (Q_k − ½Σ_j λ_kj q_j) q_k`.
pub fn generating_function_generic<S: Scalar>(
    q: &[S; 4],
    coords: &[S; 4],
    lambda: &Mat4,
) -> Result<S> {
    let mut radicand = -(coords[0] * 2.0);
    for k in 1..4 {
        radicand += coords[k] * coords[k];
    }
    if radicand.re() <= 0.0 {
        return Err(Error::domain(format!(
            "generating-function radicand {:e} is not positive",
            radicand.re()
        )));
    }
    let mut w = radicand.sqrt() * q[0];
    for k in 1..4 {
        let mut c = coords[k];
        for j in 0..4 {
            if lambda[k][j] != 0.0 {
                c -= q[j] * (0.5 * lambda[k][j]);
            }
        }
        w += c * q[k];
    }
    Ok(w)
}

pub fn generating_function(
    q: [f64; 4],
    coords: [f64; 4],
    params: &DeformationParams,
) -> Result<f64> {
    generating_function_generic(&q, &coords, params.lambda())
}

/// `W(·, Q)` for fixed `Q`, as a field of the original coordinates (the
/// momentum slots of the argument are ignored), so `∂W/∂q` comes from AD.
#[derive(Clone, Copy, Debug)]
pub struct GeneratingFunction {
    lambda: Mat4,
    coords: [f64; 4],
}

impl GeneratingFunction {
    pub fn new(params: &DeformationParams, coords: [f64; 4]) -> Self {
        GeneratingFunction {
            lambda: *params.lambda(),
            coords,
        }
    }
}

impl ScalarField for GeneratingFunction {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        let q = [x[0], x[1], x[2], x[3]];
        generating_function_generic(&q, &self.coords.map(S::cst), &self.lambda)
    }
}

/// `(q, p) ↦ (Q, P)` as a vector-valued map, differentiable through AD.
#[derive(Clone, Copy, Debug)]
pub struct CanonicalMap {
    lambda: Mat4,
}

impl CanonicalMap {
    pub fn new(params: &DeformationParams) -> Self {
        CanonicalMap {
            lambda: *params.lambda(),
        }
    }
}

impl VectorField for CanonicalMap {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Vec8<S>> {
        let p1 = x[4];
        if p1.re() <= 0.0 {
            return Err(Error::NonpositiveP1(p1.re()));
        }
        let q1_over_p1 = x[0] / p1;
        let h = hamiltonian_value(&self.lambda, x);
        Ok([
            h,
            x[5],
            x[6],
            x[7],
            q1_over_p1,
            -(x[5] * q1_over_p1) - x[1],
            -(x[6] * q1_over_p1) - x[2],
            -(x[7] * q1_over_p1) - x[3],
        ])
    }
}

/// `(Q, P) ↦ (q, p)`.
#[derive(Clone, Copy, Debug)]
pub struct InverseCanonicalMap {
    lambda: Mat4,
}

impl InverseCanonicalMap {
    pub fn new(params: &DeformationParams) -> Self {
        InverseCanonicalMap {
            lambda: *params.lambda(),
        }
    }
}

impl VectorField for InverseCanonicalMap {
    fn eval<S: Scalar>(&self, y: &Vec8<S>) -> Result<Vec8<S>> {
        let big_p1 = y[4];
        let mut q = [S::zero(); 4];
        for k in 1..4 {
            q[k] = -y[4 + k] - y[k] * big_p1;
        }
        let mut radicand = -(y[0] * 2.0);
        for k in 1..4 {
            let mut w = y[k];
            for j in 1..4 {
                if self.lambda[k][j] != 0.0 {
                    w += q[j] * (0.5 * self.lambda[k][j]);
                }
            }
            radicand += w * w;
        }
        if radicand.re() <= 0.0 {
            return Err(Error::domain(format!(
                "inverse-map radicand {:e} is not positive",
                radicand.re()
            )));
        }
        let p1 = radicand.sqrt();
        q[0] = big_p1 * p1;
        Ok([q[0], q[1], q[2], q[3], p1, y[1], y[2], y[3]])
    }
}

pub fn to_canonical(x: &PhasePoint, params: &DeformationParams) -> Result<CanonicalPoint> {
    x.check_p1()?;
    let y: Vec8 = CanonicalMap::new(params).eval(&x.to_vec8())?;
    Ok(CanonicalPoint::from_vec8(&y))
}

pub fn from_canonical(y: &CanonicalPoint, params: &DeformationParams) -> Result<PhasePoint> {
    let x: Vec8 = InverseCanonicalMap::new(params).eval(&y.to_vec8())?;
    Ok(PhasePoint::from_vec8(&x))
}

/// `max_i |a_i − b_i| / max(1, |b_i|)`.
pub fn relative_error(a: &Vec8, b: &Vec8) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs() / y.abs().max(1.0)))
}
