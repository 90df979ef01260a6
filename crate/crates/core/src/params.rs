//! Deformation parameters and the θ-coefficients they induce.
//!
//! Indices handed to [`DeformationParams::from_entries`] are 1-based (1 is the
//! time direction, 2..4 are spatial) to match the config grammar; storage is
//! 0-based.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat4 = [[f64; 4]; 4];

/// Smallest admissible |θ_ν|; below it the symplectic matrix is treated as singular.
pub const THETA_MIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeformationParams {
    lambda: Mat4,
    alpha: Mat4,
    gamma: Mat4,
}

impl DeformationParams {
    /// The commutative limit λ = α = 0.
    pub fn zero() -> Self {
        DeformationParams {
            lambda: [[0.0; 4]; 4],
            alpha: [[0.0; 4]; 4],
            gamma: [[0.0; 4]; 4],
        }
    }

    /// Builds parameters from upper- or lower-triangle entries `(i, j, value)`
    /// with 1-based indices, completing each matrix antisymmetrically.
    pub fn from_entries(
        lambda: &[(usize, usize, f64)],
        alpha: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let lambda = antisymmetric_completion(lambda)?;
        let alpha = antisymmetric_completion(alpha)?;
        Ok(Self::from_matrices_unchecked(lambda, alpha))
    }

    fn from_matrices_unchecked(lambda: Mat4, alpha: Mat4) -> Self {
        let mut gamma = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| alpha[i][k] * lambda[j][k]).sum();
                gamma[i][j] = 0.25 * s;
            }
        }
        DeformationParams {
            lambda,
            alpha,
            gamma,
        }
    }

    /// Momentum-sector deformation λ (antisymmetric, zero time row).
    pub fn lambda(&self) -> &Mat4 {
        &self.lambda
    }

    /// Coordinate-sector deformation α (antisymmetric, zero time row).
    pub fn alpha(&self) -> &Mat4 {
        &self.alpha
    }

    /// γ[i][j] = ¼ Σ_k α[i][k] λ[j][k], the shift of the mixed bracket
    /// {q'_i, p'_j} away from δ_ij.
    pub fn gamma(&self) -> &Mat4 {
        &self.gamma
    }

    pub fn is_commutative(&self) -> bool {
        self.lambda_vanishes() && self.alpha.iter().flatten().all(|&v| v == 0.0)
    }

    pub fn lambda_vanishes(&self) -> bool {
        self.lambda.iter().flatten().all(|&v| v == 0.0)
    }

    /// Spatial entries (λ23, λ24, λ34).
    pub fn lambda_spatial(&self) -> [f64; 3] {
        [self.lambda[1][2], self.lambda[1][3], self.lambda[2][3]]
    }

    /// Spatial entries (α23, α24, α34).
    pub fn alpha_spatial(&self) -> [f64; 3] {
        [self.alpha[1][2], self.alpha[1][3], self.alpha[2][3]]
    }
}

/// Free-function form of [`DeformationParams::from_entries`].
pub fn validate_params(
    lambda_entries: &[(usize, usize, f64)],
    alpha_entries: &[(usize, usize, f64)],
) -> Result<DeformationParams> {
    DeformationParams::from_entries(lambda_entries, alpha_entries)
}

fn antisymmetric_completion(entries: &[(usize, usize, f64)]) -> Result<Mat4> {
    let mut m = [[0.0; 4]; 4];
    let mut seen = BTreeSet::new();
    for &(i, j, v) in entries {
        if !(1..=4).contains(&i) || !(1..=4).contains(&j) {
            return Err(Error::IndexOutOfRange { i, j });
        }
        if i == 1 || j == 1 {
            return Err(Error::FirstRowNonzero { i, j });
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::DuplicatePair { i, j });
        }
        if i == j {
            if v != 0.0 {
                return Err(Error::domain(format!(
                    "diagonal entry ({i}, {i}) = {v} of an antisymmetric matrix"
                )));
            }
            continue;
        }
        m[i - 1][j - 1] = v;
        m[j - 1][i - 1] = -v;
    }
    Ok(m)
}

/// θ_ν = 1 + ¼ Σ_μ λ[μ][ν] α[μ][ν], the weights of the deformed symplectic form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaVector(pub [f64; 4]);

impl ThetaVector {
    pub fn get(&self, nu: usize) -> f64 {
        self.0[nu]
    }

    pub fn inverse(&self) -> [f64; 4] {
        self.0.map(|t| 1.0 / t)
    }
}

pub fn theta(params: &DeformationParams) -> Result<ThetaVector> {
    let lambda = params.lambda();
    let alpha = params.alpha();
    let mut th = [0.0; 4];
    for (nu, t) in th.iter_mut().enumerate() {
        let s: f64 = (0..4).map(|mu| lambda[mu][nu] * alpha[mu][nu]).sum();
        *t = 1.0 + 0.25 * s;
        if t.abs() < THETA_MIN {
            return Err(Error::DegenerateTheta {
                index: nu + 1,
                value: *t,
            });
        }
    }
    Ok(ThetaVector(th))
}
