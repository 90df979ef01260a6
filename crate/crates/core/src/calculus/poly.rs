//! Random sparse polynomial fields on the phase space, used to exercise the
//! derivative engine and the bracket axioms against the oracle.

use rand::Rng;

use crate::calculus::{ScalarField, TensorField11, VectorField};
use crate::error::Result;
use crate::linalg::{Mat8, Vec8};
use crate::scalar::{Scalar, DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub exponents: [u8; DIM],
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    /// `n_terms` monomials of total degree at most `max_degree`, coefficients
    /// uniform in `[-1, 1]`.
    pub fn random<R: Rng>(rng: &mut R, n_terms: usize, max_degree: u8) -> Self {
        let terms = (0..n_terms)
            .map(|_| {
                let degree = rng.random_range(0..=max_degree);
                let mut exponents = [0u8; DIM];
                for _ in 0..degree {
                    exponents[rng.random_range(0..DIM)] += 1;
                }
                Monomial {
                    coeff: rng.random_range(-1.0..=1.0),
                    exponents,
                }
            })
            .collect();
        Polynomial { terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|m| m.exponents.iter().map(|&e| e as u32).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate<S: Scalar>(&self, x: &Vec8<S>) -> S {
        let mut acc = S::zero();
        for m in &self.terms {
            let mut t = S::cst(m.coeff);
            for (k, &e) in m.exponents.iter().enumerate() {
                if e > 0 {
                    t *= x[k].powi(e as u32);
                }
            }
            acc += t;
        }
        acc
    }
}

impl ScalarField for Polynomial {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        Ok(self.evaluate(x))
    }
}

#[derive(Clone, Debug)]
pub struct PolyVectorField(pub Vec<Polynomial>);

impl PolyVectorField {
    pub fn random<R: Rng>(rng: &mut R, n_terms: usize, max_degree: u8) -> Self {
        PolyVectorField(
            (0..DIM)
                .map(|_| Polynomial::random(rng, n_terms, max_degree))
                .collect(),
        )
    }
}

impl VectorField for PolyVectorField {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Vec8<S>> {
        Ok(std::array::from_fn(|i| self.0[i].evaluate(x)))
    }
}

/// Row-major `T^i_j` entries.
#[derive(Clone, Debug)]
pub struct PolyTensorField(pub Vec<Polynomial>);

impl PolyTensorField {
    pub fn random<R: Rng>(rng: &mut R, n_terms: usize, max_degree: u8) -> Self {
        PolyTensorField(
            (0..DIM * DIM)
                .map(|_| Polynomial::random(rng, n_terms, max_degree))
                .collect(),
        )
    }
}

impl TensorField11 for PolyTensorField {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Mat8<S>> {
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i * DIM + j].evaluate(x))
        }))
    }
}
