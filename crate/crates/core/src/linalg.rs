//! Dense 8×8 helpers, generic over [`Scalar`] so they run inside AD.

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, DIM};

pub type Vec8<S = f64> = [S; DIM];
pub type Mat8<S = f64> = [[S; DIM]; DIM];

pub fn zeros<S: Scalar>() -> Mat8<S> {
    [[S::zero(); DIM]; DIM]
}

pub fn identity<S: Scalar>() -> Mat8<S> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = S::cst(1.0);
    }
    m
}

pub fn diag<S: Scalar>(d: &Vec8<S>) -> Mat8<S> {
    let mut m = zeros();
    for i in 0..DIM {
        m[i][i] = d[i];
    }
    m
}

pub fn matmul<S: Scalar>(a: &Mat8<S>, b: &Mat8<S>) -> Mat8<S> {
    let mut c = zeros();
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            for j in 0..DIM {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn matvec<S: Scalar>(a: &Mat8<S>, v: &Vec8<S>) -> Vec8<S> {
    std::array::from_fn(|i| {
        let mut acc = S::zero();
        for k in 0..DIM {
            acc += a[i][k] * v[k];
        }
        acc
    })
}

pub fn transpose<S: Scalar>(a: &Mat8<S>) -> Mat8<S> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

pub fn trace<S: Scalar>(a: &Mat8<S>) -> S {
    let mut t = S::zero();
    for (i, row) in a.iter().enumerate() {
        t += row[i];
    }
    t
}

pub fn max_abs(a: &Mat8) -> f64 {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &Mat8, b: &Mat8) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Maps every entry to its real part.
pub fn real_part<S: Scalar>(a: &Mat8<S>) -> Mat8 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j].re()))
}

/// Gauss–Jordan inverse with partial pivoting on the real part.
pub fn inverse<S: Scalar>(a: &Mat8<S>) -> Result<Mat8<S>> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.re().abs()));
    if scale == 0.0 {
        return Err(Error::SingularMatrix);
    }
    let mut m = *a;
    let mut inv = identity::<S>();
    for col in 0..DIM {
        let pivot = (col..DIM)
            .max_by(|&r, &s| m[r][col].re().abs().total_cmp(&m[s][col].re().abs()))
            .expect("non-empty range");
        if m[pivot][col].re().abs() <= 1e-14 * scale {
            return Err(Error::SingularMatrix);
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = S::cst(1.0) / m[col][col];
        for j in 0..DIM {
            m[col][j] *= p;
            inv[col][j] *= p;
        }
        for r in 0..DIM {
            if r == col {
                continue;
            }
            let f = m[r][col];
            if f.magnitude() == 0.0 {
                continue;
            }
            for j in 0..DIM {
                let mc = m[col][j];
                let ic = inv[col][j];
                m[r][j] -= f * mc;
                inv[r][j] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// LU factorization (partial pivoting) of a constant matrix, reusable for
/// many right-hand sides of any scalar type.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Mat8,
    perm: [usize; DIM],
}

impl Lu {
    pub fn new(a: &Mat8) -> Result<Self> {
        let scale = max_abs(a);
        if scale == 0.0 {
            return Err(Error::SingularMatrix);
        }
        let mut lu = *a;
        let mut perm: [usize; DIM] = std::array::from_fn(|i| i);
        for col in 0..DIM {
            let pivot = (col..DIM)
                .max_by(|&r, &s| lu[r][col].abs().total_cmp(&lu[s][col].abs()))
                .expect("non-empty range");
            if lu[pivot][col].abs() <= 1e-14 * scale {
                return Err(Error::SingularMatrix);
            }
            lu.swap(col, pivot);
            perm.swap(col, pivot);
            for r in col + 1..DIM {
                let f = lu[r][col] / lu[col][col];
                lu[r][col] = f;
                for j in col + 1..DIM {
                    lu[r][j] -= f * lu[col][j];
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve<S: Scalar>(&self, b: &Vec8<S>) -> Vec8<S> {
        let mut y: Vec8<S> = std::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..DIM {
            for j in 0..i {
                let t = y[j] * self.lu[i][j];
                y[i] -= t;
            }
        }
        for i in (0..DIM).rev() {
            for j in i + 1..DIM {
                let t = y[j] * self.lu[i][j];
                y[i] -= t;
            }
            y[i] = y[i] / self.lu[i][i];
        }
        y
    }
}

/// Eigenvalues `(re, im)` of a real nonsymmetric matrix via nalgebra's Schur
/// decomposition, sorted by real then imaginary part.
pub fn eigenvalues(a: &Mat8) -> Vec<(f64, f64)> {
    let m = SMatrix::<f64, DIM, DIM>::from_fn(|i, j| a[i][j]);
    let mut ev: Vec<(f64, f64)> = m
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    ev
}
