//! Fields on the 8-dimensional phase space and the differential operators
//! acting on them.
//!
//! Fields are evaluation procedures generic over [`Scalar`]; derivatives come
//! from evaluating on [`Dual`] numbers, so they are exact up to rounding.
//! Tensor convention: `T[i][j] = T^i_j`, row = vector (upper) index,
//! column = covector (lower) index.

pub mod fd;
pub mod poly;

use crate::error::Result;
use crate::linalg::{identity, zeros, Mat8, Vec8};
use crate::scalar::{Dual, Scalar, DIM};

pub trait ScalarField: Sync {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S>;
}

pub trait VectorField: Sync {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Vec8<S>>;
}

/// A (1,1)-tensor field, `eval` returns the matrix `T^i_j`.
pub trait TensorField11: Sync {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Mat8<S>>;
}

impl<F: ScalarField> ScalarField for &F {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        (**self).eval(x)
    }
}

impl<F: VectorField> VectorField for &F {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Vec8<S>> {
        (**self).eval(x)
    }
}

impl<F: TensorField11> TensorField11 for &F {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Mat8<S>> {
        (**self).eval(x)
    }
}

/// The coordinate function `x ↦ x[index]`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate(pub usize);

impl ScalarField for Coordinate {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        Ok(x[self.0])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantScalar(pub f64);

impl ScalarField for ConstantScalar {
    fn eval<S: Scalar>(&self, _x: &Vec8<S>) -> Result<S> {
        Ok(S::cst(self.0))
    }
}

/// Pointwise product `f · g`.
#[derive(Clone, Copy, Debug)]
pub struct Product<F, G>(pub F, pub G);

impl<F: ScalarField, G: ScalarField> ScalarField for Product<F, G> {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        Ok(self.0.eval(x)? * self.1.eval(x)?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantVector(pub Vec8);

impl ConstantVector {
    /// `sign · ∂/∂x^k`.
    pub fn basis(k: usize, sign: f64) -> Self {
        let mut v = [0.0; DIM];
        v[k] = sign;
        ConstantVector(v)
    }
}

impl VectorField for ConstantVector {
    fn eval<S: Scalar>(&self, _x: &Vec8<S>) -> Result<Vec8<S>> {
        Ok(self.0.map(S::cst))
    }
}

/// `x ↦ A x + b`.
#[derive(Clone, Copy, Debug)]
pub struct AffineVectorField {
    pub a: Mat8,
    pub b: Vec8,
}

impl AffineVectorField {
    pub fn identity_map() -> Self {
        AffineVectorField {
            a: identity(),
            b: [0.0; DIM],
        }
    }
}

impl VectorField for AffineVectorField {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Vec8<S>> {
        Ok(std::array::from_fn(|i| {
            let mut acc = S::cst(self.b[i]);
            for k in 0..DIM {
                if self.a[i][k] != 0.0 {
                    acc += x[k] * self.a[i][k];
                }
            }
            acc
        }))
    }
}

/// `x ↦ -X(x)`.
#[derive(Clone, Copy, Debug)]
pub struct Reversed<V>(pub V);

impl<V: VectorField> VectorField for Reversed<V> {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Vec8<S>> {
        Ok(self.0.eval(x)?.map(|v| -v))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityTensor;

impl TensorField11 for IdentityTensor {
    fn eval<S: Scalar>(&self, _x: &Vec8<S>) -> Result<Mat8<S>> {
        Ok(identity())
    }
}

/// Diagonal tensor whose entry `i` is the coordinate `x[source[i]]`, or zero
/// when `source[i]` is `None`.
#[derive(Clone, Copy, Debug)]
pub struct CoordinateDiagonal(pub [Option<usize>; DIM]);

impl CoordinateDiagonal {
    /// Σ_{i<n} x_i (∂/∂x_i ⊗ dx_i + ∂/∂x_{n+i} ⊗ dx_{n+i}) on the first `2n`
    /// coordinates, zero elsewhere. With `n = 4` this is diag(x1..x4, x1..x4).
    pub fn paired(n: usize) -> Self {
        assert!(n >= 1 && 2 * n <= DIM);
        let mut src = [None; DIM];
        for i in 0..n {
            src[i] = Some(i);
            src[n + i] = Some(i);
        }
        CoordinateDiagonal(src)
    }
}

impl TensorField11 for CoordinateDiagonal {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Mat8<S>> {
        let mut t = zeros();
        for (i, src) in self.0.iter().enumerate() {
            if let Some(k) = src {
                t[i][i] = x[*k];
            }
        }
        Ok(t)
    }
}

/// `c · T`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledTensor<T> {
    pub factor: f64,
    pub inner: T,
}

impl<T: TensorField11> TensorField11 for ScaledTensor<T> {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Mat8<S>> {
        Ok(self.inner.eval(x)?.map(|row| row.map(|v| v * self.factor)))
    }
}

/// Rank-3 array `N[h][i][j]`, used for the Nijenhuis torsion `(N_T)^h_{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank3(Box<[[[f64; DIM]; DIM]; DIM]>);

impl Rank3 {
    pub fn zeros() -> Self {
        Rank3(Box::new([[[0.0; DIM]; DIM]; DIM]))
    }

    pub fn get(&self, h: usize, i: usize, j: usize) -> f64 {
        self.0[h][i][j]
    }

    pub fn set(&mut self, h: usize, i: usize, j: usize, v: f64) {
        self.0[h][i][j] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flatten().flatten().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Rank3) -> f64 {
        self.iter()
            .zip(other.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// max |N[h][i][j] + N[h][j][i]|.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for h in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    r = r.max((self.0[h][i][j] + self.0[h][j][i]).abs());
                }
            }
        }
        r
    }
}

pub fn eval_with_gradient<F: ScalarField>(f: &F, x: &Vec8) -> Result<(f64, Vec8)> {
    let v = f.eval(&Dual::seed(x))?;
    Ok((v.v, v.d))
}

/// Value and Jacobian `J[i][k] = ∂X^i/∂x^k`.
pub fn eval_with_jacobian<V: VectorField>(field: &V, x: &Vec8) -> Result<(Vec8, Mat8)> {
    let v = field.eval(&Dual::seed(x))?;
    Ok((v.map(|c| c.v), v.map(|c| c.d)))
}

pub fn jacobian<V: VectorField>(field: &V, x: &Vec8) -> Result<Mat8> {
    Ok(eval_with_jacobian(field, x)?.1)
}

/// Value `T^i_j` and derivatives `dT[k][i][j] = ∂T^i_j/∂x^k`.
pub fn tensor_with_derivatives<T: TensorField11>(t: &T, x: &Vec8) -> Result<(Mat8, [Mat8; DIM])> {
    let m = t.eval(&Dual::seed(x))?;
    let value = std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].v));
    let d = std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].d[k])));
    Ok((value, d))
}

/// Torsion from a tensor value and its partial derivatives:
///
/// `N^h_ij = T^k_i ∂_k T^h_j − T^k_j ∂_k T^h_i + T^h_k ∂_j T^k_i − T^h_k ∂_i T^k_j`.
///
/// Assembled as `A_ij − A_ji + B_ij − B_ji`, so antisymmetry in `(i, j)` is
/// exact in floating point.
pub fn nijenhuis_from_parts(t: &Mat8, dt: &[Mat8; DIM]) -> Rank3 {
    let mut n = Rank3::zeros();
    for h in 0..DIM {
        let mut a = [[0.0; DIM]; DIM];
        let mut b = [[0.0; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                let mut sa = 0.0;
                let mut sb = 0.0;
                for k in 0..DIM {
                    sa += t[k][i] * dt[k][h][j];
                    sb += t[h][k] * dt[j][k][i];
                }
                a[i][j] = sa;
                b[i][j] = sb;
            }
        }
        for i in 0..DIM {
            for j in 0..DIM {
                n.0[h][i][j] = (a[i][j] - a[j][i]) + (b[i][j] - b[j][i]);
            }
        }
    }
    n
}

pub fn nijenhuis<T: TensorField11>(t: &T, x: &Vec8) -> Result<Rank3> {
    let (value, d) = tensor_with_derivatives(t, x)?;
    Ok(nijenhuis_from_parts(&value, &d))
}

/// `(L_X T)^i_j = X^k ∂_k T^i_j − T^k_j ∂_k X^i + T^i_k ∂_j X^k`.
pub fn lie_derivative_from_parts(xv: &Vec8, jx: &Mat8, t: &Mat8, dt: &[Mat8; DIM]) -> Mat8 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = 0.0;
            for k in 0..DIM {
                s += xv[k] * dt[k][i][j];
                s -= t[k][j] * jx[i][k];
                s += t[i][k] * jx[k][j];
            }
            s
        })
    })
}

pub fn lie_derivative_11<V: VectorField, T: TensorField11>(
    field: &V,
    t: &T,
    x: &Vec8,
) -> Result<Mat8> {
    let (xv, jx) = eval_with_jacobian(field, x)?;
    let (tv, dt) = tensor_with_derivatives(t, x)?;
    Ok(lie_derivative_from_parts(&xv, &jx, &tv, &dt))
}
