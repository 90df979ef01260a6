//! Central-difference oracle, independent of the dual-number path.
//!
//! Every stencil uses `h_i = h · max(1, |x_i|)`. The torsion oracle does not
//! reuse the coordinate formula: it builds the Lie bracket of the column
//! fields `T∂_i` from directional differences. The Lie-derivative oracle
//! transports `T` along a short step of the flow of `X` and differences the
//! pulled-back tensors.

use crate::calculus::{Rank3, ScalarField, TensorField11, VectorField};
use crate::error::Result;
use crate::linalg::{inverse, matmul, Mat8, Vec8};
use crate::scalar::DIM;

#[derive(Clone, Copy, Debug)]
pub struct FdOracle {
    pub h: f64,
}

impl Default for FdOracle {
    fn default() -> Self {
        FdOracle { h: 1e-6 }
    }
}

fn shifted(x: &Vec8, k: usize, delta: f64) -> Vec8 {
    let mut y = *x;
    y[k] += delta;
    y
}

fn along(x: &Vec8, v: &Vec8, s: f64) -> Vec8 {
    std::array::from_fn(|i| x[i] + s * v[i])
}

fn inf_norm(v: &Vec8) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

impl FdOracle {
    pub fn new(h: f64) -> Self {
        assert!(h > 0.0, "oracle step must be positive");
        FdOracle { h }
    }

    fn step(&self, xi: f64) -> f64 {
        self.h * xi.abs().max(1.0)
    }

    pub fn gradient<F: ScalarField>(&self, f: &F, x: &Vec8) -> Result<Vec8> {
        let mut g = [0.0; DIM];
        for (k, gk) in g.iter_mut().enumerate() {
            let h = self.step(x[k]);
            let fp: f64 = f.eval(&shifted(x, k, h))?;
            let fm: f64 = f.eval(&shifted(x, k, -h))?;
            *gk = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    }

    /// `J[i][k] = ∂X^i/∂x^k`.
    pub fn jacobian<V: VectorField>(&self, field: &V, x: &Vec8) -> Result<Mat8> {
        let mut j = [[0.0; DIM]; DIM];
        for k in 0..DIM {
            let h = self.step(x[k]);
            let vp: Vec8 = field.eval(&shifted(x, k, h))?;
            let vm: Vec8 = field.eval(&shifted(x, k, -h))?;
            for i in 0..DIM {
                j[i][k] = (vp[i] - vm[i]) / (2.0 * h);
            }
        }
        Ok(j)
    }

    /// `dT[k][i][j] = ∂T^i_j/∂x^k`.
    pub fn tensor_derivatives<T: TensorField11>(&self, t: &T, x: &Vec8) -> Result<[Mat8; DIM]> {
        let mut d = [[[0.0; DIM]; DIM]; DIM];
        for (k, dk) in d.iter_mut().enumerate() {
            let h = self.step(x[k]);
            let tp: Mat8 = t.eval(&shifted(x, k, h))?;
            let tm: Mat8 = t.eval(&shifted(x, k, -h))?;
            for i in 0..DIM {
                for j in 0..DIM {
                    dk[i][j] = (tp[i][j] - tm[i][j]) / (2.0 * h);
                }
            }
        }
        Ok(d)
    }

    /// Directional derivative of the column fields of `T` along `v`:
    /// returns `D_v T` as a matrix.
    fn directional<T: TensorField11>(&self, t: &T, x: &Vec8, v: &Vec8) -> Result<Mat8> {
        let norm = inf_norm(v);
        if norm == 0.0 {
            return Ok([[0.0; DIM]; DIM]);
        }
        let s = self.h * inf_norm(x).max(1.0) / norm;
        let tp: Mat8 = t.eval(&along(x, v, s))?;
        let tm: Mat8 = t.eval(&along(x, v, -s))?;
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| (tp[i][j] - tm[i][j]) / (2.0 * s))
        }))
    }

    /// `N_T(∂_i, ∂_j) = [T∂_i, T∂_j] − T([T∂_i, ∂_j] + [∂_i, T∂_j])`.
    pub fn nijenhuis<T: TensorField11>(&self, t: &T, x: &Vec8) -> Result<Rank3> {
        let tv: Mat8 = t.eval(x)?;
        let partial = self.tensor_derivatives(t, x)?;
        let columns: [Vec8; DIM] = std::array::from_fn(|i| std::array::from_fn(|h| tv[h][i]));
        // dirs[i] = D_{T∂_i} T, so column j of dirs[i] is D_{Y_i} Y_j.
        let mut dirs = Vec::with_capacity(DIM);
        for col in &columns {
            dirs.push(self.directional(t, x, col)?);
        }
        let mut n = Rank3::zeros();
        for h in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    let bracket = dirs[i][h][j] - dirs[j][h][i];
                    let mut corr = 0.0;
                    for k in 0..DIM {
                        corr += tv[h][k] * (partial[j][k][i] - partial[i][k][j]);
                    }
                    n.set(h, i, j, bracket + corr);
                }
            }
        }
        Ok(n)
    }

    /// `(φ_ε^* T − φ_{−ε}^* T) / 2ε` with `φ_ε(x) = x + εX(x)` and
    /// `(φ^* T)(x) = Dφ(x)^{-1} T(φ(x)) Dφ(x)`. Second-order terms of the
    /// exact flow are even in ε and cancel in the central quotient.
    pub fn lie_derivative<V: VectorField, T: TensorField11>(
        &self,
        field: &V,
        t: &T,
        x: &Vec8,
    ) -> Result<Mat8> {
        let xv: Vec8 = field.eval(x)?;
        let jx = self.jacobian(field, x)?;
        let eps = self.h * inf_norm(x).max(1.0) / inf_norm(&xv).max(1.0);
        let transported = |sign: f64| -> Result<Mat8> {
            let e = sign * eps;
            let dphi: Mat8 = std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } + e * jx[i][j])
            });
            let tm: Mat8 = t.eval(&along(x, &xv, e))?;
            Ok(matmul(&inverse(&dphi)?, &matmul(&tm, &dphi)))
        };
        let plus = transported(1.0)?;
        let minus = transported(-1.0)?;
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| (plus[i][j] - minus[i][j]) / (2.0 * eps))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{CoordinateDiagonal, ScalarField};
    use crate::scalar::Scalar;

    struct Bilinear;
    impl ScalarField for Bilinear {
        fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
            Ok(x[0] * x[4])
        }
    }

    #[test]
    fn gradient_of_bilinear() {
        let x = [2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0];
        let g = FdOracle::new(1e-6).gradient(&Bilinear, &x).unwrap();
        let expect = [3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0];
        for k in 0..DIM {
            assert!((g[k] - expect[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn torsion_of_paired_diagonal() {
        let x = [0.7, -0.4, 1.3, 0.2, 0.0, 0.0, 0.0, 0.0];
        let n = FdOracle::default()
            .nijenhuis(&CoordinateDiagonal::paired(2), &x)
            .unwrap();
        assert!(n.max_abs() <= 1e-8);
    }
}
