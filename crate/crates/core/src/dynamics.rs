//! The deformed free-particle Hamiltonian, its differential, the θ-weighted
//! symplectic form and bracket, the geodesic vector field, and the deformed
//! commutation relations of the shifted variables.
//!
//! Sign conventions: the θ-bracket is
//! `{f, g}_θ = Σ_ν θ_ν⁻¹ (∂_{p_ν} f ∂_{q_ν} g − ∂_{q_ν} f ∂_{p_ν} g)`, so
//! `{p_i, q_j}_θ = δ_ij/θ_i`, and `X_H(f) = {H, f}_θ`, which together give
//! `ι_{X_H} ω = −dH`. The undeformed bracket used for the shifted variables
//! follows the opposite, textbook orientation `{q_i, p_j} = δ_ij`.

use crate::calculus::{eval_with_gradient, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::linalg::{Mat8, Vec8};
use crate::params::{theta, DeformationParams, Mat4, ThetaVector, THETA_MIN};
use crate::scalar::{Dual, Scalar, DIM};

/// `ϖ_k = p_k + ½ Σ_j λ_kj q_j` for k = 1..4 (0-based 0..3). Entry 0 equals
/// p1 because the time row of λ vanishes. The same expression appears as
/// both ϖ_k and Ω_k in the differential and vector-field formulas.
pub fn shifted_momenta<S: Scalar>(lambda: &Mat4, x: &Vec8<S>) -> [S; 4] {
    std::array::from_fn(|k| {
        let mut w = x[4 + k];
        for j in 0..4 {
            if lambda[k][j] != 0.0 {
                w += x[j] * (0.5 * lambda[k][j]);
            }
        }
        w
    })
}

/// `∂H/∂q_k = ½ Σ_i λ_ik ϖ_i`, which is `−S_k` in the recursion blocks.
pub fn position_gradient<S: Scalar>(lambda: &Mat4, w: &[S; 4]) -> [S; 4] {
    std::array::from_fn(|k| {
        let mut s = S::zero();
        for i in 0..4 {
            if lambda[i][k] != 0.0 {
                s += w[i] * (0.5 * lambda[i][k]);
            }
        }
        s
    })
}

pub fn hamiltonian_value<S: Scalar>(lambda: &Mat4, x: &Vec8<S>) -> S {
    let w = shifted_momenta(lambda, x);
    let mut h = -(x[4] * x[4]);
    for wk in &w[1..] {
        h += *wk * *wk;
    }
    h * 0.5
}

/// `H(q, p) = ½[−p1² + Σ_{k=2..4} ϖ_k²]`.
#[derive(Clone, Copy, Debug)]
pub struct Hamiltonian {
    lambda: Mat4,
}

impl Hamiltonian {
    pub fn lambda(&self) -> &Mat4 {
        &self.lambda
    }

    pub fn shifted_momenta<S: Scalar>(&self, x: &Vec8<S>) -> [S; 4] {
        shifted_momenta(&self.lambda, x)
    }
}

impl ScalarField for Hamiltonian {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        Ok(hamiltonian_value(&self.lambda, x))
    }
}

pub fn hamiltonian(params: &DeformationParams) -> Hamiltonian {
    Hamiltonian {
        lambda: *params.lambda(),
    }
}

/// Components ordered `(dq1..dq4, dp1..dp4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covector8(pub Vec8);

impl Covector8 {
    pub fn pair(&self, v: &Vec8) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// Closed-form `dH`: `dq_k = ½Σ_i λ_ik ϖ_i`, `dp1 = −p1`, `dp_k = ϖ_k`.
pub fn differential_hamiltonian(params: &DeformationParams, x: &Vec8) -> Covector8 {
    let lambda = params.lambda();
    let w = shifted_momenta(lambda, x);
    let dq = position_gradient(lambda, &w);
    Covector8([dq[0], dq[1], dq[2], dq[3], -x[4], w[1], w[2], w[3]])
}

/// Constant matrix of `ω = Σ_ν θ_ν dp_ν ∧ dq_ν` in the `(q, p)` basis:
/// `ω(u, v) = uᵀ Ω v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticMatrix(pub Mat8);

impl SymplecticMatrix {
    pub fn form(&self, u: &Vec8, v: &Vec8) -> f64 {
        let mut s = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                s += u[i] * self.0[i][j] * v[j];
            }
        }
        s
    }

    /// `max |Aᵀ Ω A − Ω|`.
    pub fn preservation_residual(&self, a: &Mat8) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                let mut s = 0.0;
                for k in 0..DIM {
                    for l in 0..DIM {
                        s += a[k][i] * self.0[k][l] * a[l][j];
                    }
                }
                r = r.max((s - self.0[i][j]).abs());
            }
        }
        r
    }
}

pub fn symplectic_matrix(th: &ThetaVector) -> Result<SymplecticMatrix> {
    let mut m = [[0.0; DIM]; DIM];
    for nu in 0..4 {
        let t = th.0[nu];
        if t.abs() < THETA_MIN {
            return Err(Error::DegenerateTheta {
                index: nu + 1,
                value: t,
            });
        }
        m[4 + nu][nu] = t;
        m[nu][4 + nu] = -t;
    }
    Ok(SymplecticMatrix(m))
}

pub fn bracket_from_gradients(df: &Vec8, dg: &Vec8, th: &ThetaVector) -> f64 {
    let mut s = 0.0;
    for nu in 0..4 {
        s += (df[4 + nu] * dg[nu] - df[nu] * dg[4 + nu]) / th.0[nu];
    }
    s
}

pub fn poisson_nc<F: ScalarField, G: ScalarField>(
    f: &F,
    g: &G,
    th: &ThetaVector,
    x: &Vec8,
) -> Result<f64> {
    let (_, df) = eval_with_gradient(f, x)?;
    let (_, dg) = eval_with_gradient(g, x)?;
    Ok(bracket_from_gradients(&df, &dg, th))
}

/// `{f, g}_θ` as a field in its own right, so brackets can be nested and
/// differentiated (Jacobi identity, involution of bracket outputs).
#[derive(Clone, Copy, Debug)]
pub struct BracketField<F, G> {
    pub f: F,
    pub g: G,
    pub theta: ThetaVector,
}

impl<F: ScalarField, G: ScalarField> ScalarField for BracketField<F, G> {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        let xs = Dual::seed(x);
        let fv = self.f.eval(&xs)?;
        let gv = self.g.eval(&xs)?;
        let mut s = S::zero();
        for nu in 0..4 {
            s += (fv.d[4 + nu] * gv.d[nu] - fv.d[nu] * gv.d[4 + nu]) / self.theta.0[nu];
        }
        Ok(s)
    }
}

/// Undeformed bracket with `{q_i, p_j} = δ_ij`.
pub fn poisson_standard<F: ScalarField, G: ScalarField>(f: &F, g: &G, x: &Vec8) -> Result<f64> {
    let (_, df) = eval_with_gradient(f, x)?;
    let (_, dg) = eval_with_gradient(g, x)?;
    let mut s = 0.0;
    for nu in 0..4 {
        s += df[nu] * dg[4 + nu] - df[4 + nu] * dg[nu];
    }
    Ok(s)
}

/// `X_H = Σ_ν θ_ν⁻¹ (∂_{p_ν}H ∂/∂q_ν − ∂_{q_ν}H ∂/∂p_ν)`; with a zero time
/// row this is `−p1 ∂/∂q1 + Σ_k θ_k⁻¹ [ϖ_k ∂/∂q_k − ½Σ_i λ_ik ϖ_i ∂/∂p_k]`.
#[derive(Clone, Copy, Debug)]
pub struct HamiltonianVectorField {
    lambda: Mat4,
    theta_inv: [f64; 4],
}

impl HamiltonianVectorField {
    pub fn lambda(&self) -> &Mat4 {
        &self.lambda
    }
}

impl VectorField for HamiltonianVectorField {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<Vec8<S>> {
        let w = shifted_momenta(&self.lambda, x);
        let dq = position_gradient(&self.lambda, &w);
        let dp = [-x[4], w[1], w[2], w[3]];
        let mut out = [S::zero(); DIM];
        for nu in 0..4 {
            out[nu] = dp[nu] * self.theta_inv[nu];
            out[4 + nu] = -(dq[nu] * self.theta_inv[nu]);
        }
        Ok(out)
    }
}

pub fn hamiltonian_vector_field(params: &DeformationParams) -> Result<HamiltonianVectorField> {
    let th = theta(params)?;
    Ok(HamiltonianVectorField {
        lambda: *params.lambda(),
        theta_inv: th.inverse(),
    })
}

/// `ω(X_H, v) + ⟨dH, v⟩`, zero when the sign convention holds.
pub fn compatibility_residual(params: &DeformationParams, x: &Vec8, v: &Vec8) -> Result<f64> {
    let omega = symplectic_matrix(&theta(params)?)?;
    let xh: Vec8 = hamiltonian_vector_field(params)?.eval(x)?;
    Ok(omega.form(&xh, v) + differential_hamiltonian(params, x).pair(v))
}

/// `q'_i = q_i − ½ Σ_j α_ij p_j`.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedCoordinate {
    pub index: usize,
    alpha_row: [f64; 4],
}

/// `p'_i = p_i + ½ Σ_j λ_ij q_j`.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedMomentum {
    pub index: usize,
    lambda_row: [f64; 4],
}

impl ShiftedCoordinate {
    pub fn new(params: &DeformationParams, index: usize) -> Self {
        ShiftedCoordinate {
            index,
            alpha_row: params.alpha()[index],
        }
    }
}

impl ShiftedMomentum {
    pub fn new(params: &DeformationParams, index: usize) -> Self {
        ShiftedMomentum {
            index,
            lambda_row: params.lambda()[index],
        }
    }
}

impl ScalarField for ShiftedCoordinate {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        let mut v = x[self.index];
        for j in 0..4 {
            v -= x[4 + j] * (0.5 * self.alpha_row[j]);
        }
        Ok(v)
    }
}

impl ScalarField for ShiftedMomentum {
    fn eval<S: Scalar>(&self, x: &Vec8<S>) -> Result<S> {
        let mut v = x[4 + self.index];
        for j in 0..4 {
            v += x[j] * (0.5 * self.lambda_row[j]);
        }
        Ok(v)
    }
}

/// All undeformed brackets of the shifted variables and their residuals
/// against `α_ij`, `δ_ij + γ_ij`, `λ_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimedRelations {
    pub qq: Mat4,
    pub qp: Mat4,
    pub pp: Mat4,
    pub pq: Mat4,
    pub residual_qq: f64,
    pub residual_qp: f64,
    pub residual_pp: f64,
    /// max |{p'_i, q'_j} + {q'_j, p'_i}|.
    pub residual_antisymmetry: f64,
}

impl PrimedRelations {
    pub fn max_residual(&self) -> f64 {
        self.residual_qq
            .max(self.residual_qp)
            .max(self.residual_pp)
            .max(self.residual_antisymmetry)
    }
}

pub fn verify_primed_relations(params: &DeformationParams, x: &Vec8) -> Result<PrimedRelations> {
    let qs: [ShiftedCoordinate; 4] = std::array::from_fn(|i| ShiftedCoordinate::new(params, i));
    let ps: [ShiftedMomentum; 4] = std::array::from_fn(|i| ShiftedMomentum::new(params, i));
    let mut out = PrimedRelations {
        qq: [[0.0; 4]; 4],
        qp: [[0.0; 4]; 4],
        pp: [[0.0; 4]; 4],
        pq: [[0.0; 4]; 4],
        residual_qq: 0.0,
        residual_qp: 0.0,
        residual_pp: 0.0,
        residual_antisymmetry: 0.0,
    };
    for i in 0..4 {
        for j in 0..4 {
            out.qq[i][j] = poisson_standard(&qs[i], &qs[j], x)?;
            out.qp[i][j] = poisson_standard(&qs[i], &ps[j], x)?;
            out.pp[i][j] = poisson_standard(&ps[i], &ps[j], x)?;
            out.pq[i][j] = poisson_standard(&ps[i], &qs[j], x)?;
        }
    }
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    for i in 0..4 {
        for j in 0..4 {
            out.residual_qq = out
                .residual_qq
                .max((out.qq[i][j] - params.alpha()[i][j]).abs());
            out.residual_qp = out
                .residual_qp
                .max((out.qp[i][j] - (delta(i, j) + params.gamma()[i][j])).abs());
            out.residual_pp = out
                .residual_pp
                .max((out.pp[i][j] - params.lambda()[i][j]).abs());
            out.residual_antisymmetry = out
                .residual_antisymmetry
                .max((out.pq[i][j] + out.qp[j][i]).abs());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::fd::FdOracle;
    use crate::calculus::poly::Polynomial;
    use crate::calculus::{jacobian, Coordinate};
    use crate::point::{sample_direction, sample_points};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps1() -> DeformationParams {
        DeformationParams::from_entries(&[(2, 3, 0.1)], &[(2, 3, 0.2)]).unwrap()
    }

    fn standard_point() -> Vec8 {
        [0.0, 1.0, 2.0, 3.0, 1.0, 0.5, 0.5, 0.5]
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian(&DeformationParams::zero());
        let v: f64 = h.eval(&[0.3, -2.0, 1.0, 5.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, 0.0);
        let v: f64 = h.eval(&[0.0, 0.0, 0.0, 0.0, 2.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v, -0.5);

        let h = hamiltonian(&ps1());
        let w = h.shifted_momenta(&standard_point());
        // oracle: 0.5 + 0.05·2, 0.5 − 0.05·1, 0.5
        assert!(close(w[1], 0.6, 1e-15) && close(w[2], 0.45, 1e-15) && w[3] == 0.5);
        // oracle: ½(−1 + 0.36 + 0.2025 + 0.25)
        let v: f64 = h.eval(&standard_point()).unwrap();
        assert!(close(v, -0.09375, 1e-15));
    }

    #[test]
    fn differential_matches_ad_gradient() {
        let dh = differential_hamiltonian(
            &DeformationParams::zero(),
            &[0.0, 0.0, 0.0, 0.0, 2.0, 1.0, 1.0, 1.0],
        );
        assert_eq!(dh.0, [0.0, 0.0, 0.0, 0.0, -2.0, 1.0, 1.0, 1.0]);

        let params = ps1();
        let dh = differential_hamiltonian(&params, &standard_point());
        assert!(
            close(dh.0[4], -1.0, 0.0) && close(dh.0[5], 0.6, 1e-15) && close(dh.0[6], 0.45, 1e-15)
        );
        // dq2 = ½ λ32 ϖ3, dq3 = ½ λ23 ϖ2
        assert!(close(dh.0[1], -0.0225, 1e-15) && close(dh.0[2], 0.03, 1e-15));

        let wide = DeformationParams::from_entries(
            &[(2, 3, 0.3), (2, 4, -0.2), (3, 4, 0.4)],
            &[(3, 4, 0.1)],
        )
        .unwrap();
        for p in [&params, &wide] {
            let h = hamiltonian(p);
            for x in sample_points(5, 100) {
                let x = x.to_vec8();
                let (_, g) = eval_with_gradient(&h, &x).unwrap();
                let dh = differential_hamiltonian(p, &x);
                for k in 0..DIM {
                    assert!(close(g[k], dh.0[k], 1e-15), "component {k}");
                }
            }
        }
    }

    #[test]
    fn symplectic_matrix_structure() {
        let flat = symplectic_matrix(&ThetaVector([1.0; 4])).unwrap();
        for nu in 0..4 {
            assert_eq!(flat.0[4 + nu][nu], 1.0);
            assert_eq!(flat.0[nu][4 + nu], -1.0);
        }
        let th = theta(&ps1()).unwrap();
        let m = symplectic_matrix(&th).unwrap();
        assert!(close(m.0[5][1], 1.005, 1e-15) && close(m.0[6][2], 1.005, 1e-15));
        let random = symplectic_matrix(&ThetaVector([0.3, -2.0, 1.7, 5.0])).unwrap();
        for i in 0..DIM {
            for j in 0..DIM {
                assert_eq!(random.0[i][j] + random.0[j][i], 0.0);
            }
        }
        assert!(matches!(
            symplectic_matrix(&ThetaVector([1.0, 0.0, 1.0, 1.0])),
            Err(Error::DegenerateTheta { index: 2, .. })
        ));
    }

    #[test]
    fn bracket_examples() {
        let th = ThetaVector([1.0, 1.005, 1.005, 1.0]);
        let x = standard_point();
        let v = poisson_nc(&Coordinate(5), &Coordinate(1), &th, &x).unwrap();
        assert!(close(v, 1.0 / 1.005, 1e-16));
        assert!(close(v, 0.995024876, 1e-9));

        let flat = ThetaVector([1.0; 4]);
        for i in 0..4 {
            for j in 0..4 {
                let v = poisson_nc(&Coordinate(4 + i), &Coordinate(j), &flat, &x).unwrap();
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Polynomial::random(&mut rng, 6, 3);
        assert_eq!(poisson_nc(&f, &f, &th, &x).unwrap(), 0.0);
    }

    #[test]
    fn vector_field_examples() {
        let x = [4.0, 0.0, 0.0, 0.0, 2.0, 1.0, 1.0, 1.0];
        let xh: Vec8 = hamiltonian_vector_field(&DeformationParams::zero())
            .unwrap()
            .eval(&x)
            .unwrap();
        assert_eq!(xh, [-2.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);

        let xh: Vec8 = hamiltonian_vector_field(&ps1())
            .unwrap()
            .eval(&standard_point())
            .unwrap();
        let expect = [
            -1.0,
            0.6 / 1.005,
            0.45 / 1.005,
            0.5,
            0.0,
            0.0225 / 1.005,
            -0.03 / 1.005,
            0.0,
        ];
        for k in 0..DIM {
            assert!(
                close(xh[k], expect[k], 1e-15),
                "component {k}: {} vs {}",
                xh[k],
                expect[k]
            );
        }
    }

    #[test]
    fn vector_field_jacobian_matches_oracle() {
        let field = hamiltonian_vector_field(&ps1()).unwrap();
        let x = sample_points(42, 1)[0].to_vec8();
        let exact = jacobian(&field, &x).unwrap();
        let fd = FdOracle::default().jacobian(&field, &x).unwrap();
        assert!(crate::linalg::max_abs_diff(&exact, &fd) <= 1e-6);
    }

    #[test]
    fn field_acts_as_bracket_with_h() {
        let params = DeformationParams::from_entries(
            &[(2, 3, 0.3), (3, 4, -0.25)],
            &[(2, 3, 0.2), (2, 4, 0.4)],
        )
        .unwrap();
        let th = theta(&params).unwrap();
        let h = hamiltonian(&params);
        let field = hamiltonian_vector_field(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for x in sample_points(11, 50) {
            let x = x.to_vec8();
            let f = Polynomial::random(&mut rng, 6, 3);
            let (_, df) = eval_with_gradient(&f, &x).unwrap();
            let xh: Vec8 = field.eval(&x).unwrap();
            let lhs = poisson_nc(&h, &f, &th, &x).unwrap();
            let rhs: f64 = df.iter().zip(&xh).map(|(a, b)| a * b).sum();
            assert!(close(lhs, rhs, 1e-12));
            let dh = differential_hamiltonian(&params, &x);
            assert!(dh.pair(&xh).abs() <= 1e-12);
        }
    }

    #[test]
    fn compatibility_with_symplectic_form() {
        for params in [DeformationParams::zero(), ps1()] {
            for (n, x) in sample_points(3, 100).into_iter().enumerate() {
                for m in 0..100u64 {
                    let v = sample_direction(3, n as u64 * 100 + m);
                    assert!(
                        compatibility_residual(&params, &x.to_vec8(), &v)
                            .unwrap()
                            .abs()
                            <= 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn commutative_field_is_straight_line() {
        let field = hamiltonian_vector_field(&DeformationParams::zero()).unwrap();
        for x in sample_points(8, 20) {
            let xh: Vec8 = field.eval(&x.to_vec8()).unwrap();
            assert_eq!(xh, [-x.p[0], x.p[1], x.p[2], x.p[3], 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn primed_relations() {
        let x = standard_point();
        let r = verify_primed_relations(&DeformationParams::zero(), &x).unwrap();
        assert_eq!(r.max_residual(), 0.0);

        let r = verify_primed_relations(&ps1(), &x).unwrap();
        assert!(close(r.qq[1][2], 0.2, 1e-15));
        assert!(close(r.pp[1][2], 0.1, 1e-15));
        assert!(close(r.qp[1][1], 1.005, 1e-15));
        assert!(r.max_residual() <= 1e-15);
        assert_eq!(r.residual_antisymmetry, 0.0);
    }

    #[test]
    fn theta_agrees_with_shifted_bracket() {
        let params = DeformationParams::from_entries(
            &[(2, 3, 0.3), (2, 4, -0.2), (3, 4, 0.15)],
            &[(2, 3, -0.4), (2, 4, 0.25), (3, 4, 0.5)],
        )
        .unwrap();
        let th = theta(&params).unwrap();
        let r = verify_primed_relations(&params, &standard_point()).unwrap();
        for nu in 0..4 {
            assert!(close(th.0[nu], r.qp[nu][nu], 1e-14));
        }
        assert!(r.max_residual() <= 1e-14);
    }
}
