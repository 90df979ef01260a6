//! Integration of `ẋ = X_H(x)` and conservation drift of `H` and the trace
//! constants.
//!
//! Both integrators sample at every accepted step and at the forced times
//! `k · t_end / 100`. Implicit midpoint splits each of the 100 forced
//! intervals into equal steps no longer than `dt`; its Newton iteration uses
//! the field Jacobian frozen at the start of the step, factored once per
//! step size and refactored if an iteration fails to converge.

use std::str::FromStr;

use crate::calculus::{jacobian, ScalarField, VectorField};
use crate::dynamics::{hamiltonian, hamiltonian_vector_field};
use crate::error::{Error, Result};
use crate::linalg::{identity, Lu, Mat8, Vec8};
use crate::params::DeformationParams;
use crate::point::PhasePoint;
use crate::recursion::TraceConstant;
use crate::scalar::{Dual, Scalar, DIM};

pub const FORCED_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    AdaptiveRk,
    ImplicitMidpoint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AdaptiveRk => "adaptive-rk",
            Method::ImplicitMidpoint => "implicit-midpoint",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive-rk" => Ok(Method::AdaptiveRk),
            "implicit-midpoint" => Ok(Method::ImplicitMidpoint),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::ImplicitMidpoint,
            t_end: 20.0,
            dt: 1e-3,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            newton_tol: 1e-13,
            newton_max_iter: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_end", self.t_end),
            ("dt", self.dt),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("newton_tol", self.newton_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "newton_max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Completed,
    /// `p1 ≤ 0` at time `t`; the offending state is not sampled unless it
    /// is the initial one.
    DomainExit {
        t: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhasePoint)>,
    pub params: DeformationParams,
    pub termination: Termination,
}

fn in_domain(x: &Vec8) -> bool {
    x[4] > 0.0
}

fn forced_time(k: usize, t_end: f64) -> f64 {
    if k == FORCED_SAMPLES {
        t_end
    } else {
        k as f64 * t_end / FORCED_SAMPLES as f64
    }
}

/// Implicit-midpoint stepper with a cached factorization of
/// `I − (h/2) ∂X(x_ref)`.
pub struct Midpoint<'a, V> {
    field: &'a V,
    tol: f64,
    max_iter: usize,
    cached: Option<(f64, Lu)>,
}

impl<'a, V: VectorField> Midpoint<'a, V> {
    pub fn new(field: &'a V, cfg: &IntegratorConfig) -> Self {
        Midpoint {
            field,
            tol: cfg.newton_tol,
            max_iter: cfg.newton_max_iter,
            cached: None,
        }
    }

    fn factor(&mut self, x: &Vec8, h: f64) -> Result<()> {
        let j = jacobian(self.field, x)?;
        let mut m = identity::<f64>();
        for i in 0..DIM {
            for k in 0..DIM {
                m[i][k] -= 0.5 * h * j[i][k];
            }
        }
        self.cached = Some((h, Lu::new(&m)?));
        Ok(())
    }

    fn newton<S: Scalar>(&self, x: &Vec8<S>, h: f64) -> Result<Option<Vec8<S>>> {
        let lu = &self.cached.as_ref().expect("factored before use").1;
        let fx = self.field.eval(x)?;
        let mut z: Vec8<S> = std::array::from_fn(|i| x[i] + fx[i] * h);
        for _ in 0..self.max_iter {
            let mid: Vec8<S> = std::array::from_fn(|i| (x[i] + z[i]) * 0.5);
            let f = self.field.eval(&mid)?;
            let g: Vec8<S> = std::array::from_fn(|i| z[i] - x[i] - f[i] * h);
            let delta = lu.solve(&g);
            let mut converged = true;
            for i in 0..DIM {
                z[i] -= delta[i];
                if delta[i].magnitude() > self.tol * z[i].re().abs().max(1.0) {
                    converged = false;
                }
            }
            if converged {
                return Ok(Some(z));
            }
        }
        Ok(None)
    }

    /// One step `z = x + h X((x + z)/2)`, for any scalar type so that the
    /// step map can be differentiated.
    pub fn step<S: Scalar>(&mut self, x: &Vec8<S>, h: f64, t: f64) -> Result<Vec8<S>> {
        let xr: Vec8 = std::array::from_fn(|i| x[i].re());
        if self.cached.as_ref().map(|c| c.0) != Some(h) {
            self.factor(&xr, h)?;
        }
        if let Some(z) = self.newton(x, h)? {
            return Ok(z);
        }
        self.factor(&xr, h)?;
        self.newton(x, h)?.ok_or(Error::NewtonDivergence { t })
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri_step<V: VectorField>(
    field: &V,
    x: &Vec8,
    k0: &Vec8,
    h: f64,
) -> Result<(Vec8, Vec8, Vec8)> {
    let mut k = [[0.0; DIM]; 7];
    k[0] = *k0;
    for s in 1..7 {
        let xs: Vec8 =
            std::array::from_fn(|i| x[i] + h * (0..s).map(|r| A[s][r] * k[r][i]).sum::<f64>());
        k[s] = field.eval(&xs)?;
    }
    let x5: Vec8 = std::array::from_fn(|i| x[i] + h * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>());
    let err: Vec8 =
        std::array::from_fn(|i| h * (0..7).map(|s| (B5[s] - B4[s]) * k[s][i]).sum::<f64>());
    // FSAL: the last stage is evaluated at x5.
    Ok((x5, err, k[6]))
}

fn error_norm(err: &Vec8, x: &Vec8, y: &Vec8, cfg: &IntegratorConfig) -> f64 {
    let s: f64 = (0..DIM)
        .map(|i| {
            let sc = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(y[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (s / DIM as f64).sqrt()
}

/// Integrates any field from `x0` over `[0, t_end]`, calling `observe` at
/// `t = 0` and after every accepted step. Stops early, without observing
/// the offending state, if `p1 ≤ 0`.
pub fn integrate_field<V: VectorField, O: FnMut(f64, &Vec8)>(
    field: &V,
    x0: &Vec8,
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<Termination> {
    cfg.validate()?;
    observe(0.0, x0);
    if !in_domain(x0) {
        return Ok(Termination::DomainExit { t: 0.0 });
    }
    let mut x = *x0;
    match cfg.method {
        Method::ImplicitMidpoint => {
            let mut stepper = Midpoint::new(field, cfg);
            for seg in 0..FORCED_SAMPLES {
                let t0 = forced_time(seg, cfg.t_end);
                let t1 = forced_time(seg + 1, cfg.t_end);
                let n = ((t1 - t0) / cfg.dt - 1e-9).ceil().max(1.0) as usize;
                let h = (t1 - t0) / n as f64;
                for j in 1..=n {
                    let t = if j == n { t1 } else { t0 + j as f64 * h };
                    x = stepper.step(&x, h, t)?;
                    if !in_domain(&x) {
                        return Ok(Termination::DomainExit { t });
                    }
                    observe(t, &x);
                }
            }
        }
        Method::AdaptiveRk => {
            let mut k0 = field.eval(x0)?;
            let mut t = 0.0;
            let mut h = (cfg.t_end / FORCED_SAMPLES as f64).min(0.1 * cfg.rel_tol.powf(0.2));
            let mut err_prev = 1e-4f64;
            for seg in 1..=FORCED_SAMPLES {
                let target = forced_time(seg, cfg.t_end);
                while t < target {
                    let remaining = target - t;
                    let last = h >= remaining * (1.0 - 1e-12);
                    let step = if last { remaining } else { h };
                    if step <= 1e-14 * t.abs().max(1.0) {
                        return Err(Error::StepUnderflow { t, h: step });
                    }
                    let (y, err, k_last) = dopri_step(field, &x, &k0, step)?;
                    let e = error_norm(&err, &x, &y, cfg);
                    if e <= 1.0 {
                        t = if last { target } else { t + step };
                        x = y;
                        k0 = k_last;
                        if !in_domain(&x) {
                            return Ok(Termination::DomainExit { t });
                        }
                        observe(t, &x);
                        let fac = if e == 0.0 {
                            5.0
                        } else {
                            (0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0)
                        };
                        err_prev = e.max(1e-4);
                        if !last {
                            h = step * fac;
                        }
                    } else {
                        h = step * (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
                    }
                }
            }
        }
    }
    Ok(Termination::Completed)
}

pub fn integrate(
    x0: &PhasePoint,
    params: &DeformationParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let field = hamiltonian_vector_field(params)?;
    let mut samples = Vec::new();
    let termination = integrate_field(&field, &x0.to_vec8(), cfg, |t, x| {
        samples.push((t, PhasePoint::from_vec8(x)));
    })?;
    Ok(Trajectory {
        samples,
        params: params.clone(),
        termination,
    })
}

/// Jacobian of one implicit-midpoint step `x ↦ z(x)`, differentiated
/// through the converged fixed point.
pub fn step_jacobian<V: VectorField>(
    field: &V,
    x: &Vec8,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<Mat8> {
    let mut stepper = Midpoint::new(field, cfg);
    let z = stepper.step(&Dual::seed(x), h, 0.0)?;
    Ok(z.map(|c| c.d))
}

/// Values of `H, c_1, …, c_lmax` at a point.
#[derive(Clone, Debug)]
pub struct Invariants {
    fields: Vec<TraceConstant>,
    h: crate::dynamics::Hamiltonian,
}

impl Invariants {
    pub fn new(params: &DeformationParams, lmax: usize) -> Self {
        Invariants {
            fields: (1..=lmax as u32)
                .map(|l| TraceConstant::new(params, l))
                .collect(),
            h: hamiltonian(params),
        }
    }

    pub fn names(&self) -> Vec<String> {
        std::iter::once("H".to_string())
            .chain((1..=self.fields.len()).map(|l| format!("c{l}")))
            .collect()
    }

    pub fn eval(&self, x: &Vec8) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.fields.len() + 1);
        out.push(self.h.eval(x).expect("polynomial"));
        out.extend(self.fields.iter().map(|f| f.eval(x).expect("polynomial")));
        out
    }
}

/// Running `max_t |I(t) − I(0)| / max(1, |I(0)|)` per invariant.
#[derive(Clone, Debug)]
pub struct DriftAccumulator {
    invariants: Invariants,
    initial: Option<Vec<f64>>,
    drift: Vec<f64>,
}

impl DriftAccumulator {
    pub fn new(params: &DeformationParams, lmax: usize) -> Self {
        DriftAccumulator {
            invariants: Invariants::new(params, lmax),
            initial: None,
            drift: vec![0.0; lmax + 1],
        }
    }

    /// Returns the invariant values at `x`.
    pub fn observe(&mut self, x: &Vec8) -> Vec<f64> {
        let v = self.invariants.eval(x);
        match &self.initial {
            None => self.initial = Some(v.clone()),
            Some(init) => {
                for ((d, a), b) in self.drift.iter_mut().zip(&v).zip(init) {
                    let r = (a - b).abs() / b.abs().max(1.0);
                    if r > *d || r.is_nan() {
                        *d = r;
                    }
                }
            }
        }
        v
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn max_drift(&self) -> f64 {
        self.drift
            .iter()
            .fold(0.0, |m, &d| if d.is_nan() { d } else { m.max(d) })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftRow {
    pub t: f64,
    pub point: PhasePoint,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub names: Vec<String>,
    pub drift: Vec<f64>,
    pub rows: Vec<DriftRow>,
}

pub fn drift_report(traj: &Trajectory, lmax: usize) -> DriftReport {
    let mut acc = DriftAccumulator::new(&traj.params, lmax);
    let rows = traj
        .samples
        .iter()
        .map(|(t, p)| DriftRow {
            t: *t,
            point: *p,
            values: acc.observe(&p.to_vec8()),
        })
        .collect();
    DriftReport {
        names: acc.invariants.names(),
        drift: acc.drift.clone(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Reversed;
    use crate::dynamics::symplectic_matrix;
    use crate::params::theta;
    use crate::point::sample_points;

    fn ps1() -> DeformationParams {
        DeformationParams::from_entries(&[(2, 3, 0.1)], &[(2, 3, 0.2)]).unwrap()
    }

    fn midpoint(t_end: f64, dt: f64) -> IntegratorConfig {
        IntegratorConfig {
            t_end,
            dt,
            ..Default::default()
        }
    }

    fn adaptive(t_end: f64, rel_tol: f64, abs_tol: f64) -> IntegratorConfig {
        IntegratorConfig {
            method: Method::AdaptiveRk,
            t_end,
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        assert!(midpoint(0.0, 1e-3).validate().is_err());
        assert!(midpoint(1.0, -1.0).validate().is_err());
        assert!(midpoint(f64::NAN, 1e-3).validate().is_err());
        assert_eq!("adaptive-rk".parse::<Method>().unwrap(), Method::AdaptiveRk);
        assert!("rk4".parse::<Method>().is_err());
    }

    #[test]
    fn flat_geodesic_example() {
        let x0 = PhasePoint::new([4.0, 0.0, 0.0, 0.0], [2.0, 1.0, 1.0, 1.0]);
        for cfg in [midpoint(1.0, 1e-3), adaptive(1.0, 1e-10, 1e-12)] {
            let traj = integrate(&x0, &DeformationParams::zero(), &cfg).unwrap();
            assert_eq!(traj.termination, Termination::Completed);
            let (t, end) = *traj.samples.last().unwrap();
            assert_eq!(t, 1.0);
            for (a, b) in end.q.iter().zip([2.0, 1.0, 1.0, 1.0]) {
                assert!((a - b).abs() <= 1e-9);
            }
            assert_eq!(end.p, x0.p);
            assert!(traj.samples.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn forced_samples_present() {
        let x0 = PhasePoint::new([0.0; 4], [1.0, 0.1, 0.2, 0.3]);
        for cfg in [midpoint(2.0, 0.3), adaptive(2.0, 1e-8, 1e-10)] {
            let traj = integrate(&x0, &ps1(), &cfg).unwrap();
            for k in 1..=FORCED_SAMPLES {
                let tk = forced_time(k, 2.0);
                assert!(traj.samples.iter().any(|s| s.0 == tk), "{k}");
            }
        }
    }

    #[test]
    fn adaptive_matches_straight_line() {
        let params = DeformationParams::zero();
        for x0 in sample_points(3, 20) {
            let cfg = adaptive(5.0, 1e-10, 1e-12);
            let traj = integrate(&x0, &params, &cfg).unwrap();
            for (t, x) in &traj.samples {
                let v = [-x0.p[0], x0.p[1], x0.p[2], x0.p[3]];
                for i in 0..4 {
                    let exact = x0.q[i] + v[i] * t;
                    assert!((x.q[i] - exact).abs() <= 1e-10 * exact.abs().max(1.0) + 1e-12 * 10.0);
                }
            }
        }
    }

    #[test]
    fn methods_agree_in_deformed_case() {
        let x0 = PhasePoint::new([0.0, 1.0, 2.0, 3.0], [1.0, 0.5, 0.5, 0.5]);
        let params = ps1();
        let a = integrate(&x0, &params, &adaptive(1.0, 1e-13, 1e-15)).unwrap();
        let b = integrate(&x0, &params, &midpoint(1.0, 1e-4)).unwrap();
        let (xa, xb) = (
            a.samples.last().unwrap().1.to_vec8(),
            b.samples.last().unwrap().1.to_vec8(),
        );
        for i in 0..DIM {
            assert!((xa[i] - xb[i]).abs() <= 1e-8, "{i}: {} {}", xa[i], xb[i]);
        }
    }

    #[test]
    fn midpoint_conserves_energy() {
        let x0 = sample_points(11, 1)[0];
        let traj = integrate(&x0, &DeformationParams::zero(), &midpoint(20.0, 1e-3)).unwrap();
        let report = drift_report(&traj, 4);
        assert_eq!(report.names, ["H", "c1", "c2", "c3", "c4"]);
        assert!(report.drift[0] <= 1e-12, "{:?}", report.drift);
        assert!(report.drift.iter().all(|&d| d <= 1e-10));
        assert_eq!(report.rows.len(), traj.samples.len());

        for params in [DeformationParams::zero(), ps1()] {
            let traj = integrate(&x0, &params, &midpoint(100.0, 1e-2)).unwrap();
            assert!(drift_report(&traj, 1).drift[0] <= 1e-6);
        }
    }

    #[test]
    fn single_sample_has_zero_drift() {
        let traj = Trajectory {
            samples: vec![(0.0, sample_points(1, 1)[0])],
            params: ps1(),
            termination: Termination::Completed,
        };
        assert_eq!(drift_report(&traj, 4).drift, vec![0.0; 5]);
    }

    #[test]
    fn step_map_is_symplectic() {
        for params in [DeformationParams::zero(), ps1()] {
            let omega = symplectic_matrix(&theta(&params).unwrap()).unwrap();
            let field = hamiltonian_vector_field(&params).unwrap();
            for x in sample_points(9, 50) {
                let j = step_jacobian(&field, &x.to_vec8(), 1e-3, &IntegratorConfig::default())
                    .unwrap();
                assert!(omega.preservation_residual(&j) <= 1e-9);
            }
        }
    }

    #[test]
    fn time_reversal_roundtrip() {
        let cfg = midpoint(1.0, 1e-3);
        let params = ps1();
        let field = hamiltonian_vector_field(&params).unwrap();
        for x in sample_points(2, 10) {
            let mut end = [0.0; DIM];
            integrate_field(&field, &x.to_vec8(), &cfg, |_, y| end = *y).unwrap();
            let mut back = [0.0; DIM];
            integrate_field(&Reversed(field), &end, &cfg, |_, y| back = *y).unwrap();
            let x0 = x.to_vec8();
            for i in 0..DIM {
                assert!((back[i] - x0[i]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn domain_exit_is_flagged() {
        let x0 = PhasePoint::new([0.0; 4], [-1.0, 0.0, 0.0, 0.0]);
        let traj = integrate(&x0, &DeformationParams::zero(), &midpoint(1.0, 1e-2)).unwrap();
        assert_eq!(traj.termination, Termination::DomainExit { t: 0.0 });
        assert_eq!(traj.samples.len(), 1);
    }
}
