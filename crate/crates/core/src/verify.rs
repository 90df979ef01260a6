//! The full verification battery over a seeded point set.
//!
//! Checks that hold for every parameter set are asserted. Checks whose
//! claim only holds (or is only stated) in the commutative limit are
//! asserted when λ = 0 and exploratory otherwise; condition (2) and the
//! original-coordinate torsion and Lie derivatives are always exploratory.

use rayon::prelude::*;

use crate::calculus::{lie_derivative_11, nijenhuis, ConstantVector, ScalarField, TensorField11};
use crate::canonical::{from_canonical, relative_error, to_canonical};
use crate::dynamics::{
    compatibility_residual, hamiltonian, hamiltonian_vector_field, verify_primed_relations,
    HamiltonianVectorField,
};
use crate::error::Result;
use crate::flow::{integrate_field, DriftAccumulator, IntegratorConfig, Termination};
use crate::linalg::{max_abs, max_abs_diff, trace, Mat8};
use crate::params::{theta, DeformationParams};
use crate::point::{sample_direction, sample_point, PhasePoint};
use crate::recursion::{
    check_lmax, choose_orientation, condition2_check, involution_matrix, matrix_traces,
    min_separation, recursion_blocks, spectral_pairing, trace_constants, BlockVariant,
    CanonicalRecursion, Orientation, OriginalRecursion, PullbackRecursion,
};
use crate::report::{
    Check, CheckKind, MaxTracker, OrientationSummary, ParamsSummary, VerificationReport,
    SCHEMA_VERSION,
};

/// Named tolerances; every field can be overridden from a run config.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub canonical_torsion: f64,
    pub canonical_lie: f64,
    pub roundtrip: f64,
    pub q1_transport: f64,
    pub verbatim_vs_pullback: f64,
    pub drift: f64,
    pub involution: f64,
    pub trace_identity: f64,
    pub pullback_trace: f64,
    pub spectral_gap: f64,
    pub primed_relations: f64,
    pub theta_consistency: f64,
    pub compatibility: f64,
    pub condition2: f64,
    pub original_torsion: f64,
    pub original_lie: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            canonical_torsion: 1e-12,
            canonical_lie: 1e-13,
            roundtrip: 1e-12,
            q1_transport: 1e-13,
            verbatim_vs_pullback: 1e-9,
            drift: 1e-10,
            involution: 1e-12,
            trace_identity: 1e-10,
            pullback_trace: 1e-11,
            spectral_gap: 1e-9,
            primed_relations: 1e-14,
            theta_consistency: 1e-14,
            compatibility: 1e-12,
            condition2: 1e-14,
            original_torsion: 1e-9,
            original_lie: 1e-9,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 16] = [
        "canonical_torsion",
        "canonical_lie",
        "roundtrip",
        "q1_transport",
        "verbatim_vs_pullback",
        "drift",
        "involution",
        "trace_identity",
        "pullback_trace",
        "spectral_gap",
        "primed_relations",
        "theta_consistency",
        "compatibility",
        "condition2",
        "original_torsion",
        "original_lie",
    ];

    pub fn get_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "canonical_torsion" => &mut self.canonical_torsion,
            "canonical_lie" => &mut self.canonical_lie,
            "roundtrip" => &mut self.roundtrip,
            "q1_transport" => &mut self.q1_transport,
            "verbatim_vs_pullback" => &mut self.verbatim_vs_pullback,
            "drift" => &mut self.drift,
            "involution" => &mut self.involution,
            "trace_identity" => &mut self.trace_identity,
            "pullback_trace" => &mut self.pullback_trace,
            "spectral_gap" => &mut self.spectral_gap,
            "primed_relations" => &mut self.primed_relations,
            "theta_consistency" => &mut self.theta_consistency,
            "compatibility" => &mut self.compatibility,
            "condition2" => &mut self.condition2,
            "original_torsion" => &mut self.original_torsion,
            "original_lie" => &mut self.original_lie,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.get_mut(name).map(|v| *v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub points: usize,
    pub lmax: usize,
    pub flow: IntegratorConfig,
    /// Number of the seeded points that also seed a drift trajectory.
    pub drift_points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            points: 1000,
            lmax: 4,
            flow: IntegratorConfig::default(),
            drift_points: 1000,
        }
    }
}

/// Threshold below which `p_k` (k ≥ 2) counts as zero for the printed
/// blocks, whose `V_k` divides by it.
pub const PK_GUARD: f64 = 1e-9;

/// The pointwise checks, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pointwise {
    CanonicalTorsion,
    CanonicalLie,
    Roundtrip,
    Q1Transport,
    PullbackTrace,
    TraceIdentity,
    Spectral,
    PullbackSpectral,
    Primed,
    ThetaConsistency,
    Compatibility,
    Verbatim,
    PatternConsistent,
    Involution,
    PullbackTorsion,
    PullbackLie,
    VerbatimTorsion,
}

const POINTWISE: [Pointwise; 17] = [
    Pointwise::CanonicalTorsion,
    Pointwise::CanonicalLie,
    Pointwise::Roundtrip,
    Pointwise::Q1Transport,
    Pointwise::PullbackTrace,
    Pointwise::TraceIdentity,
    Pointwise::Spectral,
    Pointwise::PullbackSpectral,
    Pointwise::Primed,
    Pointwise::ThetaConsistency,
    Pointwise::Compatibility,
    Pointwise::Verbatim,
    Pointwise::PatternConsistent,
    Pointwise::Involution,
    Pointwise::PullbackTorsion,
    Pointwise::PullbackLie,
    Pointwise::VerbatimTorsion,
];

impl Pointwise {
    fn name(self) -> &'static str {
        match self {
            Pointwise::CanonicalTorsion => "canonical_torsion",
            Pointwise::CanonicalLie => "canonical_lie",
            Pointwise::Roundtrip => "roundtrip",
            Pointwise::Q1Transport => "q1_transport",
            Pointwise::PullbackTrace => "pullback_trace",
            Pointwise::TraceIdentity => "trace_identity",
            Pointwise::Spectral => "spectral_degeneracy",
            Pointwise::PullbackSpectral => "pullback_spectral_degeneracy",
            Pointwise::Primed => "primed_relations",
            Pointwise::ThetaConsistency => "theta_consistency",
            Pointwise::Compatibility => "compatibility",
            Pointwise::Verbatim => "verbatim_vs_pullback",
            Pointwise::PatternConsistent => "pattern_consistent_vs_pullback",
            Pointwise::Involution => "involution",
            Pointwise::PullbackTorsion => "pullback_torsion",
            Pointwise::PullbackLie => "pullback_lie",
            Pointwise::VerbatimTorsion => "verbatim_torsion",
        }
    }

    fn tolerance(self, tol: &Tolerances) -> f64 {
        match self {
            Pointwise::CanonicalTorsion => tol.canonical_torsion,
            Pointwise::CanonicalLie => tol.canonical_lie,
            Pointwise::Roundtrip => tol.roundtrip,
            Pointwise::Q1Transport => tol.q1_transport,
            Pointwise::PullbackTrace => tol.pullback_trace,
            Pointwise::TraceIdentity => tol.trace_identity,
            Pointwise::Spectral | Pointwise::PullbackSpectral => tol.spectral_gap,
            Pointwise::Primed => tol.primed_relations,
            Pointwise::ThetaConsistency => tol.theta_consistency,
            Pointwise::Compatibility => tol.compatibility,
            Pointwise::Verbatim | Pointwise::PatternConsistent => tol.verbatim_vs_pullback,
            Pointwise::Involution => tol.involution,
            Pointwise::PullbackTorsion | Pointwise::VerbatimTorsion => tol.original_torsion,
            Pointwise::PullbackLie => tol.original_lie,
        }
    }

    fn kind(self, flat: bool) -> CheckKind {
        match self {
            Pointwise::PullbackSpectral
            | Pointwise::PullbackTorsion
            | Pointwise::PullbackLie
            | Pointwise::VerbatimTorsion => CheckKind::Exploratory,
            Pointwise::Verbatim | Pointwise::PatternConsistent | Pointwise::Involution if !flat => {
                CheckKind::Exploratory
            }
            _ => CheckKind::Asserted,
        }
    }
}

/// Outcome of one check at one point: a residual, or an exclusion (the
/// point is outside the check's domain or the evaluation failed).
type Sample = Option<f64>;

struct Context<'a> {
    params: &'a DeformationParams,
    theta: [f64; 4],
    field: HamiltonianVectorField,
    orientation: Orientation,
    lmax: usize,
    seed: u64,
    gap: f64,
}

fn guarded_pk(x: &PhasePoint) -> bool {
    x.p[1..].iter().any(|p| p.abs() < PK_GUARD)
}

fn eval_point(ctx: &Context, index: usize, x: &PhasePoint) -> Vec<Sample> {
    let params = ctx.params;
    let v = x.to_vec8();
    let canonical = to_canonical(x, params).ok();
    let y = canonical.map(|c| c.to_vec8());
    let pullback: Option<Mat8> = PullbackRecursion::new(params).eval(&v).ok();
    let blocks_ok = !(guarded_pk(x) && !params.lambda_vanishes());

    POINTWISE
        .iter()
        .map(|&check| -> Sample {
            match check {
                Pointwise::CanonicalTorsion => nijenhuis(&CanonicalRecursion, &y?)
                    .ok()
                    .map(|n| n.max_abs()),
                Pointwise::CanonicalLie => {
                    let field = ConstantVector::basis(4, -1.0);
                    lie_derivative_11(&field, &CanonicalRecursion, &y?)
                        .ok()
                        .map(|m| max_abs(&m))
                }
                Pointwise::Roundtrip => {
                    let back = from_canonical(&canonical?, params).ok()?;
                    Some(relative_error(&back.to_vec8(), &v))
                }
                Pointwise::Q1Transport => {
                    let c = canonical?;
                    let back = from_canonical(&c, params).ok()?;
                    let e: f64 = hamiltonian(params).eval(&back.to_vec8()).ok()?;
                    Some((e - c.coords[0]).abs())
                }
                Pointwise::PullbackTrace => {
                    let expect = 2.0 * canonical?.coords.iter().sum::<f64>();
                    Some((trace(&pullback?) - expect).abs())
                }
                Pointwise::TraceIdentity => {
                    let closed = trace_constants(x, params, ctx.lmax).ok()?.c;
                    let traces = matrix_traces(&pullback?, ctx.lmax);
                    Some(
                        traces
                            .iter()
                            .zip(&closed)
                            .fold(0.0, |m, (a, b)| m.max((a - b).abs() / b.abs().max(1.0))),
                    )
                }
                Pointwise::Spectral | Pointwise::PullbackSpectral => {
                    let c = canonical?;
                    if min_separation(&c.coords) < 1e-3 {
                        return None;
                    }
                    let t = if check == Pointwise::Spectral {
                        CanonicalRecursion.eval(&c.to_vec8()).ok()?
                    } else {
                        pullback?
                    };
                    let p = spectral_pairing(&t, c.coords);
                    Some(if p.is_doubly_degenerate(ctx.gap) {
                        p.residual()
                    } else {
                        f64::INFINITY
                    })
                }
                Pointwise::Primed => verify_primed_relations(params, &v)
                    .ok()
                    .map(|r| r.max_residual()),
                Pointwise::ThetaConsistency => {
                    let r = verify_primed_relations(params, &v).ok()?;
                    Some((0..4).fold(0.0, |m, nu| m.max((ctx.theta[nu] - r.qp[nu][nu]).abs())))
                }
                Pointwise::Compatibility => {
                    let dir = sample_direction(ctx.seed, index as u64);
                    compatibility_residual(params, &v, &dir).ok().map(f64::abs)
                }
                Pointwise::Verbatim | Pointwise::PatternConsistent => {
                    if !blocks_ok {
                        return None;
                    }
                    let variant = if check == Pointwise::Verbatim {
                        BlockVariant::Verbatim
                    } else {
                        BlockVariant::PatternConsistent
                    };
                    let b = recursion_blocks(params.lambda(), &v, variant).ok()?;
                    Some(max_abs_diff(&b.assemble(ctx.orientation), &pullback?))
                }
                Pointwise::Involution => {
                    let m = involution_matrix(x, params, ctx.lmax).ok()?;
                    Some(m.iter().flatten().fold(0.0, |a, v| a.max(v.abs())))
                }
                Pointwise::PullbackTorsion => nijenhuis(&PullbackRecursion::new(params), &v)
                    .ok()
                    .map(|n| n.max_abs()),
                Pointwise::PullbackLie => {
                    lie_derivative_11(&ctx.field, &PullbackRecursion::new(params), &v)
                        .ok()
                        .map(|m| max_abs(&m))
                }
                Pointwise::VerbatimTorsion => {
                    if !blocks_ok {
                        return None;
                    }
                    let t = OriginalRecursion::new(params, BlockVariant::Verbatim, ctx.orientation);
                    nijenhuis(&t, &v).ok().map(|n| n.max_abs())
                }
            }
        })
        .collect()
}

/// Max relative drift of `H, c_1..c_lmax` along one trajectory, or `None`
/// if integration failed or left the domain.
pub fn trajectory_drift(
    field: &HamiltonianVectorField,
    params: &DeformationParams,
    x0: &PhasePoint,
    cfg: &IntegratorConfig,
    lmax: usize,
) -> Option<f64> {
    let mut acc = DriftAccumulator::new(params, lmax);
    match integrate_field(field, &x0.to_vec8(), cfg, |_, x| {
        acc.observe(x);
    }) {
        Ok(Termination::Completed) => Some(acc.max_drift()),
        _ => None,
    }
}

fn params_summary(params: &DeformationParams, th: [f64; 4]) -> ParamsSummary {
    let [lambda23, lambda24, lambda34] = params.lambda_spatial();
    let [alpha23, alpha24, alpha34] = params.alpha_spatial();
    ParamsSummary {
        lambda23,
        lambda24,
        lambda34,
        alpha23,
        alpha24,
        alpha34,
        theta: th,
    }
}

pub fn verify(
    params: &DeformationParams,
    tol: &Tolerances,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    opts.flow.validate()?;
    check_lmax(opts.lmax)?;
    let th = theta(params)?.0;
    let flat = params.lambda_vanishes();
    let choice = choose_orientation(opts.seed, opts.points.clamp(1, 100))?;
    let ctx = Context {
        params,
        theta: th,
        field: hamiltonian_vector_field(params)?,
        orientation: choice.orientation,
        lmax: opts.lmax,
        seed: opts.seed,
        gap: tol.spectral_gap,
    };

    let per_point: Vec<(Vec<Sample>, Option<Sample>)> = (0..opts.points)
        .into_par_iter()
        .map(|i| {
            let x = sample_point(opts.seed, i as u64);
            let samples = eval_point(&ctx, i, &x);
            let drift = (i < opts.drift_points)
                .then(|| trajectory_drift(&ctx.field, params, &x, &opts.flow, opts.lmax));
            (samples, drift)
        })
        .collect();

    let mut trackers = vec![MaxTracker::default(); POINTWISE.len()];
    let mut drift = MaxTracker::default();
    for (i, (samples, d)) in per_point.iter().enumerate() {
        for (t, s) in trackers.iter_mut().zip(samples) {
            match s {
                Some(v) => t.push(i, *v),
                None => t.exclude(),
            }
        }
        match d {
            Some(Some(v)) => drift.push(i, *v),
            Some(None) => drift.exclude(),
            None => {}
        }
    }

    let mut checks: Vec<Check> = POINTWISE
        .iter()
        .zip(&trackers)
        .map(|(&c, t)| Check::new(c.name(), c.kind(flat), c.tolerance(tol), t))
        .collect();
    let drift_kind = if flat {
        CheckKind::Asserted
    } else {
        CheckKind::Exploratory
    };
    checks.push(Check::new("drift", drift_kind, tol.drift, &drift));
    let c2 = condition2_check(params)?;
    checks.push(Check::scalar(
        "condition2",
        CheckKind::Exploratory,
        tol.condition2,
        c2.residual,
    ));

    let verdict = VerificationReport::verdict_of(&checks);
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        seed: opts.seed,
        points: opts.points,
        params: params_summary(params, th),
        orientation: OrientationSummary {
            chosen: choice.orientation.name().to_string(),
            discrepancy_direct: choice.discrepancy_direct,
            discrepancy_transposed: choice.discrepancy_transposed,
        },
        checks,
        verdict,
    })
}
