//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails
//! if any criterion failed. Tolerances are pinned here, independently of
//! the library defaults.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use ncphase_cli::{run, Cli};
use ncphase_core::calculus::fd::FdOracle;
use ncphase_core::calculus::poly::{PolyTensorField, PolyVectorField, Polynomial};
use ncphase_core::calculus::{
    eval_with_gradient, jacobian, lie_derivative_11, nijenhuis, Reversed,
};
use ncphase_core::dynamics::{hamiltonian_vector_field, symplectic_matrix};
use ncphase_core::flow::{integrate, integrate_field, step_jacobian, IntegratorConfig, Method};
use ncphase_core::linalg::max_abs_diff;
use ncphase_core::recursion::{
    matrix_traces, min_separation, recursion_canonical, recursion_original_pullback,
    spectral_pairing, trace_constants,
};
use ncphase_core::{sample_points, theta, to_canonical, DeformationParams, DIM};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Runs one command line in-process on a pool of `threads` workers;
/// relative paths in `args` resolve against `dir`.
fn ncphase(dir: &Path, threads: usize, args: &[&str]) -> (u8, Duration) {
    let args: Vec<String> = args
        .iter()
        .map(|a| match a.rsplit_once('.') {
            Some((_, "json" | "csv" | "cfg")) => dir.join(a).display().to_string(),
            _ => a.to_string(),
        })
        .collect();
    let cli = Cli::try_parse_from(std::iter::once("ncphase".to_string()).chain(args)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let start = Instant::now();
    let code = pool.install(|| run(cli).unwrap_or_else(|e| e.exit_code()));
    (code, start.elapsed())
}

fn residual(report: &Value, name: &str) -> f64 {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("check {name} missing"))["residual"]
        .as_f64()
        .unwrap_or(f64::NAN)
}

/// Each `(check, limit)` must hold; returns the failing ones.
fn limits(report: &Value, pinned: &[(&str, f64)]) -> (Vec<String>, Vec<String>) {
    let mut fails = Vec::new();
    let mut all = Vec::new();
    for &(name, tol) in pinned {
        let r = residual(report, name);
        let s = format!("{name} {r:.2e} (<= {tol:.0e})");
        if !(r <= tol) {
            fails.push(s.clone());
        }
        all.push(s);
    }
    (fails, all)
}

fn ps1() -> DeformationParams {
    DeformationParams::from_entries(&[(2, 3, 0.1)], &[(2, 3, 0.2)]).unwrap()
}

fn parameter_sets() -> Vec<(&'static str, DeformationParams)> {
    vec![
        ("zero", DeformationParams::zero()),
        ("ps1", ps1()),
        (
            "mixed",
            DeformationParams::from_entries(
                &[(2, 4, -0.3), (3, 4, 0.2)],
                &[(3, 4, 0.4), (2, 3, -0.1)],
            )
            .unwrap(),
        ),
        (
            "full",
            DeformationParams::from_entries(
                &[(2, 3, 0.5), (2, 4, -0.25), (3, 4, 0.25)],
                &[(2, 3, -0.5), (2, 4, 0.5), (3, 4, -0.25)],
            )
            .unwrap(),
        ),
    ]
}

fn criterion1(dir: &Path) -> Outcome {
    let (code, elapsed) = ncphase(
        dir,
        1,
        &[
            "verify", "--seed", "42", "--points", "1000", "--out", "c1.json",
        ],
    );
    let report: Value = match std::fs::read(dir.join("c1.json")) {
        Ok(bytes) => serde_json::from_slice(&bytes).unwrap(),
        Err(_) => return outcome(false, format!("no report, exit {code}")),
    };
    let (mut fails, _) = limits(
        &report,
        &[
            ("canonical_torsion", 1e-12),
            ("canonical_lie", 1e-13),
            ("roundtrip", 1e-12),
            ("verbatim_vs_pullback", 1e-9),
            ("drift", 1e-10),
            ("involution", 1e-12),
        ],
    );
    if elapsed > Duration::from_secs(60) {
        fails.push(format!("runtime {:.1}s", elapsed.as_secs_f64()));
    }
    if code != 0 {
        fails.push(format!("exit {code}"));
    }
    let detail = if fails.is_empty() {
        format!(
            "all sub-checks within bounds, {:.1}s, exit 0",
            elapsed.as_secs_f64()
        )
    } else {
        format!(
            "{}; pattern-consistent blocks {:.2e} (printed L block, see README)",
            fails.join("; "),
            residual(&report, "pattern_consistent_vs_pullback")
        )
    };
    outcome(fails.is_empty(), detail)
}

fn write_ps1(dir: &Path) {
    std::fs::write(
        dir.join("ps1.cfg"),
        "lambda.2.3 = 0.1\nalpha.2.3 = 0.2\nseed = 42\npoints = 1000\n",
    )
    .unwrap();
}

fn criterion2(dir: &Path) -> Outcome {
    write_ps1(dir);
    let (code, _) = ncphase(
        dir,
        1,
        &["verify", "--config", "ps1.cfg", "--out", "c2.json"],
    );
    let report: Value =
        serde_json::from_slice(&std::fs::read(dir.join("c2.json")).unwrap()).unwrap();
    let (mut fails, all) = limits(
        &report,
        &[
            ("primed_relations", 1e-14),
            ("theta_consistency", 1e-14),
            ("canonical_torsion", 1e-12),
            ("roundtrip", 1e-12),
            ("q1_transport", 1e-13),
        ],
    );
    let th: Vec<f64> = report["params"]["theta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let th_err = th
        .iter()
        .zip([1.0, 1.005, 1.005, 1.0])
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if !(th_err <= 1e-15) {
        fails.push(format!("theta {th:?}"));
    }
    if code != 0 {
        fails.push(format!("exit {code}"));
    }
    let detail = if fails.is_empty() {
        format!("{}; theta err {th_err:.1e}", all.join(", "))
    } else {
        fails.join("; ")
    };
    outcome(fails.is_empty(), detail)
}

fn criterion3() -> Outcome {
    let fd = FdOracle::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut grad, mut jac, mut tors, mut lie) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in sample_points(42, 100) {
        let v = x.to_vec8();
        let f = Polynomial::random(&mut rng, 6, 3);
        let (_, g) = eval_with_gradient(&f, &v).unwrap();
        let g_fd = fd.gradient(&f, &v).unwrap();
        grad = g
            .iter()
            .zip(&g_fd)
            .fold(grad, |m, (a, b)| m.max((a - b).abs()));

        let field = PolyVectorField::random(&mut rng, 4, 3);
        jac = jac.max(max_abs_diff(
            &jacobian(&field, &v).unwrap(),
            &fd.jacobian(&field, &v).unwrap(),
        ));

        let t = PolyTensorField::random(&mut rng, 2, 3);
        tors = tors.max(
            nijenhuis(&t, &v)
                .unwrap()
                .max_abs_diff(&fd.nijenhuis(&t, &v).unwrap()),
        );
        lie = lie.max(max_abs_diff(
            &lie_derivative_11(&field, &t, &v).unwrap(),
            &fd.lie_derivative(&field, &t, &v).unwrap(),
        ));
    }
    let worst = grad.max(jac).max(tors).max(lie);
    outcome(
        worst <= 1e-6,
        format!("gradient {grad:.1e}, jacobian {jac:.1e}, nijenhuis {tors:.1e}, lie {lie:.1e} (<= 1e-6)"),
    )
}

fn criterion4() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, params) in parameter_sets() {
        let mut w = 0.0f64;
        for x in sample_points(42, 500) {
            let closed = trace_constants(&x, &params, 4).unwrap().c;
            let traces = matrix_traces(&recursion_original_pullback(&x, &params).unwrap(), 4);
            w = traces
                .iter()
                .zip(&closed)
                .fold(w, |m, (a, b)| m.max((a - b).abs() / b.abs().max(1.0)));
        }
        parts.push(format!("{name} {w:.1e}"));
        worst = worst.max(w);
    }
    outcome(worst <= 1e-10, format!("{} (<= 1e-10)", parts.join(", ")))
}

fn criterion5() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, params) in parameter_sets() {
        let mut n = 0;
        let mut w = 0.0f64;
        for x in sample_points(42, 2000) {
            let y = to_canonical(&x, &params).unwrap();
            if min_separation(&y.coords) < 1e-3 {
                continue;
            }
            w = w.max(spectral_pairing(&recursion_canonical(&y), y.coords).intra_gap);
            n += 1;
            if n == 500 {
                break;
            }
        }
        if n < 500 {
            return outcome(false, format!("{name}: only {n} separated points"));
        }
        parts.push(format!("{name} {w:.1e}"));
        worst = worst.max(w);
    }
    outcome(
        worst <= 1e-9,
        format!(
            "intra-pair gap {} (<= 1e-9, 500 points each)",
            parts.join(", ")
        ),
    )
}

fn criterion6(dir: &Path) -> Outcome {
    let (code, elapsed) = ncphase(
        dir,
        1,
        &[
            "scan",
            "--max-cells",
            "15625",
            "--points",
            "4",
            "--seed",
            "42",
            "--t-end",
            "1",
            "--dt",
            "0.01",
            "--out",
            "scan.csv",
        ],
    );
    if code != 0 {
        return outcome(false, format!("exit {code}"));
    }
    let csv = std::fs::read_to_string(dir.join("scan.csv")).unwrap();
    let mut rows = 0;
    let mut bad = Vec::new();
    let (mut deformed, mut flat) = (0, 0);
    for line in csv.lines().skip(1) {
        rows += 1;
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let lambda_zero = f[..3].iter().all(|&v| v == 0.0);
        let theta_pos = f[6..9].iter().all(|&t| t > 0.0);
        let cond2 = f[9];
        if lambda_zero {
            flat += 1;
            if cond2 != 0.0 {
                bad.push(line.to_string());
            }
        } else if theta_pos {
            deformed += 1;
            if !(cond2 > 0.0) {
                bad.push(line.to_string());
            }
        }
    }
    let secs = elapsed.as_secs_f64();
    let pass = rows == 15625 && bad.is_empty() && secs <= 120.0;
    outcome(
        pass,
        format!(
            "{rows} cells in {secs:.1}s (<= 120s); cond2 > 0 on {deformed} deformed cells, = 0 on {flat} flat cells; {} violations",
            bad.len()
        ),
    )
}

fn criterion7(dir: &Path) -> Outcome {
    write_ps1(dir);
    let (code, _) = ncphase(
        dir,
        3,
        &["verify", "--config", "ps1.cfg", "--out", "c7.json"],
    );
    let a = std::fs::read(dir.join("c2.json")).unwrap();
    let b = std::fs::read(dir.join("c7.json")).unwrap();
    let report: Value = serde_json::from_slice(&b).unwrap();
    let mut fails = Vec::new();
    if a != b {
        fails.push("reports differ between runs".to_string());
    }
    let mut measured = Vec::new();
    for name in ["verbatim_torsion", "drift", "involution"] {
        let c = report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name);
        match c {
            Some(c) if c["kind"] == "exploratory" && c["residual"].is_number() => {
                measured.push(format!("{name} {:.2e}", c["residual"].as_f64().unwrap()))
            }
            _ => fails.push(format!("{name} not serialized as exploratory")),
        }
    }
    if code != 0 {
        fails.push(format!(
            "exit {code} (exploratory checks gated the verdict)"
        ));
    }
    let detail = if fails.is_empty() {
        format!(
            "byte-identical reports across thread counts; exploratory {}",
            measured.join(", ")
        )
    } else {
        fails.join("; ")
    };
    outcome(fails.is_empty(), detail)
}

fn criterion8() -> Outcome {
    let adaptive = IntegratorConfig {
        method: Method::AdaptiveRk,
        ..IntegratorConfig::default()
    };
    let mut flat = 0.0f64;
    let mut flat_ok = true;
    for x0 in sample_points(42, 20) {
        let traj = integrate(&x0, &DeformationParams::zero(), &adaptive).unwrap();
        let v = [-x0.p[0], x0.p[1], x0.p[2], x0.p[3]];
        for (t, x) in &traj.samples {
            for i in 0..4 {
                let exact = x0.q[i] + v[i] * t;
                let err = (x.q[i] - exact).abs();
                flat = flat.max(err);
                flat_ok &= err <= adaptive.abs_tol + adaptive.rel_tol * exact.abs();
                flat_ok &= x.p[i] == x0.p[i];
            }
        }
    }

    let mut sympl = 0.0f64;
    let mut reversal = 0.0f64;
    let midpoint = IntegratorConfig::default();
    for (_, params) in parameter_sets() {
        let omega = symplectic_matrix(&theta(&params).unwrap()).unwrap();
        let field = hamiltonian_vector_field(&params).unwrap();
        for x in sample_points(42, 100) {
            let j = step_jacobian(&field, &x.to_vec8(), midpoint.dt, &midpoint).unwrap();
            sympl = sympl.max(omega.preservation_residual(&j));
        }
        for x in sample_points(43, 5) {
            let mut end = [0.0; DIM];
            integrate_field(&field, &x.to_vec8(), &midpoint, |_, y| end = *y).unwrap();
            let mut back = [0.0; DIM];
            integrate_field(&Reversed(field), &end, &midpoint, |_, y| back = *y).unwrap();
            let x0 = x.to_vec8();
            reversal = (0..DIM).fold(reversal, |m, i| m.max((back[i] - x0[i]).abs()));
        }
    }
    outcome(
        flat_ok && sympl <= 1e-9 && reversal <= 1e-8,
        format!(
            "flat-limit error {flat:.1e} (within rel 1e-10 / abs 1e-12), symplectic {sympl:.1e} (<= 1e-9), time reversal {reversal:.1e} (<= 1e-8, t_end 20)"
        ),
    )
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let results = [
        (1, "commutative-limit suite", criterion1(d)),
        (2, "deformed-bracket suite", criterion2(d)),
        (3, "oracle equivalence", criterion3()),
        (4, "trace identity", criterion4()),
        (5, "spectral degeneracy", criterion5()),
        (6, "condition (2) scanner", criterion6(d)),
        (7, "exploratory + determinism", criterion7(d)),
        (8, "integrator quality", criterion8()),
    ];
    // Written straight to the handle so the lines survive output capture.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out);
    for (n, name, r) in &results {
        let _ = writeln!(
            out,
            "criterion {n} [{}] {name}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
