//! The four subcommands.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ncphase_core::calculus::nijenhuis;
use ncphase_core::dynamics::hamiltonian_vector_field;
use ncphase_core::flow::{drift_report, integrate, Termination};
use ncphase_core::recursion::{
    choose_orientation, condition2_check, BlockVariant, Orientation, OriginalRecursion,
};
use ncphase_core::report::{CheckKind, Verdict, VerificationReport};
use ncphase_core::verify::{trajectory_drift, verify as run_verify, VerifyOptions, PK_GUARD};
use ncphase_core::{
    from_canonical, sample_points, theta, to_canonical, CanonicalPoint, DeformationParams,
    PhasePoint,
};
use rayon::prelude::*;

use crate::config::{build_params, parse_config, Matrix, RunConfig};
use crate::output::{csv_float, g17, join, write_atomic};
use crate::{
    CliError, FlowArgs, FlowOverrides, ScanArgs, TransformArgs, VerifyArgs, EXIT_CHECKS_FAILED,
    EXIT_DOMAIN, EXIT_PASS,
};

pub const DEFAULT_REPORT: &str = "report.json";

/// Values each active parameter takes in a scan.
pub const SCAN_VALUES: [f64; 5] = [-0.5, -0.25, 0.0, 0.25, 0.5];

const SCAN_PARAMS: [(Matrix, usize, usize); 6] = [
    (Matrix::Lambda, 2, 3),
    (Matrix::Lambda, 2, 4),
    (Matrix::Lambda, 3, 4),
    (Matrix::Alpha, 2, 3),
    (Matrix::Alpha, 2, 4),
    (Matrix::Alpha, 3, 4),
];

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(parse_config(&text)?)
        }
    }
}

fn apply_flow(cfg: &mut RunConfig, o: &FlowOverrides) -> Result<(), CliError> {
    if let Some(m) = &o.method {
        cfg.flow.method = m.parse()?;
    }
    if let Some(t) = o.t_end {
        cfg.flow.t_end = t;
    }
    if let Some(dt) = o.dt {
        cfg.flow.dt = dt;
    }
    cfg.flow.validate()?;
    Ok(())
}

fn apply_sampling(
    cfg: &mut RunConfig,
    points: Option<usize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if let Some(n) = points {
        if n == 0 {
            return Err(CliError::Usage("--points must be positive".into()));
        }
        cfg.points = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    write_atomic(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn kind_name(k: CheckKind) -> &'static str {
    match k {
        CheckKind::Asserted => "asserted",
        CheckKind::Exploratory => "exploratory",
    }
}

pub fn summary_table(report: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<32} {:<11} {:>12} {:>12} {:>6} {:>8}",
        "check", "kind", "residual", "tolerance", "result", "excluded"
    );
    for c in &report.checks {
        let _ = writeln!(
            s,
            "{:<32} {:<11} {:>12.3e} {:>12.3e} {:>6} {:>8}",
            c.name,
            kind_name(c.kind),
            c.residual,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" },
            c.excluded
        );
    }
    let _ = writeln!(
        s,
        "orientation: {} (direct {:.3e}, transposed {:.3e})",
        report.orientation.chosen,
        report.orientation.discrepancy_direct,
        report.orientation.discrepancy_transposed
    );
    let _ = writeln!(
        s,
        "verdict: {}",
        match report.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    );
    s
}

pub fn verify(a: &VerifyArgs) -> Result<u8, CliError> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_sampling(&mut cfg, a.points, a.seed)?;
    apply_flow(&mut cfg, &a.flow)?;
    let opts = VerifyOptions {
        seed: cfg.seed,
        points: cfg.points,
        lmax: a.lmax,
        flow: cfg.flow,
        drift_points: cfg.points,
    };
    let report = run_verify(&cfg.params, &cfg.tol, &opts)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    let out = a
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT));
    write_file(&out, json.as_bytes())?;
    print!("{}", summary_table(&report));
    Ok(match report.verdict {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_CHECKS_FAILED,
    })
}

pub fn flow(a: &FlowArgs) -> Result<u8, CliError> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_flow(&mut cfg, &a.flow)?;
    let x0 = PhasePoint::new(a.q, a.p);
    let traj = integrate(&x0, &cfg.params, &cfg.flow)?;
    let report = drift_report(&traj, a.lmax);

    let mut csv = String::from("t,q1,q2,q3,q4,p1,p2,p3,p4");
    for n in &report.names {
        csv.push(',');
        csv.push_str(n);
    }
    csv.push('\n');
    for row in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            csv_float(row.t),
            join(&row.point.q, |v| csv_float(*v)),
            join(&row.point.p, |v| csv_float(*v)),
            join(&row.values, |v| csv_float(*v))
        );
    }
    if let Termination::DomainExit { t } = traj.termination {
        let _ = writeln!(csv, "DomainExit,{}", csv_float(t));
    }

    let mut summary = String::from("drift:");
    for (n, d) in report.names.iter().zip(&report.drift) {
        let _ = write!(summary, " {n}={d:.3e}");
    }
    match &a.common.out {
        Some(path) => {
            write_file(path, csv.as_bytes())?;
            println!("{summary}");
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(csv.as_bytes());
            eprintln!("{summary}");
        }
    }
    if let Termination::DomainExit { t } = traj.termination {
        eprintln!("error: p1 <= 0 reached at t = {t}");
        return Ok(EXIT_DOMAIN);
    }
    Ok(EXIT_PASS)
}

pub fn transform(a: &TransformArgs) -> Result<u8, CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let g = |v: &f64| g17(*v);
    if a.inverse {
        let x = from_canonical(&CanonicalPoint::new(a.q, a.p), &cfg.params)?;
        println!("q = {}", join(&x.q, g));
        println!("p = {}", join(&x.p, g));
    } else {
        let y = to_canonical(&PhasePoint::new(a.q, a.p), &cfg.params)?;
        println!("Q = {}", join(&y.coords, g));
        println!("P = {}", join(&y.momenta, g));
    }
    Ok(EXIT_PASS)
}

/// One scan cell: the six spatial parameters in `SCAN_PARAMS` order.
fn cell_values(active: &[usize], mut index: usize) -> [f64; 6] {
    let mut v = [0.0; 6];
    for &k in active.iter().rev() {
        v[k] = SCAN_VALUES[index % SCAN_VALUES.len()];
        index /= SCAN_VALUES.len();
    }
    v
}

pub struct ScanRow {
    pub values: [f64; 6],
    pub theta: [f64; 3],
    pub cond2: f64,
    pub max_torsion: f64,
    pub max_drift: f64,
}

fn nan_max(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

fn scan_cell(
    values: [f64; 6],
    points: &[PhasePoint],
    cfg: &RunConfig,
    orientation: Orientation,
    lmax: usize,
) -> Result<ScanRow, CliError> {
    let entries = SCAN_PARAMS
        .iter()
        .zip(values)
        .map(|(&k, v)| (k, v))
        .collect();
    let params: DeformationParams = build_params(&entries)?;
    let th = theta(&params)?.0;
    let cond2 = condition2_check(&params)?.residual;

    let flat = params.lambda_vanishes();
    let t = OriginalRecursion::new(&params, BlockVariant::Verbatim, orientation);
    let field = hamiltonian_vector_field(&params)?;
    let mut max_torsion = 0.0;
    let mut max_drift = 0.0;
    for x in points {
        if flat || !x.p[1..].iter().any(|p| p.abs() < PK_GUARD) {
            let n = nijenhuis(&t, &x.to_vec8()).map_or(f64::NAN, |n| n.max_abs());
            max_torsion = nan_max(max_torsion, n);
        }
        let d = trajectory_drift(&field, &params, x, &cfg.flow, lmax).unwrap_or(f64::NAN);
        max_drift = nan_max(max_drift, d);
    }
    Ok(ScanRow {
        values,
        theta: [th[1], th[2], th[3]],
        cond2,
        max_torsion,
        max_drift,
    })
}

pub const SCAN_HEADER: &str = "lambda23,lambda24,lambda34,alpha23,alpha24,alpha34,theta2,theta3,theta4,cond2_residual,max_torsion_original,max_drift";

pub fn scan_csv(cfg: &RunConfig, max_cells: usize, lmax: usize) -> Result<String, CliError> {
    ncphase_core::recursion::check_lmax(lmax)?;
    let mut active = cfg.active_parameters();
    if active.is_empty() {
        active = (0..SCAN_PARAMS.len()).collect();
    }
    let cells = SCAN_VALUES
        .len()
        .checked_pow(active.len() as u32)
        .expect("at most 5^6 cells");
    if cells > max_cells {
        return Err(CliError::Usage(format!(
            "grid has {cells} cells, above --max-cells {max_cells}"
        )));
    }
    let points = sample_points(cfg.seed, cfg.points);
    let orientation = choose_orientation(cfg.seed, cfg.points.clamp(1, 100))?.orientation;
    let rows: Vec<ScanRow> = (0..cells)
        .into_par_iter()
        .map(|i| scan_cell(cell_values(&active, i), &points, cfg, orientation, lmax))
        .collect::<Result<_, _>>()?;

    let mut csv = String::from(SCAN_HEADER);
    csv.push('\n');
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            join(&r.values, |v| csv_float(*v)),
            join(&r.theta, |v| csv_float(*v)),
            csv_float(r.cond2),
            csv_float(r.max_torsion),
            csv_float(r.max_drift)
        );
    }
    Ok(csv)
}

pub fn scan(a: &ScanArgs) -> Result<u8, CliError> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_sampling(&mut cfg, a.points, a.seed)?;
    apply_flow(&mut cfg, &a.flow)?;
    let csv = scan_csv(&cfg, a.max_cells, a.lmax)?;
    match &a.common.out {
        Some(path) => write_file(path, csv.as_bytes())?,
        None => {
            let _ = std::io::stdout().lock().write_all(csv.as_bytes());
        }
    }
    Ok(EXIT_PASS)
}
