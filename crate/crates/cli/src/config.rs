//! Run configuration: a line-oriented `key = value` format.
//!
//! ```text
//! # deformation
//! lambda.2.3 = 0.1
//! alpha.2.3 = 0.2
//! seed = 42
//! points = 1000
//! tol.drift = 1e-10
//! flow.method = implicit-midpoint
//! flow.t_end = 20
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ncphase_core::flow::{IntegratorConfig, Method};
use ncphase_core::verify::Tolerances;
use ncphase_core::DeformationParams;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error(transparent)]
    Params(#[from] ncphase_core::Error),
}

/// Which of the two deformation matrices a dotted key addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Matrix {
    Lambda,
    Alpha,
}

impl Matrix {
    fn prefix(self) -> &'static str {
        match self {
            Matrix::Lambda => "lambda",
            Matrix::Alpha => "alpha",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: DeformationParams,
    /// Matrix entries as written, keyed by `(matrix, i, j)`.
    pub entries: BTreeMap<(Matrix, usize, usize), f64>,
    pub seed: u64,
    pub points: usize,
    pub tol: Tolerances,
    pub tol_overrides: BTreeMap<String, f64>,
    pub flow: IntegratorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: DeformationParams::zero(),
            entries: BTreeMap::new(),
            seed: 0,
            points: 1000,
            tol: Tolerances::default(),
            tol_overrides: BTreeMap::new(),
            flow: IntegratorConfig::default(),
        }
    }
}

fn parse_matrix_key(key: &str) -> Option<(Matrix, usize, usize)> {
    let mut parts = key.split('.');
    let matrix = match parts.next()? {
        "lambda" => Matrix::Lambda,
        "alpha" => Matrix::Alpha,
        _ => return None,
    };
    let i = parts.next()?.parse().ok()?;
    let j = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((matrix, i, j))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if seen.insert(key.to_string(), line).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        let invalid = || ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        let float = || {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(invalid)
        };

        if key.starts_with("lambda.") || key.starts_with("alpha.") {
            let entry = parse_matrix_key(key).ok_or_else(|| ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })?;
            cfg.entries.insert(entry, float()?);
            continue;
        }
        if let Some(name) = key.strip_prefix("tol.") {
            let v = float()?;
            if v <= 0.0 {
                return Err(invalid());
            }
            *cfg.tol
                .get_mut(name)
                .ok_or_else(|| ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })? = v;
            cfg.tol_overrides.insert(name.to_string(), v);
            continue;
        }
        match key {
            "seed" => cfg.seed = value.parse().map_err(|_| invalid())?,
            "points" => cfg.points = value.parse().ok().filter(|&p| p > 0).ok_or_else(invalid)?,
            "flow.method" => cfg.flow.method = value.parse::<Method>().map_err(|_| invalid())?,
            "flow.t_end" => cfg.flow.t_end = float()?,
            "flow.dt" => cfg.flow.dt = float()?,
            "flow.rel_tol" => cfg.flow.rel_tol = float()?,
            "flow.abs_tol" => cfg.flow.abs_tol = float()?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    cfg.params = build_params(&cfg.entries)?;
    cfg.flow.validate()?;
    Ok(cfg)
}

pub fn build_params(
    entries: &BTreeMap<(Matrix, usize, usize), f64>,
) -> Result<DeformationParams, ConfigError> {
    let pick = |m: Matrix| -> Vec<(usize, usize, f64)> {
        entries
            .iter()
            .filter(|((mm, _, _), _)| *mm == m)
            .map(|(&(_, i, j), &v)| (i, j, v))
            .collect()
    };
    Ok(DeformationParams::from_entries(
        &pick(Matrix::Lambda),
        &pick(Matrix::Alpha),
    )?)
}

impl RunConfig {
    /// Canonical text form: matrix entries as written, then every scalar
    /// (defaults included), then tolerance overrides, floats in shortest
    /// round-trip notation. Parsing the output reproduces `self`.
    pub fn normalized(&self) -> String {
        let mut out = String::new();
        for (&(m, i, j), v) in &self.entries {
            let _ = writeln!(out, "{}.{i}.{j} = {v:?}", m.prefix());
        }
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "points = {}", self.points);
        let _ = writeln!(out, "flow.method = {}", self.flow.method.name());
        let _ = writeln!(out, "flow.t_end = {:?}", self.flow.t_end);
        let _ = writeln!(out, "flow.dt = {:?}", self.flow.dt);
        let _ = writeln!(out, "flow.rel_tol = {:?}", self.flow.rel_tol);
        let _ = writeln!(out, "flow.abs_tol = {:?}", self.flow.abs_tol);
        for (name, v) in &self.tol_overrides {
            let _ = writeln!(out, "tol.{name} = {v:?}");
        }
        out
    }

    /// The spatial parameters present in the file, in the fixed order
    /// λ23, λ24, λ34, α23, α24, α34 (indices into that list).
    pub fn active_parameters(&self) -> Vec<usize> {
        const ORDER: [(Matrix, usize, usize); 6] = [
            (Matrix::Lambda, 2, 3),
            (Matrix::Lambda, 2, 4),
            (Matrix::Lambda, 3, 4),
            (Matrix::Alpha, 2, 3),
            (Matrix::Alpha, 2, 4),
            (Matrix::Alpha, 3, 4),
        ];
        ORDER
            .iter()
            .enumerate()
            .filter(|(_, &(m, i, j))| {
                self.entries.contains_key(&(m, i, j)) || self.entries.contains_key(&(m, j, i))
            })
            .map(|(k, _)| k)
            .collect()
    }
}
