//! Verification report: named checks with residuals and tolerances, and a
//! verdict that depends only on the asserted ones.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Asserted,
    Exploratory,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub point_count: usize,
    pub excluded: usize,
    /// Index of the sample attaining the residual, when the check is
    /// pointwise.
    pub worst_point: Option<usize>,
}

impl Check {
    pub fn new(name: &str, kind: CheckKind, tolerance: f64, acc: &MaxTracker) -> Self {
        Check {
            name: name.to_string(),
            kind,
            residual: acc.value,
            tolerance,
            pass: acc.value <= tolerance,
            point_count: acc.count,
            excluded: acc.excluded,
            worst_point: acc.argmax,
        }
    }

    pub fn scalar(name: &str, kind: CheckKind, tolerance: f64, residual: f64) -> Self {
        Check {
            name: name.to_string(),
            kind,
            residual,
            tolerance,
            pass: residual <= tolerance,
            point_count: 1,
            excluded: 0,
            worst_point: None,
        }
    }
}

/// Running maximum over indexed samples. Feed samples in index order for a
/// deterministic argmax; ties keep the first index. NaN counts as a failure
/// and sticks.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MaxTracker {
    pub value: f64,
    pub argmax: Option<usize>,
    pub count: usize,
    pub excluded: usize,
}

impl MaxTracker {
    pub fn push(&mut self, index: usize, v: f64) {
        self.count += 1;
        if self.value.is_nan() {
            return;
        }
        if v.is_nan() || v > self.value || self.argmax.is_none() {
            self.value = v;
            self.argmax = Some(index);
        }
    }

    pub fn exclude(&mut self) {
        self.excluded += 1;
    }

    pub fn merge(&mut self, other: &MaxTracker) {
        self.count += other.count;
        self.excluded += other.excluded;
        if self.value.is_nan() || other.argmax.is_none() {
            return;
        }
        if other.value.is_nan() || other.value > self.value || self.argmax.is_none() {
            self.value = other.value;
            self.argmax = other.argmax;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamsSummary {
    pub lambda23: f64,
    pub lambda24: f64,
    pub lambda34: f64,
    pub alpha23: f64,
    pub alpha24: f64,
    pub alpha34: f64,
    pub theta: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationSummary {
    pub chosen: String,
    pub discrepancy_direct: f64,
    pub discrepancy_transposed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub seed: u64,
    pub points: usize,
    pub params: ParamsSummary,
    pub orientation: OrientationSummary,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn verdict_of(checks: &[Check]) -> Verdict {
        if checks
            .iter()
            .filter(|c| c.kind == CheckKind::Asserted)
            .all(|c| c.pass)
        {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_asserted(&self) -> impl Iterator<Item = &Check> {
        self.checks
            .iter()
            .filter(|c| c.kind == CheckKind::Asserted && !c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_keeps_first_maximum() {
        let mut t = MaxTracker::default();
        for (i, v) in [0.0, 2.0, 1.0, 2.0].into_iter().enumerate() {
            t.push(i, v);
        }
        t.exclude();
        assert_eq!(
            (t.value, t.argmax, t.count, t.excluded),
            (2.0, Some(1), 4, 1)
        );
        t.push(9, f64::NAN);
        t.push(10, 5.0);
        assert!(t.value.is_nan());
        assert_eq!(t.argmax, Some(9));
    }

    #[test]
    fn merge_matches_sequential() {
        let vals = [0.3, 0.9, 0.1, 0.9, 0.5];
        let mut seq = MaxTracker::default();
        vals.iter().enumerate().for_each(|(i, &v)| seq.push(i, v));
        let mut a = MaxTracker::default();
        let mut b = MaxTracker::default();
        vals[..2]
            .iter()
            .enumerate()
            .for_each(|(i, &v)| a.push(i, v));
        vals[2..]
            .iter()
            .enumerate()
            .for_each(|(i, &v)| b.push(i + 2, v));
        a.merge(&b);
        assert_eq!(a, seq);
    }

    #[test]
    fn exploratory_failures_do_not_gate() {
        let checks = vec![
            Check::scalar("a", CheckKind::Asserted, 1.0, 0.5),
            Check::scalar("b", CheckKind::Exploratory, 1.0, 2.0),
        ];
        assert_eq!(VerificationReport::verdict_of(&checks), Verdict::Pass);
        let checks = vec![Check::scalar("a", CheckKind::Asserted, 1.0, 1.5)];
        assert_eq!(VerificationReport::verdict_of(&checks), Verdict::Fail);
    }
}
