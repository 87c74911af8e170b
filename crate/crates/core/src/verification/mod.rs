//! Numerical checks of the identities and inequalities, and the suite
//! runner that aggregates them into reports.

mod bounds;
mod closed_forms;
mod diagrams;
mod identities;
mod suite;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use bounds::{check_bound, BOUND_IDS};
pub use closed_forms::closed_form;
pub use diagrams::{diagram_assertions, DIAGRAM_IDS};
pub use identities::{check_identity, IDENTITY_IDS};
pub use suite::{run_suite, InstanceRef, Suite, SuiteConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        })
    }
}

/// One sample point of a check: the scaled residual and the quantity
/// the check is about (an eigenvalue, a norm, a component).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub residual: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub instance: String,
    pub points: usize,
    pub max_abs_residual: f64,
    pub worst_point: Vec<f64>,
    pub tolerance: f64,
    pub status: Status,
    pub notes: String,
    #[serde(skip)]
    pub samples: Vec<PointRecord>,
}

impl CheckResult {
    /// Builds a result from per-point records; a NaN residual counts as a failure.
    pub fn from_records(
        id: &str,
        instance: &str,
        tol: f64,
        samples: Vec<PointRecord>,
        notes: String,
    ) -> Self {
        let mut worst = 0.0;
        let mut worst_point = Vec::new();
        let mut nan = false;
        for r in &samples {
            if r.residual.is_nan() {
                nan = true;
                worst_point = r.x.clone();
            } else if r.residual >= worst && !nan {
                worst = r.residual;
                worst_point = r.x.clone();
            }
        }
        let max_abs_residual = if nan { f64::NAN } else { worst };
        let status = if !nan && max_abs_residual <= tol {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckResult {
            id: id.into(),
            instance: instance.into(),
            points: samples.len(),
            max_abs_residual,
            worst_point,
            tolerance: tol,
            status,
            notes,
            samples,
        }
    }

    pub fn skipped(id: &str, instance: &str, tol: f64, why: impl Into<String>) -> Self {
        CheckResult {
            id: id.into(),
            instance: instance.into(),
            points: 0,
            max_abs_residual: 0.0,
            worst_point: Vec::new(),
            tolerance: tol,
            status: Status::Skipped,
            notes: why.into(),
            samples: Vec::new(),
        }
    }

    pub fn failed(id: &str, instance: &str, tol: f64, why: impl Into<String>) -> Self {
        CheckResult {
            status: Status::Fail,
            max_abs_residual: f64::NAN,
            ..Self::skipped(id, instance, tol, why)
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub build: String,
    pub instances: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Same JSON with the wall time zeroed, for comparing runs.
    pub fn to_json_stable(&self) -> String {
        Report {
            wall_time_s: 0.0,
            ..self.clone()
        }
        .to_json()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "id,instance,points,max_abs_residual,worst_point,tolerance,status,notes\n",
        );
        for c in &self.checks {
            let wp: Vec<String> = c.worst_point.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(
                s,
                "{},{},{},{:e},{},{:e},{},{}",
                csv_field(&c.id),
                csv_field(&c.instance),
                c.points,
                c.max_abs_residual,
                csv_field(&wp.join(" ")),
                c.tolerance,
                c.status,
                csv_field(&c.notes)
            );
        }
        s
    }

    /// Residual and checked value at every sample point, one row each.
    pub fn points_csv(&self) -> String {
        let mut s = String::from("id,instance,point,residual,value\n");
        for c in &self.checks {
            for r in &c.samples {
                let x: Vec<String> = r.x.iter().map(|v| format!("{v:e}")).collect();
                let _ = writeln!(
                    s,
                    "{},{},{},{:e},{:e}",
                    csv_field(&c.id),
                    csv_field(&c.instance),
                    csv_field(&x.join(" ")),
                    r.residual,
                    r.value
                );
            }
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_tolerance() {
        let rec = |r: f64| PointRecord {
            x: vec![r],
            residual: r,
            value: 0.0,
        };
        let c =
            CheckResult::from_records("x", "i", 1e-3, vec![rec(1e-4), rec(5e-4)], String::new());
        assert_eq!(
            (c.status, c.worst_point.clone()),
            (Status::Pass, vec![5e-4])
        );
        let c = CheckResult::from_records(
            "x",
            "i",
            1e-3,
            vec![rec(1e-4), rec(f64::NAN)],
            String::new(),
        );
        assert_eq!(c.status, Status::Fail);
    }

    #[test]
    fn csv_quotes() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
