//! Suite configuration and the runner.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bounds, check_bound, check_identity, diagram_assertions, identities, CheckResult, Report,
};
use super::{BOUND_IDS, DIAGRAM_IDS, IDENTITY_IDS};
use crate::error::{Error, Result};
use crate::instances::{InstanceSpec, PotentialInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Bounds,
    Diagrams,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "bounds" => Ok(Suite::Bounds),
            "diagrams" => Ok(Suite::Diagrams),
            "all" => Err(Error::Config("\"all\" is not a single suite".into())),
            other => Err(Error::Config(format!(
                "unknown suite {other:?}; expected identities, bounds or diagrams"
            ))),
        }
    }
}

/// An instance given by short name (`"sine1d(2)"`) or as a full spec table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceRef {
    Name(String),
    Spec(InstanceSpec),
}

impl InstanceRef {
    fn build(&self) -> Result<PotentialInstance> {
        match self {
            InstanceRef::Name(n) => InstanceSpec::from_name(n)?.build(),
            InstanceRef::Spec(s) => s.build(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub name: String,
    pub suites: Vec<Suite>,
    /// Instances for every suite; empty means the built-in choice per suite.
    pub instances: Vec<InstanceRef>,
    /// Check ids to run; empty means every id that applies.
    pub ids: Vec<String>,
    pub points: Option<usize>,
    pub tol: Option<f64>,
    /// Finite-difference step; default scales with the point.
    pub step: Option<f64>,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            name: "default".into(),
            suites: vec![Suite::Identities, Suite::Bounds, Suite::Diagrams],
            instances: Vec::new(),
            ids: Vec::new(),
            points: None,
            tol: None,
            step: None,
            seed: 42,
            jobs: 1,
        }
    }
}

const IDENTITY_INSTANCES: &[&str] = &[
    "quadratic_id2",
    "manufactured(2,42)",
    "orthant2",
    "sine1d(1)",
];
const BOUND_INSTANCES: &[&str] = &[
    "orthant2",
    "sine1d(1)",
    "gauss_pair_1d(0.5)",
    "transport:gauss->gauss:0.25",
    "transport:gauss->quartic",
    "transport:gauss->logcosh:1",
    "transport:logcosh:0.8->gauss:0.5",
];

fn default_points(suite: Suite, id: &str) -> usize {
    match (suite, id) {
        (Suite::Identities, _) => 20,
        (_, "caffarelli2") => 100,
        _ => 50,
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `.json` as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.points == Some(0) {
            return Err(Error::Config("points must be at least 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0) {
                return Err(Error::Config(format!(
                    "tolerance must be nonnegative, got {t}"
                )));
            }
        }
        for id in &self.ids {
            let known = IDENTITY_IDS.contains(&id.as_str())
                || BOUND_IDS.contains(&id.as_str())
                || DIAGRAM_IDS.contains(&id.as_str());
            if !known {
                return Err(Error::Config(format!("unknown check id {id:?}")));
            }
        }
        Ok(())
    }
}

struct Job {
    suite: Suite,
    id: &'static str,
    inst: usize,
}

/// Runs the configured suites. Check failures are recorded in the report;
/// only configuration problems are errors. Results do not depend on `jobs`.
pub fn run_suite(config: &SuiteConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let explicit_instances = !config.instances.is_empty();
    let explicit_ids = !config.ids.is_empty();

    // One shared, ordered instance list.
    let mut refs: Vec<InstanceRef> = Vec::new();
    let mut per_suite: Vec<(Suite, Vec<usize>)> = Vec::new();
    let index_of = |r: InstanceRef, refs: &mut Vec<InstanceRef>| -> usize {
        match refs.iter().position(|x| *x == r) {
            Some(i) => i,
            None => {
                refs.push(r);
                refs.len() - 1
            }
        }
    };
    let mut suites = config.suites.clone();
    suites.sort();
    suites.dedup();
    for &s in &suites {
        let list: Vec<InstanceRef> = if explicit_instances {
            config.instances.clone()
        } else {
            let names = match s {
                Suite::Identities => IDENTITY_INSTANCES,
                Suite::Bounds => BOUND_INSTANCES,
                Suite::Diagrams => &[],
            };
            names
                .iter()
                .map(|n| InstanceRef::Name(n.to_string()))
                .collect()
        };
        let idx = list.into_iter().map(|r| index_of(r, &mut refs)).collect();
        per_suite.push((s, idx));
    }
    let instances: Vec<PotentialInstance> =
        refs.iter().map(InstanceRef::build).collect::<Result<_>>()?;

    let wanted = |id: &str| !explicit_ids || config.ids.iter().any(|x| x == id);
    let mut jobs = Vec::new();
    let mut want_diagrams = false;
    for (s, idx) in &per_suite {
        let ids: &[&'static str] = match s {
            Suite::Identities => IDENTITY_IDS,
            Suite::Bounds => BOUND_IDS,
            Suite::Diagrams => {
                want_diagrams = DIAGRAM_IDS.iter().any(|id| wanted(id));
                continue;
            }
        };
        for &id in ids.iter().filter(|id| wanted(id)) {
            for &i in idx {
                let inst = &instances[i];
                let applies = match s {
                    Suite::Identities => identities::not_applicable(id, inst).is_none(),
                    _ => bounds::not_applicable(id, inst).is_none(),
                };
                // explicitly requested pairs are reported even when skipped
                if applies || (explicit_ids && explicit_instances) {
                    jobs.push(Job {
                        suite: *s,
                        id,
                        inst: i,
                    });
                }
            }
        }
    }

    let run_job = |j: &Job| -> Result<CheckResult> {
        let inst = &instances[j.inst];
        let sample = inst.sample(
            config
                .points
                .unwrap_or_else(|| default_points(j.suite, j.id)),
            config.seed,
        );
        match j.suite {
            Suite::Identities => check_identity(j.id, inst, &sample, config.tol, config.step),
            _ => check_bound(j.id, inst, &sample, config.tol, config.step),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut checks: Vec<CheckResult> =
        pool.install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>())?;
    if want_diagrams {
        checks.extend(diagram_assertions().into_iter().filter(|c| wanted(&c.id)));
    }

    let suite_name = if config.name.is_empty() {
        suites
            .iter()
            .map(|s| format!("{s:?}").to_lowercase())
            .collect::<Vec<_>>()
            .join("+")
    } else {
        config.name.clone()
    };
    Ok(Report {
        suite: suite_name,
        seed: config.seed,
        build: format!(
            "calabi-core {}{}",
            env!("CARGO_PKG_VERSION"),
            option_env!("CALABI_BUILD_STAMP")
                .map(|s| format!("+{s}"))
                .unwrap_or_default()
        ),
        instances: instances.iter().map(|i| i.name.clone()).collect(),
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
