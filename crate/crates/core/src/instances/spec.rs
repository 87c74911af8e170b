//! Instance descriptions read from TOML or JSON, and short instance names.

use serde::{Deserialize, Serialize};

use super::formula::parse_formula;
use super::{
    catalog, solve_ma_torus_2d, BoxDomain, DensitySpec, PotentialInstance, TorusOptions,
    Transport1d,
};
use crate::error::{Error, Result};

/// One instance in a config file. `name` is a catalog name, `transport1d`
/// (with `source`/`target`) or `torus2d` (with `vpert`/`wpert`/`grid`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
    /// Overrides the sampling box.
    #[serde(default, rename = "box")]
    pub sample_box: Option<BoxDomain>,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub vpert: Option<String>,
    #[serde(default)]
    pub wpert: Option<String>,
}

impl InstanceSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses a short name: `orthant2`, `sine1d(2)`, `manufactured(3,7)`,
    /// `transport:gauss->quartic`, or a bare catalog name.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        if let Some(rest) = name.strip_prefix("transport:") {
            let (s, t) = rest.split_once("->").ok_or_else(|| {
                Error::Config(format!(
                    "expected transport:<source>-><target>, got {name:?}"
                ))
            })?;
            return Ok(InstanceSpec {
                name: "transport1d".into(),
                source: Some(s.into()),
                target: Some(t.into()),
                ..Default::default()
            });
        }
        if let Some((base, args)) = name.split_once('(') {
            let args = args
                .strip_suffix(')')
                .ok_or_else(|| Error::Config(format!("unbalanced parentheses in {name:?}")))?;
            let params = args
                .split(',')
                .filter(|a| !a.trim().is_empty())
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad parameter {a:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(InstanceSpec {
                name: base.trim().into(),
                params,
                ..Default::default()
            });
        }
        // trailing dimension, as in `orthant2` or `quadratic_id3`
        for base in ["quadratic_id", "orthant", "manufactured"] {
            if let Some(d) = name.strip_prefix(base) {
                if let Ok(k) = d.parse::<f64>() {
                    return Ok(InstanceSpec {
                        name: base.into(),
                        params: vec![k],
                        ..Default::default()
                    });
                }
            }
        }
        Ok(InstanceSpec {
            name: name.into(),
            ..Default::default()
        })
    }

    pub fn build(&self) -> Result<PotentialInstance> {
        let mut inst = match self.name.as_str() {
            "transport1d" => {
                let s: DensitySpec = self.source.as_deref().unwrap_or("gauss").parse()?;
                let t: DensitySpec = self.target.as_deref().unwrap_or("gauss").parse()?;
                Transport1d::new(s, t)?.instance(5)?
            }
            "torus2d" => {
                let v = parse_formula(self.vpert.as_deref().unwrap_or("0"), 2)?;
                let w = parse_formula(self.wpert.as_deref().unwrap_or("0"), 2)?;
                let opts = TorusOptions {
                    grid: self.grid.unwrap_or(64),
                    ..Default::default()
                };
                solve_ma_torus_2d(v, w, opts)?.0
            }
            other => catalog(other, &self.params)?,
        };
        if let Some(b) = &self.sample_box {
            if b.lo.len() != inst.n || b.hi.len() != inst.n {
                return Err(Error::Config(format!(
                    "box for {} must have {} coordinates",
                    inst.name, inst.n
                )));
            }
            if !inst.support.contains_open(&b.lo) || !inst.support.contains_open(&b.hi) {
                return Err(Error::Config(format!(
                    "box for {} leaves the domain of the potentials",
                    inst.name
                )));
            }
            inst.domain = b.clone();
        }
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_names() {
        assert_eq!(
            InstanceSpec::from_name("orthant2").unwrap().params,
            vec![2.0]
        );
        let s = InstanceSpec::from_name("manufactured(3, 7)").unwrap();
        assert_eq!(
            (s.name.as_str(), s.params),
            ("manufactured", vec![3.0, 7.0])
        );
        let t = InstanceSpec::from_name("transport:gauss->gauss:0.25").unwrap();
        assert_eq!(t.target.as_deref(), Some("gauss:0.25"));
        assert_eq!(
            InstanceSpec::from_name("sine1d")
                .unwrap()
                .build()
                .unwrap()
                .n,
            1
        );
        assert!(InstanceSpec::from_name("nothing").unwrap().build().is_err());
    }

    #[test]
    fn config_files() {
        let s = InstanceSpec::from_toml(
            "name = \"orthant\"\nparams = [2]\nbox = { lo = [1.0, 1.0], hi = [2.0, 2.0] }\n",
        )
        .unwrap();
        let inst = s.build().unwrap();
        assert_eq!(inst.domain.lo, vec![1.0, 1.0]);
        let j = InstanceSpec::from_json(r#"{"name": "sine1d", "params": [2.0]}"#).unwrap();
        assert_eq!(j.build().unwrap().name, "sine1d");
        assert!(InstanceSpec::from_toml("name = \"orthant\"\nbogus = 1\n").is_err());
        let bad = InstanceSpec::from_toml(
            "name = \"orthant\"\nbox = { lo = [-1.0, 1.0], hi = [2.0, 2.0] }\n",
        )
        .unwrap();
        assert!(bad.build().is_err());
    }
}
