//! Flat binary export of an instance sampled on a regular grid.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PotentialInstance;
use crate::error::{Error, Result};

/// Sidecar describing the binary file: `fields.len()` consecutive blocks of
/// little-endian `f64`, each row-major over `shape`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub name: String,
    pub n: usize,
    pub shape: Vec<usize>,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub fields: Vec<String>,
    pub dtype: String,
    pub order: String,
}

/// Writes `Φ`, `V` and `W(∇Φ)` on a grid spanning the sampling box (end
/// points included) to `<stem>.bin` and `<stem>.json`.
pub fn export_grid(
    inst: &PotentialInstance,
    points_per_axis: usize,
    stem: &Path,
) -> Result<GridHeader> {
    if points_per_axis < 2 {
        return Err(Error::Config(
            "export grid needs at least 2 points per axis".into(),
        ));
    }
    let n = inst.n;
    let shape = vec![points_per_axis; n];
    let total = points_per_axis.pow(n as u32);
    let (lo, hi) = (&inst.domain.lo, &inst.domain.hi);
    let mut blocks: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(total)).collect();
    for flat in 0..total {
        let mut r = flat;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let k = r % points_per_axis;
            r /= points_per_axis;
            x[i] = lo[i] + (hi[i] - lo[i]) * k as f64 / (points_per_axis - 1) as f64;
        }
        let phi = inst.phi_jet(&x, 1)?;
        let y: Vec<f64> = (0..n).map(|i| phi.partial(&[i])).collect();
        blocks[0].push(phi.value());
        blocks[1].push(inst.v_jet(&x, 0)?.value());
        blocks[2].push(inst.w_jet(&y, 0)?.value());
    }
    let bytes: Vec<u8> = blocks
        .iter()
        .flatten()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    let header = GridHeader {
        name: inst.name.clone(),
        n,
        shape,
        box_lo: lo.clone(),
        box_hi: hi.clone(),
        fields: vec!["phi".into(), "v".into(), "w_of_grad_phi".into()],
        dtype: "f64-le".into(),
        order: "row-major".into(),
    };
    fs::write(stem.with_extension("bin"), bytes)?;
    let json = serde_json::to_string_pretty(&header).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(stem.with_extension("json"), json)?;
    Ok(header)
}
