//! Identity checks: a finite-difference Laplacian on one side, a closed
//! form evaluated from derivative arrays on the other.

use nalgebra::DMatrix;

use super::closed_forms::closed_form;
use super::{CheckResult, PointRecord};
use crate::error::{Error, Result};
use crate::geometry::{
    curvature_pack, evaluate_diagram, metric_pack, symmetric_product,
    weighted_laplacian_components_fd, weighted_laplacian_fd, PointData, TensorEval,
};
use crate::instances::{PotentialInstance, Tag};
use crate::jet::Jet;

pub const IDENTITY_IDS: &[&str] = &[
    "d1",
    "d2",
    "d3",
    "lf_i",
    "cor32",
    "lphi3",
    "lg",
    "lg_hke",
    "g_ric_relation",
    "zerohess",
    "rxx_zero",
];

pub(crate) fn default_tolerance(id: &str) -> f64 {
    match id {
        "zerohess" | "rxx_zero" | "g_ric_relation" => 1e-9,
        _ => 1e-6,
    }
}

/// Why an identity does not apply to an instance, if it does not.
pub(crate) fn not_applicable(id: &str, inst: &PotentialInstance) -> Option<String> {
    match id {
        "lg_hke" | "g_ric_relation" if !inst.has_tag(Tag::KeHyperbolic) => {
            Some("needs a KE-hyperbolic instance".into())
        }
        "g_ric_relation" if inst.alpha.is_none() => Some("instance has no alpha".into()),
        "zerohess" | "rxx_zero" if !inst.has_tag(Tag::Cone) => Some("needs a cone instance".into()),
        _ => None,
    }
}

fn phi_field(inst: &PotentialInstance, k: usize) -> impl Fn(&[f64]) -> Result<TensorEval> + '_ {
    move |y: &[f64]| {
        let j = inst.phi_jet(y, k)?;
        Ok(TensorEval {
            n: inst.n,
            order: k,
            data: j.derivative_array(k),
            point: y.to_vec(),
        })
    }
}

/// Smooth test function for the Laplacian of a gradient.
fn test_function(x: &[Jet]) -> Jet {
    let n = x.len();
    let lin: Jet = x
        .iter()
        .enumerate()
        .map(|(i, xi)| xi * (0.7 - 0.3 * i as f64))
        .sum();
    let quad: Jet = x
        .iter()
        .enumerate()
        .map(|(i, xi)| xi * xi * (0.4 + 0.1 * i as f64))
        .sum();
    let cross = if n > 1 {
        &x[0] * &x[n - 1] * 0.5
    } else {
        Jet::constant(1, x[0].order(), 0.0)
    };
    (lin + 0.3).sin() + quad + cross + (x.iter().map(|xi| xi * 0.2).sum::<Jet>()).exp()
}

fn raise(pd: &PointData, v: &[f64]) -> Vec<f64> {
    (0..pd.n)
        .map(|k| (0..pd.n).map(|l| pd.h_inv[(k, l)] * v[l]).sum())
        .collect()
}

/// `(L df)_i` written out from the derivatives of `f`, `Φ`, `V` and `W`.
fn lf_closed_form(inst: &PotentialInstance, x: &[f64]) -> Result<TensorEval> {
    let n = inst.n;
    let pd = PointData::new(inst, x, 3, 2, 2)?;
    let f = test_function(&Jet::vars(x, 3));
    let f1 = f.derivative_array(1);
    let f2 = f.derivative_array(2);
    let f3 = f.derivative_array(3);
    let p3 = &pd.phi[3];
    let hi = &pd.h_inv;
    let g = metric_pack(inst, x)?.g;
    let f_up = raise(&pd, &f1);
    let mut out = TensorEval::zeros(n, 1, x);
    for i in 0..n {
        let mut s = 0.0;
        for m in 0..n {
            for k in 0..n {
                s += hi[(m, k)] * f3[(i * n + m) * n + k];
                let mut up = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        up += p3[(i * n + a) * n + b] * hi[(a, m)] * hi[(b, k)];
                    }
                }
                s -= up * f2[m * n + k];
            }
            s -= pd.w_nat[1][m] * f2[m * n + i];
        }
        for k in 0..n {
            s += 0.5 * (pd.v[2][i * n + k] - pd.w_low[2][i * n + k]) * f_up[k];
            s += 0.25 * g[(i, k)] * f_up[k];
        }
        out.data[i] = s;
    }
    Ok(out)
}

/// Scaled residual and the size of the compared quantity at one point.
fn point(id: &str, inst: &PotentialInstance, x: &[f64], step: Option<f64>) -> Result<(f64, f64)> {
    let form =
        |name: &str| evaluate_diagram(closed_form(name).expect("known closed form"), inst, x);
    let compare = |lhs: TensorEval, rhs: TensorEval| -> Result<(f64, f64)> {
        Ok((lhs.scaled_residual(&rhs)?, rhs.max_abs()))
    };
    match id {
        "d1" => {
            let lhs = weighted_laplacian_components_fd(inst, phi_field(inst, 1), x, step)?;
            let a = compare(lhs.clone(), form("d1")?)?;
            let b = compare(lhs, form("d1_alt")?)?;
            Ok((a.0.max(b.0), a.1))
        }
        "d2" => compare(
            weighted_laplacian_components_fd(inst, phi_field(inst, 2), x, step)?,
            form("d2")?,
        ),
        "d3" => {
            let rhs = form("d3")?;
            compare(
                weighted_laplacian_components_fd(inst, phi_field(inst, 3), x, step)?,
                rhs,
            )
        }
        "lf_i" => {
            let rhs = lf_closed_form(inst, x)?;
            let field = |y: &[f64]| {
                let f = test_function(&Jet::vars(y, 1));
                Ok(TensorEval {
                    n: inst.n,
                    order: 1,
                    data: f.derivative_array(1),
                    point: y.to_vec(),
                })
            };
            compare(weighted_laplacian_fd(inst, field, x, step)?, rhs)
        }
        "cor32" => compare(
            weighted_laplacian_fd(inst, phi_field(inst, 1), x, step)?,
            form("cor32")?,
        ),
        "lphi3" => compare(
            weighted_laplacian_fd(inst, phi_field(inst, 3), x, step)?,
            form("lphi3")?,
        ),
        "lg" => {
            let rhs = form("lg")?;
            compare(weighted_laplacian_fd(inst, g_field(inst), x, step)?, rhs)
        }
        "lg_hke" => {
            let c = curvature_pack(inst, x)?;
            let odot = symmetric_product(&c.metric.g, &c.ricci_mu, &c.metric.h_inv)?;
            let mut rhs = form("lg_tail")?;
            rhs.axpy(2.0, &TensorEval::from_matrix(&odot, x));
            compare(weighted_laplacian_fd(inst, g_field(inst), x, step)?, rhs)
        }
        "g_ric_relation" => {
            let c = curvature_pack(inst, x)?;
            let alpha = inst
                .alpha
                .ok_or_else(|| Error::Config("instance has no alpha".into()))?;
            let rhs = &c.ricci_mu_hessian * 4.0 - &c.metric.h * (2.0 * alpha);
            compare(
                TensorEval::from_matrix(&c.metric.g, x),
                TensorEval::from_matrix(&rhs, x),
            )
        }
        "zerohess" => {
            let t = form("zerohess")?;
            Ok((t.max_abs(), t.max_abs()))
        }
        "rxx_zero" => {
            let c = curvature_pack(inst, x)?;
            let n = inst.n;
            let m = DMatrix::from_fn(n, n, |i, j| {
                let mut s = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        s += c.riemann_at(i, k, j, l) * x[k] * x[l];
                    }
                }
                s
            });
            Ok((m.abs().max(), m.abs().max()))
        }
        other => Err(Error::Config(format!("unknown identity id {other:?}"))),
    }
}

fn g_field(inst: &PotentialInstance) -> impl Fn(&[f64]) -> Result<TensorEval> + '_ {
    move |y: &[f64]| Ok(TensorEval::from_matrix(&metric_pack(inst, y)?.g, y))
}

/// Runs identity `id` on the given points. Unknown ids are a configuration
/// error; everything else ends up in the result.
pub fn check_identity(
    id: &str,
    inst: &PotentialInstance,
    sample: &[Vec<f64>],
    tol: Option<f64>,
    step: Option<f64>,
) -> Result<CheckResult> {
    if !IDENTITY_IDS.contains(&id) {
        return Err(Error::Config(format!("unknown identity id {id:?}")));
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(id));
    if let Some(why) = not_applicable(id, inst) {
        return Ok(CheckResult::skipped(id, &inst.name, tol, why));
    }
    let mut records = Vec::with_capacity(sample.len());
    let mut first_error = None;
    for x in sample {
        match point(id, inst, x, step) {
            Ok((residual, value)) => records.push(PointRecord {
                x: x.clone(),
                residual,
                value,
            }),
            Err(e @ Error::MissingOrder { .. }) => {
                return Ok(CheckResult::skipped(id, &inst.name, tol, e.to_string()))
            }
            Err(e) => {
                first_error.get_or_insert_with(|| e.to_string());
                records.push(PointRecord {
                    x: x.clone(),
                    residual: f64::NAN,
                    value: f64::NAN,
                });
            }
        }
    }
    let mut notes = match id {
        "zerohess" | "rxx_zero" => "absolute residual of a closed form that vanishes".to_string(),
        "g_ric_relation" => {
            "g against 4 Ric_mu - 2 alpha h, Ric_mu from the Hessian of the potentials".to_string()
        }
        "lf_i" => "test function sin(l.x + 0.3) + quadratic + exp(0.2 sum x)".to_string(),
        _ => "finite-difference Laplacian against closed form, residual scaled by 1 + |rhs|"
            .to_string(),
    };
    if let Some(e) = first_error {
        notes.push_str(&format!("; error: {e}"));
    }
    if id == "lg_hke" {
        if let Some(gap) = hke_consistency(inst, sample) {
            notes.push_str(&format!(
                "; general and KE right sides differ by at most {gap:.1e}"
            ));
        }
    }
    Ok(CheckResult::from_records(
        id, &inst.name, tol, records, notes,
    ))
}

/// Largest difference between the general `L g` right side and its KE form.
fn hke_consistency(inst: &PotentialInstance, sample: &[Vec<f64>]) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for x in sample {
        let general = evaluate_diagram(closed_form("lg")?, inst, x).ok()?;
        let c = curvature_pack(inst, x).ok()?;
        let odot = symmetric_product(&c.metric.g, &c.ricci_mu, &c.metric.h_inv).ok()?;
        let mut ke = evaluate_diagram(closed_form("lg_tail")?, inst, x).ok()?;
        ke.axpy(2.0, &TensorEval::from_matrix(&odot, x));
        worst = worst.max(ke.scaled_residual(&general).ok()?);
    }
    Some(worst)
}
