//! Inequality checks. Tensor inequalities are read through the `h`-pencil:
//! `A ≥ B` means the smallest generalized eigenvalue of `(A − B, h)` is
//! nonnegative. Residuals are violations scaled by `1 +` the size of the
//! dominant term.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{CheckResult, PointRecord};
use crate::error::{Error, Result};
use crate::geometry::{
    curvature_pack, metric_pack, pencil_eigenvalues, pencil_max_eig, symmetric_product,
    weighted_laplacian_fd, weighted_laplacian_scalar_fd, PointData, TensorEval,
};
use crate::instances::{PotentialInstance, Tag, TransportConstants};

pub const BOUND_IDS: &[&str] = &[
    "ricci_mu_nonpos",
    "lric_ineq",
    "ric2n_nonneg",
    "levelset_ricci",
    "caffarelli2",
    "prop51",
    "lg_odot",
    "lp_moment",
    "g_sqrtK",
    "phi3_bound",
    "phi3_gauss",
];

pub(crate) fn default_tolerance(id: &str) -> f64 {
    match id {
        "ricci_mu_nonpos" | "ric2n_nonneg" | "levelset_ricci" => 1e-9,
        "caffarelli2" => 1e-8,
        "prop51" => 1e-5,
        _ => 1e-6,
    }
}

pub(crate) fn not_applicable(id: &str, inst: &PotentialInstance) -> Option<String> {
    let ke = inst.has_tag(Tag::KeHyperbolic);
    match id {
        "ricci_mu_nonpos" | "ric2n_nonneg" | "lg_odot" if !ke => {
            Some("needs a KE-hyperbolic instance".into())
        }
        "lric_ineq" if !ke || inst.alpha.is_none() => {
            Some("needs a KE-hyperbolic instance with alpha".into())
        }
        "levelset_ricci" if !ke || !inst.has_tag(Tag::Cone) => {
            Some("needs a KE-hyperbolic cone".into())
        }
        "levelset_ricci" if inst.n < 2 => {
            Some("level sets of a one-dimensional cone are points".into())
        }
        "caffarelli2" | "prop51" | "lp_moment" | "g_sqrtK" | "phi3_bound" | "phi3_gauss"
            if !inst.has_tag(Tag::Transport) =>
        {
            Some("needs a transport instance".into())
        }
        "lp_moment" | "g_sqrtK" if inst.n != 1 => {
            Some("whole-space integration is implemented in one dimension".into())
        }
        "phi3_bound" => inst.constants.as_ref().and_then(|k| {
            let ok = k.c_lower() > 0.0 && k.c_upper().is_finite() && k.b.is_finite();
            (!ok).then(|| "needs finite c, C and B".to_string())
        }),
        "phi3_gauss" => inst.constants.as_ref().and_then(|k| {
            k.q_norm
                .is_none()
                .then(|| "needs a Gaussian target".to_string())
        }),
        _ => None,
    }
}

fn constants(inst: &PotentialInstance) -> Result<&TransportConstants> {
    inst.constants
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} carries no convexity constants", inst.name)))
}

fn min_eig_rel(a: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    Ok(pencil_eigenvalues(a, h)?[0])
}

fn abs_norm(a: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    let ev = pencil_eigenvalues(a, h)?;
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

/// `‖g‖_h` and `‖H‖_h` at a point; `None` for `H` when `(V + W)^{(2)}` is singular.
fn norms(inst: &PotentialInstance, x: &[f64]) -> Result<(f64, Option<f64>)> {
    let c = curvature_pack(inst, x)?;
    let ng = pencil_max_eig(&c.metric.g, &c.metric.h)?;
    let nh = match &c.h_tensor {
        Some(h) => Some(pencil_max_eig(h, &c.metric.h)?),
        None => None,
    };
    Ok((ng, nh))
}

fn g_norm(inst: &PotentialInstance, x: &[f64]) -> Result<f64> {
    let m = metric_pack(inst, x)?;
    pencil_max_eig(&m.g, &m.h)
}

fn dense_line(sample: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..=240).map(|k| vec![-6.0 + 0.05 * k as f64]).collect();
    pts.extend(sample.iter().cloned());
    pts
}

/// `sup_{|e|=1} Tr[A⁻¹ (T_e)²]` for a symmetric 3-array `T` and SPD `A`
/// (`A = I` when `None`).
fn sup_trace_sq(t: &[f64], a_inv: Option<&DMatrix<f64>>, n: usize) -> f64 {
    let slice = |i: usize| DMatrix::from_fn(n, n, |p, q| t[(i * n + p) * n + q]);
    let m = DMatrix::from_fn(n, n, |i, j| {
        let prod = slice(i) * slice(j);
        match a_inv {
            Some(a) => (a * prod).trace(),
            None => prod.trace(),
        }
    });
    let m = (&m + m.transpose()) * 0.5;
    nalgebra::SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Outcome {
    records: Vec<PointRecord>,
    notes: Vec<String>,
}

fn per_point<F>(sample: &[Vec<f64>], mut f: F) -> Outcome
where
    F: FnMut(&[f64]) -> Result<(f64, f64)>,
{
    let mut notes = Vec::new();
    let records = sample
        .iter()
        .map(|x| match f(x) {
            Ok((residual, value)) => PointRecord {
                x: x.clone(),
                residual,
                value,
            },
            Err(e) => {
                if notes.is_empty() {
                    notes.push(format!("error: {e}"));
                }
                PointRecord {
                    x: x.clone(),
                    residual: f64::NAN,
                    value: f64::NAN,
                }
            }
        })
        .collect();
    Outcome { records, notes }
}

fn extreme(records: &[PointRecord], max: bool) -> f64 {
    let it = records.iter().map(|r| r.value).filter(|v| v.is_finite());
    if max {
        it.fold(f64::NEG_INFINITY, f64::max)
    } else {
        it.fold(f64::INFINITY, f64::min)
    }
}

fn run(
    id: &str,
    inst: &PotentialInstance,
    sample: &[Vec<f64>],
    step: Option<f64>,
) -> Result<Outcome> {
    let n = inst.n;
    let out = match id {
        "ricci_mu_nonpos" => {
            let mut o = per_point(sample, |x| {
                let c = curvature_pack(inst, x)?;
                let l = pencil_max_eig(&c.ricci_mu, &c.metric.h)?;
                Ok((l.max(0.0), l))
            });
            o.notes.push(format!(
                "largest eigenvalue of (Ric_mu, h) over the sample: {:.6e}",
                extreme(&o.records, true)
            ));
            o
        }
        "ric2n_nonneg" => {
            let mut o = per_point(sample, |x| {
                let c = curvature_pack(inst, x)?;
                let l = min_eig_rel(&c.ricci_mu_n(2.0 * n as f64), &c.metric.h)?;
                Ok(((-l).max(0.0), l))
            });
            o.notes.push(format!(
                "smallest eigenvalue of (Ric_mu_2n, h) over the sample: {:.6e}",
                extreme(&o.records, false)
            ));
            o
        }
        "levelset_ricci" => {
            let mut o = per_point(sample, |x| {
                let c = curvature_pack(inst, x)?;
                let pd = PointData::new(inst, x, 2, 0, 0)?;
                let b = tangent_basis(&pd.phi[1])?;
                let ric = b.transpose() * &c.ricci * &b;
                let h = b.transpose() * &c.metric.h * &b;
                let l = pencil_max_eig(&ric, &h)?;
                Ok((l.max(0.0), l))
            });
            o.notes.push(format!(
                "Ricci of h on ker dPhi; largest eigenvalue {:.6e}",
                extreme(&o.records, true)
            ));
            o
        }
        "lric_ineq" => {
            let alpha = inst
                .alpha
                .ok_or_else(|| Error::Config("instance has no alpha".into()))?;
            let eq3 = RefCell::new(f64::INFINITY);
            let field = |y: &[f64]| {
                Ok(TensorEval::from_matrix(
                    &curvature_pack(inst, y)?.ricci_mu,
                    y,
                ))
            };
            let mut o = per_point(sample, |x| {
                let c = curvature_pack(inst, x)?;
                let lhs = weighted_laplacian_fd(inst, field, x, step)?.to_matrix()?;
                let r = &c.ricci_mu;
                let sq = r * &c.metric.h_inv * r;
                let rhs = &sq * 2.0 - r * alpha;
                let scale = 1.0 + abs_norm(&lhs, &c.metric.h)?.max(abs_norm(&rhs, &c.metric.h)?);
                let l = min_eig_rel(&(&lhs - &rhs), &c.metric.h)?;
                let odot = symmetric_product(r, &c.metric.g, &c.metric.h_inv)?;
                let l3 = min_eig_rel(&(&lhs - odot * 4.0), &c.metric.h)?;
                let mut e = eq3.borrow_mut();
                *e = e.min(l3 / scale);
                Ok(((-l).max(0.0) / scale, l))
            });
            o.notes.push(format!(
                "checked L Ric_mu >= 2 Ric_mu^2 - alpha Ric_mu (alpha = {alpha})"
            ));
            let e = eq3.into_inner();
            o.notes.push(format!(
                "form L Ric_mu >= 4 Ric_mu . g: smallest scaled eigenvalue {e:.3e} ({})",
                if e >= -1e-6 {
                    "holds on sample"
                } else {
                    "violated on sample"
                }
            ));
            o
        }
        "lg_odot" => {
            let field = |y: &[f64]| Ok(TensorEval::from_matrix(&metric_pack(inst, y)?.g, y));
            per_point(sample, |x| {
                let c = curvature_pack(inst, x)?;
                let lhs = weighted_laplacian_fd(inst, field, x, step)?.to_matrix()?;
                let rhs = symmetric_product(&c.metric.g, &c.ricci_mu, &c.metric.h_inv)? * 2.0;
                let scale = 1.0 + abs_norm(&lhs, &c.metric.h)?.max(abs_norm(&rhs, &c.metric.h)?);
                let l = min_eig_rel(&(&lhs - &rhs), &c.metric.h)?;
                Ok(((-l).max(0.0) / scale, l))
            })
        }
        "caffarelli2" => {
            let k = constants(inst)?;
            if !(k.w_lower > 0.0 && k.v_upper.is_finite()) {
                return Err(Error::Config(
                    "caffarelli2 needs D^2 V <= C and D^2 W >= c > 0".into(),
                ));
            }
            let upper = (k.v_upper / k.w_lower).sqrt();
            let lower = if k.w_upper.is_finite() {
                (k.v_lower / k.w_upper).sqrt()
            } else {
                0.0
            };
            let mut o = per_point(sample, |x| {
                let pd = PointData::new(inst, x, 2, 0, 0)?;
                let ev = nalgebra::SymmetricEigen::new(pd.h.clone()).eigenvalues;
                let top = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok(((top - upper).max(0.0) / (1.0 + upper), top))
            });
            let lo_seen = sample
                .iter()
                .filter_map(|x| PointData::new(inst, x, 2, 0, 0).ok())
                .map(|pd| {
                    nalgebra::SymmetricEigen::new(pd.h)
                        .eigenvalues
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min);
            o.notes.push(format!(
                "bound sqrt(C/c) = {upper:.12}, largest D2Phi eigenvalue {:.12}; lower bound sqrt(c/C) = {lower:.6} vs smallest {lo_seen:.6}",
                extreme(&o.records, true)
            ));
            o
        }
        "prop51" => per_point(sample, |x| {
            let (ng, nh) = norms(inst, x)?;
            let nh = nh.ok_or_else(|| Error::Numeric("(V + W)'' is singular".into()))?;
            let lg = weighted_laplacian_scalar_fd(inst, |y: &[f64]| g_norm(inst, y), x, step)?;
            let val = nh + 2.0 * lg - ng * ng;
            let scale = 1.0 + nh.abs() + (2.0 * lg).abs() + ng * ng;
            Ok(((-val).max(0.0) / scale, val))
        }),
        "lp_moment" => lp_moment(inst)?,
        "g_sqrtK" => {
            let mut k: f64 = 0.0;
            for x in dense_line(sample) {
                let (_, nh) = norms(inst, &x)?;
                k = k.max(nh.ok_or_else(|| Error::Numeric("(V + W)'' is singular".into()))?);
            }
            let root = k.sqrt();
            let mut o = per_point(sample, |x| {
                let ng = g_norm(inst, x)?;
                Ok(((ng - root).max(0.0) / (1.0 + root), ng))
            });
            o.notes.push(format!(
                "K = sup ||H||_h over [-6, 6] and the sample = {k:.6e}; sqrt K = {root:.6e}"
            ));
            o
        }
        "phi3_bound" => {
            let k = constants(inst)?;
            let (c, cap, b) = (k.c_lower(), k.c_upper(), k.b);
            if !(c > 0.0 && cap.is_finite() && b.is_finite()) {
                return Err(Error::Config("phi3_bound needs finite c, C and B".into()));
            }
            // Caffarelli in both directions, then the proof chain with explicit constants.
            let s_hi = (cap / c).sqrt();
            let s_lo = (c / cap).sqrt();
            let c1 = c * (1.0 + s_lo * s_lo);
            let k_bound = b * (1.0 + s_hi.powi(3)).powi(2) / (c1 * s_lo * s_lo);
            let bound = s_hi.powi(4) * k_bound.sqrt();
            let mut o = per_point(sample, |x| {
                let pd = PointData::new(inst, x, 3, 0, 0)?;
                let t = sup_trace_sq(&pd.phi[3], None, n);
                Ok(((t - bound).max(0.0) / (1.0 + bound), t))
            });
            let seen = extreme(&o.records, true);
            o.notes.push(format!(
                "c = {c}, C = {cap}, B = {b:.6e}; derived bound (C/c)^2 sqrt(K) with K = {k_bound:.6e}: {bound:.6e}; sup Tr[D2Phi_e]^2 = {seen:.6e}{}",
                if b > 0.0 { format!(", ratio to B = {:.4}", seen / b) } else { String::new() }
            ));
            o
        }
        "phi3_gauss" => {
            let k = constants(inst)?;
            let qn = k
                .q_norm
                .ok_or_else(|| Error::Config("phi3_gauss needs a Gaussian target".into()))?;
            let c = k.v_lower;
            if !(c > 0.0) {
                return Err(Error::Config("phi3_gauss needs D^2 V >= c > 0".into()));
            }
            // D²W = 2Q, so Caffarelli gives D²Φ ≥ sqrt(c / (2‖Q‖)).
            let derived = 2.0 * qn / c;
            let stated = qn / c;
            let grid = if n == 1 {
                dense_line(sample)
            } else {
                sample.to_vec()
            };
            let mut s_sup: f64 = 0.0;
            let mut h_sup: f64 = 0.0;
            for x in &grid {
                let pd = PointData::new(inst, x, 2, 3, 0)?;
                let a_inv = crate::geometry::spd_inverse(&pd.matrix(&pd.v[2]))?;
                s_sup = s_sup.max(sup_trace_sq(&pd.v[3], Some(&a_inv), n));
                if let (_, Some(nh)) = norms(inst, x)? {
                    h_sup = h_sup.max(nh);
                }
            }
            let chain = (h_sup - derived * s_sup).max(0.0) / (1.0 + h_sup);
            let mut o = per_point(sample, |x| {
                let ng = g_norm(inst, x)?;
                Ok((
                    ((ng * ng - h_sup).max(0.0) / (1.0 + h_sup)).max(chain),
                    ng * ng,
                ))
            });
            o.notes.push(format!(
                "sup ||H||_h = {h_sup:.6e}; sup Tr[(D2V)^-1 (D2V_e)^2] = {s_sup:.6e}; derived constant 2||Q||/c = {derived} gives {:.6e}; \
                 stated constant ||Q||/c = {stated} gives {:.6e} ({})",
                derived * s_sup,
                stated * s_sup,
                if h_sup <= stated * s_sup * (1.0 + 1e-9) { "also holds" } else { "violated" }
            ));
            o
        }
        other => return Err(Error::Config(format!("unknown bound id {other:?}"))),
    };
    Ok(out)
}

/// Orthonormal basis of the hyperplane orthogonal to `d`, as columns.
fn tangent_basis(d: &[f64]) -> Result<DMatrix<f64>> {
    let n = d.len();
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Numeric(
            "dPhi vanishes; the level set is singular".into(),
        ));
    }
    // d first, then every coordinate axis except the one d leans on most
    let pivot = (0..n)
        .max_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()))
        .unwrap();
    let axes: Vec<usize> = (0..n).filter(|&j| j != pivot).collect();
    let m = DMatrix::from_fn(n, n, |i, c| {
        if c == 0 {
            d[i] / norm
        } else {
            f64::from(u8::from(i == axes[c - 1]))
        }
    });
    let q = m.qr().q();
    Ok(q.columns(1, n - 1).into_owned())
}

/// `∫‖g‖_h^4 dμ ≤ ∫‖H‖_h^2 dμ` by quadrature on the line.
fn lp_moment(inst: &PotentialInstance) -> Result<Outcome> {
    let err: RefCell<Option<Error>> = RefCell::new(None);
    // both integrals visit mostly the same nodes
    let cache: RefCell<HashMap<u64, (f64, f64)>> = RefCell::new(HashMap::new());
    let eval = |x: f64| -> (f64, f64) {
        if let Some(v) = cache.borrow().get(&x.to_bits()) {
            return *v;
        }
        let r = (|| -> Result<(f64, f64)> {
            let dens = (-inst.v_jet(&[x], 0)?.value()).exp();
            if dens == 0.0 {
                return Ok((0.0, 0.0));
            }
            let (ng, nh) = norms(inst, &[x])?;
            let nh = nh.ok_or_else(|| Error::Numeric("(V + W)'' is singular".into()))?;
            Ok((dens * ng.powi(4), dens * nh * nh))
        })();
        let v = r.unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            (0.0, 0.0)
        });
        cache.borrow_mut().insert(x.to_bits(), v);
        v
    };
    // Truncate where the density and both integrands are negligible.
    let mut peak: f64 = 0.0;
    for k in -40..=40 {
        let (a, b) = eval(0.25 * k as f64);
        let d = (-inst.v_jet(&[0.25 * k as f64], 0)?.value()).exp();
        peak = peak.max(a).max(b).max(d);
    }
    let negligible = |x: f64| -> Result<bool> {
        let (a, b) = eval(x);
        let d = (-inst.v_jet(&[x], 0)?.value()).exp();
        Ok(a.max(b).max(d) < 1e-14 * peak)
    };
    let mut hi = 1.0;
    while hi < 11.0 && !(negligible(hi)? && negligible(hi + 0.5)?) {
        hi += 0.5;
    }
    let mut lo = -1.0;
    while lo > -11.0 && !(negligible(lo)? && negligible(lo - 0.5)?) {
        lo -= 0.5;
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut a = lo;
    while a < hi - 1e-12 {
        let b = (a + 1.0).min(hi);
        lhs += quadrature::double_exponential::integrate(|x| eval(x).0, a, b, 1e-11).integral;
        rhs += quadrature::double_exponential::integrate(|x| eval(x).1, a, b, 1e-11).integral;
        a = b;
    }
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let residual = (lhs - rhs).max(0.0);
    Ok(Outcome {
        records: vec![PointRecord {
            x: vec![lo, hi],
            residual,
            value: rhs - lhs,
        }],
        notes: vec![format!(
            "p = 4 on [{lo}, {hi}]: int ||g||^4 dmu = {lhs:.9e}, int ||H||^2 dmu = {rhs:.9e}"
        )],
    })
}

/// Runs bound `id` on the given points. `lp_moment` integrates over the
/// line instead and reports one record spanning the integration range.
pub fn check_bound(
    id: &str,
    inst: &PotentialInstance,
    sample: &[Vec<f64>],
    tol: Option<f64>,
    step: Option<f64>,
) -> Result<CheckResult> {
    if !BOUND_IDS.contains(&id) {
        return Err(Error::Config(format!("unknown bound id {id:?}")));
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(id));
    if let Some(why) = not_applicable(id, inst) {
        return Ok(CheckResult::skipped(id, &inst.name, tol, why));
    }
    match run(id, inst, sample, step) {
        Ok(o) => Ok(CheckResult::from_records(
            id,
            &inst.name,
            tol,
            o.records,
            o.notes.join("; "),
        )),
        Err(e @ (Error::MissingOrder { .. } | Error::Config(_))) => {
            Ok(CheckResult::skipped(id, &inst.name, tol, e.to_string()))
        }
        Err(e) => Ok(CheckResult::failed(id, &inst.name, tol, e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gauss_pair_1d, orthant, sine1d};
    use crate::verification::Status;

    #[test]
    fn ke_bounds() {
        let s = sine1d(1.0).unwrap();
        let sample = s.sample(6, 0);
        let r = check_bound("ricci_mu_nonpos", &s, &sample, None, None).unwrap();
        assert_eq!(r.status, Status::Pass);
        for rec in &r.samples {
            assert!((rec.value + rec.x[0].sin().powi(2) / 2.0).abs() < 1e-12);
        }
        for id in ["lric_ineq", "lg_odot"] {
            let r = check_bound(id, &s, &sample, None, None).unwrap();
            assert_eq!(r.status, Status::Pass, "{r:?}");
        }
        let o = orthant(2);
        let r = check_bound("levelset_ricci", &o, &o.sample(5, 2), None, None).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn gaussian_pair_bounds() {
        let g = gauss_pair_1d(0.5).unwrap();
        let sample = g.sample(7, 0);
        for id in [
            "caffarelli2",
            "prop51",
            "lp_moment",
            "g_sqrtK",
            "phi3_bound",
            "phi3_gauss",
        ] {
            let r = check_bound(id, &g, &sample, None, None).unwrap();
            assert_eq!(r.status, Status::Pass, "{id}: {r:?}");
        }
        let r = check_bound("caffarelli2", &g, &sample, None, None).unwrap();
        assert!(r.samples.iter().all(|p| (p.value - 0.5).abs() < 1e-12));
    }

    #[test]
    fn tangent_basis_is_orthogonal() {
        let b = tangent_basis(&[0.0, 3.0, 4.0]).unwrap();
        let d = nalgebra::DVector::from_row_slice(&[0.0, 3.0, 4.0]);
        assert!((b.transpose() * d).abs().max() < 1e-14);
        assert!((b.transpose() * &b - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }
}
