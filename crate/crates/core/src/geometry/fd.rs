//! Weighted Laplacian `L = Δ_h − ∇P·∇` of a covariant tensor field by
//! central differences, with one Richardson extrapolation step.

use nalgebra::DMatrix;

use super::packs::metric_from;
use super::{apply_slot, PointData, TensorEval};
use crate::error::{Error, Result};
use crate::instances::PotentialInstance;

pub fn default_step(x: &[f64]) -> f64 {
    1e-3 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// [`default_step`], shortened where `Φ` varies on a length scale below the
/// coordinate magnitude. The scale is `√(|D³Φ|/|D⁵Φ|)`, which near a pole
/// at distance `δ` is a fixed fraction of `δ`; instances without fifth
/// derivatives keep the plain default.
pub fn local_step(inst: &PotentialInstance, x: &[f64]) -> f64 {
    let s = default_step(x);
    let Ok(j) = inst.phi_jet(x, 5) else { return s };
    let size = |k: usize| {
        j.derivative_array(k)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let (m3, m5) = (size(3), size(5));
    if m5 > 0.0 && m3.is_finite() && m5.is_finite() {
        s.min(1e-2 * (m3 / m5).sqrt()).max(1e-6 * s)
    } else {
        s
    }
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `M[i][a] = Γ^a_{q i}` for each `q`, in the shape `apply_slot` expects.
fn gamma_mats(gamma: &[f64], n: usize) -> Vec<DMatrix<f64>> {
    (0..n)
        .map(|q| DMatrix::from_fn(n, n, |i, a| gamma[(a * n + q) * n + i]))
        .collect()
}

fn laplacian_once<F>(
    inst: &PotentialInstance,
    field: &F,
    x: &[f64],
    s: f64,
    covariant: bool,
) -> Result<TensorEval>
where
    F: Fn(&[f64]) -> Result<TensorEval>,
{
    let n = inst.n;
    let pd = PointData::new(inst, x, 3, 1, 1)?;
    let gamma = metric_from(&pd).christoffel;
    let grad_p = pd.grad_p();

    let t0 = field(x)?;
    let r = t0.order;
    // connection terms act on every slot of a tensor, on none for plain components
    let slots = if covariant { r } else { 0 };
    let len = t0.data.len();
    let at = |moves: &[(usize, f64)]| -> Result<Vec<f64>> {
        let t = field(&shifted(x, moves))?;
        if t.order != r || t.n != n {
            return Err(Error::Shape("field changes shape between points".into()));
        }
        Ok(t.data)
    };

    let mut d1 = Vec::with_capacity(n);
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for p in 0..n {
        let a = at(&[(p, s)])?;
        let b = at(&[(p, -s)])?;
        d1.push(
            a.iter()
                .zip(&b)
                .map(|(u, v)| (u - v) / (2.0 * s))
                .collect::<Vec<_>>(),
        );
        plus.push(a);
        minus.push(b);
    }
    let mut d2 = vec![vec![Vec::new(); n]; n];
    for p in 0..n {
        d2[p][p] = (0..len)
            .map(|k| (plus[p][k] - 2.0 * t0.data[k] + minus[p][k]) / (s * s))
            .collect();
        for q in p + 1..n {
            let pp = at(&[(p, s), (q, s)])?;
            let pm = at(&[(p, s), (q, -s)])?;
            let mp = at(&[(p, -s), (q, s)])?;
            let mm = at(&[(p, -s), (q, -s)])?;
            let v: Vec<f64> = (0..len)
                .map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * s * s))
                .collect();
            d2[q][p] = v.clone();
            d2[p][q] = v;
        }
    }

    // ∂_p Γ by differencing the connection itself.
    let mut dgamma = Vec::with_capacity(n);
    for p in 0..n {
        let gp = metric_from(&PointData::new(inst, &shifted(x, &[(p, s)]), 3, 0, 0)?).christoffel;
        let gm = metric_from(&PointData::new(inst, &shifted(x, &[(p, -s)]), 3, 0, 0)?).christoffel;
        let dg: Vec<f64> = gp
            .iter()
            .zip(&gm)
            .map(|(a, b)| (a - b) / (2.0 * s))
            .collect();
        dgamma.push(gamma_mats(&dg, n));
    }
    let g = gamma_mats(&gamma, n);

    // ∇_q T
    let mut cov1 = Vec::with_capacity(n);
    for q in 0..n {
        let mut c = d1[q].clone();
        for slot in 0..slots {
            c = sub(&c, &apply_slot(&t0.data, n, r, slot, &g[q]));
        }
        cov1.push(c);
    }

    let mut out = vec![0.0; len];
    for p in 0..n {
        for q in 0..n {
            let w = pd.h_inv[(p, q)];
            if w == 0.0 {
                continue;
            }
            // ∂_p(∇_q T)
            let mut c = d2[p][q].clone();
            for slot in 0..slots {
                c = sub(&c, &apply_slot(&t0.data, n, r, slot, &dgamma[p][q]));
                c = sub(&c, &apply_slot(&d1[p], n, r, slot, &g[q]));
            }
            // ∇_p∇_q T
            for a in 0..n {
                let ga = gamma[(a * n + p) * n + q];
                for k in 0..len {
                    c[k] -= ga * cov1[a][k];
                }
            }
            for slot in 0..slots {
                c = sub(&c, &apply_slot(&cov1[q], n, r, slot, &g[p]));
            }
            for k in 0..len {
                out[k] += w * (c[k] - grad_p[p] * cov1[q][k]);
            }
        }
    }
    Ok(TensorEval {
        n,
        order: r,
        data: out,
        point: x.to_vec(),
    })
}

/// `L T` at `x` for a covariant field `T`, combining steps `s` and `s/2`.
pub fn weighted_laplacian_fd<F>(
    inst: &PotentialInstance,
    field: F,
    x: &[f64],
    step: Option<f64>,
) -> Result<TensorEval>
where
    F: Fn(&[f64]) -> Result<TensorEval>,
{
    richardson(inst, &field, x, step, true)
}

/// `L[T_{i..}]`: the scalar weighted Laplacian of each coordinate component.
pub fn weighted_laplacian_components_fd<F>(
    inst: &PotentialInstance,
    field: F,
    x: &[f64],
    step: Option<f64>,
) -> Result<TensorEval>
where
    F: Fn(&[f64]) -> Result<TensorEval>,
{
    richardson(inst, &field, x, step, false)
}

fn richardson<F>(
    inst: &PotentialInstance,
    field: &F,
    x: &[f64],
    step: Option<f64>,
    covariant: bool,
) -> Result<TensorEval>
where
    F: Fn(&[f64]) -> Result<TensorEval>,
{
    let s = step.unwrap_or_else(|| local_step(inst, x));
    if !(s > 0.0) || s < 1e-8 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
        return Err(Error::Numeric(format!(
            "finite-difference step {s} underflows"
        )));
    }
    let coarse = laplacian_once(inst, field, x, s, covariant)?;
    let mut fine = laplacian_once(inst, field, x, 0.5 * s, covariant)?;
    for (f, c) in fine.data.iter_mut().zip(&coarse.data) {
        *f = (4.0 * *f - c) / 3.0;
    }
    Ok(fine)
}

pub fn weighted_laplacian_scalar_fd<F>(
    inst: &PotentialInstance,
    field: F,
    x: &[f64],
    step: Option<f64>,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = inst.n;
    let t = weighted_laplacian_components_fd(
        inst,
        |y: &[f64]| {
            Ok(TensorEval {
                n,
                order: 0,
                data: vec![field(y)?],
                point: y.to_vec(),
            })
        },
        x,
        step,
    )?;
    Ok(t.data[0])
}
