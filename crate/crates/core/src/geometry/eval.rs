//! Numeric evaluation of diagram sums.

use num_traits::ToPrimitive;

use super::{apply_slot, unflatten, PointData, TensorEval};
use crate::diagram::{BasicDiagram, DiagramSum, VertexLabel};
use crate::error::{Error, Result};
use crate::instances::PotentialInstance;

/// Highest vertex degree per label `(Φ, V, W)` over the sum.
pub fn required_orders(sum: &DiagramSum) -> (usize, usize, usize) {
    let mut o = (2, 0, 0);
    for (d, _) in sum.iter() {
        o.0 = o.0.max(d.max_degree(VertexLabel::Phi));
        o.1 = o.1.max(d.max_degree(VertexLabel::V));
        o.2 = o.2.max(d.max_degree(VertexLabel::W));
    }
    o
}

/// Evaluates a diagram sum at `x`. Output slots are the unlabeled legs
/// (symmetrized) followed by the labeled legs in label order.
pub fn evaluate_diagram(
    sum: &DiagramSum,
    inst: &PotentialInstance,
    x: &[f64],
) -> Result<TensorEval> {
    let (p, v, w) = required_orders(sum);
    let pd = PointData::new(inst, x, p, v.max(1), w.max(1))?;
    evaluate_diagram_at(sum, &pd)
}

pub fn evaluate_diagram_at(sum: &DiagramSum, pd: &PointData) -> Result<TensorEval> {
    let rank = match sum.signature() {
        Some(s) => s.unlabeled + s.labels.len(),
        None => 0,
    };
    let mut out = TensorEval::zeros(pd.n, rank, &pd.x);
    for (d, c) in sum.iter() {
        let c = c
            .to_f64()
            .ok_or_else(|| Error::Numeric("coefficient out of range".into()))?;
        let t = evaluate_basic(d, pd)?;
        out.axpy(c, &t);
    }
    Ok(out)
}

/// Evaluates one diagram exactly as given, without canonicalizing or
/// normalizing it first.
pub fn evaluate_basic_diagram(
    d: &BasicDiagram,
    inst: &PotentialInstance,
    x: &[f64],
) -> Result<TensorEval> {
    let pd = PointData::new(
        inst,
        x,
        d.max_degree(VertexLabel::Phi).max(2),
        d.max_degree(VertexLabel::V).max(1),
        d.max_degree(VertexLabel::W).max(1),
    )?;
    evaluate_basic(d, &pd)
}

fn evaluate_basic(d: &BasicDiagram, pd: &PointData) -> Result<TensorEval> {
    let n = pd.n;
    let scale = (n as f64).powi(d.dim_power() as i32);
    let nv = d.vertices.len();
    let ne = d.edges.len();

    // Output slot order: unlabeled legs as stored, then labels sorted.
    let mut leg_order: Vec<usize> = (0..d.legs.len())
        .filter(|&l| d.legs[l].label.is_none())
        .collect();
    let unlabeled = leg_order.len();
    let mut labeled: Vec<usize> = (0..d.legs.len())
        .filter(|&l| d.legs[l].label.is_some())
        .collect();
    labeled.sort_by_key(|&l| d.legs[l].label);
    leg_order.extend(labeled);
    let rank = leg_order.len();
    let mut leg_var = vec![0; d.legs.len()];
    for (pos, &l) in leg_order.iter().enumerate() {
        leg_var[l] = ne + pos;
    }

    // Each edge is one summation variable; its first end is raised with
    // the inverse Hessian so the other end can simply share the index.
    let mut raised: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut plain: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (e, &(a, b)) in d.edges.iter().enumerate() {
        raised[a].push(e);
        plain[b].push(e);
    }
    for (l, leg) in d.legs.iter().enumerate() {
        plain[leg.vertex].push(leg_var[l]);
    }
    let nvars = ne + rank;
    let mut arrays = Vec::with_capacity(nv);
    let mut coefs = Vec::with_capacity(nv);
    for v in 0..nv {
        let k = raised[v].len() + plain[v].len();
        let base = pd.array(d.vertices[v], k)?;
        let arr =
            (0..raised[v].len()).fold(base.to_vec(), |acc, s| apply_slot(&acc, n, k, s, &pd.h_inv));
        let mut coef = vec![0usize; nvars];
        for (s, &var) in raised[v].iter().chain(&plain[v]).enumerate() {
            coef[var] += n.pow((k - s - 1) as u32);
        }
        arrays.push(arr);
        coefs.push(coef);
    }

    let mut data = vec![0.0; n.pow(rank as u32)];
    let total = n.pow(nvars as u32);
    let mut idx = vec![0usize; nvars];
    let mut flats = vec![0usize; nv];
    for _ in 0..total {
        let mut prod = scale;
        for v in 0..nv {
            prod *= arrays[v][flats[v]];
        }
        let out_flat = idx[ne..].iter().fold(0, |acc, &i| acc * n + i);
        data[out_flat] += prod;
        // odometer step, keeping the per-vertex offsets in sync
        for var in (0..nvars).rev() {
            idx[var] += 1;
            for v in 0..nv {
                flats[v] += coefs[v][var];
            }
            if idx[var] < n {
                break;
            }
            for v in 0..nv {
                flats[v] -= coefs[v][var] * n;
            }
            idx[var] = 0;
        }
    }

    let mut t = TensorEval {
        n,
        order: rank,
        data,
        point: pd.x.clone(),
    };
    if unlabeled > 1 {
        t = symmetrize_prefix(&t, unlabeled);
    }
    Ok(t)
}

/// Averages over all permutations of the first `u` slots.
fn symmetrize_prefix(t: &TensorEval, u: usize) -> TensorEval {
    let perms = permutations(u);
    let mut out = t.clone();
    for (flat, o) in out.data.iter_mut().enumerate() {
        let idx = unflatten(flat, t.n, t.order);
        let mut s = 0.0;
        for p in &perms {
            let mut j = idx.clone();
            for (a, &b) in p.iter().enumerate() {
                j[a] = idx[b];
            }
            s += t.get(&j);
        }
        *o = s / perms.len() as f64;
    }
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}
