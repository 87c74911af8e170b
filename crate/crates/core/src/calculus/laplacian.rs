use num_traits::Zero;

use super::{add_edge, add_vertex, anchor, object_weight, objects, slot_weight, Object};
use crate::diagram::{q, BasicDiagram, Coeff, DiagramSum, VertexLabel};

fn laplacian_term(d: &BasicDiagram, c: &Coeff, out: &mut DiagramSum) {
    let objs = objects(d);
    let w: Vec<Coeff> = objs.iter().map(|&o| object_weight(d, o)).collect();
    let mut emit = |e: BasicDiagram, wt: Coeff| {
        if !wt.is_zero() {
            out.add_term(e, wt * c);
        }
    };

    // two distinct objects joined by a new edge; each unordered pair twice
    for (i, &a) in objs.iter().enumerate() {
        for (j, &b) in objs.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut e = d.clone();
            let x = anchor(&mut e, a);
            let y = anchor(&mut e, b);
            add_edge(&mut e, x, y);
            emit(e, &w[i] * &w[j]);
        }
    }

    for (i, &a) in objs.iter().enumerate() {
        // loop at the object
        let mut e = d.clone();
        let x = anchor(&mut e, a);
        add_edge(&mut e, x, x);
        emit(e, w[i].clone());

        // gradient of the weight P, with the trace of the third derivative
        // on a fresh Φ already replaced through the Monge-Ampère equation
        let (wv, ww) = match a {
            Object::Vertex(v) => {
                let s = slot_weight(d.vertices[v]);
                (-&s - q(1, 2), s - q(1, 2))
            }
            _ => (Coeff::zero(), -w[i].clone()),
        };
        for (label, wt) in [(VertexLabel::V, wv), (VertexLabel::W, ww)] {
            if wt.is_zero() {
                continue;
            }
            let mut e = d.clone();
            let x = anchor(&mut e, a);
            let y = add_vertex(&mut e, label);
            add_edge(&mut e, x, y);
            emit(e, wt);
        }

        // an edge or leg split by two new Φ vertices joined to each other
        if !matches!(a, Object::Vertex(_)) {
            let mut e = d.clone();
            let x = anchor(&mut e, a);
            // the same slot now names one half of the split, so this lands
            // next to x and the new edge doubles the x–y link
            let y = anchor(&mut e, a);
            add_edge(&mut e, x, y);
            emit(e, &w[i] * (&w[i] - q(1, 1)));
        }
    }
}

/// Weighted Laplacian `L = Δ_h − ∇P·∇` of every term. The result may contain
/// loops; combine with [`eliminate_loops`](super::eliminate_loops) to reach
/// loop-free form. One Φ-trace per object has been resolved already, so the
/// output equals the Laplacian on potentials satisfying the Monge-Ampère
/// equation.
pub fn weighted_laplacian(d: &DiagramSum) -> DiagramSum {
    let mut out = DiagramSum::zero();
    for (t, c) in d.iter() {
        laplacian_term(t, c, &mut out);
    }
    out
}
