//! Rewrite operations on diagram sums: symmetric contraction, covariant
//! derivative, weighted Laplacian and loop elimination.

mod contract;
mod covariant;
mod laplacian;
mod loops;

pub use contract::contract;
pub use covariant::{covariant_derivative, covariant_derivative_as, fresh_label};
pub use laplacian::weighted_laplacian;
pub use loops::{eliminate_loops, eliminate_loops_limited, eliminate_loops_shuffled, loop_rule};

use crate::diagram::q;
use crate::diagram::{BasicDiagram, Coeff, Leg, VertexLabel};

/// Weight a vertex slot picks up when the metric is differentiated through
/// it. Plain partials (Φ, V) lose half a Christoffel symbol per slot; a
/// lowered W slot also gains a full third derivative of Φ, hence `+1/2`.
pub(crate) fn slot_weight(label: VertexLabel) -> Coeff {
    match label {
        VertexLabel::Phi | VertexLabel::V => q(-1, 2),
        VertexLabel::W => q(1, 2),
    }
}

/// Places in a diagram that a derivative can act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Object {
    Vertex(usize),
    Edge(usize),
    Leg(usize),
}

pub(crate) fn objects(d: &BasicDiagram) -> Vec<Object> {
    let mut out: Vec<Object> = (0..d.vertices.len()).map(Object::Vertex).collect();
    out.extend((0..d.edges.len()).map(Object::Edge));
    out.extend((0..d.legs.len()).map(Object::Leg));
    out
}

/// First-derivative weight of an object.
pub(crate) fn object_weight(d: &BasicDiagram, o: Object) -> Coeff {
    match o {
        Object::Vertex(_) => q(1, 1),
        Object::Edge(e) => {
            let (a, b) = d.edges[e];
            slot_weight(d.vertices[a]) + slot_weight(d.vertices[b])
        }
        Object::Leg(l) => slot_weight(d.vertices[d.legs[l].vertex]),
    }
}

pub(crate) fn add_vertex(d: &mut BasicDiagram, label: VertexLabel) -> usize {
    d.vertices.push(label);
    d.vertices.len() - 1
}

pub(crate) fn add_edge(d: &mut BasicDiagram, a: usize, b: usize) {
    d.edges.push(if a <= b { (a, b) } else { (b, a) });
}

/// Vertex where new structure is attached to `o`. Edges and legs are first
/// subdivided by a fresh Φ vertex. Indices of other objects stay valid.
pub(crate) fn anchor(d: &mut BasicDiagram, o: Object) -> usize {
    match o {
        Object::Vertex(v) => v,
        Object::Edge(e) => {
            let (a, b) = d.edges[e];
            let x = add_vertex(d, VertexLabel::Phi);
            d.edges[e] = (a, x);
            d.edges.push((b, x));
            x
        }
        Object::Leg(l) => {
            let u = d.legs[l].vertex;
            let x = add_vertex(d, VertexLabel::Phi);
            d.edges.push((u, x));
            d.legs[l] = Leg {
                vertex: x,
                label: d.legs[l].label,
            };
            x
        }
    }
}
