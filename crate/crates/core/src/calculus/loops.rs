use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagram::{parse, BasicDiagram, DiagramSum, Leg, VertexLabel};
use crate::error::{Error, Result};

const PORTS: [char; 3] = ['i', 'j', 'k'];

const RULE1: &str = "-V(i) + W(i)";
const RULE2: &str = "Phi(i,a,b)*Phi(j,a,b) - V(i,j) + W(i,j) + Phi(i,j,s)*W(s)";
const RULE3: &str = "-V(i,j,k) + W(i,j,k) \
    + W(i,s)*Phi(s,j,k) + W(j,s)*Phi(s,i,k) + W(k,s)*Phi(s,i,j) + Phi(i,j,k,s)*W(s) \
    + Phi(i,a,b)*Phi(j,k,a,b) + Phi(j,a,b)*Phi(i,k,a,b) + Phi(k,a,b)*Phi(i,j,a,b) \
    - 2*Phi(i,a,b)*Phi(j,b,c)*Phi(k,c,a)";

/// The trace `Φ^{ab}Φ_{ab i₁…i_k}` rewritten through the Monge-Ampère
/// equation, as a labeled sum with free indices among `i, j, k`. Defined for
/// `k ≤ 3`.
pub fn loop_rule(k: usize) -> Result<&'static DiagramSum> {
    static RULES: OnceLock<[DiagramSum; 4]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [
            DiagramSum::from_diagram(BasicDiagram::dimension_scalar(1)),
            parse(RULE1).expect("loop rule"),
            parse(RULE2).expect("loop rule"),
            parse(RULE3).expect("loop rule"),
        ]
    });
    rules.get(k).ok_or_else(|| {
        Error::Rewrite(format!(
            "loop on a Φ vertex with {k} further endpoints (at most 3 supported)"
        ))
    })
}

#[derive(Clone, Copy)]
enum Partner {
    Vertex(usize),
    Leg(Option<char>),
    Port(usize),
}

/// Replaces one loop at the Φ vertex `v` by the matching rule.
fn eliminate_at(d: &BasicDiagram, v: usize, max_ports: usize) -> Result<DiagramSum> {
    let e0 = d
        .edges
        .iter()
        .position(|&e| e == (v, v))
        .expect("vertex carries a loop");
    let mut ports: Vec<Partner> = Vec::new();
    for (idx, &(a, b)) in d.edges.iter().enumerate() {
        if idx == e0 {
            continue;
        }
        if a == v && b == v {
            let p = ports.len();
            ports.push(Partner::Port(p + 1));
            ports.push(Partner::Port(p));
        } else if a == v {
            ports.push(Partner::Vertex(b));
        } else if b == v {
            ports.push(Partner::Vertex(a));
        }
    }
    for leg in d.legs.iter().filter(|l| l.vertex == v) {
        ports.push(Partner::Leg(leg.label));
    }
    if ports.len() > max_ports {
        return Err(Error::Rewrite(format!(
            "loop with {} further endpoints exceeds the limit {max_ports}",
            ports.len()
        )));
    }
    let rule = loop_rule(ports.len())?;

    let mut base = d.clone();
    base.edges.retain(|&(a, b)| a != v && b != v);
    base.legs.retain(|l| l.vertex != v);
    base.remove_vertex(v);
    let shift = |u: usize| if u > v { u - 1 } else { u };

    let mut out = DiagramSum::zero();
    for (r, c) in rule.iter() {
        let mut e = base.clone();
        let off = e.vertices.len();
        e.vertices.extend_from_slice(&r.vertices);
        e.edges
            .extend(r.edges.iter().map(|&(a, b)| (a + off, b + off)));
        e.dim_power += r.dim_power;
        let at: Vec<usize> = PORTS[..ports.len()]
            .iter()
            .map(|&c| off + r.leg_vertex(c).expect("rule leg"))
            .collect();
        for (p, partner) in ports.iter().enumerate() {
            match *partner {
                Partner::Vertex(u) => super::add_edge(&mut e, shift(u), at[p]),
                Partner::Leg(label) => e.legs.push(Leg {
                    vertex: at[p],
                    label,
                }),
                Partner::Port(q) if p < q => super::add_edge(&mut e, at[p], at[q]),
                Partner::Port(_) => {}
            }
        }
        out.add_term(e, c.clone());
    }
    Ok(out)
}

fn phi_loop_vertices(d: &BasicDiagram) -> Vec<usize> {
    let mut vs: Vec<usize> = d
        .edges
        .iter()
        .filter(|&&(a, b)| a == b && d.vertices[a] == VertexLabel::Phi)
        .map(|&(a, _)| a)
        .collect();
    vs.dedup();
    vs
}

const MAX_ROUNDS: usize = 64;

fn drive<F>(d: &DiagramSum, max_ports: usize, mut pick: F) -> Result<DiagramSum>
where
    F: FnMut(&[usize]) -> usize,
{
    let mut done = DiagramSum::zero();
    let mut work = d.clone();
    for _ in 0..MAX_ROUNDS {
        if work.is_zero() {
            return Ok(done);
        }
        let mut next = DiagramSum::zero();
        for (t, c) in work.iter() {
            let cands = phi_loop_vertices(t);
            if cands.is_empty() {
                done.add_term(t.clone(), c.clone());
                continue;
            }
            let v = pick(&cands);
            for (e, ce) in eliminate_at(t, v, max_ports)?.iter() {
                next.add_term(e.clone(), ce * c);
            }
        }
        work = next;
    }
    Err(Error::Rewrite("loop elimination did not terminate".into()))
}

/// Removes every loop on a Φ vertex, always rewriting the first such vertex
/// of the canonical form. Loops on V and W vertices are kept.
pub fn eliminate_loops(d: &DiagramSum) -> Result<DiagramSum> {
    drive(d, 3, |c| c[0])
}

/// Loop elimination restricted to loops with at most `max_ports` further
/// endpoints; anything larger is a rewrite error.
pub fn eliminate_loops_limited(d: &DiagramSum, max_ports: usize) -> Result<DiagramSum> {
    drive(d, max_ports, |c| c[0])
}

/// Same normal form as [`eliminate_loops`], reached through a random choice
/// of loop at every step.
pub fn eliminate_loops_shuffled(d: &DiagramSum, seed: u64) -> Result<DiagramSum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    drive(d, 3, |c| *c.choose(&mut rng).unwrap())
}
