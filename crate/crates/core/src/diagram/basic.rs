use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Mark carried by a vertex: which derivative array it stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexLabel {
    Phi,
    V,
    W,
}

impl VertexLabel {
    pub fn name(self) -> &'static str {
        match self {
            VertexLabel::Phi => "Phi",
            VertexLabel::V => "V",
            VertexLabel::W => "W",
        }
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// External edge attached to a single vertex, optionally index-labeled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Leg {
    pub vertex: usize,
    pub label: Option<char>,
}

/// How the external legs of a diagram are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// No leg carries a label; the tensor is symmetrized over all legs.
    Symmetric,
    /// Every leg carries a distinct label.
    Labeled,
    /// Some legs labeled (held fixed), the rest symmetrized among themselves.
    Mixed,
}

/// Sorted multiset of leg labels plus the count of unlabeled legs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LegSignature {
    pub unlabeled: usize,
    pub labels: Vec<char>,
}

/// A labeled multigraph: vertices marked Φ/V/W, internal edges (loops allowed)
/// and external legs. `dim_power` counts factors of the dimension `n` produced
/// by closed metric loops that were removed during normalization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasicDiagram {
    pub(crate) vertices: Vec<VertexLabel>,
    pub(crate) edges: Vec<(usize, usize)>,
    pub(crate) legs: Vec<Leg>,
    pub(crate) dim_power: u32,
}

impl BasicDiagram {
    /// Builds a diagram and checks its structural invariants.
    pub fn new(
        vertices: Vec<VertexLabel>,
        edges: Vec<(usize, usize)>,
        legs: Vec<Leg>,
    ) -> Result<Self> {
        let d = Self::from_parts(vertices, edges, legs, 0);
        d.validate()?;
        Ok(d)
    }

    pub(crate) fn from_parts(
        vertices: Vec<VertexLabel>,
        edges: Vec<(usize, usize)>,
        legs: Vec<Leg>,
        dim_power: u32,
    ) -> Self {
        let edges = edges
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        BasicDiagram {
            vertices,
            edges,
            legs,
            dim_power,
        }
    }

    /// The scalar `n^k`, represented with no vertices.
    pub fn dimension_scalar(power: u32) -> Self {
        BasicDiagram {
            vertices: vec![],
            edges: vec![],
            legs: vec![],
            dim_power: power,
        }
    }

    /// A single vertex carrying `legs` unlabeled external legs.
    pub fn star(label: VertexLabel, legs: usize) -> Self {
        BasicDiagram {
            vertices: vec![label],
            edges: vec![],
            legs: (0..legs)
                .map(|_| Leg {
                    vertex: 0,
                    label: None,
                })
                .collect(),
            dim_power: 0,
        }
    }

    /// A single vertex whose legs carry the given labels in order.
    pub fn labeled_star(label: VertexLabel, labels: &[char]) -> Self {
        BasicDiagram {
            vertices: vec![label],
            edges: vec![],
            legs: labels
                .iter()
                .map(|&c| Leg {
                    vertex: 0,
                    label: Some(c),
                })
                .collect(),
            dim_power: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for &(a, b) in &self.edges {
            if a >= nv || b >= nv {
                return Err(Error::InvalidDiagram(format!(
                    "edge ({a},{b}) out of range"
                )));
            }
        }
        for leg in &self.legs {
            if leg.vertex >= nv {
                return Err(Error::InvalidDiagram(format!(
                    "leg on missing vertex {}",
                    leg.vertex
                )));
            }
        }
        for (v, d) in self.degrees().into_iter().enumerate() {
            if d == 0 {
                return Err(Error::InvalidDiagram(format!("vertex {v} has degree 0")));
            }
        }
        let mut labels: Vec<char> = self.legs.iter().filter_map(|l| l.label).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDiagram("duplicate leg label".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[VertexLabel] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn dim_power(&self) -> u32 {
        self.dim_power
    }

    pub fn leg_count(&self) -> usize {
        self.legs.len()
    }

    pub fn is_scalar_only(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn mode(&self) -> Mode {
        let labeled = self.legs.iter().filter(|l| l.label.is_some()).count();
        if labeled == 0 {
            Mode::Symmetric
        } else if labeled == self.legs.len() {
            Mode::Labeled
        } else {
            Mode::Mixed
        }
    }

    pub fn signature(&self) -> LegSignature {
        let mut labels: Vec<char> = self.legs.iter().filter_map(|l| l.label).collect();
        labels.sort_unstable();
        LegSignature {
            unlabeled: self.legs.len() - labels.len(),
            labels,
        }
    }

    /// Degree of every vertex; a loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vertices.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        for leg in &self.legs {
            deg[leg.vertex] += 1;
        }
        deg
    }

    pub fn max_degree(&self, label: VertexLabel) -> usize {
        self.degrees()
            .into_iter()
            .zip(&self.vertices)
            .filter(|(_, &l)| l == label)
            .map(|(d, _)| d)
            .max()
            .unwrap_or(0)
    }

    pub fn has_phi_loop(&self) -> bool {
        self.edges
            .iter()
            .any(|&(a, b)| a == b && self.vertices[a] == VertexLabel::Phi)
    }

    /// Forgets all leg labels.
    pub fn delabel(&self) -> Self {
        let mut d = self.clone();
        for leg in &mut d.legs {
            leg.label = None;
        }
        d
    }

    /// Renames leg labels through `map`; labels not in the map are kept.
    pub fn relabel(&self, map: &BTreeMap<char, char>) -> Self {
        let mut d = self.clone();
        for leg in &mut d.legs {
            if let Some(c) = leg.label {
                leg.label = Some(*map.get(&c).unwrap_or(&c));
            }
        }
        d
    }

    /// Disjoint union; legs sharing a label across the two operands are
    /// joined into an internal edge.
    pub fn join(&self, other: &Self) -> Self {
        let off = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(a, b)| (a + off, b + off)));
        let mut legs = Vec::new();
        let mut other_legs: Vec<Leg> = other
            .legs
            .iter()
            .map(|l| Leg {
                vertex: l.vertex + off,
                label: l.label,
            })
            .collect();
        for leg in &self.legs {
            let partner = leg
                .label
                .and_then(|c| other_legs.iter().position(|o| o.label == Some(c)));
            match partner {
                Some(pos) => {
                    let o = other_legs.remove(pos);
                    edges.push((leg.vertex, o.vertex));
                }
                None => legs.push(*leg),
            }
        }
        legs.extend(other_legs);
        BasicDiagram::from_parts(vertices, edges, legs, self.dim_power + other.dim_power)
    }

    /// Index of the vertex carrying the leg labeled `c`.
    pub fn leg_vertex(&self, c: char) -> Option<usize> {
        self.legs
            .iter()
            .find(|l| l.label == Some(c))
            .map(|l| l.vertex)
    }

    /// Removes vertex `v` (which must have no incident edges or legs left)
    /// and renumbers the rest.
    pub(crate) fn remove_vertex(&mut self, v: usize) {
        self.vertices.remove(v);
        let shift = |x: usize| if x > v { x - 1 } else { x };
        for e in &mut self.edges {
            *e = (shift(e.0), shift(e.1));
        }
        for leg in &mut self.legs {
            leg.vertex = shift(leg.vertex);
        }
    }

    /// Contracts metric paths: a Φ vertex of degree two with at least one
    /// internal incidence is the identity under contraction and is removed;
    /// an isolated Φ vertex with a single loop contributes one factor of `n`.
    pub fn normalize_paths(&mut self) {
        loop {
            let deg = self.degrees();
            let target = (0..self.vertices.len()).find(|&v| {
                self.vertices[v] == VertexLabel::Phi
                    && deg[v] == 2
                    && self.edges.iter().any(|&(a, b)| a == v || b == v)
            });
            let Some(v) = target else { break };
            let incident: Vec<usize> = (0..self.edges.len())
                .filter(|&i| self.edges[i].0 == v || self.edges[i].1 == v)
                .collect();
            if incident.len() == 1 && self.edges[incident[0]] == (v, v) {
                self.edges.remove(incident[0]);
                self.dim_power += 1;
            } else if incident.len() == 2 {
                let other = |e: (usize, usize)| if e.0 == v { e.1 } else { e.0 };
                let a = other(self.edges[incident[0]]);
                let b = other(self.edges[incident[1]]);
                self.edges.remove(incident[1]);
                self.edges.remove(incident[0]);
                self.edges.push(if a <= b { (a, b) } else { (b, a) });
            } else {
                // one internal edge plus one leg: the leg moves across
                let e = self.edges.remove(incident[0]);
                let u = if e.0 == v { e.1 } else { e.0 };
                for leg in &mut self.legs {
                    if leg.vertex == v {
                        leg.vertex = u;
                    }
                }
            }
            self.remove_vertex(v);
        }
    }

    fn initial_colors(&self) -> Vec<(VertexLabel, usize, usize, Vec<char>, usize)> {
        let deg = self.degrees();
        (0..self.vertices.len())
            .map(|v| {
                let loops = self
                    .edges
                    .iter()
                    .filter(|&&(a, b)| a == v && b == v)
                    .count();
                let unl = self
                    .legs
                    .iter()
                    .filter(|l| l.vertex == v && l.label.is_none())
                    .count();
                let mut labs: Vec<char> = self
                    .legs
                    .iter()
                    .filter(|l| l.vertex == v)
                    .filter_map(|l| l.label)
                    .collect();
                labs.sort_unstable();
                (self.vertices[v], loops, unl, labs, deg[v])
            })
            .collect()
    }

    /// Stable vertex coloring by iterated neighborhood refinement. Colors are
    /// ranks of isomorphism-invariant signatures.
    fn refined_colors(&self) -> Vec<usize> {
        fn rank<T: Ord + Clone>(sigs: &[T]) -> Vec<usize> {
            let mut uniq: Vec<T> = sigs.to_vec();
            uniq.sort();
            uniq.dedup();
            sigs.iter()
                .map(|s| uniq.binary_search(s).unwrap())
                .collect()
        }
        let nv = self.vertices.len();
        let mut colors = rank(&self.initial_colors());
        let mut ncolors = colors.iter().copied().max().map_or(0, |m| m + 1);
        loop {
            let sigs: Vec<(usize, Vec<(usize, usize)>)> = (0..nv)
                .map(|v| {
                    let mut nb: BTreeMap<usize, usize> = BTreeMap::new();
                    for &(a, b) in &self.edges {
                        if a == b {
                            continue;
                        }
                        if a == v {
                            *nb.entry(colors[b]).or_default() += 1;
                        } else if b == v {
                            *nb.entry(colors[a]).or_default() += 1;
                        }
                    }
                    (colors[v], nb.into_iter().collect())
                })
                .collect();
            let next = rank(&sigs);
            let next_n = next.iter().copied().max().map_or(0, |m| m + 1);
            colors = next;
            if next_n == ncolors {
                break;
            }
            ncolors = next_n;
        }
        colors
    }

    fn relabeled_by(&self, order: &[usize]) -> BasicDiagram {
        let mut pos = vec![0usize; order.len()];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let vertices = order.iter().map(|&v| self.vertices[v]).collect();
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (pos[a], pos[b]);
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        edges.sort_unstable();
        let mut legs: Vec<Leg> = self
            .legs
            .iter()
            .map(|l| Leg {
                vertex: pos[l.vertex],
                label: l.label,
            })
            .collect();
        legs.sort_unstable_by_key(|l| (l.label, l.vertex));
        BasicDiagram {
            vertices,
            edges,
            legs,
            dim_power: self.dim_power,
        }
    }

    /// Canonical representative of the isomorphism class, after path
    /// normalization. Two diagrams denote the same tensor by construction iff
    /// their canonical forms are equal.
    pub fn canonical(&self) -> BasicDiagram {
        super::cache::canonical_cached(self)
    }

    pub(crate) fn canonical_uncached(&self) -> BasicDiagram {
        let mut d = self.clone();
        d.normalize_paths();
        let colors = d.refined_colors();
        let nv = d.vertices.len();
        let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in colors.iter().enumerate().take(nv) {
            cells.entry(c).or_default().push(v);
        }
        let cells: Vec<Vec<usize>> = cells.into_values().collect();
        let mut best: Option<BasicDiagram> = None;
        let mut order = Vec::with_capacity(nv);
        let mut used = vec![false; nv];
        search(&d, &cells, 0, &mut order, &mut used, &mut best);
        best.unwrap_or(d)
    }
}

fn search(
    d: &BasicDiagram,
    cells: &[Vec<usize>],
    cell: usize,
    order: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best: &mut Option<BasicDiagram>,
) {
    if cell == cells.len() {
        let cand = d.relabeled_by(order);
        if best.as_ref().is_none_or(|b| cand < *b) {
            *best = Some(cand);
        }
        return;
    }
    let members = &cells[cell];
    let placed = members.iter().filter(|&&v| used[v]).count();
    if placed == members.len() {
        search(d, cells, cell + 1, order, used, best);
        return;
    }
    for &v in members {
        if used[v] {
            continue;
        }
        used[v] = true;
        order.push(v);
        search(d, cells, cell, order, used, best);
        order.pop();
        used[v] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use VertexLabel::*;

    fn leg(v: usize) -> Leg {
        Leg {
            vertex: v,
            label: None,
        }
    }

    #[test]
    fn metric_vertex_is_kept() {
        let d = BasicDiagram::star(Phi, 2);
        assert_eq!(d.canonical(), d);
    }

    #[test]
    fn opposite_vertex_order_gives_same_key() {
        let a =
            BasicDiagram::new(vec![Phi, V], vec![(0, 1), (0, 1)], vec![leg(0), leg(1)]).unwrap();
        let b =
            BasicDiagram::new(vec![V, Phi], vec![(1, 0), (0, 1)], vec![leg(1), leg(0)]).unwrap();
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn subdivided_edge_contracts() {
        // Φ(3 legs) against Φ(2 legs) versus the same with an extra Φ on the edge
        let plain = BasicDiagram::new(
            vec![Phi, Phi],
            vec![(0, 1)],
            vec![leg(0), leg(0), leg(1), leg(1)],
        )
        .unwrap();
        let split = BasicDiagram::new(
            vec![Phi, Phi, Phi],
            vec![(0, 2), (2, 1)],
            vec![leg(0), leg(0), leg(1), leg(1)],
        )
        .unwrap();
        assert_eq!(plain.canonical(), split.canonical());
    }

    #[test]
    fn lone_loop_is_dimension() {
        let d = BasicDiagram::new(vec![Phi], vec![(0, 0)], vec![]).unwrap();
        let c = d.canonical();
        assert!(c.vertices.is_empty());
        assert_eq!(c.dim_power, 1);
    }

    #[test]
    fn metric_cycle_collapses_to_dimension() {
        let d = BasicDiagram::new(vec![Phi, Phi], vec![(0, 1), (0, 1)], vec![]).unwrap();
        assert_eq!(d.canonical(), BasicDiagram::dimension_scalar(1));
    }

    #[test]
    fn leg_labels_distinguish_labeled_diagrams() {
        let a = BasicDiagram::new(
            vec![Phi, V],
            vec![(0, 1), (0, 1)],
            vec![
                Leg {
                    vertex: 0,
                    label: Some('i'),
                },
                Leg {
                    vertex: 1,
                    label: Some('j'),
                },
            ],
        )
        .unwrap();
        let b = a.relabel(&[('i', 'j'), ('j', 'i')].into_iter().collect());
        assert_ne!(a.canonical(), b.canonical());
        assert_eq!(a.delabel().canonical(), b.delabel().canonical());
    }

    #[test]
    fn rejects_degree_zero_and_duplicate_labels() {
        assert!(BasicDiagram::new(vec![Phi, V], vec![], vec![leg(0)]).is_err());
        let dup = vec![
            Leg {
                vertex: 0,
                label: Some('i'),
            },
            Leg {
                vertex: 0,
                label: Some('i'),
            },
        ];
        assert!(BasicDiagram::new(vec![Phi], vec![], dup).is_err());
    }

    #[test]
    fn join_contracts_shared_labels() {
        let a = BasicDiagram::labeled_star(Phi, &['i', 'a', 'b']);
        let b = BasicDiagram::labeled_star(Phi, &['j', 'a', 'b']);
        let g = a.join(&b);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.legs.len(), 2);
    }
}
