//! Translation of diagram sums into explicit index expressions.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed};

use super::basic::{BasicDiagram, Leg, Mode, VertexLabel};
use super::render::assign_letters;
use super::sum::{Coeff, DiagramSum};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variance {
    Lower,
    Upper,
}

/// One derivative array with its index slots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexFactor {
    pub label: VertexLabel,
    pub indices: Vec<(char, Variance)>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexTerm {
    pub coeff: Coeff,
    /// Power of the dimension `n` multiplying the term.
    pub dim_power: u32,
    pub factors: Vec<IndexFactor>,
}

/// Requested reading of the free indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExprMode {
    /// Leg labels are the free indices; unlabeled legs (mixed input) are
    /// symmetrized over fresh letters.
    Labeled,
    /// All legs are symmetrized with weight `1/L!`.
    Symmetric,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexExpression {
    pub free: Vec<char>,
    pub terms: Vec<IndexTerm>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Spreads the unlabeled legs of every term over all assignments of `names`,
/// weighting by `1/L!`. The result is a fully labeled sum.
fn symmetrize(s: &DiagramSum, names: &[char]) -> DiagramSum {
    let l = names.len();
    let perms = permutations(l);
    let w = Coeff::new(1.into(), factorial(l).into());
    let mut out = DiagramSum::zero();
    for (d, c) in s.iter() {
        let open: Vec<usize> = (0..d.legs().len())
            .filter(|&k| d.legs()[k].label.is_none())
            .collect();
        for p in &perms {
            let mut e = d.clone();
            for (slot, &k) in open.iter().enumerate() {
                e.legs[k] = Leg {
                    vertex: e.legs[k].vertex,
                    label: Some(names[p[slot]]),
                };
            }
            out.add_term(e, c * &w);
        }
    }
    out
}

fn fresh_names(count: usize, taken: &[char]) -> Vec<char> {
    "ijklmnopqrstuvwxyz"
        .chars()
        .filter(|c| !taken.contains(c))
        .take(count)
        .collect()
}

/// Index form of a single labeled diagram: edges oriented from the lower to
/// the higher vertex number, index lowered at the tail and raised at the head.
fn term_of(d: &BasicDiagram, coeff: Coeff) -> Result<IndexTerm> {
    let (legs, edges) = assign_letters(d)?;
    let mut slots: Vec<Vec<(char, Variance)>> = vec![Vec::new(); d.vertices().len()];
    for (leg, &c) in d.legs().iter().zip(&legs) {
        slots[leg.vertex].push((c, Variance::Lower));
    }
    for (&(a, b), &c) in d.edges().iter().zip(&edges) {
        slots[a].push((c, Variance::Lower));
        slots[b].push((c, Variance::Upper));
    }
    let factors = d
        .vertices()
        .iter()
        .zip(slots)
        .map(|(&label, mut indices)| {
            indices.sort_by_key(|&(c, v)| (v, c));
            IndexFactor { label, indices }
        })
        .collect();
    Ok(IndexTerm {
        coeff,
        dim_power: d.dim_power(),
        factors,
    })
}

/// Explicit index expression of a sum; terms are collected by canonical
/// form, so equal sums give equal expressions.
pub fn to_index_expression(s: &DiagramSum, mode: ExprMode) -> Result<IndexExpression> {
    let mode_in = s.mode()?;
    let sig = s.signature().unwrap_or(super::basic::LegSignature {
        unlabeled: 0,
        labels: vec![],
    });
    let (labeled, free) = match mode {
        ExprMode::Symmetric => {
            let base = if mode_in == Some(Mode::Symmetric) {
                s.clone()
            } else {
                s.delabel()
            };
            let names = fresh_names(sig.unlabeled + sig.labels.len(), &[]);
            (symmetrize(&base, &names), names)
        }
        ExprMode::Labeled => {
            let names = fresh_names(sig.unlabeled, &sig.labels);
            let mut free = names.clone();
            free.extend(&sig.labels);
            (symmetrize(s, &names), free)
        }
    };
    if free.len() != sig.unlabeled + sig.labels.len() {
        return Err(Error::InvalidDiagram("too many free indices".into()));
    }
    let terms = labeled
        .iter()
        .map(|(d, c)| term_of(d, c.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexExpression { free, terms })
}

impl IndexExpression {
    /// Rebuilds the labeled diagram sum the expression denotes.
    pub fn to_sum(&self) -> Result<DiagramSum> {
        let mut out = DiagramSum::zero();
        for t in &self.terms {
            let mut occ: BTreeMap<char, Vec<usize>> = BTreeMap::new();
            for (v, f) in t.factors.iter().enumerate() {
                for &(c, _) in &f.indices {
                    occ.entry(c).or_default().push(v);
                }
            }
            let mut edges = Vec::new();
            let mut legs = Vec::new();
            for (c, vs) in occ {
                match vs.as_slice() {
                    [v] => legs.push(Leg {
                        vertex: *v,
                        label: Some(c),
                    }),
                    [a, b] => edges.push((*a, *b)),
                    _ => return Err(Error::InvalidDiagram(format!("index {c} used 3+ times"))),
                }
            }
            let mut d =
                BasicDiagram::new(t.factors.iter().map(|f| f.label).collect(), edges, legs)?;
            d.dim_power = t.dim_power;
            out.add_term(d, t.coeff.clone());
        }
        Ok(out)
    }
}

impl fmt::Display for IndexFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let low: String = self
            .indices
            .iter()
            .filter(|i| i.1 == Variance::Lower)
            .map(|i| i.0)
            .collect();
        let up: String = self
            .indices
            .iter()
            .filter(|i| i.1 == Variance::Upper)
            .map(|i| i.0)
            .collect();
        write!(f, "{}", self.label)?;
        if !low.is_empty() {
            write!(f, "_{{{low}}}")?;
        }
        if !up.is_empty() {
            write!(f, "^{{{up}}}")?;
        }
        Ok(())
    }
}

impl fmt::Display for IndexExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = t.coeff.abs();
            let mut parts: Vec<String> = Vec::new();
            if !a.is_one() || (t.factors.is_empty() && t.dim_power == 0) {
                parts.push(a.to_string());
            }
            match t.dim_power {
                0 => {}
                1 => parts.push("n".into()),
                k => parts.push(format!("n^{k}")),
            }
            parts.extend(t.factors.iter().map(|x| x.to_string()));
            f.write_str(&parts.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse::parse;
    use crate::diagram::sum::q;

    #[test]
    fn single_vertex_symmetric() {
        let s = DiagramSum::from_diagram(BasicDiagram::star(VertexLabel::Phi, 3));
        let e = to_index_expression(&s, ExprMode::Symmetric).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.terms[0].coeff, q(1, 1));
        assert_eq!(e.to_string(), "Phi_{ijk}");
    }

    #[test]
    fn metric_square_collapses() {
        let s = parse("Phi(i,a,b)*Phi(j,a,b)").unwrap().delabel();
        let e = to_index_expression(&s, ExprMode::Symmetric).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.terms[0].coeff, q(1, 1));
    }

    #[test]
    fn contraction_with_v_symmetrizes() {
        let s = parse("Phi(i,a,b)*V(j,a,b)").unwrap().delabel();
        let e = to_index_expression(&s, ExprMode::Symmetric).unwrap();
        assert_eq!(e.terms.len(), 2);
        assert!(e.terms.iter().all(|t| t.coeff == q(1, 2)));
        let again = e.to_sum().unwrap();
        assert_eq!(again.delabel(), s);
    }

    #[test]
    fn labeled_expression_round_trips() {
        let s = parse("Phi(i,j,a)*W(a) - V(i,j)").unwrap();
        let e = to_index_expression(&s, ExprMode::Labeled).unwrap();
        assert_eq!(e.to_sum().unwrap(), s);
    }
}
