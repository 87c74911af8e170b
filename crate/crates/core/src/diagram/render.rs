//! DSL and Graphviz output for diagram sums.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::{One, Signed};

use super::basic::BasicDiagram;
use super::sum::{Coeff, DiagramSum};
use crate::error::{Error, Result};

const LEG_LETTERS: &str = "ijklmnopqrstuvwxyz";
const EDGE_LETTERS: &str = "abcdefghstuvwxyzpqrmnolkjiABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Letters for unlabeled legs and internal edges of one term, avoiding the
/// labels already present.
pub(crate) fn assign_letters(d: &BasicDiagram) -> Result<(Vec<char>, Vec<char>)> {
    let mut used: BTreeSet<char> = d.legs().iter().filter_map(|l| l.label).collect();
    let mut take = |pool: &str| -> Result<char> {
        let c = pool
            .chars()
            .find(|c| !used.contains(c))
            .ok_or_else(|| Error::InvalidDiagram("diagram too large to letter".into()))?;
        used.insert(c);
        Ok(c)
    };
    let mut legs = Vec::with_capacity(d.legs().len());
    for leg in d.legs() {
        legs.push(match leg.label {
            Some(c) => c,
            None => take(LEG_LETTERS)?,
        });
    }
    let mut edges = Vec::with_capacity(d.edges().len());
    for _ in d.edges() {
        edges.push(take(EDGE_LETTERS)?);
    }
    Ok((legs, edges))
}

fn render_term(d: &BasicDiagram) -> Result<String> {
    if d.vertices().is_empty() && d.dim_power() == 0 {
        return Err(Error::InvalidDiagram(
            "a bare constant has no DSL form".into(),
        ));
    }
    let (leg_names, edge_names) = assign_letters(d)?;
    let mut slots: Vec<Vec<char>> = vec![Vec::new(); d.vertices().len()];
    for (leg, &c) in d.legs().iter().zip(&leg_names) {
        slots[leg.vertex].push(c);
    }
    for (&(a, b), &c) in d.edges().iter().zip(&edge_names) {
        slots[a].push(c);
        slots[b].push(c);
    }
    let mut factors: Vec<String> = d
        .vertices()
        .iter()
        .zip(&slots)
        .map(|(l, idx)| {
            let idx: Vec<String> = idx.iter().map(|c| c.to_string()).collect();
            format!("{}({})", l.name(), idx.join(","))
        })
        .collect();
    // each power of n is a closed metric loop
    let mut spare = EDGE_LETTERS
        .chars()
        .filter(|c| !leg_names.contains(c) && !edge_names.contains(c));
    for _ in 0..d.dim_power() {
        let c = spare
            .next()
            .ok_or_else(|| Error::InvalidDiagram("diagram too large to letter".into()))?;
        factors.push(format!("Phi({c},{c})"));
    }
    Ok(factors.join("*"))
}

fn coeff_prefix(c: &Coeff) -> String {
    let a = c.abs();
    if a.is_one() {
        String::new()
    } else if a.is_integer() {
        format!("{}*", a.numer())
    } else {
        format!("{}/{}*", a.numer(), a.denom())
    }
}

/// Writes a sum in the index DSL. Unlabeled legs receive fresh letters, so
/// symmetric sums come back labeled and must be de-labeled after parsing.
pub fn render_dsl(s: &DiagramSum) -> Result<String> {
    if s.is_zero() {
        return Ok("0".into());
    }
    let mut out = String::new();
    for (i, (d, c)) in s.iter().enumerate() {
        let neg = c.is_negative();
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(&coeff_prefix(c));
        out.push_str(&render_term(d)?);
    }
    Ok(out)
}

/// Graphviz rendering: one cluster per term, labeled with its coefficient.
pub fn render_dot(s: &DiagramSum) -> String {
    let mut out = String::from("graph diagrams {\n  node [shape=circle, fontsize=10];\n");
    for (t, (d, c)) in s.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{t} {{");
        let mut label = c.to_string();
        if d.dim_power() > 0 {
            let _ = write!(label, " n^{}", d.dim_power());
        }
        let _ = writeln!(out, "    label=\"{label}\";");
        for (v, l) in d.vertices().iter().enumerate() {
            let name = match l.name() {
                "Phi" => "&Phi;",
                other => other,
            };
            let _ = writeln!(out, "    t{t}v{v} [label=\"{name}\"];");
        }
        for (k, leg) in d.legs().iter().enumerate() {
            let lab = leg.label.map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(out, "    t{t}l{k} [shape=plaintext, label=\"{lab}\"];");
            let _ = writeln!(out, "    t{t}v{} -- t{t}l{k};", leg.vertex);
        }
        for &(a, b) in d.edges() {
            let _ = writeln!(out, "    t{t}v{a} -- t{t}v{b};");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse::parse;

    #[test]
    fn labeled_round_trip() {
        for text in [
            "Phi(i,a,b)*Phi(j,a,b)",
            "-V(i,j) + W(i,j) + Phi(i,j,s)*W(s) + Phi(i,a,b)*Phi(j,a,b)",
            "3/4*Phi(i,a,b)*Phi(c,a,b)*Phi(j,c,d)*Phi(d,e,e) - 2*V(i)*Phi(j,a,a)",
        ] {
            let s = parse(text).unwrap();
            let back = parse(&render_dsl(&s).unwrap()).unwrap();
            assert_eq!(s, back, "{text}");
        }
    }

    #[test]
    fn symmetric_round_trip_via_delabel() {
        let s = parse("Phi(i,j,a)*V(a,k) - 1/3*W(i,j,k)").unwrap().delabel();
        let back = parse(&render_dsl(&s).unwrap()).unwrap().delabel();
        assert_eq!(s, back);
    }

    #[test]
    fn dimension_factor_renders_as_trace() {
        let s = parse("Phi(a,a)*V(i)").unwrap();
        assert_eq!(s.iter().next().unwrap().0.dim_power(), 1);
        assert_eq!(parse(&render_dsl(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn dot_has_one_cluster_per_term() {
        let s = parse("V(i) - W(i)").unwrap();
        let dot = render_dot(&s);
        assert_eq!(dot.matches("subgraph").count(), 2);
    }
}
