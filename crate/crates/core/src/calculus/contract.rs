use num_bigint::BigInt;

use crate::diagram::{BasicDiagram, Coeff, DiagramSum, Mode};
use crate::error::{Error, Result};

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn arrangements(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut tail in arrangements(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, i| acc * i)
}

fn contract_pair(a: &BasicDiagram, b: &BasicDiagram, k: usize, out: &mut DiagramSum, c: &Coeff) {
    let (la, lb) = (a.legs.len(), b.legs.len());
    let ways =
        factorial(la) * factorial(lb) / (factorial(k) * factorial(la - k) * factorial(lb - k));
    let w = c / Coeff::from_integer(ways);
    let base = a.join(b);
    for sa in subsets(la, k) {
        for sb in subsets(lb, k) {
            for f in arrangements(&sb) {
                let mut d = base.clone();
                for (&i, &j) in sa.iter().zip(&f) {
                    let (u, v) = (d.legs[i].vertex, d.legs[la + j].vertex);
                    super::add_edge(&mut d, u, v);
                }
                let mut drop: Vec<usize> = sa
                    .iter()
                    .copied()
                    .chain(sb.iter().map(|&j| la + j))
                    .collect();
                drop.sort_unstable_by(|x, y| y.cmp(x));
                for i in drop {
                    d.legs.remove(i);
                }
                out.add_term(d, w.clone());
            }
        }
    }
}

/// Symmetric contraction product: the average over all ways of joining `k`
/// legs of one diagram to `k` legs of the other.
pub fn contract(d1: &DiagramSum, d2: &DiagramSum, k: usize) -> Result<DiagramSum> {
    for s in [d1, d2] {
        if matches!(s.mode()?, Some(Mode::Labeled | Mode::Mixed)) {
            return Err(Error::Mode(
                "contraction is defined for symmetric diagrams only".into(),
            ));
        }
        if let Some(sig) = s.signature() {
            if sig.unlabeled < k {
                return Err(Error::Rewrite(format!(
                    "cannot contract {k} legs of a diagram with {} legs",
                    sig.unlabeled
                )));
            }
        }
    }
    let mut out = DiagramSum::zero();
    for (a, ca) in d1.iter() {
        for (b, cb) in d2.iter() {
            contract_pair(a, b, k, &mut out, &(ca * cb));
        }
    }
    Ok(out)
}
