//! Exact symbolic assertions, in rational arithmetic.

use std::collections::BTreeMap;

use super::closed_forms::closed_form;
use super::{CheckResult, PointRecord};
use crate::calculus::{
    covariant_derivative, covariant_derivative_as, eliminate_loops, eliminate_loops_limited,
    loop_rule, weighted_laplacian,
};
use crate::diagram::{parse, q, Coeff, DiagramSum};
use crate::error::Result;

pub const DIAGRAM_IDS: &[&str] = &[
    "fig1_parse",
    "fig3_derivative",
    "cor32_exact",
    "lphi3_exact",
    "lg_exact",
    "k3_rule",
];

fn weights(s: &DiagramSum) -> Vec<Coeff> {
    let mut w: Vec<Coeff> = s.iter().map(|(_, c)| c.clone()).collect();
    w.sort();
    w
}

fn expect_weights(s: &DiagramSum, want: &[Coeff]) -> (usize, String) {
    let got = weights(s);
    let mut want = want.to_vec();
    want.sort();
    if got == want {
        (0, format!("{} diagrams, weights as expected", got.len()))
    } else {
        let show: Vec<String> = got.iter().map(|c| c.to_string()).collect();
        (1, format!("got weights [{}]", show.join(", ")))
    }
}

fn expect_zero(diff: &DiagramSum) -> (usize, String) {
    if diff.is_zero() {
        (0, "difference is the zero sum".into())
    } else {
        (diff.len(), format!("difference: {diff}"))
    }
}

fn assertion(id: &str) -> Result<(usize, String)> {
    Ok(match id {
        "fig1_parse" => {
            let d3 = closed_form("d3").expect("d3 form").delabel();
            expect_weights(&d3, &[q(-1, 1), q(1, 1), q(3, 1), q(3, 1), q(-2, 1)])
        }
        "fig3_derivative" => {
            let d = covariant_derivative(&parse("Phi(i,j,k)")?).delabel();
            expect_weights(&d, &[q(1, 1), q(-3, 2)])
        }
        "cor32_exact" => {
            let l = eliminate_loops(&weighted_laplacian(&parse("Phi(i)")?))?;
            expect_zero(&(&l - closed_form("cor32").unwrap()))
        }
        "lphi3_exact" => {
            let l = eliminate_loops(&weighted_laplacian(&parse("Phi(i,j,k)")?))?;
            expect_zero(&(&l - closed_form("lphi3").unwrap()))
        }
        "lg_exact" => {
            // L g minus the gradient and curvature squares leaves the source terms
            let l = eliminate_loops(&weighted_laplacian(closed_form("g").unwrap()))?;
            let rest = &l - closed_form("lg_tail").unwrap();
            expect_zero(&(&rest - closed_form("lg_source_terms").unwrap()))
        }
        "k3_rule" => {
            // differentiate the k = 2 rule, reduce with k ≤ 2, compare with k = 3
            let lhs2 = parse("Phi(i,j,a,a)")?;
            let target = parse("Phi(i,j,p,a,a)")?;
            let d_rhs = covariant_derivative_as(loop_rule(2)?, 'p')?;
            let d_lhs = covariant_derivative_as(&lhs2, 'p')?;
            let derived = eliminate_loops_limited(&(&d_rhs - &(&d_lhs - &target)), 2)?;
            let map: BTreeMap<char, char> = [('k', 'p')].into_iter().collect();
            expect_zero(&(&derived - &loop_rule(3)?.relabel(&map)))
        }
        other => {
            return Err(crate::error::Error::Config(format!(
                "unknown diagram assertion {other:?}"
            )))
        }
    })
}

/// All exact assertions; the residual is the number of surviving terms.
pub fn diagram_assertions() -> Vec<CheckResult> {
    DIAGRAM_IDS
        .iter()
        .map(|id| match assertion(id) {
            Ok((bad, notes)) => CheckResult::from_records(
                id,
                "symbolic",
                0.0,
                vec![PointRecord {
                    x: Vec::new(),
                    residual: bad as f64,
                    value: bad as f64,
                }],
                notes,
            ),
            Err(e) => CheckResult::failed(id, "symbolic", 0.0, e.to_string()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::Status;

    #[test]
    fn all_assertions_hold() {
        for r in diagram_assertions() {
            assert_eq!(r.status, Status::Pass, "{r:?}");
        }
    }
}
