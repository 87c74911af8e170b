//! Right-hand sides of the identities, as diagram sums with free labels
//! in the order the left-hand fields use.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::calculus::covariant_derivative_as;
use crate::diagram::{parse, q, DiagramSum};

const TEXTS: &[(&str, &str)] = &[
    ("d1", "-V(i)"),
    ("d1_alt", "-W(i) + Phi(i,k,l)*Phi(k,l)"),
    ("d2", "-V(i,j) + W(i,j) + Phi(i,a,b)*Phi(j,a,b)"),
    (
        "d3",
        "-V(i,j,k) + W(i,j,k) + W(s,i)*Phi(s,j,k) + W(s,j)*Phi(s,i,k) + W(s,k)*Phi(s,i,j) \
         + Phi(a,b,i)*Phi(a,b,j,k) + Phi(a,b,j)*Phi(a,b,i,k) + Phi(a,b,k)*Phi(a,b,i,j) \
         - 2*Phi(a,b,i)*Phi(b,c,j)*Phi(c,a,k)",
    ),
    ("cor32", "1/2*V(i,k)*Phi(k) - 1/2*W(i,k)*Phi(k) + 1/4*Phi(i,a,b)*Phi(k,a,b)*Phi(k) - W(i)"),
    (
        "lphi3",
        "-V(i,j,k) + W(i,j,k) + 1/2*V(i,m)*Phi(m,j,k) + 1/2*W(i,m)*Phi(m,j,k) + 1/2*V(j,m)*Phi(m,i,k) \
         + 1/2*W(j,m)*Phi(m,i,k) + 1/2*V(k,m)*Phi(m,i,j) + 1/2*W(k,m)*Phi(m,i,j) \
         - 1/2*Phi(i,l,c)*Phi(j,l,m)*Phi(k,m,c) + 1/4*Phi(i,c,d)*Phi(e,c,d)*Phi(e,j,k) \
         + 1/4*Phi(j,c,d)*Phi(e,c,d)*Phi(e,i,k) + 1/4*Phi(k,c,d)*Phi(e,c,d)*Phi(e,i,j)",
    ),
    (
        "lg_source_terms",
        "-V(i,a,b)*Phi(j,a,b) + W(i,a,b)*Phi(j,a,b) - V(j,a,b)*Phi(i,a,b) + W(j,a,b)*Phi(i,a,b) \
         + 1/2*V(i,s)*Phi(s,a,b)*Phi(j,a,b) + 1/2*W(i,s)*Phi(s,a,b)*Phi(j,a,b) \
         + 1/2*V(j,s)*Phi(s,a,b)*Phi(i,a,b) + 1/2*W(j,s)*Phi(s,a,b)*Phi(i,a,b) \
         + 2*V(a,m)*Phi(m,i,b)*Phi(j,a,b) + 2*W(a,m)*Phi(m,i,b)*Phi(j,a,b) \
         + 1/2*Phi(k,c,d)*Phi(i,c,d)*Phi(k,e,f)*Phi(j,e,f)",
    ),
    ("zerohess", "Phi(i,j) - 1/2*Phi(i,j,k)*Phi(k)"),
    ("g", "Phi(i,a,b)*Phi(j,a,b)"),
    ("riemann_sq", "1/16*Phi(i,c,x)*Phi(x,a,b)*Phi(j,c,y)*Phi(y,a,b) - 1/16*Phi(i,c,x)*Phi(x,a,b)*Phi(j,b,y)*Phi(y,a,c) - 1/16*Phi(i,b,x)*Phi(x,a,c)*Phi(j,c,y)*Phi(y,a,b) + 1/16*Phi(i,b,x)*Phi(x,a,c)*Phi(j,b,y)*Phi(y,a,c)"),
];

fn table() -> &'static BTreeMap<&'static str, DiagramSum> {
    static TABLE: OnceLock<BTreeMap<&'static str, DiagramSum>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut m: BTreeMap<&'static str, DiagramSum> = TEXTS
            .iter()
            .map(|(k, t)| (*k, parse(t).expect("built-in closed form parses")))
            .collect();
        // ∇_pΦ_{iab}∇^pΦ_j^{ab}
        let a = covariant_derivative_as(&parse("Phi(i,a,b)").unwrap(), 'p').expect("fresh label");
        let b = covariant_derivative_as(&parse("Phi(j,a,b)").unwrap(), 'p').expect("fresh label");
        let grad_sq = a.join(&b);
        let tail = &grad_sq.scale(&q(2, 1)) + &m["riemann_sq"].scale(&q(8, 1));
        let lg = &m["lg_source_terms"] + &tail;
        m.insert("grad_phi3_sq", grad_sq);
        m.insert("lg_tail", tail);
        m.insert("lg", lg);
        m
    })
}

/// Closed-form diagram for a named quantity: identity right-hand sides
/// (`d1`, `d2`, `d3`, `cor32`, `lphi3`, `lg`, `zerohess`) and the pieces
/// they are assembled from (`g`, `riemann_sq`, `grad_phi3_sq`, `lg_tail`,
/// `lg_source_terms`, `d1_alt`).
pub fn closed_form(name: &str) -> Option<&'static DiagramSum> {
    table().get(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{eliminate_loops, weighted_laplacian};

    #[test]
    fn all_forms_parse() {
        for name in [
            "d1", "d1_alt", "d2", "d3", "cor32", "lphi3", "lg", "zerohess", "lg_tail",
        ] {
            assert!(closed_form(name).is_some(), "{name}");
        }
    }

    #[test]
    fn calculus_reproduces_the_laplacians() {
        for (field, form) in [
            ("Phi(i)", "cor32"),
            ("Phi(i,j,k)", "lphi3"),
            ("Phi(i,a,b)*Phi(j,a,b)", "lg"),
        ] {
            let got = eliminate_loops(&weighted_laplacian(&parse(field).unwrap())).unwrap();
            assert!((&got - closed_form(form).unwrap()).is_zero(), "{form}");
        }
    }
}
