use num_traits::Zero;

use super::{anchor, object_weight, objects, Object};
use crate::diagram::{BasicDiagram, DiagramSum, Leg};
use crate::error::{Error, Result};

/// First letter from `pqrstuvwxyz` not already used as a leg label.
pub fn fresh_label(d: &DiagramSum) -> char {
    let used = d.signature().map(|s| s.labels).unwrap_or_default();
    "pqrstuvwxyzabcdefgh"
        .chars()
        .find(|c| !used.contains(c))
        .unwrap_or('z')
}

fn derive_term(d: &BasicDiagram, p: char, out: &mut DiagramSum, c: &crate::diagram::Coeff) {
    for o in objects(d) {
        let w = object_weight(d, o);
        if w.is_zero() {
            continue;
        }
        let mut e = d.clone();
        let at = match o {
            Object::Vertex(v) => v,
            _ => anchor(&mut e, o),
        };
        e.legs.push(Leg {
            vertex: at,
            label: Some(p),
        });
        out.add_term(e, w * c);
    }
}

/// Covariant derivative with the new leg labeled `p`.
pub fn covariant_derivative_as(d: &DiagramSum, p: char) -> Result<DiagramSum> {
    if d.signature().is_some_and(|s| s.labels.contains(&p)) {
        return Err(Error::Mode(format!("label `{p}` is already in use")));
    }
    let mut out = DiagramSum::zero();
    for (t, c) in d.iter() {
        derive_term(t, p, &mut out, c);
    }
    Ok(out)
}

/// Covariant derivative; the new leg gets the first free letter from `p` on.
pub fn covariant_derivative(d: &DiagramSum) -> DiagramSum {
    covariant_derivative_as(d, fresh_label(d)).expect("fresh label is unused")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{parse, q, VertexLabel::*};

    #[test]
    fn phi3_derivative_has_two_terms() {
        let s = covariant_derivative(&DiagramSum::from_diagram(BasicDiagram::star(Phi, 3)));
        assert_eq!(s.len(), 2);
        let mut w: Vec<_> = s.iter().map(|(_, c)| c.clone()).collect();
        w.sort();
        assert_eq!(w, vec![q(-3, 2), q(1, 1)]);
    }

    #[test]
    fn hessian_of_v() {
        let s = covariant_derivative_as(&parse("V(i)").unwrap(), 'p').unwrap();
        assert_eq!(s, parse("V(i,p) - 1/2*Phi(i,p,k)*V(k)").unwrap());
    }

    #[test]
    fn metric_is_parallel() {
        let s = covariant_derivative(&parse("Phi(i,j)").unwrap());
        assert!(s.is_zero());
        let s = covariant_derivative(&DiagramSum::from_diagram(BasicDiagram::star(Phi, 2)));
        assert!(s.is_zero());
    }

    #[test]
    fn lowered_w_leg() {
        // W_i = Φ_ia ∂^a W, so ∇_p W_i = W_ip + Φ_ip^a W_a - 1/2 Φ_ip^a W_a
        let s = covariant_derivative_as(&parse("W(i)").unwrap(), 'p').unwrap();
        assert_eq!(s, parse("W(i,p) + 1/2*Phi(i,p,k)*W(k)").unwrap());
    }

    #[test]
    fn leibniz_on_disjoint_union() {
        let a = parse("Phi(i,a,b)*V(j,a,b)").unwrap();
        let b = parse("W(k,c)*Phi(c,l,m)").unwrap();
        let lhs = covariant_derivative_as(&a.join(&b), 'p').unwrap();
        let rhs = &covariant_derivative_as(&a, 'p').unwrap().join(&b)
            + &a.join(&covariant_derivative_as(&b, 'p').unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn rejects_used_label() {
        assert!(covariant_derivative_as(&parse("V(p)").unwrap(), 'p').is_err());
    }
}
