use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::basic::{BasicDiagram, LegSignature, Mode};
use crate::error::{Error, Result};

/// Exact rational coefficient.
pub type Coeff = BigRational;

/// Shorthand for the rational `num/den`.
pub fn q(num: i64, den: i64) -> Coeff {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Formal linear combination of canonical basic diagrams.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DiagramSum {
    terms: BTreeMap<BasicDiagram, Coeff>,
}

impl DiagramSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_diagram(d: BasicDiagram) -> Self {
        Self::from_term(d, Coeff::one())
    }

    pub fn from_term(d: BasicDiagram, c: Coeff) -> Self {
        let mut s = Self::zero();
        s.add_term(d, c);
        s
    }

    /// Adds `c·d` after canonicalizing `d`. Terms must share one leg
    /// signature; mixing signatures is a programming error.
    pub fn add_term(&mut self, d: BasicDiagram, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let key = d.canonical();
        if let Some(sig) = self.signature() {
            assert_eq!(
                sig,
                key.signature(),
                "diagram sum with mixed leg signatures"
            );
        }
        let vanished = {
            let slot = self.terms.entry(key.clone()).or_insert_with(Coeff::zero);
            *slot += c;
            slot.is_zero()
        };
        if vanished {
            self.terms.remove(&key);
        }
    }

    /// Like [`add_term`](Self::add_term) but reports a signature mismatch.
    pub fn try_add_term(&mut self, d: BasicDiagram, c: Coeff) -> Result<()> {
        if let Some(sig) = self.signature() {
            if sig != d.signature() {
                return Err(Error::Mode(format!(
                    "leg signature {:?} differs from {:?}",
                    d.signature(),
                    sig
                )));
            }
        }
        self.add_term(d, c);
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasicDiagram, &Coeff)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, d: &BasicDiagram) -> Coeff {
        self.terms
            .get(&d.canonical())
            .cloned()
            .unwrap_or_else(Coeff::zero)
    }

    pub fn signature(&self) -> Option<LegSignature> {
        self.terms.keys().next().map(|d| d.signature())
    }

    /// Common mode of the terms, or an error when they disagree.
    pub fn mode(&self) -> Result<Option<Mode>> {
        let mut mode = None;
        for d in self.terms.keys() {
            let m = d.mode();
            match mode {
                None => mode = Some(m),
                Some(prev) if prev != m => {
                    return Err(Error::Mode("terms mix labeled and unlabeled legs".into()))
                }
                _ => {}
            }
        }
        Ok(mode)
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        DiagramSum {
            terms: self.terms.iter().map(|(d, v)| (d.clone(), v * c)).collect(),
        }
    }

    /// Sum of the coefficients, handy for sanity checks on rule weights.
    pub fn total_weight(&self) -> Coeff {
        self.terms.values().fold(Coeff::zero(), |acc, v| acc + v)
    }

    /// Forgets leg labels (labeled → symmetric mode). The value becomes the
    /// symmetrization of the original tensor.
    pub fn delabel(&self) -> Self {
        let mut out = Self::zero();
        for (d, c) in &self.terms {
            out.add_term(d.delabel(), c.clone());
        }
        out
    }

    pub fn relabel(&self, map: &BTreeMap<char, char>) -> Self {
        let mut out = Self::zero();
        for (d, c) in &self.terms {
            out.add_term(d.relabel(map), c.clone());
        }
        out
    }

    /// Bilinear juxtaposition; equal labels across factors are contracted.
    pub fn join(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.join(b), ca * cb);
            }
        }
        out
    }

    /// Applies `f` to every term and collects the weighted results.
    pub fn flat_map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&BasicDiagram) -> Result<DiagramSum>,
    {
        let mut out = Self::zero();
        for (d, c) in &self.terms {
            for (e, ce) in f(d)?.terms {
                out.add_term(e, ce * c);
            }
        }
        Ok(out)
    }
}

impl Add for &DiagramSum {
    type Output = DiagramSum;
    fn add(self, rhs: &DiagramSum) -> DiagramSum {
        let mut out = self.clone();
        for (d, c) in &rhs.terms {
            out.add_term(d.clone(), c.clone());
        }
        out
    }
}

impl Add for DiagramSum {
    type Output = DiagramSum;
    fn add(self, rhs: DiagramSum) -> DiagramSum {
        &self + &rhs
    }
}

impl Sub for &DiagramSum {
    type Output = DiagramSum;
    fn sub(self, rhs: &DiagramSum) -> DiagramSum {
        let mut out = self.clone();
        for (d, c) in &rhs.terms {
            out.add_term(d.clone(), -c.clone());
        }
        out
    }
}

impl Sub for DiagramSum {
    type Output = DiagramSum;
    fn sub(self, rhs: DiagramSum) -> DiagramSum {
        &self - &rhs
    }
}

impl Neg for &DiagramSum {
    type Output = DiagramSum;
    fn neg(self) -> DiagramSum {
        self.scale(&-Coeff::one())
    }
}

impl Mul<&DiagramSum> for &Coeff {
    type Output = DiagramSum;
    fn mul(self, rhs: &DiagramSum) -> DiagramSum {
        rhs.scale(self)
    }
}

impl fmt::Display for DiagramSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match super::render::render_dsl(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "<{} terms>", self.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::basic::VertexLabel::*;

    #[test]
    fn cancellation_removes_terms() {
        let d = BasicDiagram::star(Phi, 3);
        let mut s = DiagramSum::from_term(d.clone(), q(1, 2));
        s.add_term(d, q(-1, 2));
        assert!(s.is_zero());
    }

    #[test]
    fn isomorphic_terms_collect() {
        let a = BasicDiagram::labeled_star(V, &['i', 'j']);
        let b = BasicDiagram::labeled_star(V, &['j', 'i']);
        let s = &DiagramSum::from_diagram(a) + &DiagramSum::from_diagram(b);
        assert_eq!(s.len(), 1);
        assert_eq!(s.total_weight(), q(2, 1));
    }

    #[test]
    fn mismatched_signature_is_reported() {
        let mut s = DiagramSum::from_diagram(BasicDiagram::star(V, 2));
        assert!(s.try_add_term(BasicDiagram::star(V, 3), q(1, 1)).is_err());
    }
}
