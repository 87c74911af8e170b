//! Reader for the index DSL.
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := [rational '*'] factor ('*' factor)*
//! factor   := ('Phi'|'V'|'W') '(' index (',' index)* ')'
//! index    := single ASCII letter
//! rational := integer ['/' positive-integer]
//! ```
//!
//! An index that appears twice in a term is contracted (an internal edge, or a
//! loop when both occurrences sit on the same factor); an index that appears
//! once is a labeled external leg.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::basic::{BasicDiagram, Leg, VertexLabel};
use super::sum::{Coeff, DiagramSum};
use crate::error::{Error, Result};

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(text.parse().unwrap())
    }

    fn rational(&mut self) -> Result<Coeff> {
        let num = self.integer()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let den = self.integer()?;
            if den.is_zero() {
                return self.err("zero denominator");
            }
            Ok(Coeff::new(num, den))
        } else {
            Ok(Coeff::from_integer(num))
        }
    }

    fn vertex_label(&mut self) -> Result<VertexLabel> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(b"Phi") {
            self.pos += 3;
            Ok(VertexLabel::Phi)
        } else if rest.starts_with(b"V") {
            self.pos += 1;
            Ok(VertexLabel::V)
        } else if rest.starts_with(b"W") {
            self.pos += 1;
            Ok(VertexLabel::W)
        } else {
            self.err("expected `Phi`, `V` or `W`")
        }
    }

    fn factor(&mut self) -> Result<(VertexLabel, Vec<(char, usize)>)> {
        let label = self.vertex_label()?;
        self.expect(b'(')?;
        let mut idx = Vec::new();
        loop {
            self.skip_ws();
            let at = self.pos;
            match self.src.get(self.pos) {
                Some(c) if c.is_ascii_alphabetic() => {
                    self.pos += 1;
                    idx.push((*c as char, at));
                }
                _ => return self.err("expected index letter"),
            }
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => return self.err("expected `,` or `)`"),
            }
        }
        Ok((label, idx))
    }

    fn term(&mut self, sign: Coeff) -> Result<(BasicDiagram, Coeff)> {
        let mut coeff = sign;
        // a term may open with its own sign before the rational
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            if c == b'-' {
                coeff = -coeff;
            }
        }
        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            coeff *= self.rational()?;
            self.expect(b'*')?;
        }
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(b'*') {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        let d = build_term(&factors)?;
        Ok((d, coeff))
    }
}

fn build_term(factors: &[(VertexLabel, Vec<(char, usize)>)]) -> Result<BasicDiagram> {
    let mut seen: BTreeMap<char, Vec<(usize, usize)>> = BTreeMap::new();
    for (v, (_, idx)) in factors.iter().enumerate() {
        for &(c, at) in idx {
            seen.entry(c).or_default().push((v, at));
        }
    }
    let vertices = factors.iter().map(|(l, _)| *l).collect();
    let mut edges = Vec::new();
    let mut legs = Vec::new();
    for (c, occ) in seen {
        match occ.len() {
            1 => legs.push(Leg {
                vertex: occ[0].0,
                label: Some(c),
            }),
            2 => edges.push((occ[0].0, occ[1].0)),
            _ => {
                return Err(Error::Parse {
                    pos: occ[2].1,
                    msg: format!("index `{c}` appears more than twice in one term"),
                })
            }
        }
    }
    BasicDiagram::new(vertices, edges, legs)
}

/// Parses a DSL expression into a labeled diagram sum.
pub fn parse(text: &str) -> Result<DiagramSum> {
    let mut cur = Cursor {
        src: text.as_bytes(),
        pos: 0,
    };
    if !text.is_ascii() {
        let pos = text
            .char_indices()
            .find(|(_, c)| !c.is_ascii())
            .map_or(0, |(i, _)| i);
        return Err(Error::Parse {
            pos,
            msg: "non-ASCII character".into(),
        });
    }
    let mut sum = DiagramSum::zero();
    let mut labels: Option<Vec<char>> = None;
    let mut sign = Coeff::one();
    loop {
        let start = cur.pos;
        let (d, c) = cur.term(sign)?;
        let sig = d.signature().labels;
        match &labels {
            None => labels = Some(sig),
            Some(l) if *l != sig => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("free indices {sig:?} differ from earlier terms {l:?}"),
                })
            }
            _ => {}
        }
        sum.add_term(d, c);
        match cur.peek() {
            None => break,
            Some(b'+') => {
                cur.pos += 1;
                sign = Coeff::one();
            }
            Some(b'-') => {
                cur.pos += 1;
                sign = -Coeff::one();
            }
            Some(_) => return cur.err("expected `+`, `-` or end of input"),
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::sum::q;

    #[test]
    fn metric_square_is_one_diagram() {
        let s = parse("Phi(i,a,b)*Phi(j,a,b)").unwrap();
        assert_eq!(s.len(), 1);
        let (d, c) = s.iter().next().unwrap();
        assert_eq!(*c, q(1, 1));
        assert_eq!(d.edges().len(), 2);
        assert_eq!(d.legs().len(), 2);
    }

    #[test]
    fn repeated_index_is_loop() {
        let s = parse("Phi(i,k,k)").unwrap();
        let (d, _) = s.iter().next().unwrap();
        assert_eq!(d.edges(), &[(0, 0)]);
        assert_eq!(d.legs()[0].label, Some('i'));
    }

    #[test]
    fn rationals_and_signs() {
        let s = parse("-3/2*V(i) + 1/2 * V(i) - W(i)").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.total_weight(), q(-2, 1));
    }

    #[test]
    fn errors_carry_position() {
        match parse("Phi(i,j) + Q(i,j)") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 11),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("Phi(a,a,a)"),
            Err(Error::Parse { pos: 8, .. })
        ));
        assert!(parse("Phi(i) + V(j)").is_err());
        assert!(parse("Phi(i,)").is_err());
        assert!(parse("1/0*Phi(i)").is_err());
        assert!(parse("").is_err());
    }
}
