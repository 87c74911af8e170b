//! Small arithmetic formulas such as `0.05*cos(x1)` evaluated on jets.

use std::sync::Arc;

use super::Expr;
use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(String, Box<Node>),
}

const FUNCS: &[&str] = &[
    "sin", "cos", "exp", "ln", "log", "sinh", "cosh", "sqrt", "logcosh",
];

struct P<'a> {
    s: &'a [u8],
    pos: usize,
    n: usize,
}

impl P<'_> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut a = self.term()?;
        loop {
            if self.eat(b'+') {
                a = Node::Bin('+', a.into(), self.term()?.into());
            } else if self.eat(b'-') {
                a = Node::Bin('-', a.into(), self.term()?.into());
            } else {
                return Ok(a);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut a = self.unary()?;
        loop {
            if self.eat(b'*') {
                a = Node::Bin('*', a.into(), self.unary()?.into());
            } else if self.eat(b'/') {
                a = Node::Bin('/', a.into(), self.unary()?.into());
            } else {
                return Ok(a);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(self.unary()?.into()));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Node::Bin('^', base.into(), self.unary()?.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        self.ws();
        if self.eat(b'(') {
            let e = self.expr()?;
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            return Ok(e);
        }
        let start = self.pos;
        let Some(&c) = self.s.get(self.pos) else {
            return self.err("unexpected end of formula");
        };
        if c.is_ascii_digit() || c == b'.' {
            while self.pos < self.s.len()
                && (self.s[self.pos].is_ascii_digit()
                    || self.s[self.pos] == b'.'
                    || self.s[self.pos] == b'e'
                    || (matches!(self.s[self.pos], b'+' | b'-') && self.s[self.pos - 1] == b'e'))
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
            return match text.parse() {
                Ok(v) => Ok(Node::Num(v)),
                Err(_) => {
                    self.pos = start;
                    self.err("bad number")
                }
            };
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let word = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
            if word == "pi" {
                return Ok(Node::Num(std::f64::consts::PI));
            }
            if FUNCS.contains(&word) {
                if !self.eat(b'(') {
                    return self.err("expected '(' after function name");
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                return Ok(Node::Call(word.to_string(), arg.into()));
            }
            let (head, digits) = word.split_at(1);
            if (head == "x" || head == "y") && !digits.is_empty() {
                if let Ok(k) = digits.parse::<usize>() {
                    if (1..=self.n).contains(&k) {
                        return Ok(Node::Var(k - 1));
                    }
                }
            }
            self.pos = start;
            return self.err(&format!("unknown name {word:?}"));
        }
        self.err("unexpected character")
    }
}

fn eval(node: &Node, x: &[Jet]) -> Jet {
    let zero = || &x[0] * 0.0;
    match node {
        Node::Num(v) => zero() + *v,
        Node::Var(i) => x[*i].clone(),
        Node::Neg(a) => -eval(a, x),
        Node::Bin(op, a, b) => {
            if *op == '^' {
                if let Node::Num(p) = **b {
                    let base = eval(a, x);
                    return if p.fract() == 0.0 && p.abs() < 64.0 {
                        base.powi(p as i32)
                    } else {
                        base.powf(p)
                    };
                }
                return (eval(a, x).ln() * eval(b, x)).exp();
            }
            let (l, r) = (eval(a, x), eval(b, x));
            match op {
                '+' => l + r,
                '-' => l - r,
                '*' => l * r,
                _ => l * r.recip(),
            }
        }
        Node::Call(f, a) => {
            let v = eval(a, x);
            match f.as_str() {
                "sin" => v.sin(),
                "cos" => v.cos(),
                "exp" => v.exp(),
                "ln" | "log" => v.ln(),
                "sinh" => v.sinh(),
                "cosh" => v.cosh(),
                "sqrt" => v.sqrt(),
                _ => v.ln_cosh(),
            }
        }
    }
}

/// Parses a formula in the variables `x1..xn` (or `y1..yn`).
pub fn parse_formula(src: &str, n: usize) -> Result<Expr> {
    let mut p = P {
        s: src.as_bytes(),
        pos: 0,
        n,
    };
    let node = p.expr()?;
    p.ws();
    if p.pos != src.len() {
        return p.err("trailing input");
    }
    Ok(Arc::new(move |x: &[Jet]| eval(&node, x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_derivatives() {
        let f = parse_formula("0.05*cos(x1) + x2^2/2 - -1", 2).unwrap();
        let j = f(&Jet::vars(&[0.4, 1.5], 2));
        assert!((j.value() - (0.05 * 0.4f64.cos() + 1.125 + 1.0)).abs() < 1e-15);
        assert!((j.partial(&[0]) + 0.05 * 0.4f64.sin()).abs() < 1e-15);
        assert!((j.partial(&[1, 1]) - 1.0).abs() < 1e-15);
        let g = parse_formula("exp(2*y1) * 1e-1", 1).unwrap();
        let j = g(&Jet::vars(&[0.5], 1));
        assert!((j.partial(&[0]) - 0.2 * 1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_formula("cos(x3)", 2).is_err());
        assert!(parse_formula("1 +", 1).is_err());
        assert!(parse_formula("foo(x1)", 1).is_err());
        assert!(matches!(
            parse_formula("x1 )", 1),
            Err(Error::Parse { pos: 3, .. })
        ));
    }
}
