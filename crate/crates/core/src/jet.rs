//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] in `n` variables of order `m` stores the Taylor coefficients
//! `c[α]` for all multi-indices `|α| ≤ m`; the partial derivative `∂^α f` at
//! the expansion point is `c[α]·α!`. Arithmetic and elementary functions act
//! on the truncated series, which gives exact derivatives (up to rounding) of
//! any closed-form expression.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug)]
struct Table {
    n: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    /// dense lookup by mixed radix `order + 1`; `usize::MAX` when too high
    dense: Vec<usize>,
    /// `(a, b, a+b)` for every pair whose product stays within the order
    pairs: Vec<(u32, u32, u32)>,
}

impl Table {
    fn build(n: usize, order: usize) -> Table {
        let base = order + 1;
        let size = base.pow(n as u32);
        let mut all: Vec<Vec<u8>> = (0..size)
            .map(|mut k| {
                let mut e = vec![0u8; n];
                for slot in e.iter_mut() {
                    *slot = (k % base) as u8;
                    k /= base;
                }
                e
            })
            .filter(|e| e.iter().map(|&x| x as usize).sum::<usize>() <= order)
            .collect();
        all.sort_by_key(|e| {
            (
                e.iter().map(|&x| x as usize).sum::<usize>(),
                std::cmp::Reverse(e.clone()),
            )
        });
        let mut dense = vec![usize::MAX; size];
        for (i, e) in all.iter().enumerate() {
            dense[Self::code(e, base)] = i;
        }
        let deg: Vec<usize> = all
            .iter()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .collect();
        let mut pairs = Vec::new();
        for a in 0..all.len() {
            for b in 0..all.len() {
                if deg[a] + deg[b] <= order {
                    let s: Vec<u8> = all[a].iter().zip(&all[b]).map(|(x, y)| x + y).collect();
                    pairs.push((a as u32, b as u32, dense[Self::code(&s, base)] as u32));
                }
            }
        }
        Table {
            n,
            order,
            exps: all,
            dense,
            pairs,
        }
    }

    fn code(e: &[u8], base: usize) -> usize {
        e.iter().rev().fold(0, |acc, &x| acc * base + x as usize)
    }

    fn index(&self, e: &[u8]) -> Option<usize> {
        if e.iter().map(|&x| x as usize).sum::<usize>() > self.order {
            return None;
        }
        Some(self.dense[Self::code(e, self.order + 1)])
    }

    fn get(n: usize, order: usize) -> Arc<Table> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<Table>>>;
        static TABLES: OnceLock<Cache> = OnceLock::new();
        let m = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut m = m.lock().unwrap();
        m.entry((n, order))
            .or_insert_with(|| Arc::new(Table::build(n, order)))
            .clone()
    }
}

#[derive(Clone, Debug)]
pub struct Jet {
    t: Arc<Table>,
    c: Vec<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Jet {
    pub fn constant(n: usize, order: usize, v: f64) -> Jet {
        let t = Table::get(n, order);
        let mut c = vec![0.0; t.exps.len()];
        c[0] = v;
        Jet { t, c }
    }

    /// The coordinate function `x_i` expanded at value `v`.
    pub fn variable(n: usize, order: usize, i: usize, v: f64) -> Jet {
        let mut j = Jet::constant(n, order, v);
        if order > 0 {
            let mut e = vec![0u8; n];
            e[i] = 1;
            let k = j.t.index(&e).unwrap();
            j.c[k] = 1.0;
        }
        j
    }

    /// Jet with prescribed partials; `partial` receives the multi-index of
    /// derivative counts per coordinate.
    pub fn from_partials(n: usize, order: usize, partial: impl Fn(&[u8]) -> f64) -> Jet {
        let t = Table::get(n, order);
        let c = t
            .exps
            .iter()
            .map(|e| partial(e) / e.iter().map(|&x| factorial(x as usize)).product::<f64>())
            .collect();
        Jet { t, c }
    }

    /// All coordinate functions expanded at `x`.
    pub fn vars(x: &[f64], order: usize) -> Vec<Jet> {
        (0..x.len())
            .map(|i| Jet::variable(x.len(), order, i, x[i]))
            .collect()
    }

    pub fn n(&self) -> usize {
        self.t.n
    }

    pub fn order(&self) -> usize {
        self.t.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative along the listed coordinates, e.g. `[0, 0, 1]` for
    /// `∂²_{x₀}∂_{x₁}`. Zero beyond the truncation order.
    pub fn partial(&self, idx: &[usize]) -> f64 {
        let mut e = vec![0u8; self.n()];
        for &i in idx {
            e[i] += 1;
        }
        match self.t.index(&e) {
            Some(k) => self.c[k] * e.iter().map(|&x| factorial(x as usize)).product::<f64>(),
            None => 0.0,
        }
    }

    /// Full array of order-`k` partials, flattened row-major over `n^k`.
    pub fn derivative_array(&self, k: usize) -> Vec<f64> {
        let n = self.n();
        let total = n.pow(k as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; k];
        for flat in 0..total {
            let mut r = flat;
            for slot in idx.iter_mut().rev() {
                *slot = r % n;
                r /= n;
            }
            out.push(self.partial(&idx));
        }
        out
    }

    fn with_table(&self, t: Arc<Table>) -> Jet {
        let mut c = vec![0.0; t.exps.len()];
        for (k, e) in t.exps.iter().enumerate() {
            if let Some(j) = self.t.index(e) {
                c[k] = self.c[j];
            }
        }
        Jet { t, c }
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        self.with_table(Table::get(self.n(), order))
    }

    /// Series of `∂f/∂x_i`, one order lower.
    pub fn d(&self, i: usize) -> Jet {
        let order = self.order().saturating_sub(1);
        let t = Table::get(self.n(), order);
        let mut c = vec![0.0; t.exps.len()];
        for (k, e) in t.exps.iter().enumerate() {
            let mut up = e.clone();
            up[i] += 1;
            if let Some(j) = self.t.index(&up) {
                c[k] = self.c[j] * up[i] as f64;
            }
        }
        Jet { t, c }
    }

    /// Antiderivative in `x_i` vanishing on `x_i = expansion point`, one
    /// order higher.
    pub fn integrate(&self, i: usize) -> Jet {
        let t = Table::get(self.n(), self.order() + 1);
        let mut c = vec![0.0; t.exps.len()];
        for (k, e) in self.t.exps.iter().enumerate() {
            let mut up = e.clone();
            up[i] += 1;
            let j = t.index(&up).unwrap();
            c[j] = self.c[k] / up[i] as f64;
        }
        Jet { t, c }
    }

    fn align(a: &Jet, b: &Jet) -> (Jet, Jet) {
        assert_eq!(a.n(), b.n(), "jets in different numbers of variables");
        match a.order().cmp(&b.order()) {
            std::cmp::Ordering::Equal => (a.clone(), b.clone()),
            std::cmp::Ordering::Less => (a.clone(), b.truncate(a.order())),
            std::cmp::Ordering::Greater => (a.truncate(b.order()), b.clone()),
        }
    }

    fn mul_same(&self, o: &Jet) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for &(a, b, s) in &self.t.pairs {
            c[s as usize] += self.c[a as usize] * o.c[b as usize];
        }
        Jet {
            t: self.t.clone(),
            c,
        }
    }

    /// `f(self)` from the normalized Taylor coefficients `f^(k)(a)/k!` of `f`
    /// at `a = self.value()`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let mut u = self.clone();
        u.c[0] = 0.0;
        let m = self.order().min(taylor.len().saturating_sub(1));
        let mut r = Jet::constant(self.n(), self.order(), taylor[m]);
        for k in (0..m).rev() {
            r = r.mul_same(&u);
            r.c[0] += taylor[k];
        }
        r
    }

    /// `f(inner)` where `self` is the Taylor jet of `f` at the point
    /// `inner[i].value()`. The result has the order of the inner jets, capped
    /// by the order of `self`.
    pub fn compose_multi(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.n(), "one inner jet per variable");
        let (m, order) = (inner[0].n(), inner[0].order());
        let shifted: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut d = j.truncate(order);
                d.c[0] = 0.0;
                d
            })
            .collect();
        let mut out = Jet::constant(m, order, 0.0);
        for (k, e) in self.t.exps.iter().enumerate() {
            if self.c[k] == 0.0 || e.iter().map(|&x| x as usize).sum::<usize>() > order {
                continue;
            }
            let mut term = Jet::constant(m, order, self.c[k]);
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    term = term.mul_same(&shifted[i]);
                }
            }
            for (a, b) in out.c.iter_mut().zip(&term.c) {
                *a += b;
            }
        }
        out
    }

    fn series<F: Fn(usize) -> f64>(&self, f: F) -> Jet {
        let t: Vec<f64> = (0..=self.order()).map(f).collect();
        self.compose(&t)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.series(|k| e / factorial(k))
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        self.series(|k| {
            if k == 0 {
                a.ln()
            } else {
                let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                s / (k as f64 * a.powi(k as i32))
            }
        })
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        self.series(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a.powi(k as i32 + 1))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.series(|k| [s, c, -s, -c][k % 4] / factorial(k))
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.series(|k| [c, -s, -c, s][k % 4] / factorial(k))
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.series(|k| if k % 2 == 0 { s } else { c } / factorial(k))
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.series(|k| if k % 2 == 0 { c } else { s } / factorial(k))
    }

    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        self.series(|k| {
            let mut binom = 1.0;
            for j in 0..k {
                binom *= (p - j as f64) / (j + 1) as f64;
            }
            binom * a.powf(p - k as f64)
        })
    }

    pub fn powi(&self, p: i32) -> Jet {
        if p < 0 {
            return self.recip().powi(-p);
        }
        let mut r = Jet::constant(self.n(), self.order(), 1.0);
        for _ in 0..p {
            r = r.mul_same(self);
        }
        r
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    /// `ln cosh`, evaluated without overflow for large arguments.
    pub fn ln_cosh(&self) -> Jet {
        let s = if self.value() < 0.0 {
            -self
        } else {
            self.clone()
        };
        &s + &((&s * -2.0).exp() + 1.0).ln() - std::f64::consts::LN_2
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                let (a, b) = Jet::align(self, o);
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(&a, &b)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $m(self, o: f64) -> Jet {
                self.$m(&Jet::constant(self.n(), self.order(), o))
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, o: f64) -> Jet {
                (&self).$m(o)
            }
        }
        impl $tr<&Jet> for f64 {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                Jet::constant(o.n(), o.order(), self).$m(o)
            }
        }
        impl $tr<Jet> for f64 {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
    };
}

binop!(Add, add, |a, b| Jet {
    t: a.t.clone(),
    c: a.c.iter().zip(&b.c).map(|(x, y)| x + y).collect()
});
binop!(Sub, sub, |a, b| Jet {
    t: a.t.clone(),
    c: a.c.iter().zip(&b.c).map(|(x, y)| x - y).collect()
});
binop!(Mul, mul, |a, b| a.mul_same(b));
binop!(Div, div, |a, b| a.mul_same(&b.recip()));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            t: self.t.clone(),
            c: self.c.iter().map(|x| -x).collect(),
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(mut it: I) -> Jet {
        let first = it.next().expect("sum of no jets");
        it.fold(first, |a, b| a + b)
    }
}
