use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{analytic, BoxDomain, Expr, JetFn, PotentialInstance, Tag};
use crate::error::Error;
use crate::jet::Jet;

/// Determinant by cofactor expansion; fine for the small `n` used here.
pub(crate) fn jet_det(m: &[Vec<Jet>]) -> Jet {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc: Option<Jet> = None;
    for c in 0..n {
        let minor: Vec<Vec<Jet>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != c)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let t = &m[0][c] * &jet_det(&minor);
        acc = Some(match acc {
            None => t,
            Some(a) if c % 2 == 1 => a - t,
            Some(a) => a + t,
        });
    }
    acc.unwrap()
}

/// Instance whose source potential is defined from `Φ` and `W` so that the
/// Monge-Ampère equation holds identically: `V = W(∇Φ) − log det D²Φ`.
/// Derivatives of `V` come from differentiating that identity through jets.
pub fn manufactured_from(
    name: &str,
    n: usize,
    phi: Expr,
    w: Expr,
    domain: BoxDomain,
) -> PotentialInstance {
    let p2 = phi.clone();
    let w2 = w.clone();
    let v: JetFn = Arc::new(move |x: &[f64], order: usize| {
        let f = p2(&Jet::vars(x, order + 2));
        let grad: Vec<Jet> = (0..n).map(|i| f.d(i)).collect();
        let hess: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| grad[i].d(j)).collect())
            .collect();
        let det = jet_det(&hess);
        if det.value() <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: det.value(),
            });
        }
        let g: Vec<Jet> = grad.iter().map(|j| j.truncate(order)).collect();
        Ok(w2(&g) - det.ln())
    });
    PotentialInstance::new(name, n, analytic(phi), v, analytic(w))
        .with_domain(domain)
        .with_tags(&[Tag::Manufactured])
}

/// Random smooth convex pair on `[−1, 1]ⁿ`:
/// `Φ = |x|²/2 + Σ a_k log cosh(w_k·x + c_k)`, `W = |y|²/2 + b log cosh(u·y)`.
pub fn manufactured(n: usize, seed: u64) -> PotentialInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..n + 1)
        .map(|_| {
            let a = rng.gen_range(0.1..0.4);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (a, w, rng.gen_range(-0.5..0.5))
        })
        .collect();
    let b = rng.gen_range(0.1..0.3);
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let phi: Expr = Arc::new(move |x: &[Jet]| {
        let mut f: Jet = x.iter().map(|v| v * v * 0.5).sum();
        for (a, w, c) in &terms {
            let arg: Jet = x.iter().zip(w).map(|(xi, wi)| xi * *wi).sum::<Jet>() + *c;
            f = f + arg.ln_cosh() * *a;
        }
        f
    });
    let w: Expr = Arc::new(move |y: &[Jet]| {
        let q: Jet = y.iter().map(|v| v * v * 0.5).sum();
        let arg: Jet = y.iter().zip(&u).map(|(yi, ui)| yi * *ui).sum();
        q + arg.ln_cosh() * b
    });
    let mut inst = manufactured_from(
        &format!("manufactured{n}"),
        n,
        phi,
        w,
        BoxDomain::cube(n, -1.0, 1.0),
    );
    inst.notes = format!("seed {seed}");
    inst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_vanishes() {
        for n in 1..=3 {
            let m = manufactured(n, 42);
            for x in m.sample(15, 7) {
                assert!(m.ma_residual(&x).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_transport() {
        let q: Expr = Arc::new(|x: &[Jet]| x.iter().map(|v| v * v * 0.5).sum());
        let m = manufactured_from("id", 2, q.clone(), q, BoxDomain::cube(2, -1.0, 1.0));
        let v = m.v_jet(&[0.3, -0.7], 3).unwrap();
        assert!((v.value() - 0.29).abs() < 1e-14);
        assert!((v.partial(&[0, 0]) - 1.0).abs() < 1e-14);
        assert!(v.partial(&[0, 1]).abs() < 1e-14);
    }

    #[test]
    fn orthant_potential_recovers_minus_phi() {
        let phi: Expr = Arc::new(|x: &[Jet]| x.iter().map(|v| v.ln() * -2.0).sum::<Jet>());
        let zero: Expr = Arc::new(|y: &[Jet]| &y[0] * 0.0);
        let m = manufactured_from("o", 2, phi, zero, BoxDomain::cube(2, 0.5, 2.0))
            .with_support(BoxDomain::cube(2, 0.0, f64::INFINITY));
        let x = [1.3, 0.7];
        let v = m.v_jet(&x, 3).unwrap();
        let p = m.phi_jet(&x, 3).unwrap();
        for idx in [&[0][..], &[1], &[0, 1], &[1, 1], &[0, 0, 0]] {
            assert!((v.partial(idx) + p.partial(idx)).abs() < 1e-12);
        }
    }

    #[test]
    fn v_gradient_matches_finite_differences() {
        let m = manufactured(2, 42);
        let x = [0.2, -0.4];
        let j = m.v_jet(&x, 3).unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            let fa = m.v_jet(&a, 2).unwrap();
            let fb = m.v_jet(&b, 2).unwrap();
            let fd = (fa.value() - fb.value()) / (2.0 * h);
            assert!((fd - j.partial(&[i])).abs() < 1e-7);
            let fd3 = (fa.partial(&[0, 1]) - fb.partial(&[0, 1])) / (2.0 * h);
            assert!((fd3 - j.partial(&[0, 1, i])).abs() < 1e-6);
        }
    }
}
