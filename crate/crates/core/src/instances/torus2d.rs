//! Periodic Monge-Ampère on the flat torus `[0, 2π)²` with a spectral
//! damped Newton method. The potential is `Φ = |x|²/2 + u`, `u` periodic.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{BoxDomain, Expr, JetFn, PotentialInstance, Tag};
use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusOptions {
    pub grid: usize,
    /// Target for the max-norm residual on the grid.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for TorusOptions {
    fn default() -> Self {
        TorusOptions {
            grid: 64,
            tol: 1e-11,
            max_steps: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSummary {
    pub grid: usize,
    pub newton_steps: usize,
    pub residual: f64,
    /// Constant absorbed into `V` so that the equation balances.
    pub constant: f64,
    pub min_hessian_det: f64,
}

struct Spectral {
    n: usize,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
    k: Vec<f64>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        let k = (0..n)
            .map(|j| {
                if 2 * j < n {
                    j as f64
                } else if 2 * j == n {
                    0.0
                } else {
                    j as f64 - n as f64
                }
            })
            .collect();
        Spectral {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
            k,
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for b in 0..n {
            for a in 0..n {
                col[a] = data[a * n + b];
            }
            plan.process(&mut col);
            for a in 0..n {
                data[a * n + b] = col[a];
            }
        }
        if inverse {
            let s = 1.0 / (n * n) as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut d, false);
        d
    }

    /// `∂₁^p ∂₂^q` of the field with spectrum `hat`, on the grid.
    fn deriv(&self, hat: &[Complex64], p: u32, q: u32) -> Vec<f64> {
        let n = self.n;
        let mut d: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (a, b) = (idx / n, idx % n);
                hat[idx]
                    * Complex64::new(0.0, self.k[a]).powu(p)
                    * Complex64::new(0.0, self.k[b]).powu(q)
            })
            .collect();
        self.transform(&mut d, true);
        d.into_iter().map(|v| v.re).collect()
    }

    /// Solves `Δv = r` for mean-free `r`, returning mean-free `v`.
    fn inv_laplacian(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut h = self.forward(r);
        for (idx, v) in h.iter_mut().enumerate() {
            let k2 = self.k[idx / n].powi(2) + self.k[idx % n].powi(2);
            *v = if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                -*v / k2
            };
        }
        self.transform(&mut h, true);
        h.into_iter().map(|v| v.re).collect()
    }
}

struct State {
    uxx: Vec<f64>,
    uxy: Vec<f64>,
    uyy: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

fn derivatives(sp: &Spectral, u: &[f64]) -> State {
    let h = sp.forward(u);
    State {
        ux: sp.deriv(&h, 1, 0),
        uy: sp.deriv(&h, 0, 1),
        uxx: sp.deriv(&h, 2, 0),
        uxy: sp.deriv(&h, 1, 1),
        uyy: sp.deriv(&h, 0, 2),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `log det(I + D²u) + V_pert(x) − W_pert(x + ∇u) = c` for periodic,
/// mean-free `u` and a constant `c`. The returned instance has
/// `V = V_pert − c`, `W = W_pert`, and derivative oracles up to order 3
/// obtained from the trigonometric interpolant of `u`.
pub fn solve_ma_torus_2d(
    v_pert: Expr,
    w_pert: Expr,
    opts: TorusOptions,
) -> Result<(PotentialInstance, TorusSummary)> {
    let n = opts.grid;
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "torus grid must be even and at least 8, got {n}"
        )));
    }
    let sp = Spectral::new(n);
    let h = 2.0 * PI / n as f64;
    let pts: Vec<[f64; 2]> = (0..n * n)
        .map(|i| [(i / n) as f64 * h, (i % n) as f64 * h])
        .collect();
    let vp: Vec<f64> = pts
        .iter()
        .map(|x| v_pert(&Jet::vars(x, 0)).value())
        .collect();

    // residual and, on request, the linearization data
    let residual = |s: &State| -> Result<(Vec<f64>, Vec<[f64; 5]>, f64)> {
        let mut f = vec![0.0; n * n];
        let mut lin = vec![[0.0; 5]; n * n];
        let mut min_det = f64::INFINITY;
        for i in 0..n * n {
            let (a, b, d) = (1.0 + s.uxx[i], s.uxy[i], 1.0 + s.uyy[i]);
            let det = a * d - b * b;
            if !(det > 0.0 && a > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    eigenvalue: det.min(a),
                });
            }
            min_det = min_det.min(det);
            let y = [pts[i][0] + s.ux[i], pts[i][1] + s.uy[i]];
            let w = w_pert(&Jet::vars(&y, 1));
            f[i] = det.ln() + vp[i] - w.value();
            // (I + D²u)⁻¹ entries and ∇W_pert
            lin[i] = [d / det, -b / det, a / det, w.partial(&[0]), w.partial(&[1])];
        }
        Ok((f, lin, min_det))
    };
    let apply = |lin: &[[f64; 5]], delta: &[f64]| -> Vec<f64> {
        let s = derivatives(&sp, delta);
        (0..n * n)
            .map(|i| {
                let m = &lin[i];
                m[0] * s.uxx[i] + 2.0 * m[1] * s.uxy[i] + m[2] * s.uyy[i]
                    - m[3] * s.ux[i]
                    - m[4] * s.uy[i]
            })
            .collect()
    };

    let mut u = vec![0.0; n * n];
    let (f0, mut lin, mut min_det) = residual(&derivatives(&sp, &u))?;
    let mut c = mean(&f0);
    let mut f: Vec<f64> = f0.iter().map(|v| v - c).collect();
    let mut steps = 0;
    while max_abs(&f) > opts.tol {
        if steps == opts.max_steps {
            return Err(Error::Numeric(format!(
                "Newton stagnated after {steps} steps, residual {:.3e}",
                max_abs(&f)
            )));
        }
        // Inner solve of A δ − δc = −F by Laplacian-preconditioned Richardson.
        let mut delta = vec![0.0; n * n];
        let mut dc = 0.0;
        let target = (1e-4 * max_abs(&f)).max(1e-15);
        for _ in 0..300 {
            let ad = apply(&lin, &delta);
            let r: Vec<f64> = (0..n * n).map(|i| -f[i] - ad[i] + dc).collect();
            if max_abs(&r) < target {
                break;
            }
            let mr = mean(&r);
            let centred: Vec<f64> = r.iter().map(|v| v - mr).collect();
            let corr = sp.inv_laplacian(&centred);
            delta.iter_mut().zip(&corr).for_each(|(d, c)| *d += c);
            dc -= mr;
        }
        let norm = max_abs(&f);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
            let s = derivatives(&sp, &trial);
            if let Ok((ft, lt, md)) = residual(&s) {
                let ct = c + t * dc;
                let fr: Vec<f64> = ft.iter().map(|v| v - ct).collect();
                if max_abs(&fr) < norm {
                    u = trial;
                    f = fr;
                    c = ct;
                    lin = lt;
                    min_det = md;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(Error::Numeric(
                    "Newton step halving failed to reduce the residual".into(),
                ));
            }
        }
        steps += 1;
    }

    let summary = TorusSummary {
        grid: n,
        newton_steps: steps,
        residual: max_abs(&f),
        constant: c,
        min_hessian_det: min_det,
    };

    // Oracle: trigonometric interpolant of u, evaluated mode by mode.
    let hat = Arc::new(sp.forward(&u));
    let ks = Arc::new(sp.k.clone());
    let phi: JetFn = Arc::new(move |x: &[f64], order: usize| {
        let m = ks.len();
        let exps: Vec<(u8, u8)> = (0..=order as u8)
            .flat_map(|p| (0..=order as u8 - p).map(move |q| (p, q)))
            .collect();
        let mut acc = vec![0.0; exps.len()];
        for idx in 0..m * m {
            let (k1, k2) = (ks[idx / m], ks[idx % m]);
            let e = hat[idx] * Complex64::from_polar(1.0, k1 * x[0] + k2 * x[1]);
            for (slot, &(p, q)) in exps.iter().enumerate() {
                let f =
                    Complex64::new(0.0, k1).powu(p as u32) * Complex64::new(0.0, k2).powu(q as u32);
                acc[slot] += (e * f).re;
            }
        }
        let scale = 1.0 / (m * m) as f64;
        let quad = 0.5 * (x[0] * x[0] + x[1] * x[1]);
        Ok(Jet::from_partials(2, order, |e| {
            let slot = exps
                .iter()
                .position(|&(p, q)| p == e[0] && q == e[1])
                .unwrap();
            let base = match (e[0], e[1]) {
                (0, 0) => quad,
                (1, 0) => x[0],
                (0, 1) => x[1],
                (2, 0) | (0, 2) => 1.0,
                _ => 0.0,
            };
            base + acc[slot] * scale
        }))
    });
    let vf = v_pert.clone();
    let v: JetFn = Arc::new(move |x: &[f64], order: usize| Ok(vf(&Jet::vars(x, order)) - c));
    let wf = w_pert.clone();
    let w: JetFn = Arc::new(move |y: &[f64], order: usize| Ok(wf(&Jet::vars(y, order))));
    let mut inst = PotentialInstance::new("torus2d", 2, phi, v, w)
        .with_domain(BoxDomain::cube(2, 0.0, 2.0 * PI))
        .with_tags(&[Tag::Gridded]);
    inst.orders.phi = 3;
    inst.notes = format!("{n}x{n} spectral grid, {steps} Newton steps");
    Ok((inst, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::formula::parse_formula;

    #[test]
    fn trivial_perturbation() {
        let z = parse_formula("0", 2).unwrap();
        let (inst, s) = solve_ma_torus_2d(
            z.clone(),
            z,
            TorusOptions {
                grid: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(s.newton_steps <= 1);
        let j = inst.phi_jet(&[1.0, 2.0], 3).unwrap();
        assert!((j.partial(&[0, 0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cosine_source() {
        let v = parse_formula("0.05*cos(x1)", 2).unwrap();
        let w = parse_formula("0", 2).unwrap();
        let (inst, s) = solve_ma_torus_2d(v, w, TorusOptions::default()).unwrap();
        assert!(s.residual < 1e-9, "{s:?}");
        assert!(s.newton_steps <= 12, "{s:?}");
        for x in inst.sample(10, 5) {
            assert!(inst.ma_residual(&x).unwrap().abs() < 1e-9);
        }
        assert!(matches!(
            inst.phi_jet(&[1.0, 1.0], 4),
            Err(Error::MissingOrder { .. })
        ));
    }
}
