use nalgebra::DMatrix;

use super::{spd_inverse, PointData};
use crate::error::Result;
use crate::instances::PotentialInstance;
use crate::jet::Jet;

#[derive(Clone, Debug)]
pub struct MetricPack {
    pub h: DMatrix<f64>,
    pub h_inv: DMatrix<f64>,
    /// `Γ^k_{ij}` at flat index `(k·n + i)·n + j`.
    pub christoffel: Vec<f64>,
    pub p: f64,
    /// Calabi tensor `g_{ij} = Φ_{iab}Φ_j^{ab}`.
    pub g: DMatrix<f64>,
}

impl MetricPack {
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.h.nrows();
        self.christoffel[(k * n + i) * n + j]
    }
}

/// `Φ_{ijk}` with two slots raised: `Φ_i^{ab}`.
fn raise_two(pd: &PointData) -> Vec<f64> {
    let n = pd.n;
    let p3 = &pd.phi[3];
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for c in 0..n {
                    for d in 0..n {
                        s += pd.h_inv[(a, c)] * pd.h_inv[(b, d)] * p3[(i * n + c) * n + d];
                    }
                }
                out[(i * n + a) * n + b] = s;
            }
        }
    }
    out
}

pub(crate) fn metric_from(pd: &PointData) -> MetricPack {
    let n = pd.n;
    let p3 = &pd.phi[3];
    let mut christoffel = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                christoffel[(k * n + i) * n + j] = 0.5
                    * (0..n)
                        .map(|l| pd.h_inv[(k, l)] * p3[(l * n + i) * n + j])
                        .sum::<f64>();
            }
        }
    }
    let up = raise_two(pd);
    let g = DMatrix::from_fn(n, n, |i, j| {
        (0..n * n)
            .map(|ab| p3[i * n * n + ab] * up[j * n * n + ab])
            .sum()
    });
    let p = 0.5 * (pd.v[0][0] + pd.w_nat[0][0]);
    MetricPack {
        h: pd.h.clone(),
        h_inv: pd.h_inv.clone(),
        christoffel,
        p,
        g: (&g + g.transpose()) * 0.5,
    }
}

pub fn metric_pack(inst: &PotentialInstance, x: &[f64]) -> Result<MetricPack> {
    Ok(metric_from(&PointData::new(inst, x, 3, 0, 0)?))
}

#[derive(Clone, Debug)]
pub struct CurvaturePack {
    pub metric: MetricPack,
    /// `R_{ikjl}` at flat index `((i·n + k)·n + j)·n + l`.
    pub riemann: Vec<f64>,
    /// `h^{kl} R_{ikjl}`.
    pub ricci: DMatrix<f64>,
    /// `¼g + ½V^{(2)} + ½W^{(2)}` with `W` lowered.
    pub ricci_mu: DMatrix<f64>,
    /// `Ric + ½∇²_h(V + W∘∇Φ)`, differentiated directly.
    pub ricci_mu_hessian: DMatrix<f64>,
    /// `∂_i P = ½(V_i + W_i)`.
    pub grad_p: Vec<f64>,
    /// `Tr[A⁻¹ B_i h⁻¹ B_j]` with `A = V^{(2)} + W^{(2)}`, `B_i = V^{(3)}_i − W^{(3)}_i`;
    /// `None` when `A` is not invertible.
    pub h_tensor: Option<DMatrix<f64>>,
}

impl CurvaturePack {
    pub fn riemann_at(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        let n = self.ricci.nrows();
        self.riemann[((i * n + k) * n + j) * n + l]
    }

    /// `Ric_{μ,N} = Ric_μ − (N − n)⁻¹ ∂P ⊗ ∂P`, for `N > n`.
    pub fn ricci_mu_n(&self, big_n: f64) -> DMatrix<f64> {
        let n = self.ricci.nrows();
        let d = &self.grad_p;
        let k = 1.0 / (big_n - n as f64);
        DMatrix::from_fn(n, n, |i, j| self.ricci_mu[(i, j)] - k * d[i] * d[j])
    }
}

pub fn curvature_pack(inst: &PotentialInstance, x: &[f64]) -> Result<CurvaturePack> {
    let pd = PointData::new(inst, x, 3, 3, 3)?;
    let n = pd.n;
    let metric = metric_from(&pd);
    let p3 = &pd.phi[3];
    let f3 = |i: usize, j: usize, k: usize| p3[(i * n + j) * n + k];

    // Φ^a_{kj} = h^{ab} Φ_{bkj}
    let mut mixed = vec![0.0; n * n * n];
    for a in 0..n {
        for k in 0..n {
            for j in 0..n {
                mixed[(a * n + k) * n + j] = (0..n).map(|b| pd.h_inv[(a, b)] * f3(b, k, j)).sum();
            }
        }
    }
    let mut riemann = vec![0.0; n.pow(4)];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let s: f64 = (0..n)
                        .map(|a| {
                            f3(i, l, a) * mixed[(a * n + k) * n + j]
                                - f3(i, j, a) * mixed[(a * n + k) * n + l]
                        })
                        .sum();
                    riemann[((i * n + k) * n + j) * n + l] = 0.25 * s;
                }
            }
        }
    }
    let ricci = DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += pd.h_inv[(k, l)] * riemann[((i * n + k) * n + j) * n + l];
            }
        }
        s
    });

    let v2 = pd.matrix(&pd.v[2]);
    let w2 = pd.matrix(&pd.w_low[2]);
    let ricci_mu = &metric.g * 0.25 + (&v2 + &w2) * 0.5;

    // f = V + W∘∇Φ as a jet in x: W's Taylor jet at y composed with ∇Φ.
    let grad: Vec<Jet> = {
        let pj = inst.phi_jet(x, 3)?;
        (0..n).map(|i| pj.d(i)).collect()
    };
    let w_at_y = inst.w_jet(&pd.y, 2)?;
    let f = inst.v_jet(x, 2)? + w_at_y.compose_multi(&grad);
    let hess_h = DMatrix::from_fn(n, n, |i, j| {
        f.partial(&[i, j])
            - (0..n)
                .map(|k| metric.gamma(k, i, j) * f.partial(&[k]))
                .sum::<f64>()
    });
    let ricci_mu_hessian = &ricci + hess_h * 0.5;

    let grad_p = pd.grad_p();
    let a = &v2 + &w2;
    let h_tensor = spd_inverse(&a)
        .ok()
        .or_else(|| a.clone().try_inverse())
        .map(|a_inv| {
            let b: Vec<DMatrix<f64>> = (0..n)
                .map(|i| {
                    DMatrix::from_fn(n, n, |p, q| {
                        pd.v[3][(i * n + p) * n + q] - pd.w_low[3][(i * n + p) * n + q]
                    })
                })
                .collect();
            DMatrix::from_fn(n, n, |i, j| (&a_inv * &b[i] * &pd.h_inv * &b[j]).trace())
        });
    Ok(CurvaturePack {
        metric,
        riemann,
        ricci,
        ricci_mu,
        ricci_mu_hessian,
        grad_p,
        h_tensor,
    })
}
