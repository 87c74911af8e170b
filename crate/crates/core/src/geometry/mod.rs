//! Numeric Hessian geometry at points of an instance: derivative arrays,
//! connection and curvature, diagram evaluation and a finite-difference
//! weighted Laplacian for tensor fields.
//!
//! Every tensor is reported with all indices lowered. Raising only happens
//! inside contractions.

mod eval;
mod fd;
mod packs;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::PotentialInstance;

pub use eval::{evaluate_basic_diagram, evaluate_diagram, evaluate_diagram_at, required_orders};
pub use fd::{
    default_step, local_step, weighted_laplacian_components_fd, weighted_laplacian_fd,
    weighted_laplacian_scalar_fd,
};
pub use packs::{curvature_pack, metric_pack, CurvaturePack, MetricPack};

/// Dense tensor at a point, flattened row-major over `n^order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEval {
    pub n: usize,
    pub order: usize,
    pub data: Vec<f64>,
    pub point: Vec<f64>,
}

impl TensorEval {
    pub fn zeros(n: usize, order: usize, point: &[f64]) -> Self {
        TensorEval {
            n,
            order,
            data: vec![0.0; n.pow(order as u32)],
            point: point.to_vec(),
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>, point: &[f64]) -> Self {
        let n = m.nrows();
        TensorEval {
            n,
            order: 2,
            data: (0..n * n).map(|k| m[(k / n, k % n)]).collect(),
            point: point.to_vec(),
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[idx.iter().fold(0, |acc, &i| acc * self.n + i)]
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.order != 2 {
            return Err(Error::Shape(format!(
                "tensor of order {} is not a matrix",
                self.order
            )));
        }
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| {
            self.data[i * self.n + j]
        }))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest deviation from symmetry under any transposition of slots.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let k = self.order;
        let n = self.n;
        for flat in 0..self.data.len() {
            let idx = unflatten(flat, n, k);
            for a in 0..k {
                for b in a + 1..k {
                    let mut j = idx.clone();
                    j.swap(a, b);
                    worst = worst.max((self.data[flat] - self.get(&j)).abs());
                }
            }
        }
        worst
    }

    /// Componentwise `|self − other| / (1 + |other|)`, maximized.
    pub fn scaled_residual(&self, other: &TensorEval) -> Result<f64> {
        if self.n != other.n || self.order != other.order {
            return Err(Error::Shape(format!(
                "comparing order {} in n = {} with order {} in n = {}",
                self.order, self.n, other.order, other.n
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs()))))
    }

    pub fn axpy(&mut self, a: f64, other: &TensorEval) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }
}

pub(crate) fn unflatten(mut flat: usize, n: usize, k: usize) -> Vec<usize> {
    let mut idx = vec![0; k];
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
    idx
}

/// Contracts slot `slot` of a rank-`k` tensor with `m`: `out[..i..] = Σ_a m[i][a] t[..a..]`.
pub(crate) fn apply_slot(t: &[f64], n: usize, k: usize, slot: usize, m: &DMatrix<f64>) -> Vec<f64> {
    let stride = n.pow((k - slot - 1) as u32);
    let mut out = vec![0.0; t.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = (flat / stride) % n;
        let base = flat - i * stride;
        *o = (0..n).map(|a| m[(i, a)] * t[base + a * stride]).sum();
    }
    out
}

/// Derivative arrays of `Φ`, `V` and `W` at one point, with `W` both as
/// natural partials at `y = ∇Φ(x)` and lowered through `D²Φ`.
#[derive(Clone, Debug)]
pub struct PointData {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub w_nat: Vec<Vec<f64>>,
    pub w_low: Vec<Vec<f64>>,
    pub h: DMatrix<f64>,
    pub h_inv: DMatrix<f64>,
}

impl PointData {
    pub fn new(
        inst: &PotentialInstance,
        x: &[f64],
        phi_order: usize,
        v_order: usize,
        w_order: usize,
    ) -> Result<Self> {
        let n = inst.n;
        let pj = inst.phi_jet(x, phi_order.max(2))?;
        let phi: Vec<Vec<f64>> = (0..=pj.order()).map(|k| pj.derivative_array(k)).collect();
        let h = DMatrix::from_row_slice(n, n, &phi[2]);
        let h_inv = spd_inverse(&h)?;
        let y = phi[1].clone();
        let vj = inst.v_jet(x, v_order)?;
        let v = (0..=v_order).map(|k| vj.derivative_array(k)).collect();
        let wj = inst.w_jet(&y, w_order)?;
        let w_nat: Vec<Vec<f64>> = (0..=w_order).map(|k| wj.derivative_array(k)).collect();
        let w_low = w_nat
            .iter()
            .enumerate()
            .map(|(k, t)| (0..k).fold(t.clone(), |acc, s| apply_slot(&acc, n, k, s, &h)))
            .collect();
        Ok(PointData {
            n,
            x: x.to_vec(),
            y,
            phi,
            v,
            w_nat,
            w_low,
            h,
            h_inv,
        })
    }

    pub(crate) fn array(&self, label: crate::diagram::VertexLabel, order: usize) -> Result<&[f64]> {
        use crate::diagram::VertexLabel::*;
        let (set, what) = match label {
            Phi => (&self.phi, "Phi"),
            V => (&self.v, "V"),
            W => (&self.w_low, "W"),
        };
        set.get(order)
            .map(|v| v.as_slice())
            .ok_or(Error::MissingOrder {
                what,
                order,
                max: set.len().saturating_sub(1),
            })
    }

    /// `D²Φ`-covector of the measure potential, `∂P = ½(V_i + W_i)`.
    pub fn grad_p(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| 0.5 * (self.v[1][i] + self.w_low[1][i]))
            .collect()
    }

    pub fn matrix(&self, flat: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, flat)
    }
}

/// Inverse of a symmetric positive definite matrix; reports the smallest
/// eigenvalue when the matrix is not positive definite.
pub fn spd_inverse(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match h.clone().cholesky() {
        Some(c) => Ok(c.inverse()),
        None => Err(Error::NotPositiveDefinite {
            eigenvalue: min_eigenvalue(h),
        }),
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Largest generalized eigenvalue of the pencil `(Q, h)`, i.e.
/// `sup { Q(v,v) : h(v,v) = 1 }`; signed.
pub fn pencil_max_eig(q: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    Ok(*pencil_eigenvalues(q, h)?.last().unwrap())
}

/// All generalized eigenvalues of `(Q, h)` in ascending order.
pub fn pencil_eigenvalues(q: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<Vec<f64>> {
    if q.shape() != h.shape() || !q.is_square() {
        return Err(Error::Shape(format!(
            "pencil of {:?} and {:?}",
            q.shape(),
            h.shape()
        )));
    }
    let chol = h.clone().cholesky().ok_or(Error::NotPositiveDefinite {
        eigenvalue: min_eigenvalue(h),
    })?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let m = &l_inv * q * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// `(T ⊙ S)_{ij} = ½(T_{ik}S^k_j + T_{jk}S^k_i)`.
pub fn symmetric_product(
    t: &DMatrix<f64>,
    s: &DMatrix<f64>,
    h_inv: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if t.shape() != s.shape() || t.shape() != h_inv.shape() {
        return Err(Error::Shape(format!(
            "{:?} ⊙ {:?} with metric {:?}",
            t.shape(),
            s.shape(),
            h_inv.shape()
        )));
    }
    let a = t * h_inv * s;
    Ok((&a + a.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_and_product() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        assert!((pencil_max_eig(&h, &h).unwrap() - 1.0).abs() < 1e-14);
        let q = &h * 2.0;
        assert!((pencil_max_eig(&q, &h).unwrap() - 2.0).abs() < 1e-14);
        let hi = spd_inverse(&h).unwrap();
        let p = symmetric_product(&h, &h, &hi).unwrap();
        assert!((p - &h).abs().max() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match pencil_max_eig(&h, &bad) {
            Err(Error::NotPositiveDefinite { eigenvalue }) => {
                assert!((eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn slot_application() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let t = vec![1.0, 0.0, 0.0, 0.0]; // e0 ⊗ e0
        let a = apply_slot(&t, 2, 2, 1, &m);
        assert_eq!(a, vec![1.0, 3.0, 0.0, 0.0]);
    }
}
