//! Potential triples `(Φ, V, W)` solving `e^{-V} = e^{-W(∇Φ)} det D²Φ`.

mod catalog;
mod export;
mod formula;
mod manufactured;
mod spec;
mod torus2d;
mod transport1d;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

pub use catalog::{catalog, gauss_pair_1d, orthant, perturbed_gauss_1d, quadratic_id, sine1d};
pub use export::{export_grid, GridHeader};
pub use formula::parse_formula;
pub use manufactured::{manufactured, manufactured_from};
pub use spec::InstanceSpec;
pub use torus2d::{solve_ma_torus_2d, TorusOptions, TorusSummary};
pub use transport1d::{
    legendre_dual_1d, solve_transport_1d, DensitySpec, Transport1d, TransportSummary,
};

/// Taylor expansion of a scalar field at a point, to a requested order.
pub type JetFn = Arc<dyn Fn(&[f64], usize) -> Result<Jet> + Send + Sync>;

/// Closed-form scalar field written with jet arithmetic.
pub type Expr = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;

/// Lifts a closed-form expression to a [`JetFn`].
pub fn analytic(f: Expr) -> JetFn {
    Arc::new(move |x: &[f64], order: usize| Ok(f(&Jet::vars(x, order))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Cone,
    KeHyperbolic,
    Transport,
    Manufactured,
    Gridded,
}

/// Axis-aligned box; bounds may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        BoxDomain {
            lo: vec![lo; n],
            hi: vec![hi; n],
        }
    }

    pub fn whole(n: usize) -> Self {
        Self::cube(n, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Strict interior test, used for the region where the potentials exist.
    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a < *v && *v < *b)
    }
}

/// Convexity data of a transport pair: `V'' ∈ [v_lower, v_upper]`,
/// `W'' ∈ [w_lower, w_upper]`, third derivatives squared bounded by `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportConstants {
    pub v_lower: f64,
    pub v_upper: f64,
    pub w_lower: f64,
    pub w_upper: f64,
    pub b: f64,
    /// Operator norm of `Q` when the target is `c_Q e^{-Q(x,x)}`.
    pub q_norm: Option<f64>,
}

impl TransportConstants {
    /// Two-sided constants `c ≤ D²V, D²W ≤ C` covering both densities.
    pub fn c_lower(&self) -> f64 {
        self.v_lower.min(self.w_lower)
    }

    pub fn c_upper(&self) -> f64 {
        self.v_upper.max(self.w_upper)
    }
}

/// Highest derivative orders the oracles provide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orders {
    pub phi: usize,
    pub v: usize,
    pub w: usize,
}

#[derive(Clone)]
pub struct PotentialInstance {
    pub name: String,
    pub n: usize,
    /// Where sample points are drawn.
    pub domain: BoxDomain,
    /// Where the potentials are defined; evaluation outside is an error.
    pub support: BoxDomain,
    pub(crate) phi: JetFn,
    pub(crate) v: JetFn,
    pub(crate) w: JetFn,
    pub orders: Orders,
    pub alpha: Option<f64>,
    pub tags: BTreeSet<Tag>,
    pub constants: Option<TransportConstants>,
    pub notes: String,
}

impl fmt::Debug for PotentialInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialInstance")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("domain", &self.domain)
            .field("orders", &self.orders)
            .field("alpha", &self.alpha)
            .field("tags", &self.tags)
            .finish()
    }
}

impl PotentialInstance {
    pub fn new(name: impl Into<String>, n: usize, phi: JetFn, v: JetFn, w: JetFn) -> Self {
        PotentialInstance {
            name: name.into(),
            n,
            domain: BoxDomain::cube(n, -1.0, 1.0),
            support: BoxDomain::whole(n),
            phi,
            v,
            w,
            orders: Orders { phi: 5, v: 3, w: 3 },
            alpha: None,
            tags: BTreeSet::new(),
            constants: None,
            notes: String::new(),
        }
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_support(mut self, support: BoxDomain) -> Self {
        self.support = support;
        self
    }

    pub fn with_tags(mut self, tags: &[Tag]) -> Self {
        self.tags.extend(tags.iter().copied());
        self
    }

    pub fn has_tag(&self, t: Tag) -> bool {
        self.tags.contains(&t)
    }

    fn check_order(what: &'static str, order: usize, max: usize) -> Result<()> {
        if order > max {
            Err(Error::MissingOrder { what, order, max })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Shape(format!(
                "point of length {} for n = {}",
                x.len(),
                self.n
            )));
        }
        if !self.support.contains_open(x) {
            return Err(Error::Domain { point: x.to_vec() });
        }
        Ok(())
    }

    pub fn phi_jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        Self::check_order("Phi", order, self.orders.phi)?;
        self.check_point(x)?;
        (self.phi)(x, order)
    }

    pub fn v_jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        Self::check_order("V", order, self.orders.v)?;
        self.check_point(x)?;
        (self.v)(x, order)
    }

    /// `W` expanded at a point `y` of the target space.
    pub fn w_jet(&self, y: &[f64], order: usize) -> Result<Jet> {
        Self::check_order("W", order, self.orders.w)?;
        (self.w)(y, order)
    }

    /// `∇Φ(x)`.
    pub fn transport(&self, x: &[f64]) -> Result<Vec<f64>> {
        let j = self.phi_jet(x, 1)?;
        Ok((0..self.n).map(|i| j.partial(&[i])).collect())
    }

    /// `−V + W(∇Φ) − log det D²Φ`, zero when the equation holds.
    pub fn ma_residual(&self, x: &[f64]) -> Result<f64> {
        let j = self.phi_jet(x, 2)?;
        let n = self.n;
        let h = nalgebra::DMatrix::from_fn(n, n, |a, b| j.partial(&[a, b]));
        let y: Vec<f64> = (0..n).map(|i| j.partial(&[i])).collect();
        let det = h.determinant();
        if det <= 0.0 {
            return Err(Error::NotPositiveDefinite { eigenvalue: det });
        }
        let v = self.v_jet(x, 0)?.value();
        let w = self.w_jet(&y, 0)?.value();
        Ok(-v + w - det.ln())
    }

    /// Deterministic sample of the box: an even grid in one dimension, a
    /// seeded uniform draw otherwise.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let d = &self.domain;
        if self.n == 1 {
            let (a, b) = (d.lo[0], d.hi[0]);
            return (0..count)
                .map(|k| {
                    let t = if count == 1 {
                        0.5
                    } else {
                        k as f64 / (count - 1) as f64
                    };
                    vec![a + t * (b - a)]
                })
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                (0..self.n)
                    .map(|i| rng.gen_range(d.lo[i]..=d.hi[i]))
                    .collect()
            })
            .collect()
    }
}
