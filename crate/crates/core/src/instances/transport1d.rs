//! Exact monotone transport between one-dimensional log-concave densities.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use quadrature::double_exponential;
use serde::{Deserialize, Serialize};

use super::{BoxDomain, JetFn, PotentialInstance, Tag, TransportConstants};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Potential `V` of a density `e^{-V}` on the line (unnormalized).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensitySpec {
    /// `x²/(2s2)`, a centred Gaussian of variance `s2`.
    Gauss { s2: f64 },
    /// `x⁴/4 + x²/2`.
    Quartic,
    /// `x²/2 + a log cosh x`.
    Logcosh { a: f64 },
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl DensitySpec {
    pub fn potential(&self, x: f64) -> f64 {
        match *self {
            DensitySpec::Gauss { s2 } => x * x / (2.0 * s2),
            DensitySpec::Quartic => x.powi(4) / 4.0 + x * x / 2.0,
            DensitySpec::Logcosh { a } => x * x / 2.0 + a * ln_cosh(x),
        }
    }

    pub fn potential_jet(&self, x: &Jet) -> Jet {
        match *self {
            DensitySpec::Gauss { s2 } => x * x * (0.5 / s2),
            DensitySpec::Quartic => x.powi(4) * 0.25 + x * x * 0.5,
            DensitySpec::Logcosh { a } => x * x * 0.5 + x.ln_cosh() * a,
        }
    }

    /// Bounds on the second derivative over the line.
    pub fn convexity(&self) -> (f64, f64) {
        match *self {
            DensitySpec::Gauss { s2 } => (1.0 / s2, 1.0 / s2),
            DensitySpec::Quartic => (1.0, f64::INFINITY),
            DensitySpec::Logcosh { a } => (1.0, 1.0 + a),
        }
    }

    /// `sup (V''')²`; the log cosh maximum sits where `tanh² = 1/3`.
    pub fn third_sq_bound(&self) -> f64 {
        match *self {
            DensitySpec::Gauss { .. } => 0.0,
            DensitySpec::Quartic => f64::INFINITY,
            DensitySpec::Logcosh { a } => 16.0 * a * a / 27.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DensitySpec::Gauss { s2 } if !(s2 > 0.0 && s2.is_finite()) => Err(Error::Config(
                format!("gauss variance must be positive, got {s2}"),
            )),
            DensitySpec::Logcosh { a } if !(a >= 0.0 && a.is_finite()) => Err(Error::Config(
                format!("logcosh weight must be nonnegative, got {a}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Gauss { s2 } if *s2 == 1.0 => write!(f, "gauss"),
            DensitySpec::Gauss { s2 } => write!(f, "gauss:{s2}"),
            DensitySpec::Quartic => write!(f, "quartic"),
            DensitySpec::Logcosh { a } => write!(f, "logcosh:{a}"),
        }
    }
}

impl FromStr for DensitySpec {
    type Err = Error;

    /// `gauss`, `gauss:<variance>`, `quartic`, `logcosh:<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.trim().split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |d: f64| -> Result<f64> {
            match arg {
                None => Ok(d),
                Some(a) => a
                    .parse()
                    .map_err(|_| Error::Config(format!("bad density parameter in {s:?}"))),
            }
        };
        let d = match head {
            "gauss" => DensitySpec::Gauss { s2: num(1.0)? },
            "quartic" if arg.is_none() => DensitySpec::Quartic,
            "logcosh" => DensitySpec::Logcosh { a: num(0.5)? },
            _ => return Err(Error::Config(format!("unknown density {s:?}"))),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Integral of a smooth function over `[a, b]`, split into unit pieces so
/// each double-exponential pass stays well inside its evaluation budget.
fn integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let pieces = ((hi - lo).ceil() as usize).max(1);
    let w = (hi - lo) / pieces as f64;
    let mut s = 0.0;
    for k in 0..pieces {
        let x0 = lo + k as f64 * w;
        s += double_exponential::integrate(&f, x0, x0 + w, 1e-16).integral;
    }
    sign * s
}

/// A density together with its normalizing constant.
#[derive(Clone, Debug)]
struct Normalized {
    spec: DensitySpec,
    log_z: f64,
}

impl Normalized {
    fn new(spec: DensitySpec) -> Result<Self> {
        spec.validate()?;
        let v0 = spec.potential(0.0);
        let reach = |dir: f64| {
            let mut l = 1.0;
            while spec.potential(dir * l) - v0 < 45.0 {
                l *= 1.5;
            }
            l
        };
        let (lo, hi) = (reach(-1.0), reach(1.0));
        let rho = |x: f64| (v0 - spec.potential(x)).exp();
        let left = integral(rho, -lo, 0.0);
        let right = integral(rho, 0.0, hi);
        let z = left + right;
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Numeric(format!("density {spec} is not integrable")));
        }
        Ok(Normalized {
            spec,
            log_z: z.ln() - v0,
        })
    }

    /// Potential of the probability density, `V + log Z`.
    fn potential(&self, x: f64) -> f64 {
        self.spec.potential(x) + self.log_z
    }

    /// Logarithm of the mass of `[x, ∞)` (`right`) or `(−∞, x]`. The
    /// integrand is scaled by its largest value, taken at `x` unless the
    /// range crosses the origin, and cut where it has dropped by `e^{-40}`
    /// below the smaller of the two, so far tails keep relative accuracy.
    fn log_tail(&self, x: f64, right: bool) -> f64 {
        let dir = if right { 1.0 } else { -1.0 };
        let (vx, v0) = (self.spec.potential(x), self.spec.potential(0.0));
        let floor = vx.max(v0) + 40.0;
        let m = if dir * x >= 0.0 { vx } else { vx.min(v0) };
        let mut d = 1.0;
        while self.spec.potential(x + dir * d) < floor {
            d *= 1.5;
        }
        let scaled = integral(|s| (m - self.spec.potential(s)).exp(), x, x + dir * d).abs();
        scaled.ln() - m - self.log_z
    }
}

/// Solved transport problem; `map` is the monotone rearrangement `G⁻¹∘F`.
#[derive(Clone, Debug)]
pub struct Transport1d {
    source: Normalized,
    target: Normalized,
    /// Antiderivative of a Chebyshev interpolant of `T` on `[−R, R]`.
    phi_cheb: Vec<f64>,
}

/// Half-width of the interval where `Φ` is read off the interpolant.
const CHEB_RADIUS: f64 = 12.0;
const CHEB_DEGREE: usize = 192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportSummary {
    pub name: String,
    pub points: usize,
    /// Largest mass mismatch `|G(T(x)) − F(x)|`.
    pub max_cdf_residual: f64,
    pub max_ma_residual: f64,
    pub min_phi2: f64,
    pub max_phi2: f64,
}

impl Transport1d {
    pub fn new(source: DensitySpec, target: DensitySpec) -> Result<Self> {
        let mut t = Transport1d {
            source: Normalized::new(source)?,
            target: Normalized::new(target)?,
            phi_cheb: Vec::new(),
        };
        t.phi_cheb = t.chebyshev_antiderivative()?;
        Ok(t)
    }

    /// Coefficients `C_k` of `∫ p`, where `p = c₀/2 + Σ c_k T_k` interpolates
    /// `T` at Chebyshev points: `C_k = (c_{k−1} − c_{k+1})/(2k)`.
    fn chebyshev_antiderivative(&self) -> Result<Vec<f64>> {
        let n = CHEB_DEGREE;
        let f = (0..=n)
            .map(|j| self.map(CHEB_RADIUS * (PI * j as f64 / n as f64).cos()))
            .collect::<Result<Vec<f64>>>()?;
        let mut c: Vec<f64> = (0..=n)
            .map(|k| {
                let s: f64 = (0..=n)
                    .map(|j| {
                        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                        w * f[j] * (PI * (j * k) as f64 / n as f64).cos()
                    })
                    .sum();
                2.0 * s / n as f64
            })
            .collect();
        c[n] *= 0.5;
        c.push(0.0);
        c.push(0.0);
        Ok((0..=n + 1)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    (c[k - 1] - c[k + 1]) / (2.0 * k as f64)
                }
            })
            .collect())
    }

    /// `Φ(x) = ∫_0^x T` with `Φ(0) = 0`.
    pub fn phi_value(&self, x: f64) -> Result<f64> {
        let eval = |t: f64| -> f64 {
            let th = t.clamp(-1.0, 1.0).acos();
            self.phi_cheb
                .iter()
                .enumerate()
                .map(|(k, ck)| ck * (k as f64 * th).cos())
                .sum()
        };
        let inside = |t: f64| CHEB_RADIUS * (eval(t / CHEB_RADIUS) - eval(0.0));
        if x.abs() <= CHEB_RADIUS {
            return Ok(inside(x));
        }
        // continue from the edge of the interpolation interval
        let edge = CHEB_RADIUS.copysign(x);
        let v = inside(edge) + integral(|s| self.map(s).unwrap_or(f64::NAN), edge, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("Φ({x}) could not be integrated")))
        }
    }

    pub fn name(&self) -> String {
        format!("transport:{}->{}", self.source.spec, self.target.spec)
    }

    /// Matching condition `G(y) = 0` for `y = T(x)`, increasing in `y`.
    /// Log-masses are compared on the side of `x` away from the bulk so both
    /// tails keep relative accuracy. Returns `G` and `∂G/∂y`.
    fn matching(&self, x: f64, y: f64) -> (f64, f64) {
        let right = x >= 0.0;
        let lt = self.target.log_tail(y, right);
        let slope = (-self.target.potential(y) - lt).exp();
        if right {
            (self.source.log_tail(x, true) - lt, slope)
        } else {
            (lt - self.source.log_tail(x, false), slope)
        }
    }

    /// `T(x)`: safeguarded Newton on the matching condition, keeping a bracket.
    pub fn map(&self, x: f64) -> Result<f64> {
        let g = |y: f64| self.matching(x, y);
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut tries = 0;
        while g(lo).0 > 0.0 {
            lo *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::Numeric(format!("no bracket for T({x})")));
            }
        }
        while g(hi).0 < 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::Numeric(format!("no bracket for T({x})")));
            }
        }
        let mut y = x.clamp(lo, hi);
        for _ in 0..200 {
            let (gy, slope) = g(y);
            if gy == 0.0 {
                return Ok(y);
            }
            if gy > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let mut next = y - gy / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = next - y;
            y = next;
            if step.abs() < 1e-15 * (1.0 + y.abs()) || hi - lo < 1e-14 * (1.0 + y.abs()) {
                return Ok(y);
            }
        }
        Err(Error::Numeric(format!(
            "root finding for T({x}) did not converge"
        )))
    }

    /// Taylor jet of `Φ` at `x` with `Φ(0) = 0`. Derivatives of order ≥ 2
    /// come from repeatedly integrating `Φ'' = exp(−V + W(Φ'))`.
    pub fn phi_jet(&self, x: f64, order: usize) -> Result<Jet> {
        let t0 = self.map(x)?;
        let phi0 = self.phi_value(x)?;
        if order == 0 {
            return Ok(Jet::constant(1, 0, phi0));
        }
        let mut u = Jet::constant(1, 0, t0);
        for k in 1..order {
            let xj = Jet::variable(1, k - 1, 0, x);
            let rhs = (-self.source.spec.potential_jet(&xj) - self.source.log_z
                + self.target.spec.potential_jet(&u)
                + self.target.log_z)
                .exp();
            u = rhs.integrate(0) + t0;
        }
        Ok(u.integrate(0) + phi0)
    }

    pub fn constants(&self) -> TransportConstants {
        let (vl, vu) = self.source.spec.convexity();
        let (wl, wu) = self.target.spec.convexity();
        let q_norm = match self.target.spec {
            DensitySpec::Gauss { s2 } => Some(0.5 / s2),
            _ => None,
        };
        TransportConstants {
            v_lower: vl,
            v_upper: vu,
            w_lower: wl,
            w_upper: wu,
            b: self
                .source
                .spec
                .third_sq_bound()
                .max(self.target.spec.third_sq_bound()),
            q_norm,
        }
    }

    pub fn instance(&self, order: usize) -> Result<PotentialInstance> {
        if order > 5 {
            return Err(Error::Config(format!(
                "transport jets are provided up to order 5, asked {order}"
            )));
        }
        let me = Arc::new(self.clone());
        let p = me.clone();
        let phi: JetFn = Arc::new(move |x: &[f64], k: usize| p.phi_jet(x[0], k));
        let (src, lz) = (self.source.spec, self.source.log_z);
        let v: JetFn = Arc::new(move |x: &[f64], k: usize| {
            Ok(src.potential_jet(&Jet::variable(1, k, 0, x[0])) + lz)
        });
        let (tgt, lw) = (self.target.spec, self.target.log_z);
        let w: JetFn = Arc::new(move |y: &[f64], k: usize| {
            Ok(tgt.potential_jet(&Jet::variable(1, k, 0, y[0])) + lw)
        });
        let mut inst = PotentialInstance::new(self.name(), 1, phi, v, w)
            .with_domain(BoxDomain::cube(1, -3.0, 3.0))
            .with_tags(&[Tag::Transport]);
        inst.orders.phi = order;
        inst.constants = Some(self.constants());
        Ok(inst)
    }

    pub fn summary(&self, points: usize) -> Result<TransportSummary> {
        let inst = self.instance(2)?;
        let mut s = TransportSummary {
            name: self.name(),
            points,
            max_cdf_residual: 0.0,
            max_ma_residual: 0.0,
            min_phi2: f64::INFINITY,
            max_phi2: f64::NEG_INFINITY,
        };
        for x in inst.sample(points, 0) {
            let y = self.map(x[0])?;
            // mass mismatch, from the log-tail mismatch on the far side
            let right = x[0] >= 0.0;
            let (g, _) = self.matching(x[0], y);
            let r = self.source.log_tail(x[0], right).exp() * g.abs().exp_m1();
            s.max_cdf_residual = s.max_cdf_residual.max(r);
            s.max_ma_residual = s.max_ma_residual.max(inst.ma_residual(&x)?.abs());
            let d2 = inst.phi_jet(&x, 2)?.partial(&[0, 0]);
            s.min_phi2 = s.min_phi2.min(d2);
            s.max_phi2 = s.max_phi2.max(d2);
        }
        Ok(s)
    }
}

/// Convenience wrapper around [`Transport1d`].
pub fn solve_transport_1d(
    source: DensitySpec,
    target: DensitySpec,
    order: usize,
) -> Result<PotentialInstance> {
    Transport1d::new(source, target)?.instance(order)
}

/// Inverts `Φ'` on the image of the sample and returns
/// `max |Φ'(Ψ'(y)) − y|`, where `Ψ'` is the numerical inverse.
pub fn legendre_dual_1d(inst: &PotentialInstance, points: usize) -> Result<f64> {
    if inst.n != 1 {
        return Err(Error::Shape(format!(
            "legendre_dual_1d needs n = 1, got {}",
            inst.n
        )));
    }
    let xs: Vec<f64> = inst.sample(points, 0).into_iter().map(|x| x[0]).collect();
    let ys = xs
        .iter()
        .map(|&x| inst.transport(&[x]).map(|t| t[0]))
        .collect::<Result<Vec<f64>>>()?;
    if ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Numeric("Φ' is not increasing on the sample".into()));
    }
    let (a, b) = (xs[0], xs[xs.len() - 1]);
    let mut worst: f64 = 0.0;
    for &y in &ys {
        let (mut lo, mut hi) = (a, b);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let j = inst.phi_jet(&[x], 2)?;
            let r = j.partial(&[0]) - y;
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - r / j.partial(&[0, 0]);
            if !(next >= lo && next <= hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - x).abs() < 1e-15 * (1.0 + x.abs());
            x = next;
            if done || hi - lo < 1e-15 {
                break;
            }
        }
        worst = worst.max((inst.transport(&[x])?[0] - y).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(s2: f64) -> DensitySpec {
        DensitySpec::Gauss { s2 }
    }

    #[test]
    fn gaussian_map_is_linear() {
        let t = Transport1d::new(gauss(1.0), gauss(0.25)).unwrap();
        for x in [-2.5, -1.0, 0.0, 0.3, 2.9] {
            assert!((t.map(x).unwrap() - 0.5 * x).abs() < 1e-12);
            let j = t.phi_jet(x, 5).unwrap();
            assert!((j.partial(&[0, 0]) - 0.5).abs() < 1e-12);
            assert!(j.partial(&[0, 0, 0]).abs() < 1e-11);
            assert!(j.partial(&[0, 0, 0, 0, 0]).abs() < 1e-9);
            assert!(
                (j.value() - 0.25 * x * x).abs() < 1e-12,
                "{}",
                j.value() - 0.25 * x * x
            );
        }
    }

    #[test]
    fn recursion_matches_differences_of_map() {
        let t = Transport1d::new(gauss(1.0), DensitySpec::Quartic).unwrap();
        let h = 1e-3;
        for x in [-1.7, 0.4, 2.2] {
            let j = t.phi_jet(x, 4).unwrap();
            let m = |s: f64| t.map(s).unwrap();
            let d1 = (m(x + h) - m(x - h)) / (2.0 * h);
            let d2 = (m(x + h) - 2.0 * m(x) + m(x - h)) / (h * h);
            assert!((d1 - j.partial(&[0, 0])).abs() < 1e-6);
            assert!((d2 - j.partial(&[0, 0, 0])).abs() < 1e-5);
        }
    }

    #[test]
    fn interpolated_potential_matches_quadrature() {
        let t = Transport1d::new(gauss(1.0), DensitySpec::Quartic).unwrap();
        for x in [-2.9, -0.5, 1.3, 3.0] {
            let direct = integral(|s| t.map(s).unwrap(), 0.0, x);
            assert!(
                (t.phi_value(x).unwrap() - direct).abs() < 1e-11,
                "{x} {} {direct}",
                t.phi_value(x).unwrap()
            );
        }
    }

    #[test]
    fn summary_and_caffarelli() {
        let t = Transport1d::new(gauss(1.0), DensitySpec::Quartic).unwrap();
        let s = t.summary(30).unwrap();
        assert!(s.max_cdf_residual < 1e-12, "{s:?}");
        assert!(s.max_ma_residual < 1e-10, "{s:?}");
        assert!(s.max_phi2 <= 1.0 + 1e-8);
    }

    #[test]
    fn dual_map() {
        let inst = solve_transport_1d(gauss(1.0), gauss(0.25), 2).unwrap();
        assert!(legendre_dual_1d(&inst, 21).unwrap() < 1e-10);
        let inst = solve_transport_1d(gauss(1.0), DensitySpec::Quartic, 2).unwrap();
        assert!(legendre_dual_1d(&inst, 21).unwrap() < 1e-8);
    }

    #[test]
    fn parse_densities() {
        assert_eq!("gauss".parse::<DensitySpec>().unwrap(), gauss(1.0));
        assert_eq!("gauss:0.25".parse::<DensitySpec>().unwrap(), gauss(0.25));
        assert_eq!(
            "logcosh:0.3".parse::<DensitySpec>().unwrap(),
            DensitySpec::Logcosh { a: 0.3 }
        );
        assert!("gauss:-1".parse::<DensitySpec>().is_err());
        assert!("cauchy".parse::<DensitySpec>().is_err());
        assert_eq!(gauss(0.25).to_string(), "gauss:0.25");
    }
}
