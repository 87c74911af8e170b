use std::f64::consts::PI;
use std::sync::Arc;

use super::{
    analytic, manufactured, manufactured_from, BoxDomain, PotentialInstance, Tag,
    TransportConstants,
};
use crate::error::{Error, Result};
use crate::jet::Jet;

fn sum_sq_half(x: &[Jet]) -> Jet {
    x.iter().map(|v| v * v * 0.5).sum()
}

/// `Φ = V = W = |x|²/2`: identity transport of the standard Gaussian.
pub fn quadratic_id(n: usize) -> PotentialInstance {
    let q = analytic(Arc::new(|x: &[Jet]| sum_sq_half(x)));
    PotentialInstance::new(format!("quadratic_id{n}"), n, q.clone(), q.clone(), q)
        .with_domain(BoxDomain::cube(n, -2.0, 2.0))
}

/// Log-barrier of the positive orthant, `e^{Φ} = det D²Φ`.
pub fn orthant(n: usize) -> PotentialInstance {
    let c = n as f64 * 2f64.ln();
    let phi = move |x: &[Jet]| -> Jet { x.iter().map(|v| v.ln() * -2.0).sum::<Jet>() + c };
    let v = move |x: &[Jet]| -> Jet { -phi(x) };
    let mut inst = PotentialInstance::new(
        format!("orthant{n}"),
        n,
        analytic(Arc::new(phi)),
        analytic(Arc::new(v)),
        analytic(Arc::new(|y: &[Jet]| &y[0] * 0.0)),
    )
    .with_domain(BoxDomain::cube(n, 0.5, 2.5))
    .with_support(BoxDomain::cube(n, 0.0, f64::INFINITY))
    .with_tags(&[Tag::Cone, Tag::KeHyperbolic]);
    inst.alpha = Some(-1.0);
    inst
}

/// Interval solution `Φ = −2 log sin(ax) + log(2a²)` on `(0, π/a)`.
pub fn sine1d(a: f64) -> Result<PotentialInstance> {
    if a <= 0.0 {
        return Err(Error::Config(format!("sine1d needs a > 0, got {a}")));
    }
    let c = (2.0 * a * a).ln();
    let phi = move |x: &[Jet]| -> Jet { (&x[0] * a).sin().ln() * -2.0 + c };
    let v = move |x: &[Jet]| -> Jet { -phi(x) };
    let mut inst = PotentialInstance::new(
        "sine1d",
        1,
        analytic(Arc::new(phi)),
        analytic(Arc::new(v)),
        analytic(Arc::new(|y: &[Jet]| &y[0] * 0.0)),
    )
    .with_domain(BoxDomain {
        lo: vec![0.3 / a],
        hi: vec![(PI - 0.3) / a],
    })
    .with_support(BoxDomain {
        lo: vec![0.0],
        hi: vec![PI / a],
    })
    .with_tags(&[Tag::KeHyperbolic]);
    inst.alpha = Some(-1.0);
    Ok(inst)
}

/// Standard Gaussian pushed to `N(0, σ²)` by `Φ = σx²/2`.
pub fn gauss_pair_1d(sigma: f64) -> Result<PotentialInstance> {
    if sigma <= 0.0 {
        return Err(Error::Config(format!(
            "gauss_pair_1d needs σ > 0, got {sigma}"
        )));
    }
    let lz = 0.5 * (2.0 * PI).ln();
    let mut inst = PotentialInstance::new(
        "gauss_pair_1d",
        1,
        analytic(Arc::new(move |x: &[Jet]| &x[0] * &x[0] * (0.5 * sigma))),
        analytic(Arc::new(move |x: &[Jet]| &x[0] * &x[0] * 0.5 + lz)),
        analytic(Arc::new(move |y: &[Jet]| {
            &y[0] * &y[0] * (0.5 / (sigma * sigma)) + lz + sigma.ln()
        })),
    )
    .with_domain(BoxDomain::cube(1, -3.0, 3.0))
    .with_tags(&[Tag::Transport]);
    let s2 = sigma * sigma;
    inst.constants = Some(TransportConstants {
        v_lower: 1.0,
        v_upper: 1.0,
        w_lower: 1.0 / s2,
        w_upper: 1.0 / s2,
        b: 0.0,
        q_norm: Some(0.5 / s2),
    });
    Ok(inst)
}

/// `Φ = x²/2 + ε log cosh x` onto the standard Gaussian, `V` manufactured.
pub fn perturbed_gauss_1d(eps: f64) -> Result<PotentialInstance> {
    if eps.abs() >= 1.0 {
        return Err(Error::Config(format!(
            "perturbed_gauss_1d needs |ε| < 1, got {eps}"
        )));
    }
    let phi = Arc::new(move |x: &[Jet]| &x[0] * &x[0] * 0.5 + x[0].ln_cosh() * eps);
    let w = Arc::new(|y: &[Jet]| sum_sq_half(y));
    Ok(manufactured_from(
        "perturbed_gauss_1d",
        1,
        phi,
        w,
        BoxDomain::cube(1, -3.0, 3.0),
    ))
}

fn param(params: &[f64], k: usize, default: f64) -> f64 {
    params.get(k).copied().unwrap_or(default)
}

/// Looks an instance up by catalog name. Parameters are positional:
/// `quadratic_id(n)`, `orthant(n)`, `sine1d(a)`, `gauss_pair_1d(σ)`,
/// `perturbed_gauss_1d(ε)`, `manufactured(n, seed)`.
pub fn catalog(name: &str, params: &[f64]) -> Result<PotentialInstance> {
    let dim = |k: usize, d: f64| -> Result<usize> {
        let v = param(params, k, d);
        if !(1.0..=3.0).contains(&v) || v.fract() != 0.0 {
            return Err(Error::Config(format!(
                "{name}: dimension must be 1, 2 or 3, got {v}"
            )));
        }
        Ok(v as usize)
    };
    match name {
        "quadratic_id" => Ok(quadratic_id(dim(0, 2.0)?)),
        "orthant" => Ok(orthant(dim(0, 2.0)?)),
        "sine1d" => sine1d(param(params, 0, 1.0)),
        "gauss_pair_1d" => gauss_pair_1d(param(params, 0, 0.5)),
        "perturbed_gauss_1d" => perturbed_gauss_1d(param(params, 0, 0.3)),
        "manufactured" => Ok(manufactured(dim(0, 2.0)?, param(params, 1, 42.0) as u64)),
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monge_ampere_holds() {
        let insts = vec![
            quadratic_id(3),
            orthant(2),
            sine1d(1.0).unwrap(),
            sine1d(2.0).unwrap(),
            gauss_pair_1d(0.5).unwrap(),
            perturbed_gauss_1d(0.4).unwrap(),
        ];
        for inst in insts {
            for x in inst.sample(7, 1) {
                let r = inst.ma_residual(&x).unwrap();
                assert!(r.abs() < 1e-12, "{} at {x:?}: {r}", inst.name);
            }
        }
    }

    #[test]
    fn closed_form_derivatives() {
        let o = orthant(2);
        let j = o.phi_jet(&[1.0, 2.0], 3).unwrap();
        assert!((j.partial(&[0, 0]) - 2.0).abs() < 1e-14);
        assert!((j.partial(&[1, 1]) - 0.5).abs() < 1e-14);
        let s = sine1d(1.0).unwrap();
        let j = s.phi_jet(&[PI / 3.0], 3).unwrap();
        assert!((j.partial(&[0, 0]) - 8.0 / 3.0).abs() < 1e-13);
        assert!((j.partial(&[0, 0, 0]) + 16.0 / (3.0 * 3f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn cone_relations() {
        let o = orthant(2);
        for x in o.sample(10, 3) {
            let j = o.phi_jet(&x, 3).unwrap();
            let euler: f64 = (0..2).map(|i| j.partial(&[i]) * x[i]).sum();
            assert!((euler - 2.0 * 2.0 / -1.0).abs() < 1e-12);
            for i in 0..2 {
                let r: f64 =
                    (0..2).map(|k| j.partial(&[i, k]) * x[k]).sum::<f64>() + j.partial(&[i]);
                assert!(r.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            catalog("nope", &[]),
            Err(Error::UnknownInstance(_))
        ));
        assert!(gauss_pair_1d(0.0).is_err());
        assert!(perturbed_gauss_1d(1.5).is_err());
        assert!(orthant(2).phi_jet(&[-1.0, 1.0], 2).is_err());
        assert!(matches!(
            orthant(2).v_jet(&[1.0, 1.0], 4),
            Err(Error::MissingOrder { .. })
        ));
    }
}
