//! The instance catalog: every potential triple solves its Monge-Ampère
//! equation, and transport jets agree with the map they were built from.

use calabi_core::instances::{
    gauss_pair_1d, DensitySpec, InstanceSpec, PotentialInstance, Transport1d,
};

fn instance(name: &str) -> PotentialInstance {
    InstanceSpec::from_name(name)
        .and_then(|s| s.build())
        .unwrap()
}

#[test]
fn monge_ampere_holds_across_the_catalog() {
    let names = [
        "quadratic_id2",
        "quadratic_id3",
        "orthant2",
        "orthant3",
        "sine1d(1)",
        "sine1d(2)",
        "gauss_pair_1d(0.5)",
        "gauss_pair_1d(2)",
        "perturbed_gauss_1d(0.3)",
        "manufactured(2,42)",
        "manufactured(3,7)",
        "transport:gauss->gauss:0.25",
        "transport:gauss->quartic",
        "transport:gauss->logcosh:1",
        "transport:logcosh:0.8->gauss:0.5",
    ];
    for name in names {
        let inst = instance(name);
        let worst = inst
            .sample(40, 1)
            .iter()
            .map(|x| inst.ma_residual(x).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{name}: {worst:e}");
    }
}

#[test]
fn torus_solution_solves_its_equation() {
    let spec: InstanceSpec = toml::from_str(
        "name = \"torus2d\"\ngrid = 32\nvpert = \"0.05*cos(x1)\"\nwpert = \"0.03*sin(x2)\"",
    )
    .unwrap();
    let inst = spec.build().unwrap();
    let worst = inst
        .sample(20, 2)
        .iter()
        .map(|x| inst.ma_residual(x).unwrap().abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn orthant_is_logarithmically_homogeneous() {
    for n in [2usize, 3] {
        let inst = instance(&format!("orthant{n}"));
        for x in inst.sample(10, 4) {
            let base = inst.phi_jet(&x, 0).unwrap().value();
            for t in [0.5, 1.5, 3.0] {
                let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
                let scaled = inst.phi_jet(&tx, 0).unwrap().value();
                assert!(
                    (scaled - (base - 2.0 * n as f64 * f64::ln(t))).abs() < 1e-12,
                    "n = {n}, t = {t}"
                );
            }
        }
    }
}

#[test]
fn transport_jets_follow_the_map() {
    let pairs = [
        ("gauss", "quartic"),
        ("gauss", "logcosh:1"),
        ("logcosh:0.8", "gauss:0.5"),
        ("quartic", "gauss"),
    ];
    for (s, t) in pairs {
        let tr = Transport1d::new(
            s.parse::<DensitySpec>().unwrap(),
            t.parse::<DensitySpec>().unwrap(),
        )
        .unwrap();
        for x in [-2.5, -1.0, -0.2, 0.0, 0.7, 1.9, 3.0] {
            let j = tr.phi_jet(x, 3).unwrap();
            assert!(
                (j.partial(&[0]) - tr.map(x).unwrap()).abs() < 1e-10,
                "{s}->{t} map at {x}"
            );
            let h = 1e-3;
            let m = |d: f64| tr.map(x + d).unwrap();
            let d1 = (8.0 * (m(h) - m(-h)) - (m(2.0 * h) - m(-2.0 * h))) / (12.0 * h);
            let d2 = (-(m(2.0 * h) + m(-2.0 * h)) + 16.0 * (m(h) + m(-h)) - 30.0 * m(0.0))
                / (12.0 * h * h);
            let (p2, p3) = (j.partial(&[0, 0]), j.partial(&[0, 0, 0]));
            assert!(
                (d1 - p2).abs() < 1e-6 * (1.0 + p2.abs()),
                "{s}->{t} Φ'' at {x}: {d1} vs {p2}"
            );
            assert!(
                (d2 - p3).abs() < 1e-5 * (1.0 + p3.abs()),
                "{s}->{t} Φ''' at {x}: {d2} vs {p3}"
            );
        }
    }
}

#[test]
fn caffarelli_is_sharp_for_gaussian_pairs() {
    for sigma in [0.25, 0.5, 0.8, 1.0] {
        let inst = gauss_pair_1d(sigma).unwrap();
        let k = inst.constants.unwrap();
        let bound = (k.v_upper / k.w_lower).sqrt();
        for x in inst.sample(25, 0) {
            let p2 = inst.phi_jet(&x, 2).unwrap().partial(&[0, 0]);
            assert!((p2 - bound).abs() < 1e-10, "σ = {sigma}: {p2} vs {bound}");
        }
    }
}
