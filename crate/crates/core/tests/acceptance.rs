//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::process::ExitCode;
use std::time::Instant;

use calabi_core::geometry::{curvature_pack, pencil_max_eig};
use calabi_core::instances::{InstanceSpec, PotentialInstance};
use calabi_core::verification::{
    check_bound, check_identity, diagram_assertions, run_suite, CheckResult, Status, Suite,
    SuiteConfig,
};

fn instance(name: &str) -> PotentialInstance {
    InstanceSpec::from_name(name)
        .and_then(|s| s.build())
        .expect("built-in instance")
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn describe(c: &CheckResult) -> String {
    format!(
        "{}@{} {} (residual {:.2e}, tol {:.0e})",
        c.id, c.instance, c.status, c.max_abs_residual, c.tolerance
    )
}

fn bound(id: &str, name: &str, points: usize, tol: Option<f64>) -> CheckResult {
    let inst = instance(name);
    check_bound(id, &inst, &inst.sample(points, 42), tol, None).expect("known bound id")
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let results = diagram_assertions();
    let secs = t.elapsed().as_secs_f64();
    let bad: Vec<String> = results
        .iter()
        .filter(|c| c.status != Status::Pass)
        .map(describe)
        .collect();
    verdict(
        bad.is_empty() && results.len() == 6 && secs < 5.0,
        format!(
            "{} exact assertions, {} failing {:?}, {secs:.2} s",
            results.len(),
            bad.len(),
            bad
        ),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let cfg = SuiteConfig {
        suites: vec![Suite::Identities],
        points: Some(20),
        ..Default::default()
    };
    let report = run_suite(&cfg).expect("identity suite runs");
    let secs = t.elapsed().as_secs_f64();
    let bad: Vec<String> = report
        .checks
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(describe)
        .collect();
    let ids = [
        "d1",
        "d2",
        "d3",
        "lf_i",
        "cor32",
        "lphi3",
        "lg",
        "lg_hke",
        "g_ric_relation",
        "zerohess",
        "rxx_zero",
    ];
    let unexercised: Vec<&str> = ids
        .iter()
        .copied()
        .filter(|id| {
            !report
                .checks
                .iter()
                .any(|c| c.id == *id && c.status == Status::Pass)
        })
        .collect();
    let few_points = report
        .checks
        .iter()
        .any(|c| c.status == Status::Pass && c.points < 20);
    verdict(
        bad.is_empty() && unexercised.is_empty() && !few_points && secs < 30.0,
        format!(
            "{} checks over {:?}, failing {:?}, never run {:?}, {secs:.1} s",
            report.checks.len(),
            report.instances,
            bad,
            unexercised
        ),
    )
}

fn criterion_3() -> Outcome {
    let orthant = bound("ricci_mu_nonpos", "orthant2", 50, Some(1e-9));
    let sine = bound("ricci_mu_nonpos", "sine1d(1)", 50, Some(1e-9));
    // closed form on sine1d: the eigenvalue is -sin²(x)/2
    let inst = instance("sine1d(1)");
    let mut gap: f64 = 0.0;
    let mut top = f64::NEG_INFINITY;
    for x in inst.sample(50, 42) {
        let c = curvature_pack(&inst, &x).expect("curvature");
        let lam = pencil_max_eig(&c.ricci_mu, &c.metric.h).expect("pencil");
        gap = gap.max((lam + 0.5 * x[0].sin().powi(2)).abs());
        top = top.max(lam);
    }
    verdict(
        orthant.status == Status::Pass && sine.status == Status::Pass && gap < 1e-9,
        format!(
            "{}; {}; |λ + sin²x/2| ≤ {gap:.1e}, sup λ = {top:.4}",
            describe(&orthant),
            describe(&sine)
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["orthant2", "sine1d(1)"] {
        let r = bound("ric2n_nonneg", name, 50, Some(1e-9));
        ok &= r.status == Status::Pass;
        parts.push(describe(&r));
    }
    // Euler relations of the logarithmically homogeneous orthant potential
    let inst = instance("orthant2");
    let n = inst.n;
    let mut euler: f64 = 0.0;
    let mut first = None;
    for x in inst.sample(50, 42) {
        let j = inst.phi_jet(&x, 3).expect("jet");
        let (p1, p2, p3) = (
            j.derivative_array(1),
            j.derivative_array(2),
            j.derivative_array(3),
        );
        let xd: f64 = (0..n).map(|i| x[i] * p1[i]).sum();
        let c = *first.get_or_insert(xd);
        euler = euler.max((xd - c).abs());
        for i in 0..n {
            let r1: f64 = (0..n).map(|k| p2[i * n + k] * x[k]).sum::<f64>() + p1[i];
            euler = euler.max(r1.abs());
            for jj in 0..n {
                let r2: f64 = (0..n).map(|k| p3[(i * n + jj) * n + k] * x[k]).sum::<f64>()
                    + 2.0 * p2[i * n + jj];
                euler = euler.max(r2.abs());
            }
        }
    }
    let mut cone_ok = euler < 1e-9;
    for id in ["zerohess", "rxx_zero"] {
        let r =
            check_identity(id, &inst, &inst.sample(50, 42), Some(1e-9), None).expect("identity");
        cone_ok &= r.status == Status::Pass;
        parts.push(describe(&r));
    }
    parts.push(format!("Euler relations residual {euler:.1e}"));
    verdict(ok && cone_ok, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let gauss = bound(
        "caffarelli2",
        "transport:gauss->gauss:0.25",
        100,
        Some(1e-8),
    );
    let inst = instance("transport:gauss->gauss:0.25");
    let mut dev: f64 = 0.0;
    for x in inst.sample(100, 42) {
        dev = dev.max((inst.phi_jet(&x, 2).expect("jet").partial(&[0, 0]) - 0.5).abs());
    }
    let quartic = instance("transport:gauss->quartic");
    let mut top = f64::NEG_INFINITY;
    for x in quartic.sample(100, 42) {
        top = top.max(quartic.phi_jet(&x, 2).expect("jet").partial(&[0, 0]));
    }
    let q = bound("caffarelli2", "transport:gauss->quartic", 100, Some(1e-8));
    verdict(
        gauss.status == Status::Pass
            && dev < 1e-10
            && top <= 1.0 + 1e-8
            && q.status == Status::Pass,
        format!(
            "{}; |Φ''-0.5| ≤ {dev:.1e}; quartic max Φ'' = {top:.6}; {}",
            describe(&gauss),
            describe(&q)
        ),
    )
}

fn criterion_6() -> Outcome {
    let transports = [
        "transport:gauss->gauss:0.25",
        "transport:gauss->quartic",
        "transport:gauss->logcosh:1",
        "transport:logcosh:0.8->gauss:0.5",
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    let mut prop51_passes = 0;
    for name in transports {
        let r = bound("prop51", name, 50, Some(1e-5));
        prop51_passes += usize::from(r.status == Status::Pass);
        ok &= r.status == Status::Pass;
        parts.push(describe(&r));
    }
    ok &= prop51_passes >= 3;
    for name in transports {
        let r = bound("lp_moment", name, 50, Some(1e-6));
        ok &= r.status == Status::Pass;
        parts.push(describe(&r));
    }
    for name in [
        "transport:gauss->gauss:0.25",
        "transport:logcosh:0.8->gauss:0.5",
    ] {
        let r = bound("phi3_gauss", name, 50, None);
        ok &= r.status == Status::Pass && r.notes.contains("stated constant");
        parts.push(describe(&r));
    }
    verdict(ok, parts.join("; "))
}

fn criteria_7_8() -> (Outcome, Outcome) {
    let cfg = SuiteConfig {
        seed: 42,
        jobs: 4,
        ..Default::default()
    };
    let t = Instant::now();
    let a = run_suite(&cfg).expect("default suite");
    let secs = t.elapsed().as_secs_f64();
    let b = run_suite(&cfg).expect("default suite");
    let same = a.to_json_stable() == b.to_json_stable();
    let failing: Vec<String> = a
        .checks
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(describe)
        .collect();
    (
        verdict(
            same,
            format!(
                "{} checks, JSON {} bytes, identical: {same}",
                a.checks.len(),
                a.to_json_stable().len()
            ),
        ),
        verdict(
            secs < 60.0,
            format!("default suite {secs:.1} s, failing {failing:?}"),
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |k: &str, o: Outcome| {
        all &= o.ok;
        println!(
            "criterion {k}: {} | {}",
            if o.ok { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    report("1", criterion_1());
    report("2", criterion_2());
    report("3", criterion_3());
    report("4", criterion_4());
    report("5", criterion_5());
    report("6", criterion_6());
    let (c7, c8) = criteria_7_8();
    report("7", c7);
    report("8", c8);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
