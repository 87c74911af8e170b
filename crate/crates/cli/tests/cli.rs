use std::process::{Command, Output};

use calabi_core::diagram::parse;
use calabi_core::verification::closed_form;

fn calabi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calabi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn help_everywhere() {
    for args in [
        vec!["--help"],
        vec!["diagram", "--help"],
        vec!["verify", "--help"],
        vec!["solve", "--help"],
    ] {
        let o = calabi(&args);
        assert_eq!(code(&o), 0, "{args:?}");
        assert!(stdout(&o).contains("Usage"), "{args:?}");
    }
    assert_eq!(code(&calabi(&[])), 2);
    assert_eq!(code(&calabi(&["verify", "--bogus"])), 2);
}

#[test]
fn laplacian_of_gradient_matches_closed_form() {
    let o = calabi(&["diagram", "laplacian", "--expr", "Phi(i)", "--elim"]);
    assert_eq!(code(&o), 0);
    let got = parse(stdout(&o).trim()).unwrap();
    assert!(
        (&got - closed_form("cor32").unwrap()).is_zero(),
        "{}",
        stdout(&o)
    );
}

#[test]
fn derivative_of_phi3() {
    let o = calabi(&["diagram", "derive", "--expr", "Phi(i,j,k)", "--unlabeled"]);
    assert_eq!(code(&o), 0);
    let s = parse(stdout(&o).trim()).unwrap().delabel();
    let mut w: Vec<String> = s.iter().map(|(_, c)| c.to_string()).collect();
    w.sort();
    assert_eq!(w, vec!["-3/2", "1"]);

    // labeled input keeps the three orderings apart
    let o = calabi(&["diagram", "derive", "--expr", "Phi(i,j,k)"]);
    let s = parse(stdout(&o).trim()).unwrap();
    assert_eq!(s.len(), 4);
    assert_eq!(s.delabel().len(), 2);
}

#[test]
fn eval_metric_on_orthant() {
    let o = calabi(&[
        "diagram",
        "eval",
        "--expr",
        "Phi(i,a,b)*Phi(j,a,b)",
        "--instance",
        "orthant2",
        "--at",
        "1,2",
    ]);
    assert_eq!(code(&o), 0);
    let m: Vec<Vec<f64>> = serde_json::from_str(stdout(&o).trim()).unwrap();
    let want = [[4.0, 0.0], [0.0, 1.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((m[i][j] - want[i][j]).abs() < 1e-12, "{m:?}");
        }
    }
}

#[test]
fn diagram_exit_codes() {
    assert_eq!(code(&calabi(&["diagram", "canon", "--expr", "Phi(i,"])), 2);
    assert_eq!(
        code(&calabi(&["diagram", "elim", "--expr", "Phi(i,j,k,l,a,a)"])),
        3
    );
    assert_eq!(
        code(&calabi(&[
            "diagram",
            "eval",
            "--expr",
            "Phi(i,j)",
            "--instance",
            "orthant2",
            "--at",
            "-1,2"
        ])),
        4
    );
    assert_eq!(code(&calabi(&["diagram", "eval", "--expr", "Phi(i,j)"])), 2);
    assert_eq!(
        code(&calabi(&[
            "diagram",
            "eval",
            "--expr",
            "Phi(i,j)",
            "--instance",
            "nowhere",
            "--at",
            "1"
        ])),
        2
    );
}

#[test]
fn diagram_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let o = calabi(&[
        "diagram",
        "canon",
        "--expr",
        "Phi(j,b,a)*Phi(i,a,b)",
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&dot).unwrap().contains("graph"));
    let idx = calabi(&["diagram", "index", "--expr", "Phi(i,a,b)*Phi(j,a,b)"]);
    assert_eq!(code(&idx), 0);
    assert!(stdout(&idx).contains("Phi"));
    let c = calabi(&[
        "diagram",
        "contract",
        "--expr",
        "Phi(i,j,k)",
        "--with",
        "Phi(a,b,c)",
        "--k",
        "2",
        "--unlabeled",
    ]);
    assert_eq!(code(&c), 0, "{}", String::from_utf8_lossy(&c.stderr));
    assert!(!parse(stdout(&c).trim()).unwrap().is_zero());
    let labeled = calabi(&[
        "diagram",
        "contract",
        "--expr",
        "Phi(i,j,k)",
        "--with",
        "Phi(a,b,c)",
        "--k",
        "2",
    ]);
    assert_eq!(code(&labeled), 2);
}

#[test]
fn verify_diagrams_and_bounds() {
    let o = calabi(&["verify", "diagrams"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("6 checks, 0 failed"));
    let o = calabi(&[
        "verify",
        "bounds",
        "--instance",
        "sine1d",
        "--id",
        "ricci_mu_nonpos",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn verify_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, jobs: &str| {
        let json = dir.path().join(format!("{tag}.json"));
        let csv = dir.path().join(format!("{tag}.csv"));
        let pts = dir.path().join(format!("{tag}_points.csv"));
        let o = calabi(&[
            "verify",
            "identities",
            "--instance",
            "manufactured",
            "--seed",
            "42",
            "--points",
            "4",
            "--jobs",
            jobs,
            "--json",
            json.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
            "--points-csv",
            pts.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        v["wall_time_s"] = serde_json::Value::from(0.0);
        let points = std::fs::read_to_string(pts).unwrap();
        assert_eq!(points.lines().count(), 1 + 7 * 4);
        assert!(std::fs::read_to_string(csv).unwrap().starts_with("id,"));
        v
    };
    assert_eq!(run("a", "1"), run("b", "3"));
}

#[test]
fn verify_failures_and_config() {
    // below the finite-difference floor
    let o = calabi(&[
        "verify",
        "identities",
        "--instance",
        "manufactured",
        "--id",
        "d2",
        "--points",
        "3",
        "--tol",
        "1e-15",
    ]);
    assert_eq!(code(&o), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    std::fs::write(&cfg, "suites = [\"bounds\"]\ninstances = [\"orthant2\"]\nids = [\"ricci_mu_nonpos\"]\npoints = 5\n").unwrap();
    let o = calabi(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("1 checks, 0 failed"));

    std::fs::write(&cfg, "nonsense = 3\n").unwrap();
    assert_eq!(
        code(&calabi(&["verify", "--config", cfg.to_str().unwrap()])),
        2
    );
    assert_eq!(code(&calabi(&["verify", "--id", "no_such_check"])), 2);
}

#[test]
fn solve_transport_and_torus() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("gg");
    let o = calabi(&[
        "solve",
        "transport1d",
        "--source",
        "gauss",
        "--target",
        "gauss:0.25",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let s: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((s["min_phi2"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!((s["max_phi2"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    let header: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap())
            .unwrap();
    let len = std::fs::metadata(stem.with_extension("bin")).unwrap().len();
    assert_eq!(len, 3 * 8 * header["shape"][0].as_u64().unwrap());

    let o = calabi(&[
        "solve",
        "transport1d",
        "--target",
        "quartic",
        "--out",
        dir.path().join("q").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let s: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(s["max_ma_residual"].as_f64().unwrap() < 1e-10);

    let o = calabi(&[
        "solve",
        "torus2d",
        "--grid",
        "32",
        "--vpert",
        "0.05*cos(x1)",
        "--export-points",
        "5",
        "--out",
        dir.path().join("t").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(s["residual"].as_f64().unwrap() < 1e-9);

    assert_eq!(
        code(&calabi(&["solve", "transport1d", "--target", "bogus"])),
        2
    );
    assert_eq!(code(&calabi(&["solve", "torus2d", "--grid", "7"])), 2);
}
