//! `calabi`: diagram manipulation, instance solving and verification suites.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use calabi_core::calculus::{contract, covariant_derivative, eliminate_loops, weighted_laplacian};
use calabi_core::diagram::{parse, render_dot, to_index_expression, DiagramSum, ExprMode};
use calabi_core::geometry::{evaluate_diagram, TensorEval};
use calabi_core::instances::{
    export_grid, parse_formula, solve_ma_torus_2d, DensitySpec, InstanceSpec, PotentialInstance,
    TorusOptions, Transport1d,
};
use calabi_core::verification::{run_suite, InstanceRef, Suite, SuiteConfig};
use calabi_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "calabi",
    version,
    about = "Diagram calculus and curvature checks for Hessian metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, transform, print or evaluate a diagram expression.
    Diagram(DiagramArgs),
    /// Run verification suites and write reports.
    Verify(VerifyArgs),
    /// Solve for a potential and export it on a grid.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Action {
    /// Print the expression in canonical form.
    Canon,
    /// Weighted Laplacian.
    Laplacian,
    /// Covariant derivative, adding one leg.
    Derive,
    /// Contract `--k` legs of `--expr` with `--with`.
    Contract,
    /// Eliminate Φ-loops.
    Elim,
    /// Explicit index expression.
    Index,
    /// Components at a point of an instance.
    Eval,
}

#[derive(Args, Debug)]
struct DiagramArgs {
    action: Action,
    /// Expression in the diagram language, e.g. "Phi(i,a,b)*Phi(j,a,b)".
    #[arg(long)]
    expr: String,
    /// Eliminate Φ-loops from the result.
    #[arg(long)]
    elim: bool,
    /// Drop the leg labels of the inputs, making them symmetric tensors.
    #[arg(long)]
    unlabeled: bool,
    /// Second operand for `contract`.
    #[arg(long = "with")]
    other: Option<String>,
    /// Number of legs to contract.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Symmetrize every leg in `index` output.
    #[arg(long)]
    symmetric: bool,
    /// Instance for `eval`: a short name or a TOML/JSON spec file.
    #[arg(long)]
    instance: Option<String>,
    /// Point for `eval`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<f64>>,
    /// Write Graphviz output of the result here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite to run; all suites when omitted.
    #[arg(value_parser = ["identities", "bounds", "diagrams", "all"])]
    suite: Option<String>,
    /// Suite configuration file (TOML, or JSON by extension). Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance name or spec file; repeatable.
    #[arg(long)]
    instance: Vec<String>,
    /// Check id; repeatable.
    #[arg(long)]
    id: Vec<String>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Finite-difference step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the report flattened to CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write per-point residuals (check, instance, point, residual, value) here.
    #[arg(long)]
    points_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolveKind {
    Transport1d,
    Torus2d,
}

#[derive(Args, Debug)]
struct SolveArgs {
    kind: SolveKind,
    /// Source density for transport1d, e.g. "gauss" or "logcosh:0.8".
    #[arg(long, default_value = "gauss")]
    source: String,
    /// Target density for transport1d.
    #[arg(long, default_value = "gauss")]
    target: String,
    /// Grid size per axis for torus2d.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Perturbation of V for torus2d, in x1, x2.
    #[arg(long, default_value = "0")]
    vpert: String,
    /// Perturbation of W for torus2d, in y1, y2.
    #[arg(long, default_value = "0")]
    wpert: String,
    /// Points per axis of the exported grid.
    #[arg(long, default_value_t = 101)]
    export_points: usize,
    /// Points used for the transport1d summary.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Output stem; writes `<stem>.bin` and `<stem>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the summary here as well as to stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Rewrite(_) => 3,
            Error::NotPositiveDefinite { .. }
            | Error::Domain { .. }
            | Error::MissingOrder { .. }
            | Error::Numeric(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        msg: msg.into(),
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn write_file(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// A spec file when the path exists, otherwise a short name.
fn instance_ref(s: &str) -> std::result::Result<InstanceRef, Failure> {
    let p = Path::new(s);
    if p.is_file() {
        let text =
            std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {s}: {e}")))?;
        let spec = match p.extension().and_then(|e| e.to_str()) {
            Some("json") => InstanceSpec::from_json(&text)?,
            _ => InstanceSpec::from_toml(&text)?,
        };
        Ok(InstanceRef::Spec(spec))
    } else {
        Ok(InstanceRef::Name(s.to_string()))
    }
}

fn build_instance(s: &str) -> std::result::Result<PotentialInstance, Failure> {
    Ok(match instance_ref(s)? {
        InstanceRef::Name(n) => InstanceSpec::from_name(&n)?.build()?,
        InstanceRef::Spec(spec) => spec.build()?,
    })
}

fn nested(t: &TensorEval) -> String {
    fn rec(data: &[f64], n: usize, depth: usize, out: &mut String) {
        if depth == 0 {
            let _ = write!(out, "{}", data[0]);
            return;
        }
        let stride = data.len() / n;
        out.push('[');
        for i in 0..n {
            if i > 0 {
                out.push_str(", ");
            }
            rec(&data[i * stride..(i + 1) * stride], n, depth - 1, out);
        }
        out.push(']');
    }
    let mut s = String::new();
    rec(&t.data, t.n, t.order, &mut s);
    s
}

fn cmd_diagram(a: &DiagramArgs) -> Outcome {
    let mut input = parse(&a.expr)?;
    if a.unlabeled {
        input = input.delabel();
    }
    let mut out: DiagramSum = match a.action {
        Action::Canon | Action::Index | Action::Eval => input,
        Action::Laplacian => weighted_laplacian(&input),
        Action::Derive => covariant_derivative(&input),
        Action::Contract => {
            let other = a
                .other
                .as_deref()
                .ok_or_else(|| usage("contract needs --with"))?;
            let mut other = parse(other)?;
            if a.unlabeled {
                other = other.delabel();
            }
            contract(&input, &other, a.k)?
        }
        Action::Elim => eliminate_loops(&input)?,
    };
    if a.elim && a.action != Action::Elim {
        out = eliminate_loops(&out)?;
    }
    if let Some(p) = &a.dot {
        write_file(p, &render_dot(&out))?;
    }
    match a.action {
        Action::Index => {
            let mode = if a.symmetric {
                ExprMode::Symmetric
            } else {
                ExprMode::Labeled
            };
            println!("{}", to_index_expression(&out, mode)?);
        }
        Action::Eval => {
            let (Some(name), Some(at)) = (&a.instance, &a.at) else {
                return Err(usage("eval needs --instance and --at"));
            };
            let inst = build_instance(name)?;
            if at.len() != inst.n {
                return Err(usage(format!(
                    "--at has {} coordinates, instance has dimension {}",
                    at.len(),
                    inst.n
                )));
            }
            println!("{}", nested(&evaluate_diagram(&out, &inst, at)?));
        }
        _ => println!("{out}"),
    }
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let mut cfg = match &a.config {
        Some(p) => SuiteConfig::from_path(p)?,
        None => SuiteConfig::default(),
    };
    match a.suite.as_deref() {
        None | Some("all") => {}
        Some(s) => cfg.suites = vec![s.parse::<Suite>()?],
    }
    if !a.instance.is_empty() {
        cfg.instances = a
            .instance
            .iter()
            .map(|s| instance_ref(s))
            .collect::<Result<_, _>>()?;
    }
    if !a.id.is_empty() {
        cfg.ids = a.id.clone();
    }
    cfg.points = a.points.or(cfg.points);
    cfg.tol = a.tol.or(cfg.tol);
    cfg.step = a.step.or(cfg.step);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.jobs = a.jobs.unwrap_or(cfg.jobs);

    let report = run_suite(&cfg)?;
    for c in &report.checks {
        println!(
            "{:<7} {:<16} {:<34} residual {:.3e} tol {:.1e}",
            c.status.to_string(),
            c.id,
            c.instance,
            c.max_abs_residual,
            c.tolerance
        );
    }
    let failed = report.failures();
    println!("{} checks, {failed} failed", report.checks.len());
    if let Some(p) = &a.json {
        write_file(p, &report.to_json())?;
    }
    if let Some(p) = &a.csv {
        write_file(p, &report.to_csv())?;
    }
    if let Some(p) = &a.points_csv {
        write_file(p, &report.points_csv())?;
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_solve(a: &SolveArgs) -> Outcome {
    let (inst, summary, stem) = match a.kind {
        SolveKind::Transport1d => {
            let src: DensitySpec = a.source.parse()?;
            let tgt: DensitySpec = a.target.parse()?;
            let t = Transport1d::new(src, tgt)?;
            let summary =
                serde_json::to_value(t.summary(a.points)?).map_err(|e| usage(e.to_string()))?;
            (t.instance(5)?, summary, "transport1d")
        }
        SolveKind::Torus2d => {
            let v = parse_formula(&a.vpert, 2)?;
            let w = parse_formula(&a.wpert, 2)?;
            let (inst, s) = solve_ma_torus_2d(
                v,
                w,
                TorusOptions {
                    grid: a.grid,
                    ..Default::default()
                },
            )?;
            (
                inst,
                serde_json::to_value(s).map_err(|e| usage(e.to_string()))?,
                "torus2d",
            )
        }
    };
    let stem = a.out.clone().unwrap_or_else(|| PathBuf::from(stem));
    export_grid(&inst, a.export_points, &stem)?;
    let text = serde_json::to_string_pretty(&summary).map_err(|e| usage(e.to_string()))?;
    println!("{text}");
    if let Some(p) = &a.json {
        write_file(p, &text)?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Diagram(a) => cmd_diagram(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Solve(a) => cmd_solve(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
