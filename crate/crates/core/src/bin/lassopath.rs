use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lassopath_core::gen::{generate, GenKind};
use lassopath_core::homotopy::{run, Algorithm, HomotopyConfig};
use lassopath_core::io::{format_matrix_market, format_vector, read_instance, PathFile};
use lassopath_core::oracle::{verify_path, VerifyOptions};
use lassopath_core::{fixtures, Error, ProblemInstance, Termination, Tolerances};

const EXIT_IO: u8 = 1;
const EXIT_SIGN: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_VERIFY: u8 = 4;

/// Complete solution paths of l1-regularized least squares.
#[derive(Parser)]
#[command(name = "lassopath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a solution path and write it as JSON.
    Solve(SolveArgs),
    /// Evaluate a path file at given parameters (CSV on stdout).
    Eval(EvalArgs),
    /// Verify a path against the optimality conditions and an independent solver.
    Check(CheckArgs),
    /// List or run the built-in example instances.
    Fixtures(FixturesArgs),
    /// Write a seeded random instance.
    Gen(GenArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Matrix file (Matrix Market or CSV rows).
    #[arg(long, requires = "rhs", conflicts_with = "fixture")]
    matrix: Option<PathBuf>,
    /// Right-hand side file.
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    /// Use a built-in instance instead of files.
    #[arg(long)]
    fixture: Option<String>,
}

impl InstanceArgs {
    fn load(&self) -> anyhow::Result<ProblemInstance> {
        match (&self.matrix, &self.rhs, &self.fixture) {
            (_, _, Some(name)) => Ok(fixtures::instance(name)?),
            (Some(m), Some(r), None) => {
                read_instance(m, r).with_context(|| format!("reading {} and {}", m.display(), r.display()))
            }
            _ => anyhow::bail!("give --matrix and --rhs, or --fixture"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Generalized,
    Standard,
    Looping,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "generalized")]
    algorithm: AlgorithmArg,
    /// Output path file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eq_tol: Option<f64>,
    #[arg(long)]
    kkt_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    loop_cap: Option<usize>,
    /// Recorded in the output; the solvers themselves are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "where")]
struct EvalWhere {
    /// Single parameter value.
    #[arg(long)]
    t: Option<f64>,
    /// K log-spaced values in [t0/1000, t0] plus every kink.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    path: PathBuf,
    #[command(flatten)]
    at: EvalWhere,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    path: PathBuf,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Accepted optimality residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Accepted objective excess over the oracle, relative to 1 + |f|^2/2.
    #[arg(long, default_value_t = 1e-6)]
    obj_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "action")]
struct FixturesAction {
    #[arg(long)]
    list: bool,
    #[arg(long, value_name = "NAME")]
    run: Option<String>,
}

#[derive(Args)]
struct FixturesArgs {
    #[command(flatten)]
    action: FixturesAction,
    /// Number of kinks replayed by the adversarial fixture.
    #[arg(long)]
    max_kinks: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKindArg {
    Gaussian,
    Bernoulli,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, alias = "gen", value_enum)]
    kind: GenKindArg,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output matrix file (Matrix Market).
    #[arg(long)]
    matrix: PathBuf,
    /// Output right-hand side file.
    #[arg(long)]
    rhs: PathBuf,
}

fn cmd_solve(args: &SolveArgs) -> anyhow::Result<u8> {
    let inst = args.instance.load()?;
    let mut tol = Tolerances::default();
    if let Some(v) = args.eq_tol {
        tol.eq_tol = v;
    }
    if let Some(v) = args.kkt_tol {
        tol.kkt_tol = v;
    }
    if let Some(v) = args.max_iters {
        tol.max_iters = v;
    }
    let algorithm = match args.algorithm {
        AlgorithmArg::Generalized => Algorithm::Generalized,
        AlgorithmArg::Standard => Algorithm::Standard,
        AlgorithmArg::Looping => Algorithm::Looping,
    };
    let mut cfg = HomotopyConfig { algorithm, tolerances: tol, ..Default::default() };
    if let Some(cap) = args.loop_cap {
        cfg.loop_cap = cap;
    }
    let path = match run(&inst, &cfg) {
        Ok(p) => p,
        Err(e) if is_cap(&e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_CAP);
        }
        Err(e) => return Err(e.into()),
    };
    let mut file = PathFile::from_path(&path);
    file.algorithm = Some(format!("{algorithm:?}").to_lowercase());
    file.seed = args.seed;
    match &args.out {
        Some(out) => file.write(out).with_context(|| format!("writing {}", out.display()))?,
        None => println!("{}", serde_json::to_string_pretty(&file)?),
    }
    Ok(match path.termination() {
        Termination::ReachedZero => 0,
        Termination::IterationCap => {
            eprintln!("stopped at the iteration cap after {} kinks", path.kinks().len());
            EXIT_CAP
        }
        Termination::SignInconsistency { index, t } => {
            eprintln!("sign inconsistency: index {index} at t = {t}");
            EXIT_SIGN
        }
    })
}

fn is_cap(e: &Error) -> bool {
    match e {
        Error::LoopCapExceeded { .. } | Error::DirectionIterationCap { .. } => true,
        Error::AtKink { source, .. } => is_cap(source),
        _ => false,
    }
}

fn csv_row(t: f64, u: &[f64]) -> String {
    std::iter::once(t).chain(u.iter().copied()).map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<u8> {
    let file = PathFile::read(&args.path).with_context(|| format!("reading {}", args.path.display()))?;
    let ts: Vec<f64> = match (args.at.t, args.at.grid) {
        (Some(t), _) => {
            anyhow::ensure!(t.is_finite() && t >= 0.0, "--t must be finite and nonnegative");
            vec![t]
        }
        (None, Some(k)) => {
            let mut ts: Vec<f64> = file.kinks.iter().map(|k| k.t).collect();
            if file.t0 > 0.0 && k > 0 {
                let (lo, hi) = ((file.t0 * 1e-3).ln(), file.t0.ln());
                let steps = (k.max(2) - 1) as f64;
                ts.extend((0..k).map(|i| (lo + (hi - lo) * i as f64 / steps).exp().min(file.t0)));
            }
            ts.sort_by(|a, b| b.total_cmp(a));
            ts.dedup();
            ts
        }
        (None, None) => unreachable!("clap requires one of --t, --grid"),
    };
    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=file.n).map(|i| format!("u_{i}"))).collect();
    println!("{}", header.join(","));
    for t in ts {
        let ev = file.eval(t);
        if ev.beyond_last_kink {
            eprintln!("warning: t = {t} lies below the last kink; the last kink's solution is printed");
        }
        println!("{}", csv_row(t, ev.u.as_slice()));
    }
    Ok(0)
}

fn cmd_check(args: &CheckArgs) -> anyhow::Result<u8> {
    let inst = args.instance.load()?;
    let file = PathFile::read(&args.path).with_context(|| format!("reading {}", args.path.display()))?;
    let path = file.to_solution_path(&inst, &Tolerances::default())?;
    let opts = VerifyOptions { kkt_tol: args.tol, obj_tol: args.obj_tol, seed: args.seed, ..Default::default() };
    let report = verify_path(&inst, &path, args.samples, &opts)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(out) => std::fs::write(out, json + "\n").with_context(|| format!("writing {}", out.display()))?,
        None => println!("{json}"),
    }
    if report.pass {
        Ok(0)
    } else {
        eprintln!("verification failed; worst t = {}", report.worst_t);
        Ok(EXIT_VERIFY)
    }
}

fn cmd_fixtures(args: &FixturesArgs) -> anyhow::Result<u8> {
    if args.action.list {
        for name in fixtures::FIXTURE_NAMES {
            println!("{name}");
        }
        return Ok(0);
    }
    let name = args.action.run.as_deref().expect("clap requires --list or --run");
    let report = fixtures::run_fixture(name, args.max_kinks)?;
    println!("fixture {name}");
    println!("kinks: {}", report.kinks.iter().map(|t| format!("{t}")).collect::<Vec<_>>().join(", "));
    for c in &report.checks {
        println!("{} {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.label, c.detail);
    }
    Ok(if report.pass() { 0 } else { EXIT_VERIFY })
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<u8> {
    let kind = match args.kind {
        GenKindArg::Gaussian => GenKind::Gaussian,
        GenKindArg::Bernoulli => GenKind::Bernoulli,
    };
    let inst = generate(kind, args.m, args.n, args.seed)?;
    let comments = vec![format!("lassopath gen --kind {kind} --m {} --n {} --seed {}", args.m, args.n, args.seed)];
    std::fs::write(&args.matrix, format_matrix_market(inst.a(), &comments))
        .with_context(|| format!("writing {}", args.matrix.display()))?;
    std::fs::write(&args.rhs, format_vector(inst.f(), &comments))
        .with_context(|| format!("writing {}", args.rhs.display()))?;
    eprintln!("seed {}", args.seed);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Check(a) => cmd_check(a),
        Command::Fixtures(a) => cmd_fixtures(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}
