//! `spgmo` command-line front end: single solves, benchmark tables and front sweeps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spgmo::stepsize::{LineSearchParams, ScalingStrategy};
use spgmo::{Algorithm, Problem, SolverConfig};
use spgmo_bench::{
    aggregate, named_problem, stream_seed, to_json, to_markdown, write_csv, write_front_csv,
    AlgorithmEntry, BenchConfig, BenchPlan, Defaults, FrontPlan, ProblemParams,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "spgmo", version, about = "Proximal gradient methods for multiobjective optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem from one start and print a JSON summary.
    Solve(SolveArgs),
    /// Run a benchmark configuration and print the aggregated table.
    Bench(BenchArgs),
    /// Record objective values after several iteration caps from shared starts.
    Front(FrontArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
    Json,
}

#[derive(Args)]
struct ProblemArgs {
    /// example31, example44, quadratic, qpa..qpf, or a JSON problem file.
    #[arg(long)]
    problem: String,
    /// Imbalance of example31.
    #[arg(long = "L", default_value_t = 1e3)]
    l: f64,
    /// Slope of the linear objective in example44.
    #[arg(long, default_value_t = 1e-2)]
    c: f64,
    /// Dimension for `quadratic`.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Number of objectives for `quadratic`.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1e2)]
    zeta: f64,
    /// Drop the l1 term from generated families.
    #[arg(long)]
    no_l1: bool,
    /// Seed for problem generation and start sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ProblemArgs {
    fn params(&self) -> ProblemParams {
        ProblemParams {
            l: self.l,
            c: self.c,
            n: self.n,
            m: self.m,
            kappa: self.kappa,
            zeta: self.zeta,
            l1: !self.no_l1,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    algo: Algorithm,
    /// Start point as comma-separated values; sampled from the problem box when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, alias = "kmax", default_value_t = 500)]
    max_iter: usize,
    /// Armijo constant for line-search variants.
    #[arg(long, default_value_t = 1e-4)]
    sigma: f64,
    /// Scaling strategy as JSON, e.g. '{"type":"known_l"}'.
    #[arg(long)]
    scaling: Option<String>,
    /// Backtracking factor for unit-step variants.
    #[arg(long)]
    backtracking: Option<f64>,
    /// Write the iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Exit with status 3 unless the run converges.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON benchmark configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 if any run fails to converge.
    #[arg(long)]
    strict: bool,
    /// Print one start fingerprint per run to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct FrontArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',', default_value = "spgmo,aspgmo,aspgmo-sc")]
    algo: Vec<String>,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    /// Comma-separated iteration caps.
    #[arg(long, alias = "kmax", value_delimiter = ',', default_value = "50,500")]
    max_iter: Vec<usize>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error paired with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config_err(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error,
    }
}

fn io_err(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solve(args: SolveArgs) -> Result<u8, Failure> {
    let np = named_problem(&args.problem.problem, &args.problem.params()).map_err(config_err)?;
    let p: Problem = np.spec.build().map_err(|e| config_err(anyhow!("{}: {e}", np.name)))?;
    let x0 = match args.x0 {
        Some(x) => x,
        None => {
            let seed = stream_seed(&[args.problem.seed, 0, 0, u64::MAX]);
            p.sample_box().sample(&mut ChaCha8Rng::seed_from_u64(seed))
        }
    };
    let mut cfg = SolverConfig::new(args.algo).with_tol(args.tol).with_max_iter(args.max_iter);
    if let Some(s) = &args.scaling {
        let strategy: ScalingStrategy<f64> =
            serde_json::from_str(s).map_err(|e| config_err(anyhow!("--scaling: {e}")))?;
        cfg = cfg.with_scaling(strategy);
    }
    cfg.backtracking = args.backtracking;
    if args.algo == Algorithm::SpgmoLs {
        cfg.line_search = Some(LineSearchParams {
            sigma: args.sigma,
            ..LineSearchParams::default()
        });
    }
    cfg.record_points = args.trace.is_some();
    let report = spgmo::run(&p, &cfg, &x0).map_err(|e| config_err(anyhow!("{e}")))?;

    if let Some(path) = &args.trace {
        let w = output(Some(path)).map_err(io_err)?;
        report.write_trace_jsonl(w).map_err(|e| io_err(e.into()))?;
    }
    let mut summary = report.summary_json();
    if let Some(obj) = summary.as_object_mut() {
        obj.insert("problem".into(), np.name.into());
        obj.insert("x0".into(), x0.into());
    }
    let mut w = output(args.out.as_deref()).map_err(io_err)?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| io_err(e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(e.into()))?;
    Ok(if args.strict && !report.converged() { EXIT_NOT_CONVERGED } else { 0 })
}

fn bench(args: BenchArgs) -> Result<u8, Failure> {
    let mut cfg = BenchConfig::from_file(&args.config).map_err(config_err)?;
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let plan = BenchPlan::from_config(&cfg).map_err(config_err)?;
    let outcomes = plan
        .execute_with_threads(args.threads.or(cfg.threads))
        .map_err(config_err)?;
    if args.verbose {
        let mut err = io::stderr().lock();
        for o in &outcomes {
            let _ = writeln!(err, "{},{},{},{:016x}", o.problem, o.algorithm, o.run, o.x0_hash);
        }
    }
    let rows = aggregate(&outcomes);
    let mut w = output(args.out.as_deref()).map_err(io_err)?;
    let written = match args.format {
        Format::Csv => write_csv(&rows, &mut w),
        Format::Md => w.write_all(to_markdown(&rows).as_bytes()).map_err(Into::into),
        Format::Json => to_json(&rows).and_then(|s| writeln!(w, "{s}").map_err(Into::into)),
    };
    written.and_then(|_| w.flush().map_err(Into::into)).map_err(io_err)?;
    let all_ok = outcomes.iter().all(|o| o.converged);
    Ok(if args.strict && !all_ok { EXIT_NOT_CONVERGED } else { 0 })
}

fn front(args: FrontArgs) -> Result<u8, Failure> {
    let problem = named_problem(&args.problem.problem, &args.problem.params()).map_err(config_err)?;
    let defaults = Defaults {
        tol: args.tol,
        max_iter: 0,
        sigma: args.sigma,
    };
    let solvers = args
        .algo
        .iter()
        .map(|a| AlgorithmEntry::Name(a.clone()).resolve(&defaults))
        .collect::<Result<Vec<_>>>()
        .map_err(config_err)?;
    if args.runs == 0 || args.max_iter.is_empty() {
        return Err(config_err(anyhow!("front needs at least one run and one iteration cap")));
    }
    let points = FrontPlan {
        problem,
        solvers,
        runs: args.runs,
        seed: args.problem.seed,
        kmax: args.max_iter,
    }
    .execute()
    .map_err(config_err)?;
    let mut w = output(args.out.as_deref()).map_err(io_err)?;
    let written = match args.format {
        Format::Csv | Format::Md => write_front_csv(&points, &mut w),
        Format::Json => serde_json::to_string_pretty(&points)
            .map_err(Into::into)
            .and_then(|s| writeln!(w, "{s}").map_err(Into::into)),
    };
    written.and_then(|_| w.flush().map_err(Into::into)).map_err(io_err)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Front(a) => front(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
