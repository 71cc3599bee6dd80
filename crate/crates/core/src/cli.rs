//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for unreadable or invalid input (including
//! malformed JSON and bad flags), 3 when a solver fails on a valid instance.

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Mode, SolverConfig};
use crate::error::Error;
use crate::geometry::{objective, Point, PointSet, SetFamily};
use crate::io::{read_file, AnyFile, InputError, ProbFile, SetMedianFile};
use crate::kernels::{kernel_expected_cost, solve_psvdd, Kernel};
use crate::oracle::{oracle_pseb, oracle_set_median};
use crate::probseb::{expected_cost, solve_pseb, DiscreteDistribution, Entry, ProbInstance, DEFAULT_ENUMERATION_CAP};
use crate::setmedian::solve_set_median;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

const DEFAULT_EPSILON: f64 = 0.1;
const DEFAULT_POLY_DEGREE: u32 = 2;
const DEFAULT_POLY_OFFSET: f64 = 1.0;
const DEFAULT_RBF_SIGMA: f64 = 1.0;

#[derive(Debug, Parser)]
#[command(name = "setmedian", version, about = "Set median, probabilistic smallest enclosing ball and SVDD solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate the set median of a family of point sets.
    Setmedian(SolveArgs),
    /// Approximate the probabilistic smallest enclosing ball.
    Pseb(SolveArgs),
    /// Approximate the probabilistic SVDD in a kernel feature space.
    Psvdd(PsvddArgs),
    /// Brute-force reference optimum (set median, or pSEB for d <= 2).
    Oracle(OracleArgs),
    /// Run a benchmark suite against the oracles and print CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Practical,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Paper => Mode::PaperFaithful,
            ModeArg::Practical => Mode::Practical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Poly,
    Rbf,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Instance file (JSON).
    #[arg(long = "in", value_name = "PATH")]
    pub input: String,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    /// Start from a configuration file, or from the `config_echo` of an earlier result.
    #[arg(long, value_name = "PATH")]
    pub config: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of independent repetitions, overriding ceil(log2(1/eta)).
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Worker threads for repetitions; 0 runs sequentially.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Answer furthest-point queries from approximate enclosing balls of this accuracy.
    #[arg(long, value_name = "EPS")]
    pub reduce_sets: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PsvddArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    #[arg(long)]
    pub poly_degree: Option<u32>,
    #[arg(long)]
    pub poly_offset: Option<f64>,
    #[arg(long)]
    pub rbf_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: String,
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    /// Subgradient iterations per start for the set median oracle.
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    /// Coarse grid spacing for the pSEB oracle.
    #[arg(long, default_value_t = 0.25)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Smoke,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Suite::Smoke)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    /// Leave the `millis` column empty so that output is reproducible byte for byte.
    #[arg(long)]
    pub omit_timing: bool,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

/// Solver configuration as echoed in results and accepted by `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Solver(Error),
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Invalid(inner) => CliError::from(inner),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            CliError::Input(e.to_string())
        } else {
            CliError::Solver(e)
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Setmedian(a) => cmd_setmedian(&a),
        Command::Pseb(a) => cmd_pseb(&a),
        Command::Psvdd(a) => cmd_psvdd(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(CliError::Solver(e)) => {
            eprintln!("solver error: {e}");
            EXIT_SOLVER
        }
    }
}

fn load_echo(path: &str) -> Result<ConfigEcho, CliError> {
    let text = read_file(path)?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed JSON in {path}: {e}")))?;
    if let Some(echo) = value.get_mut("config_echo") {
        value = echo.take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Input(format!("invalid configuration in {path}: {e}")))
}

fn resolve_config(common: &CommonArgs, reduce_sets: Option<f64>) -> Result<ConfigEcho, CliError> {
    let mut echo = match &common.config {
        Some(path) => load_echo(path)?,
        None => ConfigEcho {
            solver: SolverConfig::new(
                common.mode.map_or(Mode::Practical, Mode::from),
                common.epsilon.unwrap_or(DEFAULT_EPSILON),
            ),
            kernel: None,
        },
    };
    let cfg = &mut echo.solver;
    if let Some(m) = common.mode {
        let mode = Mode::from(m);
        if mode != cfg.mode {
            cfg.mode = mode;
            cfg.c_iters = mode.default_iteration_constant();
            cfg.c_select = mode.default_selection_constant();
        }
    }
    if let Some(e) = common.epsilon {
        cfg.epsilon = e;
    }
    if let Some(e) = common.eta {
        cfg.eta = e;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.repetitions.is_some() {
        cfg.repetitions = common.repetitions;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if reduce_sets.is_some() {
        cfg.reduce_sets = reduce_sets;
    }
    cfg.validate()?;
    Ok(echo)
}

fn resolve_kernel(args: &PsvddArgs, from_config: Option<Kernel>) -> Result<Kernel, CliError> {
    let kind = args.kernel.unwrap_or(match from_config {
        Some(Kernel::Polynomial { .. }) => KernelArg::Poly,
        Some(Kernel::Rbf { .. }) => KernelArg::Rbf,
        _ => KernelArg::Linear,
    });
    let kernel = match kind {
        KernelArg::Linear => Kernel::Linear,
        KernelArg::Poly => {
            let (d0, o0) = match from_config {
                Some(Kernel::Polynomial { degree, offset }) => (degree, offset),
                _ => (DEFAULT_POLY_DEGREE, DEFAULT_POLY_OFFSET),
            };
            Kernel::Polynomial {
                degree: args.poly_degree.unwrap_or(d0),
                offset: args.poly_offset.unwrap_or(o0),
            }
        }
        KernelArg::Rbf => {
            let s0 = match from_config {
                Some(Kernel::Rbf { sigma }) => sigma,
                _ => DEFAULT_RBF_SIGMA,
            };
            Kernel::Rbf {
                sigma: args.rbf_sigma.unwrap_or(s0),
            }
        }
    };
    kernel.validate()?;
    Ok(kernel)
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed JSON in {path}: {e}")))
}

fn emit(out: Option<&str>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("{path}: {e}"))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

fn emit_json(out: Option<&str>, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("result serializes");
    text.push('\n');
    emit(out, &text)
}

fn cmd_setmedian(args: &SolveArgs) -> Result<(), CliError> {
    let echo = resolve_config(&args.common, args.reduce_sets)?;
    let family = parse_json::<SetMedianFile>(&args.common.input)?
        .into_family()
        .map_err(CliError::from)?;
    let result = solve_set_median(&family, &echo.solver)?;
    emit_json(
        args.common.out.as_deref(),
        &json!({
            "center": result.center,
            "cost": result.cost_estimate,
            "diagnostics": result.diagnostics,
            "config_echo": echo,
        }),
    )
}

/// Exact expected cost when the realizations can be enumerated, otherwise the
/// solver's sampled estimate.
fn reported_cost(exact: Result<f64, Error>, estimate: f64) -> Result<(f64, &'static str), CliError> {
    match exact {
        Ok(c) => Ok((c, "exact")),
        Err(Error::EnumerationCap { .. }) => Ok((estimate, "estimate")),
        Err(e) => Err(e.into()),
    }
}

fn cmd_pseb(args: &SolveArgs) -> Result<(), CliError> {
    let echo = resolve_config(&args.common, args.reduce_sets)?;
    let inst = parse_json::<ProbFile>(&args.common.input)?
        .into_instance()
        .map_err(CliError::from)?;
    let result = solve_pseb(&inst, &echo.solver)?;
    let (cost, kind) = reported_cost(
        crate::probseb::expected_cost_capped(&result.center, &inst, DEFAULT_ENUMERATION_CAP),
        result.cost_estimate,
    )?;
    emit_json(
        args.common.out.as_deref(),
        &json!({
            "center": result.center,
            "cost": cost,
            "cost_kind": kind,
            "cost_estimate": result.cost_estimate,
            "diagnostics": result.diagnostics,
            "config_echo": echo,
        }),
    )
}

fn cmd_psvdd(args: &PsvddArgs) -> Result<(), CliError> {
    let mut echo = resolve_config(&args.common, None)?;
    let kernel = resolve_kernel(args, echo.kernel)?;
    echo.kernel = Some(kernel);
    let inst = parse_json::<ProbFile>(&args.common.input)?
        .into_instance()
        .map_err(CliError::from)?;
    let result = solve_psvdd(&inst, kernel, &echo.solver)?;
    let (cost, kind) = reported_cost(
        kernel_expected_cost(&result.center, &inst, &kernel, DEFAULT_ENUMERATION_CAP),
        result.cost_estimate,
    )?;
    emit_json(
        args.common.out.as_deref(),
        &json!({
            "implicit_center": result.center.terms(),
            "cost": cost,
            "cost_kind": kind,
            "cost_estimate": result.cost_estimate,
            "diagnostics": result.diagnostics,
            "config_echo": echo,
        }),
    )
}

fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let file: AnyFile = parse_json(&args.input)?;
    let value = match file {
        AnyFile::SetMedian(f) => {
            let family = f.into_family().map_err(CliError::from)?;
            let (center, cost) = with_threads(args.threads, || oracle_set_median(&family, args.budget))?;
            json!({"problem": "set_median", "center": center, "cost": cost, "budget": args.budget})
        }
        AnyFile::Prob(f) => {
            let inst = f.into_instance().map_err(CliError::from)?;
            let (center, cost) = with_threads(args.threads, || oracle_pseb(&inst, args.grid_step))??;
            json!({"problem": "pseb", "center": center, "cost": cost, "grid_step": args.grid_step})
        }
    };
    emit_json(args.out.as_deref(), &value)
}

fn random_family(rng: &mut ChaCha8Rng, sets: usize, size: usize, dim: usize) -> SetFamily {
    SetFamily::new(
        (0..sets)
            .map(|_| {
                PointSet::from_rows(
                    (0..size)
                        .map(|_| (0..dim).map(|_| rng.random_range(0.0..10.0)).collect())
                        .collect(),
                )
                .expect("finite rows")
            })
            .collect(),
    )
    .expect("non-empty family")
}

/// `n` distributions over `z` locations in `[0, 10]^2`, the last entry absent
/// with probability `absent`.
fn random_prob(rng: &mut ChaCha8Rng, n: usize, z: usize, absent: f64) -> ProbInstance {
    let dists = (0..n)
        .map(|i| {
            let weights: Vec<f64> = (0..z - 1).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let mut entries: Vec<Entry> = weights
                .iter()
                .map(|w| Entry {
                    loc: Some(Point::new(vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).expect("finite")),
                    p: (1.0 - absent) * w / total,
                })
                .collect();
            entries.push(Entry { loc: None, p: absent });
            DiscreteDistribution::new(entries, i).expect("valid distribution")
        })
        .collect();
    ProbInstance::new(2, dists).expect("valid instance")
}

struct BenchRow {
    instance: String,
    eps: f64,
    mode: &'static str,
    cost: f64,
    oracle_cost: f64,
    millis: Option<u128>,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::PaperFaithful => "paper",
        Mode::Practical => "practical",
    }
}

fn smoke_suite(seed: u64, timed: bool) -> Result<Vec<BenchRow>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let clock = |start: Instant| timed.then(|| start.elapsed().as_millis());

    let runs = [
        ("setmedian-0", SolverConfig::practical(0.1), 20, 3, 2),
        ("setmedian-1", SolverConfig::practical(0.1), 20, 3, 3),
        ("setmedian-2", SolverConfig::practical(0.2), 10, 4, 2),
        ("setmedian-paper", SolverConfig::paper_faithful(0.3), 10, 2, 2),
    ];
    for (name, cfg, sets, size, dim) in runs {
        let family = random_family(&mut rng, sets, size, dim);
        let cfg = cfg.with_seed(seed);
        let start = Instant::now();
        let result = solve_set_median(&family, &cfg)?;
        let millis = clock(start);
        let (_, oracle_cost) = oracle_set_median(&family, 2000);
        rows.push(BenchRow {
            instance: name.to_string(),
            eps: cfg.epsilon,
            mode: mode_name(cfg.mode),
            cost: objective(&result.center, &family)?,
            oracle_cost,
            millis,
        });
    }

    for (name, absent) in [("pseb-case2", 0.3), ("pseb-case1", 0.99)] {
        let inst = random_prob(&mut rng, 6, 3, absent);
        let cfg = SolverConfig::practical(0.1).with_seed(seed);
        let start = Instant::now();
        let result = solve_pseb(&inst, &cfg)?;
        let millis = clock(start);
        let (_, oracle_cost) = oracle_pseb(&inst, 0.25)?;
        rows.push(BenchRow {
            instance: name.to_string(),
            eps: cfg.epsilon,
            mode: mode_name(cfg.mode),
            cost: expected_cost(&result.center, &inst)?,
            oracle_cost,
            millis,
        });
    }
    Ok(rows)
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let rows = match args.suite {
        Suite::Smoke => with_threads(args.threads, || smoke_suite(args.seed, !args.omit_timing))??,
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(format!("csv: {e}"));
    writer
        .write_record(["instance", "eps", "mode", "cost", "oracle_cost", "ratio", "millis"])
        .map_err(csv_err)?;
    for r in rows {
        let ratio = if r.oracle_cost > 0.0 { r.cost / r.oracle_cost } else { 1.0 };
        writer
            .write_record([
                r.instance,
                r.eps.to_string(),
                r.mode.to_string(),
                r.cost.to_string(),
                r.oracle_cost.to_string(),
                ratio.to_string(),
                r.millis.map(|m| m.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))?;
    emit(args.out.as_deref(), &String::from_utf8(bytes).expect("csv is utf-8"))
}
