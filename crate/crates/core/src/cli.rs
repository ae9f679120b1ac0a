//! Command-line front end: `run`, `compare`, `check`, `spectra` and
//! `print-default-config`.
//!
//! Summaries go to stdout as `key=value` lines; traces go to CSV files in the
//! output directory (config `output`, overridden by `--out-dir` or the
//! `NASH_ADMM_OUT_DIR` environment variable).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::admm::{self, check_condition, RunOptions, RunOutput, Termination};
use crate::baseline::{compare, SolverOutcome};
use crate::config::{GameSpec, GraphSpec, Problem, QuadraticSpec, RunConfig, BoxSpec, PerPlayer};
use crate::game::estimate_sigma_f;
use crate::linalg::symmetric_eigenvalues;
use crate::trace::write_trace;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

pub const ADMM_TRACE: &str = "admm_trace.csv";
pub const BASELINE_TRACE: &str = "baseline_trace.csv";

#[derive(Debug, Parser)]
#[command(
    name = "nash-admm",
    version,
    about = "Find Nash equilibria of convex games by consensus ADMM over a communication graph",
    after_help = "Config defaults: admm.c=1, admm.beta=1 (10 for congestion games), admm.max_iter=5000, admm.tol_consensus=1e-8, \
admm.tol_residual=1e-6 (1e-7 for congestion games), admm.record_every=10, admm.x0=\"zeros\", baseline.sweep=[0.2,0.1,0.05,0.02,0.01], \
baseline.max_iter=100000, compare_tol=1e-4, sigma_samples=2000, output=\"out\". Congestion games default to \
15 users, 16 links, kappa=1, chi=10, capacity 10, flows in [0,10], eps_guard=1e-6, seeded routes and a \
ring-plus-5-chords graph. Run `print-default-config` for a complete file."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// JSON run configuration.
    pub config: PathBuf,
    /// Evaluate players in parallel on this many threads.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Fill the elapsed_us column with wall-clock time (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
    /// Output directory, overriding the config's `output`.
    #[arg(long, env = "NASH_ADMM_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the ADMM solver and write its trace.
    Run(SolveArgs),
    /// Run ADMM and the gradient baseline to the same tolerance.
    Compare(SolveArgs),
    /// Report graph spectra and the sufficient step condition.
    Check {
        config: PathBuf,
        /// Cocoercivity constant; overrides the config and skips estimation.
        #[arg(long = "sigma-f")]
        sigma_f: Option<f64>,
    },
    /// Print the spectra of D+A and the normalized Laplacian.
    Spectra { config: PathBuf },
    /// Print a complete default config.
    PrintDefaultConfig {
        #[arg(long, value_enum, default_value_t = DefaultGame::Wanet)]
        game: DefaultGame,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DefaultGame {
    Wanet,
    Quadratic,
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing to the given streams. Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run(args) => cmd_run(args, out, err),
        Command::Compare(args) => cmd_compare(args, out),
        Command::Check { config, sigma_f } => cmd_check(config, *sigma_f, out),
        Command::Spectra { config } => cmd_spectra(config, out),
        Command::PrintDefaultConfig { game } => {
            let cfg = match game {
                DefaultGame::Wanet => RunConfig::default_wanet(),
                DefaultGame::Quadratic => default_quadratic(),
            };
            writeln!(out, "{}", cfg.to_json_pretty())?;
            Ok(EXIT_OK)
        }
    }
}

fn default_quadratic() -> RunConfig {
    let mut cfg = RunConfig::default_wanet();
    cfg.game = GameSpec::Quadratic(QuadraticSpec {
        a: vec![2.0, 2.0],
        b: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        d: vec![-3.0, -3.0],
        action_box: BoxSpec { lower: PerPlayer::Scalar(-5.0), upper: PerPlayer::Scalar(5.0) },
    });
    cfg.graph = Some(GraphSpec::Path { n: 2 });
    cfg.admm.beta = Some(PerPlayer::Scalar(1.0));
    cfg.admm.tol_residual = Some(1e-6);
    cfg
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    RunConfig::from_json(&text)
}

fn output_dir(cfg: &RunConfig, args: &SolveArgs) -> PathBuf {
    args.out_dir.clone().unwrap_or_else(|| PathBuf::from(&cfg.output))
}

fn write_csv(dir: &Path, name: &str, run: &RunOutput, timing: bool) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    write_trace(BufWriter::new(File::create(&path)?), &run.records, timing)?;
    Ok(path)
}

fn sigma_for(cfg: &RunConfig, problem: &Problem, cli_sigma: Option<f64>) -> (Option<f64>, &'static str) {
    if let Some(s) = cli_sigma {
        return (Some(s), "cli");
    }
    if let Some(s) = cfg.sigma_f {
        return (Some(s), "config");
    }
    match estimate_sigma_f(problem.game.as_ref(), cfg.sigma_samples.max(2), cfg.seed) {
        Ok(s) => (Some(s), "estimated"),
        Err(_) => (None, "unavailable"),
    }
}

/// Runs ADMM. Exit 0 on convergence, 2 when the budget runs out, 1 on error.
pub fn cmd_run(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let problem = cfg.resolve()?;
    let game = problem.game.as_ref();

    if let (Some(sigma), _) = sigma_for(&cfg, &problem, None) {
        if sigma > 0.0 {
            let chk = check_condition(sigma, &problem.admm, &problem.graph)?;
            if !chk.satisfied {
                writeln!(
                    err,
                    "warning: sufficient step condition not met (sigma_f={sigma}, threshold={}); running anyway",
                    chk.threshold
                )?;
            }
        }
    }

    let opts = RunOptions { threads: args.threads };
    let result = admm::run_with(game, &problem.graph, &problem.admm, &problem.x0, &opts);
    let run = match result {
        Ok(run) => run,
        Err(Error::Diverged { iteration }) => {
            writeln!(out, "termination=diverged")?;
            writeln!(out, "iteration={iteration}")?;
            writeln!(err, "error: non-finite iterate at iteration {iteration}")?;
            return Ok(EXIT_ERROR);
        }
        Err(e) => return Err(e),
    };
    let path = write_csv(&output_dir(&cfg, args), ADMM_TRACE, &run, args.timing)?;
    let last = run.records.last().expect("final iteration is always recorded");
    writeln!(out, "termination={}", run.termination.as_str())?;
    writeln!(out, "iterations={}", run.iterations)?;
    writeln!(out, "consensus_error={}", run.consensus_error)?;
    writeln!(out, "ne_residual={}", run.ne_residual)?;
    writeln!(out, "guard_activations={}", last.guard_activations)?;
    writeln!(out, "actions={}", join(&last.actions))?;
    writeln!(out, "trace={}", path.display())?;
    Ok(match run.termination {
        Termination::Converged => EXIT_OK,
        Termination::IterationBudget => EXIT_BUDGET,
    })
}

/// Runs the comparison. Solver failures are reported, not fatal.
pub fn cmd_compare(args: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&args.config)?;
    let problem = cfg.resolve()?;
    let comparator = cfg
        .baseline
        .as_ref()
        .ok_or_else(|| Error::Config { path: "baseline".into(), message: "missing `baseline` block".into() })?
        .comparator()?;
    let opts = RunOptions { threads: args.threads };
    let report = compare(
        problem.game.as_ref(),
        &problem.graph,
        &problem.admm,
        &comparator,
        cfg.compare_tol,
        &problem.x0,
        &opts,
    )?;
    let dir = output_dir(&cfg, args);
    if let Some(run) = &report.admm_run {
        let p = write_csv(&dir, ADMM_TRACE, run, args.timing)?;
        writeln!(out, "admm_trace={}", p.display())?;
    }
    if let Some(run) = &report.baseline_run {
        let p = write_csv(&dir, BASELINE_TRACE, run, args.timing)?;
        writeln!(out, "baseline_trace={}", p.display())?;
    }
    writeln!(out, "tol={}", report.tol)?;
    write_outcome(out, "admm", &report.admm)?;
    write_outcome(out, "baseline", &report.baseline)?;
    if let Some(g) = report.best_gamma {
        writeln!(out, "baseline_gamma={g}")?;
    }
    for t in &report.trials {
        writeln!(out, "sweep_gamma_{}={}", t.gamma, outcome_text(&t.outcome))?;
    }
    match report.ratio {
        Some(r) => writeln!(out, "ratio={r}")?,
        None => writeln!(out, "ratio=n/a")?,
    }
    Ok(EXIT_OK)
}

fn outcome_text(o: &SolverOutcome) -> String {
    match o {
        SolverOutcome::Converged { iterations } => format!("converged:{iterations}"),
        SolverOutcome::NotConverged { final_residual } => format!("not_converged:{final_residual}"),
        SolverOutcome::Diverged { iteration } => format!("diverged:{iteration}"),
    }
}

fn write_outcome(out: &mut dyn Write, name: &str, o: &SolverOutcome) -> Result<()> {
    writeln!(out, "{name}_status={}", o.label())?;
    match o.iterations() {
        Some(it) => writeln!(out, "{name}_iterations={it}")?,
        None => writeln!(out, "{name}_iterations=n/a")?,
    }
    Ok(())
}

/// Graph diagnostics and the sufficient step condition. Exit 1 when the
/// graph is disconnected.
pub fn cmd_check(config: &Path, sigma_f: Option<f64>, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(config)?;
    let problem = cfg.resolve()?;
    let graph = &problem.graph;
    let connected = graph.is_connected();
    writeln!(out, "connected={connected}")?;
    if !connected || graph.n() < 2 {
        return Err(Error::Disconnected);
    }
    writeln!(out, "lambda_min_d_plus_a={}", graph.lambda_min_d_plus_a()?)?;
    writeln!(out, "lambda_max_normalized_laplacian={}", graph.lambda_max_normalized_laplacian()?)?;
    let lambda = graph.lambda_min_d_plus_a()?;
    let threshold = admm::condition_threshold(problem.admm.beta_min(), problem.admm.c, lambda);
    writeln!(out, "beta_min={}", problem.admm.beta_min())?;
    writeln!(out, "c={}", problem.admm.c)?;
    writeln!(out, "threshold={threshold}")?;
    let (sigma, source) = sigma_for(&cfg, &problem, sigma_f);
    writeln!(out, "sigma_f_source={source}")?;
    match sigma {
        Some(s) if s > 0.0 => {
            let chk = check_condition(s, &problem.admm, graph)?;
            writeln!(out, "sigma_f={s}")?;
            writeln!(out, "condition={}", if chk.satisfied { "satisfied" } else { "violated" })?;
            writeln!(out, "margin={}", chk.margin)?;
        }
        Some(s) => {
            writeln!(out, "sigma_f={s}")?;
            writeln!(out, "condition=violated")?;
        }
        None => writeln!(out, "condition=unknown")?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_spectra(config: &Path, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(config)?;
    let graph = cfg.resolve()?.graph;
    writeln!(out, "n={}", graph.n())?;
    writeln!(out, "edges={}", graph.edge_count())?;
    writeln!(out, "connected={}", graph.is_connected())?;
    writeln!(out, "eigenvalues_d_plus_a={}", join(&symmetric_eigenvalues(&graph.signless_laplacian())))?;
    writeln!(out, "eigenvalues_laplacian={}", join(&symmetric_eigenvalues(&graph.laplacian())))?;
    match graph.normalized_laplacian() {
        Ok(ln) => writeln!(out, "eigenvalues_normalized_laplacian={}", join(&symmetric_eigenvalues(&ln)))?,
        Err(e) => writeln!(out, "eigenvalues_normalized_laplacian=n/a ({e})")?,
    }
    Ok(EXIT_OK)
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}
