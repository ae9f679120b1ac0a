//! Synchronous projected pseudo-gradient play with consensus averaging,
//! used as the comparator for the ADMM solver.
//!
//! Per iteration every player averages the estimates of itself and all its
//! neighbours for the other players' actions, and takes a projected gradient
//! step of size `γ` on its own action. Both solvers therefore spend one
//! all-neighbour communication round per iteration.

use nalgebra::DMatrix;
use rayon::ThreadPool;

use crate::admm::{self, check_problem, drive, map_players, AdmmConfig, InitialEstimates, RunOptions, RunOutput, SolverState, StopRule, Termination};
use crate::game::GameModel;
use crate::graph::CommGraph;
use crate::{Error, Result};

/// Step sizes tried when no single step is pinned.
pub const DEFAULT_SWEEP: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
pub const DEFAULT_GAMMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub gamma: f64,
    pub max_iter: usize,
    pub tol_consensus: f64,
    pub tol_residual: f64,
    pub record_every: usize,
}

impl BaselineConfig {
    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iter: self.max_iter,
            tol_consensus: self.tol_consensus,
            tol_residual: self.tol_residual,
            record_every: self.record_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        self.stop_rule().validate()
    }
}

/// One synchronous baseline iteration on the estimate matrix.
pub fn baseline_step(
    x: &DMatrix<f64>,
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &BaselineConfig,
) -> Result<DMatrix<f64>> {
    step_on(x, game, graph, cfg.gamma, None)
}

fn step_on(
    x: &DMatrix<f64>,
    game: &dyn GameModel,
    graph: &CommGraph,
    gamma: f64,
    pool: Option<&ThreadPool>,
) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let rows = map_players(n, pool, |i| {
        let nbrs = graph.nbrs(i);
        let weight = 1.0 / (nbrs.len() + 1) as f64;
        let own: Vec<f64> = x.row(i).iter().copied().collect();
        let mut row: Vec<f64> = (0..n)
            .map(|m| (x[(i, m)] + nbrs.iter().map(|&j| x[(j, m)]).sum::<f64>()) * weight)
            .collect();
        row[i] = game.action_box().project(i, x[(i, i)] - gamma * game.grad(i, &own));
        row
    });
    let out = DMatrix::from_fn(n, n, |i, m| rows[i][m]);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { iteration: 0 });
    }
    Ok(out)
}

pub fn run_baseline(
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &BaselineConfig,
    x0: &InitialEstimates,
    opts: &RunOptions,
) -> Result<RunOutput> {
    cfg.validate()?;
    check_problem(game, graph)?;
    let n = game.n_players();
    let initial = SolverState { x: x0.to_matrix(game)?, w: DMatrix::zeros(n, n), k: 0 };
    let pool = opts.pool()?;
    drive(game, graph, initial, &cfg.stop_rule(), |s| {
        let x = step_on(&s.x, game, graph, cfg.gamma, pool.as_ref()).map_err(|e| match e {
            Error::Diverged { .. } => Error::Diverged { iteration: s.k + 1 },
            other => other,
        })?;
        Ok(SolverState { x, w: s.w.clone(), k: s.k + 1 })
    })
}

/// How a solver run ended in a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverOutcome {
    Converged { iterations: usize },
    /// Budget spent without meeting the tolerance; residual did not grow.
    NotConverged { final_residual: f64 },
    /// Non-finite values, or budget spent with the residual above its start.
    Diverged { iteration: usize },
}

impl SolverOutcome {
    pub fn iterations(&self) -> Option<usize> {
        match self {
            Self::Converged { iterations } => Some(*iterations),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Converged { .. } => "converged",
            Self::NotConverged { .. } => "not_converged",
            Self::Diverged { .. } => "diverged",
        }
    }

    fn classify(result: &Result<RunOutput>) -> Self {
        match result {
            Ok(out) if out.termination == Termination::Converged => Self::Converged { iterations: out.iterations },
            Ok(out) => {
                let start = out.records.first().map_or(f64::INFINITY, |r| r.ne_residual);
                if out.ne_residual > start {
                    Self::Diverged { iteration: out.iterations }
                } else {
                    Self::NotConverged { final_residual: out.ne_residual }
                }
            }
            Err(Error::Diverged { iteration }) => Self::Diverged { iteration: *iteration },
            Err(_) => Self::Diverged { iteration: 0 },
        }
    }
}

/// Which comparator `compare` runs against ADMM.
#[derive(Debug, Clone, PartialEq)]
pub enum Comparator {
    /// Projected pseudo-gradient with the best step from `gammas`.
    Gradient { gammas: Vec<f64>, max_iter: usize, record_every: usize },
    /// ADMM against itself; the ratio must come out as 1.
    SelfCompare,
}

#[derive(Debug, Clone)]
pub struct GammaTrial {
    pub gamma: f64,
    pub outcome: SolverOutcome,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub tol: f64,
    pub admm: SolverOutcome,
    pub baseline: SolverOutcome,
    /// Step size of the reported baseline run, if a gradient comparator ran.
    pub best_gamma: Option<f64>,
    pub trials: Vec<GammaTrial>,
    /// Baseline iterations over ADMM iterations, when both converged.
    pub ratio: Option<f64>,
    pub admm_run: Option<RunOutput>,
    pub baseline_run: Option<RunOutput>,
}

/// Runs ADMM and the comparator to the same tolerance (`tol` for both
/// consensus and residual) from the same start and reports iteration counts.
/// Solver failures are reported in the outcome, never returned as errors;
/// only invalid inputs are.
pub fn compare(
    game: &dyn GameModel,
    graph: &CommGraph,
    admm_cfg: &AdmmConfig,
    comparator: &Comparator,
    tol: f64,
    x0: &InitialEstimates,
    opts: &RunOptions,
) -> Result<ComparisonReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("comparison tolerance must be positive, got {tol}")));
    }
    check_problem(game, graph)?;
    x0.to_matrix(game)?;
    let admm_cfg = AdmmConfig { tol_consensus: tol, tol_residual: tol, ..admm_cfg.clone() };
    admm_cfg.validate(game.n_players())?;
    let admm_result = admm::run_with(game, graph, &admm_cfg, x0, opts);
    let admm = SolverOutcome::classify(&admm_result);

    let (baseline, best_gamma, trials, baseline_run) = match comparator {
        Comparator::SelfCompare => {
            let result = admm::run_with(game, graph, &admm_cfg, x0, opts);
            (SolverOutcome::classify(&result), None, Vec::new(), result.ok())
        }
        Comparator::Gradient { gammas, max_iter, record_every } => {
            if gammas.is_empty() {
                return Err(Error::InvalidParameter("empty step-size sweep".into()));
            }
            let mut trials = Vec::new();
            let mut best: Option<(usize, Result<RunOutput>)> = None;
            for (idx, &gamma) in gammas.iter().enumerate() {
                let cfg = BaselineConfig {
                    gamma,
                    max_iter: *max_iter,
                    tol_consensus: tol,
                    tol_residual: tol,
                    record_every: *record_every,
                };
                cfg.validate()?;
                let result = run_baseline(game, graph, &cfg, x0, opts);
                let outcome = SolverOutcome::classify(&result);
                trials.push(GammaTrial { gamma, outcome });
                let better = match (&best, outcome.iterations()) {
                    (_, None) => best.is_none(),
                    (None, Some(_)) => true,
                    (Some((b, _)), Some(it)) => trials[*b].outcome.iterations().is_none_or(|bi| it < bi),
                };
                if better {
                    best = Some((idx, result));
                }
            }
            let (idx, result) = best.expect("sweep is non-empty");
            (trials[idx].outcome, Some(trials[idx].gamma), trials, result.ok())
        }
    };

    let ratio = match (admm.iterations(), baseline.iterations()) {
        (Some(a), Some(b)) if a > 0 => Some(b as f64 / a as f64),
        (Some(0), Some(0)) => Some(1.0),
        _ => None,
    };
    Ok(ComparisonReport {
        tol,
        admm,
        baseline,
        best_gamma,
        trials,
        ratio,
        admm_run: admm_result.ok(),
        baseline_run,
    })
}
