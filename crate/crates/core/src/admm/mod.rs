//! Consensus ADMM where each player keeps an estimate of every action.
//!
//! Each player `i` holds a row `x^i` of the estimate matrix `X` (its guess of
//! every action; `X[i][i]` is its real action) and a row `w^i` of the
//! aggregated dual matrix `W`. One synchronous step, with every read taken
//! from iteration `k`:
//!
//! ```text
//! w^i      ← w^i + c Σ_{j∈N_i} (x^i − x^j)
//! x^i_{-i} ← mean_{j∈N_i} x^j_{-i} − w^i_{-i,old} / (2c|N_i|)
//! x^i_i    ← Π_{Ω_i}[ ((β_i + c|N_i|) x^i_i − (w^i_{i,new} + ∇_i J_i(x^i) − c Σ_{j∈N_i} x^j_i)) / α_i ]
//! ```
//!
//! with `α_i = β_i + 2c|N_i|`. The explicit multiplier form lives in [`dual`].

pub mod dual;

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::game::GameModel;
use crate::graph::CommGraph;
use crate::metrics::{self, IterationRecord};
use crate::{Error, Result};

pub use dual::{unsimplified_step, DualState};

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    /// Consensus penalty and dual step.
    pub c: f64,
    /// Per-player proximal weights of the linearized action update.
    pub beta: Vec<f64>,
    pub max_iter: usize,
    pub tol_consensus: f64,
    pub tol_residual: f64,
    pub record_every: usize,
}

impl AdmmConfig {
    /// `c = 1`, `β_i = 1`, 5000 iterations, tolerances `1e-8` / `1e-6`.
    pub fn with_defaults(n: usize) -> Self {
        Self {
            c: 1.0,
            beta: vec![1.0; n],
            max_iter: 5000,
            tol_consensus: 1e-8,
            tol_residual: 1e-6,
            record_every: 1,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        if self.beta.len() != n {
            return Err(Error::Dimension(format!("{} proximal weights for {n} players", self.beta.len())));
        }
        if let Some(i) = self.beta.iter().position(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter(format!("beta[{i}] must be positive")));
        }
        self.stop_rule().validate()
    }

    pub fn beta_min(&self) -> f64 {
        self.beta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iter: self.max_iter,
            tol_consensus: self.tol_consensus,
            tol_residual: self.tol_residual,
            record_every: self.record_every,
        }
    }
}

/// Termination thresholds shared by every solver in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iter: usize,
    pub tol_consensus: f64,
    pub tol_residual: f64,
    pub record_every: usize,
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_consensus > 0.0 && self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Estimates and aggregated duals at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub k: usize,
}

impl SolverState {
    pub fn actions(&self) -> Vec<f64> {
        metrics::actions(&self.x)
    }
}

/// Starting estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialEstimates {
    Zeros,
    /// One profile copied into every player's row.
    Profile(Vec<f64>),
    /// Row `i` is player `i`'s starting estimate.
    PerPlayer(DMatrix<f64>),
}

impl InitialEstimates {
    pub fn to_matrix(&self, game: &dyn GameModel) -> Result<DMatrix<f64>> {
        let n = game.n_players();
        let x = match self {
            Self::Zeros => DMatrix::zeros(n, n),
            Self::Profile(p) => {
                if p.len() != n {
                    return Err(Error::Dimension(format!("initial profile has {} entries for {n} players", p.len())));
                }
                DMatrix::from_fn(n, n, |_, m| p[m])
            }
            Self::PerPlayer(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::Dimension(format!("initial estimates must be {n}x{n}")));
                }
                m.clone()
            }
        };
        let bx = game.action_box();
        for i in 0..n {
            for m in 0..n {
                if !bx.contains_coord(m, x[(i, m)]) {
                    return Err(Error::InfeasibleStart { player: i, coord: m });
                }
            }
        }
        Ok(x)
    }
}

/// Validated starting state: estimates from `x0`, zero duals, `k = 0`.
pub fn init_state(game: &dyn GameModel, graph: &CommGraph, x0: &InitialEstimates) -> Result<SolverState> {
    check_problem(game, graph)?;
    let x = x0.to_matrix(game)?;
    let n = game.n_players();
    Ok(SolverState { x, w: DMatrix::zeros(n, n), k: 0 })
}

pub(crate) fn check_problem(game: &dyn GameModel, graph: &CommGraph) -> Result<()> {
    graph.require_solvable()?;
    if graph.n() != game.n_players() {
        return Err(Error::Dimension(format!(
            "graph has {} nodes but the game has {} players",
            graph.n(),
            game.n_players()
        )));
    }
    Ok(())
}

/// One synchronous iteration of the compact algorithm.
pub fn admm_step(
    state: &SolverState,
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &AdmmConfig,
) -> Result<SolverState> {
    step_on(state, game, graph, cfg, None)
}

fn step_on(
    state: &SolverState,
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &AdmmConfig,
    pool: Option<&ThreadPool>,
) -> Result<SolverState> {
    let n = state.x.nrows();
    let rows = map_players(n, pool, |i| player_update(i, state, game, graph, cfg));
    let mut x = DMatrix::zeros(n, n);
    let mut w = DMatrix::zeros(n, n);
    for (i, (xr, wr)) in rows.into_iter().enumerate() {
        for m in 0..n {
            x[(i, m)] = xr[m];
            w[(i, m)] = wr[m];
        }
    }
    let k = state.k + 1;
    if x.iter().chain(w.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Diverged { iteration: k });
    }
    Ok(SolverState { x, w, k })
}

fn player_update(
    i: usize,
    state: &SolverState,
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &AdmmConfig,
) -> (Vec<f64>, Vec<f64>) {
    let n = state.x.nrows();
    let nbrs = graph.nbrs(i);
    let deg = nbrs.len() as f64;
    let c = cfg.c;
    let x = &state.x;

    let mut w_new = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    for m in 0..n {
        let mut disagreement = 0.0;
        let mut nbr_sum = 0.0;
        for &j in nbrs {
            disagreement += x[(i, m)] - x[(j, m)];
            nbr_sum += x[(j, m)];
        }
        w_new[m] = state.w[(i, m)] + c * disagreement;
        if m != i {
            x_new[m] = nbr_sum / deg - state.w[(i, m)] / (2.0 * c * deg);
        }
    }

    let own: Vec<f64> = x.row(i).iter().copied().collect();
    let grad = game.grad(i, &own);
    let nbr_own: f64 = nbrs.iter().map(|&j| x[(j, i)]).sum();
    let alpha = cfg.beta[i] + 2.0 * c * deg;
    let target = ((cfg.beta[i] + c * deg) * x[(i, i)] - (w_new[i] + grad - c * nbr_own)) / alpha;
    x_new[i] = game.action_box().project(i, target);
    (x_new, w_new)
}

/// Evaluates `f` for every player, on `pool` when given. Output order is
/// player order either way, so results do not depend on the thread count.
pub(crate) fn map_players<T, F>(n: usize, pool: Option<&ThreadPool>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match pool {
        Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        None => (0..n).map(f).collect(),
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationBudget,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::IterationBudget => "iteration budget",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub iterations: usize,
    pub consensus_error: f64,
    pub ne_residual: f64,
    /// Largest absolute column sum of `W` seen over all iterations.
    pub max_column_sum: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Per-player parallelism. `None` runs on the calling thread.
    pub threads: Option<usize>,
}

impl RunOptions {
    pub(crate) fn pool(&self) -> Result<Option<ThreadPool>> {
        match self.threads {
            None => Ok(None),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map(Some)
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}"))),
        }
    }
}

/// Runs the solver until consensus and equilibrium residual both meet their
/// tolerances or the iteration budget is spent.
pub fn run(
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &AdmmConfig,
    x0: &InitialEstimates,
) -> Result<RunOutput> {
    run_with(game, graph, cfg, x0, &RunOptions::default())
}

pub fn run_with(
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &AdmmConfig,
    x0: &InitialEstimates,
    opts: &RunOptions,
) -> Result<RunOutput> {
    cfg.validate(game.n_players())?;
    let initial = init_state(game, graph, x0)?;
    let pool = opts.pool()?;
    drive(game, graph, initial, &cfg.stop_rule(), |s| {
        step_on(s, game, graph, cfg, pool.as_ref())
    })
}

/// Continues from `state` under the same stop rule as [`run_with`]. The
/// budget counts from iteration zero, not from `state.k`.
pub fn resume(
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &AdmmConfig,
    state: SolverState,
    opts: &RunOptions,
) -> Result<RunOutput> {
    cfg.validate(game.n_players())?;
    check_problem(game, graph)?;
    let n = game.n_players();
    if state.x.shape() != (n, n) || state.w.shape() != (n, n) {
        return Err(Error::Dimension(format!("solver state must be {n}x{n}")));
    }
    let pool = opts.pool()?;
    drive(game, graph, state, &cfg.stop_rule(), |s| {
        step_on(s, game, graph, cfg, pool.as_ref())
    })
}

/// Shared iteration loop: checks the stop rule, records diagnostics every
/// `record_every` iterations and always at the final one.
pub(crate) fn drive<F>(
    game: &dyn GameModel,
    graph: &CommGraph,
    initial: SolverState,
    stop: &StopRule,
    mut step: F,
) -> Result<RunOutput>
where
    F: FnMut(&SolverState) -> Result<SolverState>,
{
    let started = Instant::now();
    let mut state = initial;
    let mut records = Vec::new();
    let mut max_column_sum = metrics::max_abs_column_sum(&state.w);
    loop {
        let actions = state.actions();
        let consensus = metrics::consensus_error(&state.x, graph);
        let residual = metrics::ne_residual(game, &actions);
        if !residual.is_finite() {
            return Err(Error::Diverged { iteration: state.k });
        }
        let converged = consensus <= stop.tol_consensus && residual <= stop.tol_residual;
        let last = converged || state.k >= stop.max_iter;
        if state.k.is_multiple_of(stop.record_every) || last {
            records.push(IterationRecord {
                k: state.k,
                actions,
                consensus_error: consensus,
                ne_residual: residual,
                guard_activations: metrics::guard_activations(game, &state.x),
                elapsed: started.elapsed(),
            });
        }
        if last {
            let termination = if converged {
                Termination::Converged
            } else {
                Termination::IterationBudget
            };
            return Ok(RunOutput {
                iterations: state.k,
                state,
                records,
                termination,
                consensus_error: consensus,
                ne_residual: residual,
                max_column_sum,
            });
        }
        state = step(&state)?;
        max_column_sum = max_column_sum.max(metrics::max_abs_column_sum(&state.w));
    }
}

/// Outcome of the sufficient step condition
/// `σ_F > 1 / (2(β_min + c λ_min(D + A)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub satisfied: bool,
    /// `σ_F` minus the threshold.
    pub margin: f64,
    pub threshold: f64,
    pub lambda_min_d_plus_a: f64,
}

pub fn check_condition(sigma_f: f64, cfg: &AdmmConfig, graph: &CommGraph) -> Result<ConditionCheck> {
    if !(sigma_f > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_f must be positive, got {sigma_f}")));
    }
    let lambda = graph.lambda_min_d_plus_a()?;
    let threshold = condition_threshold(cfg.beta_min(), cfg.c, lambda);
    Ok(ConditionCheck {
        satisfied: sigma_f > threshold,
        margin: sigma_f - threshold,
        threshold,
        lambda_min_d_plus_a: lambda,
    })
}

pub fn condition_threshold(beta_min: f64, c: f64, lambda_min_d_plus_a: f64) -> f64 {
    // λ_min(D+A) can come back as -1e-16 on bipartite graphs.
    1.0 / (2.0 * (beta_min + c * lambda_min_d_plus_a.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ActionBox, QuadraticGame};

    fn decoupled(a: f64, d: f64, lo: f64, hi: f64) -> QuadraticGame {
        QuadraticGame::new(
            vec![a, a],
            DMatrix::zeros(2, 2),
            vec![d, d],
            ActionBox::uniform(2, lo, hi).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_is_stationary() {
        let g = decoupled(1.0, 0.0, -1.0, 1.0);
        let graph = CommGraph::path(2);
        let cfg = AdmmConfig::with_defaults(2);
        let s0 = init_state(&g, &graph, &InitialEstimates::Zeros).unwrap();
        let s1 = admm_step(&s0, &g, &graph, &cfg).unwrap();
        assert_eq!(s1.x, s0.x);
        assert_eq!(s1.w, s0.w);
        assert_eq!(s1.k, 1);
    }

    #[test]
    fn consensus_leaves_duals_unchanged() {
        let g = QuadraticGame::random_diagonally_dominant(4, 3);
        let graph = CommGraph::ring(4);
        let cfg = AdmmConfig::with_defaults(4);
        let mut s = init_state(&g, &graph, &InitialEstimates::Profile(vec![0.5, -0.5, 1.0, 0.0])).unwrap();
        s.w = DMatrix::from_fn(4, 4, |i, m| (i as f64) - (m as f64));
        let s1 = admm_step(&s, &g, &graph, &cfg).unwrap();
        assert_eq!(s1.w, s.w);
    }

    #[test]
    fn one_step_by_hand() {
        // ∇J_i(0) = -2, |N_i| = 1, α = 3: own action (2/3)·0 − (1/3)(0 − 2 − 0) = 2/3
        let g = decoupled(2.0, -2.0, -10.0, 10.0);
        let graph = CommGraph::path(2);
        let cfg = AdmmConfig { c: 1.0, beta: vec![1.0, 1.0], ..AdmmConfig::with_defaults(2) };
        let s0 = init_state(&g, &graph, &InitialEstimates::Zeros).unwrap();
        let s1 = admm_step(&s0, &g, &graph, &cfg).unwrap();
        assert_eq!(s1.w, DMatrix::zeros(2, 2));
        assert!((s1.x[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s1.x[(1, 1)] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s1.x[(0, 1)], 0.0);
        assert_eq!(s1.x[(1, 0)], 0.0);
    }

    #[test]
    fn init_validation() {
        let g = decoupled(1.0, 0.0, -1.0, 1.0);
        let graph = CommGraph::path(2);
        let s = init_state(&g, &graph, &InitialEstimates::Zeros).unwrap();
        assert_eq!(s.x, DMatrix::zeros(2, 2));
        assert_eq!(s.w, DMatrix::zeros(2, 2));
        let rows = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, -0.3, 0.4]);
        let s = init_state(&g, &graph, &InitialEstimates::PerPlayer(rows.clone())).unwrap();
        assert_eq!(s.x, rows);
        assert!(matches!(
            init_state(&g, &graph, &InitialEstimates::Profile(vec![2.0, 0.0])),
            Err(Error::InfeasibleStart { player: 0, coord: 0 })
        ));
        let split = CommGraph::new(2, &[]).unwrap();
        assert!(matches!(init_state(&g, &split, &InitialEstimates::Zeros), Err(Error::Disconnected)));
        let single = QuadraticGame::new(
            vec![1.0],
            DMatrix::zeros(1, 1),
            vec![0.0],
            ActionBox::uniform(1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            init_state(&single, &CommGraph::new(1, &[]).unwrap(), &InitialEstimates::Zeros),
            Err(Error::TooFewPlayers(1))
        ));
    }

    #[test]
    fn zero_budget_returns_initial_state() {
        let g = decoupled(2.0, -2.0, -10.0, 10.0);
        let graph = CommGraph::path(2);
        let cfg = AdmmConfig { max_iter: 0, ..AdmmConfig::with_defaults(2) };
        let out = run(&g, &graph, &cfg, &InitialEstimates::Zeros).unwrap();
        assert_eq!(out.termination, Termination::IterationBudget);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.state.x, DMatrix::zeros(2, 2));
    }

    #[test]
    fn two_player_oracle() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let g = QuadraticGame::new(vec![2.0, 2.0], b, vec![-3.0, -3.0], ActionBox::uniform(2, -5.0, 5.0).unwrap())
            .unwrap();
        let graph = CommGraph::path(2);
        let out = run(&g, &graph, &AdmmConfig::with_defaults(2), &InitialEstimates::Zeros).unwrap();
        assert_eq!(out.termination, Termination::Converged);
        let x_star = g.nash_equilibrium().unwrap();
        for (a, b) in out.state.actions().iter().zip(&x_star) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let g = QuadraticGame::random_diagonally_dominant(4, 8);
        let graph = CommGraph::ring(4);
        let cfg = AdmmConfig::with_defaults(4);
        let full = run(&g, &graph, &cfg, &InitialEstimates::Zeros).unwrap();
        let mut s = init_state(&g, &graph, &InitialEstimates::Zeros).unwrap();
        for _ in 0..7 {
            s = admm_step(&s, &g, &graph, &cfg).unwrap();
        }
        let resumed = resume(&g, &graph, &cfg, s, &RunOptions::default()).unwrap();
        assert_eq!(resumed.iterations, full.iterations);
        assert_eq!(resumed.state, full.state);
    }

    #[test]
    fn divergence_is_reported() {
        struct Exploding;
        impl GameModel for Exploding {
            fn n_players(&self) -> usize {
                2
            }
            fn action_box(&self) -> &ActionBox {
                static B: std::sync::OnceLock<ActionBox> = std::sync::OnceLock::new();
                B.get_or_init(|| ActionBox::uniform(2, -1.0, 1.0).unwrap())
            }
            fn cost(&self, _: usize, _: &[f64]) -> f64 {
                0.0
            }
            fn grad(&self, _: usize, _: &[f64]) -> f64 {
                f64::NAN
            }
        }
        let err = run(&Exploding, &CommGraph::path(2), &AdmmConfig::with_defaults(2), &InitialEstimates::Zeros)
            .unwrap_err();
        assert!(matches!(err, Error::Diverged { iteration: 0 }));
    }

    #[test]
    fn condition_examples() {
        let cfg = AdmmConfig::with_defaults(3);
        let chk = check_condition(0.3, &cfg, &CommGraph::complete(3)).unwrap();
        assert!(chk.satisfied);
        assert!((chk.threshold - 0.25).abs() < 1e-12);
        assert!((chk.margin - 0.05).abs() < 1e-12);

        for c in [0.1, 1.0, 10.0] {
            let cfg = AdmmConfig { c, ..AdmmConfig::with_defaults(3) };
            let chk = check_condition(0.3, &cfg, &CommGraph::path(3)).unwrap();
            assert!((chk.threshold - 0.5).abs() < 1e-12);
            assert!(!chk.satisfied);
        }

        let t = check_condition(1.0, &cfg, &CommGraph::complete(3)).unwrap().threshold;
        let at = check_condition(t, &cfg, &CommGraph::complete(3)).unwrap();
        assert!(!at.satisfied);
        assert_eq!(at.margin, 0.0);

        let split = CommGraph::new(3, &[(0, 1)]).unwrap();
        assert!(matches!(check_condition(0.3, &cfg, &split), Err(Error::Disconnected)));
        assert!(check_condition(0.0, &cfg, &CommGraph::complete(3)).is_err());
    }
}
