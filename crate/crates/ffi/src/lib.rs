//! C ABI over `nash-admm`.
//!
//! Objects are opaque handles created by `na_*_new`-style constructors and
//! released with the matching `na_*_free`. Every fallible call returns an
//! [`NaStatus`]; on failure a message is kept per thread and can be copied
//! out with [`na_last_error_message`]. Panics never cross the boundary; they
//! surface as [`NaStatus::Panic`].
//!
//! Handles are not synchronized: one handle must not be used from two
//! threads at once. Distinct handles are independent.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use nalgebra::DMatrix;
use nash_admm::admm::{self, AdmmConfig, InitialEstimates, RunOptions, SolverState, Termination};
use nash_admm::game::{self, ActionBox, GameModel, QuadraticGame};
use nash_admm::graph::CommGraph;
use nash_admm::{metrics, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Disconnected = 3,
    InfeasibleStart = 4,
    /// Equilibrium oracle unavailable: singular system or boundary solution.
    NoOracle = 5,
    NotEstimable = 6,
    Diverged = 7,
    BufferTooSmall = 8,
    /// The solver hit its iteration budget before meeting the tolerances.
    NotConverged = 9,
    Panic = 10,
}

/// Solver settings. `beta` applies to every player unless a per-player array
/// is passed alongside.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaSolverConfig {
    pub c: f64,
    pub beta: f64,
    pub max_iter: usize,
    pub tol_consensus: f64,
    pub tol_residual: f64,
    /// Worker threads for the per-player update; 0 runs on the calling thread.
    pub threads: usize,
}

/// Summary of a call to [`na_solver_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NaRunSummary {
    pub iterations: usize,
    pub converged: bool,
    pub consensus_error: f64,
    pub ne_residual: f64,
    /// Largest absolute column sum of the aggregated duals seen during the run.
    pub max_column_sum: f64,
}

pub struct NaGraph {
    inner: CommGraph,
}

pub struct NaGame {
    model: Arc<dyn GameModel>,
    quadratic: Option<Arc<QuadraticGame>>,
}

pub struct NaSolver {
    game: Arc<dyn GameModel>,
    graph: CommGraph,
    cfg: AdmmConfig,
    threads: Option<usize>,
    state: SolverState,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> NaStatus {
    match err {
        Error::Disconnected => NaStatus::Disconnected,
        Error::InfeasibleStart { .. } => NaStatus::InfeasibleStart,
        Error::Singular | Error::BoundarySolution => NaStatus::NoOracle,
        Error::NotEstimable => NaStatus::NotEstimable,
        Error::Diverged { .. } => NaStatus::Diverged,
        _ => NaStatus::InvalidArgument,
    }
}

type Outcome = Result<(), NaStatus>;

fn fail(status: NaStatus, msg: impl Into<String>) -> NaStatus {
    set_error(msg);
    status
}

fn lift<T>(r: nash_admm::Result<T>) -> Result<T, NaStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// Runs `body`, turning panics and errors into status codes.
fn guard(body: impl FnOnce() -> Outcome) -> NaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            NaStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(NaStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, NaStatus> {
    p.as_ref().ok_or_else(|| fail(NaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, NaStatus> {
    p.as_mut().ok_or_else(|| fail(NaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn read_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], NaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(NaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_slice(out: *mut f64, len: usize, values: &[f64], what: &str) -> Outcome {
    if len < values.len() {
        return Err(fail(
            NaStatus::BufferTooSmall,
            format!("{what} needs {} entries, got {len}", values.len()),
        ));
    }
    if out.is_null() {
        return Err(fail(NaStatus::NullPointer, format!("{what} is null")));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Outcome {
    let slot = deref_mut(out, "output handle")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn na_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes,
/// excluding the terminator, so callers can size a buffer with `len = 0`.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn na_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Default settings: `c = 1`, `beta = 1`, 5000 iterations, tolerances 1e-8
/// (consensus) and 1e-6 (residual), single-threaded.
#[no_mangle]
pub extern "C" fn na_solver_config_default() -> NaSolverConfig {
    let d = AdmmConfig::with_defaults(0);
    NaSolverConfig {
        c: d.c,
        beta: 1.0,
        max_iter: d.max_iter,
        tol_consensus: d.tol_consensus,
        tol_residual: d.tol_residual,
        threads: 0,
    }
}

// ---- graphs ---------------------------------------------------------------

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn na_graph_ring(n: usize, out: *mut *mut NaGraph) -> NaStatus {
    guard(|| emit(out, NaGraph { inner: CommGraph::ring(n) }))
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn na_graph_complete(n: usize, out: *mut *mut NaGraph) -> NaStatus {
    guard(|| emit(out, NaGraph { inner: CommGraph::complete(n) }))
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn na_graph_path(n: usize, out: *mut *mut NaGraph) -> NaStatus {
    guard(|| emit(out, NaGraph { inner: CommGraph::path(n) }))
}

/// Ring on `n` nodes plus `extra_edges` chords drawn from `seed`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn na_graph_random_connected(
    n: usize,
    extra_edges: usize,
    seed: u64,
    out: *mut *mut NaGraph,
) -> NaStatus {
    guard(|| {
        let g = lift(CommGraph::random_connected(n, extra_edges, seed))?;
        emit(out, NaGraph { inner: g })
    })
}

/// Undirected graph from `n_edges` pairs stored flat in `edges`
/// (`edges[2k]`, `edges[2k + 1]`).
///
/// # Safety
/// `edges` must point to `2 * n_edges` readable values; `out` to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn na_graph_from_edges(
    n: usize,
    edges: *const usize,
    n_edges: usize,
    out: *mut *mut NaGraph,
) -> NaStatus {
    guard(|| {
        let flat = read_slice(edges, 2 * n_edges, "edges")?;
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|e| (e[0], e[1])).collect();
        let g = lift(CommGraph::new(n, &pairs))?;
        emit(out, NaGraph { inner: g })
    })
}

/// # Safety
/// `graph` must be null or a handle from a graph constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn na_graph_free(graph: *mut NaGraph) {
    free(graph);
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn na_graph_n(graph: *const NaGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.n())
}

/// # Safety
/// `graph` must be a live graph handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn na_graph_is_connected(graph: *const NaGraph, out: *mut bool) -> NaStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        *deref_mut(out, "out")? = g.inner.is_connected();
        Ok(())
    })
}

/// Smallest eigenvalue of the signless Laplacian `D + A`.
///
/// # Safety
/// `graph` must be a live graph handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn na_graph_lambda_min_d_plus_a(graph: *const NaGraph, out: *mut f64) -> NaStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        *deref_mut(out, "out")? = lift(g.inner.lambda_min_d_plus_a())?;
        Ok(())
    })
}

/// Largest eigenvalue of the normalized Laplacian.
///
/// # Safety
/// `graph` must be a live graph handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn na_graph_lambda_max_normalized_laplacian(graph: *const NaGraph, out: *mut f64) -> NaStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        *deref_mut(out, "out")? = lift(g.inner.lambda_max_normalized_laplacian())?;
        Ok(())
    })
}

// ---- games ----------------------------------------------------------------

/// Quadratic game `J_i(x) = a_i x_i² / 2 + x_i Σ_j B_ij x_j + d_i x_i` on the
/// box `[lower, upper]`. `b` is row-major `n × n` with a zero diagonal.
///
/// # Safety
/// `a`, `d`, `lower`, `upper` must point to `n` values, `b` to `n * n`;
/// `out` to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn na_game_quadratic(
    n: usize,
    a: *const f64,
    b: *const f64,
    d: *const f64,
    lower: *const f64,
    upper: *const f64,
    out: *mut *mut NaGame,
) -> NaStatus {
    guard(|| {
        let a = read_slice(a, n, "a")?.to_vec();
        let b = DMatrix::from_row_slice(n, n, read_slice(b, n * n, "b")?);
        let d = read_slice(d, n, "d")?.to_vec();
        let bx = lift(ActionBox::new(read_slice(lower, n, "lower")?.to_vec(), read_slice(upper, n, "upper")?.to_vec()))?;
        let q = Arc::new(lift(QuadraticGame::new(a, b, d, bx))?);
        emit(out, NaGame { model: q.clone(), quadratic: Some(q) })
    })
}

/// The seeded 15-user congestion game and its communication graph.
///
/// # Safety
/// `out_game` and `out_graph` must be valid handle slots.
#[no_mangle]
pub unsafe extern "C" fn na_game_wanet_default(
    seed: u64,
    out_game: *mut *mut NaGame,
    out_graph: *mut *mut NaGraph,
) -> NaStatus {
    guard(|| {
        deref_mut(out_game, "out_game")?;
        deref_mut(out_graph, "out_graph")?;
        let (g, graph) = game::default_wanet_instance(seed);
        emit(out_game, NaGame { model: Arc::new(g), quadratic: None })?;
        emit(out_graph, NaGraph { inner: graph })
    })
}

/// # Safety
/// `game` must be null or a handle from a game constructor, not yet freed.
/// Solvers built from it keep their own reference and stay valid.
#[no_mangle]
pub unsafe extern "C" fn na_game_free(game: *mut NaGame) {
    free(game);
}

/// Number of players, or 0 for a null handle.
///
/// # Safety
/// `game` must be null or a live game handle.
#[no_mangle]
pub unsafe extern "C" fn na_game_n_players(game: *const NaGame) -> usize {
    game.as_ref().map_or(0, |g| g.model.n_players())
}

unsafe fn eval(
    game: *const NaGame,
    player: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
    f: impl FnOnce(&dyn GameModel, usize, &[f64]) -> f64,
) -> NaStatus {
    guard(|| {
        let g = deref(game, "game")?;
        let n = g.model.n_players();
        if player >= n || len != n {
            return Err(fail(
                NaStatus::InvalidArgument,
                format!("player {player} and profile length {len} must fit {n} players"),
            ));
        }
        let x = read_slice(x, len, "x")?;
        *deref_mut(out, "out")? = f(g.model.as_ref(), player, x);
        Ok(())
    })
}

/// Cost of `player` at the profile `x` of length `len`.
///
/// # Safety
/// `game` must be a live game handle, `x` must point to `len` values, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn na_game_cost(
    game: *const NaGame,
    player: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> NaStatus {
    eval(game, player, x, len, out, |g, i, x| g.cost(i, x))
}

/// Partial derivative of `player`'s cost in its own action at `x`.
///
/// # Safety
/// As [`na_game_cost`].
#[no_mangle]
pub unsafe extern "C" fn na_game_grad(
    game: *const NaGame,
    player: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> NaStatus {
    eval(game, player, x, len, out, |g, i, x| g.grad(i, x))
}

/// Projected-gradient equilibrium residual at the common profile `x`.
///
/// # Safety
/// `game` must be a live game handle, `x` must point to `len` values, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn na_game_ne_residual(
    game: *const NaGame,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> NaStatus {
    guard(|| {
        let g = deref(game, "game")?;
        if len != g.model.n_players() {
            return Err(fail(NaStatus::InvalidArgument, "profile length must equal the player count"));
        }
        let x = read_slice(x, len, "x")?;
        *deref_mut(out, "out")? = metrics::ne_residual(g.model.as_ref(), x);
        Ok(())
    })
}

/// Closed-form equilibrium of a quadratic game. Fails with
/// `NA_STATUS_NO_ORACLE` for other games, singular systems, or equilibria on
/// the box boundary.
///
/// # Safety
/// `game` must be a live game handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn na_game_quadratic_equilibrium(game: *const NaGame, out: *mut f64, len: usize) -> NaStatus {
    guard(|| {
        let g = deref(game, "game")?;
        let q = g
            .quadratic
            .as_ref()
            .ok_or_else(|| fail(NaStatus::NoOracle, "only quadratic games have a closed-form equilibrium"))?;
        let x = lift(q.nash_equilibrium())?;
        write_slice(out, len, &x, "out")
    })
}

/// Sampled cocoercivity estimate of the pseudo-gradient.
///
/// # Safety
/// `game` must be a live game handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn na_estimate_sigma_f(game: *const NaGame, samples: usize, seed: u64, out: *mut f64) -> NaStatus {
    guard(|| {
        let g = deref(game, "game")?;
        *deref_mut(out, "out")? = lift(game::estimate_sigma_f(g.model.as_ref(), samples, seed))?;
        Ok(())
    })
}

// ---- solver ---------------------------------------------------------------

unsafe fn build_config(cfg: *const NaSolverConfig, beta: *const f64, n: usize) -> Result<(AdmmConfig, Option<usize>), NaStatus> {
    let c = deref(cfg, "config")?;
    let beta = if beta.is_null() { vec![c.beta; n] } else { slice::from_raw_parts(beta, n).to_vec() };
    let admm = AdmmConfig {
        c: c.c,
        beta,
        max_iter: c.max_iter,
        tol_consensus: c.tol_consensus,
        tol_residual: c.tol_residual,
        record_every: 1,
    };
    lift(admm.validate(n))?;
    Ok((admm, (c.threads > 0).then_some(c.threads)))
}

/// Whether `σ_F > 1 / (2(β_min + c λ_min(D + A)))` holds, with the signed
/// margin `σ_F − threshold`.
///
/// # Safety
/// `cfg` and `graph` must be valid; `beta` null or `na_graph_n(graph)`
/// values; `satisfied` and `margin` writable.
#[no_mangle]
pub unsafe extern "C" fn na_check_condition(
    sigma_f: f64,
    cfg: *const NaSolverConfig,
    beta: *const f64,
    graph: *const NaGraph,
    satisfied: *mut bool,
    margin: *mut f64,
) -> NaStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let (admm, _) = build_config(cfg, beta, g.inner.n())?;
        let chk = lift(admm::check_condition(sigma_f, &admm, &g.inner))?;
        *deref_mut(satisfied, "satisfied")? = chk.satisfied;
        *deref_mut(margin, "margin")? = chk.margin;
        Ok(())
    })
}

/// Solver for `game` over `graph`. `beta` is null (use `cfg->beta` for every
/// player) or one weight per player. `x0` is null (start from zeros), one
/// profile of `n` values copied to every player, or `n * n` row-major
/// per-player estimates, as told by `x0_len`.
///
/// The solver keeps its own references; `game` and `graph` may be freed
/// afterwards.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` must be a handle slot.
#[no_mangle]
pub unsafe extern "C" fn na_solver_new(
    game: *const NaGame,
    graph: *const NaGraph,
    cfg: *const NaSolverConfig,
    beta: *const f64,
    x0: *const f64,
    x0_len: usize,
    out: *mut *mut NaSolver,
) -> NaStatus {
    guard(|| {
        let game = deref(game, "game")?;
        let graph = deref(graph, "graph")?;
        let n = game.model.n_players();
        let (admm, threads) = build_config(cfg, beta, n)?;
        let start = match (x0.is_null(), x0_len) {
            (true, _) | (false, 0) => InitialEstimates::Zeros,
            (false, len) if len == n => InitialEstimates::Profile(read_slice(x0, len, "x0")?.to_vec()),
            (false, len) if len == n * n => {
                InitialEstimates::PerPlayer(DMatrix::from_row_slice(n, n, read_slice(x0, len, "x0")?))
            }
            (false, len) => {
                return Err(fail(NaStatus::InvalidArgument, format!("x0 must hold {n} or {} values, got {len}", n * n)))
            }
        };
        let state = lift(admm::init_state(game.model.as_ref(), &graph.inner, &start))?;
        emit(
            out,
            NaSolver { game: game.model.clone(), graph: graph.inner.clone(), cfg: admm, threads, state },
        )
    })
}

/// # Safety
/// `solver` must be null or a handle from [`na_solver_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn na_solver_free(solver: *mut NaSolver) {
    free(solver);
}

/// One synchronous iteration.
///
/// # Safety
/// `solver` must be a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn na_solver_step(solver: *mut NaSolver) -> NaStatus {
    guard(|| {
        let s = deref_mut(solver, "solver")?;
        s.state = lift(admm::admm_step(&s.state, s.game.as_ref(), &s.graph, &s.cfg))?;
        Ok(())
    })
}

/// Iterates from the current state until both tolerances hold or the
/// iteration counter reaches `max_iter`. Returns `NA_STATUS_NOT_CONVERGED`
/// when the budget runs out; `summary` is filled in either case.
///
/// # Safety
/// `solver` must be a live solver handle; `summary` null or writable.
#[no_mangle]
pub unsafe extern "C" fn na_solver_run(solver: *mut NaSolver, summary: *mut NaRunSummary) -> NaStatus {
    guard(|| {
        let s = deref_mut(solver, "solver")?;
        let opts = RunOptions { threads: s.threads };
        let out = lift(admm::resume(s.game.as_ref(), &s.graph, &s.cfg, s.state.clone(), &opts))?;
        let converged = out.termination == Termination::Converged;
        if let Some(sum) = summary.as_mut() {
            *sum = NaRunSummary {
                iterations: out.iterations,
                converged,
                consensus_error: out.consensus_error,
                ne_residual: out.ne_residual,
                max_column_sum: out.max_column_sum,
            };
        }
        s.state = out.state;
        if converged {
            Ok(())
        } else {
            Err(fail(NaStatus::NotConverged, format!("iteration budget of {} spent", s.cfg.max_iter)))
        }
    })
}

/// Current iteration counter, or 0 for a null handle.
///
/// # Safety
/// `solver` must be null or a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn na_solver_iteration(solver: *const NaSolver) -> usize {
    solver.as_ref().map_or(0, |s| s.state.k)
}

/// Every player's own action, `n` values.
///
/// # Safety
/// `solver` must be a live solver handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn na_solver_actions(solver: *const NaSolver, out: *mut f64, len: usize) -> NaStatus {
    guard(|| {
        let s = deref(solver, "solver")?;
        write_slice(out, len, &s.state.actions(), "out")
    })
}

/// Full estimate matrix, `n * n` values row-major (row `i` is player `i`'s
/// estimate of every action).
///
/// # Safety
/// `solver` must be a live solver handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn na_solver_estimates(solver: *const NaSolver, out: *mut f64, len: usize) -> NaStatus {
    guard(|| {
        let s = deref(solver, "solver")?;
        let rows: Vec<f64> = s.state.x.transpose().iter().copied().collect();
        write_slice(out, len, &rows, "out")
    })
}

/// Consensus error and equilibrium residual of the current state.
///
/// # Safety
/// `solver` must be a live solver handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn na_solver_diagnostics(
    solver: *const NaSolver,
    consensus_error: *mut f64,
    ne_residual: *mut f64,
) -> NaStatus {
    guard(|| {
        let s = deref(solver, "solver")?;
        *deref_mut(consensus_error, "consensus_error")? = metrics::consensus_error(&s.state.x, &s.graph);
        *deref_mut(ne_residual, "ne_residual")? = metrics::ne_residual(s.game.as_ref(), &s.state.actions());
        Ok(())
    })
}
