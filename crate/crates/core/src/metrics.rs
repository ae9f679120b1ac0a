//! Convergence diagnostics shared by both solvers.

use std::time::Duration;

use nalgebra::DMatrix;

use crate::game::GameModel;
use crate::graph::CommGraph;

/// Diagnostics captured at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Own-action entries of the estimate matrix.
    pub actions: Vec<f64>,
    pub consensus_error: f64,
    pub ne_residual: f64,
    pub guard_activations: usize,
    /// Wall time since the solver started.
    pub elapsed: Duration,
}

/// Largest ∞-norm disagreement between neighbouring estimate rows.
pub fn consensus_error(x: &DMatrix<f64>, graph: &CommGraph) -> f64 {
    let mut worst = 0.0f64;
    for (i, j) in graph.edges() {
        for m in 0..x.ncols() {
            worst = worst.max((x[(i, m)] - x[(j, m)]).abs());
        }
    }
    worst
}

/// `‖x − Π_Ω[x − F(x)]‖_∞` with `F` the pseudo-gradient at the common profile.
/// Zero exactly at equilibria of the boxed game; NaN if any gradient is NaN.
pub fn ne_residual(game: &dyn GameModel, x: &[f64]) -> f64 {
    let bx = game.action_box();
    (0..game.n_players())
        .map(|i| (x[i] - bx.project(i, x[i] - game.grad(i, x))).abs())
        .fold(0.0, |acc, r| if r.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(r) })
}

/// Diagonal of the estimate matrix, i.e. every player's actual action.
pub fn actions(x: &DMatrix<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, i)]).collect()
}

/// Total safeguarded terms over every player's evaluation at its own estimate.
pub fn guard_activations(game: &dyn GameModel, x: &DMatrix<f64>) -> usize {
    let mut row = vec![0.0; x.ncols()];
    (0..x.nrows())
        .map(|i| {
            row.iter_mut().enumerate().for_each(|(m, v)| *v = x[(i, m)]);
            game.guard_activations(i, &row)
        })
        .sum()
}

/// Largest absolute column sum of the aggregated dual matrix.
pub fn max_abs_column_sum(w: &DMatrix<f64>) -> f64 {
    (0..w.ncols())
        .map(|m| w.column(m).iter().sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// `½ (x̲ − x̲*)ᵀ M (x̲ − x̲*)` with `M = diag(β_i e_i e_iᵀ) + c ((D+A) ⊗ I)`,
/// where `x̲` stacks the estimate rows and `x̲*` repeats `x_star` per row.
///
/// The Kronecker block is applied column by column: coordinate `m` of every
/// player's deviation forms a vector `e_m`, contributing `c e_mᵀ (D+A) e_m`.
pub fn m2_seminorm_distance(
    x: &DMatrix<f64>,
    x_star: &[f64],
    beta: &[f64],
    c: f64,
    graph: &CommGraph,
) -> f64 {
    let n = x.nrows();
    let dev = DMatrix::from_fn(n, x.ncols(), |i, m| x[(i, m)] - x_star[m]);
    let own: f64 = (0..n).map(|i| beta[i] * dev[(i, i)] * dev[(i, i)]).sum();
    let mut coupled = 0.0;
    for m in 0..dev.ncols() {
        for i in 0..n {
            let e = dev[(i, m)];
            coupled += graph.degree(i) as f64 * e * e;
            for &j in graph.nbrs(i) {
                coupled += e * dev[(j, m)];
            }
        }
    }
    0.5 * (own + c * coupled)
}
