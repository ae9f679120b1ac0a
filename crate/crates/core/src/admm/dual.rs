//! The algorithm written with explicit per-edge multipliers.
//!
//! Every directed edge `(i, j)` carries `u^{ij}, v^{ij} ∈ ℝ^N`, updated by
//! `u += (c/2)(x^i − x^j)` and `v += (c/2)(x^j − x^i)`. Starting from zero
//! they cancel exactly, which is what lets the compact form keep only the
//! aggregate `w^i = Σ_{j∈N_i} (u^{ij} + v^{ji})`. The auxiliary midpoint
//! variable of the edge splitting is never stored; it is folded into the
//! action update.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{check_problem, AdmmConfig, InitialEstimates};
use crate::game::GameModel;
use crate::graph::CommGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// Directed edges `(i, j)` with `j ∈ N_i`, sorted.
    edges: Vec<(usize, usize)>,
    index: BTreeMap<(usize, usize), usize>,
    pub u: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    pub x: DMatrix<f64>,
    pub k: usize,
}

impl DualState {
    pub fn new(game: &dyn GameModel, graph: &CommGraph, x0: &InitialEstimates) -> Result<Self> {
        check_problem(game, graph)?;
        let x = x0.to_matrix(game)?;
        let n = game.n_players();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| graph.nbrs(i).iter().map(move |&j| (i, j)))
            .collect();
        let index = edges.iter().enumerate().map(|(e, &ij)| (ij, e)).collect();
        let zeros = vec![DVector::zeros(n); edges.len()];
        Ok(Self {
            edges,
            index,
            u: zeros.clone(),
            v: zeros,
            x,
            k: 0,
        })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn u(&self, i: usize, j: usize) -> Option<&DVector<f64>> {
        self.index.get(&(i, j)).map(|&e| &self.u[e])
    }

    pub fn v(&self, i: usize, j: usize) -> Option<&DVector<f64>> {
        self.index.get(&(i, j)).map(|&e| &self.v[e])
    }

    /// `w^i = Σ_{j∈N_i} (u^{ij} + v^{ji})` as rows of a matrix.
    pub fn aggregate(&self, graph: &CommGraph) -> DMatrix<f64> {
        let n = self.x.nrows();
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for &j in graph.nbrs(i) {
                let u = &self.u[self.index[&(i, j)]];
                let v = &self.v[self.index[&(j, i)]];
                for m in 0..n {
                    w[(i, m)] += u[m] + v[m];
                }
            }
        }
        w
    }

    /// `max_{(i,j), m} |u^{ij}_m + v^{ij}_m|`.
    pub fn max_dual_sum(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .flat_map(|(u, v)| u.iter().zip(v.iter()).map(|(a, b)| (a + b).abs()))
            .fold(0.0, f64::max)
    }
}

/// One synchronous iteration in multiplier form: multipliers first, then the
/// averaged estimate update with the fresh multipliers, then each own action
/// as the projected minimizer of its linearized augmented Lagrangian.
pub fn unsimplified_step(
    state: &DualState,
    game: &dyn GameModel,
    graph: &CommGraph,
    cfg: &AdmmConfig,
) -> Result<DualState> {
    let n = state.x.nrows();
    let c = cfg.c;
    let x = &state.x;

    let mut u = state.u.clone();
    let mut v = state.v.clone();
    for (e, &(i, j)) in state.edges.iter().enumerate() {
        for m in 0..n {
            u[e][m] += 0.5 * c * (x[(i, m)] - x[(j, m)]);
            v[e][m] += 0.5 * c * (x[(j, m)] - x[(i, m)]);
        }
    }

    let mut x_new = DMatrix::zeros(n, n);
    for i in 0..n {
        let nbrs = graph.nbrs(i);
        let deg = nbrs.len() as f64;
        let penalty = |m: usize| -> f64 {
            nbrs.iter()
                .map(|&j| u[state.index[&(i, j)]][m] + v[state.index[&(j, i)]][m])
                .sum()
        };

        for m in (0..n).filter(|&m| m != i) {
            let received = nbrs.iter().map(|&j| x[(j, m)]).sum::<f64>() / deg;
            x_new[(i, m)] = 0.5 * (x[(i, m)] + received) - penalty(m) / (2.0 * c * deg);
        }

        // Stationarity of
        //   ∇J_i·(z − x_i) + β/2 (z − x_i)² + s z + c Σ_j (z − (x_i + x^j_i)/2)²
        // gives z = (β x_i − ∇J_i − s + c Σ_j (x_i + x^j_i)) / (β + 2c|N_i|).
        let own: Vec<f64> = x.row(i).iter().copied().collect();
        let grad = game.grad(i, &own);
        let beta = cfg.beta[i];
        let midpoint_sum: f64 = nbrs.iter().map(|&j| x[(i, i)] + x[(j, i)]).sum();
        let z = (beta * x[(i, i)] - grad - penalty(i) + c * midpoint_sum) / (beta + 2.0 * c * deg);
        x_new[(i, i)] = game.action_box().project(i, z);
    }

    let k = state.k + 1;
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { iteration: k });
    }
    Ok(DualState {
        edges: state.edges.clone(),
        index: state.index.clone(),
        u,
        v,
        x: x_new,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::{admm_step, init_state};
    use crate::game::QuadraticGame;

    #[test]
    fn consensus_start_keeps_duals_zero() {
        let g = QuadraticGame::random_diagonally_dominant(5, 8);
        let graph = CommGraph::ring(5);
        let cfg = AdmmConfig::with_defaults(5);
        let s = DualState::new(&g, &graph, &InitialEstimates::Profile(vec![0.3; 5])).unwrap();
        let s1 = unsimplified_step(&s, &g, &graph, &cfg).unwrap();
        assert!(s1.u.iter().chain(&s1.v).all(|d| d.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn multipliers_cancel() {
        let g = QuadraticGame::random_diagonally_dominant(5, 8);
        let graph = CommGraph::random_connected(5, 2, 1).unwrap();
        let cfg = AdmmConfig::with_defaults(5);
        let x0 = DMatrix::from_fn(5, 5, |i, m| ((i * 7 + m * 3) % 5) as f64 * 0.2 - 0.4);
        let mut s = DualState::new(&g, &graph, &InitialEstimates::PerPlayer(x0)).unwrap();
        for _ in 0..50 {
            s = unsimplified_step(&s, &g, &graph, &cfg).unwrap();
            assert_eq!(s.max_dual_sum(), 0.0);
        }
        assert!(s.u(0, graph.nbrs(0)[0]).is_some());
        assert!(s.u(0, 0).is_none());
    }

    #[test]
    fn matches_compact_form_for_a_few_steps() {
        let g = QuadraticGame::random_diagonally_dominant(4, 2);
        let graph = CommGraph::path(4);
        let cfg = AdmmConfig { c: 0.7, beta: vec![1.0, 2.0, 0.5, 1.5], ..AdmmConfig::with_defaults(4) };
        let x0 = InitialEstimates::PerPlayer(DMatrix::from_fn(4, 4, |i, m| (i as f64 - m as f64) * 0.3));
        let mut a = init_state(&g, &graph, &x0).unwrap();
        let mut b = DualState::new(&g, &graph, &x0).unwrap();
        for _ in 0..20 {
            a = admm_step(&a, &g, &graph, &cfg).unwrap();
            b = unsimplified_step(&b, &g, &graph, &cfg).unwrap();
            assert!((&a.x - &b.x).amax() < 1e-12);
            assert!((&a.w - b.aggregate(&graph)).amax() < 1e-12);
        }
    }
}
