use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nash_admm::admm::{self, AdmmConfig, DualState, InitialEstimates, Termination};
use nash_admm::baseline::{baseline_step, BaselineConfig};
use nash_admm::game::{default_wanet_instance, GameModel, QuadraticGame};
use nash_admm::graph::CommGraph;
use nash_admm::metrics;

fn max_chords(n: usize) -> usize {
    n * n.saturating_sub(3) / 2
}

fn random_graph(n: usize, seed: u64) -> CommGraph {
    let extra = (seed as usize) % (max_chords(n) + 1);
    CommGraph::random_connected(n, extra, seed).unwrap()
}

fn sorted_reference_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn central_difference(game: &dyn GameModel, i: usize, x: &[f64], h: f64) -> f64 {
    let mut hi = x.to_vec();
    let mut lo = x.to_vec();
    hi[i] += h;
    lo[i] -= h;
    (game.cost(i, &hi) - game.cost(i, &lo)) / (2.0 * h)
}

fn random_profile(game: &dyn GameModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    game.action_box().sample(rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spectral_bounds_hold(n in 2usize..=30, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        prop_assert!(g.is_connected());
        prop_assert!(g.lambda_max_normalized_laplacian().unwrap() <= 2.0 + 1e-12);
        prop_assert!(g.lambda_min_d_plus_a().unwrap() >= -1e-12);
    }

    #[test]
    fn small_spectra_match_reference(n in 2usize..=6, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        for m in [g.signless_laplacian(), g.normalized_laplacian().unwrap(), g.laplacian()] {
            let ours = nash_admm::linalg::symmetric_eigenvalues(&m);
            let reference = sorted_reference_eigenvalues(&m);
            for (a, b) in ours.iter().zip(&reference) {
                prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn neighbourhoods_are_symmetric(n in 2usize..=30, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        for i in 0..n {
            let nbrs = g.neighbors(i).unwrap();
            prop_assert!(!nbrs.contains(&i));
            for &j in nbrs {
                prop_assert!(g.neighbors(j).unwrap().contains(&i));
            }
        }
        prop_assert_eq!(g.adjacency_matrix(), g.adjacency_matrix().transpose());
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences(seed in any::<u64>()) {
        let game = QuadraticGame::random_diagonally_dominant(5, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let x = random_profile(&game, &mut rng);
        for i in 0..5 {
            let analytic = game.grad(i, &x);
            let fd = central_difference(&game, i, &x, 1e-5);
            prop_assert!((analytic - fd).abs() / analytic.abs().max(1.0) < 1e-6);
        }
    }

    #[test]
    fn wanet_gradient_matches_finite_differences(seed in any::<u64>()) {
        let (game, _) = default_wanet_instance(seed % 64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Keep every link strictly below capacity so the guard stays off.
        let x: Vec<f64> = (0..game.n_players()).map(|_| rng.random_range(0.0..0.6)).collect();
        for i in 0..game.n_players() {
            prop_assert_eq!(game.guard_activations(i, &x), 0);
            let analytic = game.grad(i, &x);
            let fd = central_difference(&game, i, &x, 1e-5);
            prop_assert!((analytic - fd).abs() / analytic.abs().max(1.0) < 1e-6, "player {}: {} vs {}", i, analytic, fd);
        }
    }

    #[test]
    fn wanet_cost_is_convex_in_own_action(seed in any::<u64>()) {
        let (game, _) = default_wanet_instance(seed % 64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..game.n_players()).map(|_| rng.random_range(0.01..0.6)).collect();
        let h = 1e-3;
        for i in 0..game.n_players() {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[i] += h;
            lo[i] -= h;
            let second = game.cost(i, &hi) - 2.0 * game.cost(i, &x) + game.cost(i, &lo);
            prop_assert!(second >= -1e-9);
        }
    }

    #[test]
    fn symmetric_quadratic_is_strictly_monotone(seed in any::<u64>()) {
        let game = QuadraticGame::random_diagonally_dominant(5, seed);
        prop_assert_eq!(game.coupling(), &game.coupling().transpose());
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let x = random_profile(&game, &mut rng);
        let y = random_profile(&game, &mut rng);
        prop_assume!(x != y);
        let fx = nash_admm::game::pseudo_gradient(&game, &x);
        let fy = nash_admm::game::pseudo_gradient(&game, &y);
        let inner: f64 = (0..5).map(|i| (fx[i] - fy[i]) * (x[i] - y[i])).sum();
        prop_assert!(inner > 0.0);
    }

    #[test]
    fn oracle_equilibrium_survives_grid_best_response(seed in any::<u64>()) {
        let game = QuadraticGame::random_diagonally_dominant(5, seed);
        let x_star = game.nash_equilibrium().unwrap();
        let bx = game.action_box();
        for i in 0..5 {
            let (lo, hi) = (bx.lower()[i], bx.upper()[i]);
            let step = (hi - lo) / 2000.0;
            let mut profile = x_star.clone();
            let mut best = (f64::INFINITY, lo);
            for g in 0..=2000 {
                profile[i] = lo + step * g as f64;
                let cost = game.cost(i, &profile);
                if cost < best.0 {
                    best = (cost, profile[i]);
                }
            }
            prop_assert!((best.1 - x_star[i]).abs() <= step + 1e-12);
        }
    }

    #[test]
    fn residual_positive_away_from_equilibrium(seed in any::<u64>()) {
        let game = QuadraticGame::random_diagonally_dominant(5, seed);
        let x_star = game.nash_equilibrium().unwrap();
        prop_assert!(metrics::ne_residual(&game, &x_star) <= 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        let x = random_profile(&game, &mut rng);
        let dist = x.iter().zip(&x_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assume!(dist > 1e-6);
        prop_assert!(metrics::ne_residual(&game, &x) > 0.0);
    }

    #[test]
    fn m2_distance_is_nonnegative(n in 2usize..=8, seed in any::<u64>(), c in 0.01f64..10.0) {
        let g = random_graph(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, n, |_, _| rng.random_range(-3.0..3.0));
        let x_star: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let beta: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
        prop_assert!(metrics::m2_seminorm_distance(&x, &x_star, &beta, c, &g) >= 0.0);
    }

    #[test]
    fn consensus_error_vanishes_only_on_agreement(n in 2usize..=8, seed in any::<u64>()) {
        let g = random_graph(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = DMatrix::from_fn(n, n, |_, m| row[m]);
        prop_assert_eq!(metrics::consensus_error(&x, &g), 0.0);
        let i = rng.random_range(0..n);
        x[(i, rng.random_range(0..n))] += 0.25;
        prop_assert!(metrics::consensus_error(&x, &g) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_invariants_along_trajectories(n in 2usize..=7, seed in any::<u64>(), c in 0.1f64..5.0) {
        let game = QuadraticGame::random_diagonally_dominant(n, seed);
        let graph = random_graph(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = DMatrix::from_fn(n, n, |_, m| game.action_box().project(m, rng.random_range(-5.0..5.0)));
        let x0 = InitialEstimates::PerPlayer(start);
        let cfg = AdmmConfig { c, ..AdmmConfig::with_defaults(n) };
        let mut s = admm::init_state(&game, &graph, &x0).unwrap();
        let mut d = DualState::new(&game, &graph, &x0).unwrap();
        for _ in 0..60 {
            s = admm::admm_step(&s, &game, &graph, &cfg).unwrap();
            d = admm::unsimplified_step(&d, &game, &graph, &cfg).unwrap();
            prop_assert!(game.action_box().contains(&s.actions()));
            prop_assert!(metrics::max_abs_column_sum(&s.w) <= 1e-9);
            prop_assert!(d.max_dual_sum() <= 1e-12);
            prop_assert!((&s.x - &d.x).amax() <= 1e-9);
        }
    }

    #[test]
    fn baseline_actions_stay_in_box(n in 2usize..=7, seed in any::<u64>(), gamma in 0.01f64..3.0) {
        let game = QuadraticGame::random_diagonally_dominant(n, seed);
        let graph = random_graph(n, seed);
        let cfg = BaselineConfig { gamma, max_iter: 1, tol_consensus: 1e-8, tol_residual: 1e-6, record_every: 1 };
        let mut x = DMatrix::zeros(n, n);
        for _ in 0..50 {
            x = baseline_step(&x, &game, &graph, &cfg).unwrap();
            prop_assert!(game.action_box().contains(&metrics::actions(&x)));
        }
    }

    #[test]
    fn converged_runs_reach_global_agreement(n in 2usize..=6, seed in any::<u64>()) {
        let game = QuadraticGame::random_diagonally_dominant(n, seed);
        let graph = random_graph(n, seed);
        let cfg = AdmmConfig::with_defaults(n);
        let out = admm::run(&game, &graph, &cfg, &InitialEstimates::Zeros).unwrap();
        prop_assert_eq!(out.termination, Termination::Converged);
        prop_assert!(out.consensus_error <= cfg.tol_consensus);
        prop_assert!(out.ne_residual <= cfg.tol_residual);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((out.state.x.row(i) - out.state.x.row(j)).amax());
            }
        }
        prop_assert!(worst <= n as f64 * cfg.tol_consensus);
        let x_star = game.nash_equilibrium().unwrap();
        let beta = &cfg.beta;
        let start = admm::init_state(&game, &graph, &InitialEstimates::Zeros).unwrap();
        let m2_end = metrics::m2_seminorm_distance(&out.state.x, &x_star, beta, cfg.c, &graph);
        let m2_start = metrics::m2_seminorm_distance(&start.x, &x_star, beta, cfg.c, &graph);
        prop_assert!(m2_end <= m2_start);
    }
}
