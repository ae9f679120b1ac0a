//! Measured values on the seeded congestion instance. They pin behaviour, not
//! targets: a change here means the solver or instance changed.

use nash_admm::admm::{self, AdmmConfig, InitialEstimates, Termination};
use nash_admm::config::RunConfig;

#[test]
fn default_wanet_run() {
    let p = RunConfig::default_wanet().resolve().unwrap();
    let out = admm::run(p.game.as_ref(), &p.graph, &p.admm, &p.x0).unwrap();
    assert_eq!(out.termination, Termination::Converged);
    assert_eq!(out.iterations, 4068);
    assert!(out.ne_residual <= 1e-7);
}

#[test]
fn unit_weights_do_not_settle_on_wanet() {
    let p = RunConfig::default_wanet().resolve().unwrap();
    let cfg = AdmmConfig { beta: vec![1.0; 15], tol_residual: 1e-6, ..p.admm.clone() };
    let out = admm::run(p.game.as_ref(), &p.graph, &cfg, &InitialEstimates::Zeros).unwrap();
    assert_eq!(out.termination, Termination::IterationBudget);
    assert!(out.ne_residual > 1.0);
}
