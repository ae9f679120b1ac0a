//! Equilibria of convex N-player games, computed by players that only talk to graph neighbours.
//!
//! Every player keeps a local estimate of the whole action profile and
//! exchanges it with its neighbours on a communication graph. The solver is
//! an inexact (linearized) consensus ADMM: estimates of other players'
//! actions are averaged and corrected by an aggregated dual state, while each
//! player's own action takes a projected proximal step on its cost.
//!
//! Modules:
//! - [`graph`]: communication graph, Laplacian spectra.
//! - [`game`]: game interface, the congestion game and a quadratic oracle game.
//! - [`admm`]: the solver in compact and explicit-dual forms, plus the step condition.
//! - [`baseline`]: projected pseudo-gradient comparator.
//! - [`metrics`]: consensus error, equilibrium residual, seminorm distance.
//! - [`config`], [`trace`], [`cli`]: run configuration, CSV traces and subcommands.

pub mod admm;
pub mod baseline;
pub mod cli;
pub mod config;
pub mod error;
pub mod game;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod trace;

pub use error::{Error, Result};
