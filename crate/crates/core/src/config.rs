//! JSON run configuration.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "game":  {"type": "wanet", "seed": 7},
//!   "graph": {"type": "random", "n": 15, "extra_edges": 5, "seed": 7},
//!   "admm":  {"c": 1.0, "beta": 10.0, "max_iter": 5000,
//!             "tol_consensus": 1e-8, "tol_residual": 1e-7,
//!             "record_every": 10, "x0": "zeros"},
//!   "baseline": {"sweep": [0.2, 0.1, 0.05, 0.02, 0.01], "max_iter": 100000},
//!   "output": "out"
//! }
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::admm::{AdmmConfig, InitialEstimates};
use crate::baseline::{Comparator, DEFAULT_SWEEP};
use crate::game::wanet_defaults as wd;
use crate::game::{ActionBox, GameModel, QuadraticGame, WanetGame, WANET_LINKS, WANET_USERS};
use crate::graph::CommGraph;
use crate::{Error, Result};

/// Chords added to the ring when a congestion game has no explicit graph.
const DEFAULT_WANET_CHORDS: usize = 5;

/// Solver settings that depend on the game when the config omits them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverDefaults {
    pub beta: f64,
    pub tol_residual: f64,
}

const QUADRATIC_DEFAULTS: SolverDefaults = SolverDefaults { beta: 1.0, tol_residual: 1e-6 };

/// The congestion game's barrier is stiff near capacity; unit weights
/// oscillate there instead of converging. Its residual also understates the
/// distance to the equilibrium by roughly 1.5x, so the tolerance is tighter to
/// leave the trajectories settled to 1e-6.
const WANET_DEFAULTS: SolverDefaults = SolverDefaults { beta: 10.0, tol_residual: 1e-7 };

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed, used wherever a block does not carry its own.
    pub seed: u64,
    pub game: GameSpec,
    /// Optional for congestion games, which default to a seeded ring with chords.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub admm: AdmmSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSpec>,
    /// Output directory for traces.
    #[serde(default = "default_output")]
    pub output: String,
    /// Tolerance both solvers must reach in `compare`.
    #[serde(default = "default_compare_tol")]
    pub compare_tol: f64,
    /// Cocoercivity constant; estimated by sampling when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_f: Option<f64>,
    #[serde(default = "default_sigma_samples")]
    pub sigma_samples: usize,
}

fn default_output() -> String {
    "out".into()
}

fn default_compare_tol() -> f64 {
    1e-4
}

fn default_sigma_samples() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Ring { n: usize },
    Complete { n: usize },
    Path { n: usize },
    Random {
        n: usize,
        #[serde(default)]
        extra_edges: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit { n: usize, edges: Vec<[usize; 2]> },
}

impl GraphSpec {
    pub fn build(&self, fallback_seed: u64) -> Result<CommGraph> {
        match self {
            Self::Ring { n } => Ok(CommGraph::ring(*n)),
            Self::Complete { n } => Ok(CommGraph::complete(*n)),
            Self::Path { n } => Ok(CommGraph::path(*n)),
            Self::Random { n, extra_edges, seed } => {
                CommGraph::random_connected(*n, *extra_edges, seed.unwrap_or(fallback_seed))
            }
            Self::Explicit { n, edges } => {
                let pairs: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                CommGraph::new(*n, &pairs)
            }
        }
    }
}

/// A scalar broadcast to every player, or one value per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerPlayer {
    Scalar(f64),
    Each(Vec<f64>),
}

impl PerPlayer {
    pub fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Self::Scalar(v) => Ok(vec![*v; n]),
            Self::Each(v) if v.len() == n => Ok(v.clone()),
            Self::Each(v) => Err(Error::Config {
                path: what.into(),
                message: format!("expected {n} values, got {}", v.len()),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GameSpec {
    Wanet(WanetSpec),
    Quadratic(QuadraticSpec),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WanetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_users: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_links: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<PerPlayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routes: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_guard: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_flow: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    #[serde(rename = "box")]
    pub action_box: BoxSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: PerPlayer,
    pub upper: PerPlayer,
}

/// A built game together with the graph it is played on, when the game
/// brings its own default.
pub struct BuiltGame {
    pub game: Box<dyn GameModel>,
    pub default_graph: Option<CommGraph>,
    pub solver_defaults: SolverDefaults,
}

impl GameSpec {
    pub fn build(&self, fallback_seed: u64) -> Result<BuiltGame> {
        match self {
            Self::Wanet(spec) => spec.build(fallback_seed),
            Self::Quadratic(spec) => Ok(BuiltGame {
                game: Box::new(spec.build()?),
                default_graph: None,
                solver_defaults: QUADRATIC_DEFAULTS,
            }),
        }
    }
}

impl WanetSpec {
    pub fn build(&self, fallback_seed: u64) -> Result<BuiltGame> {
        let seed = self.seed.unwrap_or(fallback_seed);
        let n_users = self
            .n_users
            .or(self.routes.as_ref().map(Vec::len))
            .or(match &self.chi {
                Some(PerPlayer::Each(v)) => Some(v.len()),
                _ => None,
            })
            .unwrap_or(WANET_USERS);
        let capacities = match &self.capacities {
            Some(c) => c.clone(),
            None => vec![wd::CAPACITY; self.n_links.unwrap_or(WANET_LINKS)],
        };
        let routes = match &self.routes {
            Some(r) => r.clone(),
            None => WanetGame::random_routes(n_users, capacities.len(), seed)?,
        };
        let chi = self
            .chi
            .clone()
            .unwrap_or(PerPlayer::Scalar(wd::CHI))
            .expand(n_users, "game.chi")?;
        let action_box = ActionBox::uniform(n_users, 0.0, self.max_flow.unwrap_or(wd::MAX_FLOW))?;
        let game = WanetGame::new(
            capacities,
            routes,
            self.kappa.unwrap_or(wd::KAPPA),
            chi,
            self.eps_guard.unwrap_or(wd::EPS_GUARD),
            action_box,
        )?;
        let graph = CommGraph::random_connected(n_users, DEFAULT_WANET_CHORDS.min(max_chords(n_users)), seed)?;
        Ok(BuiltGame { game: Box::new(game), default_graph: Some(graph), solver_defaults: WANET_DEFAULTS })
    }
}

fn max_chords(n: usize) -> usize {
    (n * n.saturating_sub(3)) / 2
}

impl QuadraticSpec {
    pub fn build(&self) -> Result<QuadraticGame> {
        let n = self.a.len();
        if self.b.len() != n || self.b.iter().any(|r| r.len() != n) {
            return Err(Error::Config { path: "game.B".into(), message: format!("expected a {n}x{n} matrix") });
        }
        let b = DMatrix::from_fn(n, n, |i, j| self.b[i][j]);
        let lower = self.action_box.lower.expand(n, "game.box.lower")?;
        let upper = self.action_box.upper.expand(n, "game.box.upper")?;
        QuadraticGame::new(self.a.clone(), b, self.d.clone(), ActionBox::new(lower, upper)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    /// Only `"zeros"` is recognised.
    Named(String),
    Profile(Vec<f64>),
    PerPlayer(Vec<Vec<f64>>),
}

impl StartSpec {
    pub fn build(&self) -> Result<InitialEstimates> {
        match self {
            Self::Named(s) if s == "zeros" => Ok(InitialEstimates::Zeros),
            Self::Named(s) => Err(Error::Config {
                path: "admm.x0".into(),
                message: format!("unknown start `{s}`, expected \"zeros\" or a list"),
            }),
            Self::Profile(p) => Ok(InitialEstimates::Profile(p.clone())),
            Self::PerPlayer(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config { path: "admm.x0".into(), message: "rows must form a square matrix".into() });
                }
                Ok(InitialEstimates::PerPlayer(DMatrix::from_fn(n, n, |i, m| rows[i][m])))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmmSpec {
    #[serde(default = "one")]
    pub c: f64,
    /// Defaults to 10 for congestion games and 1 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<PerPlayer>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol_consensus")]
    pub tol_consensus: f64,
    /// Defaults to 1e-7 for congestion games and 1e-6 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_residual: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "zeros")]
    pub x0: StartSpec,
}

impl Default for AdmmSpec {
    fn default() -> Self {
        Self {
            c: one(),
            beta: None,
            max_iter: default_max_iter(),
            tol_consensus: default_tol_consensus(),
            tol_residual: None,
            record_every: default_record_every(),
            x0: zeros(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_max_iter() -> usize {
    5000
}
fn default_tol_consensus() -> f64 {
    1e-8
}
fn default_record_every() -> usize {
    10
}
fn zeros() -> StartSpec {
    StartSpec::Named("zeros".into())
}

impl AdmmSpec {
    pub fn build(&self, n: usize, defaults: SolverDefaults) -> Result<AdmmConfig> {
        let beta = match &self.beta {
            Some(b) => b.expand(n, "admm.beta")?,
            None => vec![defaults.beta; n],
        };
        let cfg = AdmmConfig {
            c: self.c,
            beta,
            max_iter: self.max_iter,
            tol_consensus: self.tol_consensus,
            tol_residual: self.tol_residual.unwrap_or(defaults.tol_residual),
            record_every: self.record_every,
        };
        cfg.validate(n)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    /// Single step size; takes precedence over `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<f64>>,
    #[serde(default = "default_baseline_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Compare ADMM against itself instead of the gradient baseline.
    #[serde(default)]
    pub self_compare: bool,
}

fn default_baseline_max_iter() -> usize {
    100_000
}

impl BaselineSpec {
    pub fn comparator(&self) -> Result<Comparator> {
        if self.self_compare {
            return Ok(Comparator::SelfCompare);
        }
        let gammas = match (&self.gamma, &self.sweep) {
            (Some(g), _) => vec![*g],
            (None, Some(s)) => s.clone(),
            (None, None) => DEFAULT_SWEEP.to_vec(),
        };
        if self.record_every == 0 {
            return Err(Error::Config { path: "baseline.record_every".into(), message: "must be at least 1".into() });
        }
        Ok(Comparator::Gradient { gammas, max_iter: self.max_iter, record_every: self.record_every })
    }
}

/// Everything a subcommand needs, resolved from a [`RunConfig`].
pub struct Problem {
    pub game: Box<dyn GameModel>,
    pub graph: CommGraph,
    pub admm: AdmmConfig,
    pub x0: InitialEstimates,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Congestion game with every default spelled out.
    pub fn default_wanet() -> Self {
        Self {
            seed: 7,
            game: GameSpec::Wanet(WanetSpec {
                seed: Some(7),
                n_users: Some(WANET_USERS),
                n_links: Some(WANET_LINKS),
                kappa: Some(wd::KAPPA),
                chi: Some(PerPlayer::Scalar(wd::CHI)),
                capacities: None,
                routes: None,
                eps_guard: Some(wd::EPS_GUARD),
                max_flow: Some(wd::MAX_FLOW),
            }),
            graph: Some(GraphSpec::Random { n: WANET_USERS, extra_edges: DEFAULT_WANET_CHORDS, seed: Some(7) }),
            admm: AdmmSpec {
                beta: Some(PerPlayer::Scalar(WANET_DEFAULTS.beta)),
                tol_residual: Some(WANET_DEFAULTS.tol_residual),
                ..AdmmSpec::default()
            },
            baseline: Some(BaselineSpec {
                gamma: None,
                sweep: Some(DEFAULT_SWEEP.to_vec()),
                max_iter: default_baseline_max_iter(),
                record_every: default_record_every(),
                self_compare: false,
            }),
            output: default_output(),
            compare_tol: default_compare_tol(),
            sigma_f: None,
            sigma_samples: default_sigma_samples(),
        }
    }

    /// Graph from the config, or the game's default when the block is omitted.
    pub fn resolve(&self) -> Result<Problem> {
        let built = self.game.build(self.seed)?;
        let graph = match (&self.graph, built.default_graph) {
            (Some(spec), _) => spec.build(self.seed)?,
            (None, Some(g)) => g,
            (None, None) => {
                return Err(Error::Config { path: "graph".into(), message: "missing `graph` block".into() })
            }
        };
        let n = built.game.n_players();
        let admm = self.admm.build(n, built.solver_defaults)?;
        let x0 = self.admm.x0.build()?;
        Ok(Problem { game: built.game, graph, admm, x0 })
    }
}
