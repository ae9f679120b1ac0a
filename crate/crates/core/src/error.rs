use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("player index {index} out of range for {n} players")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),

    #[error("communication graph is disconnected (connectivity assumption violated)")]
    Disconnected,

    #[error("at least two players are required, got {0}")]
    TooFewPlayers(usize),

    #[error("node {0} has no neighbours")]
    IsolatedNode(usize),

    #[error("{requested} extra edges requested but only {available} chords exist")]
    TooManyChords { requested: usize, available: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial profile is outside the action box (player {player}, coordinate {coord})")]
    InfeasibleStart { player: usize, coord: usize },

    #[error("linear system for the equilibrium is singular")]
    Singular,

    #[error("equilibrium of the unconstrained system lies outside the interior of the action box")]
    BoundarySolution,

    #[error("cocoercivity not estimable: every sampled pair has a constant pseudo-gradient")]
    NotEstimable,

    #[error("non-finite value encountered at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
