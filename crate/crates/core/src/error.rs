use thiserror::Error;

/// Errors raised by chain construction, embedding, transport and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("transition row {row} is not stochastic: {detail}")]
    NonStochasticMatrix { row: usize, detail: String },

    #[error("transition matrix is not irreducible: state `{0}` cannot reach every other state")]
    NotIrreducible(String),

    #[error("stationary measure check failed: {0}")]
    NotStationary(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("invalid target measure: {0}")]
    InvalidTarget(String),

    #[error("window [{lo}, {hi}] is not materialized (trajectory covers [{have_lo}, {have_hi}])")]
    WindowNotMaterialized {
        lo: i64,
        hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("fixed trajectory cannot be extended to index {0}")]
    PathExhausted(i64),

    #[error("ball count at state `{state}` is not an integer ({value})")]
    NonIntegerBallCount { state: String, value: String },

    #[error("target is not embeddable without extra randomness: {0}")]
    InfeasibleTarget(String),

    #[error(
        "target charges the initial state `{0}`; use the visit-time solver for a Dirac target"
    )]
    TargetChargesStart(String),

    #[error("({x}, {u}, {v}, {y}) is not a crossing")]
    NotACrossing { x: i64, u: i64, v: i64, y: i64 },

    #[error("transport rule has mass leaving the window at site {0}")]
    FrontierMassPresent(i64),

    #[error("computation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("a_kl(n) is zero: state not yet visitable at n = {0}")]
    NotYetVisitable(u64),

    #[error("{censored} of {total} replicas censored")]
    ExcessCensoring { censored: u64, total: u64 },

    #[error("alternative solver `{0}` failed the shifted-law check")]
    InvalidAlternative(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
