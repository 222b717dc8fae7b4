use thiserror::Error;

/// Errors raised by system construction, flow evaluation and the conjugacy maps.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown system `{0}` (expected one of: normalized, normalized-bounded, linear-scaled, sqrt-scalar, x0-plane)")]
    UnknownSystem(String),

    #[error("dimension mismatch for `{context}`: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("state {state:?} lies outside the system domain")]
    OutsideDomain { state: Vec<f64> },

    #[error("backward time is undefined at the equilibrium")]
    BackwardFromEquilibrium,

    #[error("operation undefined at the equilibrium")]
    AtEquilibrium,

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        last_state: Vec<f64>,
        reason: String,
    },

    #[error("horizon cap t_max = {t_max} reached before the event")]
    HorizonExceeded { t_max: f64 },

    #[error("V(x) = {value} is below the level {level}")]
    BelowLevel { value: f64, level: f64 },

    #[error("V(x) = {value} is above the level {level}")]
    AboveLevel { value: f64, level: f64 },

    #[error("orbit left the domain at t = {exit_time} before reaching the level")]
    LeftDomainBeforeLevel { exit_time: f64 },

    #[error("no bracket for the level {level} along direction {direction:?}")]
    NoBracket { level: f64, direction: Vec<f64> },

    #[error("level set {{V = {level}}} leaves the domain along direction {direction:?}")]
    LevelOutsideDomain { level: f64, direction: Vec<f64> },

    #[error("level set {{V = {level}}} is not star-shaped along direction {direction:?}")]
    NotStarShaped { level: f64, direction: Vec<f64> },

    #[error("point {point:?} is not on the level set (|V - level| = {gap})")]
    OffLevelSet { point: Vec<f64>, gap: f64 },

    #[error("y = {y:?} lies outside the image of the conjugacy map")]
    OutsideImage { y: Vec<f64> },

    #[error("the bounded-domain construction requires a system without backward completeness")]
    RequiresBoundedDomain,

    #[error("outer level C = {c} must exceed epsilon = {epsilon}")]
    LevelOrder { c: f64, epsilon: f64 },

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),

    #[error("unknown figure id {0} (expected 1, 3, 4 or 5)")]
    UnknownFigure(u32),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
