use thiserror::Error;

/// Errors produced by the simulation, estimation and oracle layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in coordinate {coordinate}: {what}")]
    NumericDomain { coordinate: usize, what: String },

    #[error("trajectory diverged at step {step} (|x| = {norm:e}); reduce dt or check confinement")]
    Divergence { step: usize, norm: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {got} samples, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("lag {lag} is not an integer multiple of dt = {dt}")]
    LagGrid { lag: f64, dt: f64 },

    #[error("generator is not reversible: |mu_i Q_ij - mu_j Q_ji| = {violation:e} at ({i}, {j})")]
    Reversibility { i: usize, j: usize, violation: f64 },

    #[error("invalid generator: {0}")]
    Generator(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("missing norm {0}; use the Hölder bound for unbounded observables")]
    MissingNorm(&'static str),

    #[error("invalid Hölder pair p = {p}, q = {q}")]
    InvalidHolder { p: f64, q: f64 },

    #[error("grid domain too small: tail mass {tail_mass:e} exceeds {limit:e}")]
    DomainTooSmall { tail_mass: f64, limit: f64 },

    #[error("finite-difference step unresolved: Richardson disagreement {relative:e}")]
    StepSize { relative: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
