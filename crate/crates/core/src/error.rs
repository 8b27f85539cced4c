use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: ({left_horizon}, {left_steps}) vs ({right_horizon}, {right_steps})")]
    GridMismatch {
        left_horizon: f64,
        left_steps: usize,
        right_horizon: f64,
        right_steps: usize,
    },

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("path decreases at node {node}: {previous} -> {value}")]
    NotMonotone {
        node: usize,
        previous: f64,
        value: f64,
    },

    #[error("constraint function is not strictly increasing at t = {t}: c({x}) = {cx} >= c({y}) = {cy}")]
    NotIncreasing {
        t: f64,
        x: f64,
        y: f64,
        cx: f64,
        cy: f64,
    },

    #[error("no root of the constraint at node {node} (bracket half-width reached {half_width})")]
    RootNotFound { node: usize, half_width: f64 },

    #[error("root at node {node} has residual {residual}, above tolerance {tolerance}")]
    InverseTolerance {
        node: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("obstacles not separated: minimum gap {gap} at node {node}")]
    SeparationViolation { gap: f64, node: usize },

    #[error("variance rate {rate} at step {step} outside [{min}, {max}]")]
    ControlOutOfBounds {
        step: usize,
        rate: f64,
        min: f64,
        max: f64,
    },

    #[error("coefficient `{which}` is not finite at t = {t}, x = {x}")]
    NumericFailure { which: &'static str, t: f64, x: f64 },

    #[error("declared Lipschitz constant {declared} violated: observed ratio {observed} at t = {t}, x = {x}, y = {y}")]
    LipschitzViolation {
        declared: f64,
        observed: f64,
        t: f64,
        x: f64,
        y: f64,
    },

    #[error("Picard iteration did not converge after {iterations} iterates (last distance {residual})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        distances: Vec<f64>,
    },

    #[error("scenario {scenario}, path {path}: {source}")]
    AtPath {
        scenario: usize,
        path: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Functional(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_path(self, scenario: usize, path: usize) -> Self {
        Error::AtPath {
            scenario,
            path,
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::GridMismatch { .. } => "grid-mismatch",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::NonFinite { .. } => "non-finite",
            Error::NotMonotone { .. } => "not-monotone",
            Error::NotIncreasing { .. } => "not-increasing",
            Error::RootNotFound { .. } => "root-not-found",
            Error::InverseTolerance { .. } => "root-not-found",
            Error::SeparationViolation { .. } => "separation-violation",
            Error::ControlOutOfBounds { .. } => "control-out-of-bounds",
            Error::NumericFailure { .. } => "numeric-failure",
            Error::LipschitzViolation { .. } => "lipschitz-violation",
            Error::NoConvergence { .. } => "no-convergence",
            Error::AtPath { source, .. } => source.kind(),
            Error::Functional(_) => "functional-failure",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
