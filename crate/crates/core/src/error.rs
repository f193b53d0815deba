use thiserror::Error;

/// Coarse classification used for CLI exit codes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: arguments, configs, files.
    Validation,
    /// Request exceeds what the exact solver is allowed to do.
    Capability,
    /// A numerical procedure failed (non-convergence, broken invariants).
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Capability => 3,
            ErrorKind::Numerical => 4,
            ErrorKind::Io => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("ladder needs at least one rung")]
    ZeroRungs,
    #[error("blockade ratio must be positive and finite, got {0}")]
    BadBlockadeRatio(f64),
    #[error("{n_atoms} atoms exceeds the addressable Hilbert space")]
    DimensionOverflow { n_atoms: usize },
    #[error("invalid coupling table: {0}")]
    InvalidCouplings(String),
    #[error("vector length {got} does not match dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dense solver limited to dimension {limit}, got {dim}")]
    DenseLimit { dim: usize, limit: usize },
    #[error("exact solve of {n_atoms} atoms exceeds the ceiling of {max_atoms} atoms")]
    TooManyAtoms { n_atoms: usize, max_atoms: usize },
    #[error("Krylov solver did not converge after {iterations} matvecs (best residual {best_residual:e})")]
    NotConverged { iterations: usize, best_residual: f64 },
    #[error("invalid bipartition: size_a = {size_a} for {n_atoms} atoms")]
    InvalidBipartition { n_atoms: usize, size_a: usize },
    #[error("reduced density matrix eigenvalue {0:e} is too negative to be round-off")]
    NegativeEigenvalue(f64),
    #[error("p_min = {p_min} exceeds every probability (max {max_prob}); nothing survives")]
    EmptySurvivors { p_min: f64, max_prob: f64 },
    #[error("p_min must lie in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error("operation requires an empirical (shot-count) distribution")]
    NotEmpirical,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("sigmoid fit needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("conditional entropy curve is flat (range {range:e}); nothing to filter")]
    FlatCurve { range: f64 },
    #[error("sigmoid fit failed: {reason}")]
    FitFailed { reason: String },
    #[error("grid must be strictly increasing within [0, 1]")]
    BadGrid,
    #[error("subsample size {sub_size} exceeds pool of {total} shots")]
    SubsampleTooLarge { sub_size: usize, total: u64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("state file: {0}")]
    StateFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            DenseLimit { .. } | TooManyAtoms { .. } | DimensionOverflow { .. } => {
                ErrorKind::Capability
            }
            NotConverged { .. }
            | NegativeEigenvalue(_)
            | TooFewPoints { .. }
            | FlatCurve { .. }
            | FitFailed { .. } => ErrorKind::Numerical,
            Io(_) | Json(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }

    /// Fit errors that an estimate reports instead of propagating.
    pub fn is_fit_failure(&self) -> bool {
        matches!(self, Error::TooFewPoints { .. } | Error::FlatCurve { .. } | Error::FitFailed { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
