use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("explicit commutant operators not available for {group} with d={d}, m={m}")]
    UnsupportedGroupDimension { group: String, d: u64, m: u32 },

    #[error("element does not lie in the span of the ambient basis (residual {residual:e})")]
    AmbientExpansionFailure { residual: f64 },

    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),

    #[error("vector length {got} does not match reduced dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense size {entries} exceeds the configured cap {cap}")]
    DimensionCap { entries: usize, cap: usize },

    #[error("switch sector {zeta} leaks weight {weight:e} into higher sectors")]
    SectorLeak { zeta: usize, weight: f64 },

    #[error("operator is not symmetric after symmetrization (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("eigensolver did not converge: best estimate {estimate}, residual {residual:e}")]
    NoConvergence { estimate: f64, residual: f64 },

    #[error("invalid bond dimension: {0}")]
    InvalidBondDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("no grouping of n={0} qudits near log2(n) gives an even number of sites")]
    NoValidGrouping(u64),
}

pub type Result<T> = std::result::Result<T, GapError>;
