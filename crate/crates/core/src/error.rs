use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid bath: {0}")]
    InvalidBath(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{operation} does not support {statistics} statistics")]
    UnsupportedStatistics {
        operation: &'static str,
        statistics: &'static str,
    },

    #[error("sector dimension {dim} exceeds the budget of {budget} states")]
    SectorTooLarge { dim: usize, budget: usize },

    #[error("Hilbert dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("transverse transform leaves off-block residual {residual:e} (tolerance {tolerance:e})")]
    TransverseNonUniform { residual: f64, tolerance: f64 },

    #[error("steady state is not unique: drift eigenvalue with real part {max_real_part:e}")]
    NonUniqueSteadyState { max_real_part: f64 },

    #[error("Liouvillian kernel is degenerate (pivot ratio {pivot_ratio:e} in number block {block})")]
    DegenerateKernel { block: usize, pivot_ratio: f64 },

    #[error("Lyapunov solve failed: {0}")]
    LyapunovFailure(String),

    #[error("propagation step failed: achieved error {achieved:e} at time {time}")]
    StepFailure { achieved: f64, time: f64 },

    #[error("invalid site ordering: {0}")]
    InvalidOrdering(String),
}

pub type Result<T> = std::result::Result<T, Error>;
