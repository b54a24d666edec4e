use thiserror::Error;

use crate::subsample::SubsampleResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("point {0} lies outside the domain")]
    PointOutsideDomain(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tail truncation at K={cutoff} drops relative mass {dropped:e} (limit {limit:e})")]
    TailTruncation { cutoff: usize, dropped: f64, limit: f64 },

    #[error("sampling density vanishes on the whole domain")]
    DegenerateDensity,

    #[error("density is zero at sampled point {0}")]
    ZeroDensity(f64),

    #[error("under-determined design: {m} points for {n} basis functions")]
    Underdetermined { m: usize, n: usize },

    #[error("design matrix is rank deficient (s_min={s_min:e}, s_max={s_max:e})")]
    RankDeficient { s_min: f64, s_max: f64 },

    #[error("frame hypothesis violated: eigenvalues in [{lower}, {upper}], need [1/2, 3/2]")]
    FrameHypothesis { lower: f64, upper: f64 },

    #[error("barrier sparsifier stalled after {} selections", .0.indices.len())]
    BarrierStall(Box<SubsampleResult>),

    #[error("achieved frame bounds c2={c2}, c3={c3} miss configured floor {floor} / cap {cap}")]
    FrameBounds { c2: f64, c3: f64, floor: f64, cap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
