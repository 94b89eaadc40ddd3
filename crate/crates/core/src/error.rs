use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Model or ensemble parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Requested size exceeds what exact enumeration can handle.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Window margin bookkeeping ran out: reads would leave the exact region.
    #[error("window too small: readable region starts at {readable_from} but window ends at {window_end}")]
    WindowTooSmall { readable_from: i64, window_end: i64 },

    /// Coordinate outside the sampled box or readable window.
    #[error("coordinate out of range: {0}")]
    OutOfRange(String),

    /// Class relabeling map is not weakly increasing.
    #[error("merge map is not weakly increasing ({0})")]
    NonMonotoneMap(String),

    /// A conservation-law or bookkeeping invariant failed internally.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
