//! Crate-wide error type.

use thiserror::Error;

use crate::month::Month;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("invalid month {0:?}: expected YYYY-MM")]
    BadMonth(String),
    #[error("duplicate cell for category {category} at {month}")]
    DuplicateCell { category: String, month: Month },
    #[error("months are not contiguous: {missing} is absent between {first} and {last}")]
    NonContiguousMonths {
        missing: Month,
        first: Month,
        last: Month,
    },
    #[error("non-positive price index {value} for category {category} at {month}")]
    NonPositivePrice {
        category: String,
        month: Month,
        value: f64,
    },
    #[error("unknown category {0}")]
    UnknownCategory(String),
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("missing {field} for category {category} at {month}")]
    MissingCell {
        category: String,
        month: Month,
        field: &'static str,
    },
    #[error("active category set is empty")]
    EmptyActiveSet,
    #[error("total expenditure over the active set is zero at {0}")]
    ZeroTotalExpenditure(Month),
    #[error("unknown tag {0}")]
    UnknownTag(String),
    #[error("all categories are excluded")]
    AllCategoriesExcluded,
    #[error("invalid trim ({alpha},{beta}): each side must be in [0,50]")]
    InvalidTrim { alpha: u32, beta: u32 },
    #[error("empty cross-section")]
    EmptyCrossSection,
    #[error("cross-section categories do not match the weight vector")]
    MismatchedCrossSection,
    #[error("degenerate trim ({alpha},{beta}): no surviving mass")]
    DegenerateTrim { alpha: u8, beta: u8 },
    #[error("percentile {0} is outside (0,1)")]
    PercentileOutOfRange(f64),
    #[error("month {0} has no predecessor in the panel")]
    NoPredecessor(Month),
    #[error("invalid trend specification: {0}")]
    InvalidTrendSpec(String),
    #[error("window of {window} months does not fit a series of {len} months")]
    WindowTooLarge { window: usize, len: usize },
    #[error("series of {len} months is too short for cutoff period {cutoff}")]
    SeriesTooShort { cutoff: usize, len: usize },
    #[error("no overlapping months between series and target within the sample")]
    EmptyOverlap,
    #[error("zero variance in the loss differential; DM test undefined")]
    ZeroVariance,
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("mean is zero; coefficient of variation undefined")]
    ZeroMean,
    #[error("k = {k} exceeds the grid size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
