//! Batch analytics for robust inflation measurement.
//!
//! Given a monthly panel of category-level price indices and nominal
//! expenditures, this crate computes headline (Fisher), core,
//! trimmed-mean, weighted-median, and percentile inflation series;
//! builds ex-post trend-inflation targets; scores candidate series by
//! RMSE with Diebold-Mariano inference; and sweeps every integer trim
//! combination to find best and statistically equivalent trims together
//! with the prediction ranges they imply.
//!
//! The panel is immutable after loading and every operation is a pure
//! function over it, so everything here is safe to call concurrently;
//! the grid sweep parallelizes internally with deterministic output.

pub mod error;
pub mod gridsearch;
pub mod indices;
pub mod month;
pub mod panel;
pub mod series;
pub mod stats;
pub mod trends;

pub use error::{Error, Result};
pub use month::Month;
pub use series::MonthSeries;
