//! Ex-post trend-inflation targets: centered and forward moving averages
//! and an asymmetric low-pass filter trend.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::InflationSeries;
use crate::series::MonthSeries;

/// Which trend target to construct.
///
/// `Centered` uses a window of `window` months split t-w/2 .. t+w/2-1
/// (left-heavy for even windows). `Future` and `Forward` both average
/// months t+lead+1 .. t+lead+window; they differ only in their default
/// calibration (12/12 vs 0/24). `Bandpass` keeps periods at or above
/// `cutoff_period` months via an asymmetric low-pass filter defined on
/// the full sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrendSpec {
    Centered {
        #[serde(default = "default_centered_window")]
        window: usize,
    },
    Future {
        #[serde(default = "default_future_lead")]
        lead: usize,
        #[serde(default = "default_future_window")]
        window: usize,
    },
    Forward {
        #[serde(default)]
        lead: usize,
        #[serde(default = "default_forward_window")]
        window: usize,
    },
    Bandpass {
        #[serde(default = "default_cutoff")]
        cutoff_period: usize,
    },
}

fn default_centered_window() -> usize {
    36
}
fn default_future_lead() -> usize {
    12
}
fn default_future_window() -> usize {
    12
}
fn default_forward_window() -> usize {
    24
}
fn default_cutoff() -> usize {
    39
}

impl TrendSpec {
    pub fn centered() -> Self {
        TrendSpec::Centered { window: 36 }
    }

    /// 12-month average starting one year ahead (months t+13 .. t+24).
    pub fn future() -> Self {
        TrendSpec::Future { lead: 12, window: 12 }
    }

    /// 24-month forward-looking average (months t+1 .. t+24).
    pub fn forward() -> Self {
        TrendSpec::Forward { lead: 0, window: 24 }
    }

    pub fn bandpass() -> Self {
        TrendSpec::Bandpass { cutoff_period: 39 }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TrendSpec::Centered { .. } => "centered",
            TrendSpec::Future { .. } => "future",
            TrendSpec::Forward { .. } => "forward",
            TrendSpec::Bandpass { .. } => "bandpass",
        }
    }

    /// Default Diebold-Mariano bandwidth for losses against this target:
    /// window length minus one (a w-month moving-average target induces
    /// MA(w-1) dependence in loss differentials).
    pub fn default_dm_bandwidth(&self) -> usize {
        match self {
            TrendSpec::Centered { window } => window.saturating_sub(1),
            TrendSpec::Future { window, .. } => window.saturating_sub(1),
            TrendSpec::Forward { window, .. } => window.saturating_sub(1),
            TrendSpec::Bandpass { cutoff_period } => cutoff_period.saturating_sub(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TrendSpec::Centered { window }
            | TrendSpec::Future { window, .. }
            | TrendSpec::Forward { window, .. } => {
                if window < 1 {
                    return Err(Error::InvalidTrendSpec(format!(
                        "{} window must be >= 1",
                        self.label()
                    )));
                }
            }
            TrendSpec::Bandpass { cutoff_period } => {
                if cutoff_period < 2 {
                    return Err(Error::InvalidTrendSpec(
                        "bandpass cutoff_period must be >= 2".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for TrendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrendSpec::Centered { window } => write!(f, "centered({window})"),
            TrendSpec::Future { lead, window } => write!(f, "future({lead},{window})"),
            TrendSpec::Forward { lead, window } => write!(f, "forward({lead},{window})"),
            TrendSpec::Bandpass { cutoff_period } => write!(f, "bandpass({cutoff_period})"),
        }
    }
}

/// An ex-post trend target series in annual percent.
#[derive(Debug, Clone)]
pub struct TrendSeries {
    pub spec: TrendSpec,
    pub series: MonthSeries,
}

fn windowed_mean(
    headline: &MonthSeries,
    back: i32,
    fwd: i32,
    window: usize,
) -> Result<MonthSeries> {
    let mut first_emitted = None;
    let mut values = Vec::new();
    for (month, _) in headline.iter() {
        let mut sum = 0.0;
        let mut complete = true;
        let mut k = -back;
        while k <= fwd {
            match headline.get(month.offset(k)) {
                Some(v) => sum += v,
                None => {
                    complete = false;
                    break;
                }
            }
            k += 1;
        }
        if complete {
            if first_emitted.is_none() {
                first_emitted = Some(month);
            }
            values.push(Some(sum / window as f64));
        } else if first_emitted.is_some() {
            values.push(None);
        }
    }
    match first_emitted {
        Some(start) => {
            // drop trailing gaps
            let last = values.iter().rposition(|v| v.is_some()).unwrap();
            values.truncate(last + 1);
            Ok(MonthSeries::new(start, values))
        }
        None => Err(Error::WindowTooLarge {
            window,
            len: headline.len(),
        }),
    }
}

/// Centered moving average; an even window of length w covers months
/// t-w/2 .. t+w/2-1. Emitted only where every window observation exists.
pub fn centered_ma(headline: &MonthSeries, window: usize) -> Result<MonthSeries> {
    if window < 1 {
        return Err(Error::InvalidTrendSpec("window must be >= 1".into()));
    }
    let back = (window / 2) as i32;
    let fwd = window as i32 - back - 1;
    windowed_mean(headline, back, fwd, window)
}

/// Forward moving average over months t+lead+1 .. t+lead+window.
pub fn forward_ma(headline: &MonthSeries, lead: usize, window: usize) -> Result<MonthSeries> {
    if window < 1 {
        return Err(Error::InvalidTrendSpec("window must be >= 1".into()));
    }
    windowed_mean(
        headline,
        -(lead as i32 + 1),
        lead as i32 + window as i32,
        window,
    )
}

/// Ideal low-pass weight at lag `j` for angular cutoff `wc`.
fn ideal_weight(wc: f64, j: usize) -> f64 {
    if j == 0 {
        wc / PI
    } else {
        (wc * j as f64).sin() / (PI * j as f64)
    }
}

/// Filter weights applied to positions 0..len when evaluating the trend
/// at position `t` (0-based). Interior positions carry the ideal low-pass
/// weight for their lag; the two end weights absorb the truncated tails
/// so the vector sums to exactly one (unit gain at frequency zero).
pub fn cf_lowpass_weights(len: usize, cutoff_period: usize, t: usize) -> Vec<f64> {
    assert!(t < len);
    if len == 1 {
        return vec![1.0];
    }
    let wc = 2.0 * PI / cutoff_period as f64;
    let b0 = ideal_weight(wc, 0);
    let mut w: Vec<f64> = (0..len)
        .map(|s| ideal_weight(wc, s.abs_diff(t)))
        .collect();
    // interior right weights occupy positions t+1 .. len-2
    let right_sum: f64 = if t + 2 <= len - 1 {
        (1..=len - 2 - t).map(|j| ideal_weight(wc, j)).sum()
    } else {
        0.0
    };
    // interior left weights occupy positions 1 .. t-1
    let left_sum: f64 = if t >= 2 {
        (1..=t - 1).map(|j| ideal_weight(wc, j)).sum()
    } else {
        0.0
    };
    w[len - 1] = 0.5 - b0 / 2.0 - right_sum + if t == len - 1 { b0 } else { 0.0 };
    w[0] = 0.5 - b0 / 2.0 - left_sum + if t == 0 { b0 } else { 0.0 };
    w
}

/// Low-pass trend keeping periods of `cutoff_period` months and above.
///
/// The filter is applied over the full sample with per-month asymmetric
/// truncation; a linear drift (through the endpoints) is removed before
/// filtering and added back, the random-walk convention. The output is
/// defined for every month of the input span.
pub fn cf_lowpass(headline: &MonthSeries, cutoff_period: usize) -> Result<MonthSeries> {
    if cutoff_period < 2 {
        return Err(Error::InvalidTrendSpec(
            "bandpass cutoff_period must be >= 2".into(),
        ));
    }
    let span = headline.trimmed_domain();
    let xs: Vec<f64> = span
        .iter()
        .map(|(m, v)| {
            v.ok_or_else(|| {
                Error::InsufficientHistory(format!("missing observation at {m} inside the sample"))
            })
        })
        .collect::<Result<_>>()?;
    let n = xs.len();
    if n <= cutoff_period {
        return Err(Error::SeriesTooShort {
            cutoff: cutoff_period,
            len: n,
        });
    }
    let drift = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    let detrended: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| x - drift * i as f64)
        .collect();
    let values: Vec<Option<f64>> = (0..n)
        .map(|t| {
            let w = cf_lowpass_weights(n, cutoff_period, t);
            let filtered: f64 = w.iter().zip(&detrended).map(|(wi, xi)| wi * xi).sum();
            Some(filtered + drift * t as f64)
        })
        .collect();
    Ok(MonthSeries::new(span.start(), values))
}

/// Construct the trend target named by `spec` from a headline series.
pub fn trend(headline: &InflationSeries, spec: &TrendSpec) -> Result<TrendSeries> {
    spec.validate()?;
    let series = match *spec {
        TrendSpec::Centered { window } => centered_ma(&headline.series, window)?,
        TrendSpec::Future { lead, window } | TrendSpec::Forward { lead, window } => {
            forward_ma(&headline.series, lead, window)?
        }
        TrendSpec::Bandpass { cutoff_period } => cf_lowpass(&headline.series, cutoff_period)?,
    };
    Ok(TrendSeries {
        spec: *spec,
        series,
    })
}
