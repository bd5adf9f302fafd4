//! Loss computation and inference: RMSE against a trend target,
//! Newey-West long-run variance, the Diebold-Mariano test, and the
//! descriptive statistics used in the diagnostic reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::InflationSeries;
use crate::month::Month;
use crate::series::MonthSeries;
use crate::trends::TrendSeries;

/// Inclusive month range an evaluation runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub start: Month,
    pub end: Month,
}

impl SampleSpec {
    pub fn new(start: Month, end: Month) -> Self {
        SampleSpec { start, end }
    }

    pub fn contains(&self, month: Month) -> bool {
        self.start <= month && month <= self.end
    }
}

impl std::fmt::Display for SampleSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Diebold-Mariano test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmResult {
    pub statistic: f64,
    /// Two-sided p-value, `2 * Phi(-|statistic|)`.
    pub p_value: f64,
    /// Effective Bartlett bandwidth used.
    pub bandwidth: usize,
    /// Number of loss differentials.
    pub n: usize,
}

/// Months in the sample where both the series and the target are defined,
/// with the signed gaps (series - target).
pub fn aligned_errors(
    series: &MonthSeries,
    target: &MonthSeries,
    sample: &SampleSpec,
) -> Result<(Vec<Month>, Vec<f64>)> {
    let mut months = Vec::new();
    let mut errors = Vec::new();
    for (month, a, b) in series.zip_present(target) {
        if sample.contains(month) {
            months.push(month);
            errors.push(a - b);
        }
    }
    if months.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok((months, errors))
}

/// Root-mean-square gap between a series and a trend target over the
/// months of the sample where both are defined. Levels are compared
/// directly, with no transformation.
pub fn rmse(series: &InflationSeries, target: &TrendSeries, sample: &SampleSpec) -> Result<f64> {
    let (_, errors) = aligned_errors(&series.series, &target.series, sample)?;
    Ok(rmse_of(&errors))
}

pub(crate) fn rmse_of(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

fn population_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Bartlett-kernel long-run variance with 1/n autocovariance scaling:
/// `gamma_0 + 2 * sum_k (1 - k/(bw+1)) * gamma_k`. The bandwidth is
/// truncated to n-1; the result is floored at a tiny positive value.
pub fn newey_west_lrv(d: &[f64], bandwidth: usize) -> Result<f64> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InsufficientHistory(format!(
            "{n} observation(s); long-run variance needs 2"
        )));
    }
    if d.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::ZeroVariance);
    }
    let bw = bandwidth.min(n - 1);
    let mean = d.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = d.iter().map(|v| v - mean).collect();
    let gamma = |k: usize| -> f64 {
        (k..n).map(|t| dev[t] * dev[t - k]).sum::<f64>() / n as f64
    };
    let mut lrv = gamma(0);
    for k in 1..=bw {
        let weight = 1.0 - k as f64 / (bw as f64 + 1.0);
        lrv += 2.0 * weight * gamma(k);
    }
    Ok(lrv.max(f64::MIN_POSITIVE))
}

/// Diebold-Mariano z-test on the squared-loss differential
/// `d_t = a_t^2 - b_t^2` of two aligned error sequences.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64], bandwidth: usize) -> Result<DmResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::LengthMismatch {
            a: errors_a.len(),
            b: errors_b.len(),
        });
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    let n = d.len();
    let lrv = newey_west_lrv(&d, bandwidth)?;
    let mean = d.iter().sum::<f64>() / n as f64;
    let statistic = mean / (lrv / n as f64).sqrt();
    Ok(DmResult {
        statistic,
        p_value: 2.0 * normal_cdf(-statistic.abs()),
        bandwidth: bandwidth.min(n - 1),
        n,
    })
}

/// Standard normal CDF via the Abramowitz-Stegun rational approximation
/// (26.2.17); absolute error below 7.5e-8, a tested contract.
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - normal_cdf(-x);
    }
    const P: f64 = 0.2316419;
    const B: [f64; 5] = [
        0.319381530,
        -0.356563782,
        1.781477937,
        -1.821255978,
        1.330274429,
    ];
    let t = 1.0 / (1.0 + P * x);
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    1.0 - pdf * poly
}

/// Population standard deviation over mean, on the sample months.
pub fn coef_variation(series: &MonthSeries, sample: &SampleSpec) -> Result<f64> {
    let values: Vec<f64> = series
        .present()
        .filter(|(m, _)| sample.contains(*m))
        .map(|(_, v)| v)
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let (mean, var) = population_moments(&values);
    if mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok(var.sqrt() / mean)
}

/// Descriptive statistics of `series` within one headline-level regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeRow {
    pub regime: String,
    pub months: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Coefficient of variation; absent for empty regimes or a zero mean.
    pub cov: Option<f64>,
}

fn regime_row(label: &str, values: &[f64]) -> RegimeRow {
    if values.is_empty() {
        return RegimeRow {
            regime: label.to_string(),
            months: 0,
            mean: None,
            sd: None,
            cov: None,
        };
    }
    let (mean, var) = population_moments(values);
    let sd = var.sqrt();
    RegimeRow {
        regime: label.to_string(),
        months: values.len(),
        mean: Some(mean),
        sd: Some(sd),
        cov: (mean != 0.0).then(|| sd / mean),
    }
}

/// Mean / standard deviation / coefficient of variation of `series` for
/// the full aligned sample and for three regimes cut by the headline
/// level: below `thresholds.0`, between the thresholds, and at or above
/// `thresholds.1`.
pub fn regime_summary(
    series: &MonthSeries,
    headline: &MonthSeries,
    thresholds: (f64, f64),
) -> Vec<RegimeRow> {
    let (lo, hi) = thresholds;
    let mut full = Vec::new();
    let mut low = Vec::new();
    let mut mid = Vec::new();
    let mut high = Vec::new();
    for (_, value, level) in series.zip_present(headline) {
        full.push(value);
        if level < lo {
            low.push(value);
        } else if level < hi {
            mid.push(value);
        } else {
            high.push(value);
        }
    }
    vec![
        regime_row("full", &full),
        regime_row(&format!("pi<{lo}"), &low),
        regime_row(&format!("{lo}<=pi<{hi}"), &mid),
        regime_row(&format!("pi>={hi}"), &high),
    ]
}

/// Trailing-window population standard deviation, emitted from the
/// window-th month onward; windows with gaps are skipped.
pub fn rolling_std(series: &MonthSeries, window: usize) -> Result<MonthSeries> {
    if window < 1 || window > series.len() {
        return Err(Error::WindowTooLarge {
            window,
            len: series.len(),
        });
    }
    let vals: Vec<Option<f64>> = series.iter().map(|(_, v)| v).collect();
    let out: Vec<Option<f64>> = (window - 1..vals.len())
        .map(|t| {
            let slice = &vals[t + 1 - window..=t];
            if slice.iter().all(|v| v.is_some()) {
                let xs: Vec<f64> = slice.iter().map(|v| v.unwrap()).collect();
                Some(population_moments(&xs).1.sqrt())
            } else {
                None
            }
        })
        .collect();
    Ok(MonthSeries::new(
        series.start().offset(window as i32 - 1),
        out,
    ))
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Fraction of months where the sign of the month-over-month change in
/// `series` matches that of `headline`; zero changes only match zero.
pub fn sign_match(series: &MonthSeries, headline: &MonthSeries) -> Result<f64> {
    let mut matches = 0usize;
    let mut total = 0usize;
    let aligned: Vec<(Month, f64, f64)> = series.zip_present(headline).collect();
    for pair in aligned.windows(2) {
        let (m0, a0, b0) = pair[0];
        let (m1, a1, b1) = pair[1];
        if m1 != m0.next() {
            continue; // only consecutive months define a change
        }
        total += 1;
        if sign(a1 - a0) == sign(b1 - b0) {
            matches += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientHistory(
            "need at least 2 consecutive aligned months".into(),
        ));
    }
    Ok(matches as f64 / total as f64)
}
