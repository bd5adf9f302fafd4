//! Inflation indices: Fisher (headline/core), trimmed-mean, weighted
//! median, weighted percentiles, and 12-month chaining.
//!
//! Every cross-section statistic is defined on the expenditure-weight
//! distribution of monthly price relatives: categories are sorted by
//! rate (ties by id), weights are laid on [0,1], and trimming deletes
//! mass from both tails. A category straddling a cutoff keeps its
//! partial residual mass.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::Month;
use crate::panel::{apply_exclusions, CategoryId, CategoryPanel, WeightVector, CORE_EXCLUSION_TAGS};
use crate::series::MonthSeries;

/// A lower/upper trim pair in integer percent of expenditure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(u8, u8)", into = "(u8, u8)")]
pub struct TrimSpec {
    alpha: u8,
    beta: u8,
}

impl TrimSpec {
    pub fn new(alpha: u8, beta: u8) -> Result<Self> {
        if alpha > 50 || beta > 50 {
            return Err(Error::InvalidTrim {
                alpha: alpha as u32,
                beta: beta as u32,
            });
        }
        Ok(TrimSpec { alpha, beta })
    }

    /// Share trimmed from the bottom of the rate distribution, in percent.
    pub fn alpha(self) -> u8 {
        self.alpha
    }

    /// Share trimmed from the top, in percent.
    pub fn beta(self) -> u8 {
        self.beta
    }

    /// The published trimmed-mean calibration (24, 31).
    pub fn official() -> Self {
        TrimSpec { alpha: 24, beta: 31 }
    }

    /// The alternative calibration (24, 36) also quoted for the official
    /// series; kept runnable alongside `official`.
    pub fn official_alt() -> Self {
        TrimSpec { alpha: 24, beta: 36 }
    }

    pub fn median() -> Self {
        TrimSpec { alpha: 50, beta: 50 }
    }

    /// True when the trim collapses to the weighted median.
    pub fn is_median(self) -> bool {
        self.alpha as u32 + self.beta as u32 == 100
    }
}

impl TryFrom<(u8, u8)> for TrimSpec {
    type Error = Error;

    fn try_from(pair: (u8, u8)) -> Result<Self> {
        TrimSpec::new(pair.0, pair.1)
    }
}

impl From<TrimSpec> for (u8, u8) {
    fn from(t: TrimSpec) -> (u8, u8) {
        (t.alpha, t.beta)
    }
}

impl fmt::Display for TrimSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alpha, self.beta)
    }
}

/// Which inflation series to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesKind {
    /// Fisher index over every category.
    Headline,
    /// Fisher index excluding the food and energy tags.
    Core,
    Trimmed(TrimSpec),
    Median,
    /// Rate of the category holding the given expenditure percentile.
    Percentile(f64),
}

impl SeriesKind {
    pub fn label(&self) -> &'static str {
        match self {
            SeriesKind::Headline => "headline",
            SeriesKind::Core => "core",
            SeriesKind::Trimmed(_) => "trimmed",
            SeriesKind::Median => "median",
            SeriesKind::Percentile(_) => "percentile",
        }
    }

    pub fn trim(&self) -> Option<TrimSpec> {
        match self {
            SeriesKind::Trimmed(t) => Some(*t),
            _ => None,
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesKind::Trimmed(t) => write!(f, "trimmed{t}"),
            SeriesKind::Percentile(p) => write!(f, "percentile({p})"),
            other => f.write_str(other.label()),
        }
    }
}

/// A 12-month chained inflation series in annual percent.
#[derive(Debug, Clone)]
pub struct InflationSeries {
    pub kind: SeriesKind,
    pub series: MonthSeries,
}

/// One month's cross-section, sorted ascending by (rate, category), with
/// prefix sums of weight and weight*rate. All trim, median, and percentile
/// statistics are interval queries against this one structure, so a grid
/// of trims shares a single sort per month.
#[derive(Debug, Clone)]
pub struct CrossSection {
    /// Original category positions, in sorted order.
    order: Vec<usize>,
    rates: Vec<f64>,
    cum_weight: Vec<f64>,
    cum_weight_rate: Vec<f64>,
}

impl CrossSection {
    /// Build from (category position, rate, weight) triples. Weights are
    /// expected to be normalized; positions provide the deterministic
    /// tie-break for equal rates.
    pub fn new(mut entries: Vec<(usize, f64, f64)>) -> Self {
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut order = Vec::with_capacity(entries.len());
        let mut rates = Vec::with_capacity(entries.len());
        let mut cum_weight = Vec::with_capacity(entries.len());
        let mut cum_weight_rate = Vec::with_capacity(entries.len());
        let mut cw = 0.0;
        let mut cwr = 0.0;
        for (pos, rate, weight) in entries {
            cw += weight;
            cwr += weight * rate;
            order.push(pos);
            rates.push(rate);
            cum_weight.push(cw);
            cum_weight_rate.push(cwr);
        }
        CrossSection {
            order,
            rates,
            cum_weight,
            cum_weight_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Total weight mass (1 up to rounding for normalized inputs).
    pub fn total_weight(&self) -> f64 {
        *self.cum_weight.last().unwrap_or(&0.0)
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.last().copied().unwrap_or(f64::NAN)
    }

    /// Category position (into the original ordering) at sorted slot `i`.
    pub fn position(&self, i: usize) -> usize {
        self.order[i]
    }

    /// Cumulative-weight interval `[lo, hi)` occupied by sorted slot `i`.
    pub fn segment(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { self.cum_weight[i - 1] };
        (lo, self.cum_weight[i])
    }

    /// Integral of the rate step-function over cumulative weight [0, u].
    fn integral_to(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let total = self.total_weight();
        if u >= total {
            return *self.cum_weight_rate.last().unwrap();
        }
        // first slot whose cumulative weight exceeds u
        let i = self.cum_weight.partition_point(|&c| c <= u);
        let (below, prev_cw) = if i == 0 {
            (0.0, 0.0)
        } else {
            (self.cum_weight_rate[i - 1], self.cum_weight[i - 1])
        };
        below + (u - prev_cw) * self.rates[i.min(self.rates.len() - 1)]
    }

    /// Sorted slot of the category whose cumulative-weight interval
    /// contains mass fraction `p` of the total; an exact boundary hit
    /// selects the category above it (right-continuous step function).
    pub fn quantile_slot(&self, p: f64) -> Result<usize> {
        if self.is_empty() || self.total_weight() <= 0.0 {
            return Err(Error::EmptyCrossSection);
        }
        let u = self.total_weight() * p;
        let i = self.cum_weight.partition_point(|&c| c <= u);
        Ok(i.min(self.len() - 1))
    }

    /// Rate at mass fraction `p` (right-continuous; clamped to [min, max]).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.rates[self.quantile_slot(p)?])
    }

    /// Weighted median rate and its sorted slot.
    pub fn median(&self) -> Result<(usize, f64)> {
        let slot = self.quantile_slot(0.5)?;
        Ok((slot, self.rates[slot]))
    }

    /// Weighted mean of the rates surviving the trim. The surviving mass
    /// is the interval [alpha, 100-beta] percent of total weight; boundary
    /// categories contribute their partial residual mass. A (50,50) trim
    /// collapses to the weighted median.
    pub fn trimmed_mean(&self, trim: TrimSpec) -> Result<f64> {
        if self.is_empty() || self.total_weight() <= 0.0 {
            return Err(Error::EmptyCrossSection);
        }
        // constant cross-section: every trim keeps the common rate
        if self.min_rate() == self.max_rate() {
            return Ok(self.min_rate());
        }
        if trim.is_median() {
            return Ok(self.median()?.1);
        }
        let total = self.total_weight();
        let lo = total * (trim.alpha() as f64 / 100.0);
        let hi = total * (1.0 - trim.beta() as f64 / 100.0);
        let mass = hi - lo;
        if mass <= 0.0 {
            return Err(Error::DegenerateTrim {
                alpha: trim.alpha(),
                beta: trim.beta(),
            });
        }
        Ok((self.integral_to(hi) - self.integral_to(lo)) / mass)
    }
}

fn build_cross_section<'a>(
    rates: &'a BTreeMap<CategoryId, f64>,
    weights: &WeightVector,
) -> Result<(CrossSection, Vec<&'a CategoryId>)> {
    if rates.is_empty() {
        return Err(Error::EmptyCrossSection);
    }
    if rates.len() != weights.weights().len() {
        return Err(Error::MismatchedCrossSection);
    }
    let ids: Vec<&CategoryId> = rates.keys().collect();
    let mut entries = Vec::with_capacity(ids.len());
    for (pos, id) in ids.iter().enumerate() {
        let w = weights.get(id).ok_or(Error::MismatchedCrossSection)?;
        entries.push((pos, rates[*id], w));
    }
    Ok((CrossSection::new(entries), ids))
}

/// Trimmed weighted mean of one month's rate cross-section.
pub fn trimmed_monthly(
    rates: &BTreeMap<CategoryId, f64>,
    weights: &WeightVector,
    trim: TrimSpec,
) -> Result<f64> {
    let (cs, _) = build_cross_section(rates, weights)?;
    cs.trimmed_mean(trim)
}

/// Weighted median rate and the category providing it.
pub fn weighted_median_monthly(
    rates: &BTreeMap<CategoryId, f64>,
    weights: &WeightVector,
) -> Result<(f64, CategoryId)> {
    let (cs, ids) = build_cross_section(rates, weights)?;
    let (slot, rate) = cs.median()?;
    Ok((rate, ids[cs.position(slot)].clone()))
}

/// Rate of the category holding expenditure percentile `p`, `p` in (0,1).
pub fn weighted_percentile(
    rates: &BTreeMap<CategoryId, f64>,
    weights: &WeightVector,
    p: f64,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::PercentileOutOfRange(p));
    }
    let (cs, _) = build_cross_section(rates, weights)?;
    cs.quantile(p)
}

fn month_pair(panel: &CategoryPanel, month: Month) -> Result<usize> {
    let m = panel
        .month_index(month)
        .ok_or(Error::NoPredecessor(month))?;
    if m == 0 {
        return Err(Error::NoPredecessor(month));
    }
    Ok(m)
}

fn require_cells(panel: &CategoryPanel, m: usize) -> Result<Vec<usize>> {
    let month = panel.start_month().offset(m as i32);
    for c in 0..panel.n_categories() {
        let err = |field| Error::MissingCell {
            category: panel.categories()[c].to_string(),
            month,
            field,
        };
        if panel.price_at(c, m - 1).is_none() {
            return Err(err("price(t-1)"));
        }
        if panel.price_at(c, m).is_none() {
            return Err(err("price(t)"));
        }
        if panel.expenditure_at(c, m - 1).is_none() {
            return Err(err("expenditure(t-1)"));
        }
        if panel.expenditure_at(c, m).is_none() {
            return Err(err("expenditure(t)"));
        }
    }
    Ok((0..panel.n_categories()).collect())
}

fn laspeyres_over(panel: &CategoryPanel, m: usize, active: &[usize]) -> Result<f64> {
    // sum q_{t-1} p_t / sum q_{t-1} p_{t-1} with q = e/p:
    // numerator  = sum e_{t-1} * (p_t / p_{t-1}), denominator = sum e_{t-1}
    let mut num = 0.0;
    let mut den = 0.0;
    for &c in active {
        let e_prev = panel.expenditure_at(c, m - 1).unwrap();
        let p_prev = panel.price_at(c, m - 1).unwrap();
        let p_curr = panel.price_at(c, m).unwrap();
        num += e_prev * (p_curr / p_prev);
        den += e_prev;
    }
    if den <= 0.0 {
        return Err(Error::ZeroTotalExpenditure(
            panel.start_month().offset(m as i32),
        ));
    }
    Ok(num / den)
}

fn paasche_over(panel: &CategoryPanel, m: usize, active: &[usize]) -> Result<f64> {
    // sum q_t p_t / sum q_t p_{t-1} = sum e_t / sum e_t * (p_{t-1} / p_t)
    let mut num = 0.0;
    let mut den = 0.0;
    for &c in active {
        let e_curr = panel.expenditure_at(c, m).unwrap();
        let p_prev = panel.price_at(c, m - 1).unwrap();
        let p_curr = panel.price_at(c, m).unwrap();
        num += e_curr;
        den += e_curr * (p_prev / p_curr);
    }
    if den <= 0.0 {
        return Err(Error::ZeroTotalExpenditure(
            panel.start_month().offset(m as i32),
        ));
    }
    Ok(num / den)
}

/// Laspeyres gross rate at `month` over all panel categories.
pub fn laspeyres(panel: &CategoryPanel, month: Month) -> Result<f64> {
    let m = month_pair(panel, month)?;
    let active = require_cells(panel, m)?;
    laspeyres_over(panel, m, &active)
}

/// Paasche gross rate at `month` over all panel categories.
pub fn paasche(panel: &CategoryPanel, month: Month) -> Result<f64> {
    let m = month_pair(panel, month)?;
    let active = require_cells(panel, m)?;
    paasche_over(panel, m, &active)
}

/// Fisher gross rate: geometric mean of Laspeyres and Paasche.
pub fn fisher(panel: &CategoryPanel, month: Month) -> Result<f64> {
    let m = month_pair(panel, month)?;
    let active = require_cells(panel, m)?;
    fisher_over(panel, m, &active)
}

fn fisher_over(panel: &CategoryPanel, m: usize, active: &[usize]) -> Result<f64> {
    Ok((laspeyres_over(panel, m, active)? * paasche_over(panel, m, active)?).sqrt())
}

/// Chain monthly gross rates into 12-month inflation in annual percent.
/// The value at `t` needs 12 consecutive rates ending at `t`.
pub fn chain_12m(monthly: &MonthSeries) -> Result<MonthSeries> {
    if monthly.len() < 12 {
        return Err(Error::InsufficientHistory(format!(
            "{} monthly rates; chaining needs 12",
            monthly.len()
        )));
    }
    let vals: Vec<Option<f64>> = monthly.iter().map(|(_, v)| v).collect();
    let chained: Vec<Option<f64>> = (11..vals.len())
        .map(|t| {
            let window = &vals[t - 11..=t];
            if window.iter().all(|v| v.is_some()) {
                let product: f64 = window.iter().map(|v| v.unwrap()).product();
                Some((product - 1.0) * 100.0)
            } else {
                None
            }
        })
        .collect();
    Ok(MonthSeries::new(monthly.start().offset(11), chained))
}

/// Per-month sorted cross-sections for a panel, built once and shared by
/// every trim-dependent statistic. Index 0 corresponds to the second
/// panel month (the first month with a defined rate).
pub struct PanelCrossSections {
    start: Month,
    sections: Vec<Option<CrossSection>>,
}

impl PanelCrossSections {
    /// First month carrying a cross-section (second panel month).
    pub fn start(&self) -> Month {
        self.start
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<&CrossSection> {
        self.sections.get(idx).and_then(|s| s.as_ref())
    }

    pub fn month(&self, idx: usize) -> Month {
        self.start.offset(idx as i32)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Month, Option<&CrossSection>)> + '_ {
        self.sections
            .iter()
            .enumerate()
            .map(|(i, s)| (self.month(i), s.as_ref()))
    }
}

/// Build the per-month cross-sections (rates + normalized weights).
/// Months whose active set is empty or carries no expenditure are left
/// missing with a logged warning rather than aborting the run.
pub fn cross_sections(panel: &CategoryPanel) -> Result<PanelCrossSections> {
    if panel.n_months() < 2 {
        return Err(Error::InsufficientHistory(
            "panel covers fewer than 2 months".into(),
        ));
    }
    let mut sections = Vec::with_capacity(panel.n_months() - 1);
    for m in 1..panel.n_months() {
        let month = panel.start_month().offset(m as i32);
        let active = panel.active_at(m);
        if active.len() < panel.n_categories() {
            log::warn!(
                "{month}: {} of {} categories dropped for missing cells",
                panel.n_categories() - active.len(),
                panel.n_categories()
            );
        }
        if active.is_empty() {
            log::warn!("{month}: empty cross-section");
            sections.push(None);
            continue;
        }
        let raw = match panel.raw_weights(m, &active) {
            Ok(raw) => raw,
            Err(Error::ZeroTotalExpenditure(_)) => {
                log::warn!("{month}: zero total expenditure; cross-section skipped");
                sections.push(None);
                continue;
            }
            Err(e) => return Err(e),
        };
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            log::warn!("{month}: zero total weight; cross-section skipped");
            sections.push(None);
            continue;
        }
        let entries = active
            .iter()
            .zip(&raw)
            .map(|(&c, &w)| {
                let rate =
                    panel.price_at(c, m).unwrap() / panel.price_at(c, m - 1).unwrap();
                (c, rate, w / total)
            })
            .collect();
        sections.push(Some(CrossSection::new(entries)));
    }
    Ok(PanelCrossSections {
        start: panel.start_month().next(),
        sections,
    })
}

fn fisher_monthly(panel: &CategoryPanel) -> Result<MonthSeries> {
    if panel.n_months() < 2 {
        return Err(Error::InsufficientHistory(
            "panel covers fewer than 2 months".into(),
        ));
    }
    let values = (1..panel.n_months())
        .map(|m| {
            let active = panel.active_at(m);
            if active.is_empty() {
                log::warn!("{}: empty cross-section", panel.start_month().offset(m as i32));
                return None;
            }
            fisher_over(panel, m, &active).ok()
        })
        .collect();
    Ok(MonthSeries::new(panel.start_month().next(), values))
}

/// Compute a full 12-month chained inflation series for the panel.
///
/// The monthly pipeline is rates -> weights -> cross-section statistic ->
/// 12-month chain; `Core` first drops the food and energy tags and lets
/// the weights renormalize over what remains.
pub fn series(panel: &CategoryPanel, kind: SeriesKind) -> Result<InflationSeries> {
    if let SeriesKind::Percentile(p) = kind {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::PercentileOutOfRange(p));
        }
    }
    let panel: Cow<'_, CategoryPanel> = match kind {
        SeriesKind::Core => {
            let tags: BTreeSet<String> =
                CORE_EXCLUSION_TAGS.iter().map(|s| s.to_string()).collect();
            Cow::Owned(apply_exclusions(panel, &tags)?)
        }
        _ => Cow::Borrowed(panel),
    };
    let monthly = match kind {
        SeriesKind::Headline | SeriesKind::Core => fisher_monthly(&panel)?,
        _ => {
            let xs = cross_sections(&panel)?;
            let values = xs
                .iter()
                .map(|(_, cs)| {
                    let cs = cs?;
                    match kind {
                        SeriesKind::Trimmed(trim) => cs.trimmed_mean(trim).ok(),
                        SeriesKind::Median => cs.median().ok().map(|(_, r)| r),
                        SeriesKind::Percentile(p) => cs.quantile(p).ok(),
                        _ => unreachable!(),
                    }
                })
                .collect();
            MonthSeries::new(xs.start(), values)
        }
    };
    Ok(InflationSeries {
        kind,
        series: chain_12m(&monthly)?,
    })
}
