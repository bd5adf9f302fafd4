//! Trim grid sweep, ranking, statistical-equivalence sets, prediction
//! ranges, and inclusion diagnostics.
//!
//! The sweep shares one sorted cross-section per month across every trim
//! cell: each cell is then a pair of prefix-sum interval queries per
//! month instead of a fresh sort, and the whole grid is a deterministic
//! parallel map whose output ordering is canonical (alpha-major).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indices::{cross_sections, CrossSection, PanelCrossSections, TrimSpec};
use crate::month::Month;
use crate::panel::{CategoryId, CategoryPanel};
use crate::stats::{dm_test, rmse_of, SampleSpec};
use crate::trends::{TrendSeries, TrendSpec};

/// One evaluated trim cell: its RMSE and the aligned error path that
/// produced it (retained so DM tests need no recomputation).
#[derive(Debug, Clone)]
pub struct GridCell {
    pub trim: TrimSpec,
    pub rmse: f64,
    pub errors: Vec<f64>,
}

/// RMSE (and loss paths) for every integer trim combination against one
/// target over one sample. Every cell's error sequence is aligned to the
/// same `months`.
#[derive(Debug, Clone)]
pub struct TrimGrid {
    pub target: TrendSpec,
    pub sample: SampleSpec,
    pub alpha_max: u8,
    pub beta_max: u8,
    months: Vec<Month>,
    cells: Vec<GridCell>,
}

impl TrimGrid {
    /// Evaluation months shared by every cell.
    pub fn months(&self) -> &[Month] {
        &self.months
    }

    /// Cells in alpha-major order.
    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, trim: TrimSpec) -> Option<&GridCell> {
        if trim.alpha() > self.alpha_max || trim.beta() > self.beta_max {
            return None;
        }
        let idx = trim.alpha() as usize * (self.beta_max as usize + 1) + trim.beta() as usize;
        self.cells.get(idx)
    }
}

/// An ordered set of trims with the selection criterion that built it.
#[derive(Debug, Clone)]
pub struct TrimSet {
    pub members: Vec<TrimSpec>,
    pub criterion: String,
}

/// Months (relative to the cross-section start) with 12 consecutive
/// defined monthly statistics ending at each position.
fn chainable_mask(xs: &PanelCrossSections) -> Vec<bool> {
    let present: Vec<bool> = (0..xs.len()).map(|i| xs.get(i).is_some()).collect();
    (0..present.len())
        .map(|t| t >= 11 && present[t - 11..=t].iter().all(|&p| p))
        .collect()
}

/// Chained 12-month value (annual percent) at rate-index `t` for a trim,
/// reading monthly statistics from the shared cross-sections.
fn chained_at(monthly: &[f64], t: usize) -> f64 {
    let product: f64 = monthly[t - 11..=t].iter().product();
    (product - 1.0) * 100.0
}

/// Sweep every integer trim pair in `[0, alpha_max] x [0, beta_max]`,
/// recording the RMSE against `target` over `sample` and the aligned
/// error path per cell. The (50,50) cell is the weighted-median series.
pub fn sweep(
    panel: &CategoryPanel,
    target: &TrendSeries,
    sample: &SampleSpec,
    alpha_max: u8,
    beta_max: u8,
) -> Result<TrimGrid> {
    TrimSpec::new(alpha_max, beta_max)?;
    let xs = cross_sections(panel)?;
    let mask = chainable_mask(&xs);
    // evaluation months: chainable, inside the sample, target defined
    let mut eval_idx = Vec::new();
    let mut eval_months = Vec::new();
    let mut target_vals = Vec::new();
    for (t, &ok) in mask.iter().enumerate() {
        let month = xs.month(t);
        if ok && sample.contains(month) {
            if let Some(v) = target.series.get(month) {
                eval_idx.push(t);
                eval_months.push(month);
                target_vals.push(v);
            }
        }
    }
    if eval_idx.is_empty() {
        return Err(Error::EmptyOverlap);
    }

    let n_beta = beta_max as usize + 1;
    let n_cells = (alpha_max as usize + 1) * n_beta;
    let cells: Vec<GridCell> = (0..n_cells)
        .into_par_iter()
        .map(|ci| -> Result<GridCell> {
            let trim = TrimSpec::new((ci / n_beta) as u8, (ci % n_beta) as u8)?;
            let mut monthly = vec![f64::NAN; xs.len()];
            for t in 0..xs.len() {
                if let Some(cs) = xs.get(t) {
                    monthly[t] = cs.trimmed_mean(trim)?;
                }
            }
            let errors: Vec<f64> = eval_idx
                .iter()
                .zip(&target_vals)
                .map(|(&t, &tv)| chained_at(&monthly, t) - tv)
                .collect();
            Ok(GridCell {
                trim,
                rmse: rmse_of(&errors),
                errors,
            })
        })
        .collect::<Result<_>>()?;

    Ok(TrimGrid {
        target: target.spec,
        sample: *sample,
        alpha_max,
        beta_max,
        months: eval_months,
        cells,
    })
}

/// Ordering used to rank cells: RMSE first, then the least-trimmed,
/// most-inclusive pair (smallest alpha+beta, then smallest alpha).
fn rank_key(cell: &GridCell) -> (f64, u16, u8) {
    (
        cell.rmse,
        cell.trim.alpha() as u16 + cell.trim.beta() as u16,
        cell.trim.alpha(),
    )
}

fn rank_cmp(a: &GridCell, b: &GridCell) -> std::cmp::Ordering {
    let (ra, sa, aa) = rank_key(a);
    let (rb, sb, ab) = rank_key(b);
    ra.total_cmp(&rb).then(sa.cmp(&sb)).then(aa.cmp(&ab))
}

/// The minimum-RMSE cell (ties broken toward the least-trimmed pair).
pub fn best_trim(grid: &TrimGrid) -> (TrimSpec, f64) {
    let best = grid
        .cells()
        .iter()
        .min_by(|a, b| rank_cmp(a, b))
        .expect("grid is nonempty");
    (best.trim, best.rmse)
}

/// DM comparison of a cell against the best cell, with degenerate
/// (identical-loss) comparisons reported as statistic 0, p-value 1.
pub fn dm_vs_best(cell: &GridCell, best: &GridCell, bandwidth: usize) -> (f64, f64, bool) {
    match dm_test(&cell.errors, &best.errors, bandwidth) {
        Ok(r) => (r.statistic, r.p_value, false),
        Err(_) => {
            let n = cell.errors.len().max(1) as f64;
            let mean_d: f64 = cell
                .errors
                .iter()
                .zip(&best.errors)
                .map(|(a, b)| a * a - b * b)
                .sum::<f64>()
                / n;
            if mean_d == 0.0 {
                (0.0, 1.0, true)
            } else {
                (f64::INFINITY.copysign(mean_d), 0.0, true)
            }
        }
    }
}

/// DM comparison of every cell against the best cell, in cell order.
pub fn dm_vs_best_all(grid: &TrimGrid, bandwidth: usize) -> Vec<(f64, f64, bool)> {
    let (best, _) = best_trim(grid);
    let best_cell = grid.cell(best).expect("best cell exists");
    grid.cells()
        .par_iter()
        .map(|cell| dm_vs_best(cell, best_cell, bandwidth))
        .collect()
}

/// All trims statistically equivalent to the best trim at `level`:
/// members are the cells whose two-sided DM p-value against the best is
/// at least `level`. The best trim is always a member.
pub fn equivalence_set(grid: &TrimGrid, level: f64, bandwidth: usize) -> TrimSet {
    let (best, _) = best_trim(grid);
    let outcomes = dm_vs_best_all(grid, bandwidth);
    let members = grid
        .cells()
        .iter()
        .zip(&outcomes)
        .filter(|(cell, (_, p, _))| cell.trim == best || *p >= level)
        .map(|(cell, _)| cell.trim)
        .collect();
    TrimSet {
        members,
        criterion: format!("equivalence@{level}"),
    }
}

/// The `k` lowest-RMSE trims, RMSE ascending.
pub fn top_k(grid: &TrimGrid, k: usize) -> Result<TrimSet> {
    if k == 0 || k > grid.len() {
        return Err(Error::KTooLarge {
            k,
            size: grid.len(),
        });
    }
    let mut ranked: Vec<&GridCell> = grid.cells().iter().collect();
    ranked.sort_by(|a, b| rank_cmp(a, b));
    Ok(TrimSet {
        members: ranked[..k].iter().map(|c| c.trim).collect(),
        criterion: format!("top_{k}"),
    })
}

/// Per-month minimum and maximum of the chained trimmed series across a
/// set of trims, plus the time-average of the spread.
#[derive(Debug, Clone)]
pub struct PredictionRange {
    pub criterion: String,
    pub months: Vec<Month>,
    /// (min, max) chained inflation per month, percent.
    pub bounds: Vec<(f64, f64)>,
    /// Time-average of (max - min), percentage points.
    pub avg_range: f64,
}

/// Range of chained predictions implied by `trims` over the sample.
pub fn prediction_range(
    panel: &CategoryPanel,
    trims: &TrimSet,
    sample: &SampleSpec,
) -> Result<PredictionRange> {
    if trims.members.is_empty() {
        return Err(Error::EmptyCrossSection);
    }
    let xs = cross_sections(panel)?;
    let mask = chainable_mask(&xs);
    let eval_idx: Vec<usize> = (0..xs.len())
        .filter(|&t| mask[t] && sample.contains(xs.month(t)))
        .collect();
    if eval_idx.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let months: Vec<Month> = eval_idx.iter().map(|&t| xs.month(t)).collect();
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); eval_idx.len()];
    for &trim in &trims.members {
        let mut monthly = vec![f64::NAN; xs.len()];
        for t in 0..xs.len() {
            if let Some(cs) = xs.get(t) {
                monthly[t] = cs.trimmed_mean(trim)?;
            }
        }
        for (slot, &t) in eval_idx.iter().enumerate() {
            let v = chained_at(&monthly, t);
            let (lo, hi) = bounds[slot];
            bounds[slot] = (lo.min(v), hi.max(v));
        }
    }
    let avg_range =
        bounds.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / bounds.len() as f64;
    Ok(PredictionRange {
        criterion: trims.criterion.clone(),
        months,
        bounds,
        avg_range,
    })
}

/// Time-average of the cross-category rate span each trim keeps,
/// `quantile(1 - beta) - quantile(alpha)`, annualized: each percentile's
/// gross monthly rate r is expressed as (r^12 - 1) * 100 before the
/// difference is taken. Alpha-major order.
pub fn avg_rate_range_by_trim(
    panel: &CategoryPanel,
    sample: &SampleSpec,
    alpha_max: u8,
    beta_max: u8,
) -> Result<Vec<(TrimSpec, f64)>> {
    TrimSpec::new(alpha_max, beta_max)?;
    let xs = cross_sections(panel)?;
    let sections: Vec<&CrossSection> = (0..xs.len())
        .filter(|&t| sample.contains(xs.month(t)))
        .filter_map(|t| xs.get(t))
        .collect();
    if sections.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let annualize = |r: f64| (r.powi(12) - 1.0) * 100.0;
    let n_beta = beta_max as usize + 1;
    let n_cells = (alpha_max as usize + 1) * n_beta;
    (0..n_cells)
        .into_par_iter()
        .map(|ci| -> Result<(TrimSpec, f64)> {
            let trim = TrimSpec::new((ci / n_beta) as u8, (ci % n_beta) as u8)?;
            let lo_p = trim.alpha() as f64 / 100.0;
            let hi_p = 1.0 - trim.beta() as f64 / 100.0;
            let mut acc = 0.0;
            for cs in &sections {
                let hi = cs.quantile(hi_p)?;
                let lo = cs.quantile(lo_p)?;
                acc += annualize(hi) - annualize(lo);
            }
            Ok((trim, acc / sections.len() as f64))
        })
        .collect()
}

/// Inclusion diagnostics for one category under a fixed trim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionStats {
    /// Fraction of sample months where any of its weight survives the trim.
    pub included: f64,
    /// Fraction of months fully trimmed from below (lowest rates).
    pub excluded_low: f64,
    /// Fraction of months fully trimmed from above (highest rates).
    pub excluded_high: f64,
}

/// Per-category inclusion fractions over the sample months with a
/// defined cross-section. A category is included when any of its weight
/// is used; under a median trim only the selected category is included.
pub fn inclusion_stats(
    panel: &CategoryPanel,
    trim: TrimSpec,
    sample: &SampleSpec,
) -> Result<Vec<(CategoryId, InclusionStats)>> {
    let xs = cross_sections(panel)?;
    let sections: Vec<&CrossSection> = (0..xs.len())
        .filter(|&t| sample.contains(xs.month(t)))
        .filter_map(|t| xs.get(t))
        .collect();
    if sections.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let n_cats = panel.n_categories();
    let mut included = vec![0usize; n_cats];
    let mut low = vec![0usize; n_cats];
    let mut high = vec![0usize; n_cats];
    for cs in &sections {
        if trim.is_median() {
            let (slot, _) = cs.median()?;
            let median_pos = cs.position(slot);
            let boundary = cs.total_weight() * 0.5;
            for i in 0..cs.len() {
                let pos = cs.position(i);
                if pos == median_pos {
                    included[pos] += 1;
                } else {
                    let (seg_lo, seg_hi) = cs.segment(i);
                    if seg_hi <= boundary {
                        low[pos] += 1;
                    } else if seg_lo >= boundary {
                        high[pos] += 1;
                    } else {
                        // zero-weight sliver at the boundary counts low
                        low[pos] += 1;
                    }
                }
            }
        } else {
            let total = cs.total_weight();
            let lo_cut = total * (trim.alpha() as f64 / 100.0);
            let hi_cut = total * (1.0 - trim.beta() as f64 / 100.0);
            for i in 0..cs.len() {
                let pos = cs.position(i);
                let (seg_lo, seg_hi) = cs.segment(i);
                let kept = seg_hi.min(hi_cut) - seg_lo.max(lo_cut);
                if kept > 0.0 {
                    included[pos] += 1;
                } else if seg_hi <= lo_cut {
                    low[pos] += 1;
                } else if seg_lo >= hi_cut {
                    high[pos] += 1;
                }
                // zero-weight categories inside the band fall in no bucket
            }
        }
    }
    let n = sections.len() as f64;
    Ok((0..n_cats)
        .map(|c| {
            (
                panel.categories()[c].clone(),
                InclusionStats {
                    included: included[c] as f64 / n,
                    excluded_low: low[c] as f64 / n,
                    excluded_high: high[c] as f64 / n,
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::{series, InflationSeries, SeriesKind};
    use crate::month::Month;
    use crate::panel::load_panel;
    use crate::series::MonthSeries;
    use crate::trends::{trend, TrendSpec};
    use approx::assert_relative_eq;

    fn m(y: i32, mo: u32) -> Month {
        Month::new(y, mo).unwrap()
    }

    fn csv_panel(body: &str) -> CategoryPanel {
        let text = format!("date,category_id,price_index,nominal_expenditure\n{body}");
        load_panel(text.as_bytes()).unwrap()
    }

    /// 3-category panel with dispersion, 48 months.
    fn synthetic_panel() -> CategoryPanel {
        let mut body = String::new();
        for (ci, id) in ["a", "b", "c"].iter().enumerate() {
            let mut price = 100.0;
            for t in 0..48 {
                let date = m(1970, 1).offset(t as i32);
                if t > 0 {
                    let drift = 0.002 + 0.001 * ci as f64;
                    let wobble = 0.006 * ((t as f64 * 0.9 + 2.0 * ci as f64).sin());
                    price *= 1.0 + drift + wobble;
                }
                let exp = 5.0 + 2.0 * ci as f64 + (t as f64 * 0.2 + ci as f64).cos();
                body.push_str(&format!("{date},{id},{price:.10},{exp:.10}\n"));
            }
        }
        csv_panel(&body)
    }

    /// Panel whose categories share one bitwise-identical price path
    /// (trimming is inert); `{}` formatting round-trips f64 exactly.
    fn identical_rate_panel() -> CategoryPanel {
        let mut body = String::new();
        for (ci, id) in ["a", "b", "c"].iter().enumerate() {
            let mut price = 100.0;
            for t in 0..40 {
                let date = m(1970, 1).offset(t as i32);
                if t > 0 {
                    price *= 1.0 + 0.003 * ((t as f64 * 0.5).sin() + 1.2);
                }
                body.push_str(&format!("{date},{id},{price},{}\n", 3 + ci));
            }
        }
        csv_panel(&body)
    }

    fn full_sample() -> SampleSpec {
        SampleSpec::new(m(1900, 1), m(2100, 1))
    }

    fn target_for(panel: &CategoryPanel) -> TrendSeries {
        let headline = series(panel, SeriesKind::Headline).unwrap();
        trend(&headline, &TrendSpec::Centered { window: 6 }).unwrap()
    }

    #[test]
    fn identical_rates_make_trimming_inert() {
        let panel = identical_rate_panel();
        let target = target_for(&panel);
        let grid = sweep(&panel, &target, &full_sample(), 50, 50).unwrap();
        assert_eq!(grid.len(), 51 * 51);
        let first = grid.cells()[0].rmse;
        for cell in grid.cells() {
            assert_relative_eq!(cell.rmse, first, epsilon = 1e-12);
        }
        let (best, _) = best_trim(&grid);
        assert_eq!(best, TrimSpec::new(0, 0).unwrap());

        let set = equivalence_set(&grid, 0.05, 5);
        assert_eq!(set.members.len(), grid.len());
    }

    /// Independent per-trim oracle: fresh sort, literal interval clipping.
    fn oracle_trimmed(raw: &[(f64, f64)], trim: TrimSpec) -> f64 {
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&i, &j| raw[i].0.total_cmp(&raw[j].0).then(i.cmp(&j)));
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        if trim.is_median() {
            let mut c = 0.0;
            for &i in &order {
                let c2 = c + raw[i].1 / total;
                if c <= 0.5 && 0.5 < c2 {
                    return raw[i].0;
                }
                c = c2;
            }
            return raw[*order.last().unwrap()].0;
        }
        let lo = trim.alpha() as f64 / 100.0;
        let hi = 1.0 - trim.beta() as f64 / 100.0;
        let mut mass = 0.0;
        let mut acc = 0.0;
        let mut c = 0.0;
        for &i in &order {
            let c2 = c + raw[i].1 / total;
            let kept = c2.min(hi) - c.max(lo);
            if kept > 0.0 {
                mass += kept;
                acc += kept * raw[i].0;
            }
            c = c2;
        }
        acc / mass
    }

    #[test]
    fn sweep_matches_oracle_composed_with_chain_and_rmse() {
        let panel = synthetic_panel();
        let target = target_for(&panel);
        let sample = full_sample();
        let grid = sweep(&panel, &target, &sample, 50, 50).unwrap();

        // oracle monthly cross-sections straight from the panel
        let n_months = panel.n_months();
        let mut monthly_raw: Vec<Option<Vec<(f64, f64)>>> = Vec::new();
        for t in 1..n_months {
            let mut entries = Vec::new();
            let mut prev_total = 0.0;
            let mut curr_total = 0.0;
            for c in 0..panel.n_categories() {
                prev_total += panel.expenditure_at(c, t - 1).unwrap();
                curr_total += panel.expenditure_at(c, t).unwrap();
            }
            for c in 0..panel.n_categories() {
                let p0 = panel.price_at(c, t - 1).unwrap();
                let p1 = panel.price_at(c, t).unwrap();
                let e0 = panel.expenditure_at(c, t - 1).unwrap();
                let e1 = panel.expenditure_at(c, t).unwrap();
                let w = 0.5 * e0 / prev_total + 0.5 * (p0 / p1) * e1 / curr_total;
                entries.push((p1 / p0, w));
            }
            monthly_raw.push(Some(entries));
        }

        for cell in grid.cells() {
            let monthly: Vec<Option<f64>> = monthly_raw
                .iter()
                .map(|e| e.as_ref().map(|e| oracle_trimmed(e, cell.trim)))
                .collect();
            let chained = crate::indices::chain_12m(&MonthSeries::new(
                panel.start_month().next(),
                monthly,
            ))
            .unwrap();
            let oracle_series = InflationSeries {
                kind: SeriesKind::Trimmed(cell.trim),
                series: chained,
            };
            let oracle_rmse = crate::stats::rmse(&oracle_series, &target, &sample).unwrap();
            assert_relative_eq!(cell.rmse, oracle_rmse, epsilon = 1e-9);
        }
    }

    #[test]
    fn sweep_cells_match_series_pipeline() {
        let panel = synthetic_panel();
        let target = target_for(&panel);
        let grid = sweep(&panel, &target, &full_sample(), 50, 50).unwrap();
        for trim in [
            TrimSpec::new(0, 0).unwrap(),
            TrimSpec::official(),
            TrimSpec::median(),
        ] {
            let s = series(&panel, SeriesKind::Trimmed(trim)).unwrap();
            let r = crate::stats::rmse(&s, &target, &full_sample()).unwrap();
            assert_relative_eq!(grid.cell(trim).unwrap().rmse, r, epsilon = 1e-12);
        }
    }

    #[test]
    fn best_trim_minimizes_rmse() {
        let panel = synthetic_panel();
        let target = target_for(&panel);
        let grid = sweep(&panel, &target, &full_sample(), 50, 50).unwrap();
        let (best, best_rmse) = best_trim(&grid);
        for cell in grid.cells() {
            assert!(best_rmse <= cell.rmse + 1e-15, "{best} vs {}", cell.trim);
        }
        assert!(best_rmse <= grid.cell(TrimSpec::official()).unwrap().rmse);
        assert!(best_rmse <= grid.cell(TrimSpec::median()).unwrap().rmse);
    }

    #[test]
    fn equivalence_contains_best_and_is_monotone_in_level() {
        let panel = synthetic_panel();
        let target = target_for(&panel);
        let grid = sweep(&panel, &target, &full_sample(), 50, 50).unwrap();
        let (best, _) = best_trim(&grid);
        let loose = equivalence_set(&grid, 0.01, 5);
        let tight = equivalence_set(&grid, 0.25, 5);
        assert!(loose.members.contains(&best));
        assert!(tight.members.contains(&best));
        // raising the level can only shrink the set
        assert!(tight.members.len() <= loose.members.len());
        for t in &tight.members {
            assert!(loose.members.contains(t));
        }
    }

    #[test]
    fn top_k_nesting_and_bounds() {
        let panel = synthetic_panel();
        let target = target_for(&panel);
        let grid = sweep(&panel, &target, &full_sample(), 50, 50).unwrap();
        let (best, _) = best_trim(&grid);
        let t1 = top_k(&grid, 1).unwrap();
        assert_eq!(t1.members, vec![best]);
        let t10 = top_k(&grid, 10).unwrap();
        let t50 = top_k(&grid, 50).unwrap();
        let all = top_k(&grid, grid.len()).unwrap();
        assert_eq!(all.members.len(), 51 * 51);
        for t in &t1.members {
            assert!(t10.members.contains(t));
        }
        for t in &t10.members {
            assert!(t50.members.contains(t));
        }
        assert!(matches!(
            top_k(&grid, grid.len() + 1).unwrap_err(),
            Error::KTooLarge { .. }
        ));
    }

    #[test]
    fn prediction_range_singleton_is_degenerate() {
        let panel = synthetic_panel();
        let set = TrimSet {
            members: vec![TrimSpec::official()],
            criterion: "single".into(),
        };
        let range = prediction_range(&panel, &set, &full_sample()).unwrap();
        assert_eq!(range.avg_range, 0.0);
        for (lo, hi) in &range.bounds {
            assert_eq!(lo, hi);
        }
    }

    #[test]
    fn prediction_range_orders_bounds() {
        let panel = synthetic_panel();
        let set = TrimSet {
            members: vec![
                TrimSpec::new(0, 0).unwrap(),
                TrimSpec::official(),
                TrimSpec::median(),
            ],
            criterion: "three".into(),
        };
        let range = prediction_range(&panel, &set, &full_sample()).unwrap();
        assert!(range.avg_range >= 0.0);
        for (lo, hi) in &range.bounds {
            assert!(lo <= hi);
        }
        // bounds must bracket each member's own series
        let s = series(&panel, SeriesKind::Trimmed(TrimSpec::official())).unwrap();
        for (month, (lo, hi)) in range.months.iter().zip(&range.bounds) {
            let v = s.series.get(*month).unwrap();
            assert!(*lo <= v + 1e-12 && v - 1e-12 <= *hi);
        }
    }

    #[test]
    fn rate_range_fixture_values() {
        // weights 0.2/0.5/0.3 via expenditures; rates 1.001/1.002/1.010 each month
        let mut body = String::new();
        let rates = [1.001, 1.002, 1.010];
        let weights = [0.2, 0.5, 0.3];
        for (ci, id) in ["c1", "c2", "c3"].iter().enumerate() {
            let mut price = 1.0;
            for t in 0..3 {
                let date = m(1970, 1).offset(t);
                if t > 0 {
                    price *= rates[ci];
                }
                body.push_str(&format!("{date},{id},{price:.12},{}\n", weights[ci]));
            }
        }
        let panel = csv_panel(&body);
        let ranges = avg_rate_range_by_trim(&panel, &full_sample(), 50, 50).unwrap();
        let lookup = |a: u8, b: u8| {
            ranges
                .iter()
                .find(|(t, _)| *t == TrimSpec::new(a, b).unwrap())
                .unwrap()
                .1
        };
        // (10,10): span of gross rates is 1.010 - 1.001 = 0.009;
        // annualized span is (1.010^12 - 1.001^12) * 100
        let expected = (1.010_f64.powi(12) - 1.001_f64.powi(12)) * 100.0;
        assert_relative_eq!(lookup(10, 10), expected, max_relative = 1e-10);
        assert_eq!(lookup(50, 50), 0.0);
    }

    #[test]
    fn rate_range_zero_for_identical_rates() {
        let panel = identical_rate_panel();
        let ranges = avg_rate_range_by_trim(&panel, &full_sample(), 50, 50).unwrap();
        for (_, span) in ranges {
            assert_relative_eq!(span, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn inclusion_no_trim_includes_everyone() {
        let panel = synthetic_panel();
        let stats =
            inclusion_stats(&panel, TrimSpec::new(0, 0).unwrap(), &full_sample()).unwrap();
        for (_, s) in stats {
            assert_eq!(s.included, 1.0);
            assert_eq!(s.excluded_low, 0.0);
            assert_eq!(s.excluded_high, 0.0);
        }
    }

    #[test]
    fn inclusion_exact_boundary_is_exclusion() {
        // dyadic weights 0.25/0.5/0.25 survive the weight formula bitwise
        // under constant prices, so the (25,25) cutoffs land exactly on
        // the segment boundaries; touching without overlap is exclusion.
        let weights = [0.25, 0.5, 0.25];
        let mut body = String::new();
        for (ci, id) in ["c1", "c2", "c3"].iter().enumerate() {
            for t in 0..4 {
                let date = m(1970, 1).offset(t);
                body.push_str(&format!("{date},{id},1,{}\n", weights[ci]));
            }
        }
        let panel = csv_panel(&body);
        let stats =
            inclusion_stats(&panel, TrimSpec::new(25, 25).unwrap(), &full_sample()).unwrap();
        let by_id = |id: &str| stats.iter().find(|(c, _)| c.as_str() == id).unwrap().1;
        assert_eq!(by_id("c1").excluded_low, 1.0);
        assert_eq!(by_id("c1").included, 0.0);
        assert_eq!(by_id("c2").included, 1.0);
        assert_eq!(by_id("c3").excluded_high, 1.0);
    }

    #[test]
    fn inclusion_classifies_tails_with_distinct_rates() {
        // weights ~0.2/0.5/0.3, cutoffs strictly inside the middle segment
        let mut body = String::new();
        let rates = [1.001, 1.002, 1.010];
        let weights = [0.2, 0.5, 0.3];
        for (ci, id) in ["c1", "c2", "c3"].iter().enumerate() {
            let mut price = 1.0;
            for t in 0..4 {
                let date = m(1970, 1).offset(t);
                if t > 0 {
                    price *= rates[ci];
                }
                body.push_str(&format!("{date},{id},{price:.12},{}\n", weights[ci]));
            }
        }
        let panel = csv_panel(&body);
        let stats =
            inclusion_stats(&panel, TrimSpec::new(30, 40).unwrap(), &full_sample()).unwrap();
        let by_id = |id: &str| stats.iter().find(|(c, _)| c.as_str() == id).unwrap().1;
        assert_eq!(by_id("c1").excluded_low, 1.0);
        assert_eq!(by_id("c2").included, 1.0);
        assert_eq!(by_id("c3").excluded_high, 1.0);
    }

    #[test]
    fn inclusion_single_category() {
        let mut body = String::new();
        let mut price = 2.0;
        for t in 0..5 {
            let date = m(1970, 1).offset(t);
            if t > 0 {
                price *= 1.004;
            }
            body.push_str(&format!("{date},solo,{price:.12},7\n"));
        }
        let panel = csv_panel(&body);
        for trim in [TrimSpec::new(0, 0).unwrap(), TrimSpec::official(), TrimSpec::median()] {
            let stats = inclusion_stats(&panel, trim, &full_sample()).unwrap();
            assert_eq!(stats[0].1.included, 1.0, "trim {trim}");
        }
    }
}
