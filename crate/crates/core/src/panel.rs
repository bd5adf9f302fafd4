//! Category-level price/expenditure panel: loading, validation, monthly
//! price relatives, and expenditure weights.
//!
//! The panel is the single immutable input of the engine. Quantities are
//! never supplied directly; they are recovered cell-wise as
//! `expenditure / price`, which is exact for every product `p * q` the
//! index formulas need.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use crate::error::{Error, Result};
use crate::month::Month;
use crate::series::MonthSeries;

/// Opaque category identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoryId(String);

impl CategoryId {
    pub fn new(id: impl Into<String>) -> Self {
        CategoryId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CategoryId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CategoryId {
    fn from(s: &str) -> Self {
        CategoryId(s.to_string())
    }
}

/// Tags used to build core inflation (food and energy exclusion).
pub const CORE_EXCLUSION_TAGS: [&str; 2] = ["food", "energy"];

/// Immutable monthly panel of per-category price indices and nominal
/// expenditures. Categories are kept sorted by id; months are contiguous.
#[derive(Debug, Clone)]
pub struct CategoryPanel {
    categories: Vec<CategoryId>,
    start: Month,
    n_months: usize,
    // cell arrays indexed [category * n_months + month]
    price: Vec<Option<f64>>,
    expenditure: Vec<Option<f64>>,
    tags: BTreeMap<CategoryId, BTreeSet<String>>,
}

/// One raw observation, as parsed from the panel CSV.
#[derive(Debug, Clone)]
pub struct PanelCell {
    pub category: CategoryId,
    pub month: Month,
    pub price: Option<f64>,
    pub expenditure: Option<f64>,
}

impl CategoryPanel {
    /// Build a panel from raw cells, enforcing the panel invariants:
    /// no duplicate (category, month) cells, contiguous months, strictly
    /// positive prices, nonnegative expenditures.
    pub fn from_cells(cells: Vec<PanelCell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InsufficientHistory("panel has no cells".into()));
        }
        let mut months: BTreeSet<Month> = BTreeSet::new();
        let mut by_key: BTreeMap<(CategoryId, Month), (Option<f64>, Option<f64>)> =
            BTreeMap::new();
        for cell in cells {
            if let Some(p) = cell.price {
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::NonPositivePrice {
                        category: cell.category.to_string(),
                        month: cell.month,
                        value: p,
                    });
                }
            }
            if let Some(e) = cell.expenditure {
                if e < 0.0 || !e.is_finite() {
                    return Err(Error::MalformedRow {
                        line: 0,
                        reason: format!(
                            "negative or non-finite expenditure {e} for {} at {}",
                            cell.category, cell.month
                        ),
                    });
                }
            }
            months.insert(cell.month);
            let key = (cell.category.clone(), cell.month);
            if by_key
                .insert(key, (cell.price, cell.expenditure))
                .is_some()
            {
                return Err(Error::DuplicateCell {
                    category: cell.category.to_string(),
                    month: cell.month,
                });
            }
        }
        let first = *months.iter().next().unwrap();
        let last = *months.iter().next_back().unwrap();
        let n_months = (last.months_since(first) + 1) as usize;
        let mut probe = first;
        for _ in 0..n_months {
            if !months.contains(&probe) {
                return Err(Error::NonContiguousMonths {
                    missing: probe,
                    first,
                    last,
                });
            }
            probe = probe.next();
        }

        let categories: Vec<CategoryId> = by_key
            .keys()
            .map(|(c, _)| c.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = categories.len();
        let mut price = vec![None; n * n_months];
        let mut expenditure = vec![None; n * n_months];
        for ((cat, month), (p, e)) in by_key {
            let c = categories.binary_search(&cat).unwrap();
            let m = month.months_since(first) as usize;
            price[c * n_months + m] = p;
            expenditure[c * n_months + m] = e;
        }
        Ok(CategoryPanel {
            categories,
            start: first,
            n_months,
            price,
            expenditure,
            tags: BTreeMap::new(),
        })
    }

    /// Attach exclusion tags; every tagged category must exist in the panel.
    pub fn with_tags(mut self, tags: BTreeMap<CategoryId, BTreeSet<String>>) -> Result<Self> {
        for cat in tags.keys() {
            if self.categories.binary_search(cat).is_err() {
                return Err(Error::UnknownCategory(cat.to_string()));
            }
        }
        self.tags = tags;
        Ok(self)
    }

    pub fn categories(&self) -> &[CategoryId] {
        &self.categories
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn start_month(&self) -> Month {
        self.start
    }

    pub fn end_month(&self) -> Month {
        self.start.offset(self.n_months as i32 - 1)
    }

    pub fn n_months(&self) -> usize {
        self.n_months
    }

    pub fn months(&self) -> impl Iterator<Item = Month> + '_ {
        (0..self.n_months).map(|i| self.start.offset(i as i32))
    }

    pub fn month_index(&self, month: Month) -> Option<usize> {
        let d = month.months_since(self.start);
        (0..self.n_months as i32).contains(&d).then_some(d as usize)
    }

    pub fn category_index(&self, id: &CategoryId) -> Option<usize> {
        self.categories.binary_search(id).ok()
    }

    pub fn price(&self, id: &CategoryId, month: Month) -> Option<f64> {
        let c = self.category_index(id)?;
        let m = self.month_index(month)?;
        self.price_at(c, m)
    }

    pub fn expenditure(&self, id: &CategoryId, month: Month) -> Option<f64> {
        let c = self.category_index(id)?;
        let m = self.month_index(month)?;
        self.expenditure_at(c, m)
    }

    pub(crate) fn price_at(&self, cat: usize, month: usize) -> Option<f64> {
        self.price[cat * self.n_months + month]
    }

    pub(crate) fn expenditure_at(&self, cat: usize, month: usize) -> Option<f64> {
        self.expenditure[cat * self.n_months + month]
    }

    pub fn tags_of(&self, id: &CategoryId) -> Option<&BTreeSet<String>> {
        self.tags.get(id)
    }

    /// All tags appearing anywhere in the panel.
    pub fn tag_vocabulary(&self) -> BTreeSet<String> {
        self.tags.values().flatten().cloned().collect()
    }

    /// Category indices with complete price and expenditure cells at both
    /// `month_idx - 1` and `month_idx`; the per-month active cross-section.
    pub(crate) fn active_at(&self, month_idx: usize) -> Vec<usize> {
        debug_assert!(month_idx >= 1);
        (0..self.categories.len())
            .filter(|&c| {
                self.price_at(c, month_idx - 1).is_some()
                    && self.price_at(c, month_idx).is_some()
                    && self.expenditure_at(c, month_idx - 1).is_some()
                    && self.expenditure_at(c, month_idx).is_some()
            })
            .collect()
    }

    /// Raw two-term expenditure weights over `active` at `month_idx`
    /// (which must have a predecessor). Not normalized.
    pub(crate) fn raw_weights(&self, month_idx: usize, active: &[usize]) -> Result<Vec<f64>> {
        if active.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        let month = self.start.offset(month_idx as i32);
        let mut prev_total = 0.0;
        let mut curr_total = 0.0;
        for &c in active {
            let field_err = |field| Error::MissingCell {
                category: self.categories[c].to_string(),
                month,
                field,
            };
            prev_total += self
                .expenditure_at(c, month_idx - 1)
                .ok_or_else(|| field_err("expenditure(t-1)"))?;
            curr_total += self
                .expenditure_at(c, month_idx)
                .ok_or_else(|| field_err("expenditure(t)"))?;
        }
        if prev_total <= 0.0 || curr_total <= 0.0 {
            return Err(Error::ZeroTotalExpenditure(month));
        }
        active
            .iter()
            .map(|&c| {
                let field_err = |field| Error::MissingCell {
                    category: self.categories[c].to_string(),
                    month,
                    field,
                };
                let p_prev = self
                    .price_at(c, month_idx - 1)
                    .ok_or_else(|| field_err("price(t-1)"))?;
                let p_curr = self
                    .price_at(c, month_idx)
                    .ok_or_else(|| field_err("price(t)"))?;
                let e_prev = self.expenditure_at(c, month_idx - 1).unwrap();
                let e_curr = self.expenditure_at(c, month_idx).unwrap();
                // 1/2 * p_{t-1}q_{t-1} / sum(p_{t-1}q_{t-1})
                //   + 1/2 * p_{t-1}q_t / sum(p_t q_t), with q = e/p.
                Ok(0.5 * e_prev / prev_total + 0.5 * (p_prev / p_curr) * e_curr / curr_total)
            })
            .collect()
    }
}

/// Normalized expenditure weights for one month's cross-section.
#[derive(Debug, Clone)]
pub struct WeightVector {
    pub month: Month,
    weights: BTreeMap<CategoryId, f64>,
}

impl WeightVector {
    pub fn weights(&self) -> &BTreeMap<CategoryId, f64> {
        &self.weights
    }

    pub fn get(&self, id: &CategoryId) -> Option<f64> {
        self.weights.get(id).copied()
    }
}

fn parse_field(s: &str, line: u64, what: &str) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| Error::MalformedRow {
        line,
        reason: format!("non-numeric {what}: {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow {
            line,
            reason: format!("non-finite {what}: {s:?}"),
        });
    }
    Ok(Some(v))
}

/// Parse a panel from CSV with header
/// `date,category_id,price_index,nominal_expenditure`. Empty numeric
/// fields mark missing cells; one row per (category, month).
pub fn load_panel<R: Read>(reader: R) -> Result<CategoryPanel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let expected = ["date", "category_id", "price_index", "nominal_expenditure"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut cells = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let month: Month = record[0].trim().parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("bad date {:?}", &record[0]),
        })?;
        let category = CategoryId::new(record[1].trim());
        if category.as_str().is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty category_id".into(),
            });
        }
        let price = parse_field(&record[2], line, "price_index")?;
        let expenditure = parse_field(&record[3], line, "nominal_expenditure")?;
        if let Some(p) = price {
            if p <= 0.0 {
                return Err(Error::NonPositivePrice {
                    category: category.to_string(),
                    month,
                    value: p,
                });
            }
        }
        if let Some(e) = expenditure {
            if e < 0.0 {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("negative nominal_expenditure {e}"),
                });
            }
        }
        cells.push(PanelCell {
            category,
            month,
            price,
            expenditure,
        });
    }
    CategoryPanel::from_cells(cells)
}

/// Parse a tag file with header `category_id,tag`; repeated rows add tags.
pub fn load_tags<R: Read>(reader: R) -> Result<BTreeMap<CategoryId, BTreeSet<String>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["category_id", "tag"] {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut tags: BTreeMap<CategoryId, BTreeSet<String>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 || record[0].trim().is_empty() || record[1].trim().is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "expected non-empty category_id,tag".into(),
            });
        }
        tags.entry(CategoryId::new(record[0].trim()))
            .or_default()
            .insert(record[1].trim().to_string());
    }
    Ok(tags)
}

/// Gross monthly price relatives `p_t / p_{t-1}` for one category.
/// The first panel month carries no rate; a missing price at `t` or
/// `t-1` leaves the rate missing at `t`.
pub fn monthly_rates(panel: &CategoryPanel, category: &CategoryId) -> Result<MonthSeries> {
    let c = panel
        .category_index(category)
        .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
    if panel.n_months() < 2 {
        return Err(Error::InsufficientHistory(
            "panel covers fewer than 2 months".into(),
        ));
    }
    let n_prices = (0..panel.n_months())
        .filter(|&m| panel.price_at(c, m).is_some())
        .count();
    if n_prices < 2 {
        return Err(Error::InsufficientHistory(format!(
            "category {category} has {n_prices} price observation(s)"
        )));
    }
    let values = (1..panel.n_months())
        .map(|m| match (panel.price_at(c, m - 1), panel.price_at(c, m)) {
            (Some(prev), Some(curr)) => Some(curr / prev),
            _ => None,
        })
        .collect();
    Ok(MonthSeries::new(panel.start_month().next(), values))
}

/// Normalized expenditure weights over `active` at `month`.
///
/// The raw two-term weights need not sum to one (the second term mixes
/// `p_{t-1}` in the numerator with a `p_t` denominator), so they are
/// renormalized over the active set before use.
pub fn trim_weights(
    panel: &CategoryPanel,
    month: Month,
    active: &BTreeSet<CategoryId>,
) -> Result<WeightVector> {
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let m = panel
        .month_index(month)
        .ok_or(Error::NoPredecessor(month))?;
    if m == 0 {
        return Err(Error::NoPredecessor(month));
    }
    let mut idx = Vec::with_capacity(active.len());
    for cat in active {
        let c = panel
            .category_index(cat)
            .ok_or_else(|| Error::UnknownCategory(cat.to_string()))?;
        idx.push(c);
    }
    let raw = panel.raw_weights(m, &idx)?;
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroTotalExpenditure(month));
    }
    let weights = idx
        .iter()
        .zip(&raw)
        .map(|(&c, &w)| (panel.categories()[c].clone(), w / total))
        .collect();
    Ok(WeightVector { month, weights })
}

/// Restrict the panel to categories carrying none of the excluded tags.
pub fn apply_exclusions(
    panel: &CategoryPanel,
    excluded_tags: &BTreeSet<String>,
) -> Result<CategoryPanel> {
    let vocabulary = panel.tag_vocabulary();
    for tag in excluded_tags {
        if !vocabulary.contains(tag) {
            return Err(Error::UnknownTag(tag.clone()));
        }
    }
    let keep: Vec<usize> = (0..panel.n_categories())
        .filter(|&c| {
            panel
                .tags_of(&panel.categories()[c])
                .map_or(true, |tags| tags.is_disjoint(excluded_tags))
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::AllCategoriesExcluded);
    }
    let n_months = panel.n_months();
    let mut price = Vec::with_capacity(keep.len() * n_months);
    let mut expenditure = Vec::with_capacity(keep.len() * n_months);
    let mut categories = Vec::with_capacity(keep.len());
    let mut tags = BTreeMap::new();
    for &c in &keep {
        let id = panel.categories()[c].clone();
        if let Some(t) = panel.tags_of(&id) {
            tags.insert(id.clone(), t.clone());
        }
        categories.push(id);
        for m in 0..n_months {
            price.push(panel.price_at(c, m));
            expenditure.push(panel.expenditure_at(c, m));
        }
    }
    Ok(CategoryPanel {
        categories,
        start: panel.start_month(),
        n_months,
        price,
        expenditure,
        tags,
    })
}

/// Which cell field is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellField {
    Price,
    Expenditure,
}

impl std::fmt::Display for CellField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellField::Price => "price",
            CellField::Expenditure => "expenditure",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingCellRef {
    pub category: CategoryId,
    pub month: Month,
    pub field: CellField,
}

/// Per-month panel diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthDiagnostics {
    pub month: Month,
    /// Categories with a present, strictly positive expenditure this month.
    pub positive_expenditure: usize,
    /// Categories whose price is exactly unchanged from the prior month.
    /// Zero for the first panel month (no prior price).
    pub zero_change: usize,
    /// Current-month expenditure share of the zero-change categories.
    pub zero_change_share: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub rows: Vec<MonthDiagnostics>,
    pub missing: Vec<MissingCellRef>,
}

/// Report-only diagnostics: positive-expenditure counts, zero-price-change
/// counts and shares, and the list of missing cells.
pub fn validate(panel: &CategoryPanel) -> ValidationReport {
    let mut rows = Vec::with_capacity(panel.n_months());
    let mut missing = Vec::new();
    for m in 0..panel.n_months() {
        let month = panel.start_month().offset(m as i32);
        let mut positive = 0usize;
        let mut zero_change = 0usize;
        let mut zero_change_exp = 0.0;
        let mut total_exp = 0.0;
        for c in 0..panel.n_categories() {
            match panel.expenditure_at(c, m) {
                Some(e) => {
                    if e > 0.0 {
                        positive += 1;
                    }
                    total_exp += e;
                }
                None => missing.push(MissingCellRef {
                    category: panel.categories()[c].clone(),
                    month,
                    field: CellField::Expenditure,
                }),
            }
            let price = panel.price_at(c, m);
            if price.is_none() {
                missing.push(MissingCellRef {
                    category: panel.categories()[c].clone(),
                    month,
                    field: CellField::Price,
                });
            }
            if m >= 1 {
                if let (Some(prev), Some(curr)) = (panel.price_at(c, m - 1), price) {
                    if prev == curr {
                        zero_change += 1;
                        zero_change_exp += panel.expenditure_at(c, m).unwrap_or(0.0);
                    }
                }
            }
        }
        let zero_change_share = if total_exp > 0.0 {
            zero_change_exp / total_exp
        } else {
            0.0
        };
        rows.push(MonthDiagnostics {
            month,
            positive_expenditure: positive,
            zero_change,
            zero_change_share,
        });
    }
    ValidationReport { rows, missing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(y: i32, mo: u32) -> Month {
        Month::new(y, mo).unwrap()
    }

    fn csv_panel(body: &str) -> Result<CategoryPanel> {
        let text = format!("date,category_id,price_index,nominal_expenditure\n{body}");
        load_panel(text.as_bytes())
    }

    /// 2 categories x 3 months, complete.
    fn small_panel() -> CategoryPanel {
        csv_panel(
            "1960-01,a,100,10\n\
             1960-02,a,101,10\n\
             1960-03,a,101,11\n\
             1960-01,b,50,30\n\
             1960-02,b,51,30\n\
             1960-03,b,49,29\n",
        )
        .unwrap()
    }

    #[test]
    fn load_well_formed_panel() {
        let p = small_panel();
        assert_eq!(p.n_categories(), 2);
        assert_eq!(p.n_months(), 3);
        assert_eq!(p.start_month(), m(1960, 1));
        assert_eq!(p.price(&"a".into(), m(1960, 2)), Some(101.0));
        assert_eq!(p.expenditure(&"b".into(), m(1960, 3)), Some(29.0));
    }

    #[test]
    fn zero_price_rejected() {
        let err = csv_panel("1960-01,a,0,10\n").unwrap_err();
        assert!(matches!(err, Error::NonPositivePrice { .. }), "{err}");
    }

    #[test]
    fn month_gap_rejected() {
        let err = csv_panel(
            "1960-01,a,100,10\n\
             1960-03,a,101,10\n",
        )
        .unwrap_err();
        match err {
            Error::NonContiguousMonths { missing, .. } => assert_eq!(missing, m(1960, 2)),
            other => panic!("expected NonContiguousMonths, got {other}"),
        }
    }

    #[test]
    fn duplicate_cell_rejected() {
        let err = csv_panel(
            "1960-01,a,100,10\n\
             1960-01,a,100,10\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateCell { .. }), "{err}");
    }

    #[test]
    fn malformed_rows_rejected() {
        assert!(matches!(
            csv_panel("1960,a,100,10\n").unwrap_err(),
            Error::MalformedRow { .. }
        ));
        assert!(matches!(
            csv_panel("1960-01,a,abc,10\n").unwrap_err(),
            Error::MalformedRow { .. }
        ));
        assert!(matches!(
            csv_panel("1960-01,a,100,-3\n").unwrap_err(),
            Error::MalformedRow { .. }
        ));
        let bad_header = load_panel("date,cat,price,exp\n".as_bytes()).unwrap_err();
        assert!(matches!(bad_header, Error::MalformedRow { line: 1, .. }));
    }

    #[test]
    fn empty_fields_are_missing_cells() {
        let p = csv_panel(
            "1960-01,a,100,10\n\
             1960-02,a,,10\n",
        )
        .unwrap();
        assert_eq!(p.price(&"a".into(), m(1960, 2)), None);
        assert_eq!(p.expenditure(&"a".into(), m(1960, 2)), Some(10.0));
    }

    #[test]
    fn rates_direct_ratio() {
        let p = csv_panel(
            "1960-01,a,100,1\n\
             1960-02,a,101,1\n\
             1960-03,a,101,1\n",
        )
        .unwrap();
        let r = monthly_rates(&p, &"a".into()).unwrap();
        assert_eq!(r.start(), m(1960, 2));
        assert_relative_eq!(r.get(m(1960, 2)).unwrap(), 1.01, max_relative = 1e-12);
        assert_relative_eq!(r.get(m(1960, 3)).unwrap(), 1.00, max_relative = 1e-12);
    }

    #[test]
    fn rates_constant_prices() {
        let p = csv_panel(
            "1960-01,a,7,1\n\
             1960-02,a,7,1\n\
             1960-03,a,7,1\n",
        )
        .unwrap();
        let r = monthly_rates(&p, &"a".into()).unwrap();
        assert!(r.present().all(|(_, v)| v == 1.0));
    }

    #[test]
    fn rates_hand_arithmetic() {
        let p = csv_panel(
            "1960-01,a,2.0,1\n\
             1960-02,a,2.2,1\n\
             1960-03,a,1.98,1\n",
        )
        .unwrap();
        let r = monthly_rates(&p, &"a".into()).unwrap();
        assert_relative_eq!(r.get(m(1960, 2)).unwrap(), 1.10, max_relative = 1e-12);
        assert_relative_eq!(r.get(m(1960, 3)).unwrap(), 0.90, max_relative = 1e-12);
    }

    #[test]
    fn rates_missing_propagates() {
        let p = csv_panel(
            "1960-01,a,100,1\n\
             1960-02,a,,1\n\
             1960-03,a,101,1\n\
             1960-04,a,102,1\n",
        )
        .unwrap();
        let r = monthly_rates(&p, &"a".into()).unwrap();
        assert_eq!(r.get(m(1960, 2)), None);
        assert_eq!(r.get(m(1960, 3)), None);
        assert!(r.get(m(1960, 4)).is_some());
    }

    #[test]
    fn rates_errors() {
        let p = small_panel();
        assert!(matches!(
            monthly_rates(&p, &"zzz".into()).unwrap_err(),
            Error::UnknownCategory(_)
        ));
        let short = csv_panel(
            "1960-01,a,100,1\n\
             1960-02,a,,1\n\
             1960-03,a,,1\n",
        )
        .unwrap();
        assert!(matches!(
            monthly_rates(&short, &"a".into()).unwrap_err(),
            Error::InsufficientHistory(_)
        ));
    }

    fn active(ids: &[&str]) -> BTreeSet<CategoryId> {
        ids.iter().map(|s| CategoryId::from(*s)).collect()
    }

    #[test]
    fn weights_reduce_to_expenditure_shares_under_constant_prices() {
        let p = csv_panel(
            "1960-01,a,1,1\n\
             1960-02,a,1,1\n\
             1960-01,b,1,3\n\
             1960-02,b,1,3\n",
        )
        .unwrap();
        let w = trim_weights(&p, m(1960, 2), &active(&["a", "b"])).unwrap();
        assert_relative_eq!(w.get(&"a".into()).unwrap(), 0.25, max_relative = 1e-12);
        assert_relative_eq!(w.get(&"b".into()).unwrap(), 0.75, max_relative = 1e-12);
    }

    #[test]
    fn weights_two_term_formula() {
        // p_{t-1}=(1,2), q_{t-1}=(10,5), p_t=(1.1,2.0), q_t=(9,6)
        // expenditures: e_{t-1}=(10,10), e_t=(9.9,12)
        let p = csv_panel(
            "1960-01,a,1,10\n\
             1960-02,a,1.1,9.9\n\
             1960-01,b,2,10\n\
             1960-02,b,2.0,12\n",
        )
        .unwrap();
        let w = trim_weights(&p, m(1960, 2), &active(&["a", "b"])).unwrap();
        // raw: (0.25 + 4.5/21.9, 0.25 + 6/21.9) = (0.455479, 0.523973)
        // normalized: 133/286, 153/286
        assert_relative_eq!(w.get(&"a".into()).unwrap(), 133.0 / 286.0, max_relative = 1e-10);
        assert_relative_eq!(w.get(&"b".into()).unwrap(), 153.0 / 286.0, max_relative = 1e-10);
        let sum: f64 = w.weights().values().sum();
        assert_relative_eq!(sum, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn single_active_category_gets_unit_weight() {
        let p = small_panel();
        let w = trim_weights(&p, m(1960, 2), &active(&["b"])).unwrap();
        assert_eq!(w.get(&"b".into()).unwrap(), 1.0);
    }

    #[test]
    fn zero_expenditure_gets_zero_weight() {
        let p = csv_panel(
            "1960-01,a,1,0\n\
             1960-02,a,1,0\n\
             1960-01,b,1,3\n\
             1960-02,b,1,3\n",
        )
        .unwrap();
        let w = trim_weights(&p, m(1960, 2), &active(&["a", "b"])).unwrap();
        assert_eq!(w.get(&"a".into()).unwrap(), 0.0);
        assert_eq!(w.get(&"b".into()).unwrap(), 1.0);
    }

    #[test]
    fn weights_errors() {
        let p = small_panel();
        assert!(matches!(
            trim_weights(&p, m(1960, 2), &BTreeSet::new()).unwrap_err(),
            Error::EmptyActiveSet
        ));
        assert!(matches!(
            trim_weights(&p, m(1960, 1), &active(&["a"])).unwrap_err(),
            Error::NoPredecessor(_)
        ));
        let gappy = csv_panel(
            "1960-01,a,100,\n\
             1960-02,a,101,10\n",
        )
        .unwrap();
        assert!(matches!(
            trim_weights(&gappy, m(1960, 2), &active(&["a"])).unwrap_err(),
            Error::MissingCell { .. }
        ));
    }

    fn tagged_panel() -> CategoryPanel {
        let p = csv_panel(
            "1960-01,a,1,1\n\
             1960-02,a,1.1,1\n\
             1960-01,b,1,2\n\
             1960-02,b,1.2,2\n\
             1960-01,c,1,3\n\
             1960-02,c,1.3,3\n",
        )
        .unwrap();
        let tags = load_tags(
            "category_id,tag\n\
             c,energy\n"
                .as_bytes(),
        )
        .unwrap();
        p.with_tags(tags).unwrap()
    }

    #[test]
    fn exclusions_identity_and_filter() {
        let p = tagged_panel();
        let same = apply_exclusions(&p, &BTreeSet::new()).unwrap();
        assert_eq!(same.categories(), p.categories());

        let excluded: BTreeSet<String> = ["energy".to_string()].into();
        let reduced = apply_exclusions(&p, &excluded).unwrap();
        assert_eq!(reduced.n_categories(), 2);
        assert!(reduced.category_index(&"c".into()).is_none());
    }

    #[test]
    fn exclusion_errors() {
        let p = tagged_panel();
        let unknown: BTreeSet<String> = ["plutonium".to_string()].into();
        assert!(matches!(
            apply_exclusions(&p, &unknown).unwrap_err(),
            Error::UnknownTag(_)
        ));

        let all = load_tags(
            "category_id,tag\n\
             a,x\nb,x\nc,x\n"
                .as_bytes(),
        )
        .unwrap();
        let p2 = tagged_panel().with_tags(all).unwrap();
        let x: BTreeSet<String> = ["x".to_string()].into();
        assert!(matches!(
            apply_exclusions(&p2, &x).unwrap_err(),
            Error::AllCategoriesExcluded
        ));
    }

    #[test]
    fn exclusion_then_weights_matches_reduced_panel() {
        let p = tagged_panel();
        let excluded: BTreeSet<String> = ["energy".to_string()].into();
        let reduced = apply_exclusions(&p, &excluded).unwrap();
        let act = active(&["a", "b"]);
        let w_reduced = trim_weights(&reduced, m(1960, 2), &act).unwrap();
        let w_manual = trim_weights(&p, m(1960, 2), &act).unwrap();
        for id in &act {
            assert_relative_eq!(
                w_reduced.get(id).unwrap(),
                w_manual.get(id).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn validate_counts_constant_prices() {
        let p = csv_panel(
            "1960-01,a,5,1\n\
             1960-02,a,5,1\n\
             1960-03,a,5,1\n\
             1960-01,b,9,1\n\
             1960-02,b,9,1\n\
             1960-03,b,9,1\n",
        )
        .unwrap();
        let report = validate(&p);
        for row in &report.rows[1..] {
            assert_eq!(row.zero_change, 2);
            assert_relative_eq!(row.zero_change_share, 1.0, max_relative = 1e-12);
        }
        assert!(report.missing.is_empty());
    }

    #[test]
    fn validate_reports_missing_cell_and_changed_price() {
        let p = csv_panel(
            "1960-01,a,5,1\n\
             1960-02,a,6,1\n\
             1960-01,b,9,1\n\
             1960-02,b,9,1\n\
             1960-01,c,4,1\n\
             1960-02,c,4,\n",
        )
        .unwrap();
        let report = validate(&p);
        // month 2: a changed, b and c flat
        assert_eq!(report.rows[1].zero_change, 2);
        assert_eq!(report.rows[1].positive_expenditure, 2);
        assert_eq!(
            report.missing,
            vec![MissingCellRef {
                category: "c".into(),
                month: m(1960, 2),
                field: CellField::Expenditure,
            }]
        );
    }
}
