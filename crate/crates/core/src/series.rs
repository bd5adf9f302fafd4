//! Month-indexed series with explicit missing values.

use crate::month::Month;
use crate::stats::SampleSpec;

/// A contiguous month-indexed series; `None` marks a missing observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthSeries {
    start: Month,
    values: Vec<Option<f64>>,
}

impl MonthSeries {
    pub fn new(start: Month, values: Vec<Option<f64>>) -> Self {
        MonthSeries { start, values }
    }

    pub fn from_values(start: Month, values: Vec<f64>) -> Self {
        MonthSeries {
            start,
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn constant(start: Month, len: usize, value: f64) -> Self {
        MonthSeries {
            start,
            values: vec![Some(value); len],
        }
    }

    pub fn start(&self) -> Month {
        self.start
    }

    /// Last month of the domain (inclusive); equals `start` for single-month series.
    pub fn end(&self) -> Month {
        self.start.offset(self.values.len() as i32 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, month: Month) -> Option<f64> {
        let idx = month.months_since(self.start);
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Month, Option<f64>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.start.offset(i as i32), *v))
    }

    /// Iterate over the present observations only.
    pub fn present(&self) -> impl Iterator<Item = (Month, f64)> + '_ {
        self.iter().filter_map(|(m, v)| v.map(|x| (m, x)))
    }

    pub fn n_present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Restrict the domain to the sample (intersection; may be empty).
    pub fn restrict(&self, sample: &SampleSpec) -> MonthSeries {
        let lo = sample.start.max(self.start);
        let hi = sample.end.min(self.end());
        if self.is_empty() || lo > hi {
            return MonthSeries::new(self.start, Vec::new());
        }
        let a = lo.months_since(self.start) as usize;
        let b = hi.months_since(self.start) as usize;
        MonthSeries::new(lo, self.values[a..=b].to_vec())
    }

    /// Months where both series have observations, with the paired values.
    pub fn zip_present<'a>(
        &'a self,
        other: &'a MonthSeries,
    ) -> impl Iterator<Item = (Month, f64, f64)> + 'a {
        self.present()
            .filter_map(move |(m, a)| other.get(m).map(|b| (m, a, b)))
    }

    /// Drop leading and trailing missing months.
    pub fn trimmed_domain(&self) -> MonthSeries {
        let first = self.values.iter().position(|v| v.is_some());
        let last = self.values.iter().rposition(|v| v.is_some());
        match (first, last) {
            (Some(a), Some(b)) => {
                MonthSeries::new(self.start.offset(a as i32), self.values[a..=b].to_vec())
            }
            _ => MonthSeries::new(self.start, Vec::new()),
        }
    }
}
