//! Calendar months and inclusive month ranges.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A calendar year-month, stored as a month count so arithmetic is cheap.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self, Error> {
        if !(1..=12).contains(&month) {
            return Err(Error::BadMonth(format!("{year:04}-{month:02}")));
        }
        Ok(Month(year * 12 + month as i32 - 1))
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    /// The month `n` steps later (negative `n` steps back).
    pub fn offset(self, n: i32) -> Month {
        Month(self.0 + n)
    }

    pub fn next(self) -> Month {
        self.offset(1)
    }

    pub fn prev(self) -> Month {
        self.offset(-1)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(self, earlier: Month) -> i32 {
        self.0 - earlier.0
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl fmt::Debug for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::BadMonth(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Month::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let m: Month = "1960-01".parse().unwrap();
        assert_eq!(m.year(), 1960);
        assert_eq!(m.month(), 1);
        assert_eq!(m.to_string(), "1960-01");
    }

    #[test]
    fn offsets_cross_year_boundaries() {
        let m = Month::new(1999, 11).unwrap();
        assert_eq!(m.offset(3), Month::new(2000, 2).unwrap());
        assert_eq!(m.offset(-11), Month::new(1998, 12).unwrap());
        assert_eq!(m.offset(3).months_since(m), 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!("1960-13".parse::<Month>().is_err());
        assert!("1960".parse::<Month>().is_err());
        assert!("196O-01".parse::<Month>().is_err());
        assert!(Month::new(1960, 0).is_err());
    }

    #[test]
    fn ordering_follows_time() {
        let a = Month::new(1969, 12).unwrap();
        let b = Month::new(1970, 1).unwrap();
        assert!(a < b);
        assert_eq!(b.prev(), a);
    }
}
