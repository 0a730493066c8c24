use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use super::GeoError;

/// Half-open time range `[start, end)` in seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: i64,
    pub end: i64,
}

impl TimeInterval {
    /// Covers every representable instant; identity for [`TimeInterval::intersection`].
    pub const ALWAYS: TimeInterval = TimeInterval { start: i64::MIN, end: i64::MAX };
    pub const EMPTY: TimeInterval = TimeInterval { start: 0, end: 0 };

    /// `start == end` collapses to [`TimeInterval::EMPTY`].
    pub fn new(start: i64, end: i64) -> Result<Self, GeoError> {
        match start.cmp(&end) {
            std::cmp::Ordering::Greater => Err(GeoError::InvalidInterval { start, end }),
            std::cmp::Ordering::Equal => Ok(Self::EMPTY),
            std::cmp::Ordering::Less => Ok(Self { start, end }),
        }
    }

    /// `[Y-01-01T00:00Z, (Y+1)-01-01T00:00Z)`.
    pub fn year(year: i32) -> Self {
        Self::years(year, year)
    }

    /// Calendar years `first..=last`, as printed in a "2017–2024" range.
    pub fn years(first: i32, last: i32) -> Self {
        TimeInterval { start: year_start(first), end: year_start(last + 1) }
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn intersection(&self, other: &TimeInterval) -> TimeInterval {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        if start >= end {
            Self::EMPTY
        } else {
            TimeInterval { start, end }
        }
    }

    pub fn intersects(&self, other: &TimeInterval) -> bool {
        self.start.max(other.start) < self.end.min(other.end)
    }

    pub fn envelope(&self, other: &TimeInterval) -> TimeInterval {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        TimeInterval { start: self.start.min(other.start), end: self.end.max(other.end) }
    }

    pub fn contains(&self, other: &TimeInterval) -> bool {
        other.is_empty() || (!self.is_empty() && self.start <= other.start && other.end <= self.end)
    }

    /// Calendar years touched by the interval, used by registry year filters.
    pub fn year_span(&self) -> Option<(i32, i32)> {
        if self.is_empty() {
            return None;
        }
        let first = DateTime::from_timestamp(self.start, 0)?.format("%Y").to_string().parse().ok()?;
        let last = DateTime::from_timestamp(self.end - 1, 0)?.format("%Y").to_string().parse().ok()?;
        Some((first, last))
    }
}

pub(crate) fn year_start(year: i32) -> i64 {
    NaiveDate::from_ymd_opt(year, 1, 1)
        .expect("year in chrono range")
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
        .and_utc()
        .timestamp()
}

/// Parses an RFC 3339 / ISO-8601 timestamp with offset into epoch seconds.
pub(crate) fn parse_timestamp(s: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.timestamp())
}
