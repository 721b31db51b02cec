use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::logpos::LogPos;

/// A half-open interval `[lo, hi)`. Serialized as `[lo, hi]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(Coord, Coord)", into = "(Coord, Coord)")]
pub struct Interval {
    pub lo: Coord,
    pub hi: Coord,
}

impl From<(Coord, Coord)> for Interval {
    fn from((lo, hi): (Coord, Coord)) -> Interval {
        Interval { lo, hi }
    }
}

impl From<Interval> for (Coord, Coord) {
    fn from(i: Interval) -> (Coord, Coord) {
        (i.lo, i.hi)
    }
}

impl Interval {
    pub fn new(lo: impl Into<Coord>, hi: impl Into<Coord>) -> Interval {
        Interval { lo: lo.into(), hi: hi.into() }
    }

    /// Like [`Interval::new`] but rejects reversed endpoints.
    pub fn checked(lo: Coord, hi: Coord) -> Result<Interval> {
        if hi < lo {
            return Err(Error::InvalidArgument(format!("reversed interval [{lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> Coord {
        self.hi - self.lo
    }

    /// Length as a log-domain value (zero for empty intervals).
    pub fn measure(&self) -> LogPos {
        if self.hi <= self.lo {
            return LogPos::ZERO;
        }
        LogPos::from_log2(self.len().log2_abs())
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains_point(&self, x: Coord) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        Interval { lo, hi: hi.max(lo) }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Disjoint as half-open sets.
    pub fn disjoint(&self, other: &Interval) -> bool {
        self.hi <= other.lo || other.hi <= self.lo
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
