//! Nonnegative magnitudes stored as base-2 logarithms.
//!
//! The lacunary weights produce quantities like `2^(2k(1-a))/a` with `k` in
//! the tens of thousands, far outside the range of an `f64`. Every positive
//! magnitude in the crate is therefore carried as its `log2`, with
//! `f64::NEG_INFINITY` standing for an exact zero.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A nonnegative real number represented by its base-2 logarithm.
///
/// The bottom element (`log2 = -inf`) is an exact zero. `+inf` is allowed
/// only as the value of a singular power evaluated at its offset.
#[derive(Clone, Copy, PartialEq)]
pub struct LogPos {
    l: f64,
}

impl LogPos {
    pub const ZERO: LogPos = LogPos { l: f64::NEG_INFINITY };
    pub const ONE: LogPos = LogPos { l: 0.0 };
    pub const INFINITY: LogPos = LogPos { l: f64::INFINITY };

    /// Builds a value from its base-2 logarithm. NaN is rejected.
    pub fn from_log2(l: f64) -> LogPos {
        assert!(!l.is_nan(), "LogPos::from_log2 received NaN");
        LogPos { l }
    }

    /// Builds a value from a linear nonnegative number.
    pub fn from_f64(x: f64) -> Result<LogPos> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain(format!("LogPos requires a nonnegative value, got {x}")));
        }
        if x == 0.0 {
            return Ok(LogPos::ZERO);
        }
        Ok(LogPos { l: x.log2() })
    }

    /// Exact powers of two: `2^k`.
    pub fn pow2(k: f64) -> LogPos {
        LogPos::from_log2(k)
    }

    pub fn log2(self) -> f64 {
        self.l
    }

    /// Natural logarithm.
    pub fn ln(self) -> f64 {
        self.l * std::f64::consts::LN_2
    }

    /// Linear value; overflows to `inf` and underflows to `0` outside the
    /// double range.
    pub fn to_f64(self) -> f64 {
        self.l.exp2()
    }

    pub fn is_zero(self) -> bool {
        self.l == f64::NEG_INFINITY
    }

    pub fn is_finite(self) -> bool {
        self.l.is_finite()
    }

    /// Stable sum `max + log2(1 + 2^(min - max))`.
    pub fn add(self, other: LogPos) -> LogPos {
        let (hi, lo) = if self.l >= other.l { (self.l, other.l) } else { (other.l, self.l) };
        if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
            return LogPos { l: hi };
        }
        LogPos { l: hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2 }
    }

    /// Difference `self - other`, clamped at zero when `other >= self`.
    pub fn sub_clamped(self, other: LogPos) -> LogPos {
        if other.l >= self.l {
            return LogPos::ZERO;
        }
        if other.l == f64::NEG_INFINITY {
            return self;
        }
        let d = other.l - self.l;
        // 1 - 2^d computed without cancellation.
        let one_minus = -(d * std::f64::consts::LN_2).exp_m1();
        LogPos { l: self.l + one_minus.log2() }
    }

    /// `self^t`. Zero raised to a positive power stays zero.
    pub fn powf(self, t: f64) -> LogPos {
        if self.is_zero() {
            return match t.partial_cmp(&0.0) {
                Some(Ordering::Greater) => LogPos::ZERO,
                Some(Ordering::Equal) => LogPos::ONE,
                _ => LogPos::INFINITY,
            };
        }
        LogPos { l: self.l * t }
    }

    pub fn sqrt(self) -> LogPos {
        LogPos { l: self.l * 0.5 }
    }

    /// Multiplicative inverse. Zero has none.
    pub fn recip(self) -> Result<LogPos> {
        if self.is_zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        Ok(LogPos { l: -self.l })
    }

    pub fn max(self, other: LogPos) -> LogPos {
        if other.l > self.l {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: LogPos) -> LogPos {
        if other.l < self.l {
            other
        } else {
            self
        }
    }

    /// Total order on the logarithms (no NaN can be stored).
    pub fn total_cmp(&self, other: &LogPos) -> Ordering {
        self.l.partial_cmp(&other.l).unwrap_or(Ordering::Equal)
    }

    /// Sum of many values, accumulated in double-double precision.
    pub fn sum<I: IntoIterator<Item = LogPos>>(iter: I) -> LogPos {
        let mut acc = crate::acc::Acc::ZERO;
        for v in iter {
            acc = acc.add(crate::acc::Acc::from_logpos(v));
        }
        acc.to_logpos()
    }
}

impl Mul for LogPos {
    type Output = LogPos;
    fn mul(self, rhs: LogPos) -> LogPos {
        if self.is_zero() || rhs.is_zero() {
            return LogPos::ZERO;
        }
        LogPos { l: self.l + rhs.l }
    }
}

impl Div for LogPos {
    type Output = LogPos;
    /// Division; dividing by zero yields `+inf` unless the numerator is zero.
    fn div(self, rhs: LogPos) -> LogPos {
        if self.is_zero() {
            return LogPos::ZERO;
        }
        LogPos { l: self.l - rhs.l }
    }
}

impl PartialOrd for LogPos {
    fn partial_cmp(&self, other: &LogPos) -> Option<Ordering> {
        self.l.partial_cmp(&other.l)
    }
}

impl fmt::Debug for LogPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogPos(2^{})", self.l)
    }
}

impl fmt::Display for LogPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.l.abs() < 1000.0 {
            write!(f, "{:e}", self.to_f64())
        } else {
            write!(f, "2^{}", self.l)
        }
    }
}

/// Serialized as the base-2 logarithm; zero becomes `null` since JSON has
/// no infinities.
impl Serialize for LogPos {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.l.is_finite() {
            s.serialize_some(&self.l)
        } else if self.l > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_none()
        }
    }
}

impl<'de> Deserialize<'de> for LogPos {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<LogPos, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Option::<Repr>::deserialize(d)? {
            None => Ok(LogPos::ZERO),
            Some(Repr::Num(l)) => Ok(LogPos { l }),
            Some(Repr::Text(t)) if t == "inf" => Ok(LogPos::INFINITY),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("bad log2 value {t}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_matches_linear_sum() {
        let a = LogPos::from_f64(3.0).unwrap();
        let b = LogPos::from_f64(5.0).unwrap();
        assert!((a.add(b).to_f64() - 8.0).abs() < 1e-14);
        assert_eq!(a.add(b), b.add(a));
    }

    #[test]
    fn zero_is_additive_identity() {
        let a = LogPos::from_log2(-40000.5);
        assert_eq!(a.add(LogPos::ZERO), a);
        assert_eq!(LogPos::ZERO.add(a), a);
        assert!((a * LogPos::ZERO).is_zero());
    }

    #[test]
    fn huge_magnitudes_stay_representable() {
        let a = LogPos::from_log2(70000.0);
        let b = LogPos::from_log2(69999.0);
        assert!((a.add(b).log2() - (70000.0 + 1.5f64.log2())).abs() < 1e-10);
        assert!((a.sub_clamped(b).log2() - 69999.0).abs() < 1e-10);
    }

    #[test]
    fn linear_round_trip_is_exact_for_powers_of_two_and_close_otherwise() {
        for x in [1e-300, 0.1, 1.0, 7.25, 1e300] {
            let y = LogPos::from_f64(x).unwrap().to_f64();
            assert!(((y - x) / x).abs() < 1e-13, "{x} -> {y}");
        }
        assert_eq!(LogPos::from_f64(0.25).unwrap().to_f64(), 0.25);
    }

    #[test]
    fn negative_input_is_rejected() {
        assert!(LogPos::from_f64(-1.0).is_err());
    }

    #[test]
    fn serde_encodes_zero_as_null() {
        let s = serde_json::to_string(&LogPos::ZERO).unwrap();
        assert_eq!(s, "null");
        let z: LogPos = serde_json::from_str(&s).unwrap();
        assert!(z.is_zero());
        let v = LogPos::from_log2(-1234.5678901234567);
        let back: LogPos = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }
}
