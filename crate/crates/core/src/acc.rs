//! Double-double accumulator with an unbounded exponent.
//!
//! Prefix integrals are stored in this form so that the integral over a run
//! of pieces, computed as a difference of two prefixes, keeps full double
//! precision even when the run carries a small fraction of the total mass.

use crate::coord::ldexp;
use crate::logpos::LogPos;

/// `(hi + lo) * 2^e` with `|hi|` in `[1, 2)` unless the value is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Acc {
    hi: f64,
    lo: f64,
    e: i64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Acc {
    pub const ZERO: Acc = Acc { hi: 0.0, lo: 0.0, e: 0 };

    fn normalized(hi: f64, lo: f64, e: i64) -> Acc {
        let (hi, lo) = fast_two_sum(hi, lo);
        if hi == 0.0 {
            return Acc::ZERO;
        }
        let bits = hi.to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        // Values here are never subnormal: inputs are scaled near 1.
        let shift = exp_bits - 1023;
        Acc { hi: ldexp(hi, -shift), lo: ldexp(lo, -shift), e: e + shift }
    }

    pub fn from_logpos(v: LogPos) -> Acc {
        if v.is_zero() {
            return Acc::ZERO;
        }
        let l = v.log2();
        let fl = l.floor();
        Acc::normalized((l - fl).exp2(), 0.0, fl as i64)
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    pub fn neg(self) -> Acc {
        Acc { hi: -self.hi, lo: -self.lo, e: self.e }
    }

    pub fn add(self, o: Acc) -> Acc {
        if self.hi == 0.0 {
            return o;
        }
        if o.hi == 0.0 {
            return self;
        }
        let e = self.e.max(o.e);
        let d1 = self.e - e;
        let d2 = o.e - e;
        if d1 < -1100 {
            return o;
        }
        if d2 < -1100 {
            return self;
        }
        let (h1, l1) = (ldexp(self.hi, d1), ldexp(self.lo, d1));
        let (h2, l2) = (ldexp(o.hi, d2), ldexp(o.lo, d2));
        let (s, err) = two_sum(h1, h2);
        let err = err + l1 + l2;
        Acc::normalized(s, err, e)
    }

    pub fn sub(self, o: Acc) -> Acc {
        self.add(o.neg())
    }

    /// Converts to a log-domain value; negative results (from rounding in a
    /// difference of equal prefixes) clamp to zero.
    pub fn to_logpos(self) -> LogPos {
        if self.hi <= 0.0 {
            return LogPos::ZERO;
        }
        let l = self.e as f64 + self.hi.log2() + (self.lo / self.hi).ln_1p() / std::f64::consts::LN_2;
        LogPos::from_log2(l)
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.hi + self.lo, self.e)
    }
}
