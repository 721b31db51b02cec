//! Real coordinates with an unbounded binary exponent.
//!
//! Breakpoints of the lacunary weight sit at `2^-k` for `k` far beyond the
//! `f64` exponent range, and band-local computations need differences such
//! as `2^-k - 2^-j` to stay exact. A `Coord` is an `f64` mantissa in
//! `[1, 2)` (or its negative) paired with an `i64` exponent.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy)]
pub struct Coord {
    m: f64,
    e: i64,
}

/// Splits a finite nonzero double into `m * 2^e` with `|m|` in `[1, 2)`.
fn split(x: f64) -> (f64, i64) {
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    if exp_bits == 0 {
        let (m, e) = split(x * f64::from_bits((1023u64 + 64) << 52));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (m, exp_bits - 1023)
}

fn pow2_f64(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// `m * 2^e` as a double, saturating to `0` or `inf`.
pub(crate) fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    if e > 2100 {
        return m * f64::INFINITY;
    }
    if e < -2200 {
        return m * 0.0;
    }
    let mut v = m;
    let mut rest = e;
    while rest != 0 {
        let step = rest.clamp(-1000, 1000);
        v *= pow2_f64(step);
        rest -= step;
    }
    v
}

impl Coord {
    pub const ZERO: Coord = Coord { m: 0.0, e: 0 };
    pub const ONE: Coord = Coord { m: 1.0, e: 0 };

    fn norm(m: f64, e: i64) -> Coord {
        if m == 0.0 {
            return Coord::ZERO;
        }
        debug_assert!(m.is_finite());
        let (fm, fe) = split(m);
        Coord { m: fm, e: e + fe }
    }

    /// Converts a finite double. Panics on NaN or infinity, which would be a
    /// programming error upstream.
    pub fn new(x: f64) -> Coord {
        assert!(x.is_finite(), "coordinate must be finite, got {x}");
        Coord::norm(x, 0)
    }

    /// `2^k` exactly, for any `k`.
    pub fn pow2(k: i64) -> Coord {
        Coord { m: 1.0, e: k }
    }

    /// `m * 2^e` for a finite double `m`.
    pub fn from_parts(m: f64, e: i64) -> Coord {
        assert!(m.is_finite(), "mantissa must be finite, got {m}");
        Coord::norm(m, e)
    }

    pub fn mantissa(self) -> f64 {
        self.m
    }

    pub fn exponent(self) -> i64 {
        self.e
    }

    pub fn is_zero(self) -> bool {
        self.m == 0.0
    }

    pub fn is_negative(self) -> bool {
        self.m < 0.0
    }

    pub fn is_positive(self) -> bool {
        self.m > 0.0
    }

    pub fn abs(self) -> Coord {
        Coord { m: self.m.abs(), e: self.e }
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.m, self.e)
    }

    /// True when the value is exactly an ordinary double.
    pub fn is_f64_exact(self) -> bool {
        if self.is_zero() {
            return true;
        }
        let x = self.to_f64();
        x.is_finite() && x != 0.0 && Coord::new(x) == self
    }

    /// `log2 |x|`, `-inf` for zero.
    pub fn log2_abs(self) -> f64 {
        if self.m == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.e as f64 + self.m.abs().log2()
    }

    pub fn mul_pow2(self, k: i64) -> Coord {
        if self.is_zero() {
            return self;
        }
        Coord { m: self.m, e: self.e + k }
    }

    pub fn scale(self, f: f64) -> Coord {
        assert!(f.is_finite());
        Coord::norm(self.m * f, self.e)
    }

    /// `self / other` as a double (saturating). `other` must be nonzero.
    pub fn ratio(self, other: Coord) -> f64 {
        debug_assert!(!other.is_zero());
        ldexp(self.m / other.m, self.e - other.e)
    }

    /// `ln(self / other)` for positive arguments, accurate in relative terms
    /// both when the ratio is near 1 and when it is astronomically small.
    pub fn ln_ratio(self, other: Coord) -> f64 {
        debug_assert!(self.is_positive() && other.is_positive());
        let d = self - other;
        if d.abs() <= other.mul_pow2(-1) {
            d.ratio(other).ln_1p()
        } else {
            ((self.e - other.e) as f64 + (self.m / other.m).log2()) * std::f64::consts::LN_2
        }
    }

    /// `a + t (b - a)`.
    pub fn lerp(a: Coord, b: Coord, t: f64) -> Coord {
        a + (b - a).scale(t)
    }

    pub fn midpoint(a: Coord, b: Coord) -> Coord {
        (a + b).mul_pow2(-1)
    }

    pub fn max(self, other: Coord) -> Coord {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Coord) -> Coord {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for Coord {
    fn from(x: f64) -> Coord {
        Coord::new(x)
    }
}

impl From<i32> for Coord {
    fn from(x: i32) -> Coord {
        Coord::new(x as f64)
    }
}

impl Add for Coord {
    type Output = Coord;
    fn add(self, rhs: Coord) -> Coord {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (x, y) = if self.e >= rhs.e { (self, rhs) } else { (rhs, self) };
        let d = x.e - y.e;
        if d > 120 {
            return x;
        }
        Coord::norm(x.m + ldexp(y.m, -d), x.e)
    }
}

impl Neg for Coord {
    type Output = Coord;
    fn neg(self) -> Coord {
        if self.is_zero() {
            return self;
        }
        Coord { m: -self.m, e: self.e }
    }
}

impl Sub for Coord {
    type Output = Coord;
    fn sub(self, rhs: Coord) -> Coord {
        self + (-rhs)
    }
}

impl Mul for Coord {
    type Output = Coord;
    fn mul(self, rhs: Coord) -> Coord {
        Coord::norm(self.m * rhs.m, self.e + rhs.e)
    }
}

impl PartialEq for Coord {
    fn eq(&self, other: &Coord) -> bool {
        self.m == other.m && (self.e == other.e || self.m == 0.0)
    }
}

impl Eq for Coord {}

impl Hash for Coord {
    fn hash<H: Hasher>(&self, state: &mut H) {
        if self.m == 0.0 {
            0u64.hash(state);
            0i64.hash(state);
        } else {
            self.m.to_bits().hash(state);
            self.e.hash(state);
        }
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Coord) -> Ordering {
        let sa = self.m.partial_cmp(&0.0).unwrap();
        let sb = other.m.partial_cmp(&0.0).unwrap();
        if sa != sb {
            return sa.cmp(&sb);
        }
        match sa {
            Ordering::Equal => Ordering::Equal,
            Ordering::Greater => self.e.cmp(&other.e).then(self.m.partial_cmp(&other.m).unwrap()),
            Ordering::Less => other.e.cmp(&self.e).then(self.m.partial_cmp(&other.m).unwrap()),
        }
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Coord) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e.abs() < 1000 {
            write!(f, "{}", self.to_f64())
        } else {
            write!(f, "{}*2^{}", self.m, self.e)
        }
    }
}

/// Exact doubles serialize as plain JSON numbers; anything outside the
/// double range as `{"mantissa": m, "exp2": e}`.
impl Serialize for Coord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_f64_exact() {
            s.serialize_f64(self.to_f64())
        } else {
            use serde::ser::SerializeStruct;
            let mut st = s.serialize_struct("Coord", 2)?;
            st.serialize_field("mantissa", &self.m)?;
            st.serialize_field("exp2", &self.e)?;
            st.end()
        }
    }
}

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Coord, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Plain(f64),
            Wide { mantissa: f64, exp2: i64 },
        }
        let c = match Repr::deserialize(d)? {
            Repr::Plain(x) => x.is_finite().then(|| Coord::new(x)),
            Repr::Wide { mantissa, exp2 } => {
                mantissa.is_finite().then(|| Coord::from_parts(mantissa, exp2))
            }
        };
        c.ok_or_else(|| serde::de::Error::custom("non-finite coordinate"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_dyadic_differences_are_exact() {
        let k = 40_000;
        let a = Coord::pow2(-k);
        let b = Coord::pow2(-k - 30);
        let d = a - b;
        assert_eq!(d + b, a);
        assert!((d.log2_abs() - (-(k as f64) + (1.0 - 2f64.powi(-30)).log2())).abs() < 1e-9);
    }

    #[test]
    fn ordering_handles_signs_and_exponents() {
        let mut v = vec![
            Coord::new(-3.0),
            Coord::pow2(-5000),
            Coord::ZERO,
            Coord::new(2.5),
            -Coord::pow2(-5000),
        ];
        v.sort();
        assert_eq!(v[0], Coord::new(-3.0));
        assert_eq!(v[1], -Coord::pow2(-5000));
        assert_eq!(v[2], Coord::ZERO);
        assert_eq!(v[3], Coord::pow2(-5000));
    }

    #[test]
    fn ratio_and_log_ratio() {
        let a = Coord::new(3.0).mul_pow2(-3000);
        let b = Coord::new(1.5).mul_pow2(-3001);
        assert_eq!(a.ratio(b), 4.0);
        assert!((a.ln_ratio(b) - 4f64.ln()).abs() < 1e-15);
        let c = a + Coord::new(1e-12).mul_pow2(-3000);
        assert!((c.ln_ratio(a) - (c - a).ratio(a).ln_1p()).abs() < 1e-27);
        assert!((c.ln_ratio(a) - 1e-12 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn subnormal_inputs_normalize() {
        let tiny = f64::from_bits(1);
        let c = Coord::new(tiny);
        assert_eq!(c.exponent(), -1074);
        assert_eq!(c.to_f64(), tiny);
    }

    #[test]
    fn serde_round_trip_in_both_encodings() {
        for c in [Coord::new(0.3), Coord::pow2(-70_000).scale(1.25), Coord::ZERO, Coord::new(-7.0)] {
            let s = serde_json::to_string(&c).unwrap();
            let back: Coord = serde_json::from_str(&s).unwrap();
            assert_eq!(back, c, "{s}");
        }
        assert_eq!(serde_json::to_string(&Coord::new(0.5)).unwrap(), "0.5");
    }
}
