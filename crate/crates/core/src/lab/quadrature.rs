//! Numeric integration of single power terms, independent of the closed
//! forms, used by the invariant suite.
//!
//! The integrand is rewritten in the oriented variable `u = +-(x - offset)`,
//! whose endpoints are exact coordinate differences. Narrow ranges are
//! integrated as `int_0^d (1 - s)^p ds` with `d = (u_hi - u_lo) / u_hi`, and
//! ranges reaching close to the offset use `u = u_hi e^-y`, which removes
//! the endpoint singularity. Both integrands are smooth, so Clenshaw-Curtis
//! quadrature converges quickly on them.

use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::piecewise::{Orientation, PowerTerm};

fn cc(f: impl Fn(f64) -> f64, a: f64, b: f64, scale: f64) -> f64 {
    quadrature::clenshaw_curtis::integrate(f, a, b, 1e-14 * scale).integral
}

/// `int_iv c (+-(x - offset))^p dx` by numeric quadrature.
pub fn integrate_term_numeric(term: &PowerTerm, iv: Interval) -> Result<LogPos> {
    if iv.is_empty() || term.coeff.is_zero() {
        return Ok(LogPos::ZERO);
    }
    let (u_lo, u_hi) = match term.orientation {
        Orientation::Ascending => (iv.lo - term.offset, iv.hi - term.offset),
        Orientation::Descending => (term.offset - iv.hi, term.offset - iv.lo),
    };
    if u_lo.is_negative() {
        return Err(Error::Domain(format!("{iv} crosses the offset of the term")));
    }
    let p = term.exponent;
    let width = LogPos::from_log2((u_hi - u_lo).log2_abs());
    if p == 0.0 {
        return Ok(term.coeff * width);
    }
    let q = p + 1.0;
    let d = (u_hi - u_lo).ratio(u_hi);
    // Everything below is relative to c u_hi^q.
    let unit = if d <= 0.5 {
        cc(|s| (1.0 - s).powf(p), 0.0, d, d)
    } else if u_lo.is_zero() {
        if q <= 0.0 {
            return Err(Error::NonIntegrable { exponent: p });
        }
        // e^(-q y) drops below 2^-60 of its start by y = 60 ln 2 / q.
        let y_max = 60.0 * std::f64::consts::LN_2 / q;
        cc(|y| (-q * y).exp(), 0.0, y_max, 1.0 / q)
    } else {
        let y_max = -u_lo.ln_ratio(u_hi);
        let scale = if q > 0.0 { 1.0 / q } else { (-q * y_max).exp() / -q };
        cc(|y| (-q * y).exp(), 0.0, y_max, scale.max(y_max.min(1.0)))
    };
    let log_u_hi = u_hi.log2_abs();
    Ok(term.coeff * LogPos::from_log2(q * log_u_hi) * LogPos::from_f64(unit)?)
}

/// Convenience for terms on plain doubles.
pub fn integrate_power_numeric(c: f64, offset: f64, p: f64, orientation: Orientation, l: f64, r: f64) -> Result<f64> {
    let term = PowerTerm::new(LogPos::from_f64(c)?, Coord::new(offset), p, orientation);
    Ok(integrate_term_numeric(&term, Interval::new(l, r))?.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::integrate_term;

    #[test]
    fn matches_simple_closed_forms() {
        let v = integrate_power_numeric(1.0, 0.0, -0.5, Orientation::Ascending, 0.0, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate_power_numeric(1.0, 0.0, 0.0, Orientation::Ascending, 1.0, 4.0).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        let v = integrate_power_numeric(1.0, 2.0, 1.0, Orientation::Descending, 0.0, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn near_singular_exponent_far_from_zero() {
        let term = PowerTerm::new(LogPos::ONE, Coord::new(0.37), -0.99, Orientation::Ascending);
        let iv = Interval::new(0.37, 0.9);
        let a = integrate_term(&term, iv).unwrap();
        let b = integrate_term_numeric(&term, iv).unwrap();
        assert!((a.log2() - b.log2()).abs() < 1e-9, "{a:?} vs {b:?}");
    }
}
