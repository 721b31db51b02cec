//! Helpers shared by the integration suites.
#![allow(dead_code)]

use a2lab_core::piecewise::{Orientation, PowerTerm};
use a2lab_core::{Coord, Interval, LogPos};

fn de(f: impl Fn(f64) -> f64, a: f64, b: f64, scale: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, 1e-15 * scale).integral
}

/// `int_lo^1 v^p dv`, summed over the dyadic levels `[2^-(j+1), 2^-j]`. Each
/// level is mapped onto `[1/2, 1]` (it contributes `2^(-j(p+1))` times the
/// integral there), so tanh-sinh only ever sees a smooth integrand. With
/// `lo = 0` the sum stops once a level adds less than `1e-18` of the total;
/// the levels decay geometrically, so the rest is below `1e-16` for
/// `p > -0.99`.
fn unit_power_integral(p: f64, lo: f64) -> f64 {
    let q = p + 1.0;
    let log_lo = if lo > 0.0 { lo.log2() } else { f64::NEG_INFINITY };
    let mut sum = 0.0;
    let mut j = 0.0;
    loop {
        let bottom = (log_lo + j).exp2().max(0.5);
        let part = (-j * q).exp2() * de(|s| s.powf(p), bottom, 1.0, 1.0);
        sum += part;
        if bottom > 0.5 || (lo == 0.0 && part < 1e-18 * sum) || log_lo + j >= -1.0 {
            return sum;
        }
        j += 1.0;
    }
}

/// Reference integral of one power term, returned as `log2`. The range is
/// rescaled to the oriented variable `u / u_hi`, whose integral is a plain
/// double; the coefficient is applied in the log domain.
pub fn term_integral_oracle_log2(term: &PowerTerm, iv: Interval) -> f64 {
    let (u_lo, u_hi) = match term.orientation {
        Orientation::Ascending => (iv.lo - term.offset, iv.hi - term.offset),
        Orientation::Descending => (term.offset - iv.hi, term.offset - iv.lo),
    };
    let top = u_hi.log2_abs();
    let lo = if u_lo.is_zero() { 0.0 } else { (u_lo.log2_abs() - top).exp2() };
    let p = term.exponent;
    let unit = if lo > 0.5 {
        // Narrow range: integrate over the distance from the top, so the
        // width keeps full relative precision.
        let d = (u_hi - u_lo).ratio(u_hi);
        de(|s| (1.0 - s).powf(p), 0.0, d, d)
    } else {
        unit_power_integral(p, lo)
    };
    term.coeff.log2() + (p + 1.0) * top + unit.log2()
}

/// `|log2 a - log2 b|` measured in units of the natural log, i.e. relative error.
pub fn rel_err(a: LogPos, b: LogPos) -> f64 {
    ((a.log2() - b.log2()) * std::f64::consts::LN_2).abs()
}

pub fn rel_err_f64(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Units in the last place between two log2 values.
pub fn ulps(a: f64, b: f64) -> f64 {
    (a - b).abs() / (f64::EPSILON * a.abs().max(b.abs()).max(1.0))
}

pub fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi)
}

pub fn c(x: f64) -> Coord {
    Coord::new(x)
}
