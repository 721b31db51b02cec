//! Weak-type lower bound for the dual power weights: the squared ratio
//! `||A*_S g||^2_{L2,inf(w)} / ||g||^2_{L2(w)}` with `g = sigma 1_[0,1)` and the
//! nested family `[0, 2^-k)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Row};
use crate::characteristics::{a2_search, A2SearchConfig};
use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::operators::{strong_sparse_apply, weak_l2w_norm, FamilySpec, LaminarFamily, SupSearchConfig};
use crate::piecewise::PiecewisePowerFn;
use crate::weights::{power_pair, WeightPair};

pub const SLOPE_TARGET: f64 = 3.0;
pub const SLOPE_TOLERANCE: f64 = 0.2;
/// The squared comparison function `x^2.8`, i.e. `phi(x) = x^1.4`.
pub const PHI_EXPONENT_SQ: f64 = 2.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakConfig {
    /// Family `[0, 2^-k)` for `k = 1..=kmax`; `None` picks `ceil(4 / alpha)` capped at `2^16`.
    pub kmax: Option<u64>,
    /// Level constants `c` of the explicit path through `[0, 2^-ceil(c/alpha))`.
    pub levels: Vec<f64>,
    pub search: SupSearchConfig,
    pub a2: A2SearchConfig,
}

impl Default for WeakConfig {
    fn default() -> WeakConfig {
        WeakConfig {
            kmax: None,
            levels: vec![0.5, 1.0, 2.0],
            search: SupSearchConfig::default(),
            a2: A2SearchConfig::default(),
        }
    }
}

pub fn default_kmax(alpha: f64) -> u64 {
    ((4.0 / alpha).ceil() as u64).min(1 << 16)
}

/// `sigma 1_[0,1)`.
pub fn sigma_on_unit(pair: &WeightPair) -> PiecewisePowerFn {
    pair.sigma.restrict(Interval::new(0.0, 1.0))
}

/// `||g||^2_{L2(w)}`, exact.
pub fn l2w_norm_sq_fn(g: &PiecewisePowerFn, w: &PiecewisePowerFn) -> Result<LogPos> {
    let Some(s) = g.support() else { return Ok(LogPos::ZERO) };
    g.pow_scalar(2.0)?.multiply(w)?.integrate(s)
}

pub fn path_key(c: f64) -> String {
    format!("path_c{c}_log2")
}

pub fn weak_row(a: u32, cfg: &WeakConfig) -> Result<Row> {
    let start = Instant::now();
    let mut row = Row::new(a);
    let alpha = row.alpha;
    let pair = power_pair(alpha)?;
    let kmax = cfg.kmax.unwrap_or_else(|| default_kmax(alpha));
    let g = sigma_on_unit(&pair);
    let family = LaminarFamily::new(FamilySpec::Nested { kmax }.intervals()?)?;
    let strong = strong_sparse_apply(&family, &g, &cfg.search)?;
    let weak = weak_l2w_norm(&strong.step, &pair.w)?;
    let g_sq = l2w_norm_sq_fn(&g, &pair.w)?;
    let ratio_sq = weak * weak / g_sq;
    row.quantity_log2 = ratio_sq.log2();

    // Closed form: M_[0,2^-k) g = 1/(2 - alpha), the operator is n/(2 - alpha)
    // on [2^-(n+1), 2^-n), and w([0, 2^-n)) = 2^(-n alpha)/alpha.
    let mut best = f64::NEG_INFINITY;
    for n in 1..=kmax {
        best = best.max(2.0 * (n as f64).log2() - n as f64 * alpha);
    }
    row.oracle_log2 = Some(best - alpha.log2() - (2.0 - alpha).log2());

    let a2 = a2_search(&pair, &cfg.a2)?;
    row.a2_log2 = a2.value.log2();
    row.put("phi_log2", row.quantity_log2 - PHI_EXPONENT_SQ * row.a2_log2);
    row.put("maximal_log2", strong.maxima[0].value.log2());
    row.put("g_norm_sq_log2", g_sq.log2());
    row.put("kmax", kmax as f64);
    for &c in &cfg.levels {
        let n = (c / alpha).ceil() as u64;
        if n == 0 || n > kmax {
            continue;
        }
        // lambda = value of the operator just right of 2^-n; {h >= lambda} = [0, 2^-n).
        let lambda = strong.step.eval(Coord::pow2(-(n as i64) - 1).scale(1.5));
        let set = Interval { lo: Coord::ZERO, hi: Coord::pow2(-(n as i64)) };
        let path = lambda * lambda * pair.w.integrate(set)? / g_sq;
        row.put(&path_key(c), path.log2());
    }
    row.cpu_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(row)
}

pub fn exp_weak_lower(a_list: &[u32], cfg: &WeakConfig) -> Result<ExperimentReport> {
    if a_list.iter().any(|&a| a == 0 || a > 60) {
        return Err(Error::InvalidArgument("the weak experiment needs 1 <= a <= 60".into()));
    }
    let mut report = ExperimentReport::new(
        "weak-lower",
        "squared ratio ||A*_S g||^2_L2inf(w) / ||g||^2_L2(w), g = sigma 1_[0,1)",
        serde_json::json!({ "a_list": a_list, "weak": cfg }),
    );
    let rows = a_list.par_iter().map(|&a| weak_row(a, cfg)).collect::<Result<Vec<_>>>()?;
    report.set_rows(rows)?;
    for &c in &cfg.levels {
        report.fit_extra(&path_key(c))?;
    }
    if let Some(f) = report.fit {
        report.assert_within("slope", f.slope, SLOPE_TARGET - SLOPE_TOLERANCE, SLOPE_TARGET + SLOPE_TOLERANCE);
    }
    if report.rows.len() >= 2 {
        let phi: Vec<f64> = report.rows.iter().filter_map(|r| r.get("phi_log2")).collect();
        let increasing = phi.windows(2).all(|w| w[1] > w[0]);
        report.assert("ratio over x^2.8 increasing", increasing, format!("{phi:?}"));
    }
    report.finish();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_of_sigma_on_unit() {
        let alpha = 0.25;
        let pair = power_pair(alpha).unwrap();
        let v = l2w_norm_sq_fn(&sigma_on_unit(&pair), &pair.w).unwrap();
        assert!((v.to_f64() - 1.0 / (2.0 - alpha)).abs() < 1e-14);
    }

    #[test]
    fn pipeline_matches_closed_form() {
        let row = weak_row(5, &WeakConfig::default()).unwrap();
        assert!((row.quantity_log2 - row.oracle_log2.unwrap()).abs() < 1e-9);
        assert!((row.get("maximal_log2").unwrap() + (2.0 - row.alpha).log2()).abs() < 1e-9);
    }
}
