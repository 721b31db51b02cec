//! Strong-type lower bound: `int_0^1 (A*_S sigma)^2 w` against `int_0^1 sigma`
//! for the lacunary weight and the band family
//! `B_{k,j} = [2^-k - 2^-j, 2^-k)`, `j >= k + a`.
//!
//! Every band of level `k` sits inside the descending spike
//! `[(1 - alpha) 2^-k, 2^-k)`, where `w = alpha 2^(-2k(1-alpha)) (2^-k - x)^(alpha-1)`.
//! In the band-local variable `z = 2^-k - x` the members are `[0, 2^-j)`, so
//! the operator output is a step function with dyadic breakpoints in `z`
//! whatever the depth of `j`, and its weighted norm is exact.
//!
//! The maximal averages `M_{k,j}` are searched directly while `B_{k,j}` is an
//! exact coordinate (`j - k <= 52`); deeper members reuse the deepest value
//! found, which is a lower bound because `M_B` grows as `B` shrinks. Levels
//! beyond `direct_bands` are transported by the exact self-similarity of the
//! weight, which multiplies each level's contribution by `2^-alpha`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Row};
use crate::acc::Acc;
use crate::characteristics::{a2_search, A2SearchConfig};
use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::operators::{band_member, l2w_norm_sq, strong_sparse_apply, LaminarFamily, SupSearchConfig};
use crate::piecewise::{Orientation, PiecewisePowerFn, PowerTerm, StepFn};
use crate::weights::{lacunary_pair, tail_integrals, WeightPair, DEFAULT_TAIL_TOLERANCE};

/// Deepest `j - k` for which `B_{k,j}` is an exact coordinate with margin.
pub const MAX_DIRECT_SPAN: i64 = 52;

pub const SLOPE_TARGET: f64 = 4.0;
pub const SLOPE_TOLERANCE: f64 = 0.2;
/// Largest `|log2(R / R_oracle)|` accepted for `a <= ORACLE_MAX_A`.
pub const ORACLE_TOLERANCE: f64 = 0.02;
pub const ORACLE_MAX_A: u32 = 8;
pub const RUNTIME_BUDGET_MS: f64 = 120_000.0;
pub const JMAX_DOUBLING_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongConfig {
    pub tail_tolerance: f64,
    /// Levels `k = 1..=kmax`; `None` picks `ceil(40 / alpha)` capped at `2^16`.
    pub kmax: Option<u64>,
    /// Members per level beyond the first, `j <= a + k + jmax`; `None` picks
    /// `ceil(48 / alpha)`.
    pub jmax: Option<u64>,
    /// Levels computed from the search; the rest are transported.
    pub direct_bands: u64,
    pub search: SupSearchConfig,
    pub a2: A2SearchConfig,
}

impl Default for StrongConfig {
    fn default() -> StrongConfig {
        StrongConfig {
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            kmax: None,
            jmax: None,
            direct_bands: 3,
            search: SupSearchConfig::default(),
            a2: A2SearchConfig::default(),
        }
    }
}

pub fn default_kmax(alpha: f64) -> u64 {
    ((40.0 / alpha).ceil() as u64).min(1 << 16)
}

pub fn default_jmax(alpha: f64) -> u64 {
    (48.0 / alpha).ceil() as u64
}

/// The weight `w` near `2^-k` in the variable `z = 2^-k - x`: the descending
/// spike piece of `w`, reflected onto `[0, spike length)`.
fn band_local_weight(pair: &WeightPair, k: i64, a: i64) -> Result<PiecewisePowerFn> {
    let top = Coord::pow2(-k);
    let probe = band_member(k, k + a).lo;
    let piece = pair
        .w
        .piece_at(probe)
        .map(|i| pair.w.pieces()[i])
        .ok_or_else(|| Error::Domain(format!("w is not defined at {probe}")))?;
    let t = piece.term;
    if t.orientation != Orientation::Descending || t.offset != top || piece.interval.hi != top || piece.interval.lo > probe
    {
        return Err(Error::Domain(format!("no descending spike of w ends at 2^-{k}")));
    }
    PiecewisePowerFn::single(
        Interval { lo: Coord::ZERO, hi: top - piece.interval.lo },
        PowerTerm::new(t.coeff, Coord::ZERO, t.exponent, Orientation::Ascending),
    )
}

/// `A*_S sigma` restricted to level `k`, in band-local coordinates: the cell
/// `[2^-(j+1), 2^-j)` carries `sum_{i <= j} M_{k,i}`, the innermost cell
/// `[0, 2^-jtop)` carries the full sum.
fn band_step(k: i64, a: i64, jmax: u64, maxima: &[LogPos]) -> Result<StepFn> {
    let j0 = k + a;
    let jtop = j0 + jmax as i64;
    let mut partial = Vec::with_capacity(jmax as usize + 1);
    let mut acc = Acc::ZERO;
    for j in j0..=jtop {
        let m = maxima[((j - j0) as usize).min(maxima.len() - 1)];
        acc = acc.add(Acc::from_logpos(m));
        partial.push(acc.to_logpos());
    }
    let mut bps = Vec::with_capacity(partial.len() + 1);
    let mut values = Vec::with_capacity(partial.len());
    bps.push(Coord::ZERO);
    for j in (j0..=jtop).rev() {
        bps.push(Coord::pow2(-j));
        values.push(partial[(j - j0) as usize]);
    }
    StepFn::new(bps, values)
}

/// `r (1 - r^n) / (1 - r)` with `r = 2^-alpha`.
fn geometric_tail(alpha: f64, n: u64) -> LogPos {
    if n == 0 {
        return LogPos::ZERO;
    }
    let l = alpha * std::f64::consts::LN_2;
    let num = -(-(n as f64) * l).exp_m1();
    let den = -(-l).exp_m1();
    LogPos::from_log2(-alpha + (num / den).log2())
}

/// Independent closed form of the ratio from the level integrals of the
/// weight and `sum n^2 r^n = r (1 + r) / (1 - r)^3`, taking
/// `M_{k,j} = 2^k int_0^{2^-k} sigma` for every member.
pub fn strong_oracle(pair: &WeightPair, kmax: u64) -> Result<LogPos> {
    let alpha = pair.alpha;
    let r = (-alpha).exp2();
    let one_minus_r = -(-alpha * std::f64::consts::LN_2).exp_m1();
    let s0 = tail_integrals(pair, 0)?.1;
    let shape = LogPos::from_log2(alpha * alpha.log2() + (1.0 + r).log2() - 2.0 * one_minus_r.log2());
    Ok(s0 * shape * geometric_tail(alpha, kmax))
}

#[derive(Clone, Debug)]
struct StrongRowData {
    ratio: LogPos,
    ratio_doubled: LogPos,
    oracle: LogPos,
    transport_gap: Option<f64>,
    reference_gap: f64,
    kmax: u64,
    jmax: u64,
}

fn strong_values(pair: &WeightPair, a: u32, cfg: &StrongConfig) -> Result<StrongRowData> {
    let alpha = pair.alpha;
    let kmax = cfg.kmax.unwrap_or_else(|| default_kmax(alpha));
    let jmax = cfg.jmax.unwrap_or_else(|| default_jmax(alpha));
    if kmax == 0 {
        return Err(Error::InvalidArgument("kmax must be positive".into()));
    }
    let kd = cfg.direct_bands.clamp(1, kmax);
    let ai = a as i64;
    let mut bands = Vec::new();
    let mut bands_doubled = Vec::new();
    let mut reference_gap: f64 = 0.0;
    for k in 1..=kd as i64 {
        let j0 = k + ai;
        let jcap = (j0 + jmax as i64).min(k + MAX_DIRECT_SPAN);
        if jcap < j0 {
            return Err(Error::InvalidArgument(format!("a = {a} leaves no exact band members")));
        }
        let members: Vec<Interval> = (j0..=jcap).map(|j| band_member(k, j)).collect();
        let family = LaminarFamily::new(members)?;
        let strong = strong_sparse_apply(&family, &pair.sigma, &cfg.search)?;
        let maxima: Vec<LogPos> = strong.maxima.iter().map(|m| m.value).collect();
        let reference = tail_integrals(pair, k as u64)?.1.log2() + k as f64;
        for m in &maxima {
            reference_gap = reference_gap.max((m.log2() - reference).abs());
        }
        let wl = band_local_weight(pair, k, ai)?;
        bands.push(l2w_norm_sq(&band_step(k, ai, jmax, &maxima)?, &wl)?);
        bands_doubled.push(l2w_norm_sq(&band_step(k, ai, 2 * jmax, &maxima)?, &wl)?);
    }
    let transport = geometric_tail(alpha, kmax - kd);
    let total = |b: &[LogPos]| LogPos::sum(b.iter().copied()).add(*b.last().expect("at least one band") * transport);
    let mass = pair.sigma.integrate(Interval::new(0.0, 1.0))?;
    let transport_gap =
        (bands.len() >= 2).then(|| (bands[bands.len() - 1] / bands[bands.len() - 2]).log2() + alpha);
    Ok(StrongRowData {
        ratio: total(&bands) / mass,
        ratio_doubled: total(&bands_doubled) / mass,
        oracle: strong_oracle(pair, kmax)?,
        transport_gap,
        reference_gap,
        kmax,
        jmax,
    })
}

/// One row of the strong experiment.
pub fn strong_row(a: u32, cfg: &StrongConfig) -> Result<Row> {
    let start = Instant::now();
    let pair = lacunary_pair(a, cfg.tail_tolerance)?;
    let d = strong_values(&pair, a, cfg)?;
    let a2 = a2_search(&pair, &cfg.a2)?;
    let mut row = Row::new(a);
    row.a2_log2 = a2.value.log2();
    row.quantity_log2 = d.ratio.log2();
    row.oracle_log2 = Some(d.oracle.log2());
    row.put("kmax", d.kmax as f64);
    row.put("jmax", d.jmax as f64);
    row.put("jmax_doubling_rel", ((d.ratio_doubled / d.ratio).log2() * std::f64::consts::LN_2).abs());
    row.put("maximal_reference_gap_log2", d.reference_gap);
    if let Some(g) = d.transport_gap {
        row.put("transport_gap_log2", g);
    }
    row.put("a2_converged", if a2.converged { 1.0 } else { 0.0 });
    row.cpu_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(row)
}

/// `R(alpha) = ||A*_S sigma||^2_{L2(w)} / int_0^1 sigma` over the sweep, with
/// the analytic oracle, the jmax-doubling check and the slope fit.
pub fn exp_strong_lower(a_list: &[u32], cfg: &StrongConfig) -> Result<ExperimentReport> {
    if let Some(bad) = a_list.iter().find(|a| **a < 3) {
        return Err(Error::InvalidArgument(format!("the strong experiment needs a >= 3, got {bad}")));
    }
    let mut report = ExperimentReport::new(
        "strong-lower",
        "R = ||A*_S sigma||^2_L2(w) / int_0^1 sigma",
        serde_json::json!({ "a_list": a_list, "strong": cfg }),
    );
    let rows = a_list.par_iter().map(|&a| strong_row(a, cfg)).collect::<Result<Vec<_>>>()?;
    report.set_rows(rows)?;
    if let Some(f) = report.fit {
        report.assert_within("slope", f.slope, SLOPE_TARGET - SLOPE_TOLERANCE, SLOPE_TARGET + SLOPE_TOLERANCE);
    }
    let worst = report
        .rows
        .iter()
        .filter(|r| r.a <= ORACLE_MAX_A)
        .filter_map(|r| r.oracle_log2.map(|o| (r.quantity_log2 - o).abs()))
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    if let Some(w) = worst {
        report.assert_within("oracle agreement", w, 0.0, ORACLE_TOLERANCE);
    }
    let doubling = report.rows.iter().filter_map(|r| r.get("jmax_doubling_rel")).fold(0.0, f64::max);
    report.assert_within("jmax doubling", doubling, 0.0, JMAX_DOUBLING_TOLERANCE);
    report.finish();
    let elapsed = report.elapsed_ms;
    report.assert_within("runtime ms", elapsed, 0.0, RUNTIME_BUDGET_MS);
    Ok(report)
}
