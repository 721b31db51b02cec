use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Row};
use crate::characteristics::{a2_search, A2Report, A2SearchConfig};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::weights::{lacunary_pair, WeightPair, DEFAULT_TAIL_TOLERANCE};

pub const SLOPE_TARGET: f64 = 1.0;
pub const SLOPE_TOLERANCE: f64 = 0.05;
pub const RUNTIME_BUDGET_MS: f64 = 60_000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharConfig {
    pub tail_tolerance: f64,
    pub a2: A2SearchConfig,
}

impl Default for CharConfig {
    fn default() -> CharConfig {
        CharConfig { tail_tolerance: DEFAULT_TAIL_TOLERANCE, a2: A2SearchConfig::default() }
    }
}

/// The JSON document of `a2lab char`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharSummary {
    pub value_log2: f64,
    pub interval: Interval,
    pub dyadic_log2: f64,
    pub budget: usize,
    pub converged: bool,
}

impl From<&A2Report> for CharSummary {
    fn from(r: &A2Report) -> CharSummary {
        CharSummary {
            value_log2: r.value.log2(),
            interval: r.attaining,
            dyadic_log2: r.dyadic_value.log2(),
            budget: r.budget,
            converged: r.converged,
        }
    }
}

pub fn characterize(pair: &WeightPair, cfg: &A2SearchConfig) -> Result<CharSummary> {
    Ok(CharSummary::from(&a2_search(pair, cfg)?))
}

pub fn char_row(a: u32, cfg: &CharConfig) -> Result<Row> {
    let start = Instant::now();
    let pair = lacunary_pair(a, cfg.tail_tolerance)?;
    let rep = a2_search(&pair, &cfg.a2)?;
    let mut row = Row::new(a);
    row.a2_log2 = rep.value.log2();
    row.quantity_log2 = rep.value.log2();
    row.put("dyadic_log2", rep.dyadic_value.log2());
    row.put("converged", if rep.converged { 1.0 } else { 0.0 });
    row.put("attaining_lo_log2", rep.attaining.lo.log2_abs());
    row.put("attaining_hi_log2", rep.attaining.hi.log2_abs());
    row.put("pieces", pair.sigma.len() as f64);
    row.cpu_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(row)
}

/// `[w]_{A2}` of the lacunary weights over the sweep, fitted against `a`.
pub fn exp_char(a_list: &[u32], cfg: &CharConfig) -> Result<ExperimentReport> {
    if let Some(bad) = a_list.iter().find(|a| **a < 2) {
        return Err(Error::InvalidArgument(format!("lacunary weights need a >= 2, got {bad}")));
    }
    let mut report = ExperimentReport::new(
        "char",
        "[w]_A2 of the lacunary weight",
        serde_json::json!({ "a_list": a_list, "char": cfg }),
    );
    let rows = a_list.par_iter().map(|&a| char_row(a, cfg)).collect::<Result<Vec<_>>>()?;
    report.set_rows(rows)?;
    report.fit_extra("dyadic_log2")?;
    if let Some(f) = report.fit {
        report.assert_within("slope", f.slope, SLOPE_TARGET - SLOPE_TOLERANCE, SLOPE_TARGET + SLOPE_TOLERANCE);
    }
    let unconverged: Vec<u32> =
        report.rows.iter().filter(|r| r.get("converged") != Some(1.0)).map(|r| r.a).collect();
    report.assert("search converged", unconverged.is_empty(), format!("unconverged a: {unconverged:?}"));
    report.finish();
    let elapsed = report.elapsed_ms;
    report.assert_within("runtime ms", elapsed, 0.0, RUNTIME_BUDGET_MS);
    Ok(report)
}
