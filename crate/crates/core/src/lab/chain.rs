//! Flattening of a function along a chain of intervals, and the chain
//! experiment built on it.
//!
//! For each member `B` of the chain, `pi(B)` is the longest interval found
//! that contains `B` and on which the average of `g` is at least `M_B g / 2`.
//! The projections are forced to nest, and `g` is replaced by its average on
//! each annulus between consecutive distinct projections. The innermost
//! distinct projection counts as its own annulus.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, Row};
use super::weak::{l2w_norm_sq_fn, sigma_on_unit};
use crate::acc::Acc;
use crate::characteristics::{a2_search, A2SearchConfig};
use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::operators::{
    l2w_norm_sq, sparse_apply, strong_sparse_apply, FamilySpec, LaminarFamily, MaximalSearcher, SupSearchConfig,
};
use crate::piecewise::{PiecewisePowerFn, StepFn};
use crate::weights::{power_pair, unweighted_pair, WeightPair};

pub const OPERATOR_SLOPE_LIMIT: f64 = 1.6;
pub const INFLATION_SLOPE_LIMIT: f64 = 1.1;
pub const DEFAULT_GRID: usize = 10_000;

/// Bisection steps per endpoint after the doubling phase.
const BISECTION_STEPS: u32 = 80;

struct Projector<'a> {
    g: &'a PiecewisePowerFn,
    searcher: MaximalSearcher<'a>,
    cfg: SupSearchConfig,
}

/// The projection of one member with the quantities behind it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub interval: Interval,
    pub maximal: LogPos,
    pub average: LogPos,
}

impl<'a> Projector<'a> {
    fn new(g: &'a PiecewisePowerFn, cfg: &SupSearchConfig) -> Result<Projector<'a>> {
        Ok(Projector { g, searcher: MaximalSearcher::new(g, *cfg)?, cfg: *cfg })
    }

    fn domain(&self, b: &Interval) -> Interval {
        let mut d = match self.g.support() {
            Some(s) => {
                let e = self.cfg.max_expansion.unwrap_or_else(|| s.len());
                Interval { lo: s.lo - e, hi: s.hi + e }.hull(b)
            }
            None => *b,
        };
        if let Some(clamp) = self.cfg.domain {
            d = d.intersect(&clamp).hull(b);
        }
        d
    }

    fn qualifies(&self, iv: Interval, target: LogPos) -> Result<bool> {
        if iv.is_empty() {
            return Ok(false);
        }
        let avg = self.g.average(iv)?;
        Ok(avg.log2() >= target.log2() + (1.0 - self.cfg.tolerance).log2())
    }

    /// Moves the left endpoint outwards by doubling steps, then bisects the
    /// last step. The result still qualifies.
    fn extend_left(&self, cur: Interval, bound: Coord, target: LogPos) -> Result<Interval> {
        let mut good = cur.lo;
        let mut step = cur.len();
        loop {
            if good <= bound {
                return Ok(Interval { lo: good, hi: cur.hi });
            }
            let x = (good - step).max(bound);
            if self.qualifies(Interval { lo: x, hi: cur.hi }, target)? {
                good = x;
                step = step + step;
                continue;
            }
            let mut bad = x;
            for _ in 0..BISECTION_STEPS {
                let mid = Coord::midpoint(bad, good);
                if mid <= bad || mid >= good {
                    break;
                }
                if self.qualifies(Interval { lo: mid, hi: cur.hi }, target)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return Ok(Interval { lo: good, hi: cur.hi });
        }
    }

    fn extend_right(&self, cur: Interval, bound: Coord, target: LogPos) -> Result<Interval> {
        let mut good = cur.hi;
        let mut step = cur.len();
        loop {
            if good >= bound {
                return Ok(Interval { lo: cur.lo, hi: good });
            }
            let x = (good + step).min(bound);
            if self.qualifies(Interval { lo: cur.lo, hi: x }, target)? {
                good = x;
                step = step + step;
                continue;
            }
            let mut bad = x;
            for _ in 0..BISECTION_STEPS {
                let mid = Coord::midpoint(good, bad);
                if mid <= good || mid >= bad {
                    break;
                }
                if self.qualifies(Interval { lo: cur.lo, hi: mid }, target)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return Ok(Interval { lo: cur.lo, hi: good });
        }
    }

    fn project(&self, b: Interval) -> Result<Projection> {
        if b.is_empty() {
            return Err(Error::ZeroLength);
        }
        let m = self.searcher.search(b, None)?;
        let d = self.domain(&b);
        if m.value.is_zero() {
            return Ok(Projection { interval: d, maximal: m.value, average: self.g.average(d)? });
        }
        let target = LogPos::from_log2(m.value.log2() - 1.0);
        let mut cands = Vec::new();
        for start in [b, m.attaining] {
            if self.qualifies(start, target)? {
                cands.push(start);
            }
            let lr = self.extend_left(start, d.lo, target)?;
            cands.push(self.extend_right(lr, d.hi, target)?);
            let rl = self.extend_right(start, d.hi, target)?;
            cands.push(self.extend_left(rl, d.lo, target)?);
        }
        let best = cands
            .into_iter()
            .filter(|c| c.contains(&b))
            .max_by(|x, y| x.len().cmp(&y.len()).then(y.lo.cmp(&x.lo)))
            .unwrap_or(m.attaining);
        Ok(Projection { interval: best, maximal: m.value, average: self.g.average(best)? })
    }
}

/// `pi(B)`: the longest interval found containing `b` whose average of `g`
/// is at least half of `M_B g`; ties go to the leftmost.
pub fn project_interval(g: &PiecewisePowerFn, b: Interval, cfg: &SupSearchConfig) -> Result<Interval> {
    Ok(Projector::new(g, cfg)?.project(b)?.interval)
}

/// One annulus `D_t \ D_(t+1)` of the distinct nested projections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub parts: Vec<Interval>,
    /// The constant value of the flattened function on the annulus.
    pub average: LogPos,
    /// `|annulus| / |D_t|`.
    pub residual_fraction: f64,
    /// `average / (2 <g>_{D_(t+1)} / residual_fraction)`; absent for the innermost annulus.
    pub bound_ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ChainState {
    /// The chain, outermost first.
    pub chain: Vec<Interval>,
    pub projections: Vec<Projection>,
    /// `A_i`, forced to nest.
    pub nested: Vec<Interval>,
    /// Distinct members of `nested`, outermost first.
    pub distinct: Vec<Interval>,
    pub annuli: Vec<Annulus>,
    pub flattened: PiecewisePowerFn,
    /// Largest `|int_{A_i} g~ / int_{A_i} g - 1|`.
    pub mean_preservation: f64,
}

fn minus(outer: Interval, inner: Option<Interval>) -> Vec<Interval> {
    match inner {
        None => vec![outer],
        Some(i) => [Interval { lo: outer.lo, hi: i.lo }, Interval { lo: i.hi, hi: outer.hi }]
            .into_iter()
            .filter(|p| !p.is_empty())
            .collect(),
    }
}

/// Sorts a chain outermost first and checks it is ordered by inclusion.
fn order_chain(chain: &[Interval]) -> Result<Vec<Interval>> {
    let mut c = chain.to_vec();
    c.sort_by(|x, y| y.len().cmp(&x.len()).then(x.lo.cmp(&y.lo)));
    if c.windows(2).any(|w| !w[0].contains(&w[1])) || c.iter().any(|i| i.is_empty()) {
        return Err(Error::NotAChain);
    }
    Ok(c)
}

/// Projects every member, nests the projections, and flattens `g` on the
/// annuli between distinct projections.
pub fn flatten_chain(g: &PiecewisePowerFn, chain: &[Interval], cfg: &SupSearchConfig) -> Result<ChainState> {
    let chain = order_chain(chain)?;
    let proj = Projector::new(g, cfg)?;
    let projections = chain.iter().map(|b| proj.project(*b)).collect::<Result<Vec<_>>>()?;
    let mut nested: Vec<Interval> = Vec::with_capacity(chain.len());
    for p in &projections {
        let a = match nested.last() {
            Some(prev) => p.interval.intersect(prev),
            None => p.interval,
        };
        nested.push(a);
    }
    let mut distinct: Vec<Interval> = Vec::new();
    for a in &nested {
        if distinct.last() != Some(a) {
            distinct.push(*a);
        }
    }

    let mut annuli = Vec::with_capacity(distinct.len());
    let mut pieces = Vec::new();
    for (t, d) in distinct.iter().enumerate() {
        let inner = distinct.get(t + 1).copied();
        let parts = minus(*d, inner);
        let mut mass = Acc::ZERO;
        let mut len = Coord::ZERO;
        for p in &parts {
            mass = mass.add(g.integrate_acc(*p)?);
            len = len + p.len();
        }
        let average = mass.to_logpos() / LogPos::from_log2(len.log2_abs());
        let residual_fraction = len.ratio(d.len());
        let bound_ratio = match inner {
            Some(i) => {
                let bound = LogPos::pow2(1.0) * g.average(i)? / LogPos::from_f64(residual_fraction)?;
                (!bound.is_zero()).then(|| (average / bound).to_f64())
            }
            None => None,
        };
        if !average.is_zero() {
            for p in &parts {
                pieces.push(PiecewisePowerFn::constant(*p, average)?);
            }
        }
        annuli.push(Annulus { parts, average, residual_fraction, bound_ratio });
    }
    let mut flattened = match (g.support(), distinct.first()) {
        (Some(s), Some(d1)) => {
            let left = g.restrict(Interval { lo: s.lo.min(d1.lo), hi: d1.lo });
            let right = g.restrict(Interval { lo: d1.hi, hi: s.hi.max(d1.hi) });
            left.union(&right)?
        }
        _ => g.clone(),
    };
    for p in pieces {
        flattened = flattened.union(&p)?;
    }

    let mut mean_preservation: f64 = 0.0;
    for a in &nested {
        let orig = g.integrate(*a)?;
        let flat = flattened.integrate(*a)?;
        let err = if orig.is_zero() { if flat.is_zero() { 0.0 } else { f64::INFINITY } } else { (flat / orig).to_f64() - 1.0 };
        mean_preservation = mean_preservation.max(err.abs());
    }
    Ok(ChainState { chain, projections, nested, distinct, annuli, flattened, mean_preservation })
}

/// Input functions of the chain experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainInput {
    /// `sigma 1_[0,1)`.
    Sigma,
    /// `1_[0,1)`.
    One,
}

impl ChainInput {
    pub fn name(self) -> &'static str {
        match self {
            ChainInput::Sigma => "sigma",
            ChainInput::One => "one",
        }
    }

    pub fn build(self, pair: &WeightPair) -> Result<PiecewisePowerFn> {
        match self {
            ChainInput::Sigma => Ok(sigma_on_unit(pair)),
            ChainInput::One => PiecewisePowerFn::constant(Interval::new(0.0, 1.0), LogPos::ONE),
        }
    }
}

impl FromStr for ChainInput {
    type Err = Error;
    fn from_str(s: &str) -> Result<ChainInput> {
        match s.trim() {
            "sigma" => Ok(ChainInput::Sigma),
            "one" | "1" => Ok(ChainInput::One),
            other => Err(Error::Parse { input: s.to_string(), reason: format!("unknown input `{other}`") }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Chain `[0, 2^-k)`, `k = 1..=kmax`; `None` picks `ceil(4 / alpha)` capped at `2^16`.
    pub kmax: Option<u64>,
    /// Points of the domination grid, half uniform on `(0, 2)` and half
    /// geometric towards the origin.
    pub grid: usize,
    /// Search settings; the domain is clamped to the weight's domain `[0, 2]`.
    pub search: SupSearchConfig,
    pub a2: A2SearchConfig,
}

impl Default for ChainConfig {
    fn default() -> ChainConfig {
        ChainConfig {
            kmax: None,
            grid: DEFAULT_GRID,
            search: SupSearchConfig { domain: Some(Interval::new(0.0, 2.0)), ..SupSearchConfig::default() },
            a2: A2SearchConfig::default(),
        }
    }
}

/// Grid on `(0, 2)`: uniform midpoints plus points `2^-t` for `t` evenly
/// spaced up to `depth + 2`.
pub fn domination_grid(n: usize, depth: u64) -> Vec<Coord> {
    let half = n / 2;
    let mut pts: Vec<Coord> = (0..n - half).map(|i| Coord::new(2.0 * (i as f64 + 0.5) / (n - half) as f64)).collect();
    let tmax = depth as f64 + 2.0;
    for i in 0..half {
        let t = tmax * (i as f64 + 0.5) / half as f64;
        let whole = t.floor();
        pts.push(Coord::pow2(-(whole as i64)).scale((-(t - whole)).exp2()));
    }
    pts.sort();
    pts
}

/// Largest `lhs / rhs` over the grid; infinite when `rhs` vanishes under a
/// positive `lhs`.
fn domination_constant(lhs: &StepFn, rhs: &StepFn, grid: &[Coord]) -> f64 {
    let mut c: f64 = 0.0;
    for &x in grid {
        let (l, r) = (lhs.eval(x), rhs.eval(x));
        if l.is_zero() {
            continue;
        }
        if r.is_zero() {
            return f64::INFINITY;
        }
        c = c.max((l / r).to_f64());
    }
    c
}

/// Measurements of one input function for one weight.
#[derive(Clone, Debug)]
pub struct ChainMeasure {
    /// `||A*_S g||_{L2(w)} / ||g||_{L2(w)}`.
    pub operator_ratio: LogPos,
    /// `||g~||^2_{L2(w)} / ||g||^2_{L2(w)}`.
    pub inflation: LogPos,
    /// Domination constant against `A_S g~` with the original chain.
    pub domination_chain: f64,
    /// Domination constant against the projections `{A_i}`, one per member.
    pub domination_projections: f64,
    pub mean_preservation: f64,
    pub annulus_bound: Option<f64>,
    pub distinct_projections: usize,
}

pub fn chain_measure(pair: &WeightPair, g: &PiecewisePowerFn, kmax: u64, cfg: &ChainConfig) -> Result<ChainMeasure> {
    let chain = FamilySpec::Nested { kmax }.intervals()?;
    let family = LaminarFamily::new(chain.clone())?;
    let strong = strong_sparse_apply(&family, g, &cfg.search)?;
    let g_sq = l2w_norm_sq_fn(g, &pair.w)?;
    let op_sq = l2w_norm_sq(&strong.step, &pair.w)?;
    let state = flatten_chain(g, &chain, &cfg.search)?;
    let flat_sq = l2w_norm_sq_fn(&state.flattened, &pair.w)?;
    let grid = domination_grid(cfg.grid, kmax);
    let on_chain = sparse_apply(&family, &state.flattened)?;
    let on_projections = sparse_apply(&LaminarFamily::new(state.nested.clone())?, &state.flattened)?;
    Ok(ChainMeasure {
        operator_ratio: (op_sq / g_sq).sqrt(),
        inflation: flat_sq / g_sq,
        domination_chain: domination_constant(&strong.step, &on_chain, &grid),
        domination_projections: domination_constant(&strong.step, &on_projections, &grid),
        mean_preservation: state.mean_preservation,
        annulus_bound: state.annuli.iter().filter_map(|a| a.bound_ratio).reduce(f64::max),
        distinct_projections: state.distinct.len(),
    })
}

pub fn chain_row(a: u32, inputs: &[ChainInput], cfg: &ChainConfig) -> Result<Row> {
    let start = Instant::now();
    let mut row = Row::new(a);
    let alpha = row.alpha;
    let pair = power_pair(alpha)?;
    let kmax = cfg.kmax.unwrap_or_else(|| super::weak::default_kmax(alpha));
    let a2 = a2_search(&pair, &cfg.a2)?;
    row.a2_log2 = a2.value.log2();
    for (i, input) in inputs.iter().enumerate() {
        let g = input.build(&pair)?;
        let m = chain_measure(&pair, &g, kmax, cfg)?;
        if i == 0 {
            row.quantity_log2 = m.operator_ratio.log2();
        }
        let n = input.name();
        row.put(&format!("{n}.operator_ratio_log2"), m.operator_ratio.log2());
        row.put(&format!("{n}.inflation_log2"), m.inflation.log2());
        row.put(&format!("{n}.inflation_over_a2"), m.inflation.to_f64() / a2.value.to_f64());
        row.put(&format!("{n}.domination_chain"), m.domination_chain);
        row.put(&format!("{n}.domination_projections"), m.domination_projections);
        row.put(&format!("{n}.mean_preservation"), m.mean_preservation);
        row.put(&format!("{n}.distinct_projections"), m.distinct_projections as f64);
        if let Some(b) = m.annulus_bound {
            row.put(&format!("{n}.annulus_bound_ratio"), b);
        }
    }
    // The unweighted baseline with g = 1_[0,1) does not depend on alpha
    // beyond the length of the chain.
    let flat = unweighted_pair(Coord::new(2.0))?;
    let one = ChainInput::One.build(&flat)?;
    let family = LaminarFamily::new(FamilySpec::Nested { kmax }.intervals()?)?;
    let strong = strong_sparse_apply(&family, &one, &cfg.search)?;
    let base = (l2w_norm_sq(&strong.step, &flat.w)? / l2w_norm_sq_fn(&one, &flat.w)?).sqrt();
    row.put("baseline.operator_ratio_log2", base.log2());
    row.put("kmax", kmax as f64);
    row.cpu_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(row)
}

/// Largest tolerated mean-preservation error: 4 ulp.
pub const MEAN_PRESERVATION_TOLERANCE: f64 = 4.0 * f64::EPSILON;

pub fn exp_chain(a_list: &[u32], inputs: &[ChainInput], cfg: &ChainConfig) -> Result<ExperimentReport> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("the chain experiment needs at least one input".into()));
    }
    if a_list.iter().any(|&a| a == 0 || a > 60) {
        return Err(Error::InvalidArgument("the chain experiment needs 1 <= a <= 60".into()));
    }
    let mut report = ExperimentReport::new(
        "chain",
        &format!("||A*_S g||_L2(w) / ||g||_L2(w), g = {}", inputs[0].name()),
        serde_json::json!({ "a_list": a_list, "inputs": inputs, "chain": cfg }),
    );
    let rows = a_list.par_iter().map(|&a| chain_row(a, inputs, cfg)).collect::<Result<Vec<_>>>()?;
    report.set_rows(rows)?;
    for input in inputs {
        let n = input.name();
        if let Some(f) = report.fit_extra(&format!("{n}.operator_ratio_log2"))? {
            report.assert_within(&format!("{n} operator slope"), f.slope, f64::NEG_INFINITY, OPERATOR_SLOPE_LIMIT);
        }
        if let Some(f) = report.fit_extra(&format!("{n}.inflation_log2"))? {
            report.assert_within(&format!("{n} inflation slope"), f.slope, f64::NEG_INFINITY, INFLATION_SLOPE_LIMIT);
        }
        let worst = |report: &ExperimentReport, key: &str| {
            report.rows.iter().map(|r| r.get(&format!("{n}.{key}")).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
        };
        let c = worst(&report, "domination_chain");
        report.assert(&format!("{n} domination"), c.is_finite(), format!("A*_S g <= {c:.6} A_S g~ on the grid"));
        let mp = worst(&report, "mean_preservation");
        report.assert_within(&format!("{n} mean preservation"), mp, 0.0, MEAN_PRESERVATION_TOLERANCE);
    }
    let base: Vec<f64> = report.rows.iter().filter_map(|r| r.get("baseline.operator_ratio_log2")).collect();
    if let (Some(lo), Some(hi)) = (base.iter().copied().reduce(f64::min), base.iter().copied().reduce(f64::max)) {
        report.assert_within("unweighted baseline spread", hi - lo, 0.0, 1e-9);
    }
    report.finish();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clamp02() -> SupSearchConfig {
        SupSearchConfig { domain: Some(Interval::new(0.0, 2.0)), ..SupSearchConfig::default() }
    }

    #[test]
    fn indicator_projects_to_length_two() {
        let g = PiecewisePowerFn::constant(Interval::new(0.0, 1.0), LogPos::ONE).unwrap();
        let p = project_interval(&g, Interval::new(0.0, 0.5), &clamp02()).unwrap();
        assert_eq!(p, Interval::new(0.0, 2.0));
    }

    #[test]
    fn constant_function_fills_the_domain() {
        let g = PiecewisePowerFn::constant(Interval::new(0.0, 2.0), LogPos::from_f64(3.0).unwrap()).unwrap();
        let p = project_interval(&g, Interval::new(0.5, 0.75), &clamp02()).unwrap();
        assert_eq!(p, Interval::new(0.0, 2.0));
        let state = flatten_chain(&g, &[Interval::new(0.5, 0.75), Interval::new(0.25, 1.0)], &clamp02()).unwrap();
        for x in [0.1, 0.6, 1.9] {
            assert!((state.flattened.eval(Coord::new(x)).to_f64() - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn projections_contain_members_and_preserve_means() {
        let pair = power_pair(0.125).unwrap();
        let g = sigma_on_unit(&pair);
        let chain = FamilySpec::Nested { kmax: 12 }.intervals().unwrap();
        let state = flatten_chain(&g, &chain, &clamp02()).unwrap();
        for (b, a) in state.chain.iter().zip(&state.nested) {
            assert!(a.contains(b));
        }
        assert!(state.mean_preservation <= MEAN_PRESERVATION_TOLERANCE);
    }

    #[test]
    fn crossing_members_are_not_a_chain() {
        let g = PiecewisePowerFn::constant(Interval::new(0.0, 1.0), LogPos::ONE).unwrap();
        let r = flatten_chain(&g, &[Interval::new(0.0, 0.5), Interval::new(0.25, 1.0)], &clamp02());
        assert!(matches!(r, Err(Error::NotAChain)));
    }
}
