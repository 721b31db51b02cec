//! A2 and A-infinity characteristics, reverse Holder and subset-mass checks.
//!
//! Every characteristic is a supremum over intervals, so every value here is
//! a certified lower bound: the exact product of averages over an interval
//! that was actually evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::acc::Acc;
use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::operators::{MaximalResult, MaximalSearcher, SupSearchConfig};
use crate::piecewise::{Orientation, PiecewisePowerFn};
use crate::weights::{Representation, WeightPair};

/// The pair with both functions replaced by their unscaled forms, and the
/// product of the two factors. For a pair from [`WeightPair::scaled`] the
/// factors cancel exactly, which makes the A2 searches scale invariant.
fn unscaled(pair: &WeightPair) -> (LogPos, Option<WeightPair>) {
    let (cs, gs) = pair.sigma.factored();
    let (cw, gw) = pair.w.factored();
    if cs == LogPos::ONE && cw == LogPos::ONE {
        return (LogPos::ONE, None);
    }
    (cs * cw, Some(WeightPair { sigma: gs.clone(), w: gw.clone(), ..pair.clone() }))
}

/// `<w>_I <sigma>_I`.
pub fn a2_product(pair: &WeightPair, iv: Interval) -> Result<LogPos> {
    Ok(pair.w.average(iv)? * pair.sigma.average(iv)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicA2 {
    pub value: LogPos,
    pub attaining: Interval,
    /// Dyadic intervals actually evaluated.
    pub evaluated: u64,
}

/// The A2 constant of a single power piece on one side of its offset:
/// `sup <u^p> <u^-p> = 1 / (1 - p^2)`, attained by intervals touching the
/// offset. Used to skip dyadic subtrees that cannot beat the current best by
/// more than rounding.
fn piece_bound(pair: &WeightPair, iv: &Interval) -> Option<LogPos> {
    let i = pair.sigma.piece_at(iv.lo)?;
    let j = pair.w.piece_at(iv.lo)?;
    let (ps, pw) = (&pair.sigma.pieces()[i], &pair.w.pieces()[j]);
    if iv.hi > ps.interval.hi || iv.hi > pw.interval.hi {
        return None;
    }
    let (s, w) = (&ps.term, &pw.term);
    let p = s.exponent;
    let same_base = s.exponent == 0.0
        || w.exponent == 0.0
        || (s.offset == w.offset && s.orientation == w.orientation);
    if !same_base || w.exponent != -p || p.abs() >= 1.0 {
        return None;
    }
    Some(LogPos::from_log2((s.coeff * w.coeff).log2() - (1.0 - p * p).log2()))
}

/// Largest `<w>_I <sigma>_I` over dyadic `I` in `[0, 1)` of generation at
/// most `depth`, together with the initial segments `[0, 2^-k)` down to the
/// depth of the explicit representation.
pub fn a2_dyadic(pair: &WeightPair, depth: u32) -> Result<DyadicA2> {
    if depth < 1 {
        return Err(Error::InvalidArgument("dyadic depth must be at least 1".into()));
    }
    if let (c, Some(base)) = unscaled(pair) {
        let d = a2_dyadic(&base, depth)?;
        return Ok(DyadicA2 { value: c * d.value, ..d });
    }
    let tail_depth = match pair.representation {
        Representation::ExplicitTruncated { depth: d, .. } => d.max(depth as u64),
        Representation::Exact => depth as u64,
    };
    let mut best = DyadicA2 { value: LogPos::ZERO, attaining: Interval::new(0.0, 1.0), evaluated: 0 };
    let offer = |best: &mut DyadicA2, iv: Interval, v: LogPos| {
        best.evaluated += 1;
        let better = v > best.value || (v == best.value && iv.len() < best.attaining.len());
        if better {
            best.value = v;
            best.attaining = iv;
        }
    };
    for k in 0..=tail_depth as i64 {
        let iv = Interval { lo: Coord::ZERO, hi: Coord::pow2(-k) };
        offer(&mut best, iv, a2_product(pair, iv)?);
    }
    // Depth-first over (generation, index); the root [0, 1) was covered above.
    let mut stack: Vec<(u32, Coord)> = vec![(1, Coord::new(0.5)), (1, Coord::ZERO)];
    while let Some((g, lo)) = stack.pop() {
        let iv = Interval { lo, hi: lo + Coord::pow2(-(g as i64)) };
        if let Some(bound) = piece_bound(pair, &iv) {
            if bound.log2() <= best.value.log2() + 1e-9 {
                continue;
            }
        }
        if lo.is_positive() {
            offer(&mut best, iv, a2_product(pair, iv)?);
        }
        if g < depth {
            let half = Coord::pow2(-(g as i64) - 1);
            stack.push((g + 1, lo + half));
            stack.push((g + 1, lo));
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2SearchConfig {
    /// Candidates refined by golden section (doubled for the convergence check).
    pub budget: usize,
    /// Every pair of breakpoints at most this many positions apart is scanned.
    pub window: usize,
    /// Generation depth of the dyadic floor.
    pub depth: u32,
    /// Golden-section steps per endpoint and round.
    pub refinement_depth: u32,
}

impl Default for A2SearchConfig {
    fn default() -> A2SearchConfig {
        A2SearchConfig { budget: 32, window: 16, depth: 20, refinement_depth: 48 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub value: LogPos,
    pub attaining: Interval,
    pub budget: usize,
    pub dyadic_value: LogPos,
    pub dyadic_attaining: Interval,
    /// Doubling the refinement budget did not change the value.
    pub converged: bool,
    pub candidates_scanned: u64,
}

#[derive(PartialEq)]
struct Cand {
    v: f64,
    i: usize,
    j: usize,
}

impl Eq for Cand {}

impl Ord for Cand {
    // Min-heap on value; ties keep the leftmost, shortest pair.
    fn cmp(&self, other: &Cand) -> Ordering {
        other
            .v
            .partial_cmp(&self.v)
            .unwrap_or(Ordering::Equal)
            .then(self.i.cmp(&other.i))
            .then(self.j.cmp(&other.j))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Cand) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn merged_breakpoints(pair: &WeightPair) -> Vec<Coord> {
    let mut bps = pair.sigma.breakpoints();
    bps.extend(pair.w.breakpoints());
    bps.sort();
    bps.dedup();
    bps
}

/// Golden-section refinement of one endpoint of `cur` inside `[lo, hi]`.
fn refine_endpoint(
    pair: &WeightPair,
    cur: &mut (LogPos, Interval),
    lo: Coord,
    hi: Coord,
    left: bool,
    steps: u32,
) -> Result<()> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let fixed = if left { cur.1.hi } else { cur.1.lo };
    let make = |x: Coord| if left { Interval { lo: x, hi: fixed } } else { Interval { lo: fixed, hi: x } };
    let eval = |x: Coord, cur: &mut (LogPos, Interval)| -> Result<LogPos> {
        let iv = make(x);
        if iv.is_empty() {
            return Ok(LogPos::ZERO);
        }
        let v = a2_product(pair, iv)?;
        if v > cur.0 {
            *cur = (v, iv);
        }
        Ok(v)
    };
    let (mut a, mut b) = (lo, hi);
    if b <= a {
        return Ok(());
    }
    let mut c = Coord::lerp(a, b, 1.0 - INV_PHI);
    let mut d = Coord::lerp(a, b, INV_PHI);
    let mut fc = eval(c, cur)?;
    let mut fd = eval(d, cur)?;
    for _ in 0..steps {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = Coord::lerp(a, b, 1.0 - INV_PHI);
            fc = eval(c, cur)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = Coord::lerp(a, b, INV_PHI);
            fd = eval(d, cur)?;
        }
    }
    Ok(())
}

fn refine_candidates(pair: &WeightPair, bps: &[Coord], cands: &[Cand], steps: u32) -> Result<(LogPos, Interval)> {
    let mut best = (LogPos::ZERO, Interval::new(0.0, 1.0));
    for c in cands {
        let iv = Interval { lo: bps[c.i], hi: bps[c.j] };
        let mut cur = (a2_product(pair, iv)?, iv);
        let left_lo = if c.i > 0 { bps[c.i - 1] } else { bps[0] };
        let right_hi = if c.j + 1 < bps.len() { bps[c.j + 1] } else { bps[c.j] };
        for _ in 0..3 {
            let hi = bps[(c.i + 1).min(c.j)].min(cur.1.hi);
            refine_endpoint(pair, &mut cur, left_lo, hi, true, steps)?;
            let lo = bps[(c.j - 1).max(c.i)].max(cur.1.lo);
            refine_endpoint(pair, &mut cur, lo, right_hi, false, steps)?;
        }
        if cur.0 > best.0 {
            best = cur;
        }
    }
    Ok(best)
}

/// Certified lower bound for `[w]_{A2}` over general intervals.
///
/// All breakpoint pairs up to `window` positions apart and at power-of-two
/// offsets beyond are scored exactly from the prefix indexes; the best
/// `budget` pairs then have both endpoints refined by golden section. The
/// result never falls below [`a2_dyadic`] at the configured depth.
pub fn a2_search(pair: &WeightPair, cfg: &A2SearchConfig) -> Result<A2Report> {
    if cfg.budget == 0 {
        return Err(Error::InvalidArgument("A2 search budget must be positive".into()));
    }
    if let (c, Some(base)) = unscaled(pair) {
        let r = a2_search(&base, cfg)?;
        return Ok(A2Report { value: c * r.value, dyadic_value: c * r.dyadic_value, ..r });
    }
    let dyadic = a2_dyadic(pair, cfg.depth.max(1))?;
    let bps = merged_breakpoints(pair);
    let cs: Vec<Acc> = bps.iter().map(|&b| pair.sigma.cumulative(b)).collect::<Result<_>>()?;
    let cw: Vec<Acc> = bps.iter().map(|&b| pair.w.cumulative(b)).collect::<Result<_>>()?;
    let keep = 2 * cfg.budget;
    let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(keep + 1);
    let mut scanned = 0u64;
    let n = bps.len();
    for i in 0..n {
        let mut push = |j: usize| {
            let len = (bps[j] - bps[i]).log2_abs();
            let s = cs[j].sub(cs[i]).to_logpos().log2();
            let w = cw[j].sub(cw[i]).to_logpos().log2();
            let v = s + w - 2.0 * len;
            scanned += 1;
            if !v.is_finite() {
                return;
            }
            if heap.len() < keep {
                heap.push(Cand { v, i, j });
            } else if heap.peek().is_some_and(|m| v > m.v) {
                heap.pop();
                heap.push(Cand { v, i, j });
            }
        };
        for j in i + 1..n.min(i + cfg.window + 1) {
            push(j);
        }
        let mut step = cfg.window.max(1).next_power_of_two() * 2;
        while i + step < n {
            push(i + step);
            step *= 2;
        }
    }
    let mut cands = heap.into_vec();
    cands.sort_by(|a, b| b.v.partial_cmp(&a.v).unwrap_or(Ordering::Equal).then(a.i.cmp(&b.i)));
    let first = cands.len().min(cfg.budget);
    let mut best = refine_candidates(pair, &bps, &cands[..first], cfg.refinement_depth)?;
    if dyadic.value > best.0 {
        best = (dyadic.value, dyadic.attaining);
    }
    let doubled = refine_candidates(pair, &bps, &cands, 2 * cfg.refinement_depth)?;
    let converged = doubled.0.log2() - best.0.log2() <= 1e-9 * best.0.log2().abs().max(1.0);
    if doubled.0 > best.0 {
        best = doubled;
    }
    Ok(A2Report {
        value: best.0,
        attaining: best.1,
        budget: cfg.budget,
        dyadic_value: dyadic.value,
        dyadic_attaining: dyadic.attaining,
        converged,
        candidates_scanned: scanned,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AInfEntry {
    pub interval: Interval,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AInfReport {
    /// Largest ratio over the candidate intervals.
    pub value: f64,
    pub grid: usize,
    pub per_interval: Vec<AInfEntry>,
    /// The quadrature is a lower bound for each candidate, not a certified
    /// value of the supremum over all intervals.
    pub approximate: bool,
}

#[derive(Clone, Copy)]
struct MeshCell {
    iv: Interval,
    mass: LogPos,
    parent: Option<usize>,
    split: bool,
}

/// Greedy nested mesh of `iv`: the cell with the largest `w` mass is split
/// next, at its middle breakpoint if it has interior breakpoints and at its
/// midpoint otherwise. Meshes for `n` and `2n` cells are nested, and cells
/// next to singular points get refined geometrically.
fn build_mesh(w: &PiecewisePowerFn, bps: &[Coord], iv: Interval, cells: usize) -> Result<Vec<MeshCell>> {
    #[derive(PartialEq)]
    struct Key(f64, std::cmp::Reverse<Coord>, usize);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, o: &Key) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Key {
        fn cmp(&self, o: &Key) -> Ordering {
            self.0.partial_cmp(&o.0).unwrap_or(Ordering::Equal).then(self.1.cmp(&o.1))
        }
    }
    let mut nodes = vec![MeshCell { iv, mass: w.integrate(iv)?, parent: None, split: false }];
    let mut heap = BinaryHeap::new();
    heap.push(Key(nodes[0].mass.log2(), std::cmp::Reverse(iv.lo), 0));
    let mut leaves = 1;
    while leaves < cells {
        let Some(Key(_, _, id)) = heap.pop() else { break };
        let cell = nodes[id].iv;
        let i = bps.partition_point(|b| *b <= cell.lo);
        let j = bps.partition_point(|b| *b < cell.hi);
        let cut = if j > i { bps[(i + j) / 2] } else { Coord::midpoint(cell.lo, cell.hi) };
        if cut <= cell.lo || cut >= cell.hi {
            continue;
        }
        nodes[id].split = true;
        for part in [Interval { lo: cell.lo, hi: cut }, Interval { lo: cut, hi: cell.hi }] {
            let mass = w.integrate(part)?;
            nodes.push(MeshCell { iv: part, mass, parent: Some(id), split: false });
            heap.push(Key(mass.log2(), std::cmp::Reverse(part.lo), nodes.len() - 1));
        }
        leaves += 1;
    }
    Ok(nodes)
}

/// Lower quadrature of `(1/w(I)) int_I M(w 1_I)` over each candidate `I`.
///
/// For `x` in a mesh cell `C`, `M(w 1_I)(x) >= M_C(w 1_I)`, the best average
/// over intervals containing all of `C`. Summing `|C| M_C` over the mesh
/// therefore bounds the integral from below, and seeding each cell's search
/// with its parent's maximizing interval makes the sum monotone under
/// refinement of the mesh.
pub fn a_infty_estimate(w: &PiecewisePowerFn, intervals: &[Interval], grid: usize) -> Result<AInfReport> {
    if grid < 16 {
        return Err(Error::InvalidArgument(format!("A-infinity quadrature needs at least 16 nodes, got {grid}")));
    }
    let mut per_interval = Vec::with_capacity(intervals.len());
    for &iv in intervals {
        let local = w.restrict(iv);
        let mass = local.integrate(iv)?;
        if mass.is_zero() {
            return Err(Error::Domain(format!("w vanishes on {iv}")));
        }
        let cfg = SupSearchConfig { domain: Some(iv), refinement_depth: 32, ..SupSearchConfig::default() };
        let searcher = MaximalSearcher::new(&local, cfg)?;
        let bps = local.breakpoints();
        let nodes = build_mesh(&local, &bps, iv, grid)?;
        let mut found: Vec<Option<MaximalResult>> = vec![None; nodes.len()];
        let mut total = Acc::ZERO;
        for (id, node) in nodes.iter().enumerate() {
            let seed = node.parent.and_then(|p| found[p]).map(|m| m.attaining);
            let m = searcher.search(node.iv, seed)?;
            found[id] = Some(m);
            if !node.split {
                total = total.add(Acc::from_logpos(m.value * node.iv.measure()));
            }
        }
        let ratio = (total.to_logpos() / mass).to_f64();
        per_interval.push(AInfEntry { interval: iv, ratio });
    }
    let value = per_interval.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(AInfReport { value, grid, per_interval, approximate: true })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub passed: bool,
    /// Left side over right side; at most 1 when the inequality holds.
    pub ratio: f64,
}

/// `<w^(1+e)>_I <= 2 <w>_I^(1+e)` with `e = 1 / (4 ainf)`.
pub fn reverse_holder_check(w: &PiecewisePowerFn, iv: Interval, ainf: f64) -> Result<InequalityCheck> {
    if !(ainf >= 1.0) {
        return Err(Error::InvalidArgument(format!("A-infinity constant must be at least 1, got {ainf}")));
    }
    let eps = 1.0 / (4.0 * ainf);
    let local = w.restrict(iv);
    let lhs = local.pow_scalar(1.0 + eps)?.average(iv)?;
    let rhs = LogPos::pow2(1.0) * local.average(iv)?.powf(1.0 + eps);
    let ratio = (lhs / rhs).to_f64();
    Ok(InequalityCheck { passed: lhs <= rhs, ratio })
}

/// Merges a list of intervals into disjoint sorted pieces.
fn normalize(parts: &[Interval]) -> Vec<Interval> {
    let mut v: Vec<Interval> = parts.iter().copied().filter(|p| !p.is_empty()).collect();
    v.sort_by(|a, b| a.lo.cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for p in v {
        match out.last_mut() {
            Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
            _ => out.push(p),
        }
    }
    out
}

/// `w(E) <= 2 w(Q) (|E|/|Q|)^(c/ainf)` for a finite union `E` inside `Q`.
pub fn subset_mass_check(
    w: &PiecewisePowerFn,
    q: Interval,
    e: &[Interval],
    c_const: f64,
    ainf: f64,
) -> Result<InequalityCheck> {
    if q.is_empty() {
        return Err(Error::ZeroLength);
    }
    if let Some(bad) = e.iter().find(|p| !p.is_empty() && !q.contains(p)) {
        return Err(Error::InvalidArgument(format!("{bad} is not inside {q}")));
    }
    if !(c_const > 0.0 && ainf >= 1.0) {
        return Err(Error::InvalidArgument("need c > 0 and ainf >= 1".into()));
    }
    let parts = normalize(e);
    let mut we = Acc::ZERO;
    let mut le = Coord::ZERO;
    for p in &parts {
        we = we.add(w.integrate_acc(*p)?);
        le = le + p.len();
    }
    let lhs = we.to_logpos();
    let frac = if le.is_zero() { LogPos::ZERO } else { LogPos::from_log2(le.log2_abs() - q.len().log2_abs()) };
    let rhs = LogPos::pow2(1.0) * w.integrate(q)? * frac.powf(c_const / ainf);
    let ratio = if rhs.is_zero() { if lhs.is_zero() { 0.0 } else { f64::INFINITY } } else { (lhs / rhs).to_f64() };
    Ok(InequalityCheck { passed: lhs <= rhs, ratio })
}

/// Constants swept for the subset-mass lemma.
pub const LEMMA_C_SWEEP: [f64; 4] = [0.125, 0.25, 0.5, 1.0];

/// Helper for tests and reports: a single ascending power `x^p` on `[0, hi)`.
pub fn power_function(p: f64, hi: f64) -> Result<PiecewisePowerFn> {
    PiecewisePowerFn::single(
        Interval::new(0.0, hi),
        crate::piecewise::PowerTerm::new(LogPos::ONE, Coord::ZERO, p, Orientation::Ascending),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{power_pair, unweighted_pair};

    #[test]
    fn unweighted_characteristics_are_one() {
        let p = unweighted_pair(Coord::new(2.0)).unwrap();
        let d = a2_dyadic(&p, 8).unwrap();
        assert!(d.value.log2().abs() < 1e-12);
        let s = a2_search(&p, &A2SearchConfig::default()).unwrap();
        assert!(s.value.log2().abs() < 1e-12);
        let a = a_infty_estimate(&p.w, &[Interval::new(0.0, 1.0)], 16).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_pair_dyadic_hits_initial_segments() {
        let alpha = 0.25;
        let p = power_pair(alpha).unwrap();
        let d = a2_dyadic(&p, 10).unwrap();
        let want = 1.0 / (alpha * (2.0 - alpha));
        assert!(d.value.to_f64() >= want * (1.0 - 1e-12));
    }

    #[test]
    fn reverse_holder_closed_form() {
        let w = power_function(-0.5, 1.0).unwrap();
        let r = reverse_holder_check(&w, Interval::new(0.0, 1.0), 1.0).unwrap();
        let want = (8.0 / 3.0) / (2.0 * 2f64.powf(1.25));
        assert!(r.passed);
        assert!((r.ratio - want).abs() < 1e-13, "{} vs {want}", r.ratio);
        assert!((want - 0.5606).abs() < 1e-3);
    }

    #[test]
    fn reverse_holder_for_constant_weight_is_half() {
        let w = PiecewisePowerFn::constant(Interval::new(0.0, 1.0), LogPos::ONE).unwrap();
        let r = reverse_holder_check(&w, Interval::new(0.0, 1.0), 3.0).unwrap();
        assert!((r.ratio - 0.5).abs() < 1e-14);
    }

    #[test]
    fn subset_mass_trivial_cases() {
        let w = power_function(-0.5, 1.0).unwrap();
        let q = Interval::new(0.0, 1.0);
        assert!(subset_mass_check(&w, q, &[q], 1.0, 2.0).unwrap().passed);
        assert!(subset_mass_check(&w, q, &[], 1.0, 2.0).unwrap().passed);
        assert!(subset_mass_check(&w, q, &[Interval::new(0.5, 1.5)], 1.0, 2.0).is_err());
    }
}
