//! Lower bounds for `sup { <f>_A : A contains B }`.
//!
//! Averages over intervals with breakpoint endpoints are exact, so the search
//! scans those first: it alternates between the best left endpoint for the
//! current right endpoint and vice versa, using the cumulative integral at
//! every breakpoint so each scan is a single pass. A golden-section pass then
//! moves each endpoint inside its neighbouring cells. Every value reported is
//! the exact average over the reported interval, hence a certified lower
//! bound for the supremum.

use serde::{Deserialize, Serialize};

use crate::coord::Coord;
use crate::error::Result;
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::piecewise::PiecewisePowerFn;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupSearchConfig {
    /// How far endpoints may move beyond the support; `None` means the
    /// length of the support.
    pub max_expansion: Option<Coord>,
    /// Golden-section steps per coordinate.
    pub refinement_depth: u32,
    /// Refinement stops once the bracket is this small relative to the
    /// current interval.
    pub tolerance: f64,
    /// Optional hard bounds for the search domain.
    pub domain: Option<Interval>,
    /// Alternating scan rounds.
    pub max_rounds: u32,
}

impl Default for SupSearchConfig {
    fn default() -> SupSearchConfig {
        SupSearchConfig { max_expansion: None, refinement_depth: 64, tolerance: 1e-10, domain: None, max_rounds: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalResult {
    pub value: LogPos,
    pub attaining: Interval,
}

/// Candidate ordering: larger value, then shorter, then further left.
fn better(v: LogPos, iv: &Interval, best_v: LogPos, best: &Interval) -> bool {
    if v.log2() != best_v.log2() {
        return v > best_v;
    }
    let (l1, l2) = (iv.len(), best.len());
    if l1 != l2 {
        return l1 < l2;
    }
    iv.lo < best.lo
}

/// Reusable search state for one function. A function built as `c * g`
/// is searched through `g` and the factor applied to the result, so the
/// search commutes exactly with positive scaling.
pub struct MaximalSearcher<'a> {
    g: &'a PiecewisePowerFn,
    factor: LogPos,
    bps: Vec<Coord>,
    cfg: SupSearchConfig,
}

type Best = (LogPos, Interval);

fn offer_to(best: &mut Best, v: LogPos, iv: Interval) {
    if better(v, &iv, best.0, &best.1) {
        *best = (v, iv);
    }
}

impl<'a> MaximalSearcher<'a> {
    pub fn new(f: &'a PiecewisePowerFn, cfg: SupSearchConfig) -> Result<MaximalSearcher<'a>> {
        let (factor, g) = f.factored();
        Ok(MaximalSearcher { g, factor, bps: g.breakpoints(), cfg })
    }

    pub fn config(&self) -> &SupSearchConfig {
        &self.cfg
    }

    fn domain_for(&self, b: &Interval) -> Option<Interval> {
        let s = self.g.support()?;
        let e = self.cfg.max_expansion.unwrap_or_else(|| s.len());
        let mut d = Interval { lo: s.lo - e, hi: s.hi + e };
        if let Some(dom) = self.cfg.domain {
            d = d.intersect(&dom);
        }
        Some(d.hull(b))
    }

    /// The exact average, the same number `PiecewisePowerFn::average` gives.
    fn average(&self, lo: Coord, hi: Coord) -> Result<LogPos> {
        self.g.average(Interval { lo, hi })
    }

    /// Best left endpoint among breakpoints in `[d_lo, b_lo]` (plus both
    /// ends) for a fixed right endpoint.
    fn scan_left(&self, d_lo: Coord, b_lo: Coord, r: Coord, best: &mut Best) -> Result<()> {
        let start = self.bps.partition_point(|x| *x < d_lo);
        let end = self.bps.partition_point(|x| *x <= b_lo);
        let points = std::iter::once(d_lo).chain(self.bps[start..end].iter().copied()).chain([b_lo]);
        for l in points {
            if l < r {
                offer_to(best, self.average(l, r)?, Interval { lo: l, hi: r });
            }
        }
        Ok(())
    }

    fn scan_right(&self, b_hi: Coord, d_hi: Coord, l: Coord, best: &mut Best) -> Result<()> {
        let start = self.bps.partition_point(|x| *x < b_hi);
        let end = self.bps.partition_point(|x| *x <= d_hi);
        let points = std::iter::once(b_hi).chain(self.bps[start..end].iter().copied()).chain([d_hi]);
        for r in points {
            if r > l {
                offer_to(best, self.average(l, r)?, Interval { lo: l, hi: r });
            }
        }
        Ok(())
    }

    /// Neighbouring breakpoints of `x`, clipped to `[lo, hi]`.
    fn bracket(&self, x: Coord, lo: Coord, hi: Coord) -> (Coord, Coord) {
        let i = self.bps.partition_point(|b| *b < x);
        let left = if i > 0 { self.bps[i - 1].max(lo) } else { lo };
        let j = self.bps.partition_point(|b| *b <= x);
        let right = if j < self.bps.len() { self.bps[j].min(hi) } else { hi };
        (left.min(x), right.max(x))
    }

    /// Golden-section refinement of one endpoint over `[lo, hi]`. The points
    /// visited depend only on the bracket and the values seen, so a deeper
    /// run visits every point a shallower one does.
    fn golden(
        &self,
        lo: Coord,
        hi: Coord,
        scale: Coord,
        eval: &dyn Fn(Coord) -> Result<Option<Best>>,
        best: &mut Best,
    ) -> Result<()> {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let (mut a, mut b) = (lo, hi);
        if b <= a {
            return Ok(());
        }
        let offer = |x: Coord, best: &mut Best| -> Result<LogPos> {
            match eval(x)? {
                Some((v, iv)) => {
                    offer_to(best, v, iv);
                    Ok(v)
                }
                None => Ok(LogPos::ZERO),
            }
        };
        let mut c = Coord::lerp(a, b, 1.0 - INV_PHI);
        let mut d = Coord::lerp(a, b, INV_PHI);
        let mut fc = offer(c, best)?;
        let mut fd = offer(d, best)?;
        let stop = scale.abs().scale(self.cfg.tolerance);
        for _ in 0..self.cfg.refinement_depth {
            if (b - a) <= stop {
                break;
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = Coord::lerp(a, b, 1.0 - INV_PHI);
                fc = offer(c, best)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = Coord::lerp(a, b, INV_PHI);
                fd = offer(d, best)?;
            }
        }
        Ok(())
    }

    /// Moves each endpoint of `from` inside its neighbouring cells with the
    /// other endpoint held fixed.
    fn refine(&self, from: &Best, d: &Interval, b: &Interval, best: &mut Best) -> Result<()> {
        let (l0, r0) = (from.1.lo, from.1.hi);
        let scale = from.1.len();
        let (lo, hi) = self.bracket(l0, d.lo, b.lo);
        let left = |l: Coord| -> Result<Option<Best>> {
            if l >= r0 {
                return Ok(None);
            }
            Ok(Some((self.average(l, r0)?, Interval { lo: l, hi: r0 })))
        };
        self.golden(lo, hi, scale, &left, best)?;
        let (lo, hi) = self.bracket(r0, b.hi, d.hi);
        let right = |r: Coord| -> Result<Option<Best>> {
            if r <= l0 {
                return Ok(None);
            }
            Ok(Some((self.average(l0, r)?, Interval { lo: l0, hi: r })))
        };
        self.golden(lo, hi, scale, &right, best)
    }

    /// Lower bound for `sup <f>_A` over `A` containing `b`, optionally seeded
    /// with an interval whose average the result must dominate.
    ///
    /// Each round scans breakpoint endpoints from the current scan state and
    /// then refines that state without feeding the refinement back, so the
    /// candidates of a run are a superset of those of any run with smaller
    /// `max_rounds` and `refinement_depth`: larger budgets never report less.
    pub fn search(&self, b: Interval, seed: Option<Interval>) -> Result<MaximalResult> {
        let Some(d) = self.domain_for(&b) else {
            return Ok(MaximalResult { value: LogPos::ZERO, attaining: b });
        };
        let mut state: Best = (LogPos::ZERO, Interval { lo: d.lo, hi: d.hi });
        if !b.is_empty() {
            state = (self.average(b.lo, b.hi)?, b);
        }
        if let Some(s) = seed {
            let s = s.hull(&b);
            if !s.is_empty() {
                offer_to(&mut state, self.average(s.lo, s.hi)?, s);
            }
        }
        let mut best = state;
        for round in 0..self.cfg.max_rounds.max(1) {
            let before = state.1;
            self.scan_left(d.lo, b.lo, state.1.hi, &mut state)?;
            self.scan_right(b.hi, d.hi, state.1.lo, &mut state)?;
            if round > 0 && state.1 == before {
                break;
            }
            offer_to(&mut best, state.0, state.1);
            self.refine(&state, &d, &b, &mut best)?;
        }
        Ok(MaximalResult { value: self.factor * best.0, attaining: best.1 })
    }
}

/// `M_B f`: a certified lower bound for the largest average of `f` over
/// intervals containing `b`, with the interval that attains it.
pub fn maximal_over_containing(f: &PiecewisePowerFn, b: Interval, cfg: &SupSearchConfig) -> Result<MaximalResult> {
    MaximalSearcher::new(f, *cfg)?.search(b, None)
}

/// The Hardy-Littlewood maximal function at `x`, by the same search over
/// intervals containing the point. A seed interval (widened to contain `x`)
/// is always among the candidates.
pub fn hl_maximal_at(
    f: &PiecewisePowerFn,
    x: Coord,
    seed: Option<Interval>,
    cfg: &SupSearchConfig,
) -> Result<MaximalResult> {
    MaximalSearcher::new(f, *cfg)?.search(Interval { lo: x, hi: x }, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{Orientation, PowerTerm};

    fn indicator() -> PiecewisePowerFn {
        PiecewisePowerFn::constant(Interval::new(0.0, 1.0), LogPos::ONE).unwrap()
    }

    #[test]
    fn indicator_on_itself() {
        let r = maximal_over_containing(&indicator(), Interval::new(0.0, 1.0), &SupSearchConfig::default()).unwrap();
        assert!(r.value.log2().abs() < 1e-15);
        assert_eq!(r.attaining, Interval::new(0.0, 1.0));
    }

    #[test]
    fn indicator_maximal_function() {
        let cfg = SupSearchConfig::default();
        let inside = hl_maximal_at(&indicator(), Coord::new(0.5), None, &cfg).unwrap();
        assert!(inside.value.log2().abs() < 1e-15);
        let outside = hl_maximal_at(&indicator(), Coord::new(2.0), None, &cfg).unwrap();
        assert!((outside.value.to_f64() - 0.5).abs() < 1e-12, "{:?}", outside);
    }

    #[test]
    fn singular_power_extends_to_the_origin() {
        let alpha: f64 = 0.25;
        let f = PiecewisePowerFn::single(
            Interval::new(0.0, 2.0),
            PowerTerm::new(LogPos::ONE, Coord::ZERO, alpha - 1.0, Orientation::Ascending),
        )
        .unwrap();
        for t in [0.3, 0.01, 1e-9] {
            let r = maximal_over_containing(&f, Interval::new(t, 2.0 * t), &SupSearchConfig::default()).unwrap();
            let want = (2.0 * t).powf(alpha - 1.0) / alpha;
            assert!((r.value.to_f64() / want - 1.0).abs() < 1e-12, "t = {t}: {:?}", r);
            assert_eq!(r.attaining.lo, Coord::ZERO);
        }
    }
}
