//! Dual power weights and the lacunary mixture weight.
//!
//! The lacunary weight with `alpha = 2^-a` is, on each dyadic level
//! `[2^-(k+1), 2^-k)`, an ascending spike `c (x - 2^-(k+1))^(1-alpha)`, the bulk
//! `x^(alpha-1)`, and a descending spike `c (2^-k - x)^(1-alpha)`, where
//! `c = 2^(2k(1-alpha)) / alpha`. It satisfies `sigma(x/2) = 2^(1-alpha) sigma(x)`
//! exactly, so level and tail integrals are geometric in `k` and can be
//! evaluated from the `k = 0` cell alone.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::params::SpecString;
use crate::piecewise::{Orientation, Piece, PiecewisePowerFn, PowerTerm};

/// Upper bound on materialized lacunary levels (three pieces each).
pub const MAX_EXPLICIT_LEVELS: u64 = 1 << 18;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairKind {
    /// `sigma = x^(1-alpha)`, `w = x^(alpha-1)`.
    Power,
    /// The lacunary mixture with `alpha = 2^-a`.
    Lacunary { a: u32 },
    /// `sigma = w = 1`.
    Unweighted,
}

/// How faithfully the explicit piece list represents the weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Representation {
    /// The piece list is the weight itself on its domain.
    Exact,
    /// Levels below `2^-depth` are dropped; they carry a fraction
    /// `tail_mass_rel` of the sigma mass on `[0, 1)`.
    ExplicitTruncated { depth: u64, tail_mass_rel: f64 },
}

/// The exactly self-similar description of a weight on `(0, 1)`.
#[derive(Clone, Debug)]
pub struct SelfSimilarWeight {
    /// Pieces of sigma on `[1/2, 1)`.
    pub base_cell: Vec<Piece>,
    /// `sigma(x/2) / sigma(x)`.
    pub scale_factor: LogPos,
    /// The w mass of level `k` is `2^(-k tail_exponent_w)` times that of level 0.
    pub tail_exponent_w: f64,
    pub tail_exponent_sigma: f64,
    /// The sigma branch used on `[1, inf)`.
    pub tail_term: PowerTerm,
    level0_w: LogPos,
    level0_sigma: LogPos,
}

impl SelfSimilarWeight {
    fn new(
        base_cell: Vec<Piece>,
        scale_factor: LogPos,
        tail_exponent_w: f64,
        tail_exponent_sigma: f64,
        tail_term: PowerTerm,
    ) -> Result<SelfSimilarWeight> {
        let sigma = PiecewisePowerFn::new(base_cell.clone())?;
        let w = sigma.reciprocal()?;
        let cell = Interval::new(0.5, 1.0);
        Ok(SelfSimilarWeight {
            level0_w: w.integrate(cell)?,
            level0_sigma: sigma.integrate(cell)?,
            base_cell,
            scale_factor,
            tail_exponent_w,
            tail_exponent_sigma,
            tail_term,
        })
    }

    fn eval_sigma(&self, x: Coord) -> Result<LogPos> {
        if !x.is_positive() {
            return Err(Error::Domain(format!("sigma is evaluated at x > 0, got {x}")));
        }
        if x >= Coord::ONE {
            return Ok(self.tail_term.eval(x));
        }
        // x lies in [2^e, 2^(e+1)) = level k with k = -e - 1.
        let k = -x.exponent() - 1;
        let y = x.mul_pow2(k);
        let i = self.base_cell.partition_point(|p| p.interval.hi <= y);
        let base = self.base_cell[i].term.eval(y);
        Ok(base * LogPos::from_log2(self.scale_factor.log2() * k as f64))
    }
}

/// A weight `w`, its dual `sigma = 1/w`, and the generating parameter.
#[derive(Clone, Debug)]
pub struct WeightPair {
    pub alpha: f64,
    pub kind: PairKind,
    pub sigma: PiecewisePowerFn,
    pub w: PiecewisePowerFn,
    pub representation: Representation,
    pub self_similar: Option<SelfSimilarWeight>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn ascending(coeff: LogPos, offset: Coord, p: f64) -> PowerTerm {
    PowerTerm::new(coeff, offset, p, Orientation::Ascending)
}

/// The dual power weights on `[0, 2)`.
pub fn power_pair(alpha: f64) -> Result<WeightPair> {
    power_pair_on(alpha, Coord::new(2.0))
}

/// The dual power weights on `[0, hi)`.
pub fn power_pair_on(alpha: f64, hi: Coord) -> Result<WeightPair> {
    check_alpha(alpha)?;
    if !hi.is_positive() {
        return Err(Error::InvalidArgument(format!("domain end must be positive, got {hi}")));
    }
    let term = ascending(LogPos::ONE, Coord::ZERO, 1.0 - alpha);
    let sigma = PiecewisePowerFn::single(Interval { lo: Coord::ZERO, hi }, term)?;
    let w = sigma.reciprocal()?;
    let base = vec![Piece::new(Interval::new(0.5, 1.0), term)];
    let ss = SelfSimilarWeight::new(base, LogPos::pow2(alpha - 1.0), alpha, 2.0 - alpha, term)?;
    Ok(WeightPair {
        alpha,
        kind: PairKind::Power,
        sigma,
        w,
        representation: Representation::Exact,
        self_similar: Some(ss),
    })
}

/// `sigma = w = 1` on `[0, hi)`.
pub fn unweighted_pair(hi: Coord) -> Result<WeightPair> {
    let term = PowerTerm::constant(LogPos::ONE);
    let sigma = PiecewisePowerFn::single(Interval { lo: Coord::ZERO, hi }, term)?;
    let base = vec![Piece::new(Interval::new(0.5, 1.0), term)];
    let ss = SelfSimilarWeight::new(base, LogPos::pow2(-1.0), 1.0, 1.0, term)?;
    Ok(WeightPair {
        alpha: 1.0,
        kind: PairKind::Unweighted,
        w: sigma.clone(),
        sigma,
        representation: Representation::Exact,
        self_similar: Some(ss),
    })
}

/// The three sigma pieces of level `k`, in increasing order.
pub fn lacunary_level_pieces(a: u32, k: i64) -> [Piece; 3] {
    let alpha = (-(a as f64)).exp2();
    let lo = Coord::pow2(-k - 1);
    let hi = Coord::pow2(-k);
    let spike_coeff = LogPos::from_log2(2.0 * k as f64 * (1.0 - alpha) + a as f64);
    let left_end = Coord::new(1.0 + alpha).mul_pow2(-k - 1);
    let right_start = Coord::new(1.0 - alpha).mul_pow2(-k);
    [
        Piece::new(Interval { lo, hi: left_end }, ascending(spike_coeff, lo, 1.0 - alpha)),
        Piece::new(Interval { lo: left_end, hi: right_start }, ascending(LogPos::ONE, Coord::ZERO, alpha - 1.0)),
        Piece::new(
            Interval { lo: right_start, hi },
            PowerTerm::new(spike_coeff, hi, 1.0 - alpha, Orientation::Descending),
        ),
    ]
}

/// The lacunary pair truncated so the dropped sigma mass is below
/// `tail_tolerance` relative to `[0, 1)`, with the tail branch on `[1, 2)`.
pub fn lacunary_pair(a: u32, tail_tolerance: f64) -> Result<WeightPair> {
    lacunary_pair_on(a, tail_tolerance, Coord::new(2.0))
}

pub fn lacunary_pair_on(a: u32, tail_tolerance: f64, tail_end: Coord) -> Result<WeightPair> {
    if a < 2 {
        return Err(Error::InvalidArgument(format!("lacunary weights need a >= 2, got {a}")));
    }
    if a > 50 {
        return Err(Error::InvalidArgument(format!("a = {a} leaves 1 +- 2^-a unrepresentable")));
    }
    if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
        return Err(Error::InvalidArgument(format!("tail tolerance must lie in (0, 1), got {tail_tolerance}")));
    }
    if tail_end <= Coord::ONE {
        return Err(Error::InvalidArgument("the tail branch needs an end beyond 1".into()));
    }
    let alpha = (-(a as f64)).exp2();
    let wanted = ((1.0 / tail_tolerance).log2() / alpha).ceil() as u64 + 4;
    let depth = wanted.min(MAX_EXPLICIT_LEVELS);
    let mut pieces = Vec::with_capacity(3 * depth as usize + 1);
    for k in (0..depth as i64).rev() {
        pieces.extend(lacunary_level_pieces(a, k));
    }
    let tail_term = ascending(LogPos::ONE, Coord::ZERO, alpha - 1.0);
    pieces.push(Piece::new(Interval { lo: Coord::ONE, hi: tail_end }, tail_term));
    let sigma = PiecewisePowerFn::new(pieces)?;
    let w = sigma.reciprocal()?;
    let ss = SelfSimilarWeight::new(
        lacunary_level_pieces(a, 0).to_vec(),
        LogPos::pow2(1.0 - alpha),
        2.0 - alpha,
        alpha,
        tail_term,
    )?;
    Ok(WeightPair {
        alpha,
        kind: PairKind::Lacunary { a },
        sigma,
        w,
        representation: Representation::ExplicitTruncated {
            depth,
            tail_mass_rel: (-(depth as f64) * alpha).exp2(),
        },
        self_similar: Some(ss),
    })
}

impl WeightPair {
    fn ss(&self) -> Result<&SelfSimilarWeight> {
        self.self_similar
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("weight pair has no self-similar representation".into()))
    }

    /// Scales sigma by `c` and w by `1/c`.
    pub fn scaled(&self, c: LogPos) -> Result<WeightPair> {
        let inv = c.recip()?;
        let self_similar = self.self_similar.as_ref().map(|s| SelfSimilarWeight {
            base_cell: s
                .base_cell
                .iter()
                .map(|p| Piece::new(p.interval, PowerTerm { coeff: p.term.coeff * c, ..p.term }))
                .collect(),
            tail_term: PowerTerm { coeff: s.tail_term.coeff * c, ..s.tail_term },
            level0_w: s.level0_w * inv,
            level0_sigma: s.level0_sigma * c,
            ..s.clone()
        });
        Ok(WeightPair { sigma: self.sigma.scale(c), w: self.w.scale(inv), self_similar, ..self.clone() })
    }

    /// The pair `x -> (sigma(2^k x), w(2^k x))`. The self-similar description
    /// no longer applies and is dropped.
    pub fn dilated_pow2(&self, k: i64) -> WeightPair {
        WeightPair {
            sigma: self.sigma.dilate_pow2(k),
            w: self.w.dilate_pow2(k),
            self_similar: None,
            ..self.clone()
        }
    }
}

/// `(w, sigma)` integrals over level `[2^-(k+1), 2^-k)`, from the level-0
/// cell and the exact scale factors.
pub fn level_integrals(pair: &WeightPair, k: u64) -> Result<(LogPos, LogPos)> {
    let ss = pair.ss()?;
    let kf = k as f64;
    Ok((
        LogPos::from_log2(ss.level0_w.log2() - kf * ss.tail_exponent_w),
        LogPos::from_log2(ss.level0_sigma.log2() - kf * ss.tail_exponent_sigma),
    ))
}

/// `1 - 2^-e` without cancellation.
fn one_minus_pow2(e: f64) -> LogPos {
    LogPos::from_log2((-(-e * std::f64::consts::LN_2).exp_m1()).log2())
}

/// `(w, sigma)` integrals over `[0, 2^-k)`: exact geometric sums.
pub fn tail_integrals(pair: &WeightPair, k: u64) -> Result<(LogPos, LogPos)> {
    let ss = pair.ss()?;
    let (w, s) = level_integrals(pair, k)?;
    Ok((w / one_minus_pow2(ss.tail_exponent_w), s / one_minus_pow2(ss.tail_exponent_sigma)))
}

/// Pointwise sigma via the self-similar description (falls back to the
/// explicit pieces for pairs without one).
pub fn eval_sigma(pair: &WeightPair, x: Coord) -> Result<LogPos> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("sigma is evaluated at x > 0, got {x}")));
    }
    match &pair.self_similar {
        Some(ss) => ss.eval_sigma(x),
        None => Ok(pair.sigma.eval(x)),
    }
}

pub fn eval_w(pair: &WeightPair, x: Coord) -> Result<LogPos> {
    eval_sigma(pair, x)?.recip()
}

/// CLI builder for weight pairs: `power:alpha=0.25`, `lacunary:a=6,tol=1e-10`,
/// or `unweighted`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairSpec {
    Power { alpha: f64 },
    Lacunary { a: u32, tol: f64 },
    Unweighted,
}

impl PairSpec {
    pub fn build(&self) -> Result<WeightPair> {
        match *self {
            PairSpec::Power { alpha } => power_pair(alpha),
            PairSpec::Lacunary { a, tol } => lacunary_pair(a, tol),
            PairSpec::Unweighted => unweighted_pair(Coord::new(2.0)),
        }
    }
}

impl FromStr for PairSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<PairSpec> {
        let spec = SpecString::parse(s)?;
        match spec.name.as_str() {
            "power" => {
                spec.only(&["alpha"])?;
                Ok(PairSpec::Power { alpha: spec.require("alpha")? })
            }
            "lacunary" => {
                spec.only(&["a", "tol"])?;
                Ok(PairSpec::Lacunary {
                    a: spec.require("a")?,
                    tol: spec.get("tol")?.unwrap_or(DEFAULT_TAIL_TOLERANCE),
                })
            }
            "unweighted" => {
                spec.only(&[])?;
                Ok(PairSpec::Unweighted)
            }
            _ => Err(spec.unknown_kind()),
        }
    }
}

impl fmt::Display for PairSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairSpec::Power { alpha } => write!(f, "power:alpha={alpha}"),
            PairSpec::Lacunary { a, tol } => write!(f, "lacunary:a={a},tol={tol:e}"),
            PairSpec::Unweighted => write!(f, "unweighted"),
        }
    }
}
