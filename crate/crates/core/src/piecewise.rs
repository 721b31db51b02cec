//! Piecewise power-law functions with closed-form integration.
//!
//! A [`PiecewisePowerFn`] is an ordered list of disjoint half-open pieces,
//! each carrying one term `c * (x - a)^p` or `c * (a - x)^p`. Integrals are
//! exact antiderivatives evaluated in log space, and every function keeps a
//! prefix index of cumulative integrals so that `integrate` costs a binary
//! search plus at most two partial pieces.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::acc::Acc;
use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `(x - a)^p`, defined to the right of the offset.
    Ascending,
    /// `(a - x)^p`, defined to the left of the offset.
    Descending,
}

/// One power expression `coeff * (±(x - offset))^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerTerm {
    pub coeff: LogPos,
    pub offset: Coord,
    pub exponent: f64,
    pub orientation: Orientation,
}

impl PowerTerm {
    pub fn new(coeff: LogPos, offset: Coord, exponent: f64, orientation: Orientation) -> PowerTerm {
        assert!(exponent.is_finite(), "exponent must be finite");
        PowerTerm { coeff, offset, exponent, orientation }
    }

    pub fn constant(c: LogPos) -> PowerTerm {
        PowerTerm::new(c, Coord::ZERO, 0.0, Orientation::Ascending)
    }

    /// The oriented argument `x - a` or `a - x`.
    pub fn arg(&self, x: Coord) -> Coord {
        match self.orientation {
            Orientation::Ascending => x - self.offset,
            Orientation::Descending => self.offset - x,
        }
    }

    /// Pointwise value. At the offset a negative exponent gives `+inf`.
    pub fn eval(&self, x: Coord) -> LogPos {
        if self.coeff.is_zero() || self.exponent == 0.0 {
            return self.coeff;
        }
        let u = self.arg(x);
        if u.is_zero() || u.is_negative() {
            return if self.exponent > 0.0 { LogPos::ZERO } else { LogPos::INFINITY };
        }
        self.coeff * LogPos::from_log2(self.exponent * u.log2_abs())
    }

    fn valid_on(&self, iv: &Interval) -> bool {
        match self.orientation {
            Orientation::Ascending => iv.lo >= self.offset,
            Orientation::Descending => iv.hi <= self.offset,
        }
    }
}

/// `ln(u_lo / u_hi)` given the width `d = u_hi - u_lo` computed directly
/// from the interval endpoints, which is exact where `u_lo` alone may not be.
fn ln_lo_over_hi(u_lo: Coord, u_hi: Coord, d: Coord) -> f64 {
    if d <= u_hi.mul_pow2(-1) {
        (-d.ratio(u_hi)).ln_1p()
    } else {
        u_lo.ln_ratio(u_hi)
    }
}

/// Closed-form integral of a single term over `[iv.lo, iv.hi]`.
///
/// For `q = p + 1 > 0` the value is `c u_hi^q (1 - (u_lo/u_hi)^q) / q`,
/// written with `expm1` so that thin intervals keep their relative accuracy;
/// `q < 0` factors out `u_lo^q` instead, and `q = 0` is the logarithm.
pub fn integrate_term(term: &PowerTerm, iv: Interval) -> Result<LogPos> {
    if iv.is_empty() || term.coeff.is_zero() {
        return Ok(LogPos::ZERO);
    }
    let (u_lo, u_hi) = match term.orientation {
        Orientation::Ascending => (iv.lo - term.offset, iv.hi - term.offset),
        Orientation::Descending => (term.offset - iv.hi, term.offset - iv.lo),
    };
    if u_lo.is_negative() {
        return Err(Error::Domain(format!(
            "interval {iv} crosses the offset {} of a power term",
            term.offset
        )));
    }
    let d = iv.len();
    let p = term.exponent;
    let q = p + 1.0;
    let lc = term.coeff.log2();
    if p == 0.0 {
        // Constants use the length itself, so their averages are exact.
        return Ok(LogPos::from_log2(lc + d.log2_abs()));
    }
    let l = if q > 0.0 {
        if u_lo.is_zero() {
            lc + q * u_hi.log2_abs() - q.log2()
        } else {
            let ln_r = ln_lo_over_hi(u_lo, u_hi, d);
            let factor = -(q * ln_r).exp_m1();
            lc + q * u_hi.log2_abs() + factor.log2() - q.log2()
        }
    } else {
        if u_lo.is_zero() {
            return Err(Error::NonIntegrable { exponent: p });
        }
        let ln_r = -ln_lo_over_hi(u_lo, u_hi, d);
        if q == 0.0 {
            lc + ln_r.log2()
        } else {
            let factor = -(q * ln_r).exp_m1();
            lc + q * u_lo.log2_abs() + factor.log2() - (-q).log2()
        }
    };
    Ok(LogPos::from_log2(l))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub interval: Interval,
    pub term: PowerTerm,
}

impl Piece {
    pub fn new(interval: Interval, term: PowerTerm) -> Piece {
        Piece { interval, term }
    }

    pub fn integral(&self) -> Result<LogPos> {
        integrate_term(&self.term, self.interval)
    }
}

/// A function given by disjoint power-law pieces, zero elsewhere.
#[derive(Clone, Debug)]
pub struct PiecewisePowerFn {
    pieces: Vec<Piece>,
    prefix: Vec<Acc>,
    /// Pieces whose integral diverges; excluded from the prefix and rejected
    /// by any query that covers their singular end.
    non_integrable: Vec<usize>,
    /// For `c * g` built by [`PiecewisePowerFn::scale`]: the factor and `g`.
    /// Integrals are then `c` times those of `g`, one log-domain product,
    /// which keeps integration exactly homogeneous.
    unscaled: Option<(LogPos, Arc<PiecewisePowerFn>)>,
}

impl PartialEq for PiecewisePowerFn {
    fn eq(&self, other: &Self) -> bool {
        self.pieces == other.pieces
    }
}

impl PiecewisePowerFn {
    pub fn new(pieces: Vec<Piece>) -> Result<PiecewisePowerFn> {
        for (i, p) in pieces.iter().enumerate() {
            if p.interval.hi <= p.interval.lo {
                return Err(Error::InvalidArgument(format!("piece {i} has empty interval {}", p.interval)));
            }
            if !p.term.valid_on(&p.interval) {
                return Err(Error::Domain(format!(
                    "piece {i} on {} crosses its offset {}",
                    p.interval, p.term.offset
                )));
            }
            if i > 0 && pieces[i - 1].interval.hi > p.interval.lo {
                return Err(Error::InvalidArgument(format!("pieces {} and {i} overlap or are unsorted", i - 1)));
            }
        }
        let mut prefix = Vec::with_capacity(pieces.len() + 1);
        let mut non_integrable = Vec::new();
        let mut acc = Acc::ZERO;
        prefix.push(acc);
        for (i, p) in pieces.iter().enumerate() {
            match p.integral() {
                Ok(v) => acc = acc.add(Acc::from_logpos(v)),
                Err(Error::NonIntegrable { .. }) => non_integrable.push(i),
                Err(e) => return Err(e),
            }
            prefix.push(acc);
        }
        Ok(PiecewisePowerFn { pieces, prefix, non_integrable, unscaled: None })
    }

    pub fn zero() -> PiecewisePowerFn {
        PiecewisePowerFn::new(Vec::new()).unwrap()
    }

    /// A single term on one interval.
    pub fn single(iv: Interval, term: PowerTerm) -> Result<PiecewisePowerFn> {
        PiecewisePowerFn::new(vec![Piece::new(iv, term)])
    }

    pub fn constant(iv: Interval, c: LogPos) -> Result<PiecewisePowerFn> {
        PiecewisePowerFn::single(iv, PowerTerm::constant(c))
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn support(&self) -> Option<Interval> {
        Some(Interval { lo: self.pieces.first()?.interval.lo, hi: self.pieces.last()?.interval.hi })
    }

    /// Sorted distinct piece endpoints.
    pub fn breakpoints(&self) -> Vec<Coord> {
        let mut out: Vec<Coord> = Vec::with_capacity(self.pieces.len() + 1);
        for p in &self.pieces {
            for x in [p.interval.lo, p.interval.hi] {
                if out.last() != Some(&x) {
                    out.push(x);
                }
            }
        }
        out
    }

    pub fn is_integrable(&self) -> bool {
        self.non_integrable.is_empty()
    }

    /// Index of the piece containing `x`, if any.
    pub fn piece_at(&self, x: Coord) -> Option<usize> {
        let i = self.pieces.partition_point(|p| p.interval.hi <= x);
        (i < self.pieces.len() && self.pieces[i].interval.lo <= x).then_some(i)
    }

    /// Point value; at a breakpoint the right piece is used.
    pub fn eval(&self, x: Coord) -> LogPos {
        match self.piece_at(x) {
            Some(i) => self.pieces[i].term.eval(x),
            None => LogPos::ZERO,
        }
    }

    /// Integral over `(-inf, lo of piece i)`; `i = len()` gives the total.
    pub fn prefix(&self, i: usize) -> Acc {
        self.prefix[i]
    }

    fn check_range(&self, from: usize, to: usize) -> Result<()> {
        let k = self.non_integrable.partition_point(|&b| b < from);
        if k < self.non_integrable.len() && self.non_integrable[k] < to {
            let p = self.pieces[self.non_integrable[k]].term.exponent;
            return Err(Error::NonIntegrable { exponent: p });
        }
        Ok(())
    }

    fn partial(&self, i: usize, iv: &Interval) -> Result<Acc> {
        let piece = &self.pieces[i];
        let v = integrate_term(&piece.term, piece.interval.intersect(iv))?;
        Ok(Acc::from_logpos(v))
    }

    /// Integral over `(-inf, x)`.
    pub fn cumulative(&self, x: Coord) -> Result<Acc> {
        let i = self.pieces.partition_point(|p| p.interval.hi <= x);
        self.check_range(0, i)?;
        let mut acc = self.prefix[i];
        if i < self.pieces.len() && self.pieces[i].interval.lo < x {
            let iv = Interval { lo: self.pieces[i].interval.lo, hi: x };
            acc = acc.add(self.partial(i, &iv)?);
        }
        Ok(acc)
    }

    /// Integral over `iv` as a double-double accumulator.
    pub fn integrate_acc(&self, iv: Interval) -> Result<Acc> {
        if iv.is_empty() {
            return Ok(Acc::ZERO);
        }
        let i = self.pieces.partition_point(|p| p.interval.hi <= iv.lo);
        let j = self.pieces.partition_point(|p| p.interval.lo < iv.hi);
        if i >= j {
            return Ok(Acc::ZERO);
        }
        if j - i == 1 {
            return self.partial(i, &iv);
        }
        self.check_range(i + 1, j - 1)?;
        let middle = self.prefix[j - 1].sub(self.prefix[i + 1]);
        Ok(self.partial(i, &iv)?.add(middle).add(self.partial(j - 1, &iv)?))
    }

    /// Exact integral over `iv` (which may extend beyond the support).
    pub fn integrate(&self, iv: Interval) -> Result<LogPos> {
        if let Some((c, g)) = &self.unscaled {
            return Ok(*c * g.integrate(iv)?);
        }
        Ok(self.integrate_acc(iv)?.to_logpos())
    }

    /// The same integral summed piece by piece, bypassing the prefix index.
    pub fn integrate_direct(&self, iv: Interval) -> Result<LogPos> {
        let mut acc = Acc::ZERO;
        for p in &self.pieces {
            let part = p.interval.intersect(&iv);
            if !part.is_empty() {
                acc = acc.add(Acc::from_logpos(integrate_term(&p.term, part)?));
            }
        }
        Ok(acc.to_logpos())
    }

    /// `integrate(iv) / |iv|`.
    pub fn average(&self, iv: Interval) -> Result<LogPos> {
        if iv.is_empty() {
            return Err(Error::ZeroLength);
        }
        if let Some((c, g)) = &self.unscaled {
            return Ok(*c * g.average(iv)?);
        }
        Ok(self.integrate(iv)? / iv.measure())
    }

    /// `(c, g)` with `self = c * g`, where `g` was not built by scaling.
    pub fn factored(&self) -> (LogPos, &PiecewisePowerFn) {
        match &self.unscaled {
            Some((c, g)) => (*c, g),
            None => (LogPos::ONE, self),
        }
    }

    fn map_terms(&self, f: impl Fn(&PowerTerm) -> Result<PowerTerm>) -> Result<PiecewisePowerFn> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Ok(Piece::new(p.interval, f(&p.term)?)))
            .collect::<Result<Vec<_>>>()?;
        PiecewisePowerFn::new(pieces)
    }

    /// `c * f`.
    pub fn scale(&self, c: LogPos) -> PiecewisePowerFn {
        let mut out = self.map_terms(|t| Ok(PowerTerm { coeff: t.coeff * c, ..*t })).expect("scaling keeps validity");
        out.unscaled = Some(match &self.unscaled {
            Some((c0, g)) => (*c0 * c, Arc::clone(g)),
            None => (c, Arc::new(self.clone())),
        });
        out
    }

    /// `1 / f`, piece by piece.
    pub fn reciprocal(&self) -> Result<PiecewisePowerFn> {
        self.map_terms(|t| {
            let coeff = t.coeff.recip()?;
            let exponent = if t.exponent == 0.0 { 0.0 } else { -t.exponent };
            Ok(PowerTerm { coeff, exponent, ..*t })
        })
    }

    /// `f^t`. Exponents at or below -1 touching an offset are accepted here
    /// and reported when integrated.
    pub fn pow_scalar(&self, t: f64) -> Result<PiecewisePowerFn> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("power must be finite, got {t}")));
        }
        self.map_terms(|term| {
            if term.coeff.is_zero() && t <= 0.0 {
                return Err(Error::Domain("nonpositive power of a zero coefficient".into()));
            }
            let exponent = term.exponent * t;
            let exponent = if exponent == 0.0 { 0.0 } else { exponent };
            Ok(PowerTerm { coeff: term.coeff.powf(t), exponent, ..*term })
        })
    }

    /// `f * 1_iv`.
    pub fn restrict(&self, iv: Interval) -> PiecewisePowerFn {
        let pieces = self
            .pieces
            .iter()
            .filter_map(|p| {
                let part = p.interval.intersect(&iv);
                (!part.is_empty()).then(|| Piece::new(part, p.term))
            })
            .collect();
        PiecewisePowerFn::new(pieces).expect("restriction keeps validity")
    }

    /// `f * s` on the common refinement of both partitions. Cells where `s`
    /// vanishes are dropped.
    pub fn multiply_step(&self, s: &StepFn) -> PiecewisePowerFn {
        let mut pieces = Vec::new();
        let cells: Vec<(Interval, LogPos)> = s.cells().filter(|(_, v)| !v.is_zero()).collect();
        let mut start = 0;
        for p in &self.pieces {
            while start < cells.len() && cells[start].0.hi <= p.interval.lo {
                start += 1;
            }
            let mut k = start;
            while k < cells.len() && cells[k].0.lo < p.interval.hi {
                let part = p.interval.intersect(&cells[k].0);
                if !part.is_empty() {
                    pieces.push(Piece::new(part, PowerTerm { coeff: p.term.coeff * cells[k].1, ..p.term }));
                }
                k += 1;
            }
        }
        PiecewisePowerFn::new(pieces).expect("refinement keeps validity")
    }

    /// Pointwise product of two functions whose overlapping pieces share an
    /// offset and orientation (or where one side is constant).
    pub fn multiply(&self, other: &PiecewisePowerFn) -> Result<PiecewisePowerFn> {
        let mut pieces = Vec::new();
        let mut start = 0;
        for p in &self.pieces {
            while start < other.pieces.len() && other.pieces[start].interval.hi <= p.interval.lo {
                start += 1;
            }
            let mut k = start;
            while k < other.pieces.len() && other.pieces[k].interval.lo < p.interval.hi {
                let q = &other.pieces[k];
                let part = p.interval.intersect(&q.interval);
                if !part.is_empty() {
                    let (a, b) = (&p.term, &q.term);
                    let (offset, orientation) = if a.exponent == 0.0 {
                        (b.offset, b.orientation)
                    } else if b.exponent == 0.0 || (a.offset == b.offset && a.orientation == b.orientation) {
                        (a.offset, a.orientation)
                    } else {
                        return Err(Error::Domain(format!(
                            "product of power terms with distinct offsets on {part}"
                        )));
                    };
                    let exponent = a.exponent + b.exponent;
                    let exponent = if exponent == 0.0 { 0.0 } else { exponent };
                    pieces.push(Piece::new(
                        part,
                        PowerTerm::new(a.coeff * b.coeff, offset, exponent, orientation),
                    ));
                }
                k += 1;
            }
        }
        PiecewisePowerFn::new(pieces)
    }

    /// `x -> f(2^k x)`.
    pub fn dilate_pow2(&self, k: i64) -> PiecewisePowerFn {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let t = &p.term;
                let coeff = if t.exponent == 0.0 { t.coeff } else { t.coeff * LogPos::pow2(k as f64 * t.exponent) };
                Piece::new(
                    Interval { lo: p.interval.lo.mul_pow2(-k), hi: p.interval.hi.mul_pow2(-k) },
                    PowerTerm { coeff, offset: t.offset.mul_pow2(-k), ..*t },
                )
            })
            .collect();
        PiecewisePowerFn::new(pieces).expect("dilation keeps validity")
    }

    /// The even extension `f(|x|)` of a function supported on `[0, inf)`.
    pub fn reflect_even(&self) -> Result<PiecewisePowerFn> {
        if let Some(s) = self.support() {
            if s.lo.is_negative() {
                return Err(Error::Domain("even extension needs support in [0, inf)".into()));
            }
        }
        let mut pieces: Vec<Piece> = self
            .pieces
            .iter()
            .rev()
            .map(|p| {
                let t = &p.term;
                let orientation = match t.orientation {
                    Orientation::Ascending => Orientation::Descending,
                    Orientation::Descending => Orientation::Ascending,
                };
                Piece::new(
                    Interval { lo: -p.interval.hi, hi: -p.interval.lo },
                    PowerTerm { offset: -t.offset, orientation, ..*t },
                )
            })
            .collect();
        pieces.extend_from_slice(&self.pieces);
        PiecewisePowerFn::new(pieces)
    }

    /// Union of two functions with disjoint supports.
    pub fn union(&self, other: &PiecewisePowerFn) -> Result<PiecewisePowerFn> {
        let mut pieces: Vec<Piece> = self.pieces.iter().chain(other.pieces.iter()).copied().collect();
        pieces.sort_by(|a, b| a.interval.lo.cmp(&b.interval.lo));
        PiecewisePowerFn::new(pieces)
    }
}

/// A piecewise-constant function with log-domain values.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFn {
    breakpoints: Vec<Coord>,
    values: Vec<LogPos>,
}

impl StepFn {
    /// `values[i]` is the value on `[breakpoints[i], breakpoints[i+1])`.
    pub fn new(breakpoints: Vec<Coord>, values: Vec<LogPos>) -> Result<StepFn> {
        if breakpoints.is_empty() && values.is_empty() {
            return Ok(StepFn::zero());
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints cannot carry {} cell values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("step breakpoints must increase strictly".into()));
        }
        Ok(StepFn { breakpoints, values })
    }

    pub fn zero() -> StepFn {
        StepFn { breakpoints: Vec::new(), values: Vec::new() }
    }

    pub fn constant(iv: Interval, c: LogPos) -> StepFn {
        if iv.is_empty() {
            return StepFn::zero();
        }
        StepFn { breakpoints: vec![iv.lo, iv.hi], values: vec![c] }
    }

    pub fn indicator(iv: Interval) -> StepFn {
        StepFn::constant(iv, LogPos::ONE)
    }

    pub fn breakpoints(&self) -> &[Coord] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[LogPos] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn support(&self) -> Option<Interval> {
        let first = self.values.iter().position(|v| !v.is_zero())?;
        let last = self.values.iter().rposition(|v| !v.is_zero())?;
        Some(Interval { lo: self.breakpoints[first], hi: self.breakpoints[last + 1] })
    }

    pub fn eval(&self, x: Coord) -> LogPos {
        let i = self.breakpoints.partition_point(|b| *b <= x);
        if i == 0 || i >= self.breakpoints.len() {
            return LogPos::ZERO;
        }
        self.values[i - 1]
    }

    pub fn cells(&self) -> impl Iterator<Item = (Interval, LogPos)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (Interval { lo: self.breakpoints[i], hi: self.breakpoints[i + 1] }, *v))
    }

    pub fn map_values(&self, f: impl Fn(LogPos) -> LogPos) -> StepFn {
        StepFn { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn square(&self) -> StepFn {
        self.map_values(|v| v * v)
    }

    /// The same function as constant pieces (zero cells omitted).
    pub fn to_piecewise(&self) -> PiecewisePowerFn {
        let pieces = self
            .cells()
            .filter(|(_, v)| !v.is_zero())
            .map(|(iv, v)| Piece::new(iv, PowerTerm::constant(v)))
            .collect();
        PiecewisePowerFn::new(pieces).expect("cells are disjoint")
    }
}

/// The JSON record shared by both function types.
#[derive(Serialize, Deserialize)]
struct PieceRecord {
    l: Coord,
    r: Coord,
    log2_coeff: LogPos,
    offset: Coord,
    exponent: f64,
    orientation: Orientation,
}

impl Serialize for PiecewisePowerFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.pieces.iter().map(|p| PieceRecord {
            l: p.interval.lo,
            r: p.interval.hi,
            log2_coeff: p.term.coeff,
            offset: p.term.offset,
            exponent: p.term.exponent,
            orientation: p.term.orientation,
        }))
    }
}

impl<'de> Deserialize<'de> for PiecewisePowerFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<PieceRecord>::deserialize(d)?;
        let pieces = records
            .into_iter()
            .map(|r| {
                if !r.exponent.is_finite() {
                    return Err(serde::de::Error::custom("non-finite exponent"));
                }
                Ok(Piece::new(
                    Interval { lo: r.l, hi: r.r },
                    PowerTerm::new(r.log2_coeff, r.offset, r.exponent, r.orientation),
                ))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        PiecewisePowerFn::new(pieces).map_err(serde::de::Error::custom)
    }
}

impl Serialize for StepFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.cells().filter(|(_, v)| !v.is_zero()).map(|(iv, v)| PieceRecord {
            l: iv.lo,
            r: iv.hi,
            log2_coeff: v,
            offset: iv.lo,
            exponent: 0.0,
            orientation: Orientation::Ascending,
        }))
    }
}

impl<'de> Deserialize<'de> for StepFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<PieceRecord>::deserialize(d)?;
        let mut breakpoints: Vec<Coord> = Vec::new();
        let mut values = Vec::new();
        for r in records {
            if r.exponent != 0.0 {
                return Err(serde::de::Error::custom("step cells must have exponent 0"));
            }
            match breakpoints.last() {
                Some(&last) if last == r.l => {}
                Some(&last) => {
                    if last > r.l {
                        return Err(serde::de::Error::custom("step cells overlap"));
                    }
                    values.push(LogPos::ZERO);
                    breakpoints.push(r.l);
                }
                None => breakpoints.push(r.l),
            }
            values.push(r.log2_coeff);
            breakpoints.push(r.r);
        }
        StepFn::new(breakpoints, values).map_err(serde::de::Error::custom)
    }
}
