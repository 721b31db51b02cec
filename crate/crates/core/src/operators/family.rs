use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::params::SpecString;

/// A finite family of intervals in which any two are nested or disjoint,
/// stored as a forest under inclusion. Duplicates are allowed; the later
/// copy becomes a child of the earlier one.
#[derive(Clone, Debug)]
pub struct LaminarFamily {
    intervals: Vec<Interval>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Indices in preorder: by left endpoint, outer intervals first.
    preorder: Vec<usize>,
}

impl LaminarFamily {
    pub fn new(intervals: Vec<Interval>) -> Result<LaminarFamily> {
        if let Some(i) = intervals.iter().position(|iv| iv.is_empty()) {
            return Err(Error::InvalidArgument(format!("family member {i} is empty")));
        }
        let mut preorder: Vec<usize> = (0..intervals.len()).collect();
        preorder.sort_by(|&a, &b| {
            let (x, y) = (&intervals[a], &intervals[b]);
            x.lo.cmp(&y.lo).then(y.hi.cmp(&x.hi)).then(a.cmp(&b))
        });
        let mut parent = vec![None; intervals.len()];
        let mut children = vec![Vec::new(); intervals.len()];
        let mut stack: Vec<usize> = Vec::new();
        for &i in &preorder {
            let cur = intervals[i];
            while let Some(&top) = stack.last() {
                if intervals[top].hi <= cur.lo {
                    stack.pop();
                } else {
                    break;
                }
            }
            if let Some(&top) = stack.last() {
                if cur.hi > intervals[top].hi {
                    return Err(Error::UnsupportedFamily(format!(
                        "{} and {} overlap without nesting",
                        intervals[top], cur
                    )));
                }
                parent[i] = Some(top);
                children[top].push(i);
            }
            stack.push(i);
        }
        Ok(LaminarFamily { intervals, parent, children, preorder })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    /// Maximal proper members inside member `i`, sorted by position.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// Member `i` minus the union of its maximal children.
    pub fn residual(&self, i: usize) -> Vec<Interval> {
        let a = self.intervals[i];
        let mut out = Vec::new();
        let mut cursor = a.lo;
        for &c in &self.children[i] {
            let ch = self.intervals[c];
            if ch.lo > cursor {
                out.push(Interval { lo: cursor, hi: ch.lo });
            }
            cursor = cursor.max(ch.hi);
        }
        if cursor < a.hi {
            out.push(Interval { lo: cursor, hi: a.hi });
        }
        out
    }

    /// `|residual(i)| / |member i|`.
    pub fn residual_fraction(&self, i: usize) -> f64 {
        let len = self.intervals[i].len();
        let mut total = Coord::ZERO;
        for part in self.residual(i) {
            total = total + part.len();
        }
        total.ratio(len)
    }
}

/// A laminar family with its sparseness certificate.
#[derive(Clone, Debug)]
pub struct SparseFamily {
    pub family: LaminarFamily,
    pub gamma: f64,
    /// `certificate[i]` is the set `E_A` for member `i`, as disjoint intervals.
    pub certificate: Vec<Vec<Interval>>,
}

impl std::ops::Deref for SparseFamily {
    type Target = LaminarFamily;
    fn deref(&self) -> &LaminarFamily {
        &self.family
    }
}

#[derive(Clone, Debug)]
pub enum Sparseness {
    Sparse(SparseFamily),
    /// The first member (in preorder) whose residual is too small.
    NotSparse { index: usize, interval: Interval, residual_fraction: f64 },
}

impl Sparseness {
    pub fn is_sparse(&self) -> bool {
        matches!(self, Sparseness::Sparse(_))
    }
}

/// Certifies `gamma`-sparseness by taking each member minus its maximal
/// children as `E_A`. These sets are pairwise disjoint by construction.
pub fn check_sparse(intervals: Vec<Interval>, gamma: f64) -> Result<Sparseness> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let family = LaminarFamily::new(intervals)?;
    for &i in family.preorder() {
        let frac = family.residual_fraction(i);
        if frac < gamma {
            return Ok(Sparseness::NotSparse { index: i, interval: family.intervals()[i], residual_fraction: frac });
        }
    }
    let certificate = (0..family.len()).map(|i| family.residual(i)).collect();
    Ok(Sparseness::Sparse(SparseFamily { family, gamma, certificate }))
}

/// CLI builder for the two interval families of the experiments:
/// `nested:kmax=40` gives `[0, 2^-k)` for `1 <= k <= kmax`; `bands:a=6,jmax=40`
/// gives `[2^-k - 2^-j, 2^-k)` for `1 <= k <= kmax` and `a+k <= j <= a+k+jmax`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    Nested { kmax: u64 },
    Bands { a: u32, jmax: u64, kmax: u64 },
}

pub const DEFAULT_BAND_KMAX: u64 = 4;

impl FamilySpec {
    /// Materializes the members. Band members need `j - k <= 53` so that
    /// `2^-k - 2^-j` is an exact coordinate.
    pub fn intervals(&self) -> Result<Vec<Interval>> {
        match *self {
            FamilySpec::Nested { kmax } => {
                Ok((1..=kmax as i64).map(|k| Interval { lo: Coord::ZERO, hi: Coord::pow2(-k) }).collect())
            }
            FamilySpec::Bands { a, jmax, kmax } => {
                if a as u64 + jmax > 53 {
                    return Err(Error::UnsupportedFamily(format!(
                        "band members with j - k = {} are not exact coordinates (limit 53)",
                        a as u64 + jmax
                    )));
                }
                let mut out = Vec::new();
                for k in 1..=kmax as i64 {
                    for j in (k + a as i64)..=(k + a as i64 + jmax as i64) {
                        out.push(band_member(k, j));
                    }
                }
                Ok(out)
            }
        }
    }
}

/// `B_{k,j} = [2^-k - 2^-j, 2^-k)`.
pub fn band_member(k: i64, j: i64) -> Interval {
    Interval { lo: Coord::pow2(-k) - Coord::pow2(-j), hi: Coord::pow2(-k) }
}

impl FromStr for FamilySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<FamilySpec> {
        let spec = SpecString::parse(s)?;
        match spec.name.as_str() {
            "nested" => {
                spec.only(&["kmax"])?;
                Ok(FamilySpec::Nested { kmax: spec.require("kmax")? })
            }
            "bands" => {
                spec.only(&["a", "jmax", "kmax"])?;
                Ok(FamilySpec::Bands {
                    a: spec.require("a")?,
                    jmax: spec.require("jmax")?,
                    kmax: spec.get("kmax")?.unwrap_or(DEFAULT_BAND_KMAX),
                })
            }
            _ => Err(spec.unknown_kind()),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Nested { kmax } => write!(f, "nested:kmax={kmax}"),
            FamilySpec::Bands { a, jmax, kmax } => write!(f, "bands:a={a},jmax={jmax},kmax={kmax}"),
        }
    }
}
