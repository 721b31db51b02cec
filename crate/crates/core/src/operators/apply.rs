use std::collections::HashMap;

use crate::acc::Acc;
use crate::error::Result;
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::piecewise::{PiecewisePowerFn, StepFn};

use super::family::LaminarFamily;
use super::search::{MaximalResult, MaximalSearcher, SupSearchConfig};

/// `sum_A values[A] 1_A` over a laminar family. Each cell takes the path sum
/// from its innermost containing member up to the root.
fn overlay(family: &LaminarFamily, values: &[LogPos]) -> StepFn {
    if family.is_empty() {
        return StepFn::zero();
    }
    let ivs = family.intervals();
    // Roots keep their value as is; deeper members sum along the path.
    let mut path = vec![Acc::ZERO; ivs.len()];
    let mut total = vec![LogPos::ZERO; ivs.len()];
    for &i in family.preorder() {
        match family.parent(i) {
            None => {
                path[i] = Acc::from_logpos(values[i]);
                total[i] = values[i];
            }
            Some(p) => {
                path[i] = path[p].add(Acc::from_logpos(values[i]));
                total[i] = path[i].to_logpos();
            }
        }
    }
    let mut bps: Vec<_> = ivs.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
    bps.sort();
    bps.dedup();
    let order = family.preorder();
    let mut next = 0;
    let mut stack: Vec<usize> = Vec::new();
    let mut cell_values = Vec::with_capacity(bps.len().saturating_sub(1));
    for &x in &bps[..bps.len() - 1] {
        while stack.last().is_some_and(|&t| ivs[t].hi <= x) {
            stack.pop();
        }
        while next < order.len() && ivs[order[next]].lo == x {
            stack.push(order[next]);
            next += 1;
        }
        cell_values.push(stack.last().map_or(LogPos::ZERO, |&t| total[t]));
    }
    StepFn::new(bps, cell_values).expect("sorted distinct breakpoints")
}

/// `A_S f = sum_A <f>_A 1_A`.
pub fn sparse_apply(family: &LaminarFamily, f: &PiecewisePowerFn) -> Result<StepFn> {
    let values = family.intervals().iter().map(|&iv| f.average(iv)).collect::<Result<Vec<_>>>()?;
    Ok(overlay(family, &values))
}

/// The strong sparse operator together with the maximal average found for
/// each member.
#[derive(Clone, Debug)]
pub struct StrongApply {
    pub step: StepFn,
    pub maxima: Vec<MaximalResult>,
}

/// `A*_S f = sum_A (M_A f) 1_A`. Members are visited parents first and each
/// search is seeded with the parent's attaining interval, which contains the
/// child; identical members share one search.
pub fn strong_sparse_apply(family: &LaminarFamily, f: &PiecewisePowerFn, cfg: &SupSearchConfig) -> Result<StrongApply> {
    let searcher = MaximalSearcher::new(f, *cfg)?;
    let mut memo: HashMap<Interval, MaximalResult> = HashMap::new();
    let mut maxima: Vec<Option<MaximalResult>> = vec![None; family.len()];
    for &i in family.preorder() {
        let iv = family.intervals()[i];
        let r = match memo.get(&iv) {
            Some(r) => *r,
            None => {
                let seed = family.parent(i).and_then(|p| maxima[p]).map(|m| m.attaining);
                let r = searcher.search(iv, seed)?;
                memo.insert(iv, r);
                r
            }
        };
        maxima[i] = Some(r);
    }
    let maxima: Vec<MaximalResult> = maxima.into_iter().map(|m| m.expect("every member visited")).collect();
    let values: Vec<LogPos> = maxima.iter().map(|m| m.value).collect();
    Ok(StrongApply { step: overlay(family, &values), maxima })
}
