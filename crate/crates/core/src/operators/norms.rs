use crate::acc::Acc;
use crate::error::Result;
use crate::logpos::LogPos;
use crate::piecewise::{PiecewisePowerFn, StepFn};

/// `int h^2 weight`, summed cell by cell.
pub fn l2w_norm_sq(h: &StepFn, weight: &PiecewisePowerFn) -> Result<LogPos> {
    let mut acc = Acc::ZERO;
    for (cell, v) in h.cells() {
        if v.is_zero() {
            continue;
        }
        let mass = weight.integrate(cell)?;
        acc = acc.add(Acc::from_logpos(v * v * mass));
    }
    Ok(acc.to_logpos())
}

/// `sup_t t weight{h > t}^(1/2)`. For a step function the supremum over `t`
/// in a gap between consecutive values is approached at the top of the gap,
/// so it equals the maximum over values `v` of `v^2 weight{h >= v}`.
pub fn weak_l2w_norm(h: &StepFn, weight: &PiecewisePowerFn) -> Result<LogPos> {
    let mut cells = Vec::new();
    for (cell, v) in h.cells() {
        if !v.is_zero() {
            cells.push((v, weight.integrate(cell)?));
        }
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = LogPos::ZERO;
    let mut mass = Acc::ZERO;
    let mut i = 0;
    while i < cells.len() {
        let v = cells[i].0;
        while i < cells.len() && cells[i].0 == v {
            mass = mass.add(Acc::from_logpos(cells[i].1));
            i += 1;
        }
        best = best.max(v * v * mass.to_logpos());
    }
    Ok(best.sqrt())
}
