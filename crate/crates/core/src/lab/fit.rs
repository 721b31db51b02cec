use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(log2 x, log2 y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the vertical residuals, in log2 units.
    pub residual: f64,
    pub points: usize,
}

/// Fits `log2 y = slope * log2 x + intercept`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("{} abscissae against {} ordinates", xs.len(), ys.len())));
    }
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("exponent fits need positive finite data, got {bad}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    fit_log2(&lx, &ly)
}

/// The same fit for data already in log2 form.
pub fn fit_log2(lx: &[f64], ly: &[f64]) -> Result<Fit> {
    if lx.len() != ly.len() {
        return Err(Error::InvalidArgument(format!("{} abscissae against {} ordinates", lx.len(), ly.len())));
    }
    let n = lx.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("an exponent fit needs at least 3 points, got {n}")));
    }
    if lx.iter().chain(ly).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("exponent fit data must be finite".into()));
    }
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("exponent fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(ly).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(Fit { slope, intercept, residual: (ss / nf).sqrt(), points: n })
}
