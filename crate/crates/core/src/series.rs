//! Least-squares series extraction, proportional fits and root bracketing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares polynomial coefficients, lowest order first.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.len() <= degree {
        return Err(Error::InvalidArgument(format!(
            "need more than {degree} samples for a degree-{degree} fit, got {}",
            xs.len()
        )));
    }
    // Rescale the abscissa to [-1, 1]-ish so the Vandermonde matrix stays
    // well conditioned for tiny sample ranges.
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("abscissae must not all vanish".into()));
    }
    let v = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powi(j as i32));
    let y = DVector::from_column_slice(ys);
    let svd = v.svd(true, true);
    let c = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("least-squares solve failed: {e}")))?;
    Ok(c.iter().enumerate().map(|(j, cj)| cj / scale.powi(j as i32)).collect())
}

pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Fit of `y = coeff * x` through the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProportionalFit {
    pub coeff: f64,
    pub r_squared: f64,
}

/// Least-squares `y = C x` with the coefficient of determination about the
/// sample mean.
pub fn fit_proportional(xs: &[f64], ys: &[f64]) -> Result<ProportionalFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two paired samples".into()));
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("abscissae must not all vanish".into()));
    }
    let coeff = sxy / sxx;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - coeff * x).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    Ok(ProportionalFit { coeff, r_squared })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Root of `f` in `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ
/// in sign.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::InvalidArgument(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
