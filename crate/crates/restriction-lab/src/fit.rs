//! Least-squares power-law fits in log-log coordinates, shared by the decay
//! and sharpness sweeps.

use crate::error::{Error, Result};

/// Result of fitting `log y = slope * log x + intercept`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Per-point residuals of `log y` against the fitted line.
    pub residuals: Vec<f64>,
}

impl FitResult {
    /// A fit is trusted when the line explains the data tightly.
    pub fn stabilized(&self) -> bool {
        self.r_squared >= 0.98
    }
}

/// Ordinary least squares on `(ln x, ln y)`. Needs at least two points with
/// distinct abscissae; every coordinate must be positive.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "power-law fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidParam(format!(
                "power-law fit needs positive finite points, got ({x}, {y})"
            )));
        }
        xs.push(x.ln());
        ys.push(y.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx < 1e-30 {
        return Err(Error::InvalidParam(
            "power-law fit needs at least two distinct abscissae".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy < 1e-30 {
        // A flat, perfectly reproduced line.
        if ss_res < 1e-24 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / syy
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        residuals,
    })
}
