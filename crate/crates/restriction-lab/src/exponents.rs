//! Closed-form exponent thresholds for weighted extension estimates, with
//! their boundary continuity and scaling laws pinned as tests. All
//! thresholds are open: an estimate is asserted for `q` strictly above the
//! returned value unless documented otherwise at a specific endpoint.

use crate::error::{Error, Result};

fn check_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("dimension must be >= 2, got {n}")));
    }
    Ok(n as f64)
}

/// Sufficient exponent threshold for boundedness with fractal weights of
/// dimension `alpha`. Piecewise:
/// `2` up to `(n-1)/2`, then `4 alpha/(n-1)` up to `n/2`, then
/// `2 alpha + 2` (plane) or `2n/(n-1) + 2 - n/alpha` (space).
/// The stated range is `alpha < 2` for `n = 2` and `alpha <= (n+1)/2`
/// otherwise; `extended` widens the last branch to `alpha <= n` for
/// `n >= 3`.
pub fn main1_threshold(n: usize, alpha: f64, extended: bool) -> Result<f64> {
    let nf = check_n(n)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam("alpha must be positive".into()));
    }
    if n == 2 {
        if alpha >= 2.0 {
            return Err(Error::InvalidParam(format!(
                "threshold stated for alpha < 2 in the plane, got {alpha}"
            )));
        }
        return Ok(if alpha <= 0.5 {
            2.0
        } else if alpha <= 1.0 {
            4.0 * alpha
        } else {
            2.0 * alpha + 2.0
        });
    }
    let cap = if extended { nf } else { (nf + 1.0) / 2.0 };
    if alpha > cap + 1e-12 {
        return Err(Error::InvalidParam(format!(
            "threshold stated for alpha <= {cap}, got {alpha}"
        )));
    }
    Ok(if alpha <= (nf - 1.0) / 2.0 {
        2.0
    } else if alpha <= nf / 2.0 {
        4.0 * alpha / (nf - 1.0)
    } else {
        2.0 * nf / (nf - 1.0) + 2.0 - nf / alpha
    })
}

/// Necessary exponent: below this value the estimate fails for some weight
/// of dimension `alpha`.
pub fn main2_lower(n: usize, alpha: f64) -> Result<f64> {
    let nf = check_n(n)?;
    if !(alpha > 0.0 && alpha <= nf) {
        return Err(Error::InvalidParam(format!("need 0 < alpha <= {n}, got {alpha}")));
    }
    if n == 2 {
        return Ok(if alpha < 0.5 {
            2.0
        } else if alpha <= 1.0 {
            4.0 * alpha
        } else {
            2.0 * alpha + 2.0
        });
    }
    Ok(if alpha <= nf - 2.0 {
        2.0
    } else {
        (2.0 * alpha + 2.0) / (nf - 1.0)
    }
    .max(2.0))
}

/// Necessary exponent against measure-side tests.
pub fn main3_lower(n: usize, alpha: f64) -> Result<f64> {
    let nf = check_n(n)?;
    if !(alpha > 0.0 && alpha <= nf) {
        return Err(Error::InvalidParam(format!("need 0 < alpha <= {n}, got {alpha}")));
    }
    if n == 2 {
        return Ok(if alpha <= 1.0 / 6.0 {
            0.5
        } else if alpha <= 1.0 {
            3.0 * alpha
        } else {
            alpha + 2.0
        });
    }
    let knee = (nf - 1.0) * (nf - 1.0) / (2.0 * nf);
    Ok(if alpha <= knee {
        (nf - 1.0) / nf
    } else {
        2.0 * alpha / (nf - 1.0)
    })
}

/// Exponents valid in the very-low-dimension regime `alpha < (n-1)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseThresholds {
    /// First estimate holds for `q > 2`.
    pub q_i: f64,
    /// Second estimate holds for `q > q_ii`.
    pub q_ii: f64,
    /// Exponent of the sweep constant in the second estimate, at `q = q_ii`.
    pub a_exponent_ii: f64,
    /// Exponent of the weight's L2 norm in the second estimate, at `q = q_ii`.
    pub h_norm_exponent_ii: f64,
}

pub fn base_thresholds(n: usize, alpha: f64) -> Result<BaseThresholds> {
    let nf = check_n(n)?;
    if !(alpha > 0.0 && alpha < (nf - 1.0) / 2.0) {
        return Err(Error::InvalidParam(format!(
            "base thresholds need 0 < alpha < {}, got {alpha}",
            (nf - 1.0) / 2.0
        )));
    }
    let q_ii = (nf + 1.0 - 2.0 * alpha) / (nf - 2.0 * alpha);
    let denom = q_ii * (nf - 2.0 * alpha);
    Ok(BaseThresholds {
        q_i: 2.0,
        q_ii,
        a_exponent_ii: 1.0 / denom,
        h_norm_exponent_ii: (nf - 1.0 - 2.0 * alpha) / denom,
    })
}

/// Threshold from the simpler base argument, valid for `1 <= alpha <= n`,
/// `n >= 3`: `2 (n^2 + 3n - 2 alpha) / (n^2 + n - 2 alpha)`.
pub fn simbase_threshold(n: usize, alpha: f64) -> Result<f64> {
    let nf = check_n(n)?;
    if n < 3 {
        return Err(Error::InvalidParam("simpler base threshold needs n >= 3".into()));
    }
    if !(alpha >= 1.0 && alpha <= nf) {
        return Err(Error::InvalidParam(format!("need 1 <= alpha <= {n}, got {alpha}")));
    }
    Ok(2.0 * (nf * nf + 3.0 * nf - 2.0 * alpha) / (nf * nf + nf - 2.0 * alpha))
}

/// Sweep-constant exponent in the simpler base estimate:
/// `1 / ((n+1)/2 - alpha/n - epsilon)`.
pub fn simbase_a_exponent(n: usize, alpha: f64, epsilon: f64) -> Result<f64> {
    let nf = check_n(n)?;
    if n < 3 || !(alpha >= 1.0 && alpha <= nf) {
        return Err(Error::InvalidParam("exponent needs n >= 3 and 1 <= alpha <= n".into()));
    }
    let room = (nf + 1.0) / 2.0 - alpha / nf;
    if !(epsilon > 0.0 && epsilon < room) {
        return Err(Error::InvalidParam(format!(
            "epsilon must lie in (0, {room}), got {epsilon}"
        )));
    }
    Ok(1.0 / (room - epsilon))
}

/// The dimension where the two upper thresholds cross: `(n+1)/2`. The
/// equivalent radical expression is verified on every call.
pub fn crossover_alpha(n: usize) -> Result<f64> {
    check_n(n)?;
    if n < 3 {
        return Err(Error::InvalidParam("crossover defined for n >= 3".into()));
    }
    let nf = n as f64;
    let radicand = nf.powi(4) - 4.0 * nf.powi(3) + 2.0 * nf * nf + 4.0 * nf + 1.0;
    let radical_form = (nf * nf + 1.0 - radicand.sqrt()) / 4.0;
    let value = (nf + 1.0) / 2.0;
    if (radical_form - value).abs() > 1e-9 {
        return Err(Error::InvalidParam(format!(
            "radical form {radical_form} disagrees with (n+1)/2 = {value}"
        )));
    }
    Ok(value)
}

/// Exponents from the square-function route: the two growth rates
/// `alpha/(2n)` and `alpha/n`, plus the loss `e(alpha)` which is `0` at or
/// below `(n-1)/2`, `alpha/2 - (n-1)/4` up to `n/2`, and absent above.
pub fn dz_exponents(n: usize, alpha: f64) -> Result<(f64, f64, Option<f64>)> {
    let nf = check_n(n)?;
    if !(alpha > 0.0 && alpha <= nf) {
        return Err(Error::InvalidParam(format!("need 0 < alpha <= {n}, got {alpha}")));
    }
    let e = if alpha <= (nf - 1.0) / 2.0 {
        Some(0.0)
    } else if alpha <= nf / 2.0 {
        Some(alpha / 2.0 - (nf - 1.0) / 4.0)
    } else {
        None
    };
    Ok((alpha / (2.0 * nf), alpha / nf, e))
}

/// Interpolation parameter `p = 2n/(n-1) - n/alpha` for `n/2 < alpha <= n`,
/// with the intermediate dimension it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolation {
    pub p: f64,
    /// `alpha' = (1 - ((n-1)/(2n)) p) alpha`, always in `[(n-1)/2, n/2]`.
    pub alpha_prime: f64,
}

pub fn interpolation_p(n: usize, alpha: f64) -> Result<Interpolation> {
    let nf = check_n(n)?;
    if n < 3 {
        return Err(Error::InvalidParam("interpolation parameter needs n >= 3".into()));
    }
    if !(alpha > nf / 2.0 && alpha <= nf) {
        return Err(Error::InvalidParam(format!(
            "need {}/2 < alpha <= {n}, got {alpha}",
            n
        )));
    }
    let p = 2.0 * nf / (nf - 1.0) - nf / alpha;
    let alpha_prime = (1.0 - (nf - 1.0) / (2.0 * nf) * p) * alpha;
    Ok(Interpolation { p, alpha_prime })
}
