//! Estimate-ratio boundedness checks.
//!
//! For each scale `R` and each density `f` in a seeded random ensemble the
//! scenario computes
//!
//! ```text
//! ratio = ||Ef||^q_{L^q(H, B(0,R))} / (A_alpha(H) ||f||^q_{L^2})
//! ```
//!
//! with a sweep-estimated growth constant `A_alpha(H)`. The weighted
//! estimate predicts a bounded ratio once `q` clears the exponent threshold
//! for `(n, alpha)`; sub-threshold `q` is rejected up front with the
//! governing threshold quoted. The trend verdict is operational: the last
//! two sweep levels of the max ratio must be within `stab_tol` or
//! decreasing. Ensembles probe the estimate, they never certify it.
//!
//! Config keys: `weight` (with `b`/`rho`/`dim`), `q`, `r_list`, `seed`,
//! `alpha` (default: the weight's nominal exponent), `ensemble` (default 8),
//! `spacing` (default 0.25), `stab_tol` (default 0.15).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::experiments::{
    fmt, norm_sq, note_weight, push_note, push_row, spacing_from, weight_from_config,
    ScenarioOutput, VIRTUAL_CELL_BUDGET,
};
use crate::exponents::main1_threshold;
use crate::extension::{weighted_lq_norm_over, EvalOptions};
use crate::grid::{GridBox, GridSpec};
use crate::surface::{lp_norm, LpNorm, SurfaceChart, SurfaceDensity, SurfaceKind};
use crate::weights::{estimate_a_alpha, SweepParams, Weight};

#[derive(Debug, Clone)]
pub struct RatioRow {
    pub r: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
    pub alpha: f64,
    pub threshold: f64,
    pub a_hat: f64,
    /// Last two max-ratio levels within tolerance or decreasing.
    pub bounded: bool,
    /// Relative change of the max ratio across the last two levels.
    pub last_delta: f64,
}

pub fn sweep(cfg: &Config) -> Result<RatioReport> {
    let weight = weight_from_config(cfg)?;
    let dim = weight.dim();
    let q = cfg.require_f64("q")?;
    let alpha = match cfg.get_f64("alpha")? {
        Some(a) => a,
        None => weight.nominal_alpha().ok_or_else(|| {
            Error::InvalidParam("weight carries no nominal exponent; set alpha".into())
        })?,
    };
    let r_list = cfg.require_scale_list("r_list")?;
    let ensemble = cfg.usize_or("ensemble", 8)?.max(1);
    let seed = cfg.require_u64("seed")?;
    let h = spacing_from(cfg)?;
    let stab_tol = cfg.f64_or("stab_tol", 0.15)?;
    if !(stab_tol > 0.0) {
        return Err(Error::InvalidParam("stab_tol must be positive".into()));
    }
    let opts = EvalOptions::default();

    // Exponent gate. The constant weight realizes alpha = n, where the
    // threshold is the classical endpoint and inclusive; every thinner
    // family sits strictly above its threshold.
    let threshold = if matches!(weight, Weight::ConstantOne { .. }) {
        let n = dim as f64;
        let endpoint = 2.0 * (n + 1.0) / (n - 1.0);
        if q + 1e-12 < endpoint {
            return Err(Error::InvalidParam(format!(
                "q = {q} is below the endpoint threshold q >= {endpoint} for the constant weight in dimension {dim}"
            )));
        }
        endpoint
    } else {
        let t = main1_threshold(dim, alpha, false)?;
        if !(q > t) {
            return Err(Error::InvalidParam(format!(
                "q = {q} does not exceed the threshold q > {t} for alpha = {alpha} in dimension {dim}"
            )));
        }
        t
    };

    let params = SweepParams {
        r_max: *r_list.last().unwrap(),
        ..SweepParams::default()
    };
    let a_hat = estimate_a_alpha(&weight, alpha, &params)?.max_ratio;
    if !(a_hat > 0.0) {
        return Err(Error::InvalidParam("growth-constant sweep found no mass".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(r_list.len());
    for &r in &r_list {
        let resolution = opts.resolution_constant / (1.0 + r);
        let chart = match dim {
            2 => SurfaceChart::build(SurfaceKind::Circle, 2, resolution)?,
            _ => SurfaceChart::build(SurfaceKind::Sphere, 3, resolution)?,
        };
        let bounds = GridBox::cube(dim, r);
        let spec = GridSpec::with_budget(bounds.clone(), vec![h; dim], VIRTUAL_CELL_BUDGET)?;
        let cover = weight.support_cover(&bounds);
        let ball = |x: &[f64]| {
            if norm_sq(x) <= r * r {
                weight.eval(x)
            } else {
                0.0
            }
        };
        let mut max_ratio = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for _ in 0..ensemble {
            let f = SurfaceDensity::random_unit_l2(&chart, &mut rng)?;
            let l2 = lp_norm(&chart, &f, LpNorm::L2)?;
            let lq = weighted_lq_norm_over(&chart, &f, &spec, &cover, ball, q, &opts)?;
            let ratio = lq.powf(q) / (a_hat * l2.powf(q));
            max_ratio = max_ratio.max(ratio);
            sum += ratio;
        }
        rows.push(RatioRow { r, max_ratio, mean_ratio: sum / ensemble as f64 });
    }

    let last = rows[rows.len() - 1].max_ratio;
    let prev = rows[rows.len() - 2].max_ratio;
    let bounded = last <= prev * (1.0 + stab_tol);
    let last_delta = last / prev - 1.0;
    Ok(RatioReport { rows, alpha, threshold, a_hat, bounded, last_delta })
}

pub fn run(cfg: &Config) -> Result<ScenarioOutput> {
    let report = sweep(cfg)?;
    let mut csv = String::from("r,max_ratio,mean_ratio\n");
    for row in &report.rows {
        push_row(&mut csv, &[fmt(row.r), fmt(row.max_ratio), fmt(row.mean_ratio)]);
    }
    push_note(&mut csv, "scenario", "ratio");
    note_weight(&mut csv, cfg);
    push_note(&mut csv, "q", fmt(cfg.require_f64("q")?));
    push_note(&mut csv, "alpha", fmt(report.alpha));
    push_note(&mut csv, "threshold", fmt(report.threshold));
    push_note(&mut csv, "a_hat", fmt(report.a_hat));
    push_note(&mut csv, "last_delta", fmt(report.last_delta));
    push_note(&mut csv, "bounded", report.bounded);
    Ok(ScenarioOutput { csv, soft_fail: !report.bounded })
}
