//! Cube-set `L^2` estimate checks on the parabola.
//!
//! For each depth the scenario takes the product-Cantor cube set with
//! enclosing box side `R = 4^depth`, computes its window statistic `gamma`
//! at exponent `alpha`, and probes the estimate
//!
//! ```text
//! ||Ef||_{L^2(X ∩ [-R/2, R/2]^2)} <= C gamma^{1/n} R^{alpha/(2n)} ||f||_{L^2}
//! ```
//!
//! over a seeded random ensemble on the parabola chart, reporting the
//! (unsquared) left/right ratio per depth and the boundedness trend across
//! depths.
//!
//! Config keys: `depth_list` (e.g. `1,2,3`), `seed`, `alpha` (default 1),
//! `ensemble` (default 4), `spacing` (default 0.25), `stab_tol`
//! (default 0.15).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::cubes::CubeSet;
use crate::error::{Error, Result};
use crate::experiments::{
    fmt, push_note, push_row, spacing_from, ScenarioOutput, VIRTUAL_CELL_BUDGET,
};
use crate::extension::{weighted_lq_norm_over, EvalOptions};
use crate::grid::{GridBox, GridSpec};
use crate::surface::{lp_norm, LpNorm, SurfaceChart, SurfaceDensity, SurfaceKind};
use crate::weights::Weight;

#[derive(Debug, Clone)]
pub struct DuzhangRow {
    pub depth: usize,
    pub r: f64,
    pub gamma: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DuzhangReport {
    pub rows: Vec<DuzhangRow>,
    pub alpha: f64,
    pub bounded: bool,
    pub last_delta: f64,
}

pub fn sweep(cfg: &Config) -> Result<DuzhangReport> {
    let depth_list = cfg.require_usize_list("depth_list")?;
    if depth_list.len() < 2 {
        return Err(Error::InvalidParam("depth_list needs at least 2 entries".into()));
    }
    if depth_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam("depth_list must be strictly increasing".into()));
    }
    let alpha = cfg.f64_or("alpha", 1.0)?;
    let ensemble = cfg.usize_or("ensemble", 4)?.max(1);
    let seed = cfg.require_u64("seed")?;
    let h = spacing_from(cfg)?;
    let stab_tol = cfg.f64_or("stab_tol", 0.15)?;
    let opts = EvalOptions::default();

    let dim = 2usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(depth_list.len());
    for &depth in &depth_list {
        let set = CubeSet::cantor_product(depth as u32)?;
        let r = set.enclosing() as f64;
        let gamma = set.gamma_statistic(alpha)?.gamma;
        let weight = Weight::from_cubes_with_alpha(set, alpha)?;

        let bounds = GridBox::cube(dim, r / 2.0);
        let spec = GridSpec::with_budget(bounds.clone(), vec![h; dim], VIRTUAL_CELL_BUDGET)?;
        let cover = weight.support_cover(&bounds);
        let corner = (dim as f64).sqrt() * r / 2.0;
        let resolution = opts.resolution_constant / (1.0 + corner);
        let chart = SurfaceChart::build(SurfaceKind::ParaboloidCap, dim, resolution)?;

        let rhs_scale = gamma.powf(1.0 / dim as f64) * r.powf(alpha / (2.0 * dim as f64));
        let mut max_ratio = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for _ in 0..ensemble {
            let f = SurfaceDensity::random_unit_l2(&chart, &mut rng)?;
            let l2 = lp_norm(&chart, &f, LpNorm::L2)?;
            let lhs =
                weighted_lq_norm_over(&chart, &f, &spec, &cover, |x| weight.eval(x), 2.0, &opts)?;
            let ratio = lhs / (rhs_scale * l2);
            max_ratio = max_ratio.max(ratio);
            sum += ratio;
        }
        rows.push(DuzhangRow { depth, r, gamma, max_ratio, mean_ratio: sum / ensemble as f64 });
    }

    let last = rows[rows.len() - 1].max_ratio;
    let prev = rows[rows.len() - 2].max_ratio;
    let bounded = last <= prev * (1.0 + stab_tol);
    let last_delta = last / prev - 1.0;
    Ok(DuzhangReport { rows, alpha, bounded, last_delta })
}

pub fn run(cfg: &Config) -> Result<ScenarioOutput> {
    let report = sweep(cfg)?;
    let mut csv = String::from("depth,r,gamma,max_ratio,mean_ratio\n");
    for row in &report.rows {
        push_row(
            &mut csv,
            &[
                row.depth.to_string(),
                fmt(row.r),
                fmt(row.gamma),
                fmt(row.max_ratio),
                fmt(row.mean_ratio),
            ],
        );
    }
    push_note(&mut csv, "scenario", "duzhang");
    push_note(&mut csv, "alpha", fmt(report.alpha));
    push_note(&mut csv, "last_delta", fmt(report.last_delta));
    push_note(&mut csv, "bounded", report.bounded);
    Ok(ScenarioOutput { csv, soft_fail: !report.bounded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shallow_sweep_runs() {
        let cfg = Config::parse("depth_list=1,2\nensemble=1\nseed=2\n").unwrap();
        let report = sweep(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.gamma >= 1.0, "window statistic of a nonempty set");
            assert!(row.max_ratio > 0.0);
            assert_eq!(row.r, 4f64.powi(row.depth as i32));
        }
        let out = run(&cfg).unwrap();
        assert!(out.csv.starts_with("depth,r,gamma,max_ratio,mean_ratio\n"));
    }

    #[test]
    fn depth_list_must_increase() {
        let cfg = Config::parse("depth_list=2,2\nseed=1\n").unwrap();
        assert!(sweep(&cfg).is_err());
        let cfg = Config::parse("depth_list=2\nseed=1\n").unwrap();
        assert!(sweep(&cfg).is_err());
    }
}
