//! Knapp-example sharpness sweeps.
//!
//! For each scale `R` the scenario builds the cap indicator `f_R` of
//! halfwidth `c R^{-1/2}`, evaluates the weighted `L^q` norm of its
//! extension over `B(0, R)`, and fits `log norm` against `log R`. The cap's
//! dual box is `R` long along the first coordinate axis and `sqrt(R)` wide
//! transversally, so the fitted slope probes how much of the tube the weight
//! captures.
//!
//! Config keys: `weight` (with `b`/`dim` as needed), `q`, `r_list`,
//! `cap_c` (default 0.1), `spacing` (default 0.25).

use std::f64::consts::PI;

use crate::config::Config;
use crate::error::Result;
use crate::experiments::{
    fmt, norm_sq, note_weight, push_note, push_row, spacing_from, weight_from_config,
    ScenarioOutput, VIRTUAL_CELL_BUDGET,
};
use crate::extension::{weighted_lq_norm_over, EvalOptions};
use crate::fit::{fit_loglog, FitResult};
use crate::grid::{GridBox, GridSpec};
use crate::surface::{build_knapp, SurfaceChart, SurfaceKind};

/// One sweep scale: the cap's surface measure, the `L^2` norm of the cap
/// indicator, and the weighted `L^q` norm of its extension over `B(0, R)`.
#[derive(Debug, Clone)]
pub struct SharpnessRow {
    pub r: f64,
    pub cap_measure: f64,
    pub f_l2: f64,
    pub lq_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SharpnessReport {
    pub rows: Vec<SharpnessRow>,
    pub fit: FitResult,
}

/// The sweep itself, reusable from tests without CSV rendering.
pub fn sweep(cfg: &Config) -> Result<SharpnessReport> {
    let weight = weight_from_config(cfg)?;
    let dim = weight.dim();
    let q = cfg.require_f64("q")?;
    let r_list = cfg.require_scale_list("r_list")?;
    let cap_c = cfg.f64_or("cap_c", 0.1)?;
    let h = spacing_from(cfg)?;
    let opts = EvalOptions::default();

    let mut direction = vec![0.0; dim];
    direction[0] = 1.0;

    let mut rows = Vec::with_capacity(r_list.len());
    for &r in &r_list {
        let delta = cap_c / r.sqrt();
        // The chart must resolve both the oscillation at |x| = R and the cap.
        let resolution = (opts.resolution_constant / (1.0 + r)).min(2.0 * delta / 32.0);
        let chart = match dim {
            2 => SurfaceChart::build(SurfaceKind::Circle, 2, resolution)?,
            _ => SurfaceChart::cap_patch(
                SurfaceKind::Sphere,
                3,
                &direction,
                (8.0 * delta).min(PI),
                resolution,
            )?,
        };
        let cap = build_knapp(&chart, &direction, r, cap_c)?;
        let cap_measure = cap.cap_measure(&chart)?;

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
        let lq_norm = weighted_lq_norm_over(&chart, &cap.density, &spec, &cover, ball, q, &opts)?;
        rows.push(SharpnessRow { r, cap_measure, f_l2: cap_measure.sqrt(), lq_norm });
    }

    let points: Vec<(f64, f64)> = rows.iter().map(|row| (row.r, row.lq_norm)).collect();
    let fit = fit_loglog(&points)?;
    Ok(SharpnessReport { rows, fit })
}

pub fn run(cfg: &Config) -> Result<ScenarioOutput> {
    let report = sweep(cfg)?;
    let mut csv = String::from("r,cap_measure,f_l2,lq_norm\n");
    for row in &report.rows {
        push_row(
            &mut csv,
            &[fmt(row.r), fmt(row.cap_measure), fmt(row.f_l2), fmt(row.lq_norm)],
        );
    }
    push_note(&mut csv, "scenario", "sharpness");
    note_weight(&mut csv, cfg);
    push_note(&mut csv, "q", fmt(cfg.require_f64("q")?));
    push_note(&mut csv, "slope", fmt(report.fit.slope));
    push_note(&mut csv, "intercept", fmt(report.fit.intercept));
    push_note(&mut csv, "r_squared", fmt(report.fit.r_squared));
    push_note(&mut csv, "stabilized", report.fit.stabilized());
    Ok(ScenarioOutput { csv, soft_fail: !report.fit.stabilized() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_power_tail_sweep_decays() {
        let cfg = Config::parse("weight=power_tail\nb=0.25\nq=4\nr_list=4,8,16\n").unwrap();
        let report = sweep(&cfg).unwrap();
        assert_eq!(report.rows.len(), 3);
        for row in &report.rows {
            assert!(row.lq_norm > 0.0 && row.cap_measure > 0.0);
            assert!((row.f_l2 - row.cap_measure.sqrt()).abs() < 1e-15);
        }
        assert!(report.fit.slope < 0.0, "norms must shrink with scale");
        let out = run(&cfg).unwrap();
        assert!(out.csv.starts_with("r,cap_measure,f_l2,lq_norm\n"));
        assert!(out.csv.contains("# scenario = sharpness"));
        assert!(out.csv.contains("# slope = "));
    }

    #[test]
    fn missing_q_is_a_hard_error() {
        let cfg = Config::parse("weight=power_tail\nb=0.25\nr_list=4,8\n").unwrap();
        assert!(sweep(&cfg).is_err());
    }
}
