//! Direct evaluation of the surface extension operator
//! `Ef(x) = sum_j w_j f(xi_j) exp(-2 pi i x . xi_j)` against a quadrature
//! chart. No fast transforms: cost is (#points x #support nodes), and the
//! node gap must resolve the fastest phase present, which is what the
//! resolution precondition enforces.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridBox, GridField, GridSpec, DEFAULT_POINT_BUDGET};
use crate::surface::{SurfaceChart, SurfaceDensity, TAU};

/// Evaluation knobs. `resolution_constant` bounds the phase step between
/// neighboring nodes: node gap <= constant / (1 + max |x|) must hold.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub resolution_constant: f64,
    pub point_budget: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { resolution_constant: 0.1, point_budget: DEFAULT_POINT_BUDGET }
    }
}

/// Points are written in one flat buffer, `dim`-strided. Work is split into
/// fixed-size chunks whose outputs do not depend on the thread count.
const CHUNK: usize = 2048;

fn support(chart: &SurfaceChart, density: &SurfaceDensity) -> Result<(Vec<f64>, Vec<Complex64>)> {
    if density.values.len() != chart.node_count() {
        return Err(Error::InvalidParam("density length != node count".into()));
    }
    let mut xi = Vec::new();
    let mut coef = Vec::new();
    for j in 0..chart.node_count() {
        let v = density.values[j];
        if v.re != 0.0 || v.im != 0.0 {
            xi.extend_from_slice(chart.node(j));
            coef.push(v * chart.weights[j]);
        }
    }
    if coef.is_empty() {
        return Err(Error::InvalidParam("density is identically zero".into()));
    }
    Ok((xi, coef))
}

fn max_point_norm(points: &[f64], dim: usize) -> f64 {
    points
        .chunks_exact(dim)
        .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn check_resolution(chart: &SurfaceChart, max_norm: f64, opts: &EvalOptions) -> Result<()> {
    let required = opts.resolution_constant / (1.0 + max_norm);
    if chart.max_node_gap > required {
        return Err(Error::ResolutionViolation {
            required,
            actual: chart.max_node_gap,
            what: "extension node gap",
        });
    }
    Ok(())
}

fn eval_points(xi: &[f64], coef: &[Complex64], points: &[f64], dim: usize) -> Vec<Complex64> {
    let n_points = points.len() / dim;
    let mut out = vec![Complex64::new(0.0, 0.0); n_points];
    out.par_chunks_mut(CHUNK)
        .zip(points.par_chunks(CHUNK * dim))
        .for_each(|(res, pts)| match dim {
            2 => {
                for (r, p) in res.iter_mut().zip(pts.chunks_exact(2)) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (q, c) in xi.chunks_exact(2).zip(coef) {
                        let phase = -TAU * (p[0] * q[0] + p[1] * q[1]);
                        let (s, co) = phase.sin_cos();
                        acc += c * Complex64::new(co, s);
                    }
                    *r = acc;
                }
            }
            3 => {
                for (r, p) in res.iter_mut().zip(pts.chunks_exact(3)) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (q, c) in xi.chunks_exact(3).zip(coef) {
                        let phase = -TAU * (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]);
                        let (s, co) = phase.sin_cos();
                        acc += c * Complex64::new(co, s);
                    }
                    *r = acc;
                }
            }
            _ => {
                for (r, p) in res.iter_mut().zip(pts.chunks_exact(dim)) {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (q, c) in xi.chunks_exact(dim).zip(coef) {
                        let dot: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
                        let (s, co) = (-TAU * dot).sin_cos();
                        acc += c * Complex64::new(co, s);
                    }
                    *r = acc;
                }
            }
        });
    out
}

/// Extension values at an arbitrary point list (flat, dim-strided).
pub fn evaluate_extension(
    chart: &SurfaceChart,
    density: &SurfaceDensity,
    points: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<Complex64>> {
    let dim = chart.dim;
    if points.len() % dim != 0 {
        return Err(Error::InvalidParam("point buffer length not a multiple of dim".into()));
    }
    let n_points = points.len() / dim;
    if n_points > opts.point_budget {
        return Err(Error::BudgetExceeded { requested: n_points, budget: opts.point_budget });
    }
    check_resolution(chart, max_point_norm(points, dim), opts)?;
    let (xi, coef) = support(chart, density)?;
    Ok(eval_points(&xi, &coef, points, dim))
}

/// Extension sampled on every cell center of a grid.
pub fn evaluate_on_grid(
    chart: &SurfaceChart,
    density: &SurfaceDensity,
    spec: &GridSpec,
    opts: &EvalOptions,
) -> Result<GridField<Complex64>> {
    if spec.dim() != chart.dim {
        return Err(Error::InvalidParam("grid dim != chart dim".into()));
    }
    if spec.len() > opts.point_budget {
        return Err(Error::BudgetExceeded { requested: spec.len(), budget: opts.point_budget });
    }
    let mut points = Vec::with_capacity(spec.len() * spec.dim());
    let mut buf = vec![0.0; spec.dim()];
    for lin in 0..spec.len() {
        spec.center(lin, &mut buf);
        points.extend_from_slice(&buf);
    }
    let values = evaluate_extension(chart, density, &points, opts)?;
    Ok(GridField { spec: spec.clone(), values })
}

/// Midpoint-rule weighted Lq norm `( sum |F|^q H(x) h^n )^(1/q)` over the
/// whole grid.
pub fn weighted_lq_norm(
    field: &GridField<Complex64>,
    weight: impl Fn(&[f64]) -> f64,
    q: f64,
) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParam(format!("q must be positive, got {q}")));
    }
    let spec = &field.spec;
    let vol = spec.cell_volume();
    let mut buf = vec![0.0; spec.dim()];
    let mut acc = 0.0;
    for (lin, v) in field.values.iter().enumerate() {
        spec.center(lin, &mut buf);
        let h = weight(&buf);
        if h > 0.0 {
            acc += v.norm().powf(q) * h;
        }
    }
    Ok((acc * vol).powf(1.0 / q))
}

/// Same quadrature sum as [`weighted_lq_norm`] on the full grid, but only
/// cells inside `cover` boxes are evaluated; cells outside must have zero
/// weight for the identity to hold (`weight` is still consulted per cell).
/// This is what makes thin weights affordable: the extension is only summed
/// where the weight lives.
pub fn weighted_lq_norm_over(
    chart: &SurfaceChart,
    density: &SurfaceDensity,
    spec: &GridSpec,
    cover: &[GridBox],
    weight: impl Fn(&[f64]) -> f64 + Sync,
    q: f64,
    opts: &EvalOptions,
) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParam(format!("q must be positive, got {q}")));
    }
    if spec.dim() != chart.dim {
        return Err(Error::InvalidParam("grid dim != chart dim".into()));
    }
    let dim = spec.dim();
    // Collect candidate cells from the cover, dedupe, then keep weighted ones.
    let mut cells: Vec<usize> = Vec::new();
    for b in cover {
        let ranges: Vec<_> = (0..dim)
            .map(|k| spec.axis_range(k, b.lo[k].max(spec.bounds.lo[k]), b.hi[k].min(spec.bounds.hi[k])))
            .collect();
        if ranges.iter().any(|r| r.is_empty()) {
            continue;
        }
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.start).collect();
        'cells: loop {
            let mut lin = 0usize;
            for k in 0..dim {
                lin = lin * spec.counts[k] + idx[k];
            }
            cells.push(lin);
            let mut k = dim - 1;
            loop {
                idx[k] += 1;
                if idx[k] < ranges[k].end {
                    break;
                }
                idx[k] = ranges[k].start;
                if k == 0 {
                    break 'cells;
                }
                k -= 1;
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    let mut points = Vec::new();
    let mut hvals = Vec::new();
    let mut buf = vec![0.0; dim];
    for &lin in &cells {
        spec.center(lin, &mut buf);
        let h = weight(&buf);
        if h > 0.0 {
            points.extend_from_slice(&buf);
            hvals.push(h);
        }
    }
    if hvals.is_empty() {
        return Ok(0.0);
    }
    let values = evaluate_extension(chart, density, &points, opts)?;
    let mut acc = 0.0;
    for (v, h) in values.iter().zip(&hvals) {
        acc += v.norm().powf(q) * h;
    }
    Ok((acc * spec.cell_volume()).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_knapp, lp_norm, LpNorm, SurfaceKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Power-series Bessel J0, adequate to ~1e-10 for |z| <= 15.
    fn bessel_j0(z: f64) -> f64 {
        let q = -z * z / 4.0;
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 1..60 {
            term *= q / ((k * k) as f64);
            acc += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        acc
    }

    #[test]
    fn circle_extension_of_one_is_bessel() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 5e-5).unwrap();
        let density = SurfaceDensity::constant(&chart, Complex64::new(1.0, 0.0));
        let radii = [0.5, 1.0, 2.0];
        let mut points = Vec::new();
        for r in radii {
            points.extend_from_slice(&[r * 0.6, r * 0.8]);
        }
        let vals =
            evaluate_extension(&chart, &density, &points, &EvalOptions::default()).unwrap();
        for (r, v) in radii.iter().zip(&vals) {
            let exact = TAU * bessel_j0(TAU * r);
            assert!((v.re - exact).abs() < 1e-6, "re {} vs {}", v.re, exact);
            assert!(v.im.abs() < 1e-6);
        }
    }

    #[test]
    fn conjugate_symmetry_for_real_density() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 2e-2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut density = SurfaceDensity::random_unit_l2(&chart, &mut rng).unwrap();
        for v in &mut density.values {
            *v = Complex64::new(v.re, 0.0);
        }
        let pts = [0.3, -0.7, -1.1, 0.2, 0.9, 0.9];
        let neg: Vec<f64> = pts.iter().map(|v| -v).collect();
        let a = evaluate_extension(&chart, &density, &pts, &EvalOptions::default()).unwrap();
        let b = evaluate_extension(&chart, &density, &neg, &EvalOptions::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn sup_bound_by_l1_norm() {
        let chart = SurfaceChart::build(SurfaceKind::ParaboloidCap, 2, 5e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let density = SurfaceDensity::random_unit_l2(&chart, &mut rng).unwrap();
        let l1 = lp_norm(&chart, &density, LpNorm::L1).unwrap();
        let pts = [0.0, 0.0, 3.0, 4.0, -8.0, 2.0];
        let vals = evaluate_extension(&chart, &density, &pts, &EvalOptions::default()).unwrap();
        for v in vals {
            assert!(v.norm() <= l1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn resolution_precondition_enforced() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 2e-2).unwrap();
        let density = SurfaceDensity::constant(&chart, Complex64::new(1.0, 0.0));
        let pts = [50.0, 0.0];
        let err =
            evaluate_extension(&chart, &density, &pts, &EvalOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ResolutionViolation { .. }));
    }

    #[test]
    fn point_budget_enforced() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 1e-2).unwrap();
        let density = SurfaceDensity::constant(&chart, Complex64::new(1.0, 0.0));
        let pts = vec![0.0; 64];
        let opts = EvalOptions { point_budget: 8, ..Default::default() };
        let err = evaluate_extension(&chart, &density, &pts, &opts).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn knapp_extension_coherent_on_dual_box() {
        let r = 100.0;
        let c = 0.1;
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 6e-4).unwrap();
        let cap = build_knapp(&chart, &[1.0, 0.0], r, c).unwrap();
        let sigma = cap.cap_measure(&chart).unwrap();
        // Spot-check phase variation across the cap at dual-box corners.
        let corners =
            [[0.0, 0.0], [r, 0.0], [0.0, r.sqrt()], [r, r.sqrt()], [r / 2.0, r.sqrt() / 2.0]];
        for x in corners {
            let mut max_var: f64 = 0.0;
            for j in 0..chart.node_count() {
                if cap.density.values[j].re != 0.0 {
                    let p = chart.node(j);
                    let d = TAU * (x[0] * (p[0] - 1.0) + x[1] * p[1]);
                    max_var = max_var.max(d.abs());
                }
            }
            assert!(max_var < std::f64::consts::FRAC_PI_4, "variation {max_var} at {x:?}");
        }
        // 16-point lattice in the dual box: modulus stays above half the
        // cap measure.
        let mut points = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                points.push(r * (i as f64 + 0.5) / 4.0);
                points.push(r.sqrt() * (j as f64 + 0.5) / 4.0);
            }
        }
        let vals =
            evaluate_extension(&chart, &cap.density, &points, &EvalOptions::default()).unwrap();
        for v in vals {
            assert!(v.norm() >= 0.5 * sigma, "|Ef| = {} < {}", v.norm(), 0.5 * sigma);
        }
    }

    #[test]
    fn sparse_norm_matches_dense() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 5e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let density = SurfaceDensity::random_unit_l2(&chart, &mut rng).unwrap();
        let spec = GridSpec::new(
            GridBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(),
            vec![0.25, 0.125],
        )
        .unwrap();
        let weight = |x: &[f64]| if x[0] > 0.0 && x[1] >= 0.0 && x[1] * x[1] <= x[0] { 1.0 } else { 0.0 };
        let field = evaluate_on_grid(&chart, &density, &spec, &EvalOptions::default()).unwrap();
        let dense = weighted_lq_norm(&field, weight, 4.0).unwrap();
        let sparse = weighted_lq_norm_over(
            &chart,
            &density,
            &spec,
            &[spec.bounds.clone()],
            weight,
            4.0,
            &EvalOptions::default(),
        )
        .unwrap();
        assert!((dense - sparse).abs() <= 1e-12 * dense.max(1.0));
        // A tight cover must give the same answer as the full box.
        let tight = weighted_lq_norm_over(
            &chart,
            &density,
            &spec,
            &[GridBox::new(vec![0.0, 0.0], vec![2.0, 1.5]).unwrap()],
            weight,
            4.0,
            &EvalOptions::default(),
        )
        .unwrap();
        assert!((tight - dense).abs() <= 1e-12 * dense.max(1.0));
    }
}
