//! Compact surface pieces carried as quadrature charts: explicit node points
//! on the surface with positive weights approximating surface measure. All
//! downstream oscillatory sums are direct quadrature against these nodes, so
//! the only accuracy knob that matters is the maximal node gap.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// Hard cap on chart nodes; charts are meant to stay desk-scale.
pub const NODE_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    /// Unit circle in the plane.
    Circle,
    /// Unit sphere in 3-space.
    Sphere,
    /// Graph patch `x_n = |x'|^2` over `|x'| <= 1`.
    ParaboloidCap,
}

impl SurfaceKind {
    fn name(&self) -> &'static str {
        match self {
            SurfaceKind::Circle => "circle",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::ParaboloidCap => "paraboloid_cap",
        }
    }
}

/// Quadrature chart: `nodes` is dim-strided, `weights[j]` approximates the
/// surface measure of the cell around node `j`. `max_node_gap` bounds the
/// geodesic distance between neighboring nodes and drives every resolution
/// precondition.
#[derive(Debug, Clone)]
pub struct SurfaceChart {
    pub kind: SurfaceKind,
    pub dim: usize,
    pub param_lo: Vec<f64>,
    pub param_hi: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub max_node_gap: f64,
}

impl SurfaceChart {
    /// Full chart of the surface with node gaps at most `resolution`.
    pub fn build(kind: SurfaceKind, dim: usize, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidParam(format!("resolution must be positive, got {resolution}")));
        }
        match (kind, dim) {
            (SurfaceKind::Circle, 2) => build_circle(resolution),
            (SurfaceKind::Sphere, 3) => build_sphere(resolution),
            (SurfaceKind::ParaboloidCap, 2) => build_parabola(resolution),
            (SurfaceKind::ParaboloidCap, 3) => build_paraboloid(resolution),
            _ => Err(Error::UnsupportedSurface { kind: kind.name(), dim }),
        }
    }

    /// Chart of just a polar cap of the circle or sphere: all points within
    /// geodesic angle `extent` of `center`. Used when a global chart at the
    /// required resolution would blow the node budget.
    pub fn cap_patch(
        kind: SurfaceKind,
        dim: usize,
        center: &[f64],
        extent: f64,
        resolution: f64,
    ) -> Result<Self> {
        if !(extent > 0.0 && extent <= std::f64::consts::PI) {
            return Err(Error::InvalidParam(format!("patch extent {extent} out of (0, pi]")));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidParam("resolution must be positive".into()));
        }
        let frame = orthonormal_frame(center, dim)?;
        match (kind, dim) {
            (SurfaceKind::Circle, 2) => build_circle_patch(&frame, extent, resolution),
            (SurfaceKind::Sphere, 3) => build_sphere_patch(&frame, extent, resolution),
            _ => Err(Error::UnsupportedSurface { kind: kind.name(), dim }),
        }
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    /// Total quadrature weight; converges to the surface measure.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn push_node(nodes: &mut Vec<f64>, p: &[f64]) {
    nodes.extend_from_slice(p);
}

fn check_node_budget(count: f64) -> Result<usize> {
    if !(count.is_finite()) || count > NODE_BUDGET as f64 {
        return Err(Error::BudgetExceeded { requested: usize::MAX, budget: NODE_BUDGET });
    }
    Ok(count as usize)
}

fn build_circle(res: f64) -> Result<SurfaceChart> {
    let k = check_node_budget((TAU / res).ceil())?.max(8);
    let h = TAU / k as f64;
    let mut nodes = Vec::with_capacity(2 * k);
    for j in 0..k {
        let t = -std::f64::consts::PI + (j as f64 + 0.5) * h;
        push_node(&mut nodes, &[t.cos(), t.sin()]);
    }
    Ok(SurfaceChart {
        kind: SurfaceKind::Circle,
        dim: 2,
        param_lo: vec![-std::f64::consts::PI],
        param_hi: vec![std::f64::consts::PI],
        nodes,
        weights: vec![h; k],
        max_node_gap: h,
    })
}

fn build_sphere(res: f64) -> Result<SurfaceChart> {
    let pi = std::f64::consts::PI;
    let kt = check_node_budget((pi / res).ceil())?.max(4);
    let mut kp = check_node_budget((TAU / res).ceil())?.max(8);
    if kp % 2 == 1 {
        kp += 1; // even azimuthal count keeps the node set symmetric under x -> -x
    }
    check_node_budget(kt as f64 * kp as f64)?;
    let ht = pi / kt as f64;
    let hp = TAU / kp as f64;
    let mut nodes = Vec::with_capacity(3 * kt * kp);
    let mut weights = Vec::with_capacity(kt * kp);
    for i in 0..kt {
        let th = (i as f64 + 0.5) * ht;
        let (st, ct) = th.sin_cos();
        for j in 0..kp {
            let ph = (j as f64 + 0.5) * hp;
            push_node(&mut nodes, &[st * ph.cos(), st * ph.sin(), ct]);
            weights.push(st * ht * hp);
        }
    }
    Ok(SurfaceChart {
        kind: SurfaceKind::Sphere,
        dim: 3,
        param_lo: vec![0.0, 0.0],
        param_hi: vec![pi, TAU],
        nodes,
        weights,
        max_node_gap: ht.max(hp),
    })
}

fn build_parabola(res: f64) -> Result<SurfaceChart> {
    // Arc parameter t in [-1, 1], speed sqrt(1 + 4t^2) <= sqrt(5).
    let speed_max = 5f64.sqrt();
    let k = check_node_budget((2.0 * speed_max / res).ceil())?.max(8);
    let h = 2.0 / k as f64;
    let mut nodes = Vec::with_capacity(2 * k);
    let mut weights = Vec::with_capacity(k);
    for j in 0..k {
        let t = -1.0 + (j as f64 + 0.5) * h;
        push_node(&mut nodes, &[t, t * t]);
        weights.push((1.0 + 4.0 * t * t).sqrt() * h);
    }
    Ok(SurfaceChart {
        kind: SurfaceKind::ParaboloidCap,
        dim: 2,
        param_lo: vec![-1.0],
        param_hi: vec![1.0],
        nodes,
        weights,
        max_node_gap: h * speed_max,
    })
}

fn build_paraboloid(res: f64) -> Result<SurfaceChart> {
    // Polar graph coordinates over the unit disk: radial speed sqrt(1 + 4r^2).
    let speed_max = 5f64.sqrt();
    let kr = check_node_budget((speed_max / res).ceil())?.max(8);
    let kp = check_node_budget((TAU * speed_max / res).ceil())?.max(8);
    check_node_budget(kr as f64 * kp as f64)?;
    let hr = 1.0 / kr as f64;
    let hp = TAU / kp as f64;
    let mut nodes = Vec::with_capacity(3 * kr * kp);
    let mut weights = Vec::with_capacity(kr * kp);
    for i in 0..kr {
        let r = (i as f64 + 0.5) * hr;
        let area = r * (1.0 + 4.0 * r * r).sqrt() * hr * hp;
        for j in 0..kp {
            let ph = (j as f64 + 0.5) * hp;
            push_node(&mut nodes, &[r * ph.cos(), r * ph.sin(), r * r]);
            weights.push(area);
        }
    }
    Ok(SurfaceChart {
        kind: SurfaceKind::ParaboloidCap,
        dim: 3,
        param_lo: vec![0.0, 0.0],
        param_hi: vec![1.0, TAU],
        nodes,
        weights,
        max_node_gap: (hr * speed_max).max(hp * speed_max),
    })
}

fn build_circle_patch(frame: &[Vec<f64>], extent: f64, res: f64) -> Result<SurfaceChart> {
    let k = check_node_budget((2.0 * extent / res).ceil())?.max(8);
    let h = 2.0 * extent / k as f64;
    let (u0, u1) = (&frame[0], &frame[1]);
    let mut nodes = Vec::with_capacity(2 * k);
    for j in 0..k {
        let t = -extent + (j as f64 + 0.5) * h;
        let (s, c) = t.sin_cos();
        push_node(&mut nodes, &[c * u0[0] + s * u1[0], c * u0[1] + s * u1[1]]);
    }
    Ok(SurfaceChart {
        kind: SurfaceKind::Circle,
        dim: 2,
        param_lo: vec![-extent],
        param_hi: vec![extent],
        nodes,
        weights: vec![h; k],
        max_node_gap: h,
    })
}

fn build_sphere_patch(frame: &[Vec<f64>], extent: f64, res: f64) -> Result<SurfaceChart> {
    let kt = check_node_budget((extent / res).ceil())?.max(4);
    let arc = TAU * extent.sin().max(extent * 0.5);
    let kp = check_node_budget((arc / res).ceil())?.max(8);
    check_node_budget(kt as f64 * kp as f64)?;
    let ht = extent / kt as f64;
    let hp = TAU / kp as f64;
    let (u0, u1, u2) = (&frame[0], &frame[1], &frame[2]);
    let mut nodes = Vec::with_capacity(3 * kt * kp);
    let mut weights = Vec::with_capacity(kt * kp);
    for i in 0..kt {
        let th = (i as f64 + 0.5) * ht;
        let (st, ct) = th.sin_cos();
        for j in 0..kp {
            let ph = (j as f64 + 0.5) * hp;
            let (sp, cp) = ph.sin_cos();
            let p: Vec<f64> = (0..3)
                .map(|d| ct * u0[d] + st * (cp * u1[d] + sp * u2[d]))
                .collect();
            push_node(&mut nodes, &p);
            weights.push(st * ht * hp);
        }
    }
    Ok(SurfaceChart {
        kind: SurfaceKind::Sphere,
        dim: 3,
        param_lo: vec![0.0, 0.0],
        param_hi: vec![extent, TAU],
        nodes,
        weights,
        max_node_gap: ht.max(hp * extent.sin().max(ht)),
    })
}

/// Orthonormal frame with `frame[0]` the normalized `center`.
pub fn orthonormal_frame(center: &[f64], dim: usize) -> Result<Vec<Vec<f64>>> {
    if center.len() != dim {
        return Err(Error::InvalidParam("center dim mismatch".into()));
    }
    let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidParam("center must be a nonzero direction".into()));
    }
    let u0: Vec<f64> = center.iter().map(|v| v / norm).collect();
    match dim {
        2 => Ok(vec![u0.clone(), vec![-u0[1], u0[0]]]),
        3 => {
            // Pick the coordinate axis least aligned with u0 to seed Gram-Schmidt.
            let k = (0..3).min_by(|&a, &b| u0[a].abs().partial_cmp(&u0[b].abs()).unwrap()).unwrap();
            let mut u1 = vec![0.0; 3];
            u1[k] = 1.0;
            let d: f64 = u1.iter().zip(&u0).map(|(a, b)| a * b).sum();
            for i in 0..3 {
                u1[i] -= d * u0[i];
            }
            let n1 = u1.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut u1 {
                *v /= n1;
            }
            let u2 = vec![
                u0[1] * u1[2] - u0[2] * u1[1],
                u0[2] * u1[0] - u0[0] * u1[2],
                u0[0] * u1[1] - u0[1] * u1[0],
            ];
            Ok(vec![u0, u1, u2])
        }
        _ => Err(Error::InvalidParam(format!("frames only in dim 2 or 3, got {dim}"))),
    }
}

/// Complex density sampled on a chart's nodes.
#[derive(Debug, Clone)]
pub struct SurfaceDensity {
    pub values: Vec<Complex64>,
}

impl SurfaceDensity {
    pub fn constant(chart: &SurfaceChart, value: Complex64) -> Self {
        SurfaceDensity { values: vec![value; chart.node_count()] }
    }

    /// Independent standard complex Gaussian node values, normalized so the
    /// quadrature L2 norm is exactly 1. Drawn serially: reproducible for a
    /// fixed seed regardless of thread count.
    pub fn random_unit_l2(chart: &SurfaceChart, rng: &mut impl Rng) -> Result<Self> {
        let mut values = Vec::with_capacity(chart.node_count());
        for _ in 0..chart.node_count() {
            let re: f64 = standard_normal(rng);
            let im: f64 = standard_normal(rng);
            values.push(Complex64::new(re, im));
        }
        let mut density = SurfaceDensity { values };
        let norm = lp_norm(chart, &density, LpNorm::L2)?;
        if !(norm > 0.0) {
            return Err(Error::InvalidParam("degenerate random density".into()));
        }
        for v in &mut density.values {
            *v /= norm;
        }
        Ok(density)
    }
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller on open-interval uniforms; avoids ln(0).
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpNorm {
    L1,
    L2,
    LInf,
}

/// Quadrature Lp norm of a density over the chart.
pub fn lp_norm(chart: &SurfaceChart, density: &SurfaceDensity, p: LpNorm) -> Result<f64> {
    if density.values.len() != chart.node_count() {
        return Err(Error::InvalidParam("density length != node count".into()));
    }
    let val = match p {
        LpNorm::L1 => chart
            .weights
            .iter()
            .zip(&density.values)
            .map(|(w, v)| w * v.norm())
            .sum(),
        LpNorm::L2 => chart
            .weights
            .iter()
            .zip(&density.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt(),
        LpNorm::LInf => density.values.iter().map(|v| v.norm()).fold(0.0, f64::max),
    };
    Ok(val)
}

/// Indicator bump on the cap `{xi : |xi - center| <= c / sqrt(r)}` together
/// with the box dual to it: side `r` along the cap normal and `sqrt(r)` along
/// each tangent direction. For `c <= 0.1` the extension phase varies by less
/// than pi/4 over the cap anywhere in the dual box.
#[derive(Debug, Clone)]
pub struct KnappCap {
    pub center: Vec<f64>,
    pub halfwidth: f64,
    pub scale_r: f64,
    pub constant_c: f64,
    pub density: SurfaceDensity,
    pub cap_node_count: usize,
    pub frame: Vec<Vec<f64>>,
}

impl KnappCap {
    /// Surface measure carried by the cap indicator (quadrature value).
    pub fn cap_measure(&self, chart: &SurfaceChart) -> Result<f64> {
        let l1 = lp_norm(chart, &self.density, LpNorm::L1)?;
        Ok(l1)
    }

    /// Dual box edge lengths: `[r, sqrt(r), ...]` in the `frame` basis.
    pub fn dual_lengths(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![self.scale_r.sqrt(); dim];
        v[0] = self.scale_r;
        v
    }

    /// Map dual-box coordinates `t` (t[0] along the cap normal) to a point.
    pub fn dual_point(&self, t: &[f64]) -> Vec<f64> {
        let dim = self.frame[0].len();
        let mut x = vec![0.0; dim];
        for (tk, u) in t.iter().zip(&self.frame) {
            for d in 0..dim {
                x[d] += tk * u[d];
            }
        }
        x
    }
}

/// Build the Knapp indicator for scale `r >= 1` and cap constant `c in (0, 1]`.
/// Fails if the chart's node gap exceeds (cap width)/32.
pub fn build_knapp(
    chart: &SurfaceChart,
    center_direction: &[f64],
    r: f64,
    c: f64,
) -> Result<KnappCap> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParam(format!("knapp scale must be >= 1, got {r}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParam(format!("cap constant must lie in (0, 1], got {c}")));
    }
    if !matches!(chart.kind, SurfaceKind::Circle | SurfaceKind::Sphere) {
        return Err(Error::Unsupported("knapp caps require a circle or sphere chart".into()));
    }
    let frame = orthonormal_frame(center_direction, chart.dim)?;
    let center = frame[0].clone();
    let halfwidth = c / r.sqrt();
    if chart.max_node_gap > 2.0 * halfwidth / 32.0 {
        return Err(Error::UnderResolvedCap {
            spacing: chart.max_node_gap,
            cap_width: 2.0 * halfwidth,
        });
    }
    let mut values = vec![Complex64::new(0.0, 0.0); chart.node_count()];
    let mut count = 0usize;
    for j in 0..chart.node_count() {
        let p = chart.node(j);
        let dist2: f64 = p.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist2 <= halfwidth * halfwidth {
            values[j] = Complex64::new(1.0, 0.0);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidParam("cap contains no chart nodes".into()));
    }
    Ok(KnappCap {
        center,
        halfwidth,
        scale_r: r,
        constant_c: c,
        density: SurfaceDensity { values },
        cap_node_count: count,
        frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent composite-Simpson quadrature, used to freeze arc-length
    /// style constants without going through chart weights.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = f(a) + f(b);
        for i in 1..panels {
            let x = a + i as f64 * h;
            acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn circle_weight_sum_is_full_angle() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 1e-3).unwrap();
        assert!((chart.total_weight() - TAU).abs() < 1e-12);
        for j in 0..chart.node_count() {
            let p = chart.node(j);
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_weight_sum_near_area() {
        let chart = SurfaceChart::build(SurfaceKind::Sphere, 3, 1.5e-2).unwrap();
        assert!(chart.node_count() > 80_000);
        let area = 4.0 * std::f64::consts::PI;
        assert!((chart.total_weight() - area).abs() / area < 1e-3);
        for j in (0..chart.node_count()).step_by(997) {
            let p = chart.node(j);
            let r2: f64 = p.iter().map(|v| v * v).sum();
            assert!((r2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parabola_arc_length() {
        let chart = SurfaceChart::build(SurfaceKind::ParaboloidCap, 2, 1e-4).unwrap();
        // Closed form sqrt(5) + ln(2 + sqrt(5))/2, frozen, plus an independent
        // Simpson evaluation of the same speed integrand.
        let frozen = 2.957_885_715_089_195;
        let quad = simpson(|t| (1.0 + 4.0 * t * t).sqrt(), -1.0, 1.0, 4096);
        assert!((quad - frozen).abs() < 1e-9);
        assert!((chart.total_weight() - frozen).abs() / frozen < 1e-4);
        for j in (0..chart.node_count()).step_by(101) {
            let p = chart.node(j);
            assert!((p[1] - p[0] * p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn paraboloid_area_in_3d() {
        let chart = SurfaceChart::build(SurfaceKind::ParaboloidCap, 3, 4e-3).unwrap();
        // 2 pi * int_0^1 r sqrt(1+4r^2) dr = pi (5 sqrt 5 - 1) / 6.
        let exact = std::f64::consts::PI * (5.0 * 5f64.sqrt() - 1.0) / 6.0;
        assert!((chart.total_weight() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn unsupported_combinations_rejected() {
        assert!(SurfaceChart::build(SurfaceKind::Circle, 3, 0.1).is_err());
        assert!(SurfaceChart::build(SurfaceKind::Sphere, 2, 0.1).is_err());
        assert!(SurfaceChart::build(SurfaceKind::Sphere, 4, 0.1).is_err());
    }

    #[test]
    fn node_budget_enforced() {
        let err = SurfaceChart::build(SurfaceKind::Sphere, 3, 1e-6).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn cap_patch_matches_global_measure() {
        let extent = 0.2;
        let patch =
            SurfaceChart::cap_patch(SurfaceKind::Sphere, 3, &[0.3, -0.4, 0.5], extent, 1e-3)
                .unwrap();
        let exact = TAU * (1.0 - extent.cos());
        assert!((patch.total_weight() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn knapp_cap_geometry() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 1e-2).unwrap();
        let cap = build_knapp(&chart, &[1.0, 0.0], 1.0, 1.0).unwrap();
        // Chord halfwidth 1 corresponds to half-angle 2 asin(1/2) = pi/3.
        let measure = cap.cap_measure(&chart).unwrap();
        let exact = 2.0 * std::f64::consts::FRAC_PI_3;
        assert!((measure - exact).abs() < 2e-2);
        assert_eq!(cap.dual_lengths(2), vec![1.0, 1.0]);
        let inf = lp_norm(&chart, &cap.density, LpNorm::LInf).unwrap();
        assert_eq!(inf, 1.0);
    }

    #[test]
    fn knapp_l2_norm_is_sqrt_cap_measure() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 2e-4).unwrap();
        let cap = build_knapp(&chart, &[0.0, 1.0], 64.0, 0.1).unwrap();
        let l1 = lp_norm(&chart, &cap.density, LpNorm::L1).unwrap();
        let l2 = lp_norm(&chart, &cap.density, LpNorm::L2).unwrap();
        assert!((l2 * l2 - l1).abs() < 1e-12);
        let expected = 2.0 * 0.1 / 8.0; // 2 c / sqrt(r)
        assert!((l1 - expected).abs() / expected < 0.05);
    }

    #[test]
    fn knapp_requires_resolution() {
        let chart = SurfaceChart::build(SurfaceKind::Circle, 2, 1e-2).unwrap();
        let err = build_knapp(&chart, &[1.0, 0.0], 400.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::UnderResolvedCap { .. }));
    }

    #[test]
    fn knapp_rejects_parabola() {
        let chart = SurfaceChart::build(SurfaceKind::ParaboloidCap, 2, 1e-3).unwrap();
        assert!(build_knapp(&chart, &[1.0, 0.0], 4.0, 0.5).is_err());
    }

    #[test]
    fn frames_are_orthonormal() {
        for center in [[0.1, -2.0, 0.4], [1.0, 0.0, 0.0], [0.0, 0.0, -3.0]] {
            let f = orthonormal_frame(&center, 3).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let dot: f64 = f[a].iter().zip(&f[b]).map(|(x, y)| x * y).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
    }
}
