//! Weight families on the ambient space: indicator weights with power-law
//! tails, stacks and grids of unit slabs, neighborhoods of plane algebraic
//! curves, unions of lattice cubes, and grid-sampled densities — together
//! with ball-mass quadratures and the dyadic sweep that lower-bounds the
//! growth constant `A_alpha = sup_balls mass / radius^alpha`.

use rayon::prelude::*;

use crate::cubes::CubeSet;
use crate::error::{Error, Result};
use crate::grid::{GridBox, GridField};

/// Plane algebraic curves available for polynomial-neighborhood weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneCurve {
    /// `P(x, y) = x^2 + y^2 - 1`.
    Circle,
    /// `P(x, y) = y - x^2`.
    Parabola,
}

impl PlaneCurve {
    pub fn p(&self, x: f64, y: f64) -> f64 {
        match self {
            PlaneCurve::Circle => x * x + y * y - 1.0,
            PlaneCurve::Parabola => y - x * x,
        }
    }

    pub fn grad(&self, x: f64, _y: f64) -> (f64, f64) {
        match self {
            PlaneCurve::Circle => (2.0 * x, 2.0 * _y),
            PlaneCurve::Parabola => (-2.0 * x, 1.0),
        }
    }

    pub fn degree(&self) -> f64 {
        2.0
    }
}

/// A nonnegative weight `H : R^n -> [0, 1]`.
#[derive(Debug, Clone)]
pub enum Weight {
    /// `H = 1` everywhere.
    ConstantOne { dim: usize },
    /// Indicator of `{x > 0, 0 <= y <= x^(-b)}` in the plane.
    PowerTail { b: f64 },
    /// Indicator of a stack of unit slabs `[l^(1/b), 1 + l^(1/b)]` in the
    /// last coordinate, full space in the others.
    SlabStack { dim: usize, b: f64 },
    /// Indicator of `{ |x_n| <= |x_bar|^(1 - n/2) }` (a flat band for n = 2,
    /// a pinched horn around the plane `x_3 = 0` for n = 3).
    MidSlab { dim: usize },
    /// Product of slab stacks in every coordinate but the first.
    SlabGrid { dim: usize, b: f64 },
    /// Indicator of `{ |P| <= rho * max(1, |grad P|) }` for a plane curve.
    VarietyNbhd { curve: PlaneCurve, rho: f64 },
    /// Indicator of a union of lattice unit cubes.
    Cubes { set: CubeSet, alpha: Option<f64> },
    /// Grid-sampled density with values in `[0, 1]`, constant on cells.
    Sampled { field: GridField<f64> },
}

impl Weight {
    pub fn constant(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Weight::ConstantOne { dim })
    }

    pub fn power_tail(b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidParam(format!("power tail needs 0 <= b <= 1, got {b}")));
        }
        Ok(Weight::PowerTail { b })
    }

    pub fn slab_stack(dim: usize, b: f64) -> Result<Self> {
        check_dim(dim)?;
        check_slab_b(b)?;
        Ok(Weight::SlabStack { dim, b })
    }

    pub fn mid_slab(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Weight::MidSlab { dim })
    }

    pub fn slab_grid(dim: usize, b: f64) -> Result<Self> {
        check_dim(dim)?;
        check_slab_b(b)?;
        Ok(Weight::SlabGrid { dim, b })
    }

    pub fn variety(curve: PlaneCurve, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 0.5) {
            return Err(Error::InvalidParam(format!("rho must lie in (0, 0.5], got {rho}")));
        }
        Ok(Weight::VarietyNbhd { curve, rho })
    }

    pub fn from_cubes(set: CubeSet) -> Self {
        Weight::Cubes { set, alpha: None }
    }

    pub fn from_cubes_with_alpha(set: CubeSet, alpha: f64) -> Result<Self> {
        let dim = set.dim() as f64;
        if !(alpha > 0.0) || alpha > dim {
            return Err(Error::InvalidParam(format!("claimed alpha must lie in (0, {dim}]")));
        }
        Ok(Weight::Cubes { set, alpha: Some(alpha) })
    }

    pub fn sampled(field: GridField<f64>) -> Result<Self> {
        check_dim(field.spec.dim())?;
        if field.values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidParam("sampled weight values must lie in [0, 1]".into()));
        }
        Ok(Weight::Sampled { field })
    }

    pub fn dim(&self) -> usize {
        match self {
            Weight::ConstantOne { dim } => *dim,
            Weight::PowerTail { .. } => 2,
            Weight::SlabStack { dim, .. } => *dim,
            Weight::MidSlab { dim } => *dim,
            Weight::SlabGrid { dim, .. } => *dim,
            Weight::VarietyNbhd { .. } => 2,
            Weight::Cubes { set, .. } => set.dim(),
            Weight::Sampled { field } => field.spec.dim(),
        }
    }

    /// The dimension exponent the family is designed to realize, when one is
    /// attached to the construction. `PowerTail { b: 1.0 }` reports zero:
    /// that tail is thin enough that every positive exponent admits a finite
    /// growth constant.
    pub fn nominal_alpha(&self) -> Option<f64> {
        match self {
            Weight::ConstantOne { dim } => Some(*dim as f64),
            Weight::PowerTail { b } => Some(1.0 - b),
            Weight::SlabStack { dim, b } => Some((*dim as f64 - 2.0) + 1.0 + b),
            Weight::MidSlab { dim } => Some(*dim as f64 / 2.0),
            Weight::SlabGrid { dim, b } => Some(1.0 + (*dim as f64 - 1.0) * b),
            Weight::VarietyNbhd { .. } => Some(1.0),
            Weight::Cubes { alpha, .. } => *alpha,
            Weight::Sampled { .. } => None,
        }
    }

    /// Pointwise evaluation.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Weight::ConstantOne { .. } => 1.0,
            Weight::PowerTail { b } => {
                let (u, v) = (x[0], x[1]);
                if u > 0.0 && v >= 0.0 && v <= u.powf(-b) {
                    1.0
                } else {
                    0.0
                }
            }
            Weight::SlabStack { b, .. } => bool_to_f64(slab_member(x[x.len() - 1], *b)),
            Weight::MidSlab { dim } => match dim {
                2 => bool_to_f64(x[1].abs() <= 1.0),
                _ => {
                    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    bool_to_f64(x[2] * x[2] * rho <= 1.0)
                }
            },
            Weight::SlabGrid { b, .. } => {
                bool_to_f64(x[1..].iter().all(|&t| slab_member(t, *b)))
            }
            Weight::VarietyNbhd { curve, rho } => {
                let p = curve.p(x[0], x[1]);
                let (gx, gy) = curve.grad(x[0], x[1]);
                let g = (gx * gx + gy * gy).sqrt();
                bool_to_f64(p.abs() <= rho * g.max(1.0))
            }
            Weight::Cubes { set, .. } => bool_to_f64(set.contains_point(x)),
            Weight::Sampled { field } => sample_field(field, x),
        }
    }

    /// `∫_{B(center, r)} H`, by closed forms where the geometry allows and
    /// by quadrature otherwise. Relative accuracy is about a percent, much
    /// finer for the closed-form families.
    pub fn ball_mass(&self, center: &[f64], r: f64) -> Result<f64> {
        if center.len() != self.dim() {
            return Err(Error::InvalidParam("ball center arity != weight dim".into()));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParam(format!("ball radius must be positive, got {r}")));
        }
        Ok(match self {
            Weight::ConstantOne { dim } => ball_volume(*dim, r),
            Weight::PowerTail { b } => power_tail_mass(*b, center, r),
            Weight::SlabStack { dim, b } => slab_stack_mass(*dim, *b, center, r),
            Weight::MidSlab { dim } => match dim {
                2 => chord_area(center[1], r, -1.0, 1.0),
                _ => mid_slab_mass_3d(center, r),
            },
            Weight::SlabGrid { dim, b } => match dim {
                2 => slab_stack_mass(2, *b, center, r),
                _ => slab_grid_mass_3d(*b, center, r),
            },
            Weight::VarietyNbhd { curve, rho } => variety_mass(*curve, *rho, center, r),
            Weight::Cubes { set, .. } => cube_set_mass(set, center, r),
            Weight::Sampled { field } => sampled_mass(field, center, r),
        })
    }

    /// A finite list of boxes whose union contains `{H > 0} ∩ bounds`.
    /// Boxes may overlap; callers dedupe cells.
    pub fn support_cover(&self, bounds: &GridBox) -> Vec<GridBox> {
        match self {
            Weight::ConstantOne { .. } => vec![bounds.clone()],
            Weight::PowerTail { b } => power_tail_cover(*b, bounds),
            Weight::SlabStack { dim, b } => slab_axis_cover(*dim, *b, bounds, self.dim() - 1),
            Weight::MidSlab { dim } => match dim {
                2 => clip_box(bounds, &[f64::NEG_INFINITY, -1.0], &[f64::INFINITY, 1.0])
                    .into_iter()
                    .collect(),
                _ => mid_slab_cover_3d(bounds),
            },
            Weight::SlabGrid { dim, b } => match dim {
                2 => slab_axis_cover(2, *b, bounds, 1),
                _ => slab_grid_cover_3d(*b, bounds),
            },
            Weight::VarietyNbhd { curve, rho } => variety_cover(*curve, *rho, bounds),
            Weight::Cubes { set, .. } => {
                let mut boxes = Vec::new();
                for k in set.corners() {
                    let lo: Vec<f64> = k.iter().map(|&v| v as f64).collect();
                    let hi: Vec<f64> = k.iter().map(|&v| (v + 1) as f64).collect();
                    if let Some(b) = clip_box(bounds, &lo, &hi) {
                        boxes.push(b);
                    }
                }
                boxes
            }
            Weight::Sampled { field } => {
                clip_box(bounds, &field.spec.bounds.lo, &field.spec.bounds.hi)
                    .into_iter()
                    .collect()
            }
        }
    }
}

/// Sweep parameters for the growth-constant estimator.
#[derive(Debug, Clone)]
pub struct SweepParams {
    /// Largest dyadic ball radius; radii are `{1, 2, 4, …} ∩ [1, r_max]`.
    pub r_max: f64,
    /// Centers range over the lattice `(r/2) Z^n` with `|k|_inf <= 2 * window_factor`.
    pub window_factor: f64,
    /// Relative tolerance for the stabilization flag.
    pub stab_tol: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { r_max: 64.0, window_factor: 2.0, stab_tol: 0.10 }
    }
}

/// Best ratio found at one dyadic radius.
#[derive(Debug, Clone)]
pub struct RadiusReport {
    pub radius: f64,
    pub best_ratio: f64,
    pub best_center: Vec<f64>,
}

/// Certified lower bound for the growth constant, with the sweep trace.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub alpha: f64,
    pub max_ratio: f64,
    pub argmax_radius: f64,
    pub argmax_center: Vec<f64>,
    pub per_radius: Vec<RadiusReport>,
    /// True when the running max over the last two dyadic levels moved by
    /// no more than `stab_tol` relatively.
    pub stabilized: bool,
}

/// Lower-bounds `A_alpha(H) = sup mass(B)/radius^alpha` by sweeping dyadic
/// radii and per-radius center lattices of spacing `radius / 2`.
pub fn estimate_a_alpha(w: &Weight, alpha: f64, params: &SweepParams) -> Result<SweepReport> {
    let n = w.dim();
    if !(alpha > 0.0) || alpha > n as f64 {
        return Err(Error::InvalidParam(format!("alpha must lie in (0, {n}], got {alpha}")));
    }
    if !(params.r_max >= 1.0) {
        return Err(Error::InvalidParam("sweep needs r_max >= 1".into()));
    }
    let k_max = (2.0 * params.window_factor).ceil() as i64;
    let mut per_radius = Vec::new();
    let mut max_ratio = f64::NEG_INFINITY;
    let mut argmax_radius = 1.0;
    let mut argmax_center = vec![0.0; n];
    let mut cums = Vec::new();
    let mut r = 1.0f64;
    while r <= params.r_max * (1.0 + 1e-12) {
        let spacing = r / 2.0;
        let mut centers = Vec::new();
        let mut k = vec![-k_max; n];
        'lattice: loop {
            centers.push(k.iter().map(|&v| v as f64 * spacing).collect::<Vec<f64>>());
            let mut axis = n - 1;
            loop {
                k[axis] += 1;
                if k[axis] <= k_max {
                    break;
                }
                k[axis] = -k_max;
                if axis == 0 {
                    break 'lattice;
                }
                axis -= 1;
            }
        }
        let masses: Result<Vec<f64>> =
            centers.par_iter().map(|c| w.ball_mass(c, r)).collect();
        let masses = masses?;
        let denom = r.powf(alpha);
        let mut best = f64::NEG_INFINITY;
        let mut best_center = vec![0.0; n];
        for (c, m) in centers.iter().zip(&masses) {
            let ratio = m / denom;
            if ratio > best {
                best = ratio;
                best_center = c.clone();
            }
        }
        if best > max_ratio {
            max_ratio = best;
            argmax_radius = r;
            argmax_center = best_center.clone();
        }
        per_radius.push(RadiusReport { radius: r, best_ratio: best, best_center });
        cums.push(max_ratio);
        r *= 2.0;
    }
    let stabilized = match cums.len() {
        0 | 1 => false,
        m => {
            let (prev, last) = (cums[m - 2], cums[m - 1]);
            last > 0.0 && (last - prev) / last <= params.stab_tol
        }
    };
    Ok(SweepReport { alpha, max_ratio, argmax_radius, argmax_center, per_radius, stabilized })
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("weights support dim 2..=3, got {dim}")))
    }
}

fn check_slab_b(b: f64) -> Result<()> {
    if b > 0.0 && b <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("slab families need 0 < b <= 1, got {b}")))
    }
}

fn bool_to_f64(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Membership in the union of slabs `[l^(1/b), 1 + l^(1/b)]`, `l = 0, 1, …`.
fn slab_member(t: f64, b: f64) -> bool {
    if t < 0.0 {
        return false;
    }
    let l = t.powf(b).floor();
    t <= 1.0 + l.powf(1.0 / b)
}

fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        2 => std::f64::consts::PI * r * r,
        _ => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
    }
}

/// `∫ 2 sqrt(r^2 - u^2) du` over `[a, b] ∩ [cz - r, cz + r]` shifted by `cz`:
/// the disk area between two horizontal lines.
fn chord_area(cz: f64, r: f64, a: f64, b: f64) -> f64 {
    let f = |u: f64| u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin();
    let u1 = (a - cz).clamp(-r, r);
    let u2 = (b - cz).clamp(-r, r);
    if u2 <= u1 {
        0.0
    } else {
        f(u2) - f(u1)
    }
}

/// `∫ pi (r^2 - u^2) du` over `[a, b] ∩ [cz - r, cz + r]` shifted by `cz`:
/// the 3-ball volume between two horizontal planes.
fn slab_volume_3d(cz: f64, r: f64, a: f64, b: f64) -> f64 {
    let g = |u: f64| std::f64::consts::PI * (r * r * u - u * u * u / 3.0);
    let u1 = (a - cz).clamp(-r, r);
    let u2 = (b - cz).clamp(-r, r);
    if u2 <= u1 {
        0.0
    } else {
        g(u2) - g(u1)
    }
}

const POWER_TAIL_PANELS: usize = 8192;

fn power_tail_mass(b: f64, center: &[f64], r: f64) -> f64 {
    let (cx, cy) = (center[0], center[1]);
    let lo = (cx - r).max(0.0);
    let hi = cx + r;
    if hi <= lo {
        return 0.0;
    }
    let h = (hi - lo) / POWER_TAIL_PANELS as f64;
    let mut acc = 0.0;
    for i in 0..POWER_TAIL_PANELS {
        let x = lo + (i as f64 + 0.5) * h;
        let s2 = r * r - (x - cx) * (x - cx);
        if s2 <= 0.0 {
            continue;
        }
        let s = s2.sqrt();
        let ylo = (cy - s).max(0.0);
        let yhi = (cy + s).min(x.powf(-b));
        if yhi > ylo {
            acc += (yhi - ylo) * h;
        }
    }
    acc
}

fn slab_stack_mass(dim: usize, b: f64, center: &[f64], r: f64) -> f64 {
    let cz = center[dim - 1];
    let mut acc = 0.0;
    let l_max = ((cz + r).max(0.0)).powf(b).ceil() as i64 + 1;
    for l in 0..=l_max {
        let lo = (l as f64).powf(1.0 / b);
        if lo > cz + r {
            break;
        }
        let hi = lo + 1.0;
        if hi < cz - r {
            continue;
        }
        acc += match dim {
            2 => chord_area(cz, r, lo, hi),
            _ => slab_volume_3d(cz, r, lo, hi),
        };
    }
    acc
}

const PLANAR_QUAD: usize = 256;

/// Midpoint quadrature over the transverse plane of `z`-interval lengths.
fn planar_quad(center: &[f64], r: f64, zlen: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let h = 2.0 * r / PLANAR_QUAD as f64;
    let mut acc = 0.0;
    for i in 0..PLANAR_QUAD {
        let x = center[0] - r + (i as f64 + 0.5) * h;
        for j in 0..PLANAR_QUAD {
            let y = center[1] - r + (j as f64 + 0.5) * h;
            let d2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
            let s2 = r * r - d2;
            if s2 <= 0.0 {
                continue;
            }
            acc += zlen(x, y, s2.sqrt()) * h * h;
        }
    }
    acc
}

fn mid_slab_mass_3d(center: &[f64], r: f64) -> f64 {
    let cz = center[2];
    planar_quad(center, r, |x, y, s| {
        let rho = (x * x + y * y).sqrt();
        let g = if rho > 0.0 { rho.powf(-0.5) } else { f64::INFINITY };
        let zlo = (-g).max(cz - s);
        let zhi = g.min(cz + s);
        (zhi - zlo).max(0.0)
    })
}

fn slab_grid_mass_3d(b: f64, center: &[f64], r: f64) -> f64 {
    // Transverse coordinates are x_2, x_3; the chord runs along x_1.
    let c = [center[1], center[2]];
    let h = 2.0 * r / PLANAR_QUAD as f64;
    let mut acc = 0.0;
    for i in 0..PLANAR_QUAD {
        let u = c[0] - r + (i as f64 + 0.5) * h;
        if !slab_member(u, b) {
            continue;
        }
        for j in 0..PLANAR_QUAD {
            let v = c[1] - r + (j as f64 + 0.5) * h;
            if !slab_member(v, b) {
                continue;
            }
            let d2 = (u - c[0]).powi(2) + (v - c[1]).powi(2);
            let s2 = r * r - d2;
            if s2 > 0.0 {
                acc += 2.0 * s2.sqrt() * h * h;
            }
        }
    }
    acc
}

/// Adaptive quadtree integration of the curve-neighborhood indicator over a
/// disk. Cells provably clear of the band or the disk are discarded; cells
/// provably inside both are taken whole; leaves are settled by a 2x2
/// midpoint subsample.
fn variety_mass(curve: PlaneCurve, rho: f64, center: &[f64], r: f64) -> f64 {
    let leaf = (rho / 4.0).max(r / 4096.0);
    let in_band = |x: f64, y: f64| {
        let p = curve.p(x, y);
        let (gx, gy) = curve.grad(x, y);
        p.abs() <= rho * (gx * gx + gy * gy).sqrt().max(1.0)
    };
    fn recurse(
        curve: PlaneCurve,
        rho: f64,
        cx: f64,
        cy: f64,
        r: f64,
        sx: f64,
        sy: f64,
        side: f64,
        leaf: f64,
        in_band: &dyn Fn(f64, f64) -> bool,
    ) -> f64 {
        let hd = side * std::f64::consts::FRAC_1_SQRT_2; // half-diagonal
        let dc = ((sx - cx).powi(2) + (sy - cy).powi(2)).sqrt();
        if dc - hd > r {
            return 0.0;
        }
        let p = curve.p(sx, sy);
        let (gx, gy) = curve.grad(sx, sy);
        let g = (gx * gx + gy * gy).sqrt();
        // Quadratic curves: |P| moves by at most g*hd + hd^2 over the cell
        // and |grad P| by at most 2*hd.
        let dp = g * hd + hd * hd;
        if p.abs() - dp > rho * (g + 2.0 * hd).max(1.0) {
            return 0.0;
        }
        if side <= leaf {
            let q = side / 4.0;
            let mut hits = 0;
            for &(dx, dy) in &[(-q, -q), (-q, q), (q, -q), (q, q)] {
                let (x, y) = (sx + dx, sy + dy);
                if (x - cx).powi(2) + (y - cy).powi(2) <= r * r && in_band(x, y) {
                    hits += 1;
                }
            }
            return hits as f64 / 4.0 * side * side;
        }
        let whole_in_band = p.abs() + dp <= rho * (g - 2.0 * hd).max(1.0);
        if whole_in_band && dc + hd <= r {
            return side * side;
        }
        let s = side / 2.0;
        let q = side / 4.0;
        let mut acc = 0.0;
        for &(dx, dy) in &[(-q, -q), (-q, q), (q, -q), (q, q)] {
            acc += recurse(curve, rho, cx, cy, r, sx + dx, sy + dy, s, leaf, in_band);
        }
        acc
    }
    recurse(curve, rho, center[0], center[1], r, center[0], center[1], 2.0 * r, leaf, &in_band)
}

/// Ball mass of a cube union: whole cubes are classified by center distance,
/// boundary cubes are refined by an 8x8 (8x8x8) midpoint subsample.
fn cube_set_mass(set: &CubeSet, center: &[f64], r: f64) -> f64 {
    let n = set.dim();
    let half_diag = 0.5 * (n as f64).sqrt();
    let sub = 8usize;
    let mut acc = 0.0;
    for k in set.corners() {
        let mut d2 = 0.0;
        for (axis, &v) in k.iter().enumerate() {
            d2 += (v as f64 + 0.5 - center[axis]).powi(2);
        }
        let d = d2.sqrt();
        if d > r + half_diag {
            continue;
        }
        if d <= r - half_diag {
            acc += 1.0;
            continue;
        }
        let h = 1.0 / sub as f64;
        let mut hits = 0usize;
        let mut idx = vec![0usize; n];
        'cells: loop {
            let mut q2 = 0.0;
            for axis in 0..n {
                let x = k[axis] as f64 + (idx[axis] as f64 + 0.5) * h;
                q2 += (x - center[axis]).powi(2);
            }
            if q2 <= r * r {
                hits += 1;
            }
            let mut a = n - 1;
            loop {
                idx[a] += 1;
                if idx[a] < sub {
                    break;
                }
                idx[a] = 0;
                if a == 0 {
                    break 'cells;
                }
                a -= 1;
            }
        }
        acc += hits as f64 / (sub as f64).powi(n as i32);
    }
    acc
}

fn sampled_mass(field: &GridField<f64>, center: &[f64], r: f64) -> f64 {
    let spec = &field.spec;
    let n = spec.dim();
    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .map(|axis| spec.axis_range(axis, center[axis] - r, center[axis] + r))
        .collect();
    if ranges.iter().any(|rg| rg.is_empty()) {
        return 0.0;
    }
    let vol = spec.cell_volume();
    let mut acc = 0.0;
    let mut idx: Vec<usize> = ranges.iter().map(|rg| rg.start).collect();
    let mut x = vec![0.0; n];
    'cells: loop {
        let mut lin = 0usize;
        for axis in 0..n {
            lin = lin * spec.counts[axis] + idx[axis];
        }
        spec.center(lin, &mut x);
        let mut d2 = 0.0;
        for axis in 0..n {
            d2 += (x[axis] - center[axis]).powi(2);
        }
        if d2 <= r * r {
            acc += field.values[lin] * vol;
        }
        let mut a = n - 1;
        loop {
            idx[a] += 1;
            if idx[a] < ranges[a].end {
                break;
            }
            idx[a] = ranges[a].start;
            if a == 0 {
                break 'cells;
            }
            a -= 1;
        }
    }
    acc
}

fn sample_field(field: &GridField<f64>, x: &[f64]) -> f64 {
    let spec = &field.spec;
    let mut lin = 0usize;
    for axis in 0..spec.dim() {
        let t = (x[axis] - spec.bounds.lo[axis]) / spec.spacing[axis];
        if t < 0.0 {
            return 0.0;
        }
        let i = t.floor() as usize;
        if i >= spec.counts[axis] {
            return 0.0;
        }
        lin = lin * spec.counts[axis] + i;
    }
    field.values[lin]
}

fn clip_box(bounds: &GridBox, lo: &[f64], hi: &[f64]) -> Option<GridBox> {
    let n = bounds.lo.len();
    let mut clo = Vec::with_capacity(n);
    let mut chi = Vec::with_capacity(n);
    for axis in 0..n {
        let a = lo[axis].max(bounds.lo[axis]);
        let b = hi[axis].min(bounds.hi[axis]);
        if !(a < b) {
            return None;
        }
        clo.push(a);
        chi.push(b);
    }
    GridBox::new(clo, chi).ok()
}

fn power_tail_cover(b: f64, bounds: &GridBox) -> Vec<GridBox> {
    let mut boxes = Vec::new();
    // Head strip x in (0, 1]: the tail is unbounded in y there.
    if let Some(bx) = clip_box(bounds, &[0.0, 0.0], &[1.0, f64::INFINITY]) {
        boxes.push(bx);
    }
    let mut x = 1.0f64;
    let mut j = 0i32;
    while x < bounds.hi[0] {
        let y_cap = 2f64.powf(-(j as f64) * b);
        if let Some(bx) = clip_box(bounds, &[x, 0.0], &[2.0 * x, y_cap]) {
            boxes.push(bx);
        }
        x *= 2.0;
        j += 1;
    }
    boxes
}

fn slab_axis_cover(dim: usize, b: f64, bounds: &GridBox, axis: usize) -> Vec<GridBox> {
    let mut boxes = Vec::new();
    for (lo, hi) in slab_intervals(b, bounds.hi[axis]) {
        let mut blo = vec![f64::NEG_INFINITY; dim];
        let mut bhi = vec![f64::INFINITY; dim];
        blo[axis] = lo;
        bhi[axis] = hi;
        if let Some(bx) = clip_box(bounds, &blo, &bhi) {
            boxes.push(bx);
        }
    }
    boxes
}

fn slab_intervals(b: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut l = 0i64;
    loop {
        let lo = (l as f64).powf(1.0 / b);
        if lo > hi {
            break;
        }
        out.push((lo, lo + 1.0));
        l += 1;
        if l > 1 << 22 {
            break;
        }
    }
    out
}

fn mid_slab_cover_3d(bounds: &GridBox) -> Vec<GridBox> {
    let mut boxes = Vec::new();
    // |x_bar| <= 1: the horn is unbounded in x_3 there.
    if let Some(bx) = clip_box(
        bounds,
        &[-1.0, -1.0, f64::NEG_INFINITY],
        &[1.0, 1.0, f64::INFINITY],
    ) {
        boxes.push(bx);
    }
    let far = bounds.hi[0].abs().max(bounds.hi[1].abs()).max(bounds.lo[0].abs()).max(
        bounds.lo[1].abs(),
    ) * std::f64::consts::SQRT_2;
    let mut s = 1.0f64;
    while s < far {
        // Shell 2^j <= |x_bar| <= 2^(j+1): |x_3| <= 2^(-j/2).
        let cap = s.powf(-0.5);
        if let Some(bx) =
            clip_box(bounds, &[-2.0 * s, -2.0 * s, -cap], &[2.0 * s, 2.0 * s, cap])
        {
            boxes.push(bx);
        }
        s *= 2.0;
    }
    boxes
}

fn slab_grid_cover_3d(b: f64, bounds: &GridBox) -> Vec<GridBox> {
    let mut boxes = Vec::new();
    for (lo2, hi2) in slab_intervals(b, bounds.hi[1]) {
        for (lo3, hi3) in slab_intervals(b, bounds.hi[2]) {
            if let Some(bx) = clip_box(
                bounds,
                &[f64::NEG_INFINITY, lo2, lo3],
                &[f64::INFINITY, hi2, hi3],
            ) {
                boxes.push(bx);
            }
        }
    }
    boxes
}

fn variety_cover(curve: PlaneCurve, rho: f64, bounds: &GridBox) -> Vec<GridBox> {
    let side_x = bounds.hi[0] - bounds.lo[0];
    let side_y = bounds.hi[1] - bounds.lo[1];
    let side = side_x.max(side_y);
    let target = rho.max(side / 128.0);
    let mut boxes = Vec::new();
    fn recurse(
        curve: PlaneCurve,
        rho: f64,
        lo: (f64, f64),
        side: f64,
        target: f64,
        bounds: &GridBox,
        out: &mut Vec<GridBox>,
    ) {
        let (cx, cy) = (lo.0 + side / 2.0, lo.1 + side / 2.0);
        let hd = side * std::f64::consts::FRAC_1_SQRT_2;
        let p = curve.p(cx, cy);
        let (gx, gy) = curve.grad(cx, cy);
        let g = (gx * gx + gy * gy).sqrt();
        let dp = g * hd + hd * hd;
        if p.abs() - dp > rho * (g + 2.0 * hd).max(1.0) {
            return;
        }
        if side <= target {
            if let Some(bx) =
                clip_box(bounds, &[lo.0, lo.1], &[lo.0 + side, lo.1 + side])
            {
                out.push(bx);
            }
            return;
        }
        let s = side / 2.0;
        for &(dx, dy) in &[(0.0, 0.0), (s, 0.0), (0.0, s), (s, s)] {
            recurse(curve, rho, (lo.0 + dx, lo.1 + dy), s, target, bounds, out);
        }
    }
    recurse(
        curve,
        rho,
        (bounds.lo[0], bounds.lo[1]),
        side,
        target,
        bounds,
        &mut boxes,
    );
    boxes
}

/// Convenience alias mirroring the cube-set constructor.
pub fn weight_from_cubes(set: CubeSet) -> Weight {
    Weight::from_cubes(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    /// Brute-force planar midpoint integration of `H` over a disk; the
    /// independent oracle for the closed-form and quadrature masses.
    fn brute_mass_2d(w: &Weight, center: &[f64], r: f64, m: usize) -> f64 {
        let h = 2.0 * r / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let x = center[0] - r + (i as f64 + 0.5) * h;
            for j in 0..m {
                let y = center[1] - r + (j as f64 + 0.5) * h;
                if (x - center[0]).powi(2) + (y - center[1]).powi(2) <= r * r {
                    acc += w.eval(&[x, y]) * h * h;
                }
            }
        }
        acc
    }

    #[test]
    fn constant_masses_are_exact() {
        let w2 = Weight::constant(2).unwrap();
        assert!((w2.ball_mass(&[3.0, -1.0], 2.0).unwrap() - 4.0 * std::f64::consts::PI).abs()
            < 1e-12);
        let w3 = Weight::constant(3).unwrap();
        assert!((w3.ball_mass(&[0.0, 0.0, 0.0], 1.5).unwrap()
            - 4.0 / 3.0 * std::f64::consts::PI * 3.375)
            .abs()
            < 1e-12);
    }

    #[test]
    fn constant_sweep_hits_pi_and_scales() {
        let w = Weight::constant(2).unwrap();
        let rep = estimate_a_alpha(&w, 2.0, &SweepParams { r_max: 16.0, ..Default::default() })
            .unwrap();
        assert!((rep.max_ratio - std::f64::consts::PI).abs() < 1e-9);
        assert!(rep.stabilized);
        // At alpha < n the per-radius ratio grows like r^(n - alpha).
        let rep = estimate_a_alpha(&w, 1.0, &SweepParams { r_max: 16.0, ..Default::default() })
            .unwrap();
        for pr in &rep.per_radius {
            assert!((pr.best_ratio - std::f64::consts::PI * pr.radius).abs() < 1e-9);
        }
        assert!(!rep.stabilized);
    }

    #[test]
    fn power_tail_mass_matches_brute_force() {
        let w = Weight::power_tail(0.25).unwrap();
        let fast = w.ball_mass(&[2.0, 0.0], 1.0).unwrap();
        let brute = brute_mass_2d(&w, &[2.0, 0.0], 1.0, 1500);
        assert!((fast - brute).abs() / brute < 5e-3, "fast {fast} brute {brute}");
    }

    #[test]
    fn power_tail_b1_grows_like_log() {
        let w = Weight::power_tail(1.0).unwrap();
        for r in [16.0, 64.0, 256.0] {
            let mass = w.ball_mass(&[r / 2.0, 0.0], r).unwrap();
            let ratio = mass / r.ln();
            assert!((1.2..=3.0).contains(&ratio), "r {r} mass {mass} ratio {ratio}");
        }
    }

    #[test]
    fn slab_stack_mass_matches_brute_force() {
        let w = Weight::slab_stack(2, 0.5).unwrap();
        let fast = w.ball_mass(&[0.0, 3.0], 4.0).unwrap();
        let brute = brute_mass_2d(&w, &[0.0, 3.0], 4.0, 1500);
        assert!((fast - brute).abs() / brute < 5e-3, "fast {fast} brute {brute}");
    }

    #[test]
    fn mid_slab_band_sweep_is_bounded() {
        let w = Weight::mid_slab(2).unwrap();
        let rep = estimate_a_alpha(&w, 1.0, &SweepParams { r_max: 256.0, ..Default::default() })
            .unwrap();
        assert!(rep.stabilized, "band sweep should stabilize");
        assert!(rep.max_ratio >= std::f64::consts::PI - 1e-9);
        assert!(rep.max_ratio <= 4.0 + 1e-9, "max ratio {}", rep.max_ratio);
    }

    #[test]
    fn mid_slab_3d_ball_at_origin_is_full() {
        // The unit ball at the origin sits inside the horn, so the mass is
        // the full ball volume.
        let w = Weight::mid_slab(3).unwrap();
        let mass = w.ball_mass(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((mass - exact).abs() / exact < 5e-3, "mass {mass} vs {exact}");
    }

    #[test]
    fn slab_grid_3d_matches_coarse_brute_force() {
        let w = Weight::slab_grid(3, 0.5).unwrap();
        let c = [0.0, 1.5, 1.5];
        let r = 2.0;
        let fast = w.ball_mass(&c, r).unwrap();
        let m = 220usize;
        let h = 2.0 * r / m as f64;
        let mut brute = 0.0;
        for i in 0..m {
            let x = c[0] - r + (i as f64 + 0.5) * h;
            for j in 0..m {
                let y = c[1] - r + (j as f64 + 0.5) * h;
                for k in 0..m {
                    let z = c[2] - r + (k as f64 + 0.5) * h;
                    let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2);
                    if d2 <= r * r {
                        brute += w.eval(&[x, y, z]) * h * h * h;
                    }
                }
            }
        }
        assert!((fast - brute).abs() / brute < 2e-2, "fast {fast} brute {brute}");
    }

    #[test]
    fn variety_mass_matches_annulus_area() {
        // Near the circle |grad P| = 2|x| >= 1, so the band is exactly the
        // annulus between the roots of |r^2 - 1| = 2 rho r.
        let rho = 0.05;
        let w = Weight::variety(PlaneCurve::Circle, rho).unwrap();
        let mass = w.ball_mass(&[0.0, 0.0], 2.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI * rho * (1.0 + rho * rho).sqrt();
        assert!((mass - exact).abs() / exact < 2e-2, "mass {mass} vs {exact}");
    }

    #[test]
    fn wongkew_ratio_tracks_rho() {
        // Sweep max ratios for the circle neighborhood scale linearly with
        // the thickness: ratio / (deg * rho) stays within a factor 4.
        let mut normalized = Vec::new();
        for rho in [0.1, 0.05, 0.025] {
            let w = Weight::variety(PlaneCurve::Circle, rho).unwrap();
            let rep =
                estimate_a_alpha(&w, 1.0, &SweepParams { r_max: 8.0, ..Default::default() })
                    .unwrap();
            normalized.push(rep.max_ratio / (2.0 * rho));
        }
        for pair in normalized.windows(2) {
            let q = pair[0] / pair[1];
            assert!((0.25..=4.0).contains(&q), "normalized ratios {normalized:?}");
        }
    }

    #[test]
    fn sweep_is_monotone_in_alpha() {
        let w = Weight::slab_stack(2, 0.5).unwrap();
        let params = SweepParams { r_max: 64.0, ..Default::default() };
        let mut prev = f64::INFINITY;
        for alpha in [1.2, 1.5, 1.8] {
            let rep = estimate_a_alpha(&w, alpha, &params).unwrap();
            assert!(rep.max_ratio <= prev + 1e-12, "ratio must not increase with alpha");
            prev = rep.max_ratio;
        }
    }

    #[test]
    fn cube_mass_counts_whole_cubes() {
        let set = CubeSet::cantor_product(2).unwrap();
        let count = set.len() as f64;
        let w = Weight::from_cubes(set);
        // A ball covering the whole enclosing box counts every cube exactly.
        let mass = w.ball_mass(&[0.0, 0.0], 16.0).unwrap();
        assert!((mass - count).abs() / count < 1e-2, "mass {mass} count {count}");
        assert_eq!(mass, count);
    }

    #[test]
    fn sampled_weight_validates_range() {
        let spec = GridSpec::new(
            GridBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            vec![0.25, 0.25],
        )
        .unwrap();
        let bad = GridField::from_fn(spec.clone(), |_| 1.5);
        assert!(Weight::sampled(bad).is_err());
        let good = GridField::from_fn(spec, |x| if x[0] > 0.5 { 1.0 } else { 0.0 });
        let w = Weight::sampled(good).unwrap();
        let mass = w.ball_mass(&[0.5, 0.5], 10.0).unwrap();
        assert!((mass - 0.5).abs() < 1e-12);
    }

    #[test]
    fn support_cover_contains_support() {
        let bounds = GridBox::new(vec![-8.0, -8.0], vec![8.0, 8.0]).unwrap();
        let weights = [
            Weight::power_tail(0.25).unwrap(),
            Weight::slab_stack(2, 0.5).unwrap(),
            Weight::mid_slab(2).unwrap(),
            Weight::variety(PlaneCurve::Parabola, 0.1).unwrap(),
            Weight::from_cubes(CubeSet::cantor_product(1).unwrap()),
        ];
        for w in &weights {
            let cover = w.support_cover(&bounds);
            assert!(!cover.is_empty());
            let m = 160;
            for i in 0..m {
                for j in 0..m {
                    let x = -8.0 + 16.0 * (i as f64 + 0.5) / m as f64;
                    let y = -8.0 + 16.0 * (j as f64 + 0.5) / m as f64;
                    if w.eval(&[x, y]) > 0.0 {
                        assert!(
                            cover.iter().any(|b| b.contains(&[x, y])),
                            "support point ({x}, {y}) missed by cover of {w:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn mid_slab_3d_cover_contains_support() {
        let bounds =
            GridBox::new(vec![-8.0, -8.0, -8.0], vec![8.0, 8.0, 8.0]).unwrap();
        let w = Weight::mid_slab(3).unwrap();
        let cover = w.support_cover(&bounds);
        let m = 40;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let x = -8.0 + 16.0 * (i as f64 + 0.5) / m as f64;
                    let y = -8.0 + 16.0 * (j as f64 + 0.5) / m as f64;
                    let z = -8.0 + 16.0 * (k as f64 + 0.5) / m as f64;
                    if w.eval(&[x, y, z]) > 0.0 {
                        assert!(
                            cover.iter().any(|b| b.contains(&[x, y, z])),
                            "support point ({x}, {y}, {z}) missed"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Weight::power_tail(1.5).is_err());
        assert!(Weight::slab_stack(2, 0.0).is_err());
        assert!(Weight::variety(PlaneCurve::Circle, 0.0).is_err());
        assert!(Weight::constant(4).is_err());
        let w = Weight::constant(2).unwrap();
        assert!(w.ball_mass(&[0.0, 0.0], -1.0).is_err());
        assert!(w.ball_mass(&[0.0], 1.0).is_err());
        assert!(estimate_a_alpha(&w, 2.5, &SweepParams::default()).is_err());
        assert!(estimate_a_alpha(&w, 0.0, &SweepParams::default()).is_err());
    }

    #[test]
    fn growth_consistency_against_gamma() {
        // Sweep lower bound vs the window statistic on the depth-2 product
        // set: A_alpha <= 3^alpha * gamma, and the two agree within a small
        // factor.
        let set = CubeSet::cantor_product(2).unwrap();
        let gamma = set.gamma_statistic(1.0).unwrap().gamma;
        let w = Weight::from_cubes(set);
        let rep = estimate_a_alpha(&w, 1.0, &SweepParams { r_max: 16.0, ..Default::default() })
            .unwrap();
        assert!(
            rep.max_ratio <= 3.0 * gamma * 1.05,
            "sweep {} vs 3 gamma {}",
            rep.max_ratio,
            3.0 * gamma
        );
        assert!(rep.max_ratio >= gamma / 4.0 && rep.max_ratio <= 4.0 * gamma);
    }
}
