//! Compactly supported measures with grid densities: Riesz energies from
//! both the spatial and the frequency side, spherical means of the Fourier
//! transform, concentration functions, and a calibrated smooth bump family
//! whose transform is pinned down on the unit sphere.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridBox, GridField, GridSpec};

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Measures keep the multiplicative phase error of grid Fourier sums below
/// a percent: `frequency * spacing` may not exceed this.
pub const FREQ_RESOLUTION: f64 = 0.08;

/// Looser limit for energy integrands, where the error is averaged over
/// frequencies rather than fitted.
pub const ENERGY_RESOLUTION: f64 = 0.15;

/// A finite nonnegative measure `mu = density dx` supported inside the unit
/// ball of `R^ambient_dim`. The density grid may live in a lower dimension
/// `k < n`; the support is then embedded by padding coordinates with zeros.
#[derive(Debug, Clone)]
pub struct FractalMeasure {
    ambient_dim: usize,
    density: GridField<f64>,
    total_mass: f64,
    support_radius: f64,
    support_diam: f64,
    positive: Vec<usize>,
}

impl FractalMeasure {
    /// Validates nonnegativity, finiteness, positive mass, and support
    /// inside the closed unit ball.
    pub fn from_density(ambient_dim: usize, density: GridField<f64>) -> Result<Self> {
        if !(2..=3).contains(&ambient_dim) {
            return Err(Error::InvalidParam(format!(
                "ambient dimension must be 2 or 3, got {ambient_dim}"
            )));
        }
        let k = density.spec.dim();
        if k > ambient_dim {
            return Err(Error::InvalidParam(format!(
                "support dimension {k} exceeds ambient dimension {ambient_dim}"
            )));
        }
        if density.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParam(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let vol = density.spec.cell_volume();
        let mut total_mass = 0.0;
        let mut positive = Vec::new();
        let mut support_radius = 0.0f64;
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        let mut x = vec![0.0; k];
        for (lin, &v) in density.values.iter().enumerate() {
            if v > 0.0 {
                density.spec.center(lin, &mut x);
                let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                if r > 1.0 + 1e-9 {
                    return Err(Error::InvalidParam(format!(
                        "support cell at |x| = {r} lies outside the unit ball"
                    )));
                }
                support_radius = support_radius.max(r);
                for axis in 0..k {
                    lo[axis] = lo[axis].min(x[axis]);
                    hi[axis] = hi[axis].max(x[axis]);
                }
                total_mass += v * vol;
                positive.push(lin);
            }
        }
        if !(total_mass > 0.0) {
            return Err(Error::InvalidParam("measure must have positive mass".into()));
        }
        let support_diam = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
            .max(density.spec.spacing.iter().cloned().fold(0.0, f64::max));
        Ok(FractalMeasure {
            ambient_dim,
            density,
            total_mass,
            support_radius,
            support_diam,
            positive,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn support_dim(&self) -> usize {
        self.density.spec.dim()
    }

    pub fn density(&self) -> &GridField<f64> {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn max_spacing(&self) -> f64 {
        self.density.spec.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// Unit-mass uniform measure on the segment `[0, 1] x {0}`.
    pub fn uniform_segment(cells: usize) -> Result<Self> {
        let spec = GridSpec::new(
            GridBox::new(vec![0.0], vec![1.0])?,
            vec![1.0 / cells as f64],
        )?;
        FractalMeasure::from_density(2, GridField::from_fn(spec, |_| 1.0))
    }

    /// Uniform density on the closed unit disk, sampled at cell centers.
    pub fn unit_disk(cells_per_axis: usize) -> Result<Self> {
        let h = 2.0 / cells_per_axis as f64;
        let spec = GridSpec::new(GridBox::new(vec![-1.0, -1.0], vec![1.0, 1.0])?, vec![h, h])?;
        FractalMeasure::from_density(
            2,
            GridField::from_fn(spec, |x| {
                if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }),
        )
    }

    /// Unit-mass middle-thirds iterate on `[0, 1] x {0}`: the kept intervals
    /// of generation `depth`, each refined into 8 grid cells.
    pub fn cantor_line(depth: u32) -> Result<Self> {
        if depth == 0 || depth > 6 {
            return Err(Error::InvalidParam(format!("cantor depth must be 1..=6, got {depth}")));
        }
        let intervals = 3usize.pow(depth);
        let cells = intervals * 8;
        let spec = GridSpec::new(
            GridBox::new(vec![0.0], vec![1.0])?,
            vec![1.0 / cells as f64],
        )?;
        let kept = |mut i: usize| -> bool {
            for _ in 0..depth {
                if i % 3 == 1 {
                    return false;
                }
                i /= 3;
            }
            true
        };
        let value = 1.5f64.powi(depth as i32);
        let field = GridField::from_fn(spec, |x| {
            let interval = ((x[0] * intervals as f64).floor() as usize).min(intervals - 1);
            if kept(interval) {
                value
            } else {
                0.0
            }
        });
        FractalMeasure::from_density(2, field)
    }

    /// Smooth bump `rho^(alpha/2 - n) psi(x / rho)` where `psi` is the
    /// calibrated tensor profile of [`bump_profile`]. Its transform obeys
    /// the exact rescaling `mu_hat(xi) = rho^(alpha/2) psi_hat(rho xi)` and
    /// `psi_hat >= 1` on the unit sphere.
    pub fn bump(ambient_dim: usize, alpha: f64, rho: f64, cells_per_axis: usize) -> Result<Self> {
        if !(2..=3).contains(&ambient_dim) {
            return Err(Error::InvalidParam("bump ambient dimension must be 2 or 3".into()));
        }
        if !(alpha > 0.0) || alpha > ambient_dim as f64 {
            return Err(Error::InvalidParam(format!(
                "bump needs 0 < alpha <= {ambient_dim}"
            )));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParam(format!("bump scale must lie in (0, 1], got {rho}")));
        }
        let n = ambient_dim;
        let a = 1.0 / (n as f64).sqrt();
        let c = bump_profile_constant(n)?;
        let scale = c * rho.powf(alpha / 2.0 - n as f64);
        let h = 2.0 * a * rho / cells_per_axis as f64;
        let spec = GridSpec::new(
            GridBox::new(vec![-a * rho; n], vec![a * rho; n])?,
            vec![h; n],
        )?;
        let field = GridField::from_fn(spec, |x| {
            let mut v = scale;
            for &t in x {
                v *= profile_g(t / rho, a);
            }
            v
        });
        FractalMeasure::from_density(n, field)
    }

    /// `mu_hat(xi) = ∫ e^(-2 pi i xi . x) dmu(x)` by direct summation over
    /// density cells, at a flat list of frequency points.
    pub fn fourier_at(&self, xi: &[f64]) -> Result<Vec<Complex64>> {
        let n = self.ambient_dim;
        if xi.len() % n != 0 {
            return Err(Error::InvalidParam("frequency list length not a multiple of dim".into()));
        }
        let k = self.support_dim();
        let vol = self.density.spec.cell_volume();
        let mut cells = Vec::with_capacity(self.positive.len() * (k + 1));
        let mut x = vec![0.0; k];
        for &lin in &self.positive {
            self.density.spec.center(lin, &mut x);
            cells.extend_from_slice(&x);
            cells.push(self.density.values[lin] * vol);
        }
        let stride = k + 1;
        let out: Vec<Complex64> = xi
            .par_chunks(n * 512)
            .flat_map_iter(|block| {
                block.chunks(n).map(|freq| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for cell in cells.chunks(stride) {
                        let mut dot = 0.0;
                        for axis in 0..k {
                            dot += freq[axis] * cell[axis];
                        }
                        let (s, c) = (-TAU * dot).sin_cos();
                        let w = cell[k];
                        acc.re += w * c;
                        acc.im += w * s;
                    }
                    acc
                })
                .collect::<Vec<_>>()
            })
            .collect();
        Ok(out)
    }

    /// Riesz energy `I_alpha = ∫∫ |x - y|^(-alpha) dmu dmu` from the spatial
    /// side. One-dimensional supports use exact per-pair integrals (hence
    /// need `alpha < 1`); planar supports use an exact same-cell moment plus
    /// an adaptively refined pair quadrature, and need `alpha < 2`.
    pub fn energy_direct(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParam("energy needs alpha > 0".into()));
        }
        match self.support_dim() {
            1 => {
                if alpha >= 1.0 {
                    return Err(Error::Unsupported(
                        "line-supported energies diverge for alpha >= 1".into(),
                    ));
                }
                Ok(self.energy_direct_1d(alpha))
            }
            2 => {
                if alpha >= 2.0 {
                    return Err(Error::Unsupported(
                        "planar energies need alpha < 2".into(),
                    ));
                }
                Ok(self.energy_direct_2d(alpha))
            }
            k => Err(Error::Unsupported(format!(
                "direct energy implemented for support dimension 1 and 2, got {k}"
            ))),
        }
    }

    fn energy_direct_1d(&self, alpha: f64) -> f64 {
        let h = self.density.spec.spacing[0];
        let denom = (1.0 - alpha) * (2.0 - alpha);
        let scale = h.powf(2.0 - alpha);
        // W(m) = ∫_[0,1] ∫_[m, m+1] |u - v|^(-alpha), exact.
        let w = |m: usize| -> f64 {
            if m == 0 {
                2.0 / denom
            } else {
                let e = 2.0 - alpha;
                let m = m as f64;
                ((m + 1.0).powf(e) - 2.0 * m.powf(e) + (m - 1.0).powf(e)) / denom
            }
        };
        let vals = &self.density.values;
        let idx = &self.positive;
        let total: f64 = idx
            .par_iter()
            .map(|&i| {
                let mut acc = 0.0;
                for &j in idx {
                    let m = i.abs_diff(j);
                    acc += vals[i] * vals[j] * w(m);
                }
                acc
            })
            .sum();
        total * scale
    }

    fn energy_direct_2d(&self, alpha: f64) -> f64 {
        let spec = &self.density.spec;
        let h = spec.spacing[0].min(spec.spacing[1]);
        let same_cell = square_pair_moment(alpha) * spec.spacing[0].powf(4.0 - alpha);
        let vals = &self.density.values;
        let mut cells = Vec::with_capacity(self.positive.len());
        let mut x = vec![0.0; 2];
        for &lin in &self.positive {
            spec.center(lin, &mut x);
            cells.push((x[0], x[1], vals[lin]));
        }
        let min_side = h / 64.0;
        let total: f64 = cells
            .par_iter()
            .enumerate()
            .map(|(i, &(ax, ay, av))| {
                let mut acc = av * av * same_cell;
                for &(bx, by, bv) in &cells[i + 1..] {
                    acc += 2.0 * av * bv * pair_integral(ax, ay, bx, by, h, alpha, min_side);
                }
                acc
            })
            .sum();
        total
    }

    /// Frequency-side energy `∫_{|xi| <= cutoff} |mu_hat|^2 |xi|^(alpha - n) dxi`
    /// by a polar Riemann sum, plus the small-ball head where
    /// `mu_hat ~ total mass`. Planar ambient space only.
    pub fn energy_fourier(&self, alpha: f64, cutoff: f64) -> Result<f64> {
        if self.ambient_dim != 2 {
            return Err(Error::Unsupported(
                "frequency-side energy implemented for ambient dimension 2".into(),
            ));
        }
        if !(alpha > 0.0) || alpha >= 2.0 {
            return Err(Error::InvalidParam("fourier energy needs 0 < alpha < 2".into()));
        }
        if !(cutoff > 1.0) {
            return Err(Error::InvalidParam("cutoff must exceed 1".into()));
        }
        let h = self.max_spacing();
        if cutoff * h > ENERGY_RESOLUTION {
            return Err(Error::ResolutionViolation {
                required: ENERGY_RESOLUTION / h,
                actual: cutoff,
                what: "frequency cutoff vs density grid",
            });
        }
        let r0 = 0.125f64;
        let head = self.total_mass * self.total_mass * TAU * r0.powf(alpha) / alpha;
        let dr = 1.0 / (8.0 * self.support_diam.max(0.25));
        let steps = ((cutoff - r0) / dr).ceil() as usize;
        let dr = (cutoff - r0) / steps as f64;
        // Half circle by conjugate symmetry; doubled below.
        let mut xi = Vec::new();
        let mut meta = Vec::new();
        for m in 0..steps {
            let r = r0 + (m as f64 + 0.5) * dr;
            let k = 48usize.max((16.0 * r * self.support_radius.max(0.25)).ceil() as usize);
            for j in 0..k {
                let th = (j as f64 + 0.5) * PI / k as f64;
                xi.push(r * th.cos());
                xi.push(r * th.sin());
                meta.push((r, PI / k as f64));
            }
        }
        let muhat = self.fourier_at(&xi)?;
        let mut integral = 0.0;
        for (v, (r, dth)) in muhat.iter().zip(&meta) {
            integral += v.norm_sqr() * r.powf(alpha - 2.0) * r * dr * dth;
        }
        Ok(head + 2.0 * integral)
    }

    /// `( ∫_S |mu_hat(r theta)|^p' dsigma(theta) )^(1/p')` over the unit
    /// circle, `p'` in {1, 2}.
    pub fn spherical_means(&self, r: f64, p_prime: u32) -> Result<f64> {
        if self.ambient_dim != 2 {
            return Err(Error::Unsupported(
                "spherical means implemented for ambient dimension 2".into(),
            ));
        }
        if p_prime != 1 && p_prime != 2 {
            return Err(Error::InvalidParam("p' must be 1 or 2".into()));
        }
        if !(r >= 1.0) {
            return Err(Error::InvalidParam(format!("sphere radius must be >= 1, got {r}")));
        }
        let h = self.max_spacing();
        if r * h > FREQ_RESOLUTION {
            return Err(Error::ResolutionViolation {
                required: FREQ_RESOLUTION / h,
                actual: r,
                what: "sphere radius vs density grid",
            });
        }
        let k = 512usize;
        let mut xi = Vec::with_capacity(2 * k);
        for j in 0..k {
            let th = (j as f64 + 0.5) * TAU / k as f64;
            xi.push(r * th.cos());
            xi.push(r * th.sin());
        }
        let muhat = self.fourier_at(&xi)?;
        let dth = TAU / k as f64;
        let acc: f64 = muhat
            .iter()
            .map(|v| match p_prime {
                1 => v.norm(),
                _ => v.norm_sqr(),
            })
            .sum::<f64>()
            * dth;
        Ok(match p_prime {
            1 => acc,
            _ => acc.sqrt(),
        })
    }

    /// Concentration function `C_alpha = sup mu(B(x, r)) / r^alpha` over
    /// dyadic radii `r in [spacing, 2]` and a subsample of cell centers.
    /// Ball masses integrate partial cell overlaps, so thin radii are not
    /// quantized away.
    pub fn concentration(&self, alpha: f64) -> Result<ConcentrationReport> {
        self.concentration_with_min_radius(alpha, self.max_spacing())
    }

    /// Concentration restricted to radii `>= 1/big_r`; never exceeds the
    /// unrestricted value.
    pub fn concentration_at_scale(&self, alpha: f64, big_r: f64) -> Result<ConcentrationReport> {
        if !(big_r > 0.5) {
            return Err(Error::InvalidParam("scale must exceed 1/2".into()));
        }
        self.concentration_with_min_radius(alpha, (1.0 / big_r).max(self.max_spacing()))
    }

    fn concentration_with_min_radius(
        &self,
        alpha: f64,
        min_radius: f64,
    ) -> Result<ConcentrationReport> {
        if !(alpha > 0.0) || alpha > self.ambient_dim as f64 {
            return Err(Error::InvalidParam(format!(
                "alpha must lie in (0, {}]",
                self.ambient_dim
            )));
        }
        let mut radii = Vec::new();
        let mut r = min_radius;
        while r <= 2.0 {
            radii.push(r);
            r *= 2.0;
        }
        if radii.is_empty() {
            return Err(Error::InvalidParam("no radii between min radius and 2".into()));
        }
        let centers = self.concentration_centers();
        let mut best = f64::NEG_INFINITY;
        let mut arg_r = radii[0];
        let mut arg_c = centers[0].clone();
        let mut per_radius = Vec::new();
        let mut running = Vec::new();
        for &r in &radii {
            let masses: Vec<f64> =
                centers.par_iter().map(|c| self.ball_mass_clipped(c, r)).collect();
            let denom = r.powf(alpha);
            let mut level = f64::NEG_INFINITY;
            let mut level_c = centers[0].clone();
            for (c, m) in centers.iter().zip(&masses) {
                let ratio = m / denom;
                if ratio > level {
                    level = ratio;
                    level_c = c.clone();
                }
            }
            if level > best {
                best = level;
                arg_r = r;
                arg_c = level_c.clone();
            }
            per_radius.push((r, level));
            running.push(best);
        }
        let stabilized = match running.len() {
            0 | 1 => false,
            k => (running[k - 1] - running[k - 2]).abs() <= 0.10 * running[k - 1].abs(),
        };
        Ok(ConcentrationReport {
            alpha,
            c_alpha: best,
            argmax_radius: arg_r,
            argmax_center: arg_c,
            per_radius,
            stabilized,
        })
    }

    /// Energy and concentration summary at one dimension parameter: the
    /// two energy integrals plus the concentration constant, both
    /// unrestricted and restricted to radii `>= 1/R` for each listed `R`.
    pub fn energy_report(&self, alpha: f64, cutoff: f64, r_list: &[f64]) -> Result<EnergyReport> {
        let i_direct = self.energy_direct(alpha)?;
        let i_fourier_over_c = self.energy_fourier(alpha, cutoff)?;
        let c_alpha = self.concentration(alpha)?.c_alpha;
        let mut c_alpha_r = Vec::with_capacity(r_list.len());
        for &r in r_list {
            c_alpha_r.push((r, self.concentration_at_scale(alpha, r)?.c_alpha));
        }
        Ok(EnergyReport {
            alpha,
            i_direct,
            i_fourier_over_c,
            c_alpha,
            c_alpha_r,
        })
    }

    fn concentration_centers(&self) -> Vec<Vec<f64>> {
        let spec = &self.density.spec;
        let k = self.support_dim();
        let stride: Vec<usize> =
            spec.counts.iter().map(|&c| (c / 48).max(1)).collect();
        let mut centers = Vec::new();
        let mut x = vec![0.0; k];
        for &lin in &self.positive {
            let mut rem = lin;
            let mut keep = true;
            for axis in (0..k).rev() {
                let i = rem % spec.counts[axis];
                rem /= spec.counts[axis];
                if i % stride[axis] != 0 {
                    keep = false;
                    break;
                }
            }
            if keep {
                spec.center(lin, &mut x);
                centers.push(x.clone());
            }
        }
        if centers.is_empty() {
            spec.center(self.positive[0], &mut x);
            centers.push(x);
        }
        centers
    }

    /// Ball mass with exact partial-cell overlap on lines and a refined
    /// boundary subsample on planes.
    fn ball_mass_clipped(&self, center: &[f64], r: f64) -> f64 {
        let spec = &self.density.spec;
        match self.support_dim() {
            1 => {
                let h = spec.spacing[0];
                let rg = spec.axis_range(0, center[0] - r - h, center[0] + r + h);
                let mut acc = 0.0;
                for i in rg {
                    let lo = spec.bounds.lo[0] + i as f64 * h;
                    let hi = lo + h;
                    let a = lo.max(center[0] - r);
                    let b = hi.min(center[0] + r);
                    if b > a {
                        acc += self.density.values[i] * (b - a);
                    }
                }
                acc
            }
            _ => {
                let (hx, hy) = (spec.spacing[0], spec.spacing[1]);
                let rx = spec.axis_range(0, center[0] - r - hx, center[0] + r + hx);
                let ry = spec.axis_range(1, center[1] - r - hy, center[1] + r + hy);
                let half_diag = 0.5 * (hx * hx + hy * hy).sqrt();
                let mut acc = 0.0;
                for i in rx {
                    let cx = spec.bounds.lo[0] + (i as f64 + 0.5) * hx;
                    for j in ry.clone() {
                        let lin = i * spec.counts[1] + j;
                        let v = self.density.values[lin];
                        if v == 0.0 {
                            continue;
                        }
                        let cy = spec.bounds.lo[1] + (j as f64 + 0.5) * hy;
                        let d = ((cx - center[0]).powi(2) + (cy - center[1]).powi(2)).sqrt();
                        if d > r + half_diag {
                            continue;
                        }
                        let cell = hx * hy;
                        if d <= r - half_diag {
                            acc += v * cell;
                            continue;
                        }
                        let sub = 8;
                        let mut hits = 0;
                        for p in 0..sub {
                            let x = cx - hx / 2.0 + (p as f64 + 0.5) * hx / sub as f64;
                            for q in 0..sub {
                                let y = cy - hy / 2.0 + (q as f64 + 0.5) * hy / sub as f64;
                                if (x - center[0]).powi(2) + (y - center[1]).powi(2) <= r * r {
                                    hits += 1;
                                }
                            }
                        }
                        acc += v * cell * hits as f64 / (sub * sub) as f64;
                    }
                }
                acc
            }
        }
    }
}

/// Concentration sweep summary.
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub alpha: f64,
    pub c_alpha: f64,
    pub argmax_radius: f64,
    pub argmax_center: Vec<f64>,
    pub per_radius: Vec<(f64, f64)>,
    /// True when widening the radius range stopped moving the supremum.
    pub stabilized: bool,
}

/// Both energy integrals (the frequency side without its universal
/// constant) and the concentration constants of one measure.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub alpha: f64,
    pub i_direct: f64,
    pub i_fourier_over_c: f64,
    pub c_alpha: f64,
    pub c_alpha_r: Vec<(f64, f64)>,
}

/// Recursive pair quadrature for `∫∫ |x - y|^(-alpha)` over two disjoint
/// squares of side `s`: midpoint once the pair is well separated, otherwise
/// split both and recurse.
fn pair_integral(ax: f64, ay: f64, bx: f64, by: f64, s: f64, alpha: f64, min_side: f64) -> f64 {
    let d2 = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
    if d2 >= 18.0 * s * s || s <= min_side {
        return s * s * s * s * d2.powf(-alpha / 2.0);
    }
    let q = s / 4.0;
    let half = s / 2.0;
    let offs = [(-q, -q), (-q, q), (q, -q), (q, q)];
    let mut acc = 0.0;
    for &(dx1, dy1) in &offs {
        for &(dx2, dy2) in &offs {
            acc += pair_integral(ax + dx1, ay + dy1, bx + dx2, by + dy2, half, alpha, min_side);
        }
    }
    acc
}

/// `∫∫_{[0,1]^2 x [0,1]^2} |u - v|^(-alpha)`: the same-cell moment, via the
/// distance density of two uniform points in the unit square. The density
/// is polynomial below distance 1 (integrated in closed form) and smooth on
/// `[1, sqrt 2]` (integrated by Simpson).
fn square_pair_moment(alpha: f64) -> f64 {
    let head = 2.0 * (1.0 / (4.0 - alpha) - 4.0 / (3.0 - alpha) + PI / (2.0 - alpha));
    let p = |d: f64| {
        let t = (d * d - 1.0).max(0.0).sqrt();
        2.0 * d * (4.0 * t - (d * d + 2.0 - PI) - 4.0 * t.atan())
    };
    let f = |d: f64| d.powf(-alpha) * p(d);
    let (a, b) = (1.0, std::f64::consts::SQRT_2);
    let n = 4096;
    let h = (b - a) / n as f64;
    let mut tail = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        tail += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    tail *= h / 3.0;
    head + tail
}

const PROFILE_TABLE: usize = 2048;

fn profile_g(t: f64, a: f64) -> f64 {
    if t.abs() >= a {
        0.0
    } else {
        let c = (PI / 2.0 * t / a).cos();
        c * c
    }
}

/// `g_hat(omega) = ∫ cos^2(pi t / (2a)) e^(-2 pi i omega t) dt` over
/// `[-a, a]`; real and even.
fn profile_g_hat(omega: f64, a: f64) -> f64 {
    let n = PROFILE_TABLE;
    let h = a / n as f64;
    // Simpson over [0, a], doubled: the integrand is even.
    let f = |t: f64| profile_g(t, a) * (TAU * omega * t).cos();
    let mut acc = f(0.0) + f(a);
    for i in 1..n {
        let t = i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    2.0 * acc * h / 3.0
}

/// Minimum of the uncalibrated tensor-profile transform over the unit
/// sphere, and the calibration constant `C = 1.05 / min` that lifts it
/// above one.
fn bump_profile_constant(n: usize) -> Result<f64> {
    let a = 1.0 / (n as f64).sqrt();
    let min = match n {
        2 => {
            let mut min = f64::INFINITY;
            for j in 0..=512 {
                // By symmetry the minimum lies in the first octant of angles.
                let th = j as f64 / 512.0 * PI / 4.0;
                let v = profile_g_hat(th.cos(), a) * profile_g_hat(th.sin(), a);
                min = min.min(v);
            }
            min
        }
        _ => {
            let mut min = f64::INFINITY;
            let m = 96;
            for i in 0..=m {
                let phi = i as f64 / m as f64 * PI / 2.0;
                for j in 0..=m {
                    let th = j as f64 / m as f64 * PI / 4.0;
                    let (x, y, z) =
                        (phi.sin() * th.cos(), phi.sin() * th.sin(), phi.cos());
                    let v = profile_g_hat(x, a) * profile_g_hat(y, a) * profile_g_hat(z, a);
                    min = min.min(v);
                }
            }
            min
        }
    };
    if !(min > 0.0) {
        return Err(Error::InvalidParam(
            "tensor profile transform not positive on the unit sphere".into(),
        ));
    }
    Ok(1.05 / min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_energy_is_exact() {
        let mu = FractalMeasure::uniform_segment(256).unwrap();
        let i = mu.energy_direct(0.5).unwrap();
        assert!((i - 8.0 / 3.0).abs() < 1e-12, "I_1/2 = {i}");
        // Requirement is only two percent; the closed form is exact.
        assert!((i - 8.0 / 3.0).abs() / (8.0 / 3.0) < 0.02);
    }

    #[test]
    fn segment_energy_rejects_divergent_alpha() {
        let mu = FractalMeasure::uniform_segment(64).unwrap();
        assert!(mu.energy_direct(1.0).is_err());
    }

    #[test]
    fn disk_energy_tends_to_mass_squared() {
        let mu = FractalMeasure::unit_disk(64).unwrap();
        let mass2 = mu.total_mass() * mu.total_mass();
        let i = mu.energy_direct(0.01).unwrap();
        assert!((i / mass2 - 1.0).abs() < 0.02, "ratio {}", i / mass2);
    }

    #[test]
    fn square_moment_reproduces_mean_distance() {
        // alpha = -1 turns the moment into the mean pair distance of the
        // unit square, a known constant.
        let mean = square_pair_moment(-1.0);
        let exact = (2.0 + std::f64::consts::SQRT_2 + 5.0 * 1.0f64.asinh()) / 15.0;
        assert!((mean - exact).abs() < 1e-9, "mean {mean} vs {exact}");
    }

    #[test]
    fn planar_energy_matches_refined_recursion() {
        // Self-consistency of the pair quadrature under refinement on a
        // small smooth measure.
        let spec = GridSpec::new(
            GridBox::new(vec![-0.25, -0.25], vec![0.25, 0.25]).unwrap(),
            vec![0.5 / 24.0, 0.5 / 24.0],
        )
        .unwrap();
        let field = GridField::from_fn(spec, |x| {
            let r2 = (x[0] * x[0] + x[1] * x[1]) / 0.0625;
            (1.0 - r2).max(0.0)
        });
        let mu = FractalMeasure::from_density(2, field).unwrap();
        let coarse = mu.energy_direct(1.0).unwrap();
        // Rebuild at doubled resolution.
        let spec2 = GridSpec::new(
            GridBox::new(vec![-0.25, -0.25], vec![0.25, 0.25]).unwrap(),
            vec![0.5 / 48.0, 0.5 / 48.0],
        )
        .unwrap();
        let field2 = GridField::from_fn(spec2, |x| {
            let r2 = (x[0] * x[0] + x[1] * x[1]) / 0.0625;
            (1.0 - r2).max(0.0)
        });
        let mu2 = FractalMeasure::from_density(2, field2).unwrap();
        let fine = mu2.energy_direct(1.0).unwrap();
        assert!((coarse - fine).abs() / fine < 0.01, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn energy_monotone_for_small_diameter() {
        let mu = FractalMeasure::bump(2, 1.0, 1.0, 48).unwrap();
        let mut prev = 0.0;
        for alpha in [0.3, 0.6, 0.9] {
            let i = mu.energy_direct(alpha).unwrap();
            assert!(i > prev, "energy must grow with alpha on diameter <= 1");
            prev = i;
        }
        // mass^2 <= 2^alpha I_alpha since |x - y| <= 2 on the unit ball.
        let mass2 = mu.total_mass() * mu.total_mass();
        let i = mu.energy_direct(0.5).unwrap();
        assert!(mass2 <= 2f64.powf(0.5) * i * (1.0 + 1e-12));
    }

    #[test]
    fn fourier_at_zero_is_mass() {
        let mu = FractalMeasure::unit_disk(48).unwrap();
        let v = mu.fourier_at(&[0.0, 0.0]).unwrap()[0];
        assert!((v.re - mu.total_mass()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn symmetric_density_has_real_transform() {
        let mu = FractalMeasure::bump(2, 1.0, 0.5, 48).unwrap();
        let mut xi = Vec::new();
        for j in 0..32 {
            let th = j as f64 * TAU / 32.0;
            for r in [0.5, 2.0, 7.0] {
                xi.push(r * th.cos());
                xi.push(r * th.sin());
            }
        }
        let vals = mu.fourier_at(&xi).unwrap();
        for v in vals {
            assert!(v.im.abs() <= 1e-10 * mu.total_mass(), "im {}", v.im);
        }
    }

    #[test]
    fn bump_scaling_identity_is_exact() {
        let alpha = 1.2;
        let one = FractalMeasure::bump(2, alpha, 1.0, 48).unwrap();
        let rho = 0.25;
        let small = FractalMeasure::bump(2, alpha, rho, 48).unwrap();
        let dirs: Vec<(f64, f64)> = (0..16)
            .map(|j| {
                let th = j as f64 * TAU / 16.0;
                (th.cos(), th.sin())
            })
            .collect();
        for r in [0.5, 1.0, 3.0, 9.0] {
            let mut xi_small = Vec::new();
            let mut xi_one = Vec::new();
            for &(cx, cy) in &dirs {
                xi_small.extend_from_slice(&[r * cx, r * cy]);
                xi_one.extend_from_slice(&[rho * r * cx, rho * r * cy]);
            }
            let lhs = small.fourier_at(&xi_small).unwrap();
            let rhs = one.fourier_at(&xi_one).unwrap();
            let scale = rho.powf(alpha / 2.0);
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - scale * r).norm() < 1e-8, "scaling identity violated");
            }
        }
    }

    #[test]
    fn bump_mass_matches_profile_integral() {
        let n = 2;
        let alpha = 0.8;
        let rho = 0.5;
        let mu = FractalMeasure::bump(n, alpha, rho, 64).unwrap();
        let a = 1.0 / (n as f64).sqrt();
        let c = bump_profile_constant(n).unwrap();
        // ∫ psi = C a^n since each 1-D factor integrates to a.
        let expected = rho.powf(alpha / 2.0) * c * a.powi(n as i32);
        assert!(
            (mu.total_mass() - expected).abs() / expected < 1e-5,
            "mass {} vs {expected}",
            mu.total_mass()
        );
    }

    #[test]
    fn bump_transform_at_least_one_on_sphere() {
        let mu = FractalMeasure::bump(2, 1.0, 1.0, 64).unwrap();
        let mut xi = Vec::new();
        for j in 0..64 {
            let th = j as f64 * TAU / 64.0;
            xi.push(th.cos());
            xi.push(th.sin());
        }
        for v in mu.fourier_at(&xi).unwrap() {
            assert!(v.re >= 1.0, "calibrated transform dipped to {}", v.re);
        }
        let mu3 = FractalMeasure::bump(3, 1.5, 1.0, 40).unwrap();
        let dirs = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.57735, 0.57735, 0.57735],
            [0.70711, 0.70711, 0.0],
        ];
        let flat: Vec<f64> = dirs.iter().flatten().copied().collect();
        for v in mu3.fourier_at(&flat).unwrap() {
            assert!(v.re >= 1.0, "3-D calibrated transform dipped to {}", v.re);
        }
    }

    #[test]
    fn energy_ratio_consistent_across_measures() {
        // Spatial and frequency energies agree up to one universal
        // constant: the ratio is measure-independent.
        let alpha = 1.0;
        let cutoff = 16.0;
        let blob = |cx: f64, cy: f64, s: f64| {
            move |x: &[f64]| {
                let r2 = ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / (s * s);
                if r2 < 1.0 {
                    let c = (PI / 2.0 * r2.sqrt()).cos();
                    c * c
                } else {
                    0.0
                }
            }
        };
        let spec = || {
            GridSpec::new(
                GridBox::new(vec![-0.36, -0.36], vec![0.36, 0.36]).unwrap(),
                vec![0.72 / 96.0, 0.72 / 96.0],
            )
            .unwrap()
        };
        let single = FractalMeasure::from_density(
            2,
            GridField::from_fn(spec(), blob(0.0, 0.0, 0.34)),
        )
        .unwrap();
        let pair_fn = {
            let b1 = blob(-0.17, 0.0, 0.15);
            let b2 = blob(0.17, 0.05, 0.15);
            move |x: &[f64]| b1(x) + b2(x)
        };
        let pair = FractalMeasure::from_density(2, GridField::from_fn(spec(), pair_fn)).unwrap();
        let aniso = FractalMeasure::from_density(
            2,
            GridField::from_fn(spec(), |x| {
                let r2 = (x[0] / 0.33).powi(2) + (x[1] / 0.18).powi(2);
                if r2 < 1.0 {
                    let c = (PI / 2.0 * r2.sqrt()).cos();
                    c * c
                } else {
                    0.0
                }
            }),
        )
        .unwrap();
        let mut ratios = Vec::new();
        for mu in [&single, &pair, &aniso] {
            let direct = mu.energy_direct(alpha).unwrap();
            let fourier = mu.energy_fourier(alpha, cutoff).unwrap();
            ratios.push(direct / fourier);
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.10, "ratios {ratios:?}");
    }

    #[test]
    fn fourier_energy_stable_under_refinement() {
        let mu = FractalMeasure::bump(2, 1.0, 0.7, 112).unwrap();
        let base = mu.energy_fourier(0.8, 16.0).unwrap();
        let finer = mu.energy_fourier(0.8, 12.0).unwrap();
        assert!((base - finer).abs() / base < 0.03, "cutoff sensitivity {base} vs {finer}");
    }

    #[test]
    fn means_at_unit_radius_follow_mass() {
        // A very smooth (tightly concentrated) measure keeps mu_hat near
        // the mass out to |xi| = 1.
        let mu = FractalMeasure::bump(2, 1.0, 0.08, 64).unwrap();
        let m1 = mu.spherical_means(1.0, 1).unwrap();
        let m2 = mu.spherical_means(1.0, 2).unwrap();
        let mass = mu.total_mass();
        assert!((m1 - TAU * mass).abs() / (TAU * mass) < 0.05);
        assert!((m2 - TAU.sqrt() * mass).abs() / (TAU.sqrt() * mass) < 0.05);
        // Cauchy-Schwarz between the two means.
        assert!(m1 <= TAU.sqrt() * m2 * (1.0 + 1e-12));
        assert!(mu.spherical_means(0.5, 1).is_err());
    }

    #[test]
    fn means_resolution_guard_fires() {
        let mu = FractalMeasure::unit_disk(32).unwrap();
        assert!(matches!(
            mu.spherical_means(64.0, 2),
            Err(Error::ResolutionViolation { .. })
        ));
    }

    #[test]
    fn segment_concentration_is_two() {
        let mu = FractalMeasure::uniform_segment(512).unwrap();
        let rep = mu.concentration(1.0).unwrap();
        assert!((rep.c_alpha - 2.0).abs() < 0.2, "C_1 = {}", rep.c_alpha);
        let scaled = mu.concentration_at_scale(1.0, 16.0).unwrap();
        assert!(scaled.c_alpha <= rep.c_alpha + 1e-12);
        // Probability measure in the unit ball: C_alpha >= mass / 2^alpha.
        assert!(rep.c_alpha >= mu.total_mass() / 2.0);
    }

    #[test]
    fn cantor_line_has_unit_mass() {
        let mu = FractalMeasure::cantor_line(5).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-9);
        assert_eq!(mu.support_dim(), 1);
    }

    #[test]
    fn invalid_densities_rejected() {
        let spec = GridSpec::new(
            GridBox::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap(),
            vec![0.5, 0.5],
        )
        .unwrap();
        // Support sticks out of the unit ball.
        let field = GridField::from_fn(spec.clone(), |_| 1.0);
        assert!(FractalMeasure::from_density(2, field).is_err());
        let zero = GridField::from_fn(spec.clone(), |_| 0.0);
        assert!(FractalMeasure::from_density(2, zero).is_err());
        let neg = GridField::from_fn(spec, |_| -1.0);
        assert!(FractalMeasure::from_density(2, neg).is_err());
    }
}
