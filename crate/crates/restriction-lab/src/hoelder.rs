//! Discrete weighted-maximal machinery: the `M_alpha` functional over
//! finite weight families, the derived-weight construction with its
//! certified sweep bound, and the exponent iteration with closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::weights::Weight;

/// Dyadic balls with precomputed cell-index lists on a fixed grid. Both
/// exponent sides of every comparison must range over the same balls and
/// the same ball-to-cell map; sharing one sweep object guarantees that.
#[derive(Debug, Clone)]
pub struct BallSweep {
    spec: GridSpec,
    balls: Vec<SweepBall>,
    r_max: f64,
}

#[derive(Debug, Clone)]
struct SweepBall {
    radius: f64,
    cells: Vec<usize>,
}

impl BallSweep {
    /// Balls of dyadic radius `1, 2, .., r_max` centered on a lattice of
    /// spacing `r/2`, with `ceil(2 * window_factor)` steps per side.
    pub fn new(spec: &GridSpec, r_max: f64, window_factor: f64) -> Result<Self> {
        if !(r_max >= 1.0) {
            return Err(Error::InvalidParam("sweep needs r_max >= 1".into()));
        }
        if !(window_factor > 0.0) {
            return Err(Error::InvalidParam("window factor must be positive".into()));
        }
        let dim = spec.dim();
        let k_max = (2.0 * window_factor).ceil() as i64;
        let mut centers_per_axis = Vec::new();
        for k in -k_max..=k_max {
            centers_per_axis.push(k as f64);
        }
        let mut balls = Vec::new();
        let mut r = 1.0;
        while r <= r_max * (1.0 + 1e-12) {
            let mut idx = vec![0usize; dim];
            loop {
                let center: Vec<f64> =
                    idx.iter().map(|&i| centers_per_axis[i] * r / 2.0).collect();
                balls.push(SweepBall {
                    radius: r,
                    cells: cells_in_ball(spec, &center, r),
                });
                let mut axis = dim;
                loop {
                    if axis == 0 {
                        break;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < centers_per_axis.len() {
                        break;
                    }
                    idx[axis] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
            r *= 2.0;
        }
        Ok(BallSweep {
            spec: spec.clone(),
            balls,
            r_max,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `sup_B mass(B) / r_B^alpha` over the sweep balls for a sampled
    /// weight on the sweep grid.
    pub fn a_hat(&self, weight: &GridField<f64>, alpha: f64) -> Result<f64> {
        if weight.spec != self.spec {
            return Err(Error::InvalidParam("weight grid differs from sweep grid".into()));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParam("sweep exponent must be positive".into()));
        }
        let vol = self.spec.cell_volume();
        let mut best = 0.0f64;
        for ball in &self.balls {
            let mass: f64 = ball.cells.iter().map(|&c| weight.values[c]).sum::<f64>() * vol;
            best = best.max(mass / ball.radius.powf(alpha));
        }
        Ok(best)
    }
}

fn cells_in_ball(spec: &GridSpec, center: &[f64], r: f64) -> Vec<usize> {
    let dim = spec.dim();
    let mut ranges = Vec::with_capacity(dim);
    for axis in 0..dim {
        ranges.push(spec.axis_range(axis, center[axis] - r, center[axis] + r));
    }
    let mut cells = Vec::new();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.start).collect();
    if ranges.iter().any(|r| r.is_empty()) {
        return cells;
    }
    loop {
        let mut d2 = 0.0;
        for axis in 0..dim {
            let x = spec.bounds.lo[axis] + (idx[axis] as f64 + 0.5) * spec.spacing[axis];
            d2 += (x - center[axis]) * (x - center[axis]);
        }
        if d2 <= r * r {
            let mut lin = 0;
            for axis in 0..dim {
                lin = lin * spec.counts[axis] + idx[axis];
            }
            cells.push(lin);
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                return cells;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < ranges[axis].end {
                break;
            }
            idx[axis] = ranges[axis].start;
        }
    }
}

/// A finite family of sampled weights, valued in `[0, 1]`, sharing one
/// grid and one ball sweep.
#[derive(Debug, Clone)]
pub struct DiscreteWeightFamily {
    sweep: BallSweep,
    members: Vec<GridField<f64>>,
}

impl DiscreteWeightFamily {
    pub fn new(sweep: BallSweep, members: Vec<GridField<f64>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParam("weight family must be nonempty".into()));
        }
        for m in &members {
            if m.spec != sweep.spec {
                return Err(Error::InvalidParam("family member grid differs from sweep".into()));
            }
            if m.values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(Error::InvalidParam("family weights must take values in [0, 1]".into()));
            }
        }
        Ok(DiscreteWeightFamily { sweep, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sweep(&self) -> &BallSweep {
        &self.sweep
    }

    pub fn members(&self) -> &[GridField<f64>] {
        &self.members
    }

    /// Family extended by the derived weight of every member; each derived
    /// weight carries its certified sweep bound, re-checked on the spot.
    pub fn augment_with_derived(
        &self,
        f: &GridField<f64>,
        alpha: f64,
        beta: f64,
        n: f64,
    ) -> Result<DiscreteWeightFamily> {
        let mut members = self.members.clone();
        for h in &self.members {
            let derived = derive_weight(f, h, alpha, beta, n, &self.sweep)?;
            members.push(derived.field);
        }
        DiscreteWeightFamily::new(self.sweep.clone(), members)
    }
}

/// Value of the discrete maximal functional together with bookkeeping on
/// degenerate members.
#[derive(Debug, Clone)]
pub struct DiscreteM {
    pub value: f64,
    pub argmax: usize,
    /// Members excluded because their sweep estimate vanished.
    pub skipped: usize,
}

/// `max_H ((∫ F^alpha H) / A_alpha(H))^(1/alpha)` over the family, with
/// sweep-estimated denominators. A lower-bound proxy for the continuum
/// supremum over all weights.
pub fn discrete_m(
    f: &GridField<f64>,
    family: &DiscreteWeightFamily,
    alpha: f64,
) -> Result<DiscreteM> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam("exponent must be positive".into()));
    }
    if f.spec != family.sweep.spec {
        return Err(Error::InvalidParam("field grid differs from family grid".into()));
    }
    if f.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParam("field must be nonnegative and finite".into()));
    }
    let vol = f.spec.cell_volume();
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 0;
    let mut skipped = 0;
    for (j, h) in family.members.iter().enumerate() {
        let a_hat = family.sweep.a_hat(h, alpha)?;
        if a_hat == 0.0 {
            skipped += 1;
            continue;
        }
        let num: f64 = f
            .values
            .iter()
            .zip(&h.values)
            .map(|(fv, hv)| fv.powf(alpha) * hv)
            .sum::<f64>()
            * vol;
        let ratio = (num / a_hat).powf(1.0 / alpha);
        if ratio > best {
            best = ratio;
            argmax = j;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::InvalidParam(
            "every family member has vanishing sweep estimate".into(),
        ));
    }
    Ok(DiscreteM {
        value: best,
        argmax,
        skipped,
    })
}

/// `F_N = F * chi` on `B(0, N) ∩ {F <= N}`: cells outside the ball or with
/// value above the level are zeroed, not clamped.
pub fn truncate(f: &GridField<f64>, n: f64) -> Result<GridField<f64>> {
    if !(n >= 1.0) {
        return Err(Error::InvalidParam("truncation level must be >= 1".into()));
    }
    let spec = f.spec.clone();
    let mut out = f.clone();
    let mut x = vec![0.0; spec.dim()];
    for (lin, v) in out.values.iter_mut().enumerate() {
        spec.center(lin, &mut x);
        let r2: f64 = x.iter().map(|t| t * t).sum();
        if *v > n || r2 > n * n {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// A derived weight together with its certified bound and the sweep
/// measurement that certifies it.
#[derive(Debug, Clone)]
pub struct DerivedWeight {
    pub field: GridField<f64>,
    /// `N^(-1/p) C_0^(1/p) A_alpha(H)` with `C_0 = N^(1+alpha)`.
    pub bound: f64,
    /// Sweep-measured `A_beta` of the derived weight; at most `bound`
    /// up to rounding.
    pub measured: f64,
}

impl DerivedWeight {
    /// The derived weight as a sampled `Weight`, for reuse in ball-mass
    /// sweeps over arbitrary covers.
    pub fn as_weight(&self) -> Result<Weight> {
        Weight::sampled(self.field.clone())
    }
}

/// The composite `N^(-1/p) F_N^(1/p) H` with `p = alpha/(alpha - beta)`.
/// Its `A_beta` sweep estimate is certified against
/// `N^(-1/p) C_0^(1/p) A_alpha(H)`, which holds ball by ball: the cellwise
/// Hoelder inequality bounds each ball mass of the composite by the ball
/// mass of `H`, and sweep radii run up to `N`.
pub fn derive_weight(
    f: &GridField<f64>,
    h: &GridField<f64>,
    alpha: f64,
    beta: f64,
    n: f64,
    sweep: &BallSweep,
) -> Result<DerivedWeight> {
    if !(beta > 0.0 && beta < alpha) {
        return Err(Error::InvalidParam("need 0 < beta < alpha".into()));
    }
    if !(n >= 1.0) || (n - sweep.r_max).abs() > 1e-9 {
        return Err(Error::InvalidParam(
            "truncation level must equal the sweep's maximal radius".into(),
        ));
    }
    if f.spec != h.spec || f.spec != sweep.spec {
        return Err(Error::InvalidParam("field, weight, and sweep grids must agree".into()));
    }
    let p = alpha / (alpha - beta);
    let f_n = truncate(f, n)?;
    let scale = n.powf(-1.0 / p);
    let mut field = h.clone();
    for (v, fv) in field.values.iter_mut().zip(&f_n.values) {
        *v *= scale * fv.powf(1.0 / p);
        // Guard against rounding pushing the product a hair above one.
        *v = v.min(1.0);
    }
    let a_alpha = sweep.a_hat(h, alpha)?;
    let c0 = n.powf(1.0 + alpha);
    let bound = n.powf(-1.0 / p) * c0.powf(1.0 / p) * a_alpha;
    let measured = sweep.a_hat(&field, beta)?;
    if measured > bound * 1.01 {
        return Err(Error::InvalidParam(format!(
            "derived-weight certificate violated: measured {measured} > bound {bound}"
        )));
    }
    Ok(DerivedWeight {
        field,
        bound,
        measured,
    })
}

/// `Q(alpha) <= (alpha/beta) Q(beta)`: the exponent upgrade along scaling.
pub fn scale_exponent(alpha: f64, beta: f64, q_beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= alpha) {
        return Err(Error::InvalidParam("need 0 < beta <= alpha".into()));
    }
    if !(q_beta >= 0.0) {
        return Err(Error::InvalidParam("exponent bound must be nonnegative".into()));
    }
    Ok(alpha / beta * q_beta)
}

/// The exponent iteration `beta_k = beta + beta_{k-1}/p`,
/// `C_k = M C_{k-1}^(1/p)` from `beta_0 = 1`, `C_0 = N^(1+alpha)`, with its
/// closed forms and limits.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub n: f64,
    pub m: f64,
    pub beta_seq: Vec<f64>,
    pub c_seq: Vec<f64>,
    pub beta_closed: Vec<f64>,
    pub c_closed: Vec<f64>,
    /// `lim beta_k = alpha`.
    pub beta_limit: f64,
    /// `lim C_k = M^(alpha/beta)`.
    pub c_limit: f64,
    pub max_beta_residual: f64,
    pub max_c_residual: f64,
}

pub fn iterate(alpha: f64, beta: f64, n: f64, m: f64, k: usize) -> Result<IterationState> {
    if !(beta > 0.0 && beta < alpha) {
        return Err(Error::InvalidParam("need 0 < beta < alpha".into()));
    }
    if !(n >= 1.0) {
        return Err(Error::InvalidParam("need N >= 1".into()));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidParam("need M > 0".into()));
    }
    let p = alpha / (alpha - beta);
    let beta0 = 1.0;
    let c0 = n.powf(1.0 + alpha);
    let mut beta_seq = vec![beta0];
    let mut c_seq = vec![c0];
    for _ in 1..=k {
        let prev_b = *beta_seq.last().unwrap();
        let prev_c = *c_seq.last().unwrap();
        beta_seq.push(beta + prev_b / p);
        c_seq.push(m * prev_c.powf(1.0 / p));
    }
    let geo = |j: usize| (1.0 - p.powi(-(j as i32))) / (1.0 - 1.0 / p);
    let beta_closed: Vec<f64> = (0..=k)
        .map(|j| beta * geo(j) + beta0 * p.powi(-(j as i32)))
        .collect();
    let c_closed: Vec<f64> = (0..=k)
        .map(|j| m.powf(geo(j)) * c0.powf(p.powi(-(j as i32))))
        .collect();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let max_beta_residual = beta_seq
        .iter()
        .zip(&beta_closed)
        .map(|(&a, &b)| rel(a, b))
        .fold(0.0, f64::max);
    let max_c_residual = c_seq
        .iter()
        .zip(&c_closed)
        .map(|(&a, &b)| rel(a, b))
        .fold(0.0, f64::max);
    Ok(IterationState {
        alpha,
        beta,
        p,
        n,
        m,
        beta_seq,
        c_seq,
        beta_closed,
        c_closed,
        beta_limit: alpha,
        c_limit: m.powf(alpha / beta),
        max_beta_residual,
        max_c_residual,
    })
}

/// The 32x32 grid on `[-2.8, 2.8]^2` used by the maximal-functional
/// trials: every cell center sits inside `B(0, 4)`.
pub fn standard_spec() -> GridSpec {
    GridSpec::new(
        crate::grid::GridBox::new(vec![-2.8, -2.8], vec![2.8, 2.8]).unwrap(),
        vec![5.6 / 32.0, 5.6 / 32.0],
    )
    .unwrap()
}

/// A small deterministic weight family on the trial grid: indicator balls,
/// a clipped power-tail region, a Bernoulli mask, and the constant one.
pub fn sample_family(spec: &GridSpec, seed: u64) -> Vec<GridField<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = |cx: f64, cy: f64, r: f64| {
        GridField::from_fn(spec.clone(), move |x| {
            if (x[0] - cx).powi(2) + (x[1] - cy).powi(2) <= r * r {
                1.0
            } else {
                0.0
            }
        })
    };
    let mut family = vec![
        ball(0.0, 0.0, 1.0),
        ball(0.8, -0.6, 0.7),
        ball(-1.2, 0.9, 1.6),
        GridField::from_fn(spec.clone(), |x| {
            if x[0] > 0.0 && x[1] >= 0.0 && x[1] <= x[0].powf(-0.25) {
                1.0
            } else {
                0.0
            }
        }),
        GridField::from_fn(spec.clone(), |_| 1.0),
    ];
    let mask_values: Vec<f64> = (0..spec.len())
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
        .collect();
    let mut mask = GridField::zeros(spec.clone());
    mask.values = mask_values;
    family.push(mask);
    family
}

/// Uniform random field with values in `[0, n]` on the trial grid.
pub fn random_field(spec: &GridSpec, n: f64, seed: u64) -> GridField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = GridField::zeros(spec.clone());
    f.values = (0..spec.len()).map(|_| rng.gen_range(0.0..n)).collect();
    f
}
