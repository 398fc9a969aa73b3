//! Unions of axis-aligned lattice unit cubes inside an enclosing box, the
//! window-count statistic gamma over lattice-aligned dyadic windows, and a
//! line-oriented CSV interchange format for cube lists.

use crate::error::{Error, Result};

/// Hard cap on the cells of the occupancy array the gamma sweep allocates.
const OCCUPANCY_BUDGET: usize = 1 << 26;

/// A set of distinct unit cubes `[k, k+1)^n` with integer corners `k`, all
/// inside the cube of side `enclosing` centered at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeSet {
    dim: usize,
    enclosing: i64,
    corners: Vec<Vec<i64>>,
}

/// Per-window-size record of the gamma sweep.
#[derive(Debug, Clone)]
pub struct GammaLevel {
    pub window_side: i64,
    pub best_ratio: f64,
    pub best_corner: Vec<i64>,
}

/// Result of the gamma sweep: `max over dyadic windows of count / side^alpha`
/// where windows slide over all lattice-aligned positions inside the
/// enclosing box.
#[derive(Debug, Clone)]
pub struct GammaReport {
    pub alpha: f64,
    pub gamma: f64,
    pub argmax_side: i64,
    pub argmax_corner: Vec<i64>,
    pub per_level: Vec<GammaLevel>,
    pub stabilized: bool,
}

impl CubeSet {
    /// Validates, sorts, and dedupes the corner list.
    pub fn new(dim: usize, enclosing: i64, mut corners: Vec<Vec<i64>>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidParam(format!("cube sets support dim 2..=3, got {dim}")));
        }
        if enclosing < 1 || enclosing % 2 != 0 {
            return Err(Error::InvalidParam(format!(
                "enclosing side must be a positive even integer, got {enclosing}"
            )));
        }
        if corners.is_empty() {
            return Err(Error::InvalidParam("empty cube set".into()));
        }
        let half = enclosing / 2;
        for k in &corners {
            if k.len() != dim {
                return Err(Error::InvalidParam("corner arity != dim".into()));
            }
            if k.iter().any(|&v| v < -half || v >= half) {
                return Err(Error::InvalidParam(format!(
                    "corner {k:?} outside enclosing box of side {enclosing}"
                )));
            }
        }
        corners.sort_unstable();
        corners.dedup();
        Ok(CubeSet { dim, enclosing, corners })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn enclosing(&self) -> i64 {
        self.enclosing
    }

    pub fn corners(&self) -> &[Vec<i64>] {
        &self.corners
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        let k: Vec<i64> = x.iter().map(|v| v.floor() as i64).collect();
        self.corners.binary_search(&k).is_ok()
    }

    /// Every unit cube of the enclosing box.
    pub fn full_box(dim: usize, enclosing: i64) -> Result<Self> {
        let half = enclosing / 2;
        if enclosing < 1 || enclosing % 2 != 0 {
            return Err(Error::InvalidParam("enclosing side must be even".into()));
        }
        let mut corners = Vec::new();
        match dim {
            2 => {
                for i in -half..half {
                    for j in -half..half {
                        corners.push(vec![i, j]);
                    }
                }
            }
            3 => {
                for i in -half..half {
                    for j in -half..half {
                        for k in -half..half {
                            corners.push(vec![i, j, k]);
                        }
                    }
                }
            }
            _ => return Err(Error::InvalidParam("dim 2..=3".into())),
        }
        CubeSet::new(dim, enclosing, corners)
    }

    /// Product of two middle-half Cantor iterates: keep integers in
    /// `[0, 4^depth)` whose base-2 digits at odd positions vanish, take the
    /// product set, and re-center. The result has `2^(2 depth)` cubes in an
    /// enclosing box of side `4^depth`, so window counts grow linearly with
    /// window side: a box-dimension-1 set.
    pub fn cantor_product(depth: u32) -> Result<Self> {
        if depth == 0 || depth > 5 {
            return Err(Error::InvalidParam(format!("cantor depth must be 1..=5, got {depth}")));
        }
        let side = 1i64 << (2 * depth);
        let half = side / 2;
        let mut axis = Vec::new();
        for v in 0..side {
            let mut ok = true;
            for bit in 0..(2 * depth) {
                if bit % 2 == 1 && (v >> bit) & 1 == 1 {
                    ok = false;
                    break;
                }
            }
            if ok {
                axis.push(v - half);
            }
        }
        let mut corners = Vec::with_capacity(axis.len() * axis.len());
        for &i in &axis {
            for &j in &axis {
                corners.push(vec![i, j]);
            }
        }
        CubeSet::new(2, side, corners)
    }

    /// Sliding-window count statistic: for each dyadic window side
    /// `r ∈ {1, 2, 4, …, enclosing}` and each lattice-aligned window
    /// `[a, a+r]^n` inside the enclosing box, the ratio
    /// `#{cubes inside window} / r^alpha`. Reports the overall max and flags
    /// stabilization (last two dyadic levels of the running max within 10%).
    pub fn gamma_statistic(&self, alpha: f64) -> Result<GammaReport> {
        if !(alpha > 0.0) || alpha > self.dim as f64 {
            return Err(Error::InvalidParam(format!("alpha must lie in (0, {}]", self.dim)));
        }
        let half = self.enclosing / 2;
        let extent = self.enclosing as usize;
        let total: usize = extent.pow(self.dim as u32);
        if total > OCCUPANCY_BUDGET {
            return Err(Error::BudgetExceeded { requested: total, budget: OCCUPANCY_BUDGET });
        }
        // Occupancy prefix sums over the enclosing box, shifted to [0, extent).
        let occupied = |k: &[i64]| -> usize {
            let mut lin = 0usize;
            for &v in k {
                lin = lin * extent + (v + half) as usize;
            }
            lin
        };
        let mut occ = vec![0u32; total];
        for k in &self.corners {
            occ[occupied(k)] = 1;
        }
        let prefix = match self.dim {
            2 => prefix_2d(&occ, extent),
            _ => prefix_3d(&occ, extent),
        };
        let mut per_level = Vec::new();
        let mut best = f64::NEG_INFINITY;
        let mut arg_side = 1i64;
        let mut arg_corner = vec![0i64; self.dim];
        let mut cums: Vec<f64> = Vec::new();
        let mut r = 1i64;
        while r <= self.enclosing {
            let denom = (r as f64).powf(alpha);
            let mut level_best = f64::NEG_INFINITY;
            let mut level_corner = vec![0i64; self.dim];
            let span = (self.enclosing - r) as usize;
            match self.dim {
                2 => {
                    for a0 in 0..=span {
                        for a1 in 0..=span {
                            let c = rect_count_2d(&prefix, extent, a0, a1, r as usize);
                            let ratio = c as f64 / denom;
                            if ratio > level_best {
                                level_best = ratio;
                                level_corner = vec![a0 as i64 - half, a1 as i64 - half];
                            }
                        }
                    }
                }
                _ => {
                    for a0 in 0..=span {
                        for a1 in 0..=span {
                            for a2 in 0..=span {
                                let c = rect_count_3d(&prefix, extent, a0, a1, a2, r as usize);
                                let ratio = c as f64 / denom;
                                if ratio > level_best {
                                    level_best = ratio;
                                    level_corner = vec![
                                        a0 as i64 - half,
                                        a1 as i64 - half,
                                        a2 as i64 - half,
                                    ];
                                }
                            }
                        }
                    }
                }
            }
            if level_best > best {
                best = level_best;
                arg_side = r;
                arg_corner = level_corner.clone();
            }
            per_level.push(GammaLevel {
                window_side: r,
                best_ratio: level_best,
                best_corner: level_corner,
            });
            cums.push(best);
            r *= 2;
        }
        let stabilized = match cums.len() {
            0 | 1 => false,
            m => {
                let prev = cums[m - 2];
                let last = cums[m - 1];
                last > 0.0 && (last - prev) / last <= 0.10
            }
        };
        Ok(GammaReport {
            alpha,
            gamma: best,
            argmax_side: arg_side,
            argmax_corner: arg_corner,
            per_level,
            stabilized,
        })
    }
}

fn prefix_2d(occ: &[u32], extent: usize) -> Vec<u32> {
    let w = extent + 1;
    let mut p = vec![0u32; w * w];
    for i in 0..extent {
        let mut row = 0u32;
        for j in 0..extent {
            row += occ[i * extent + j];
            p[(i + 1) * w + (j + 1)] = p[i * w + (j + 1)] + row;
        }
    }
    p
}

fn rect_count_2d(p: &[u32], extent: usize, a0: usize, a1: usize, r: usize) -> u32 {
    let w = extent + 1;
    let (b0, b1) = (a0 + r, a1 + r);
    let v = p[b0 * w + b1] as i64 + p[a0 * w + a1] as i64
        - p[a0 * w + b1] as i64
        - p[b0 * w + a1] as i64;
    v as u32
}

fn prefix_3d(occ: &[u32], extent: usize) -> Vec<u32> {
    let w = extent + 1;
    let mut p = vec![0u32; w * w * w];
    for i in 0..extent {
        for j in 0..extent {
            for k in 0..extent {
                let v = occ[(i * extent + j) * extent + k];
                let idx = |a: usize, b: usize, c: usize| (a * w + b) * w + c;
                p[idx(i + 1, j + 1, k + 1)] = v
                    + p[idx(i, j + 1, k + 1)]
                    + p[idx(i + 1, j, k + 1)]
                    + p[idx(i + 1, j + 1, k)]
                    - p[idx(i, j, k + 1)]
                    - p[idx(i, j + 1, k)]
                    - p[idx(i + 1, j, k)]
                    + p[idx(i, j, k)];
            }
        }
    }
    p
}

fn rect_count_3d(p: &[u32], extent: usize, a0: usize, a1: usize, a2: usize, r: usize) -> u32 {
    let w = extent + 1;
    let idx = |a: usize, b: usize, c: usize| (a * w + b) * w + c;
    let (b0, b1, b2) = (a0 + r, a1 + r, a2 + r);
    let v = p[idx(b0, b1, b2)] as i64 - p[idx(a0, b1, b2)] as i64 - p[idx(b0, a1, b2)] as i64
        - p[idx(b0, b1, a2)] as i64
        + p[idx(a0, a1, b2)] as i64
        + p[idx(a0, b1, a2)] as i64
        + p[idx(b0, a1, a2)] as i64
        - p[idx(a0, a1, a2)] as i64;
    v as u32
}

const CUBES_MAGIC: &str = "cubeset,v1";

/// Serialize as a line-oriented CSV: magic, `dim`, `enclosing`, then one
/// `x1,...,xn` integer corner per line (sorted). Round-trips exactly.
pub fn write_cubes_csv(set: &CubeSet, out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(out, "{CUBES_MAGIC}")?;
    writeln!(out, "dim,{}", set.dim)?;
    writeln!(out, "enclosing,{}", set.enclosing)?;
    for k in &set.corners {
        let row: Vec<String> = k.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parse the cube-set CSV format; re-validates every corner.
pub fn read_cubes_csv(text: &str) -> Result<CubeSet> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let magic = lines.next().ok_or_else(|| Error::Parse("empty cube file".into()))?;
    if magic.trim() != CUBES_MAGIC {
        return Err(Error::Parse(format!("bad magic line {magic:?}")));
    }
    let dim_line = lines.next().ok_or_else(|| Error::Parse("missing dim line".into()))?;
    let dim: usize = dim_line
        .strip_prefix("dim,")
        .ok_or_else(|| Error::Parse("missing dim header".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse("dim must be an integer".into()))?;
    // Bounds-check before `dim` is used as an allocation hint below.
    if !(2..=3).contains(&dim) {
        return Err(Error::Parse(format!("dim {dim} out of range 2..=3")));
    }
    let enc_line = lines.next().ok_or_else(|| Error::Parse("missing enclosing line".into()))?;
    let enclosing: i64 = enc_line
        .strip_prefix("enclosing,")
        .ok_or_else(|| Error::Parse("missing enclosing header".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse("enclosing must be an integer".into()))?;
    if !(1..=1 << 20).contains(&enclosing) {
        return Err(Error::Parse(format!("enclosing {enclosing} out of range")));
    }
    let mut corners = Vec::new();
    for line in lines {
        let mut k = Vec::with_capacity(dim);
        for tok in line.split(',') {
            let v: i64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad corner coordinate {tok:?}")))?;
            k.push(v);
        }
        if k.len() != dim {
            return Err(Error::Parse(format!("corner arity {} != dim {dim}", k.len())));
        }
        corners.push(k);
        if corners.len() > OCCUPANCY_BUDGET {
            return Err(Error::Parse("cube list too large".into()));
        }
    }
    CubeSet::new(dim, enclosing, corners)
}
