//! Axis-aligned sample grids. Cells are closed boxes of per-axis spacing `h`;
//! all quadrature against grids is the midpoint rule, so every consumer works
//! with cell centers `lo + (i + 1/2) h`.

use crate::error::{Error, Result};

/// Default cap on the number of grid cells any single operation may touch.
pub const DEFAULT_POINT_BUDGET: usize = 10_000_000;

/// Closed axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidParam("box endpoints must have equal nonzero dim".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::InvalidParam(format!("degenerate box axis [{a}, {b}]")));
            }
        }
        Ok(GridBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn cube(dim: usize, half: f64) -> Self {
        GridBox { lo: vec![-half; dim], hi: vec![half; dim] }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, a), b)| v >= a && v <= b)
    }
}

/// Lattice of cell centers over a box: per-axis counts and spacing. `hi` is
/// snapped to `lo + counts * h`, so the spacing is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub bounds: GridBox,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(bounds: GridBox, spacing: Vec<f64>) -> Result<Self> {
        Self::with_budget(bounds, spacing, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(bounds: GridBox, spacing: Vec<f64>, budget: usize) -> Result<Self> {
        if spacing.len() != bounds.dim() {
            return Err(Error::InvalidParam("spacing dim mismatch".into()));
        }
        let mut counts = Vec::with_capacity(spacing.len());
        let mut total = 1usize;
        let mut hi = Vec::with_capacity(spacing.len());
        for (k, &h) in spacing.iter().enumerate() {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidParam(format!("spacing must be positive, got {h}")));
            }
            let extent = bounds.hi[k] - bounds.lo[k];
            let c = ((extent / h) - 1e-9).ceil().max(1.0);
            if c > 1e9 {
                return Err(Error::BudgetExceeded { requested: usize::MAX, budget });
            }
            let c = c as usize;
            total = total
                .checked_mul(c)
                .ok_or(Error::BudgetExceeded { requested: usize::MAX, budget })?;
            counts.push(c);
            hi.push(bounds.lo[k] + h * c as f64);
        }
        if total > budget {
            return Err(Error::BudgetExceeded { requested: total, budget });
        }
        Ok(GridSpec { bounds: GridBox { lo: bounds.lo, hi }, spacing, counts })
    }

    pub fn dim(&self) -> usize {
        self.spacing.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Linear index ordering is C order: the last axis varies fastest.
    pub fn center(&self, lin: usize, out: &mut [f64]) {
        let mut rem = lin;
        for k in (0..self.dim()).rev() {
            let i = rem % self.counts[k];
            rem /= self.counts[k];
            out[k] = self.bounds.lo[k] + (i as f64 + 0.5) * self.spacing[k];
        }
    }

    pub fn center_vec(&self, lin: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.center(lin, &mut out);
        out
    }

    /// Index range of cells whose centers fall inside `[a, b]` along `axis`.
    pub fn axis_range(&self, axis: usize, a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = self.bounds.lo[axis];
        let h = self.spacing[axis];
        let first = ((a - lo) / h - 0.5).ceil().max(0.0) as usize;
        let last = (((b - lo) / h - 0.5).floor() + 1.0).max(0.0) as usize;
        first.min(self.counts[axis])..last.min(self.counts[axis])
    }
}

/// Sampled values on a `GridSpec`, one per cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    pub spec: GridSpec,
    pub values: Vec<T>,
}

impl<T: Copy + Default> GridField<T> {
    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.len();
        GridField { spec, values: vec![T::default(); n] }
    }
}

impl<T: Copy> GridField<T> {
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> T) -> Self {
        let mut buf = vec![0.0; spec.dim()];
        let mut values = Vec::with_capacity(spec.len());
        for lin in 0..spec.len() {
            spec.center(lin, &mut buf);
            values.push(f(&buf));
        }
        GridField { spec, values }
    }
}

const GRID_MAGIC: &str = "gridfield,v1";

/// Serialize a real field: header lines, then sparse `index,value` rows
/// (zero cells are omitted). The format round-trips bit-exactly.
pub fn write_grid_csv(field: &GridField<f64>, out: &mut dyn std::io::Write) -> Result<()> {
    let s = &field.spec;
    writeln!(out, "{GRID_MAGIC}")?;
    writeln!(out, "dim,{}", s.dim())?;
    writeln!(out, "lo,{}", join_floats(&s.bounds.lo))?;
    writeln!(out, "spacing,{}", join_floats(&s.spacing))?;
    let counts: Vec<String> = s.counts.iter().map(|c| c.to_string()).collect();
    writeln!(out, "counts,{}", counts.join(","))?;
    writeln!(out, "index,value")?;
    for (i, v) in field.values.iter().enumerate() {
        if *v != 0.0 {
            writeln!(out, "{},{}", i, fmt_f64(*v))?;
        }
    }
    Ok(())
}

/// Parse the grid CSV format. Rejects non-finite values, out-of-order or
/// duplicate indices, and header/shape mismatches.
pub fn read_grid_csv(text: &str) -> Result<GridField<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let magic = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))?;
    if magic.trim() != GRID_MAGIC {
        return Err(Error::Parse(format!("bad magic line {magic:?}")));
    }
    let dim: usize = parse_header(lines.next(), "dim")?
        .parse()
        .map_err(|_| Error::Parse("dim must be an integer".into()))?;
    if dim == 0 || dim > 8 {
        return Err(Error::Parse(format!("dim {dim} out of range 1..=8")));
    }
    let lo = parse_float_list(&parse_header(lines.next(), "lo")?, dim)?;
    let spacing = parse_float_list(&parse_header(lines.next(), "spacing")?, dim)?;
    let counts_raw = parse_header(lines.next(), "counts")?;
    let mut counts = Vec::with_capacity(dim);
    for tok in counts_raw.split(',') {
        let c: usize = tok.trim().parse().map_err(|_| Error::Parse("bad count".into()))?;
        if c == 0 {
            return Err(Error::Parse("zero count".into()));
        }
        counts.push(c);
    }
    if counts.len() != dim {
        return Err(Error::Parse("counts length != dim".into()));
    }
    let total: usize = counts
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .ok_or_else(|| Error::Parse("counts overflow".into()))?;
    if total > DEFAULT_POINT_BUDGET {
        return Err(Error::BudgetExceeded { requested: total, budget: DEFAULT_POINT_BUDGET });
    }
    let mut hi = Vec::with_capacity(dim);
    for k in 0..dim {
        if !(spacing[k] > 0.0) || !spacing[k].is_finite() || !lo[k].is_finite() {
            return Err(Error::Parse("non-finite or non-positive grid geometry".into()));
        }
        hi.push(lo[k] + spacing[k] * counts[k] as f64);
        if !hi[k].is_finite() {
            return Err(Error::Parse("grid extent overflows".into()));
        }
    }
    let header = lines.next().ok_or_else(|| Error::Parse("missing index,value header".into()))?;
    if header.trim() != "index,value" {
        return Err(Error::Parse(format!("bad column header {header:?}")));
    }
    let spec = GridSpec { bounds: GridBox { lo, hi }, spacing, counts };
    let mut values = vec![0.0f64; total];
    let mut last: Option<usize> = None;
    for line in lines {
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad data row {line:?}")))?;
        let idx: usize =
            idx.trim().parse().map_err(|_| Error::Parse(format!("bad index {idx:?}")))?;
        let val: f64 =
            val.trim().parse().map_err(|_| Error::Parse(format!("bad value {val:?}")))?;
        if !val.is_finite() {
            return Err(Error::Parse("non-finite value".into()));
        }
        if idx >= total {
            return Err(Error::Parse(format!("index {idx} out of range {total}")));
        }
        if let Some(prev) = last {
            if idx <= prev {
                return Err(Error::Parse("indices must be strictly increasing".into()));
            }
        }
        last = Some(idx);
        values[idx] = val;
    }
    Ok(GridField { spec, values })
}

fn parse_header(line: Option<&str>, key: &str) -> Result<String> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing header line {key:?}")))?;
    let (k, rest) = line
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("bad header line {line:?}")))?;
    if k.trim() != key {
        return Err(Error::Parse(format!("expected header {key:?}, got {k:?}")));
    }
    Ok(rest.to_string())
}

fn parse_float_list(raw: &str, dim: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = raw
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad float list {raw:?}")))?;
    if vals.len() != dim {
        return Err(Error::Parse(format!("expected {dim} floats, got {}", vals.len())));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite float in list".into()));
    }
    Ok(vals)
}

/// Canonical float formatting for all CSV output (shortest round-trip form,
/// with negative zero normalized away).
pub fn fmt_f64(v: f64) -> String {
    format!("{}", v + 0.0)
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_midpoints() {
        let spec =
            GridSpec::new(GridBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap(), vec![0.5, 1.0])
                .unwrap();
        assert_eq!(spec.counts, vec![2, 2]);
        assert_eq!(spec.center_vec(0), vec![0.25, -0.5]);
        assert_eq!(spec.center_vec(1), vec![0.25, 0.5]);
        assert_eq!(spec.center_vec(2), vec![0.75, -0.5]);
        assert_eq!(spec.cell_volume(), 0.5);
    }

    #[test]
    fn axis_range_clips() {
        let spec =
            GridSpec::new(GridBox::new(vec![0.0], vec![8.0]).unwrap(), vec![1.0]).unwrap();
        assert_eq!(spec.axis_range(0, 1.0, 3.0), 1..3);
        assert_eq!(spec.axis_range(0, -5.0, 100.0), 0..8);
        assert_eq!(spec.axis_range(0, 6.9, 6.95), 7..7);
    }

    #[test]
    fn budget_enforced() {
        let b = GridBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let err = GridSpec::with_budget(b, vec![1e-4, 1e-4], 1_000_000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn csv_round_trip() {
        let spec =
            GridSpec::new(GridBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap(), vec![0.5, 0.5])
                .unwrap();
        let mut field = GridField::zeros(spec);
        field.values[3] = 0.25;
        field.values[7] = -1.5e-9;
        let mut buf = Vec::new();
        write_grid_csv(&field, &mut buf).unwrap();
        let back = read_grid_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, field);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(read_grid_csv("").is_err());
        assert!(read_grid_csv("gridfield,v1\ndim,2\nlo,0,0\nspacing,1,1\ncounts,2,2\nindex,value\n9,1").is_err());
        assert!(read_grid_csv("gridfield,v1\ndim,2\nlo,0,0\nspacing,1,1\ncounts,2,2\nindex,value\n1,nan").is_err());
        assert!(read_grid_csv("gridfield,v1\ndim,2\nlo,0,0\nspacing,1,1\ncounts,2,2\nindex,value\n2,1\n1,1").is_err());
        assert!(read_grid_csv("gridfield,v1\ndim,1\nlo,0\nspacing,-1\ncounts,2\nindex,value").is_err());
        assert!(read_grid_csv("gridfield,v1\ndim,2\nlo,0,0\nspacing,1,1\ncounts,4000000,4000000\nindex,value").is_err());
    }

    #[test]
    fn fmt_normalizes_negative_zero() {
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(0.125), "0.125");
    }
}
