//! Axis-aligned boxes and the labelled grid partition of the safe set.
//!
//! Abstract states are the grid cells in row-major order (last axis fastest)
//! followed by one sentinel state for everything outside the safe box.
//! Cells are half-open `[lo, hi)` except on the top face of a bounded axis.
//! Periodic axes wrap and have no top face.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNSAFE: &str = "unsafe";

/// Distance (state units) under which a region edge counts as on a grid line.
pub const ALIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = AxisBox { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::DimensionMismatch { expected: self.lower.len(), found: self.upper.len() });
        }
        if self.lower.is_empty() {
            return Err(Error::Geometry("box has no dimensions".into()));
        }
        for (i, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::Geometry(format!("axis {i}: need lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u - l)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }

    /// Box centred at `c` with half-width `r` on every axis.
    pub fn around(c: &[f64], r: f64) -> Self {
        AxisBox {
            lower: c.iter().map(|v| v - r).collect(),
            upper: c.iter().map(|v| v + r).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSpec {
    #[serde(rename = "box")]
    pub bbox: AxisBox,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub safe_box: AxisBox,
    pub cells_per_dim: Vec<usize>,
    pub coarse_block_shape: Vec<usize>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub periodic: Vec<bool>,
}

/// Cells of one axis touched by an interval: `count` cells starting at
/// `first`, wrapping modulo the axis length on periodic axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisSpan {
    pub first: usize,
    pub count: usize,
}

/// How a box sits on the grid.
#[derive(Debug, Clone)]
pub struct GridCover {
    pub spans: Vec<AxisSpan>,
    /// Some part of the box lies outside the safe box.
    pub escapes: bool,
    /// The box misses the safe box entirely; `spans` is empty.
    pub outside: bool,
}

impl GridCover {
    pub fn n_cells(&self) -> usize {
        if self.outside {
            0
        } else {
            self.spans.iter().map(|s| s.count).product()
        }
    }

    /// Inside a single cell.
    pub fn single_cell(&self) -> bool {
        !self.escapes && !self.outside && self.spans.iter().all(|s| s.count == 1)
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    safe_box: AxisBox,
    cells_per_dim: Vec<usize>,
    periodic: Vec<bool>,
    block_shape: Vec<usize>,
    strides: Vec<usize>,
    block_strides: Vec<usize>,
    blocks_per_dim: Vec<usize>,
    width: Vec<f64>,
    n_cells: usize,
    props: Vec<String>,
    labels: Vec<u64>,
}

impl Partition {
    pub fn from_config(cfg: &PartitionConfig) -> Result<Self> {
        let periodic = if cfg.periodic.is_empty() { vec![false; cfg.safe_box.dim()] } else { cfg.periodic.clone() };
        let regions: Vec<(AxisBox, Vec<String>)> =
            cfg.regions.iter().map(|r| (r.bbox.clone(), r.labels.clone())).collect();
        Self::build_grid(cfg.safe_box.clone(), &cfg.cells_per_dim, &regions, &cfg.coarse_block_shape, &periodic)
    }

    pub fn build_grid(
        safe_box: AxisBox,
        cells_per_dim: &[usize],
        regions: &[(AxisBox, Vec<String>)],
        block_shape: &[usize],
        periodic: &[bool],
    ) -> Result<Self> {
        safe_box.validate()?;
        let n = safe_box.dim();
        for len in [cells_per_dim.len(), block_shape.len(), periodic.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        for i in 0..n {
            if cells_per_dim[i] == 0 || block_shape[i] == 0 {
                return Err(Error::Geometry(format!("axis {i}: cell and block counts must be positive")));
            }
            if !cells_per_dim[i].is_multiple_of(block_shape[i]) {
                return Err(Error::IndivisibleBlocks { axis: i, cells: cells_per_dim[i], block: block_shape[i] });
            }
        }
        let mut strides = vec![1; n];
        let mut block_strides = vec![1; n];
        let blocks_per_dim: Vec<usize> = (0..n).map(|i| cells_per_dim[i] / block_shape[i]).collect();
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cells_per_dim[i + 1];
            block_strides[i] = block_strides[i + 1] * blocks_per_dim[i + 1];
        }
        let n_cells: usize = cells_per_dim.iter().product();
        if n_cells >= u32::MAX as usize {
            return Err(Error::Geometry("too many cells".into()));
        }
        let width = (0..n).map(|i| (safe_box.upper[i] - safe_box.lower[i]) / cells_per_dim[i] as f64).collect();

        let mut props = vec![UNSAFE.to_string()];
        for (_, ls) in regions {
            for l in ls {
                if !props.contains(l) {
                    props.push(l.clone());
                }
            }
        }
        if props.len() > 64 {
            return Err(Error::Geometry("at most 64 atomic propositions".into()));
        }

        let mut p = Partition {
            safe_box,
            cells_per_dim: cells_per_dim.to_vec(),
            periodic: periodic.to_vec(),
            block_shape: block_shape.to_vec(),
            strides,
            block_strides,
            blocks_per_dim,
            width,
            n_cells,
            props,
            labels: vec![0; n_cells + 1],
        };
        p.labels[n_cells] = 1;

        for (rb, ls) in regions {
            if rb.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: rb.dim() });
            }
            rb.validate()?;
            let mut lo_idx = vec![0usize; n];
            let mut hi_idx = vec![0usize; n];
            for i in 0..n {
                let (l, u) = (rb.lower[i], rb.upper[i]);
                if l < p.safe_box.lower[i] - ALIGN_TOL || u > p.safe_box.upper[i] + ALIGN_TOL {
                    return Err(Error::Geometry(format!("region {:?} leaves the safe box on axis {i}", rb)));
                }
                lo_idx[i] = p.grid_line(i, l)?;
                hi_idx[i] = p.grid_line(i, u)?;
            }
            let mask = ls.iter().fold(0u64, |m, l| m | (1 << p.prop_index(l).unwrap()));
            let spans: Vec<AxisSpan> =
                (0..n).map(|i| AxisSpan { first: lo_idx[i], count: hi_idx[i] - lo_idx[i] }).collect();
            let mut cells = Vec::new();
            p.collect_cells(&spans, &mut cells);
            for c in cells {
                p.labels[c] |= mask;
            }
        }
        Ok(p)
    }

    /// Index of the grid line at `v` on `axis`, or `MisalignedRegion`.
    fn grid_line(&self, axis: usize, v: f64) -> Result<usize> {
        let t = (v - self.safe_box.lower[axis]) / self.width[axis];
        let k = t.round();
        let on_line = self.safe_box.lower[axis] + k * self.width[axis];
        if (on_line - v).abs() > ALIGN_TOL && (t - k).abs() > 1e-9 {
            return Err(Error::MisalignedRegion { axis, value: v });
        }
        Ok(k.max(0.0) as usize)
    }

    /// Shrink (`inward`) or grow a box to the nearest grid lines.
    pub fn snap_box(&self, b: &AxisBox, inward: bool) -> AxisBox {
        let mut out = b.clone();
        for i in 0..self.dim() {
            let lo = self.safe_box.lower[i];
            let w = self.width[i];
            let n = self.cells_per_dim[i] as f64;
            let tl = ((b.lower[i] - lo) / w * 1e9).round() / 1e9;
            let tu = ((b.upper[i] - lo) / w * 1e9).round() / 1e9;
            let (kl, ku) = if inward { (tl.ceil(), tu.floor()) } else { (tl.floor(), tu.ceil()) };
            out.lower[i] = lo + kl.clamp(0.0, n) * w;
            out.upper[i] = lo + ku.clamp(0.0, n) * w;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.safe_box.dim()
    }

    pub fn safe_box(&self) -> &AxisBox {
        &self.safe_box
    }

    pub fn cells_per_dim(&self) -> &[usize] {
        &self.cells_per_dim
    }

    pub fn block_shape(&self) -> &[usize] {
        &self.block_shape
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn cell_width(&self) -> &[f64] {
        &self.width
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cells plus the unsafe sentinel.
    pub fn n_states(&self) -> usize {
        self.n_cells + 1
    }

    pub fn unsafe_index(&self) -> usize {
        self.n_cells
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    /// Label bitmask over `props()`.
    pub fn label(&self, s: usize) -> u64 {
        self.labels[s]
    }

    pub fn label_names(&self, s: usize) -> Vec<&str> {
        let m = self.labels[s];
        self.props.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| p.as_str()).collect()
    }

    pub fn multi_index(&self, s: usize) -> Vec<usize> {
        (0..self.dim()).map(|i| (s / self.strides[i]) % self.cells_per_dim[i]).collect()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn cell_box(&self, s: usize) -> Option<AxisBox> {
        if s >= self.n_cells {
            return None;
        }
        let idx = self.multi_index(s);
        let lower: Vec<f64> =
            (0..self.dim()).map(|i| self.safe_box.lower[i] + idx[i] as f64 * self.width[i]).collect();
        let upper = (0..self.dim())
            .map(|i| {
                if idx[i] + 1 == self.cells_per_dim[i] {
                    self.safe_box.upper[i]
                } else {
                    self.safe_box.lower[i] + (idx[i] + 1) as f64 * self.width[i]
                }
            })
            .collect();
        Some(AxisBox { lower, upper })
    }

    pub fn cell_center(&self, s: usize) -> Option<Vec<f64>> {
        self.cell_box(s).map(|b| b.center())
    }

    /// Map periodic coordinates back into the safe box.
    pub fn wrap(&self, x: &mut [f64]) {
        for i in 0..self.dim() {
            if self.periodic[i] {
                let lo = self.safe_box.lower[i];
                let p = self.safe_box.upper[i] - lo;
                x[i] = lo + (x[i] - lo).rem_euclid(p);
                if x[i] >= lo + p {
                    x[i] = lo;
                }
            }
        }
    }

    /// Abstract state of a point.
    pub fn locate(&self, x: &[f64]) -> usize {
        let mut s = 0;
        for i in 0..self.dim() {
            let lo = self.safe_box.lower[i];
            let n = self.cells_per_dim[i];
            let mut v = x[i];
            if !v.is_finite() {
                return self.unsafe_index();
            }
            if self.periodic[i] {
                let p = self.safe_box.upper[i] - lo;
                v = lo + (v - lo).rem_euclid(p);
            } else if v < lo || v > self.safe_box.upper[i] {
                return self.unsafe_index();
            }
            let t = (v - lo) / self.width[i];
            let r = t.round();
            let t = if (t - r).abs() < 1e-9 { r } else { t };
            let mut k = t.floor().max(0.0) as usize;
            if k >= n {
                k = if self.periodic[i] { k % n } else { n - 1 };
            }
            s += k * self.strides[i];
        }
        s
    }

    /// Cells overlapped by `b`. A box overlaps cell `[c, d)` when
    /// `b.upper >= c` and `b.lower < d`; the top cell of a bounded axis is closed.
    pub fn cover(&self, b: &AxisBox) -> GridCover {
        let n = self.dim();
        let mut spans = Vec::with_capacity(n);
        let mut escapes = false;
        for i in 0..n {
            let lo = self.safe_box.lower[i];
            let hi = self.safe_box.upper[i];
            let w = self.width[i];
            let cells = self.cells_per_dim[i];
            let (a, c) = (b.lower[i], b.upper[i]);
            if self.periodic[i] {
                let p = hi - lo;
                if c - a >= p {
                    spans.push(AxisSpan { first: 0, count: cells });
                    continue;
                }
                let a2 = lo + (a - lo).rem_euclid(p);
                let c2 = a2 + (c - a);
                let first = (((a2 - lo) / w).floor().max(0.0) as usize).min(cells - 1);
                let last = ((c2 - lo) / w).floor().max(0.0) as usize;
                let count = (last + 1 - first).min(cells);
                spans.push(AxisSpan { first, count });
            } else {
                if c < lo || a > hi {
                    return GridCover { spans: Vec::new(), escapes: true, outside: true };
                }
                if a < lo || c > hi {
                    escapes = true;
                }
                let first = (((a.max(lo) - lo) / w).floor() as usize).min(cells - 1);
                let last = (((c.min(hi) - lo) / w).floor() as usize).min(cells - 1);
                spans.push(AxisSpan { first, count: last + 1 - first });
            }
        }
        GridCover { spans, escapes, outside: false }
    }

    pub fn collect_cells(&self, spans: &[AxisSpan], out: &mut Vec<usize>) {
        self.for_each_cell(spans, |c| out.push(c));
    }

    /// Visit every cell of a cover in increasing axis-offset order.
    pub fn for_each_cell(&self, spans: &[AxisSpan], mut f: impl FnMut(usize)) {
        let n = spans.len();
        if spans.iter().any(|s| s.count == 0) {
            return;
        }
        let mut off = vec![0usize; n];
        loop {
            let mut s = 0;
            for i in 0..n {
                let k = (spans[i].first + off[i]) % self.cells_per_dim[i];
                s += k * self.strides[i];
            }
            f(s);
            let mut i = n;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                off[i] += 1;
                if off[i] < spans[i].count {
                    break;
                }
                off[i] = 0;
            }
        }
    }

    /// Number of coarse blocks, not counting the unsafe singleton.
    pub fn n_blocks(&self) -> usize {
        self.blocks_per_dim.iter().product()
    }

    pub fn unsafe_block(&self) -> usize {
        self.n_blocks()
    }

    pub fn block_of(&self, s: usize) -> usize {
        if s >= self.n_cells {
            return self.unsafe_block();
        }
        (0..self.dim()).map(|i| ((s / self.strides[i]) % self.cells_per_dim[i]) / self.block_shape[i] * self.block_strides[i]).sum()
    }

    pub fn block_states(&self, q: usize) -> Vec<usize> {
        if q >= self.n_blocks() {
            return vec![self.unsafe_index()];
        }
        let spans: Vec<AxisSpan> = (0..self.dim())
            .map(|i| AxisSpan {
                first: (q / self.block_strides[i]) % self.blocks_per_dim[i] * self.block_shape[i],
                count: self.block_shape[i],
            })
            .collect();
        let mut out = Vec::with_capacity(self.block_shape.iter().product());
        self.collect_cells(&spans, &mut out);
        out.sort_unstable();
        out
    }

    /// The coarse layer: rectangular blocks of cells plus the unsafe singleton.
    pub fn coarse_clusters(&self) -> Vec<Vec<usize>> {
        (0..=self.n_blocks()).map(|q| self.block_states(q)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> AxisBox {
        AxisBox::new(vec![0.0; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn two_by_two_without_regions() {
        let p = Partition::build_grid(unit(2), &[2, 2], &[], &[1, 1], &[false, false]).unwrap();
        assert_eq!(p.n_states(), 5);
        assert_eq!(p.unsafe_index(), 4);
        for s in 0..4 {
            assert_eq!(p.label(s), 0);
        }
        assert_eq!(p.label_names(4), vec![UNSAFE]);
    }

    #[test]
    fn misaligned_goal_is_rejected_until_snapped() {
        let goal = AxisBox::new(vec![0.0, 0.0], vec![0.359, 0.359]).unwrap();
        let r = Partition::build_grid(unit(2), &[60, 60], &[(goal.clone(), vec!["goal".into()])], &[2, 2], &[false; 2]);
        assert!(matches!(r, Err(Error::MisalignedRegion { .. })));
        let p0 = Partition::build_grid(unit(2), &[60, 60], &[], &[2, 2], &[false; 2]).unwrap();
        let snapped = p0.snap_box(&goal, true);
        assert!((snapped.upper[0] - 21.0 / 60.0).abs() < 1e-15);
        let p = Partition::build_grid(unit(2), &[60, 60], &[(snapped, vec!["goal".into()])], &[2, 2], &[false; 2]).unwrap();
        let n_goal = (0..p.n_cells()).filter(|&s| p.label(s) & 2 != 0).count();
        assert_eq!(n_goal, 21 * 21);
    }

    #[test]
    fn indivisible_blocks() {
        let r = Partition::build_grid(unit(2), &[5, 4], &[], &[2, 2], &[false; 2]);
        assert!(matches!(r, Err(Error::IndivisibleBlocks { axis: 0, .. })));
    }

    #[test]
    fn locate_conventions() {
        let p = Partition::build_grid(unit(2), &[4, 4], &[], &[2, 2], &[false; 2]).unwrap();
        assert_eq!(p.locate(&[1.5, 0.5]), p.unsafe_index());
        for s in 0..16 {
            let b = p.cell_box(s).unwrap();
            assert_eq!(p.locate(&b.lower), s);
        }
        // shared face between (1,1) and (2,1) resolves upward
        assert_eq!(p.locate(&[0.5, 0.3]), p.linear_index(&[2, 1]));
        assert_eq!(p.locate(&[1.0, 1.0]), 15);
    }

    #[test]
    fn coarse_tiling() {
        let p = Partition::build_grid(unit(2), &[4, 4], &[], &[2, 2], &[false; 2]).unwrap();
        let q = p.coarse_clusters();
        assert_eq!(q.len(), 5);
        for b in &q[..4] {
            assert_eq!(b.len(), 4);
        }
        assert_eq!(q[4], vec![16]);
        assert_eq!(q[0], vec![0, 1, 4, 5]);
    }

    #[test]
    fn periodic_cover_wraps() {
        let b = AxisBox::new(vec![-std::f64::consts::PI, 0.0], vec![std::f64::consts::PI, 1.0]).unwrap();
        let p = Partition::build_grid(b, &[10, 2], &[], &[1, 1], &[true, false]).unwrap();
        let w = 2.0 * std::f64::consts::PI / 10.0;
        let c = p.cover(&AxisBox { lower: vec![3.0, 0.1], upper: vec![3.0 + w, 0.2] });
        assert!(!c.escapes);
        let mut cells = Vec::new();
        p.collect_cells(&c.spans, &mut cells);
        assert_eq!(cells.len(), 2);
        assert!(cells.contains(&p.linear_index(&[9, 0])));
        assert!(cells.contains(&p.linear_index(&[0, 0])));
        assert_eq!(p.locate(&[std::f64::consts::PI + 0.01, 0.5]), p.linear_index(&[0, 1]));
    }
}
