use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Vec3;

/// A uniform grid in 1–3 dimensions. Grid axis `a` is the Cartesian axis `a`;
/// coordinates of missing axes are zero. Values are stored row-major with the
/// last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(n: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        let dim = n.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if origin.len() != dim || spacing.len() != dim {
            return Err(Error::Config("n, origin and spacing must have the same length".into()));
        }
        if let Some(&k) = n.iter().find(|&&k| k < 5) {
            return Err(Error::Config(format!("at least 5 points per axis are required, got {k}")));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::Config("grid spacing must be positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        Ok(Self { n, origin, spacing })
    }

    /// `n` points per axis spanning `[lo, hi]` on every axis.
    pub fn cube(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Config(format!("empty interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        Self::new(vec![n; dim], vec![lo; dim], vec![h; dim])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.coord(axis, self.n[axis] - 1)
    }

    /// Multi-index of a flat index; unused trailing entries are zero.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.n[a];
            idx /= self.n[a];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for a in 0..self.dim() {
            idx = idx * self.n[a] + multi[a];
        }
        idx
    }

    pub fn point(&self, idx: usize) -> Vec3 {
        let m = self.unravel(idx);
        let mut p = Vec3::zeros();
        for a in 0..self.dim() {
            p[a] = self.coord(a, m[a]);
        }
        p
    }

    pub fn points(&self) -> Vec<Vec3> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// True when the point is at least `depth` points away from every boundary.
    pub fn is_interior(&self, idx: usize, depth: usize) -> bool {
        let m = self.unravel(idx);
        (0..self.dim()).all(|a| m[a] >= depth && m[a] + depth < self.n[a])
    }

    pub fn interior_indices(&self, depth: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i, depth)).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Product trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim())
            .map(|a| {
                let n = self.n[a];
                (0..n)
                    .map(|i| if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * self.spacing[a])
                    .collect()
            })
            .collect();
        (0..self.len())
            .map(|i| {
                let m = self.unravel(i);
                (0..self.dim()).map(|a| per_axis[a][m[a]]).product()
            })
            .collect()
    }

    /// Same shape with every axis refined to `2(n-1)+1` points over the same extent.
    pub fn refined(&self) -> Self {
        Self {
            n: self.n.iter().map(|&k| 2 * (k - 1) + 1).collect(),
            origin: self.origin.clone(),
            spacing: self.spacing.iter().map(|h| h / 2.0).collect(),
        }
    }

    /// Index of the grid point nearest to `p` (clamped to the grid).
    pub fn nearest(&self, p: &Vec3) -> usize {
        let m: Vec<usize> = (0..self.dim())
            .map(|a| {
                let t = ((p[a] - self.origin[a]) / self.spacing[a]).round();
                t.clamp(0.0, (self.n[a] - 1) as f64) as usize
            })
            .collect();
        self.ravel(&m)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ravel_roundtrip() {
        let g = GridSpec::new(vec![5, 6, 7], vec![0.0; 3], vec![1.0; 3]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.ravel(&g.unravel(i)), i);
        }
        assert_eq!(g.stride(0), 42);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(GridSpec::new(vec![4], vec![0.0], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![5], vec![0.0], vec![0.0]).is_err());
        assert!(GridSpec::new(vec![5; 4], vec![0.0; 4], vec![1.0; 4]).is_err());
    }

    #[test]
    fn interior_mask() {
        let g = GridSpec::cube(2, 9, -1.0, 1.0).unwrap();
        assert_eq!(g.interior_indices(2).len(), 25);
        assert_eq!(g.point(g.nearest(&Vec3::new(0.01, -0.02, 5.0))), Vec3::zeros());
    }
}
