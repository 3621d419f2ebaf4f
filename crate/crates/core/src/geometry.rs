//! Uniform grids on intervals and rectangles, and nodal fields on them.
//!
//! Nodes are numbered lexicographically in their multi-index `(i0, i1)` with
//! the last axis running fastest. Every axis carries `n + 2` nodes: `n`
//! interior nodes plus the two endpoints, so boundary values are stored
//! explicitly next to the interior ones.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A point of the ambient space; the second coordinate is 0 in 1D.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extents: Vec<(f64, f64)>,
    n: Vec<usize>,
    h: Vec<f64>,
}

impl Grid {
    /// Builds a uniform grid with `n[k]` interior nodes on axis `k`.
    pub fn uniform(extents: &[(f64, f64)], n: &[usize]) -> Result<Arc<Grid>> {
        if extents.is_empty() || extents.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "only 1D and 2D boxes are supported, got dim {}",
                extents.len()
            )));
        }
        if extents.len() != n.len() {
            return Err(Error::DimensionMismatch {
                expected: extents.len(),
                found: n.len(),
            });
        }
        let mut h = Vec::with_capacity(n.len());
        for (&(lo, hi), &nk) in extents.iter().zip(n) {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(Error::InvalidGrid(format!("degenerate extent [{lo}, {hi}]")));
            }
            if nk < 3 {
                return Err(Error::InvalidGrid(format!(
                    "need at least 3 interior nodes per axis, got {nk}"
                )));
            }
            h.push((hi - lo) / (nk + 1) as f64);
        }
        Ok(Arc::new(Grid {
            extents: extents.to_vec(),
            n: n.to_vec(),
            h,
        }))
    }

    /// Unit interval `(0, len)` with `n` interior nodes.
    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Arc<Grid>> {
        Grid::uniform(&[(lo, hi)], &[n])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), n: (usize, usize)) -> Result<Arc<Grid>> {
        Grid::uniform(&[x, y], &[n.0, n.1])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn extents(&self) -> &[(f64, f64)] {
        &self.extents
    }

    /// Interior node count on `axis`.
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    /// Nodes per axis including both endpoints; the unused second axis of a
    /// 1D grid reports 1.
    pub fn shape(&self) -> [usize; 2] {
        match self.dim() {
            1 => [self.n[0] + 2, 1],
            _ => [self.n[0] + 2, self.n[1] + 2],
        }
    }

    pub fn node_count(&self) -> usize {
        let s = self.shape();
        s[0] * s[1]
    }

    pub fn interior_count(&self) -> usize {
        self.n.iter().product()
    }

    pub fn node_index(&self, multi: [usize; 2]) -> usize {
        multi[0] * self.shape()[1] + multi[1]
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        let s1 = self.shape()[1];
        [idx / s1, idx % s1]
    }

    pub fn coords(&self, idx: usize) -> Point {
        let m = self.multi_index(idx);
        let mut p = [0.0; 2];
        for (k, pk) in p.iter_mut().enumerate().take(self.dim()) {
            *pk = self.extents[k].0 + m[k] as f64 * self.h[k];
        }
        p
    }

    /// Whether `idx` lies on the topological boundary of the box.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim()).any(|k| m[k] == 0 || m[k] == self.n[k] + 1)
    }

    /// Position of an interior node in the interior ordering, used as the
    /// unknown index of linear systems.
    pub fn interior_slot(&self, idx: usize) -> Option<usize> {
        if self.is_boundary(idx) {
            return None;
        }
        let m = self.multi_index(idx);
        Some(match self.dim() {
            1 => m[0] - 1,
            _ => (m[0] - 1) * self.n[1] + (m[1] - 1),
        })
    }

    pub fn interior_node(&self, slot: usize) -> usize {
        match self.dim() {
            1 => slot + 1,
            _ => self.node_index([slot / self.n[1] + 1, slot % self.n[1] + 1]),
        }
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.interior_count()).map(move |s| self.interior_node(s))
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| self.is_boundary(i))
    }

    /// Neighbor of `idx` shifted by `offset` node steps per axis, if it
    /// exists on the grid.
    pub fn neighbor(&self, idx: usize, offset: [isize; 2]) -> Option<usize> {
        let m = self.multi_index(idx);
        let s = self.shape();
        let mut out = [0usize; 2];
        for k in 0..2 {
            let v = m[k] as isize + offset[k];
            if v < 0 || v >= s[k] as isize {
                return None;
            }
            out[k] = v as usize;
        }
        Some(self.node_index(out))
    }

    /// Product trapezoid weight of a node; sums to the box volume.
    pub fn quadrature_weight(&self, idx: usize) -> f64 {
        let m = self.multi_index(idx);
        (0..self.dim())
            .map(|k| {
                let edge = m[k] == 0 || m[k] == self.n[k] + 1;
                if edge {
                    0.5 * self.h[k]
                } else {
                    self.h[k]
                }
            })
            .product()
    }

    /// Product of the distances to the faces of the box, sampled at every
    /// node. Positive inside, zero on the boundary.
    pub fn distance_product(self: &Arc<Self>) -> Field {
        let ext = self.extents.clone();
        let dim = self.dim();
        Field::from_fn(self, move |p| {
            (0..dim).map(|k| (p[k] - ext[k].0) * (ext[k].1 - p[k])).product()
        })
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().map(|(a, b)| b - a).product()
    }
}

/// Real values at every node of a grid, interior and boundary.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Field {
        Field {
            grid: Arc::clone(grid),
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(Point) -> f64) -> Field {
        let values = (0..grid.node_count()).map(|i| f(grid.coords(i))).collect();
        Field {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {i}")));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Builds a field from interior values only; boundary nodes get `boundary`.
    pub fn from_interior(grid: &Arc<Grid>, interior: &[f64], boundary: f64) -> Field {
        let mut f = Field::constant(grid, boundary);
        for (slot, &v) in interior.iter().enumerate() {
            f.values[grid.interior_node(slot)] = v;
        }
        f
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.grid.interior_nodes().map(|i| self.values[i]).collect()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_grid(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn check_on(&self, grid: &Arc<Grid>) -> Result<()> {
        if Arc::ptr_eq(&self.grid, grid) || *self.grid == **grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Maximum of `|value|` over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn interior_min(&self) -> f64 {
        self.grid
            .interior_nodes()
            .map(|i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn interior_max(&self) -> f64 {
        self.grid
            .interior_nodes()
            .map(|i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn boundary_max(&self) -> f64 {
        self.grid
            .boundary_nodes()
            .map(|i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Discrete `L^r` norm with trapezoid weights.
    pub fn lr_norm(&self, r: f64) -> f64 {
        let s: f64 = (0..self.values.len())
            .map(|i| self.values[i].abs().powf(r) * self.grid.quadrature_weight(i))
            .sum();
        s.powf(1.0 / r)
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Sup-norm distance between two fields.
    pub fn distance(&self, other: &Field) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Copy with boundary nodes overwritten by `c`.
    pub fn with_boundary(&self, c: f64) -> Field {
        let mut out = self.clone();
        for i in self.grid.boundary_nodes() {
            out.values[i] = c;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// One-sided difference quotient `(f(x + s) - f(x)) / |s|` along the
    /// inward direction at a boundary node. At corners the step moves one
    /// node inward along every axis the node is extremal on.
    pub fn inward_boundary_derivative(&self, idx: usize) -> Result<f64> {
        let g = &self.grid;
        if idx >= g.node_count() || !g.is_boundary(idx) {
            return Err(Error::NotBoundaryNode(idx));
        }
        let m = g.multi_index(idx);
        let mut offset = [0isize; 2];
        let mut len2 = 0.0;
        for k in 0..g.dim() {
            if m[k] == 0 {
                offset[k] = 1;
            } else if m[k] == g.n(k) + 1 {
                offset[k] = -1;
            }
            if offset[k] != 0 {
                len2 += g.h(k) * g.h(k);
            }
        }
        let inner = g
            .neighbor(idx, offset)
            .ok_or(Error::NotBoundaryNode(idx))?;
        Ok((self.values[inner] - self.values[idx]) / len2.sqrt())
    }

    /// Writes `x[,y],value` rows in node order with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = match self.grid.dim() {
            1 => "x,value",
            _ => "x,y,value",
        };
        writeln!(w, "{header}")?;
        for i in 0..self.values.len() {
            let p = self.grid.coords(i);
            for pk in p.iter().take(self.grid.dim()) {
                write!(w, "{},", fmt_sig17(*pk))?;
            }
            writeln!(w, "{}", fmt_sig17(self.values[i]))?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits in scientific notation.
pub fn fmt_sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Signed power `|v|^(e-1) v`, zero at `v = 0`.
pub fn signed_pow(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(e)
    }
}
