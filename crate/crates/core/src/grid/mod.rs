//! Uniform periodic grids on the torus, grid fields and finite differences.

mod basis;
mod mollifier;

pub use basis::{TestFunction, TrigBasis, TrigParity};
pub use mollifier::{mollify, mollify_derivatives, MollifiedDerivatives, MollifierKernel};

use std::io::Write;

use crate::error::{HjError, Result};
use crate::exec;
use crate::hamiltonian::Point;

/// `N^dim` nodes `x_i = i h`, `h = 1/N`, with periodic indexing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(HjError::InvalidParams(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(HjError::InvalidParams(format!(
                "nodes per dimension must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `h^dim`, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx % self.n, idx / self.n]
        }
    }

    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        if self.dim == 1 {
            mi[0]
        } else {
            mi[0] + self.n * mi[1]
        }
    }

    pub fn coords(&self, idx: usize) -> Point {
        let mi = self.multi_index(idx);
        let h = self.h();
        if self.dim == 1 {
            [mi[0] as f64 * h, 0.0]
        } else {
            [mi[0] as f64 * h, mi[1] as f64 * h]
        }
    }

    /// Node reached from `idx` by `offset` steps along `axis`, wrapping around.
    #[inline]
    pub fn shift(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let mut mi = self.multi_index(idx);
        let n = self.n as isize;
        mi[axis] = (mi[axis] as isize + offset).rem_euclid(n) as usize;
        self.flat_index(mi)
    }

    /// Node reached by a multi-dimensional integer offset.
    #[inline]
    pub fn offset(&self, idx: usize, off: [i64; 2]) -> usize {
        let mut mi = self.multi_index(idx);
        let n = self.n as i64;
        for d in 0..self.dim {
            mi[d] = (mi[d] as i64 + off[d]).rem_euclid(n) as usize;
        }
        self.flat_index(mi)
    }

    pub fn nearest_node(&self, x: &Point) -> usize {
        let n = self.n as f64;
        let mut mi = [0usize; 2];
        for d in 0..self.dim {
            mi[d] = ((x[d] * n).round() as i64).rem_euclid(self.n as i64) as usize;
        }
        self.flat_index(mi)
    }

    /// Periodic distance between two points of the torus.
    pub fn torus_distance(&self, a: &Point, b: &Point) -> f64 {
        torus_distance(self.dim, a, b)
    }
}

pub fn torus_distance(dim: usize, a: &Point, b: &Point) -> f64 {
    let mut s = 0.0;
    for d in 0..dim {
        let mut t = (a[d] - b[d]).rem_euclid(1.0);
        if t > 0.5 {
            t = 1.0 - t;
        }
        s += t * t;
    }
    s.sqrt()
}

/// One finite scalar per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HjError::InvalidParams(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HjError::InvalidParams(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values produced by finite arithmetic.
    pub(crate) fn from_vec(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn<F>(grid: TorusGrid, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Sync + Send,
    {
        Self::from_vec(grid, exec::map_range(grid.len(), |i| f(&grid.coords(i))))
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `max_i |f_i - g_i|`.
    pub fn sup_distance(&self, other: &GridField) -> f64 {
        assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Periodic multilinear interpolation; exact at nodes.
    pub fn interpolate(&self, x: &Point) -> f64 {
        let g = self.grid;
        let n = g.n as f64;
        let mut base = [0i64; 2];
        let mut frac = [0.0; 2];
        for d in 0..g.dim {
            let s = x[d].rem_euclid(1.0) * n;
            let f = s.floor();
            base[d] = f as i64;
            frac[d] = s - f;
        }
        let corner = |o0: i64, o1: i64| -> f64 {
            let idx = g.offset(0, [base[0] + o0, base[1] + o1]);
            self.values[idx]
        };
        if g.dim == 1 {
            let (a, b) = (corner(0, 0), corner(1, 0));
            if frac[0] == 0.0 {
                a
            } else {
                a + frac[0] * (b - a)
            }
        } else {
            let c00 = corner(0, 0);
            if frac == [0.0, 0.0] {
                return c00;
            }
            let c10 = corner(1, 0);
            let c01 = corner(0, 1);
            let c11 = corner(1, 1);
            let (fx, fy) = (frac[0], frac[1]);
            (1.0 - fx) * (1.0 - fy) * c00 + fx * (1.0 - fy) * c10 + (1.0 - fx) * fy * c01 + fx * fy * c11
        }
    }

    /// Writes `coords..., value` rows preceded by a `#`-comment line naming
    /// the field and its parameters and a column header row.
    pub fn write_csv<W: Write>(
        &self,
        out: W,
        name: &str,
        params: &[(&str, String)],
    ) -> Result<()> {
        let mut out = out;
        let mut line = format!("# field={name}");
        for (k, v) in params {
            line.push_str(&format!(" {k}={v}"));
        }
        writeln!(out, "{line}")?;
        let mut w = csv::Writer::from_writer(out);
        if self.grid.dim == 1 {
            w.write_record(["x", name])?;
        } else {
            w.write_record(["x", "y", name])?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let x = self.grid.coords(i);
            if self.grid.dim == 1 {
                w.write_record([fmt_f64(x[0]), fmt_f64(*v)])?;
            } else {
                w.write_record([fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Periodic forward difference `(f_{i+1} - f_i)/h` along `axis`.
pub fn diff_forward(f: &GridField, axis: usize) -> GridField {
    let g = f.grid;
    let inv_h = g.n as f64;
    let v = &f.values;
    GridField::from_vec(
        g,
        exec::map_range(g.len(), |i| (v[g.shift(i, axis, 1)] - v[i]) * inv_h),
    )
}

/// Periodic backward difference `(f_i - f_{i-1})/h` along `axis`.
pub fn diff_backward(f: &GridField, axis: usize) -> GridField {
    let g = f.grid;
    let inv_h = g.n as f64;
    let v = &f.values;
    GridField::from_vec(
        g,
        exec::map_range(g.len(), |i| (v[i] - v[g.shift(i, axis, -1)]) * inv_h),
    )
}

/// Centered difference `(f_{i+1} - f_{i-1})/2h`.
pub fn diff_centered(f: &GridField, axis: usize) -> GridField {
    let g = f.grid;
    let half_inv_h = 0.5 * g.n as f64;
    let v = &f.values;
    GridField::from_vec(
        g,
        exec::map_range(g.len(), |i| {
            (v[g.shift(i, axis, 1)] - v[g.shift(i, axis, -1)]) * half_inv_h
        }),
    )
}

/// Second difference at one node, summed over axes.
#[inline]
pub(crate) fn laplacian_at(g: &TorusGrid, v: &[f64], i: usize) -> f64 {
    let inv_h2 = (g.n * g.n) as f64;
    let mut s = 0.0;
    for d in 0..g.dim {
        s += (v[g.shift(i, d, 1)] - v[i]) - (v[i] - v[g.shift(i, d, -1)]);
    }
    s * inv_h2
}

/// Centered second difference, periodic, summed over axes.
pub fn laplacian(f: &GridField) -> GridField {
    let g = f.grid;
    let v = &f.values;
    GridField::from_vec(g, exec::map_range(g.len(), |i| laplacian_at(&g, v, i)))
}

/// Trapezoid rule `sum_i f_i h^n`.
pub fn integrate(f: &GridField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}
