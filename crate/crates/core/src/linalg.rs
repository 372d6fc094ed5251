//! Direct solver for the linearized scheme matrices.
//!
//! The matrices are M-matrices with a known row excess (row sum) `e_i > 0`.
//! Ordering the nodes naturally, the periodic stencil is banded except for
//! the wrap-around couplings of the last grid line, which are kept in a
//! dense border. Elimination runs without pivoting and never forms a pivot
//! by subtraction: each active row carries its excess, updated as
//! `S_j += |m| S_r`, and the pivot is rebuilt as excess plus the magnitudes of
//! the remaining off-diagonals. All updates then add quantities of one sign,
//! so the factors (and every solve with a non-negative right-hand side) are
//! componentwise accurate.

use crate::adjoint::LinearizedOperator;
use crate::error::{HjError, Result};

/// Normwise backward error accepted by [`solve_refined`].
pub const BACKWARD_ERROR_TOL: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 3;

#[derive(Clone, Debug)]
pub struct BorderedBandLu {
    p: usize,
    k: usize,
    bw: usize,
    /// Interior block, row-major band storage of width `2 bw + 1`; strictly
    /// lower entries hold multipliers, the diagonal slot is unused.
    band: Vec<f64>,
    /// `p x k`, interior rows against border columns.
    right: Vec<f64>,
    /// `k x p`, border rows against interior columns (multipliers after factoring).
    bottom: Vec<f64>,
    /// `k x k` dense Schur complement, factored in place.
    corner: Vec<f64>,
    pivots: Vec<f64>,
}

impl BorderedBandLu {
    pub fn factor(op: &LinearizedOperator) -> Result<Self> {
        let grid = op.grid();
        let n = grid.nodes_per_dim();
        let (bw, k) = if grid.dim() == 1 { (1, 1) } else { (n, n) };
        let m = grid.len();
        let p = m - k;
        let width = 2 * bw + 1;
        let mut lu = Self {
            p,
            k,
            bw,
            band: vec![0.0; p * width],
            right: vec![0.0; p * k],
            bottom: vec![0.0; k * p],
            corner: vec![0.0; k * k],
            pivots: vec![0.0; m],
        };
        let mut excess = op.excess().to_vec();
        for i in 0..m {
            for (j, c) in op.row(i) {
                lu.add_entry(i, j, -c)?;
            }
        }
        lu.eliminate(&mut excess)?;
        Ok(lu)
    }

    fn add_entry(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        let (p, k, bw) = (self.p, self.k, self.bw);
        if i < p && j < p {
            let off = j as isize - i as isize;
            if off.unsigned_abs() > bw {
                return Err(HjError::InvalidParams(format!(
                    "coupling ({i}, {j}) outside the band"
                )));
            }
            self.band[i * (2 * bw + 1) + (off + bw as isize) as usize] += v;
        } else if i < p {
            self.right[i * k + (j - p)] += v;
        } else if j < p {
            self.bottom[(i - p) * p + j] += v;
        } else {
            self.corner[(i - p) * k + (j - p)] += v;
        }
        Ok(())
    }

    #[inline]
    fn bidx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    fn eliminate(&mut self, excess: &mut [f64]) -> Result<()> {
        let (p, k, bw) = (self.p, self.k, self.bw);
        for r in 0..p {
            let hi = (r + bw).min(p - 1);
            let mut piv = excess[r];
            for l in r + 1..=hi {
                piv -= self.band[self.bidx(r, l)];
            }
            for c in 0..k {
                piv -= self.right[r * k + c];
            }
            if !(piv > 0.0) {
                return Err(HjError::InvalidParams(format!(
                    "non-positive pivot {piv:e} at row {r}"
                )));
            }
            self.pivots[r] = piv;
            for j in r + 1..=hi {
                let idx = self.bidx(j, r);
                let a = self.band[idx];
                if a == 0.0 {
                    continue;
                }
                let mlt = a / piv;
                self.band[idx] = mlt;
                excess[j] -= mlt * excess[r];
                for l in r + 1..=hi {
                    if l != j {
                        let src = self.band[self.bidx(r, l)];
                        let dst = self.bidx(j, l);
                        self.band[dst] -= mlt * src;
                    }
                }
                for c in 0..k {
                    self.right[j * k + c] -= mlt * self.right[r * k + c];
                }
            }
            for q in 0..k {
                let a = self.bottom[q * p + r];
                if a == 0.0 {
                    continue;
                }
                let mlt = a / piv;
                self.bottom[q * p + r] = mlt;
                excess[p + q] -= mlt * excess[r];
                for l in r + 1..=hi {
                    self.bottom[q * p + l] -= mlt * self.band[self.bidx(r, l)];
                }
                for c in 0..k {
                    if c != q {
                        self.corner[q * k + c] -= mlt * self.right[r * k + c];
                    }
                }
            }
        }
        for q in 0..k {
            let mut piv = excess[p + q];
            for c in q + 1..k {
                piv -= self.corner[q * k + c];
            }
            if !(piv > 0.0) {
                return Err(HjError::InvalidParams(format!(
                    "non-positive pivot {piv:e} at border row {q}"
                )));
            }
            self.pivots[p + q] = piv;
            for j in q + 1..k {
                let a = self.corner[j * k + q];
                if a == 0.0 {
                    continue;
                }
                let mlt = a / piv;
                self.corner[j * k + q] = mlt;
                excess[p + j] -= mlt * excess[p + q];
                for c in q + 1..k {
                    if c != j {
                        self.corner[j * k + c] -= mlt * self.corner[q * k + c];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p + self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (p, k, bw) = (self.p, self.k, self.bw);
        let mut y = b.to_vec();
        for r in 0..p {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for j in r + 1..=(r + bw).min(p - 1) {
                y[j] -= self.band[self.bidx(j, r)] * yr;
            }
            for q in 0..k {
                y[p + q] -= self.bottom[q * p + r] * yr;
            }
        }
        for q in 0..k {
            let yq = y[p + q];
            for j in q + 1..k {
                y[p + j] -= self.corner[j * k + q] * yq;
            }
        }
        let mut x = y;
        for q in (0..k).rev() {
            let mut s = x[p + q];
            for c in q + 1..k {
                s -= self.corner[q * k + c] * x[p + c];
            }
            x[p + q] = s / self.pivots[p + q];
        }
        for r in (0..p).rev() {
            let mut s = x[r];
            for l in r + 1..=(r + bw).min(p - 1) {
                s -= self.band[self.bidx(r, l)] * x[l];
            }
            for c in 0..k {
                s -= self.right[r * k + c] * x[p + c];
            }
            x[r] = s / self.pivots[r];
        }
        x
    }

    /// Solves `A^T x = b` as `U^T z = b`, then `L^T x = z`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let (p, k, bw) = (self.p, self.k, self.bw);
        let mut z = b.to_vec();
        for r in 0..p {
            let zr = z[r] / self.pivots[r];
            z[r] = zr;
            if zr == 0.0 {
                continue;
            }
            for l in r + 1..=(r + bw).min(p - 1) {
                z[l] -= self.band[self.bidx(r, l)] * zr;
            }
            for c in 0..k {
                z[p + c] -= self.right[r * k + c] * zr;
            }
        }
        for q in 0..k {
            let zq = z[p + q] / self.pivots[p + q];
            z[p + q] = zq;
            for c in q + 1..k {
                z[p + c] -= self.corner[q * k + c] * zq;
            }
        }
        let mut x = z;
        for q in (0..k).rev() {
            let mut s = x[p + q];
            for j in q + 1..k {
                s -= self.corner[j * k + q] * x[p + j];
            }
            x[p + q] = s;
        }
        for r in (0..p).rev() {
            let mut s = x[r];
            for j in r + 1..=(r + bw).min(p - 1) {
                s -= self.band[self.bidx(j, r)] * x[j];
            }
            for q in 0..k {
                s -= self.bottom[q * p + r] * x[p + q];
            }
            x[r] = s;
        }
        x
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Direct solve followed by iterative refinement until the normwise backward
/// error `|b - A x| / (|A| |x| + |b|)` is at most [`BACKWARD_ERROR_TOL`].
/// Returns the solution and the backward-error history.
pub fn solve_refined(
    op: &LinearizedOperator,
    lu: &BorderedBandLu,
    b: &[f64],
    transpose: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let norm_a = if transpose { op.norm_one() } else { op.norm_inf() };
    let norm_b = sup(b);
    let solve = |rhs: &[f64]| {
        if transpose {
            lu.solve_transpose(rhs)
        } else {
            lu.solve(rhs)
        }
    };
    let mut x = solve(b);
    let mut history = Vec::new();
    for round in 0..=MAX_REFINEMENTS {
        let ax = if transpose {
            op.apply_transpose(&x)
        } else {
            op.apply(&x)
        };
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let denom = norm_a * sup(&x) + norm_b;
        let berr = if denom > 0.0 { sup(&r) / denom } else { 0.0 };
        if !berr.is_finite() {
            history.push(berr);
            return Err(HjError::SolverStagnation { history });
        }
        history.push(berr);
        if berr <= BACKWARD_ERROR_TOL {
            return Ok((x, history));
        }
        if round == MAX_REFINEMENTS {
            break;
        }
        let dx = solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    Err(HjError::SolverStagnation { history })
}
