//! Linearization of the discrete scheme and its transposed (adjoint) solve.

use crate::error::{HjError, Result};
use crate::exec;
use crate::grid::{GridField, TestFunction, TorusGrid};
use crate::hamiltonian::{dot, DiffusionCoefficient, HamiltonianModel};
use crate::linalg::{solve_refined, BorderedBandLu};
use crate::solver::{upwind_gradient, Scheme, SchemeParams, SolveReport};

/// Sparse M-matrix `(L v)_i = e_i v_i + sum_j c_ij (v_i - v_j)` over the
/// `2 dim` nearest neighbours, with couplings `c_ij >= 0` stored per row in
/// the order `[axis 0 minus, axis 0 plus, axis 1 minus, axis 1 plus]`.
///
/// For the linearized scheme `e_i = eps`, the minus coupling is
/// `dH/dp-/h + (a + eta^2)/h^2` and the plus coupling `-dH/dp+/h + (a + eta^2)/h^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedOperator {
    grid: TorusGrid,
    eps: f64,
    eta: f64,
    excess: Vec<f64>,
    couplings: Vec<f64>,
}

impl LinearizedOperator {
    pub(crate) fn from_parts(grid: TorusGrid, eps: f64, eta: f64, excess: Vec<f64>, couplings: Vec<f64>) -> Self {
        debug_assert_eq!(couplings.len(), grid.len() * 2 * grid.dim());
        Self {
            grid,
            eps,
            eta,
            excess,
            couplings,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.excess.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excess.is_empty()
    }

    /// Row sums of the matrix.
    pub fn excess(&self) -> &[f64] {
        &self.excess
    }

    fn slots(&self) -> usize {
        2 * self.grid.dim()
    }

    pub fn couplings(&self, i: usize) -> &[f64] {
        let s = self.slots();
        &self.couplings[i * s..(i + 1) * s]
    }

    #[inline]
    pub fn neighbor(&self, i: usize, slot: usize) -> usize {
        let step = if slot % 2 == 0 { -1 } else { 1 };
        self.grid.shift(i, slot / 2, step)
    }

    /// Off-diagonal couplings of row `i` as `(column, magnitude)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.couplings(i)
            .iter()
            .enumerate()
            .map(move |(s, &c)| (self.neighbor(i, s), c))
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.excess[i] + self.couplings(i).iter().sum::<f64>()
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.len()).fold(0.0f64, |m, i| m.max(self.diagonal(i)))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        exec::map_range(self.len(), |i| {
            let mut s = self.excess[i] * v[i];
            for (j, c) in self.row(i) {
                s += c * (v[i] - v[j]);
            }
            s
        })
    }

    /// `(L^T v)_j = diag_j v_j - sum_i c_ij v_i`, gathered from the rows that
    /// couple into `j`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let dim = self.grid.dim();
        exec::map_range(self.len(), |j| {
            let mut s = self.diagonal(j) * v[j];
            for d in 0..dim {
                let right = self.grid.shift(j, d, 1);
                let left = self.grid.shift(j, d, -1);
                s -= self.couplings(right)[2 * d] * v[right];
                s -= self.couplings(left)[2 * d + 1] * v[left];
            }
            s
        })
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.len()).fold(0.0f64, |m, i| {
            m.max(self.diagonal(i) + self.couplings(i).iter().sum::<f64>())
        })
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let dim = self.grid.dim();
        (0..self.len()).fold(0.0f64, |m, j| {
            let mut s = self.diagonal(j);
            for d in 0..dim {
                s += self.couplings(self.grid.shift(j, d, 1))[2 * d];
                s += self.couplings(self.grid.shift(j, d, -1))[2 * d + 1];
            }
            m.max(s)
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += self.diagonal(i);
            for (j, c) in self.row(i) {
                row[j] -= c;
            }
        }
        a
    }

    /// Non-positive off-diagonals, positive diagonal, non-negative row excess.
    pub fn check_signs(&self) -> Result<()> {
        for i in 0..self.len() {
            if !(self.excess[i] >= 0.0) {
                return Err(HjError::SignViolation {
                    row: i,
                    col: i,
                    value: self.excess[i],
                });
            }
            for (j, c) in self.row(i) {
                if !(c >= 0.0) {
                    return Err(HjError::SignViolation {
                        row: i,
                        col: j,
                        value: -c,
                    });
                }
            }
            if !(self.diagonal(i) > 0.0) {
                return Err(HjError::SignViolation {
                    row: i,
                    col: i,
                    value: self.diagonal(i),
                });
            }
        }
        Ok(())
    }
}

/// Linearizes the scheme at `u`; only differences of `u` enter, so the
/// centered part of a [`SolveReport`] gives the same operator.
pub fn assemble_linearization(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    u: &GridField,
    params: &SchemeParams,
) -> Result<LinearizedOperator> {
    params.validate(diffusion)?;
    if u.grid() != grid {
        return Err(HjError::InvalidParams("field and grid differ".into()));
    }
    let scheme = Scheme::new(model, diffusion, grid, params.eps, params.eta)?;
    let op = scheme.linearize(u.values());
    op.check_signs()?;
    Ok(op)
}

/// Nonlinear scheme residual at `u`, for directional-derivative checks.
pub fn scheme_residual(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    u: &GridField,
    params: &SchemeParams,
) -> Result<Vec<f64>> {
    let scheme = Scheme::new(model, diffusion, u.grid(), params.eps, params.eta)?;
    Ok(scheme.residual(0.0, u.values()))
}

#[derive(Clone, Debug)]
pub struct AdjointDensity {
    pub theta: GridField,
    pub source_node: usize,
    pub eps: f64,
    pub eta: f64,
    pub backward_error: Vec<f64>,
}

impl AdjointDensity {
    /// `sum theta_i h^n`
    pub fn mass(&self) -> f64 {
        crate::grid::integrate(&self.theta)
    }

    pub fn min(&self) -> f64 {
        self.theta.min()
    }

    /// Mass within torus distance `r` of `x`.
    pub fn mass_near(&self, x: &crate::hamiltonian::Point, r: f64) -> f64 {
        let g = self.theta.grid();
        let vol = g.cell_volume();
        (0..g.len())
            .filter(|&i| g.torus_distance(&g.coords(i), x) <= r)
            .map(|i| self.theta.get(i) * vol)
            .sum()
    }
}

/// Solves `L^T theta = (eps/h^n) e_{x0}`.
pub fn solve_adjoint(op: &LinearizedOperator, x0_node: usize) -> Result<AdjointDensity> {
    let g = op.grid();
    if x0_node >= g.len() {
        return Err(HjError::InvalidParams(format!("source node {x0_node} out of range")));
    }
    let mut b = vec![0.0; g.len()];
    b[x0_node] = op.eps() / g.cell_volume();
    let lu = BorderedBandLu::factor(op)?;
    let (theta, history) = solve_refined(op, &lu, &b, true)?;
    Ok(AdjointDensity {
        theta: GridField::new(g, theta)?,
        source_node: x0_node,
        eps: op.eps(),
        eta: op.eta(),
        backward_error: history,
    })
}

/// `|<L f, g> - <f, L^T g>|` relative to `sum_ij |g_i| |L_ij| |f_j|`.
pub fn transpose_defect(op: &LinearizedOperator, f: &[f64], g: &[f64]) -> f64 {
    let lf = op.apply(f);
    let ltg = op.apply_transpose(g);
    let lhs: f64 = lf.iter().zip(g).map(|(a, b)| a * b).sum();
    let rhs: f64 = f.iter().zip(&ltg).map(|(a, b)| a * b).sum();
    let mut scale = 0.0;
    for i in 0..op.len() {
        scale += g[i].abs() * op.diagonal(i) * f[i].abs();
        for (j, c) in op.row(i) {
            scale += g[i].abs() * c * f[j].abs();
        }
    }
    if scale == 0.0 {
        (lhs - rhs).abs()
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// `|eps u(x0) - sum_i (D_pH(g_i).g_i - H(x_i, g_i)) theta_i h^n|` with `g`
/// the upwind gradient selection.
pub fn duality_check(model: &HamiltonianModel, report: &SolveReport, adj: &AdjointDensity) -> f64 {
    let g = report.grid();
    let w = report.centered.values();
    let dim = g.dim();
    let vol = g.cell_volume();
    let terms = exec::map_range(g.len(), |i| {
        let x = g.coords(i);
        let p = upwind_gradient(&g, w, i);
        let dp = model.grad_p(&x, &p);
        (dot(dim, &dp, &p) - model.eval(&x, &p)) * adj.theta.get(i) * vol
    });
    let pairing: f64 = terms.iter().sum();
    (report.eps * report.u_at(adj.source_node) - pairing).abs()
}

/// Pre-limit holonomy defect for one test function:
/// `|sum (b.Dphi - a Lap phi) theta h^n - eps phi(x0) + eps sum phi theta h^n - eta^2 sum Lap phi theta h^n|`
/// with `b = D_pH(x, g)` the upwind velocity.
pub fn adjoint_holonomy_defect(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    report: &SolveReport,
    adj: &AdjointDensity,
    phi: &TestFunction,
) -> f64 {
    let g = report.grid();
    let w = report.centered.values();
    let dim = g.dim();
    let vol = g.cell_volume();
    let eta2 = adj.eta * adj.eta;
    let terms = exec::map_range(g.len(), |i| {
        let x = g.coords(i);
        let b = model.grad_p(&x, &upwind_gradient(&g, w, i));
        let lap = phi.laplacian(&x);
        let t = adj.theta.get(i) * vol;
        let transport = (dot(dim, &b, &phi.gradient(&x)) - diffusion.value(&x) * lap) * t;
        transport + adj.eps * phi.value(&x) * t - eta2 * lap * t
    });
    let total: f64 = terms.iter().sum();
    let x0 = g.coords(adj.source_node);
    (total - adj.eps * phi.value(&x0)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::solver::solve_discounted;

    #[test]
    fn zero_potential_gives_pure_diffusion_operator() {
        let inst = instances::trivial(1);
        let g = TorusGrid::new(1, 16).unwrap();
        let p = SchemeParams::new(0.1, 0.2);
        let op = assemble_linearization(&inst.model, &inst.diffusion, g, &GridField::zeros(g), &p).unwrap();
        let k = (1.0 + 0.04) * 256.0;
        for i in 0..g.len() {
            assert_eq!(op.couplings(i), &[k, k]);
            assert_eq!(op.diagonal(i), 0.1 + 2.0 * k);
        }
    }

    #[test]
    fn constants_map_to_eps() {
        let inst = instances::degenerate(2);
        let g = TorusGrid::new(2, 16).unwrap();
        let p = SchemeParams::new(0.05, 0.1);
        let r = solve_discounted(&inst.model, &inst.diffusion, g, &p).unwrap();
        let op = assemble_linearization(&inst.model, &inst.diffusion, g, &r.centered, &p).unwrap();
        assert!(op.apply(&vec![1.0; g.len()]).iter().all(|&v| v == 0.05));
    }

    #[test]
    fn sign_violation_is_reported() {
        let g = TorusGrid::new(1, 8).unwrap();
        let mut c = vec![1.0; 16];
        c[5] = -0.5;
        let op = LinearizedOperator::from_parts(g, 0.1, 0.0, vec![0.1; 8], c);
        match op.check_signs() {
            Err(HjError::SignViolation { row, col, .. }) => assert_eq!((row, col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn adjoint_mass_and_positivity() {
        let inst = instances::uniform(1);
        let g = TorusGrid::new(1, 256).unwrap();
        let p = SchemeParams::new(0.01, 0.01);
        let r = solve_discounted(&inst.model, &inst.diffusion, g, &p).unwrap();
        let op = assemble_linearization(&inst.model, &inst.diffusion, g, &r.centered, &p).unwrap();
        let adj = solve_adjoint(&op, 0).unwrap();
        assert!((adj.mass() - 1.0).abs() < 1e-12);
        assert!(adj.min() >= 0.0);
        // nonzero only at local maxima of u, where the flux sees both one-sided slopes
        let gap = duality_check(&inst.model, &r, &adj);
        assert!(gap < 1e-6 * (r.eps * r.u_at(0)).abs().max(1.0), "{gap:e}");
    }
}
