//! Monotone upwind discretization of
//! `eps u + H(x, Du) = (a + eta^2) Lap u` on the torus and its stationary
//! solve.
//!
//! The numerical Hamiltonian is the radial upwind flux
//! `G(sum_d max(p-_d,0)^2 + min(p+_d,0)^2) + V(x)` for `H = G(|p|^2) + V`,
//! which is C^1, convex, non-decreasing in `p-` and non-increasing in `p+`.
//! For the quadratic family it coincides with the per-axis Engquist-Osher
//! flux.
//!
//! Solutions are carried as `u = offset + w` with `w` of zero mean, because
//! `u` is of size `c/eps` while all derivatives live in `w`.

use std::time::Instant;

use serde::Serialize;

use crate::adjoint::LinearizedOperator;
use crate::error::{HjError, Result};
use crate::exec;
use crate::grid::{laplacian_at, GridField, TorusGrid};
use crate::hamiltonian::{DiffusionCoefficient, HamiltonianModel, Point};
use crate::linalg::{solve_refined, BorderedBandLu};

/// Upwind flux value.
pub fn numerical_hamiltonian(model: &HamiltonianModel, x: &Point, p_minus: &Point, p_plus: &Point) -> f64 {
    flux(model, model.dim(), p_minus, p_plus).0 + model.potential().value(x)
}

/// Kinetic part of the flux and its partial derivatives in `p-` and `p+`.
#[inline]
fn flux(model: &HamiltonianModel, dim: usize, pm: &Point, pp: &Point) -> (f64, Point, Point) {
    let mut s = 0.0;
    for d in 0..dim {
        let a = pm[d].max(0.0);
        let b = pp[d].min(0.0);
        s += a * a + b * b;
    }
    let slope = 2.0 * model.profile_slope(s);
    let mut dm = [0.0; 2];
    let mut dp = [0.0; 2];
    for d in 0..dim {
        dm[d] = slope * pm[d].max(0.0);
        dp[d] = slope * pp[d].min(0.0);
    }
    (model.profile(s), dm, dp)
}

/// Upwind gradient selection `g_d = max(D-_d u, 0) + min(D+_d u, 0)`.
#[inline]
pub fn upwind_gradient(grid: &TorusGrid, v: &[f64], i: usize) -> Point {
    let inv_h = grid.nodes_per_dim() as f64;
    let mut g = [0.0; 2];
    for d in 0..grid.dim() {
        let pm = (v[i] - v[grid.shift(i, d, -1)]) * inv_h;
        let pp = (v[grid.shift(i, d, 1)] - v[i]) * inv_h;
        g[d] = pm.max(0.0) + pp.min(0.0);
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Semismooth Newton (policy iteration) with direct linear solves.
    Newton,
    /// Explicit monotone pseudo-time marching.
    PseudoTime,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeParams {
    pub eps: f64,
    pub eta: f64,
    pub tol_res: f64,
    pub max_steps: usize,
    pub cfl_safety: f64,
    pub method: SolveMethod,
    /// Evaluation point of `-eps u(x0)` and of the adjoint source.
    pub x0: Point,
}

impl SchemeParams {
    pub fn new(eps: f64, eta: f64) -> Self {
        Self {
            eps,
            eta,
            tol_res: 1e-9,
            max_steps: 200,
            cfl_safety: 0.9,
            method: SolveMethod::Newton,
            x0: [0.0, 0.0],
        }
    }

    pub fn with_eps_eta(&self, eps: f64, eta: f64) -> Self {
        Self {
            eps,
            eta,
            ..self.clone()
        }
    }

    pub fn validate(&self, diffusion: &DiffusionCoefficient) -> Result<()> {
        let bad = |msg: String| Err(HjError::InvalidParams(msg));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be > 0, got {}", self.eps));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be >= 0, got {}", self.eta));
        }
        if !(self.tol_res > 0.0) {
            return bad(format!("tol_res must be > 0, got {}", self.tol_res));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if diffusion.is_degenerate() && self.eta <= 0.0 {
            return bad("eta must be > 0 for a degenerate diffusion".into());
        }
        Ok(())
    }
}

/// How `eta` follows `eps` along a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum EtaRule {
    Fixed(f64),
    EpsSquared,
    /// `eta = factor * eps`
    EpsLinear(f64),
}

impl EtaRule {
    pub fn eta_for(&self, eps: f64) -> f64 {
        match *self {
            EtaRule::Fixed(eta) => eta,
            EtaRule::EpsSquared => eps * eps,
            EtaRule::EpsLinear(k) => k * eps,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// `u = offset + centered`.
    pub solution: GridField,
    pub offset: f64,
    /// Zero-mean part of the solution; all differences are taken from it.
    pub centered: GridField,
    pub iterations: usize,
    pub final_residual: f64,
    /// `max(tol_res, roundoff floor)`, the threshold actually applied.
    pub tolerance_used: f64,
    /// True when the run stopped because the update fell to roundoff level.
    pub floor_limited: bool,
    pub residual_history: Vec<f64>,
    /// `-eps * mean(u)`
    pub c_estimate: f64,
    /// `-eps * u(x0)`
    pub c_at_x0: f64,
    pub x0_node: usize,
    pub eps: f64,
    pub eta: f64,
    /// Seconds.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn grid(&self) -> TorusGrid {
        self.centered.grid()
    }

    pub fn u_at(&self, i: usize) -> f64 {
        self.offset + self.centered.get(i)
    }

    /// `u + c/eps` computed without forming `u`.
    pub fn normalized(&self, c: f64) -> GridField {
        let shift = self.offset + c / self.eps;
        self.centered.add_scalar(shift)
    }
}

/// Node data of the discretized equation.
pub(crate) struct Scheme<'a> {
    pub model: &'a HamiltonianModel,
    pub grid: TorusGrid,
    pub eps: f64,
    pub eta: f64,
    pub potential: Vec<f64>,
    /// `a + eta^2` per node.
    pub diffusion: Vec<f64>,
}

pub(crate) struct NodeFlux {
    pub value: f64,
    pub dminus: Point,
    pub dplus: Point,
}

impl<'a> Scheme<'a> {
    pub fn new(
        model: &'a HamiltonianModel,
        diffusion: &DiffusionCoefficient,
        grid: TorusGrid,
        eps: f64,
        eta: f64,
    ) -> Result<Self> {
        if model.dim() != grid.dim() || diffusion.dim() != grid.dim() {
            return Err(HjError::InvalidParams(format!(
                "dimension mismatch: H in {}-D, a in {}-D, grid in {}-D",
                model.dim(),
                diffusion.dim(),
                grid.dim()
            )));
        }
        let potential = exec::map_range(grid.len(), |i| model.potential().value(&grid.coords(i)));
        let eta2 = eta * eta;
        let diffusion = exec::map_range(grid.len(), |i| {
            diffusion.value(&grid.coords(i)).max(0.0) + eta2
        });
        Ok(Self {
            model,
            grid,
            eps,
            eta,
            potential,
            diffusion,
        })
    }

    #[inline]
    pub fn node_flux(&self, w: &[f64], i: usize) -> NodeFlux {
        let g = &self.grid;
        let inv_h = g.nodes_per_dim() as f64;
        let mut pm = [0.0; 2];
        let mut pp = [0.0; 2];
        for d in 0..g.dim() {
            pm[d] = (w[i] - w[g.shift(i, d, -1)]) * inv_h;
            pp[d] = (w[g.shift(i, d, 1)] - w[i]) * inv_h;
        }
        let (kin, dminus, dplus) = flux(self.model, g.dim(), &pm, &pp);
        NodeFlux {
            value: kin + self.potential[i],
            dminus,
            dplus,
        }
    }

    /// `eps (offset + w_i) + H^(Dw) - (a + eta^2) Lap_h w`
    pub fn residual(&self, offset: f64, w: &[f64]) -> Vec<f64> {
        let zeroth = self.eps * offset;
        exec::map_range(self.grid.len(), |i| {
            let f = self.node_flux(w, i);
            zeroth + self.eps * w[i] + f.value - self.diffusion[i] * laplacian_at(&self.grid, w, i)
        })
    }

    pub fn linearize(&self, w: &[f64]) -> LinearizedOperator {
        let g = self.grid;
        let dim = g.dim();
        let inv_h = g.nodes_per_dim() as f64;
        let inv_h2 = inv_h * inv_h;
        let rows = exec::map_range(g.len(), |i| {
            let f = self.node_flux(w, i);
            let diff = self.diffusion[i] * inv_h2;
            let mut c = [0.0; 4];
            for d in 0..dim {
                c[2 * d] = f.dminus[d] * inv_h + diff;
                c[2 * d + 1] = -f.dplus[d] * inv_h + diff;
            }
            c
        });
        let mut couplings = Vec::with_capacity(g.len() * 2 * dim);
        for c in rows {
            couplings.extend_from_slice(&c[..2 * dim]);
        }
        LinearizedOperator::from_parts(g, self.eps, self.eta, vec![self.eps; g.len()], couplings)
    }

    /// Scale of the roundoff in one residual evaluation.
    fn roundoff_floor(&self, offset: f64, w: &[f64], op: &LinearizedOperator) -> f64 {
        let wmax = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let vmax = self.potential.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        8.0 * f64::EPSILON * ((self.eps * offset).abs() + vmax + op.max_diagonal() * wmax)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Starting point for a solve, usually the solution at a nearby `eps`.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub offset: f64,
    pub centered: GridField,
    pub eps: f64,
}

impl From<&SolveReport> for WarmStart {
    fn from(r: &SolveReport) -> Self {
        Self {
            offset: r.offset,
            centered: r.centered.clone(),
            eps: r.eps,
        }
    }
}

pub fn solve_discounted(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    params: &SchemeParams,
) -> Result<SolveReport> {
    solve_discounted_from(model, diffusion, grid, params, None)
}

/// As [`solve_discounted`], starting from `warm` (rescaled so that
/// `eps * offset` is preserved). A warm start on another grid is interpolated.
pub fn solve_discounted_from(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    params: &SchemeParams,
    warm: Option<&WarmStart>,
) -> Result<SolveReport> {
    params.validate(diffusion)?;
    let start = Instant::now();
    let scheme = Scheme::new(model, diffusion, grid, params.eps, params.eta)?;
    let (mut offset, mut w) = match warm {
        Some(ws) => {
            let w = if ws.centered.grid() == grid {
                ws.centered.values().to_vec()
            } else {
                let mut v: Vec<f64> = (0..grid.len())
                    .map(|i| ws.centered.interpolate(&grid.coords(i)))
                    .collect();
                let m = mean(&v);
                v.iter_mut().for_each(|x| *x -= m);
                v
            };
            (ws.offset * ws.eps / params.eps, w)
        }
        None => (-mean(&scheme.potential) / params.eps, vec![0.0; grid.len()]),
    };

    let outcome = match params.method {
        SolveMethod::Newton => newton(&scheme, params, &mut offset, &mut w)?,
        SolveMethod::PseudoTime => pseudo_time(&scheme, params, &mut offset, &mut w)?,
    };

    let x0_node = grid.nearest_node(&params.x0);
    let centered = GridField::new(grid, w)?;
    let solution = centered.add_scalar(offset);
    let c_estimate = -params.eps * (offset + centered.mean());
    let c_at_x0 = -params.eps * (offset + centered.get(x0_node));
    Ok(SolveReport {
        solution,
        offset,
        centered,
        iterations: outcome.iterations,
        final_residual: *outcome.history.last().unwrap_or(&0.0),
        tolerance_used: outcome.tolerance,
        floor_limited: outcome.floor_limited,
        residual_history: outcome.history,
        c_estimate,
        c_at_x0,
        x0_node,
        eps: params.eps,
        eta: params.eta,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

struct Outcome {
    iterations: usize,
    history: Vec<f64>,
    tolerance: f64,
    floor_limited: bool,
}

/// Moves the mean of `w` into `offset`.
fn recenter(offset: &mut f64, w: &mut [f64]) {
    let m = mean(w);
    *offset += m;
    w.iter_mut().for_each(|x| *x -= m);
}

const STALL_LIMIT: usize = 10;

fn newton(scheme: &Scheme, params: &SchemeParams, offset: &mut f64, w: &mut Vec<f64>) -> Result<Outcome> {
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    let mut stall = 0;
    let mut iterations = 0;
    loop {
        let r = scheme.residual(*offset, w);
        let res = sup(&r);
        history.push(res);
        if !res.is_finite() {
            return Err(HjError::Unstable { step: iterations });
        }
        let op = scheme.linearize(w);
        let tolerance = params.tol_res.max(scheme.roundoff_floor(*offset, w, &op));
        if res <= tolerance {
            return Ok(Outcome {
                iterations,
                history,
                tolerance,
                floor_limited: false,
            });
        }
        // after a cold start the first step can overshoot by orders of
        // magnitude; from there the residual decreases monotonically
        if res < prev {
            stall = 0;
        } else {
            stall += 1;
        }
        prev = res;
        if iterations >= params.max_steps || stall >= STALL_LIMIT {
            return Err(HjError::NotConverged {
                steps: iterations,
                residual: res,
                history,
            });
        }
        let lu = BorderedBandLu::factor(&op)?;
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let (delta, _) = solve_refined(&op, &lu, &rhs, false)?;
        iterations += 1;
        let dm = mean(&delta);
        let mut dmax = 0.0f64;
        for (wi, di) in w.iter_mut().zip(&delta) {
            let d = di - dm;
            dmax = dmax.max(d.abs());
            *wi += d;
        }
        *offset += dm;
        recenter(offset, w);
        if w.iter().any(|x| !x.is_finite()) || !offset.is_finite() {
            return Err(HjError::Unstable { step: iterations });
        }
        let at_roundoff = dmax <= 64.0 * f64::EPSILON * sup(w).max(1.0)
            && dm.abs() <= 64.0 * f64::EPSILON * offset.abs().max(1.0);
        if at_roundoff {
            let r = scheme.residual(*offset, w);
            let res = sup(&r);
            history.push(res);
            let op = scheme.linearize(w);
            let tolerance = params.tol_res.max(scheme.roundoff_floor(*offset, w, &op));
            return Ok(Outcome {
                iterations,
                history,
                tolerance,
                floor_limited: res > tolerance,
            });
        }
    }
}

fn pseudo_time(scheme: &Scheme, params: &SchemeParams, offset: &mut f64, w: &mut Vec<f64>) -> Result<Outcome> {
    let mut history = Vec::new();
    let mut step = 0;
    loop {
        let r = scheme.residual(*offset, w);
        let res = sup(&r);
        if !res.is_finite() {
            return Err(HjError::Unstable { step });
        }
        let op = scheme.linearize(w);
        let tolerance = params.tol_res.max(scheme.roundoff_floor(*offset, w, &op));
        // the history is thinned so that long marches stay cheap to report
        if step % 100 == 0 || res <= tolerance {
            history.push(res);
        }
        if res <= tolerance {
            return Ok(Outcome {
                iterations: step,
                history,
                tolerance,
                floor_limited: false,
            });
        }
        if step >= params.max_steps {
            history.push(res);
            return Err(HjError::NotConverged {
                steps: step,
                residual: res,
                history,
            });
        }
        let dt = params.cfl_safety / op.max_diagonal();
        for (wi, ri) in w.iter_mut().zip(&r) {
            *wi -= dt * ri;
        }
        recenter(offset, w);
        step += 1;
    }
}

/// Solves along a decreasing `eps` sequence, warm-starting each solve from
/// the previous one.
pub fn solve_sweep(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    eps_sequence: &[f64],
    eta_rule: EtaRule,
    base: &SchemeParams,
) -> Result<Vec<SolveReport>> {
    let mut out: Vec<SolveReport> = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let params = base.with_eps_eta(eps, eta_rule.eta_for(eps));
        let warm = out.last().map(WarmStart::from);
        out.push(solve_discounted_from(model, diffusion, grid, &params, warm.as_ref())?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicRow {
    pub eps: f64,
    pub c_estimate: f64,
    pub c_at_x0: f64,
    /// Extrapolation from this row and the previous one.
    pub richardson: Option<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicEstimate {
    pub c: f64,
    pub table: Vec<ErgodicRow>,
}

fn check_decreasing(seq: &[f64], min_len: usize) -> Result<()> {
    if seq.len() < min_len {
        return Err(HjError::InvalidParams(format!(
            "eps sequence needs at least {min_len} entries, got {}",
            seq.len()
        )));
    }
    if seq.windows(2).any(|p| p[1] >= p[0]) || seq.iter().any(|e| !(*e > 0.0)) {
        return Err(HjError::InvalidParams(
            "eps sequence must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Richardson limit of `-eps mean(u)` assuming first-order behavior in
/// `eps`, from the last two entries.
pub fn estimate_ergodic_constant(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    eps_sequence: &[f64],
    eta: f64,
    base: &SchemeParams,
) -> Result<ErgodicEstimate> {
    check_decreasing(eps_sequence, 3)?;
    let reports = solve_sweep(model, diffusion, grid, eps_sequence, EtaRule::Fixed(eta), base)?;
    Ok(ergodic_table(&reports))
}

fn richardson(e0: f64, c0: f64, e1: f64, c1: f64) -> f64 {
    (e0 * c1 - e1 * c0) / (e0 - e1)
}

fn ergodic_table(reports: &[SolveReport]) -> ErgodicEstimate {
    let mut table: Vec<ErgodicRow> = Vec::with_capacity(reports.len());
    for (k, r) in reports.iter().enumerate() {
        let rich = (k > 0).then(|| {
            let p = &reports[k - 1];
            richardson(p.eps, p.c_estimate, r.eps, r.c_estimate)
        });
        table.push(ErgodicRow {
            eps: r.eps,
            c_estimate: r.c_estimate,
            c_at_x0: r.c_at_x0,
            richardson: rich,
            iterations: r.iterations,
        });
    }
    let c = table.last().and_then(|r| r.richardson).unwrap_or(f64::NAN);
    ErgodicEstimate { c, table }
}

/// Continuation path used to reach the discrete ergodic limit.
pub const ERGODIC_PATH: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 5e-6];

/// Ergodic constant of the discrete scheme itself at fixed `(grid, eta)`:
/// the `eps -> 0` limit of `-eps mean(u)` by Richardson at very small `eps`,
/// where the extrapolation error is far below the discretization error.
pub fn discrete_ergodic_constant(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    eta: f64,
    base: &SchemeParams,
) -> Result<ErgodicEstimate> {
    ergodic_limit(model, diffusion, grid, eta, base).map(|(est, _)| est)
}

/// As [`discrete_ergodic_constant`], also returning the solve at the end of
/// the continuation path.
pub fn ergodic_limit(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    eta: f64,
    base: &SchemeParams,
) -> Result<(ErgodicEstimate, SolveReport)> {
    let mut reports = solve_sweep(model, diffusion, grid, &ERGODIC_PATH, EtaRule::Fixed(eta), base)?;
    let est = ergodic_table(&reports);
    let last = reports.pop().expect("non-empty path");
    Ok((est, last))
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionRow {
    pub eps: f64,
    pub eta: f64,
    pub iterations: usize,
    pub residual: f64,
    pub c_estimate: f64,
    /// `|| u^{eps_prev} - u^{eps} ||_inf` after normalization; absent on the first level.
    pub cauchy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SelectionResult {
    /// Normalized `u + c/eps` at the smallest `eps`.
    pub u0: GridField,
    pub c: f64,
    pub table: Vec<SelectionRow>,
    pub reports: Vec<SolveReport>,
    pub converged: bool,
}

impl SelectionResult {
    pub fn cauchy_differences(&self) -> Vec<f64> {
        self.table.iter().filter_map(|r| r.cauchy).collect()
    }
}

/// True when the last two Cauchy differences decrease (three levels), or
/// both vanish.
pub fn cauchy_trend(diffs: &[f64]) -> bool {
    match diffs {
        [.., a, b] => b < a || (*a == 0.0 && *b == 0.0),
        _ => false,
    }
}

/// Runs the geometric `eps` sweep, normalizes each solution by the discrete
/// ergodic constant at the finest `eta`, and tabulates sup-norm Cauchy
/// differences. Does not judge the trend; see [`selection_limit`].
pub fn selection_sweep(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    eps_sequence: &[f64],
    eta_rule: EtaRule,
    base: &SchemeParams,
) -> Result<SelectionResult> {
    check_decreasing(eps_sequence, 3)?;
    for p in eps_sequence.windows(2) {
        if ((p[0] / p[1]) - 2.0).abs() > 1e-9 {
            return Err(HjError::InvalidParams(
                "selection needs a halving eps sequence".into(),
            ));
        }
    }
    let reports = solve_sweep(model, diffusion, grid, eps_sequence, eta_rule, base)?;
    let eta_min = eta_rule.eta_for(*eps_sequence.last().unwrap());
    let c = discrete_ergodic_constant(model, diffusion, grid, eta_min, base)?.c;
    Ok(assemble_selection(reports, c))
}

pub(crate) fn assemble_selection(reports: Vec<SolveReport>, c: f64) -> SelectionResult {
    let normalized: Vec<GridField> = reports.iter().map(|r| r.normalized(c)).collect();
    let table: Vec<SelectionRow> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| SelectionRow {
            eps: r.eps,
            eta: r.eta,
            iterations: r.iterations,
            residual: r.final_residual,
            c_estimate: r.c_estimate,
            cauchy: (k > 0).then(|| normalized[k - 1].sup_distance(&normalized[k])),
        })
        .collect();
    let diffs: Vec<f64> = table.iter().filter_map(|r| r.cauchy).collect();
    SelectionResult {
        u0: normalized.last().cloned().expect("non-empty sweep"),
        c,
        converged: cauchy_trend(&diffs),
        table,
        reports,
    }
}

/// [`selection_sweep`] that fails with "no convergence trend" when the
/// Cauchy differences do not decrease over the last three levels.
pub fn selection_limit(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    grid: TorusGrid,
    eps_sequence: &[f64],
    eta_rule: EtaRule,
    base: &SchemeParams,
) -> Result<SelectionResult> {
    let res = selection_sweep(model, diffusion, grid, eps_sequence, eta_rule, base)?;
    if !res.converged {
        return Err(HjError::NoConvergenceTrend {
            diffs: res.cauchy_differences(),
        });
    }
    Ok(res)
}
