//! Mollified solutions as approximate subsolutions: the residual `S^eta`,
//! its split, and rate measurements over a ladder of radii.

use serde::Serialize;

use crate::error::Result;
use crate::exec;
use crate::grid::{
    diff_centered, laplacian, mollify, mollify_derivatives, GridField, MollifierKernel,
};
use crate::hamiltonian::{DiffusionCoefficient, HamiltonianModel, Point};
use crate::solver::SolveReport;

/// Zeroth-order term of the equation being tested.
#[derive(Clone, Debug, PartialEq)]
pub enum ZerothOrder {
    /// `H(x, Dw) - a Lap w - c`
    ErgodicConstant(f64),
    /// `eps u + H(x, Dw) - a Lap w`; holds the field `eps u`.
    Discount(GridField),
}

impl ZerothOrder {
    /// `eps u` from a discounted solve.
    pub fn from_report(r: &SolveReport) -> Self {
        let (eps, off) = (r.eps, r.offset);
        ZerothOrder::Discount(r.centered.map(|w| eps * (off + w)))
    }

    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            ZerothOrder::ErgodicConstant(c) => -c,
            ZerothOrder::Discount(f) => f.get(i),
        }
    }

    fn field(&self, like: &GridField) -> GridField {
        match self {
            ZerothOrder::ErgodicConstant(c) => GridField::constant(like.grid(), -c),
            ZerothOrder::Discount(f) => f.clone(),
        }
    }
}

/// `S(x) = z(x) + H(x, Dw^eta) - a(x) Lap w^eta`, with centered differences
/// of the mollified field.
pub fn subsolution_residual(
    w: &GridField,
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    zeroth: &ZerothOrder,
    kernel: &MollifierKernel,
) -> Result<GridField> {
    let der = mollify_derivatives(w, kernel)?;
    let g = w.grid();
    let dim = g.dim();
    Ok(GridField::from_vec(
        g,
        exec::map_range(g.len(), |i| {
            let x = g.coords(i);
            let mut p = [0.0; 2];
            for (d, pd) in p.iter_mut().enumerate().take(dim) {
                *pd = der.gradient[d].get(i);
            }
            zeroth.at(i) + model.eval(&x, &p) - diffusion.value(&x) * der.laplacian.get(i)
        }),
    ))
}

/// Node-wise `z + H(x, D_c w) - a Lap_h w` with centered differences.
pub fn ae_residual(
    w: &GridField,
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    zeroth: &ZerothOrder,
) -> GridField {
    let g = w.grid();
    let grads: Vec<GridField> = (0..g.dim()).map(|d| diff_centered(w, d)).collect();
    let lap = laplacian(w);
    GridField::from_vec(
        g,
        exec::map_range(g.len(), |i| {
            let x = g.coords(i);
            let mut p = [0.0; 2];
            for (d, gd) in grads.iter().enumerate() {
                p[d] = gd.get(i);
            }
            zeroth.at(i) + model.eval(&x, &p) - diffusion.value(&x) * lap.get(i)
        }),
    )
}

/// `S = R1 + R2 + R0` with
/// `R1 = H(x, Dw^eta) - (H(., D_c w))^eta`,
/// `R2 = (a Lap_h w)^eta - a Lap w^eta`,
/// `R0 = (z + H(., D_c w) - a Lap_h w)^eta + z - z^eta`, the mollified
/// pointwise residual.
#[derive(Clone, Debug)]
pub struct ResidualSplit {
    pub s: GridField,
    pub r1: GridField,
    pub r2: GridField,
    pub r0: GridField,
}

impl ResidualSplit {
    /// `max |S - (R1 + R2 + R0)|`
    pub fn identity_defect(&self) -> f64 {
        (0..self.s.grid().len()).fold(0.0f64, |m, i| {
            m.max((self.s.get(i) - self.r1.get(i) - self.r2.get(i) - self.r0.get(i)).abs())
        })
    }

    /// Node-wise `|S| <= |R1| + |R2| + |R0| + 1e-8`.
    pub fn triangle_holds(&self) -> bool {
        (0..self.s.grid().len()).all(|i| {
            self.s.get(i).abs()
                <= self.r1.get(i).abs() + self.r2.get(i).abs() + self.r0.get(i).abs() + 1e-8
        })
    }
}

pub fn residual_split(
    w: &GridField,
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    zeroth: &ZerothOrder,
    kernel: &MollifierKernel,
) -> Result<ResidualSplit> {
    let g = w.grid();
    let s = subsolution_residual(w, model, diffusion, zeroth, kernel)?;
    let der = mollify_derivatives(w, kernel)?;
    let grads: Vec<GridField> = (0..g.dim()).map(|d| diff_centered(w, d)).collect();
    let lap = laplacian(w);
    let pointwise_h = GridField::from_vec(
        g,
        exec::map_range(g.len(), |i| {
            let x = g.coords(i);
            let mut p = [0.0; 2];
            for (d, gd) in grads.iter().enumerate() {
                p[d] = gd.get(i);
            }
            model.eval(&x, &p)
        }),
    );
    let a_lap = GridField::from_vec(
        g,
        exec::map_range(g.len(), |i| diffusion.value(&g.coords(i)) * lap.get(i)),
    );
    let z = zeroth.field(w);
    let ae = GridField::from_vec(
        g,
        (0..g.len())
            .map(|i| z.get(i) + pointwise_h.get(i) - a_lap.get(i))
            .collect(),
    );
    let h_moll = mollify(&pointwise_h, kernel)?;
    let a_lap_moll = mollify(&a_lap, kernel)?;
    let ae_moll = mollify(&ae, kernel)?;
    let z_moll = mollify(&z, kernel)?;
    let mut r1 = Vec::with_capacity(g.len());
    let mut r2 = Vec::with_capacity(g.len());
    let mut r0 = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let x = g.coords(i);
        let mut p = [0.0; 2];
        for (d, pd) in p.iter_mut().enumerate().take(g.dim()) {
            *pd = der.gradient[d].get(i);
        }
        r1.push(model.eval(&x, &p) - h_moll.get(i));
        r2.push(a_lap_moll.get(i) - diffusion.value(&x) * der.laplacian.get(i));
        r0.push(ae_moll.get(i) + z.get(i) - z_moll.get(i));
    }
    Ok(ResidualSplit {
        s,
        r1: GridField::from_vec(g, r1),
        r2: GridField::from_vec(g, r2),
        r0: GridField::from_vec(g, r0),
    })
}

/// Least-squares slope of `log y` against `log x`; `NaN` if any `y <= 0`
/// or fewer than two points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 || x.len() != y.len() || y.iter().any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LaplacianBoundRow {
    pub eta: f64,
    /// `|| eta^2 Lap w^eta ||_inf`
    pub eta2_lap: f64,
    /// `eta2_lap / eta`
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LaplacianBoundTable {
    pub rows: Vec<LaplacianBoundRow>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Largest `ratio(eta) / max ratio over larger eta` down the ladder.
    /// The bound is one-sided: for smooth `w` the ratio tends to zero.
    pub growth: f64,
    /// `growth <= 2`.
    pub bounded: bool,
}

pub fn eta_sq_laplacian_bound(w: &GridField, kernels: &[MollifierKernel]) -> Result<LaplacianBoundTable> {
    let rows = exec::map_items(kernels, |k| -> Result<LaplacianBoundRow> {
        let d = mollify_derivatives(w, k)?;
        let e = k.eta();
        let v = e * e * d.laplacian.max_abs();
        Ok(LaplacianBoundRow {
            eta: e,
            eta2_lap: v,
            ratio: v / e,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let med = median(&ratios);
    let max_ratio = ratios.iter().fold(0.0f64, |m, r| m.max(*r));
    let mut by_eta: Vec<(f64, f64)> = rows.iter().map(|r| (r.eta, r.ratio)).collect();
    by_eta.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut growth = 1.0f64;
    let mut coarse = by_eta.first().map_or(0.0, |r| r.1);
    for &(_, r) in by_eta.iter().skip(1) {
        if coarse > 0.0 {
            growth = growth.max(r / coarse);
        } else if r > 0.0 {
            growth = f64::INFINITY;
        }
        coarse = coarse.max(r);
    }
    Ok(LaplacianBoundTable {
        rows,
        max_ratio,
        median_ratio: med,
        growth,
        bounded: growth <= 2.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutationRow {
    pub eta: f64,
    pub max_abs_s: f64,
    pub max_s: f64,
    /// One-sided: `max R1`.
    pub max_r1: f64,
    pub max_abs_r2: f64,
    pub max_abs_r0: f64,
    pub eta2_lap: f64,
    pub split_defect: f64,
    pub triangle_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeTrace {
    pub probe: Point,
    pub node: usize,
    pub eta: Vec<f64>,
    pub s: Vec<f64>,
    pub r2: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    pub rows: Vec<CommutationRow>,
    /// Fitted slope of `log ||S^eta||_inf` against `log eta`.
    pub slope: f64,
    /// Fitted slope of `log ||R2^eta||_inf`; `NaN` when `R2` vanishes.
    pub slope_r2: f64,
    /// Extremes of the unmollified a.e. residual.
    pub ae_min: f64,
    pub ae_max: f64,
    pub probes: Vec<ProbeTrace>,
}

impl CommutationReport {
    pub fn etas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eta).collect()
    }

    pub fn max_abs_s(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_abs_s).collect()
    }

    /// True when the a.e. residual drops below `-tau` somewhere, as it does
    /// at concave kinks. There `S^eta` stays O(1) negative for every radius,
    /// which the one-sided lemma allows, and only `R2` carries the rate.
    pub fn kinked(&self, tau: f64) -> bool {
        self.ae_min < -tau
    }
}

/// Residual split for every radius in `etas`, the fitted rate and the
/// pointwise traces at `probes`.
pub fn commutation_study(
    w: &GridField,
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    zeroth: &ZerothOrder,
    etas: &[f64],
    probes: &[Point],
) -> Result<CommutationReport> {
    let g = w.grid();
    let kernels = etas
        .iter()
        .map(|&e| MollifierKernel::new(g, e))
        .collect::<Result<Vec<_>>>()?;
    let splits = exec::map_items(&kernels, |k| -> Result<(ResidualSplit, f64)> {
        let sp = residual_split(w, model, diffusion, zeroth, k)?;
        let d = mollify_derivatives(w, k)?;
        Ok((sp, k.eta() * k.eta() * d.laplacian.max_abs()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows: Vec<CommutationRow> = splits
        .iter()
        .zip(etas)
        .map(|((sp, e2l), &eta)| CommutationRow {
            eta,
            max_abs_s: sp.s.max_abs(),
            max_s: sp.s.max(),
            max_r1: sp.r1.max(),
            max_abs_r2: sp.r2.max_abs(),
            max_abs_r0: sp.r0.max_abs(),
            eta2_lap: *e2l,
            split_defect: sp.identity_defect(),
            triangle_holds: sp.triangle_holds(),
        })
        .collect();
    let probes = probes
        .iter()
        .map(|p| {
            let node = g.nearest_node(p);
            ProbeTrace {
                probe: *p,
                node,
                eta: etas.to_vec(),
                s: splits.iter().map(|(sp, _)| sp.s.get(node)).collect(),
                r2: splits.iter().map(|(sp, _)| sp.r2.get(node)).collect(),
            }
        })
        .collect();
    let slope = loglog_slope(etas, &rows.iter().map(|r| r.max_abs_s).collect::<Vec<_>>());
    let slope_r2 = loglog_slope(etas, &rows.iter().map(|r| r.max_abs_r2).collect::<Vec<_>>());
    let ae = ae_residual(w, model, diffusion, zeroth);
    Ok(CommutationReport {
        rows,
        slope,
        slope_r2,
        ae_min: ae.min(),
        ae_max: ae.max(),
        probes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpotcheckReport {
    pub tau: f64,
    /// Fraction of nodes with a.e. residual at most `tau`.
    pub ae_fraction: f64,
    pub ae_pass: bool,
    pub etas: Vec<f64>,
    pub max_s: Vec<f64>,
    /// Largest positive a.e. residual: the grid-level floor below which the
    /// mollified residual cannot be resolved.
    pub floor: f64,
    /// `(max S^+ - floor)^+ / sqrt(eta)` at the largest radius.
    pub c0: f64,
    pub mollified_pass: bool,
}

impl SpotcheckReport {
    /// `max_eta max S^+ / (2 C0 sqrt(eta) + 2 floor)`; at most 1 on a pass.
    pub fn worst_ratio(&self) -> f64 {
        self.etas
            .iter()
            .zip(&self.max_s)
            .map(|(e, s)| {
                let bound = 2.0 * self.c0 * e.sqrt() + 2.0 * self.floor;
                if bound > 0.0 {
                    s / bound
                } else if *s > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0f64, f64::max)
    }
}

/// Fraction of nodes required to satisfy the a.e. test.
pub const AE_FRACTION: f64 = 0.99;

/// Checks the a.e. subsolution property on the grid and that every
/// mollified field satisfies `max S^eta <= 2 C0 sqrt(eta) + 2 floor`, with
/// `C0` taken from the largest radius and `floor` the largest positive a.e.
/// residual.
pub fn subsolution_equivalence_spotcheck(
    w: &GridField,
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    zeroth: &ZerothOrder,
    kernels: &[MollifierKernel],
    tau: f64,
) -> Result<SpotcheckReport> {
    let ae = ae_residual(w, model, diffusion, zeroth);
    let ok = ae.values().iter().filter(|r| **r <= tau).count();
    let ae_fraction = ok as f64 / ae.values().len() as f64;
    let max_s = exec::map_items(kernels, |k| {
        subsolution_residual(w, model, diffusion, zeroth, k).map(|s| s.max().max(0.0))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let etas: Vec<f64> = kernels.iter().map(|k| k.eta()).collect();
    let (imax, emax) = etas
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, be), (i, e)| if *e > be { (i, *e) } else { (bi, be) });
    let floor = ae.max().max(0.0);
    let c0 = if etas.is_empty() {
        0.0
    } else {
        (max_s[imax] - floor).max(0.0) / emax.sqrt()
    };
    let mollified_pass = etas
        .iter()
        .zip(&max_s)
        .all(|(e, s)| *s <= 2.0 * c0 * e.sqrt() + 2.0 * floor + 1e-12);
    Ok(SpotcheckReport {
        tau,
        ae_fraction,
        ae_pass: ae_fraction >= AE_FRACTION,
        etas,
        max_s,
        floor,
        c0,
        mollified_pass,
    })
}
