//! Discrete measures built from the adjoint density and their diagnostics.

use std::io::Write;

use serde::Serialize;

use crate::adjoint::AdjointDensity;
use crate::error::{HjError, Result};
use crate::grid::{fmt_f64, torus_distance, GridField, TrigBasis};
use crate::hamiltonian::{dot, norm_sq, DiffusionCoefficient, HamiltonianModel, Point};
use crate::solver::upwind_gradient;

/// Tolerance on total mass.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureSpace {
    /// Atoms carry a momentum `p`.
    Momentum,
    /// Atoms carry a velocity `v`.
    Velocity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub x: Point,
    pub vector: Point,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    space: MeasureSpace,
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    /// Checks non-negative weights of total mass one.
    pub fn new(dim: usize, space: MeasureSpace, atoms: Vec<Atom>) -> Result<Self> {
        if let Some(a) = atoms.iter().find(|a| !(a.weight >= 0.0)) {
            return Err(HjError::InvalidParams(format!(
                "negative atom weight {:e} at x = ({}, {})",
                a.weight, a.x[0], a.x[1]
            )));
        }
        let m: f64 = atoms.iter().map(|a| a.weight).sum();
        if (m - 1.0).abs() > MASS_TOL {
            return Err(HjError::InvalidParams(format!("total mass {m} is not 1")));
        }
        Ok(Self { dim, space, atoms })
    }

    /// Unit mass at `(x, v)` in velocity space.
    pub fn dirac(dim: usize, x: Point, v: Point) -> Self {
        Self {
            dim,
            space: MeasureSpace::Velocity,
            atoms: vec![Atom { x, vector: v, weight: 1.0 }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> MeasureSpace {
        self.space
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Weight of atoms within torus distance `rx` of `center` whose vector
    /// has norm at most `rv`.
    pub fn mass_near(&self, center: &Point, rx: f64, rv: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| {
                torus_distance(self.dim, &a.x, center) <= rx && norm_sq(self.dim, &a.vector).sqrt() <= rv
            })
            .map(|a| a.weight)
            .sum()
    }

    /// Smallest torus radius around `center` holding at least `quantile` of
    /// the mass.
    pub fn support_radius(&self, center: &Point, quantile: f64) -> f64 {
        let mut d: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .map(|a| (torus_distance(self.dim, &a.x, center), a.weight))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for (r, w) in d {
            acc += w;
            if acc >= quantile {
                return r;
            }
        }
        f64::INFINITY
    }

    /// Rows `x[,y],p|v...,weight`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let vname = match self.space {
            MeasureSpace::Momentum => "p",
            MeasureSpace::Velocity => "v",
        };
        let mut header = vec!["x".to_string()];
        if self.dim == 2 {
            header.push("y".into());
        }
        for d in 0..self.dim {
            header.push(if self.dim == 1 { vname.to_string() } else { format!("{vname}{}", d + 1) });
        }
        header.push("weight".into());
        w.write_record(&header)?;
        for a in &self.atoms {
            let mut row: Vec<String> = (0..self.dim).map(|d| fmt_f64(a.x[d])).collect();
            row.extend((0..self.dim).map(|d| fmt_f64(a.vector[d])));
            row.push(fmt_f64(a.weight));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One atom per node: position `x_i`, upwind momentum `g_i`, weight
/// `theta_i h^n`. Only differences of `u` are used.
pub fn build_nu(u: &GridField, adj: &AdjointDensity, model: &HamiltonianModel) -> Result<DiscreteMeasure> {
    let g = u.grid();
    if adj.theta.grid() != g {
        return Err(HjError::InvalidParams("solution and density grids differ".into()));
    }
    let vol = g.cell_volume();
    let v = u.values();
    let atoms = (0..g.len())
        .map(|i| Atom {
            x: g.coords(i),
            vector: upwind_gradient(&g, v, i),
            weight: adj.theta.get(i) * vol,
        })
        .collect();
    DiscreteMeasure::new(model.dim(), MeasureSpace::Momentum, atoms)
}

/// Maps each momentum `p` to the velocity `D_pH(x, p)`.
pub fn pushforward_to_velocity(nu: &DiscreteMeasure, model: &HamiltonianModel) -> Result<DiscreteMeasure> {
    if nu.space != MeasureSpace::Momentum {
        return Err(HjError::InvalidParams("pushforward expects a momentum measure".into()));
    }
    let atoms = nu
        .atoms
        .iter()
        .map(|a| Atom {
            x: a.x,
            vector: model.grad_p(&a.x, &a.vector),
            weight: a.weight,
        })
        .collect();
    Ok(DiscreteMeasure {
        dim: nu.dim,
        space: MeasureSpace::Velocity,
        atoms,
    })
}

/// Inverse map `v -> D_vL(x, v)`.
pub fn pullback_to_momentum(mu: &DiscreteMeasure, model: &HamiltonianModel) -> Result<DiscreteMeasure> {
    require_velocity(mu)?;
    let atoms = mu
        .atoms
        .iter()
        .map(|a| Atom {
            x: a.x,
            vector: model.dv_lagrangian(&a.x, &a.vector),
            weight: a.weight,
        })
        .collect();
    Ok(DiscreteMeasure {
        dim: mu.dim,
        space: MeasureSpace::Momentum,
        atoms,
    })
}

fn require_velocity(mu: &DiscreteMeasure) -> Result<()> {
    if mu.space != MeasureSpace::Velocity {
        return Err(HjError::InvalidParams("expected a velocity measure".into()));
    }
    Ok(())
}

/// `sum w_i L(x_i, v_i)`
pub fn action(mu: &DiscreteMeasure, model: &HamiltonianModel) -> Result<f64> {
    require_velocity(mu)?;
    Ok(mu.atoms.iter().map(|a| a.weight * model.lagrangian(&a.x, &a.vector)).sum())
}

/// `sum w_i (v_i . Dphi(x_i) - a(x_i) Lap phi(x_i))` for each basis function.
pub fn holonomy_residuals(
    mu: &DiscreteMeasure,
    diffusion: &DiffusionCoefficient,
    basis: &TrigBasis,
) -> Result<Vec<f64>> {
    require_velocity(mu)?;
    let a: Vec<f64> = mu.atoms.iter().map(|at| diffusion.value(&at.x)).collect();
    Ok(basis
        .functions()
        .iter()
        .map(|phi| {
            mu.atoms
                .iter()
                .zip(&a)
                .map(|(at, ai)| {
                    at.weight * (dot(mu.dim, &at.vector, &phi.gradient(&at.x)) - ai * phi.laplacian(&at.x))
                })
                .sum()
        })
        .collect())
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `sum w_i u(x_i)`, with `u` interpolated at atoms off its grid.
pub fn key1_check(u_eps: &GridField, mu: &DiscreteMeasure) -> f64 {
    mu.atoms.iter().map(|a| a.weight * u_eps.interpolate(&a.x)).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct CompetitorVerdict {
    pub action: f64,
    pub holonomy: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizationReport {
    pub action: f64,
    pub slack_constant: f64,
    pub competitors: Vec<CompetitorVerdict>,
}

impl MinimizationReport {
    pub fn all_hold(&self) -> bool {
        self.competitors.iter().all(|c| c.holds)
    }
}

/// Checks `action(mu) <= action(nu) + K * hol(nu)` for every competitor `nu`
/// whose own max holonomy residual `hol(nu)` is at most `threshold`.
pub fn minimization_check(
    mu: &DiscreteMeasure,
    competitors: &[DiscreteMeasure],
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    basis: &TrigBasis,
    threshold: f64,
    slack_constant: f64,
) -> Result<MinimizationReport> {
    let own = action(mu, model)?;
    let mut verdicts = Vec::with_capacity(competitors.len());
    for (index, c) in competitors.iter().enumerate() {
        let hol = max_abs(&holonomy_residuals(c, diffusion, basis)?);
        if hol > threshold {
            return Err(HjError::CompetitorNotHolonomic {
                index,
                residual: hol,
                threshold,
            });
        }
        let act = action(c, model)?;
        let slack = slack_constant * hol;
        verdicts.push(CompetitorVerdict {
            action: act,
            holonomy: hol,
            slack,
            holds: own <= act + slack,
        });
    }
    Ok(MinimizationReport {
        action: own,
        slack_constant,
        competitors: verdicts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportRadius {
    pub center: Point,
    pub quantile: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureDiagnostics {
    pub action: f64,
    pub holonomy: Vec<f64>,
    pub max_holonomy: f64,
    pub key1: Option<f64>,
    pub support: Vec<SupportRadius>,
}

/// Action, holonomy residuals, optional key1 pairing and the 50%/90% mass
/// radii around each of `centers`.
pub fn diagnose(
    mu: &DiscreteMeasure,
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    basis: &TrigBasis,
    u_eps: Option<&GridField>,
    centers: &[Point],
) -> Result<MeasureDiagnostics> {
    let holonomy = holonomy_residuals(mu, diffusion, basis)?;
    let support = centers
        .iter()
        .flat_map(|c| {
            [0.5, 0.9].into_iter().map(move |q| SupportRadius {
                center: *c,
                quantile: q,
                radius: mu.support_radius(c, q),
            })
        })
        .collect();
    Ok(MeasureDiagnostics {
        action: action(mu, model)?,
        max_holonomy: max_abs(&holonomy),
        holonomy,
        key1: u_eps.map(|u| key1_check(u, mu)),
        support,
    })
}
