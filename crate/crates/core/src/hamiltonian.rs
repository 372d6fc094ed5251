//! Problem data: convex superlinear Hamiltonians `H(x,p) = G(|p|^2) + V(x)`,
//! their Legendre transforms, and nonnegative diffusion coefficients.
//!
//! Everything here is closed form, so derivatives and Legendre transforms are
//! exact. Points and vectors are `[f64; 2]`; in one dimension the second
//! component is ignored (and should be zero).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HjError, Result};

pub type Point = [f64; 2];

const TWO_PI: f64 = 2.0 * PI;

pub(crate) fn dot(dim: usize, a: &Point, b: &Point) -> f64 {
    (0..dim).map(|d| a[d] * b[d]).sum()
}

pub(crate) fn norm_sq(dim: usize, a: &Point) -> f64 {
    dot(dim, a, a)
}

/// One term `cos * cos(2 pi k.x) + sin * sin(2 pi k.x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i32; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// A finite trigonometric polynomial on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFunction {
    dim: usize,
    terms: Vec<TrigTerm>,
}

impl PeriodicFunction {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        let terms = terms
            .into_iter()
            .map(|mut t| {
                if dim == 1 {
                    t.k[1] = 0;
                }
                t
            })
            .collect();
        Self { dim, terms }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, Vec::new())
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(
            dim,
            vec![TrigTerm {
                k: [0, 0],
                cos: c,
                sin: 0.0,
            }],
        )
    }

    /// `amplitude * cos(2 pi k.x)`
    pub fn cosine(dim: usize, k: [i32; 2], amplitude: f64) -> Self {
        Self::new(
            dim,
            vec![TrigTerm {
                k,
                cos: amplitude,
                sin: 0.0,
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn plus(mut self, other: &PeriodicFunction) -> Self {
        assert_eq!(self.dim, other.dim);
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0)
    }

    fn phase(&self, t: &TrigTerm, x: &Point) -> f64 {
        let mut s = 0.0;
        for d in 0..self.dim {
            s += t.k[d] as f64 * x[d];
        }
        TWO_PI * s
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let th = self.phase(t, x);
                t.cos * th.cos() + t.sin * th.sin()
            })
            .sum()
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 2];
        for t in &self.terms {
            let th = self.phase(t, x);
            let f = -t.cos * th.sin() + t.sin * th.cos();
            for d in 0..self.dim {
                g[d] += TWO_PI * t.k[d] as f64 * f;
            }
        }
        g
    }

    pub fn hessian(&self, x: &Point) -> [[f64; 2]; 2] {
        let mut hess = [[0.0; 2]; 2];
        for t in &self.terms {
            let th = self.phase(t, x);
            let f = -(t.cos * th.cos() + t.sin * th.sin()) * TWO_PI * TWO_PI;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    hess[i][j] += t.k[i] as f64 * t.k[j] as f64 * f;
                }
            }
        }
        hess
    }

    pub fn laplacian(&self, x: &Point) -> f64 {
        let h = self.hessian(x);
        (0..self.dim).map(|d| h[d][d]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    /// `|p|^2/2 + V`
    Quadratic,
    /// `|p|^4/4 + V`
    Quartic,
}

/// Result of the Legendre transform at `(x, v)`: the value `L(x,v)` and the
/// maximizing momentum `p* = D_v L(x,v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Legendre {
    pub value: f64,
    pub momentum: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianModel {
    kind: HamiltonianKind,
    potential: PeriodicFunction,
}

impl HamiltonianModel {
    pub fn new(kind: HamiltonianKind, potential: PeriodicFunction) -> Self {
        Self { kind, potential }
    }

    pub fn quadratic(potential: PeriodicFunction) -> Self {
        Self::new(HamiltonianKind::Quadratic, potential)
    }

    pub fn quartic(potential: PeriodicFunction) -> Self {
        Self::new(HamiltonianKind::Quartic, potential)
    }

    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    pub fn potential(&self) -> &PeriodicFunction {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    /// Same kinetic part, potential shifted by a constant.
    pub fn shifted(&self, k: f64) -> Self {
        Self {
            kind: self.kind,
            potential: self
                .potential
                .clone()
                .plus(&PeriodicFunction::constant(self.dim(), k)),
        }
    }

    /// Kinetic profile `G(s)` with `H = G(|p|^2) + V`.
    #[inline]
    pub fn profile(&self, s: f64) -> f64 {
        match self.kind {
            HamiltonianKind::Quadratic => 0.5 * s,
            HamiltonianKind::Quartic => 0.25 * s * s,
        }
    }

    #[inline]
    pub fn profile_slope(&self, s: f64) -> f64 {
        match self.kind {
            HamiltonianKind::Quadratic => 0.5,
            HamiltonianKind::Quartic => 0.5 * s,
        }
    }

    pub fn eval(&self, x: &Point, p: &Point) -> f64 {
        self.profile(norm_sq(self.dim(), p)) + self.potential.value(x)
    }

    pub fn grad_p(&self, _x: &Point, p: &Point) -> Point {
        let n = self.dim();
        let scale = 2.0 * self.profile_slope(norm_sq(n, p));
        let mut g = [0.0; 2];
        for d in 0..n {
            g[d] = scale * p[d];
        }
        g
    }

    pub fn grad_x(&self, x: &Point, _p: &Point) -> Point {
        self.potential.gradient(x)
    }

    pub fn hessian_p(&self, _x: &Point, p: &Point) -> [[f64; 2]; 2] {
        let n = self.dim();
        let mut hess = [[0.0; 2]; 2];
        match self.kind {
            HamiltonianKind::Quadratic => {
                for d in 0..n {
                    hess[d][d] = 1.0;
                }
            }
            HamiltonianKind::Quartic => {
                let s = norm_sq(n, p);
                for i in 0..n {
                    for j in 0..n {
                        hess[i][j] = 2.0 * p[i] * p[j] + if i == j { s } else { 0.0 };
                    }
                }
            }
        }
        hess
    }

    /// `L(x,v) = sup_p (p.v - H(x,p))`.
    pub fn lagrangian(&self, x: &Point, v: &Point) -> f64 {
        let n = self.dim();
        let s = norm_sq(n, v);
        let kinetic = match self.kind {
            HamiltonianKind::Quadratic => 0.5 * s,
            HamiltonianKind::Quartic => 0.75 * s.powf(2.0 / 3.0),
        };
        kinetic - self.potential.value(x)
    }

    /// `D_v L(x,v)`; for the quartic kind the removable singularity at
    /// `v = 0` is filled with `0`.
    pub fn dv_lagrangian(&self, _x: &Point, v: &Point) -> Point {
        let n = self.dim();
        match self.kind {
            HamiltonianKind::Quadratic => *v,
            HamiltonianKind::Quartic => {
                let s = norm_sq(n, v);
                if s == 0.0 {
                    return [0.0; 2];
                }
                let scale = s.powf(-1.0 / 3.0);
                let mut p = [0.0; 2];
                for d in 0..n {
                    p[d] = scale * v[d];
                }
                p
            }
        }
    }

    pub fn legendre(&self, x: &Point, v: &Point) -> Legendre {
        Legendre {
            value: self.lagrangian(x, v),
            momentum: self.dv_lagrangian(x, v),
        }
    }
}

/// Diffusion coefficient `a >= 0`. The degeneracy flag records whether the
/// sampled minimum of `a` vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionCoefficient {
    a: PeriodicFunction,
    min_sampled: f64,
    degenerate: bool,
}

/// Sampled minimum below which `a` counts as vanishing.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

impl DiffusionCoefficient {
    pub fn new(a: PeriodicFunction) -> Self {
        let dim = a.dim();
        let m = 256usize;
        let count = if dim == 1 { m } else { m * m };
        let mut min_sampled = f64::INFINITY;
        for idx in 0..count {
            let x = sample_point(dim, m, idx);
            min_sampled = min_sampled.min(a.value(&x));
        }
        let degenerate = min_sampled <= DEGENERACY_THRESHOLD;
        Self {
            a,
            min_sampled,
            degenerate,
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(PeriodicFunction::constant(dim, c))
    }

    pub fn function(&self) -> &PeriodicFunction {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.a.value(x)
    }

    pub fn gradient(&self, x: &Point) -> Point {
        self.a.gradient(x)
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn min_sampled(&self) -> f64 {
        self.min_sampled
    }
}

fn sample_point(dim: usize, m: usize, idx: usize) -> Point {
    let h = 1.0 / m as f64;
    if dim == 1 {
        [idx as f64 * h, 0.0]
    } else {
        [(idx % m) as f64 * h, (idx / m) as f64 * h]
    }
}

/// Empirical constants for the structural assumptions on `H` and `a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Smallest eigenvalue of `D_pp H` over the samples.
    pub convexity_min_eigenvalue: f64,
    /// `min H(x,p)/|p|^2` over samples with `|p| >= 2`; superlinearity is
    /// accepted when this is at least `1/4`.
    pub superlinearity_ratio: f64,
    /// `max |D_x H| / (1 + H - min H)`. The bound is stated for `H` shifted
    /// to be nonnegative: adding a constant to `H` only shifts `u` by a
    /// constant over `eps`, while the unshifted ratio is unbounded whenever
    /// `min H = -1`.
    pub dx_bound_constant: f64,
    /// Sampled `min H`, the shift used above.
    pub h_min: f64,
    /// `max |Da| / sqrt(a)` over samples with `a > 0`.
    pub degeneracy_constant: f64,
    pub checks: Vec<(String, bool)>,
}

fn min_eigenvalue_sym(dim: usize, m: &[[f64; 2]; 2]) -> f64 {
    if dim == 1 {
        return m[0][0];
    }
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    0.5 * tr - disc
}

/// Samples `(x, p)` on deterministic grids (`sample_count` points per spatial
/// axis) and checks convexity, superlinearity, `|D_xH| <= C(1+H)`, `a >= 0`
/// and `|Da| <= C sqrt(a)`.
pub fn validate_assumptions(
    model: &HamiltonianModel,
    diffusion: &DiffusionCoefficient,
    sample_count: usize,
) -> Result<ValidationReport> {
    if sample_count < 100 {
        return Err(HjError::InvalidParams(format!(
            "sample_count must be >= 100, got {sample_count}"
        )));
    }
    let dim = model.dim();
    if diffusion.dim() != dim {
        return Err(HjError::InvalidParams(
            "Hamiltonian and diffusion dimensions differ".into(),
        ));
    }
    let x_count = if dim == 1 {
        sample_count
    } else {
        sample_count * sample_count
    };
    // momentum samples on [-6, 6]^dim
    let p_per_axis = 25usize;
    let p_count = if dim == 1 {
        p_per_axis
    } else {
        p_per_axis * p_per_axis
    };
    let p_sample = |j: usize| -> Point {
        let step = 12.0 / (p_per_axis - 1) as f64;
        if dim == 1 {
            [-6.0 + j as f64 * step, 0.0]
        } else {
            [
                -6.0 + (j % p_per_axis) as f64 * step,
                -6.0 + (j / p_per_axis) as f64 * step,
            ]
        }
    };

    let mut min_eig = f64::INFINITY;
    let mut superlinear = f64::INFINITY;
    let mut dx_const: f64 = 0.0;
    let mut deg_const: f64 = 0.0;
    // the profile is nonnegative and vanishes at p = 0
    let h_min = (0..x_count)
        .map(|ix| model.potential().value(&sample_point(dim, sample_count, ix)))
        .fold(f64::INFINITY, f64::min);

    // sign first: near a sign change |Da|/sqrt(a) also blows up, and the
    // violation should be named after its cause
    for ix in 0..x_count {
        let x = sample_point(dim, sample_count, ix);
        if diffusion.value(&x) < -1e-14 {
            return Err(HjError::AssumptionViolated {
                bound: "a ≥ 0".into(),
                at: x,
            });
        }
    }

    for ix in 0..x_count {
        let x = sample_point(dim, sample_count, ix);

        let a = diffusion.value(&x);
        let da = norm_sq(dim, &diffusion.gradient(&x)).sqrt();
        if a > 1e-14 {
            deg_const = deg_const.max(da / a.sqrt());
        } else if da > 1e-6 {
            return Err(HjError::AssumptionViolated {
                bound: "|Da| ≤ C√a".into(),
                at: x,
            });
        }

        for j in 0..p_count {
            let p = p_sample(j);
            let eig = min_eigenvalue_sym(dim, &model.hessian_p(&x, &p));
            min_eig = min_eig.min(eig);
            if eig < -1e-12 {
                return Err(HjError::AssumptionViolated {
                    bound: "convexity of p ↦ H(x,p)".into(),
                    at: x,
                });
            }
            let h = model.eval(&x, &p);
            let pn = norm_sq(dim, &p);
            if pn >= 4.0 {
                let ratio = h / pn;
                superlinear = superlinear.min(ratio);
                if ratio < 0.25 - 1e-12 {
                    return Err(HjError::AssumptionViolated {
                        bound: "superlinearity H/|p| ≥ |p|/4".into(),
                        at: x,
                    });
                }
            }
            let dxh = norm_sq(dim, &model.grad_x(&x, &p)).sqrt();
            dx_const = dx_const.max(dxh / (1.0 + (h - h_min).max(0.0)));
        }
    }

    Ok(ValidationReport {
        convexity_min_eigenvalue: min_eig,
        superlinearity_ratio: superlinear,
        dx_bound_constant: dx_const,
        h_min,
        degeneracy_constant: deg_const,
        checks: vec![
            ("convexity".into(), true),
            ("superlinearity".into(), true),
            ("|D_xH| ≤ C(1+H)".into(), dx_const.is_finite()),
            ("a ≥ 0".into(), true),
            ("|Da| ≤ C√a".into(), deg_const.is_finite()),
        ],
    })
}
