//! Built-in problem catalogue.

use crate::hamiltonian::{DiffusionCoefficient, HamiltonianModel, PeriodicFunction, TrigTerm};

/// A named problem: Hamiltonian plus diffusion.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    pub model: HamiltonianModel,
    pub diffusion: DiffusionCoefficient,
}

impl ProblemInstance {
    pub fn new(name: &str, model: HamiltonianModel, diffusion: DiffusionCoefficient) -> Self {
        Self {
            name: name.to_string(),
            model,
            diffusion,
        }
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }
}

fn term(k: [i32; 2], cos: f64) -> TrigTerm {
    TrigTerm { k, cos, sin: 0.0 }
}

/// `V(x) = cos 2 pi x` (1-D) or `(cos 2 pi x + cos 2 pi y)/2` (2-D); max 1 at
/// the origin, min -1.
pub fn cosine_potential(dim: usize) -> PeriodicFunction {
    if dim == 1 {
        PeriodicFunction::cosine(1, [1, 0], 1.0)
    } else {
        PeriodicFunction::new(2, vec![term([1, 0], 0.5), term([0, 1], 0.5)])
    }
}

/// `a(x) = (1 - cos 2 pi x)/2 = sin^2(pi x)`, vanishing at `x = 0`.
pub fn degenerate_diffusion() -> DiffusionCoefficient {
    DiffusionCoefficient::new(PeriodicFunction::new(
        1,
        vec![term([0, 0], 0.5), term([1, 0], -0.5)],
    ))
}

/// `a(x) = (1 - cos 4 pi x)/2 = sin^2(2 pi x)`, vanishing at `x = 0` and `x = 1/2`.
pub fn double_degenerate_diffusion() -> DiffusionCoefficient {
    DiffusionCoefficient::new(PeriodicFunction::new(
        1,
        vec![term([0, 0], 0.5), term([2, 0], -0.5)],
    ))
}

/// `a(x,y) = sin^2(pi x) sin^2(pi y)`, the tensor product of the 1-D
/// degenerate coefficient.
pub fn tensor_degenerate_diffusion() -> DiffusionCoefficient {
    // (1 - cos X)(1 - cos Y)/4 = 1/4 - cos X/4 - cos Y/4 + (cos(X+Y) + cos(X-Y))/8
    DiffusionCoefficient::new(PeriodicFunction::new(
        2,
        vec![
            term([0, 0], 0.25),
            term([1, 0], -0.25),
            term([0, 1], -0.25),
            term([1, 1], 0.125),
            term([1, -1], 0.125),
        ],
    ))
}

pub fn trivial(dim: usize) -> ProblemInstance {
    ProblemInstance::new(
        if dim == 1 { "trivial" } else { "trivial-2d" },
        HamiltonianModel::quadratic(PeriodicFunction::zero(dim)),
        DiffusionCoefficient::constant(dim, 1.0),
    )
}

pub fn uniform(dim: usize) -> ProblemInstance {
    ProblemInstance::new(
        if dim == 1 { "uniform" } else { "uniform-2d" },
        HamiltonianModel::quadratic(cosine_potential(dim)),
        DiffusionCoefficient::constant(dim, 1.0),
    )
}

/// First-order problem: `a = 0`, solvable only with `eta > 0`.
pub fn first_order(dim: usize) -> ProblemInstance {
    ProblemInstance::new(
        if dim == 1 { "first-order" } else { "first-order-2d" },
        HamiltonianModel::quadratic(cosine_potential(dim)),
        DiffusionCoefficient::new(PeriodicFunction::zero(dim)),
    )
}

pub fn degenerate(dim: usize) -> ProblemInstance {
    if dim == 1 {
        ProblemInstance::new(
            "degenerate",
            HamiltonianModel::quadratic(cosine_potential(1)),
            degenerate_diffusion(),
        )
    } else {
        ProblemInstance::new(
            "degenerate-2d",
            HamiltonianModel::quadratic(cosine_potential(2)),
            tensor_degenerate_diffusion(),
        )
    }
}

pub fn double_degenerate() -> ProblemInstance {
    ProblemInstance::new(
        "double-degenerate",
        HamiltonianModel::quadratic(cosine_potential(1)),
        double_degenerate_diffusion(),
    )
}

/// The 1-D catalogue exercised by the default sweep.
pub fn catalogue_1d() -> Vec<ProblemInstance> {
    vec![
        trivial(1),
        uniform(1),
        first_order(1),
        degenerate(1),
        double_degenerate(),
    ]
}

pub fn catalogue_2d() -> Vec<ProblemInstance> {
    vec![trivial(2), uniform(2), first_order(2), degenerate(2)]
}

pub fn by_name(name: &str) -> Option<ProblemInstance> {
    catalogue_1d()
        .into_iter()
        .chain(catalogue_2d())
        .find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degeneracy_flags() {
        assert!(!uniform(1).diffusion.is_degenerate());
        assert!(first_order(1).diffusion.is_degenerate());
        assert!(degenerate(1).diffusion.is_degenerate());
        assert!(double_degenerate().diffusion.is_degenerate());
        assert!(degenerate(2).diffusion.is_degenerate());
    }

    #[test]
    fn tensor_coefficient_matches_product() {
        let a = tensor_degenerate_diffusion();
        for &(x, y) in &[(0.1, 0.3), (0.5, 0.5), (0.77, 0.01)] {
            let expect = (std::f64::consts::PI * x).sin().powi(2) * (std::f64::consts::PI * y).sin().powi(2);
            assert!((a.value(&[x, y]) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(by_name("double-degenerate").unwrap().dim(), 1);
        assert_eq!(by_name("uniform-2d").unwrap().dim(), 2);
        assert!(by_name("nope").is_none());
    }
}
