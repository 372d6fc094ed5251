mod common;

use hjlab::adjoint::{assemble_linearization, scheme_residual, solve_adjoint};
use hjlab::grid::{GridField, TorusGrid};
use hjlab::hamiltonian::{DiffusionCoefficient, HamiltonianModel, PeriodicFunction, TrigTerm};
use hjlab::instances;
use hjlab::solver::{solve_discounted, solve_sweep, EtaRule, SchemeParams, SolveMethod};
use proptest::prelude::*;

fn shifted_cosine(s: f64) -> PeriodicFunction {
    let t = 2.0 * std::f64::consts::PI * s;
    PeriodicFunction::new(
        1,
        vec![TrigTerm {
            k: [1, 0],
            cos: t.cos(),
            sin: t.sin(),
        }],
    )
}

#[test]
fn trivial_instance_gives_zero() {
    let inst = instances::trivial(1);
    let g = TorusGrid::new(1, 256).unwrap();
    let r = solve_discounted(&inst.model, &inst.diffusion, g, &SchemeParams::new(0.1, 0.01)).unwrap();
    assert!(r.solution.max_abs() <= 1e-12);
    assert_eq!(r.c_estimate, 0.0);
}

#[test]
fn newton_and_pseudo_time_agree() {
    let inst = instances::uniform(1);
    let g = TorusGrid::new(1, 32).unwrap();
    let mut p = SchemeParams::new(0.5, 0.1);
    p.tol_res = 1e-10;
    let a = solve_discounted(&inst.model, &inst.diffusion, g, &p).unwrap();
    p.method = SolveMethod::PseudoTime;
    p.max_steps = 200_000;
    let b = solve_discounted(&inst.model, &inst.diffusion, g, &p).unwrap();
    assert!(a.solution.sup_distance(&b.solution) < 1e-8);
}

#[test]
fn sweep_matches_independent_solves() {
    let inst = instances::degenerate(1);
    let g = TorusGrid::new(1, 128).unwrap();
    let base = SchemeParams::new(0.1, 0.0);
    let eps = [0.1, 0.05, 0.025];
    let sweep = solve_sweep(&inst.model, &inst.diffusion, g, &eps, EtaRule::EpsSquared, &base).unwrap();
    for (r, &e) in sweep.iter().zip(&eps) {
        let cold = solve_discounted(&inst.model, &inst.diffusion, g, &base.with_eps_eta(e, e * e)).unwrap();
        assert!(r.solution.sup_distance(&cold.solution) < 1e-7 / e);
    }
}

#[test]
fn degenerate_diffusion_needs_eta() {
    let inst = instances::first_order(1);
    let g = TorusGrid::new(1, 32).unwrap();
    assert!(solve_discounted(&inst.model, &inst.diffusion, g, &SchemeParams::new(0.1, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_satisfies_scheme(eps in 0.01f64..1.0, eta in 0.02f64..0.3, which in 0usize..5) {
        let inst = instances::catalogue_1d().swap_remove(which);
        let g = TorusGrid::new(1, 64).unwrap();
        let p = SchemeParams::new(eps, eta);
        let r = solve_discounted(&inst.model, &inst.diffusion, g, &p).unwrap();
        let res = scheme_residual(&inst.model, &inst.diffusion, &r.solution, &p).unwrap();
        let worst = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(worst <= 10.0 * r.tolerance_used, "residual {worst}");
    }

    /// Adding a constant `k` to `V` shifts `u` by `-k/eps`.
    #[test]
    fn constant_shift_in_potential(eps in 0.02f64..1.0, k in -2.0f64..2.0) {
        let g = TorusGrid::new(1, 64).unwrap();
        let a = DiffusionCoefficient::constant(1, 0.5);
        let v = PeriodicFunction::cosine(1, [1, 0], 1.0);
        let p = SchemeParams::new(eps, 0.0);
        let u = solve_discounted(&HamiltonianModel::quadratic(v.clone()), &a, g, &p).unwrap();
        let w = solve_discounted(&HamiltonianModel::quadratic(v.plus(&PeriodicFunction::constant(1, k))), &a, g, &p).unwrap();
        let expect = u.solution.add_scalar(-k / eps);
        prop_assert!(w.solution.sup_distance(&expect) <= 1e-8 * (1.0 + k.abs() / eps));
    }

    /// Comparison principle: a larger potential gives a smaller solution.
    #[test]
    fn monotone_in_potential(eps in 0.02f64..1.0, bump in 0.0f64..1.0, eta in 0.02f64..0.2) {
        let g = TorusGrid::new(1, 64).unwrap();
        let a = instances::degenerate_diffusion();
        let v = PeriodicFunction::cosine(1, [1, 0], 1.0);
        // bump * (1 + cos 4 pi x) >= 0
        let extra = PeriodicFunction::constant(1, bump).plus(&PeriodicFunction::cosine(1, [2, 0], bump));
        let p = SchemeParams::new(eps, eta);
        let lo = solve_discounted(&HamiltonianModel::quadratic(v.clone()), &a, g, &p).unwrap();
        let hi = solve_discounted(&HamiltonianModel::quadratic(v.plus(&extra)), &a, g, &p).unwrap();
        for i in 0..g.len() {
            prop_assert!(hi.solution.get(i) <= lo.solution.get(i) + 1e-9 / eps);
        }
    }

    /// Shifting `V` by a whole number of cells shifts the solution.
    #[test]
    fn translation_covariance(eps in 0.05f64..1.0, j in 0usize..64) {
        let g = TorusGrid::new(1, 64).unwrap();
        let a = DiffusionCoefficient::constant(1, 0.3);
        let p = SchemeParams::new(eps, 0.0);
        let u = solve_discounted(&HamiltonianModel::quadratic(shifted_cosine(0.0)), &a, g, &p).unwrap();
        let s = j as f64 / 64.0;
        let w = solve_discounted(&HamiltonianModel::quadratic(shifted_cosine(s)), &a, g, &p).unwrap();
        let moved = GridField::from_fn(g, |x| u.solution.get(g.nearest_node(&[x[0] - s, 0.0])));
        prop_assert!(w.solution.sup_distance(&moved) <= 1e-8 / eps);
    }

    /// The band solver inside the adjoint agrees with a dense LU.
    #[test]
    fn adjoint_matches_dense_oracle(eps in 0.01f64..1.0, eta in 0.02f64..0.3, which in 0usize..5, x0 in 0usize..32) {
        let inst = instances::catalogue_1d().swap_remove(which);
        let g = TorusGrid::new(1, 32).unwrap();
        let p = SchemeParams::new(eps, eta);
        let r = solve_discounted(&inst.model, &inst.diffusion, g, &p).unwrap();
        let op = assemble_linearization(&inst.model, &inst.diffusion, g, &r.solution, &p).unwrap();
        let adj = solve_adjoint(&op, x0).unwrap();
        let dense = common::dense_adjoint(&op, x0);
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(common::max_abs_diff(adj.theta.values(), &dense) <= 1e-10 * scale);
    }
}

#[test]
fn two_dimensional_adjoint_matches_dense_oracle() {
    for inst in instances::catalogue_2d() {
        let g = TorusGrid::new(2, 8).unwrap();
        let p = SchemeParams::new(0.2, 0.1);
        let r = solve_discounted(&inst.model, &inst.diffusion, g, &p).unwrap();
        let op = assemble_linearization(&inst.model, &inst.diffusion, g, &r.solution, &p).unwrap();
        let adj = solve_adjoint(&op, 9).unwrap();
        let dense = common::dense_adjoint(&op, 9);
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(common::max_abs_diff(adj.theta.values(), &dense) <= 1e-10 * scale, "{}", inst.name);
    }
}

#[test]
fn first_order_proxy_ergodic_constant() {
    let inst = instances::first_order(1);
    let g = TorusGrid::new(1, 4096).unwrap();
    let r = solve_discounted(&inst.model, &inst.diffusion, g, &SchemeParams::new(1e-3, 1e-3)).unwrap();
    assert!((0.97..=1.03).contains(&r.c_estimate), "{}", r.c_estimate);
}

#[test]
fn uniform_ergodic_estimate_is_grid_consistent() {
    let inst = instances::uniform(1);
    let p = SchemeParams::new(1e-3, 0.0);
    let coarse = solve_discounted(&inst.model, &inst.diffusion, TorusGrid::new(1, 1024).unwrap(), &p).unwrap();
    let fine = solve_discounted(&inst.model, &inst.diffusion, TorusGrid::new(1, 4096).unwrap(), &p).unwrap();
    assert!((coarse.c_estimate - fine.c_estimate).abs() <= 5e-3);
}
