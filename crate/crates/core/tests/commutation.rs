mod common;

use hjlab::commutation::{
    commutation_study, eta_sq_laplacian_bound, residual_split, subsolution_equivalence_spotcheck, subsolution_residual,
    ZerothOrder, AE_FRACTION,
};
use hjlab::grid::{integrate, mollify, GridField, MollifierKernel, TorusGrid};
use hjlab::hamiltonian::{DiffusionCoefficient, HamiltonianModel, PeriodicFunction};
use hjlab::instances;
use hjlab::solver::{solve_discounted, SchemeParams};
use proptest::prelude::*;
use std::f64::consts::PI;

fn trig_field(g: TorusGrid, c: &[f64; 4]) -> GridField {
    GridField::from_fn(g, |x| {
        let t = 2.0 * PI * x[0];
        c[0] * t.cos() + c[1] * t.sin() + c[2] * (2.0 * t).cos() + c[3] * (3.0 * t).sin()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn split_is_an_identity(c in prop::array::uniform4(-1.0f64..1.0), k in 2usize..12, which in 0usize..5) {
        let inst = instances::catalogue_1d().swap_remove(which);
        let g = TorusGrid::new(1, 256).unwrap();
        let w = trig_field(g, &c);
        let kernel = MollifierKernel::new(g, k as f64 / 256.0).unwrap();
        let z = ZerothOrder::ErgodicConstant(0.3);
        let sp = residual_split(&w, &inst.model, &inst.diffusion, &z, &kernel).unwrap();
        prop_assert!(sp.identity_defect() <= 1e-10);
        prop_assert!(sp.triangle_holds());
    }

    /// Mollification preserves the integral and commutes with grid shifts.
    #[test]
    fn mollifier_mass_and_translation(c in prop::array::uniform4(-1.0f64..1.0), k in 2usize..20, j in 0usize..128) {
        let g = TorusGrid::new(1, 128).unwrap();
        let w = trig_field(g, &c);
        let kernel = MollifierKernel::new(g, k as f64 / 128.0).unwrap();
        let m = mollify(&w, &kernel).unwrap();
        prop_assert!((integrate(&m) - integrate(&w)).abs() <= 1e-13);
        let shift = |f: &GridField| GridField::from_fn(g, |x| f.get(g.nearest_node(&[x[0] + j as f64 / 128.0, 0.0])));
        let a = mollify(&shift(&w), &kernel).unwrap();
        let b = shift(&m);
        prop_assert!(a.sup_distance(&b) <= 1e-13);
    }

    /// `eta^2 |Lap w^eta|` for a single mode is at most `4 pi^2 eta^2`.
    #[test]
    fn eta_squared_laplacian_of_a_mode(k in 2usize..32) {
        let g = TorusGrid::new(1, 512).unwrap();
        let w = GridField::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        let eta = k as f64 / 512.0;
        let t = eta_sq_laplacian_bound(&w, &[MollifierKernel::new(g, eta).unwrap()]).unwrap();
        prop_assert!(t.rows[0].eta2_lap <= 4.0 * PI * PI * eta * eta);
    }
}

#[test]
fn constant_field_has_zero_residual() {
    let g = TorusGrid::new(2, 32).unwrap();
    let model = HamiltonianModel::quadratic(PeriodicFunction::zero(2));
    let a = DiffusionCoefficient::constant(2, 1.0);
    let w = GridField::constant(g, 0.7);
    let kernel = MollifierKernel::new(g, 0.1).unwrap();
    let s = subsolution_residual(&w, &model, &a, &ZerothOrder::ErgodicConstant(0.0), &kernel).unwrap();
    assert_eq!(s.max_abs(), 0.0);
}

#[test]
fn constant_diffusion_has_no_r2() {
    let inst = instances::uniform(1);
    let g = TorusGrid::new(1, 1024).unwrap();
    let r = solve_discounted(&inst.model, &inst.diffusion, g, &SchemeParams::new(0.05, 0.0)).unwrap();
    let kernel = MollifierKernel::new(g, 1.0 / 32.0).unwrap();
    let sp = residual_split(&r.solution, &inst.model, &inst.diffusion, &ZerothOrder::from_report(&r), &kernel).unwrap();
    assert!(sp.r2.max_abs() <= 1e-9);
}

#[test]
fn lipschitz_kink_gives_bounded_eta2_laplacian_ratio() {
    // |x - 1/2| has a Laplacian of mass 2 at the kink: eta^2 |Lap w^eta| ~ eta
    let g = TorusGrid::new(1, 2048).unwrap();
    let w = GridField::from_fn(g, |x| (x[0] - 0.5).abs());
    let kernels: Vec<_> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&e| MollifierKernel::new(g, e).unwrap())
        .collect();
    let t = eta_sq_laplacian_bound(&w, &kernels).unwrap();
    assert!(t.bounded);
    let ratios: Vec<f64> = t.rows.iter().map(|r| r.ratio).collect();
    let spread = ratios.iter().cloned().fold(0.0f64, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.5, "{ratios:?}");
}

#[test]
fn uniform_instance_rate_is_about_two() {
    let inst = instances::uniform(1);
    let g = TorusGrid::new(1, 2048).unwrap();
    let r = solve_discounted(&inst.model, &inst.diffusion, g, &SchemeParams::new(0.01, 0.0)).unwrap();
    let etas = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let study = commutation_study(&r.solution, &inst.model, &inst.diffusion, &ZerothOrder::from_report(&r), &etas, &[]).unwrap();
    let own = common::loglog_slope(&etas, &study.max_abs_s());
    assert!((own - study.slope).abs() < 1e-12);
    assert!(study.slope > 1.5, "{}", study.slope);
    assert!(!study.kinked(0.05));
}

#[test]
fn first_order_solution_is_kinked() {
    let inst = instances::first_order(1);
    let g = TorusGrid::new(1, 1024).unwrap();
    let r = solve_discounted(&inst.model, &inst.diffusion, g, &SchemeParams::new(0.01, 1e-4)).unwrap();
    let etas = [1.0 / 16.0, 1.0 / 64.0];
    let study = commutation_study(&r.solution, &inst.model, &inst.diffusion, &ZerothOrder::from_report(&r), &etas, &[]).unwrap();
    assert!(study.kinked(0.05));
    // one-sided: the positive part stays at the grid floor
    for row in &study.rows {
        assert!(row.max_s <= 2.0 * study.ae_max.max(0.0) + 1e-3, "{row:?}");
    }
}

#[test]
fn corrupted_solution_fails_the_ae_check() {
    let inst = instances::uniform(1);
    let g = TorusGrid::new(1, 1024).unwrap();
    let r = solve_discounted(&inst.model, &inst.diffusion, g, &SchemeParams::new(0.05, 0.0)).unwrap();
    let z = ZerothOrder::from_report(&r);
    let kernels = [MollifierKernel::new(g, 1.0 / 32.0).unwrap()];
    let clean = subsolution_equivalence_spotcheck(&r.solution, &inst.model, &inst.diffusion, &z, &kernels, 0.05).unwrap();
    assert!(clean.ae_pass);
    let bent = GridField::from_fn(g, |x| r.solution.get(g.nearest_node(x)) + 0.5 * (x[0] - 0.5).abs());
    let bad = subsolution_equivalence_spotcheck(&bent, &inst.model, &inst.diffusion, &z, &kernels, 0.05).unwrap();
    assert!(!bad.ae_pass);
    assert!(bad.ae_fraction < AE_FRACTION);
}
