//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.
//! Runs without the libtest harness so the lines always reach stdout.

mod common;

use std::time::Instant;

use hjlab::adjoint::{assemble_linearization, solve_adjoint, transpose_defect, AdjointDensity};
use hjlab::commutation::{commutation_study, ZerothOrder};
use hjlab::exec;
use hjlab::experiment::{run_experiment, ExperimentConfig, ExperimentKind, RunOptions};
use hjlab::grid::{TorusGrid, TrigBasis};
use hjlab::hamiltonian::{validate_assumptions, DiffusionCoefficient, HamiltonianModel, PeriodicFunction};
use hjlab::instances::{self, ProblemInstance};
use hjlab::measures::{
    action, build_nu, diagnose, holonomy_residuals, key1_check, minimization_check, pushforward_to_velocity,
    DiscreteMeasure,
};
use hjlab::solver::{
    cauchy_trend, ergodic_limit, estimate_ergodic_constant, selection_sweep, solve_discounted, solve_sweep, EtaRule,
    SchemeParams, SelectionResult, SolveReport,
};
use hjlab::HjError;

const EPS: [f64; 6] = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125];
const N_1D: usize = 1024;
const N_2D: usize = 128;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn base() -> SchemeParams {
    SchemeParams::new(EPS[0], 0.0)
}

fn grid(dim: usize, n: usize) -> TorusGrid {
    TorusGrid::new(dim, n).unwrap()
}

fn default_sweep(inst: &ProblemInstance, n: usize) -> Vec<SolveReport> {
    solve_sweep(&inst.model, &inst.diffusion, grid(inst.dim(), n), &EPS, EtaRule::EpsSquared, &base()).unwrap()
}

fn adjoint_at(inst: &ProblemInstance, r: &SolveReport) -> (AdjointDensity, f64) {
    let p = base().with_eps_eta(r.eps, r.eta);
    let op = assemble_linearization(&inst.model, &inst.diffusion, r.grid(), &r.solution, &p).unwrap();
    let adj = solve_adjoint(&op, r.x0_node).unwrap();
    let ones = vec![1.0; op.len()];
    let td = transpose_defect(&op, r.centered.values(), adj.theta.values()).max(transpose_defect(
        &op,
        &ones,
        r.centered.values(),
    ));
    (adj, td)
}

fn velocity_measure(inst: &ProblemInstance, r: &SolveReport, adj: &AdjointDensity) -> DiscreteMeasure {
    let nu = build_nu(&r.solution, adj, &inst.model).unwrap();
    pushforward_to_velocity(&nu, &inst.model).unwrap()
}

fn nontrivial_1d() -> Vec<ProblemInstance> {
    vec![
        instances::uniform(1),
        instances::first_order(1),
        instances::degenerate(1),
        instances::double_degenerate(),
    ]
}

/// Selection sweeps on every built-in instance; their reports double as the
/// default sweep for the adjoint invariants.
fn selection_runs() -> Vec<(ProblemInstance, SelectionResult)> {
    let all: Vec<ProblemInstance> = instances::catalogue_1d().into_iter().chain(instances::catalogue_2d()).collect();
    exec::map_items(&all, |inst| {
        let n = if inst.dim() == 1 { N_1D } else { N_2D };
        let sel = selection_sweep(&inst.model, &inst.diffusion, grid(inst.dim(), n), &EPS, EtaRule::EpsSquared, &base())
            .unwrap();
        (inst.clone(), sel)
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let inst = instances::trivial(1);
    let reports = default_sweep(&inst, 256);
    let basis = TrigBasis::new(1, 4);
    let (mut u, mut mass, mut act, mut hol, mut key1, mut s) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for r in &reports {
        u = u.max(r.solution.max_abs());
        let (adj, _) = adjoint_at(&inst, r);
        mass = mass.max((adj.mass() - 1.0).abs());
        let mu = velocity_measure(&inst, r, &adj);
        act = act.max(action(&mu, &inst.model).unwrap().abs());
        let res = holonomy_residuals(&mu, &inst.diffusion, &basis).unwrap();
        let idx = basis.functions().iter().position(|f| f.is_constant()).unwrap();
        hol = hol.max(res[idx].abs());
        key1 = key1.max(key1_check(&r.normalized(0.0), &mu).abs());
    }
    let finest = reports.last().unwrap();
    let etas = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let study = commutation_study(
        &finest.solution,
        &inst.model,
        &inst.diffusion,
        &ZerothOrder::from_report(finest),
        &etas,
        &[],
    )
    .unwrap();
    for row in &study.rows {
        s = s.max(row.max_abs_s);
    }
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::with_defaults(ExperimentKind::Full, vec![inst.clone()], dir.path().to_path_buf());
    cfg.grid_sizes = vec![256];
    let m = run_experiment(&cfg, &RunOptions { seedless: true, ..Default::default() }).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = u <= 1e-12
        && mass <= 1e-10
        && act <= 1e-10
        && hol <= 1e-10
        && key1 <= 1e-10
        && s <= 1e-10
        && m.passed()
        && secs < 10.0;
    outcome(
        pass,
        format!(
            "|u| {u:.1e} <= 1e-12, mass {mass:.1e} <= 1e-10, action {act:.1e}, holonomy(1) {hol:.1e}, key1 {key1:.1e}, S {s:.1e} <= 1e-10, pipeline {} checks pass = {}, {secs:.1}s < 10s",
            m.checks.len(),
            m.passed()
        ),
    )
}

fn criterion_2(runs: &[(ProblemInstance, SelectionResult)]) -> Outcome {
    let rows = exec::map_items(runs, |(inst, sel)| {
        let (mut lo, mut mass, mut td) = (f64::INFINITY, 0.0f64, 0.0f64);
        for r in &sel.reports {
            let (adj, t) = adjoint_at(inst, r);
            lo = lo.min(adj.min());
            mass = mass.max((adj.mass() - 1.0).abs());
            td = td.max(t);
        }
        (inst.name.clone(), lo, mass, td)
    });
    let pass = rows.iter().all(|(_, lo, mass, td)| *lo >= -1e-14 && *mass <= 1e-10 && *td <= 1e-12);
    let lo = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mass = rows.iter().map(|r| r.2).fold(0.0f64, f64::max);
    let td = rows.iter().map(|r| r.3).fold(0.0f64, f64::max);
    outcome(
        pass,
        format!(
            "{} instances x {} points: min theta {lo:.1e} >= -1e-14, mass defect {mass:.1e} <= 1e-10, transpose {td:.1e} <= 1e-12",
            rows.len(),
            EPS.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let inst = instances::first_order(1);
    let est = estimate_ergodic_constant(
        &inst.model,
        &inst.diffusion,
        grid(1, 4096),
        &[4e-3, 2e-3, 1e-3],
        1e-3,
        &base(),
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = (0.97..=1.03).contains(&est.c) && secs < 180.0;
    outcome(pass, format!("c = {:.6} in [0.97, 1.03] (max V = 1), {secs:.1}s < 180s", est.c))
}

fn criterion_4() -> Outcome {
    let etas = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let g = grid(1, N_1D);
    let slopes: Vec<(String, f64)> = exec::map_items(&nontrivial_1d(), |inst| {
        let sols: Vec<SolveReport> = etas
            .iter()
            .map(|&eta| solve_discounted(&inst.model, &inst.diffusion, g, &base().with_eps_eta(1e-2, eta)).unwrap())
            .collect();
        let diffs: Vec<f64> = sols.windows(2).map(|p| p[0].solution.sup_distance(&p[1].solution)).collect();
        (inst.name.clone(), common::loglog_slope(&etas[..4], &diffs))
    });
    let pass = slopes.iter().all(|(_, s)| *s >= 0.9);
    let detail = slopes.iter().map(|(n, s)| format!("{n} {s:.3}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("slope of |u^eta - u^eta/2| >= 0.9: {detail}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let etas = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
    let cases = [(instances::degenerate(1), 0.45), (instances::uniform(1), 0.9)];
    let slopes = exec::map_items(&cases, |(inst, _)| {
        let reports = default_sweep(inst, 4096);
        let r = reports.last().unwrap();
        commutation_study(&r.solution, &inst.model, &inst.diffusion, &ZerothOrder::from_report(r), &etas, &[])
            .unwrap()
            .slope
    });
    let secs = start.elapsed().as_secs_f64();
    let pass = slopes.iter().zip(&cases).all(|(s, (_, t))| *s >= *t) && secs < 120.0;
    outcome(
        pass,
        format!(
            "N = 4096: degenerate slope {:.3} >= 0.45, a = 1 slope {:.3} >= 0.9, {secs:.1}s < 120s",
            slopes[0], slopes[1]
        ),
    )
}

fn criterion_6() -> Outcome {
    let basis = TrigBasis::new(1, 4);
    let rows = exec::map_items(&nontrivial_1d(), |inst| {
        let (mut gaps, mut hols) = (Vec::new(), Vec::new());
        for r in &default_sweep(inst, N_1D) {
            let (adj, _) = adjoint_at(inst, r);
            let mu = velocity_measure(inst, r, &adj);
            let d = diagnose(&mu, &inst.model, &inst.diffusion, &basis, None, &[]).unwrap();
            gaps.push((d.action + r.c_estimate).abs());
            hols.push(d.max_holonomy);
        }
        (inst.name.clone(), gaps, hols)
    });
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, gaps, hols) in &rows {
        let (g0, g1) = (gaps[0], *gaps.last().unwrap());
        let h1 = *hols.last().unwrap();
        let decreasing = hols.windows(2).all(|p| p[1] < p[0]);
        pass &= g1 <= 0.05 && g1 < g0 && h1 <= 0.05 && decreasing;
        parts.push(format!("{name} gap {g1:.1e} (first {g0:.1e}) hol {h1:.1e} decreasing={decreasing}"));
    }
    outcome(pass, format!("gap <= 0.05 and < first, holonomy <= 0.05: {}", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let cases = [instances::uniform(1), instances::degenerate(1)];
    let rows = exec::map_items(&cases, |inst| {
        let g = grid(1, N_1D);
        let mut worst = 0.0f64;
        for r in &default_sweep(inst, N_1D) {
            // pair with the ergodic limit of the same regularized scheme
            let (est, last) = ergodic_limit(&inst.model, &inst.diffusion, g, r.eta, &base()).unwrap();
            let (adj, _) = adjoint_at(inst, &last);
            let mu = velocity_measure(inst, &last, &adj);
            worst = worst.max(key1_check(&r.normalized(est.c), &mu).abs());
        }
        (inst.name.clone(), worst)
    });
    let pass = rows.iter().all(|(_, k)| *k <= 0.05);
    let detail = rows.iter().map(|(n, k)| format!("{n} {k:.1e}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("max |<u^eps, mu>| <= 0.05: {detail}"))
}

fn criterion_8(runs: &[(ProblemInstance, SelectionResult)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (inst, sel) in runs {
        let d = sel.cauchy_differences();
        let ok = cauchy_trend(&d);
        pass &= ok;
        parts.push(format!("{} {:.1e}->{:.1e}", inst.name, d[d.len() - 2], d[d.len() - 1]));
    }
    let (inst, sel) = runs.iter().find(|(i, _)| i.name == "uniform").unwrap();
    let finest = sel.reports.last().unwrap();
    let (adj, _) = adjoint_at(inst, finest);
    let mu = velocity_measure(inst, finest, &adj);
    let pairing = key1_check(&sel.u0, &mu).abs();
    pass &= pairing <= 0.05;

    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::with_defaults(ExperimentKind::Full, instances::catalogue_1d(), dir.path().to_path_buf());
    let m = run_experiment(&cfg, &RunOptions { seedless: true, ..Default::default() }).unwrap();
    let secs = start.elapsed().as_secs_f64();
    pass &= m.passed() && secs < 900.0;
    outcome(
        pass,
        format!(
            "Cauchy decreasing: {}; a = 1 |<u0, mu>| {pairing:.1e} <= 0.05; full 1-D suite {} checks pass = {} in {secs:.1}s < 900s",
            parts.join(", "),
            m.checks.len(),
            m.passed()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let all: Vec<ProblemInstance> = instances::catalogue_1d().into_iter().chain(instances::catalogue_2d()).collect();
    for inst in &all {
        match validate_assumptions(&inst.model, &inst.diffusion, 200) {
            Ok(v) => {
                let ok = v.degeneracy_constant.is_finite() && v.checks.iter().all(|(_, b)| *b);
                pass &= ok;
                parts.push(format!("{} C = {:.3}", inst.name, v.degeneracy_constant));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{} error {e}", inst.name));
            }
        }
    }
    let negative = DiffusionCoefficient::new(PeriodicFunction::cosine(1, [1, 0], 1.0));
    let model = HamiltonianModel::quadratic(PeriodicFunction::zero(1));
    let rejected = match validate_assumptions(&model, &negative, 200) {
        Err(HjError::AssumptionViolated { bound, .. }) => {
            parts.push(format!("a = cos 2 pi x rejected: {bound} violated"));
            bound.contains("a ≥ 0")
        }
        _ => false,
    };
    pass &= rejected;
    outcome(pass, parts.join(", "))
}

fn criterion_10() -> Outcome {
    let inst = instances::double_degenerate();
    let reports = default_sweep(&inst, N_1D);
    let finest = reports.last().unwrap();
    let (adj, _) = adjoint_at(&inst, finest);
    let mu = velocity_measure(&inst, finest, &adj);
    let at_zero = DiscreteMeasure::dirac(1, [0.0, 0.0], [0.0, 0.0]);
    let at_half = DiscreteMeasure::dirac(1, [0.5, 0.0], [0.0, 0.0]);
    let basis = TrigBasis::new(1, 4);
    let report = minimization_check(
        &mu,
        &[at_zero.clone(), at_half.clone()],
        &inst.model,
        &inst.diffusion,
        &basis,
        1e-12,
        1.0,
    )
    .unwrap();
    // the check itself errors out on a non-holonomic competitor
    let own = report.action;
    let a0 = action(&at_zero, &inst.model).unwrap();
    let a_half = action(&at_half, &inst.model).unwrap();
    let hol = report.competitors.iter().map(|c| c.holonomy).fold(0.0f64, f64::max);
    let pass = own <= a_half - 1.5 && (own - a0).abs() <= 0.1;
    outcome(
        pass,
        format!(
            "action(mu) {own:.4} <= action(delta(1/2,0)) - 1.5 = {:.4}; |action(mu) - action(delta(0,0))| {:.1e} <= 0.1; competitor holonomy {hol:.0e}",
            a_half - 1.5,
            (own - a0).abs()
        ),
    )
}

fn main() {
    // `cargo test -- <filter>` passes arguments through; honour --list only
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let runs = selection_runs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 trivial exactness", Box::new(criterion_1)),
        ("2 adjoint structural invariants", Box::new(|| criterion_2(&runs))),
        ("3 ergodic constant", Box::new(criterion_3)),
        ("4 eta-regularization rate", Box::new(criterion_4)),
        ("5 commutation rate", Box::new(criterion_5)),
        ("6 measure identities", Box::new(criterion_6)),
        ("7 key1 pairing", Box::new(criterion_7)),
        ("8 selection", Box::new(|| criterion_8(&runs))),
        ("9 assumption validation", Box::new(criterion_9)),
        ("10 holonomic minimization", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
