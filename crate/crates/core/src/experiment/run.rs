//! Experiment pipeline: solve sweeps, adjoint densities, measures,
//! commutation study and selection, per (instance, grid size) job.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use crate::adjoint::{
    adjoint_holonomy_defect, assemble_linearization, duality_check, solve_adjoint, transpose_defect, AdjointDensity,
};
use crate::commutation::{
    commutation_study, eta_sq_laplacian_bound, subsolution_equivalence_spotcheck, ZerothOrder,
};
use crate::error::{HjError, Result};
use crate::exec;
use crate::grid::{fmt_f64, GridField, MollifierKernel, TorusGrid, TrigBasis};
use crate::instances::ProblemInstance;
use crate::measures::{build_nu, diagnose, key1_check, pushforward_to_velocity, DiscreteMeasure, MASS_TOL};
use crate::solver::{assemble_selection, ergodic_limit, solve_sweep, SchemeParams, SolveReport};

/// Overrides applied on top of a parsed config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    /// Deterministic output: timing columns are written as zero.
    pub seedless: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Comparison {
    pub fn symbol(&self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        }
    }

    pub fn holds(&self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub instance: String,
    pub n: usize,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(check: &str, job: &Job, value: f64, comparison: Comparison, threshold: f64) -> Self {
        Self::with_pass(check, job, value, comparison, threshold, comparison.holds(value, threshold))
    }

    /// For checks whose verdict also depends on a trend, not only on the
    /// value column.
    fn with_pass(check: &str, job: &Job, value: f64, comparison: Comparison, threshold: f64, pass: bool) -> Self {
        Self {
            check: check.to_string(),
            instance: job.instance.name.clone(),
            n: job.n,
            value,
            comparison,
            threshold,
            pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageError {
    pub instance: String,
    pub n: usize,
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub parallel: bool,
    pub seedless: bool,
    pub output_dir: PathBuf,
    /// Paths relative to `output_dir`.
    pub artifacts: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub errors: Vec<StageError>,
    pub wall_time: f64,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
struct RunRow {
    instance: String,
    n: usize,
    k: usize,
    eps: f64,
    eta: f64,
    iterations: usize,
    residual: f64,
    tolerance: f64,
    floor_limited: bool,
    c_estimate: f64,
    c_at_x0: f64,
    wall_time: f64,
    mass: Option<f64>,
    min_theta: Option<f64>,
    transpose_defect: Option<f64>,
    duality_gap: Option<f64>,
    adjoint_holonomy: Option<f64>,
    action: Option<f64>,
    action_gap: Option<f64>,
    max_holonomy: Option<f64>,
    key1: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct SelectionCsvRow {
    instance: String,
    n: usize,
    eps: f64,
    eta: f64,
    iterations: usize,
    residual: f64,
    c_estimate: f64,
    c_ref: f64,
    cauchy: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct CommutationCsvRow {
    instance: String,
    n: usize,
    eta: f64,
    max_abs_s: f64,
    max_s: f64,
    max_r1: f64,
    max_abs_r2: f64,
    max_abs_r0: f64,
    eta2_lap: f64,
    eta2_lap_over_eta: f64,
    split_defect: f64,
    triangle_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
struct ProbeCsvRow {
    instance: String,
    n: usize,
    probe_x: f64,
    probe_y: f64,
    node: usize,
    eta: f64,
    s: f64,
    r2: f64,
}

struct Job<'a> {
    instance: &'a ProblemInstance,
    n: usize,
}

impl Job<'_> {
    fn tag(&self) -> String {
        format!("{}_N{}", self.instance.name, self.n)
    }
}

#[derive(Default)]
struct JobOutput {
    runs: Vec<RunRow>,
    selection: Vec<SelectionCsvRow>,
    commutation: Vec<CommutationCsvRow>,
    probes: Vec<ProbeCsvRow>,
    checks: Vec<CheckResult>,
    errors: Vec<StageError>,
    artifacts: Vec<String>,
}

impl JobOutput {
    fn error(&mut self, job: &Job, stage: &str, e: &HjError) {
        self.errors.push(StageError {
            instance: job.instance.name.clone(),
            n: job.n,
            stage: stage.to_string(),
            message: e.to_string(),
        });
    }
}

/// Runs every (instance, grid size) job of `config`, writes the CSV outputs,
/// `summary.csv` and `manifest.json`, and returns the manifest. Numerical
/// failures are recorded per stage rather than aborting the run.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let start = Instant::now();
    let out_dir = opts.output_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    fs::create_dir_all(&out_dir)?;
    if config.write_fields {
        fs::create_dir_all(out_dir.join("fields"))?;
        if config.kind.includes_measures() {
            fs::create_dir_all(out_dir.join("measures"))?;
        }
    }

    let jobs: Vec<Job> = config
        .problems
        .iter()
        .flat_map(|p| config.grid_sizes_for(p.dim()).into_iter().map(move |n| Job { instance: p, n }))
        .collect();
    let outputs = exec::map_items(&jobs, |job| run_job(config, opts, &out_dir, job));

    let mut manifest = RunManifest {
        config_hash: config.hash.clone(),
        kind: config.kind,
        parallel: exec::is_parallel(),
        seedless: opts.seedless,
        output_dir: out_dir.clone(),
        artifacts: Vec::new(),
        checks: Vec::new(),
        errors: Vec::new(),
        wall_time: 0.0,
    };
    let mut runs = Vec::new();
    let mut selection = Vec::new();
    let mut commutation = Vec::new();
    let mut probes = Vec::new();
    for o in outputs {
        runs.extend(o.runs);
        selection.extend(o.selection);
        commutation.extend(o.commutation);
        probes.extend(o.probes);
        manifest.checks.extend(o.checks);
        manifest.errors.extend(o.errors);
        manifest.artifacts.extend(o.artifacts);
    }

    write_rows(&out_dir, "runs.csv", &runs, &mut manifest.artifacts)?;
    if config.kind.includes_selection() {
        write_rows(&out_dir, "selection.csv", &selection, &mut manifest.artifacts)?;
    }
    if config.kind.includes_commutation() {
        write_rows(&out_dir, "commutation.csv", &commutation, &mut manifest.artifacts)?;
        write_rows(&out_dir, "probes.csv", &probes, &mut manifest.artifacts)?;
    }
    super::summary::write_summary_csv(&out_dir.join("summary.csv"), &manifest.checks)?;
    manifest.artifacts.push("summary.csv".into());
    manifest.artifacts.push("manifest.json".into());
    if !opts.seedless {
        manifest.wall_time = start.elapsed().as_secs_f64();
    }
    let f = BufWriter::new(File::create(out_dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(f, &manifest).map_err(|e| HjError::Io(e.into()))?;
    Ok(manifest)
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T], artifacts: &mut Vec<String>) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    artifacts.push(name.to_string());
    Ok(())
}

fn write_field(dir: &Path, rel: String, field: &GridField, name: &str, params: &[(&str, String)], o: &mut JobOutput) -> Result<()> {
    let f = BufWriter::new(File::create(dir.join(&rel))?);
    field.write_csv(f, name, params)?;
    o.artifacts.push(rel);
    Ok(())
}

/// Measure-side data at one sweep point.
struct MeasurePoint {
    mu: DiscreteMeasure,
}

/// Discrete ergodic limit at one regularization `eta`: the constant and,
/// when measures are needed, the limit measure.
struct ErgodicRef {
    eta: f64,
    c: f64,
    mu: Option<DiscreteMeasure>,
}

fn find_ref(refs: &[ErgodicRef], eta: f64) -> Option<&ErgodicRef> {
    refs.iter().find(|r| (r.eta - eta).abs() <= 1e-12 * eta.max(1e-300))
}

fn limit_measure(inst: &ProblemInstance, r: &SolveReport, base: &SchemeParams) -> Result<DiscreteMeasure> {
    let params = base.with_eps_eta(r.eps, r.eta);
    let op = assemble_linearization(&inst.model, &inst.diffusion, r.grid(), &r.solution, &params)?;
    let adj = solve_adjoint(&op, r.x0_node)?;
    let nu = build_nu(&r.solution, &adj, &inst.model)?;
    pushforward_to_velocity(&nu, &inst.model)
}

fn run_job(config: &ExperimentConfig, opts: &RunOptions, dir: &Path, job: &Job) -> JobOutput {
    let mut o = JobOutput::default();
    let inst = job.instance;
    let (model, diffusion) = (&inst.model, &inst.diffusion);
    let tol = &config.tolerances;
    let grid = match TorusGrid::new(inst.dim(), job.n) {
        Ok(g) => g,
        Err(e) => {
            o.error(job, "grid", &e);
            return o;
        }
    };
    let mut base = SchemeParams::new(config.eps[0], 0.0);
    base.tol_res = tol.tol_res;
    base.max_steps = tol.max_steps;
    base.x0 = config.x0;

    let reports = match solve_sweep(model, diffusion, grid, &config.eps, config.eta_rule, &base) {
        Ok(r) => r,
        Err(e) => {
            o.error(job, "solve", &e);
            return o;
        }
    };
    for (k, r) in reports.iter().enumerate() {
        o.runs.push(RunRow {
            instance: inst.name.clone(),
            n: job.n,
            k,
            eps: r.eps,
            eta: r.eta,
            iterations: r.iterations,
            residual: r.final_residual,
            tolerance: r.tolerance_used,
            floor_limited: r.floor_limited,
            c_estimate: r.c_estimate,
            c_at_x0: r.c_at_x0,
            wall_time: if opts.seedless { 0.0 } else { r.wall_time },
            ..RunRow::default()
        });
        if config.write_fields {
            let params = [("eps", fmt_f64(r.eps)), ("eta", fmt_f64(r.eta)), ("n", job.n.to_string())];
            if let Err(e) = write_field(dir, format!("fields/{}_k{k}_u.csv", job.tag()), &r.solution, "u", &params, &mut o) {
                o.error(job, "output", &e);
            }
        }
    }
    let ratio = reports
        .iter()
        .map(|r| r.final_residual / r.tolerance_used)
        .fold(0.0f64, f64::max);
    o.checks.push(CheckResult::new("solve.residual_ratio", job, ratio, Comparison::AtMost, 1.0));

    let kind = config.kind;
    let need_c = kind.includes_measures() || kind.includes_selection();
    // The ergodic constant and limit measure are taken at each distinct
    // `eta` of the sweep, so that eps-dependent quantities are compared with
    // the limit of the same regularized scheme.
    let mut refs: Vec<ErgodicRef> = Vec::new();
    if need_c {
        for r in &reports {
            if find_ref(&refs, r.eta).is_some() {
                continue;
            }
            let res = ergodic_limit(model, diffusion, grid, r.eta, &base).and_then(|(est, last)| {
                let mu = if kind.includes_measures() {
                    Some(limit_measure(inst, &last, &base)?)
                } else {
                    None
                };
                Ok(ErgodicRef { eta: r.eta, c: est.c, mu })
            });
            match res {
                Ok(e) => refs.push(e),
                Err(e) => o.error(job, "ergodic", &e),
            }
        }
    }
    let eta_min = reports.last().map(|r| r.eta).unwrap_or(0.0);
    let c_ref = find_ref(&refs, eta_min).map(|e| e.c);

    // Adjoint densities: at every sweep point, or only at the finest one
    // when just the selection pairing needs them.
    let adjoint_idx: Vec<usize> = if kind.includes_adjoint() {
        (0..reports.len()).collect()
    } else if kind.includes_selection() {
        vec![reports.len() - 1]
    } else {
        Vec::new()
    };
    let mut measures: Vec<Option<MeasurePoint>> = (0..reports.len()).map(|_| None).collect();
    if !adjoint_idx.is_empty() {
        adjoint_stage(config, dir, job, &reports, &adjoint_idx, &base, &mut measures, &mut o);
    }
    if kind.includes_measures() {
        measure_stage(config, job, &reports, &measures, &refs, &mut o);
    }
    if kind.includes_commutation() {
        commutation_stage(config, job, reports.last().expect("non-empty sweep"), &mut o);
    }
    if kind.includes_selection() {
        if let Some(c) = c_ref {
            selection_stage(config, job, &reports, measures.last().and_then(|m| m.as_ref()), c, &mut o);
        }
    }
    o
}

#[allow(clippy::too_many_arguments)]
fn adjoint_stage(
    config: &ExperimentConfig,
    dir: &Path,
    job: &Job,
    reports: &[SolveReport],
    idx: &[usize],
    base: &SchemeParams,
    measures: &mut [Option<MeasurePoint>],
    o: &mut JobOutput,
) {
    let inst = job.instance;
    let record_checks = config.kind.includes_adjoint();
    let basis = TrigBasis::new(inst.dim(), config.tolerances.holonomy_modes);
    let (mut min_theta, mut mass_defect, mut transpose, mut gap) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for &k in idx {
        let r = &reports[k];
        let params = base.with_eps_eta(r.eps, r.eta);
        let adj: Result<(AdjointDensity, f64)> = (|| {
            let op = assemble_linearization(&inst.model, &inst.diffusion, r.grid(), &r.solution, &params)?;
            let adj = solve_adjoint(&op, r.x0_node)?;
            let probe = r.centered.values();
            let ones = vec![1.0; op.len()];
            let td = transpose_defect(&op, probe, adj.theta.values()).max(transpose_defect(&op, &ones, probe));
            Ok((adj, td))
        })();
        let (adj, td) = match adj {
            Ok(v) => v,
            Err(e) => {
                o.error(job, "adjoint", &e);
                continue;
            }
        };
        let dual = duality_check(&inst.model, r, &adj);
        let hol = basis
            .functions()
            .iter()
            .map(|phi| adjoint_holonomy_defect(&inst.model, &inst.diffusion, r, &adj, phi))
            .fold(0.0f64, f64::max);
        min_theta = min_theta.min(adj.min());
        mass_defect = mass_defect.max((adj.mass() - 1.0).abs());
        transpose = transpose.max(td);
        gap = gap.max(dual);
        if let Some(row) = o.runs.iter_mut().find(|row| row.k == k) {
            row.mass = Some(adj.mass());
            row.min_theta = Some(adj.min());
            row.transpose_defect = Some(td);
            row.duality_gap = Some(dual);
            row.adjoint_holonomy = Some(hol);
        }
        if config.write_fields && record_checks {
            let params = [("eps", fmt_f64(r.eps)), ("eta", fmt_f64(r.eta)), ("n", job.n.to_string())];
            if let Err(e) = write_field(dir, format!("fields/{}_k{k}_theta.csv", job.tag()), &adj.theta, "theta", &params, o) {
                o.error(job, "output", &e);
            }
        }
        let mu = build_nu(&r.solution, &adj, &inst.model).and_then(|nu| pushforward_to_velocity(&nu, &inst.model));
        match mu {
            Ok(mu) => {
                if config.write_fields && config.kind.includes_measures() {
                    let rel = format!("measures/{}_k{k}_mu.csv", job.tag());
                    let res = File::create(dir.join(&rel))
                        .map_err(HjError::from)
                        .and_then(|f| mu.write_csv(BufWriter::new(f)));
                    match res {
                        Ok(()) => o.artifacts.push(rel),
                        Err(e) => o.error(job, "output", &e),
                    }
                }
                measures[k] = Some(MeasurePoint { mu });
            }
            Err(e) => o.error(job, "measure", &e),
        }
    }
    if record_checks && min_theta.is_finite() {
        o.checks.push(CheckResult::new("adjoint.min_theta", job, min_theta, Comparison::AtLeast, -1e-14));
        o.checks.push(CheckResult::new("adjoint.mass_defect", job, mass_defect, Comparison::AtMost, MASS_TOL));
        o.checks.push(CheckResult::new("adjoint.transpose_defect", job, transpose, Comparison::AtMost, 1e-12));
        o.checks.push(CheckResult::new("adjoint.duality_gap", job, gap, Comparison::AtMost, config.tolerances.tol_gap));
    }
}

/// Final value at most `threshold` and strictly below the first value,
/// unless the series is identically zero.
fn trend_check(name: &str, job: &Job, series: &[f64], threshold: f64) -> CheckResult {
    let last = *series.last().expect("non-empty");
    let pass = last <= threshold && (last < series[0] || (last == 0.0 && series[0] == 0.0));
    CheckResult::with_pass(name, job, last, Comparison::AtMost, threshold, pass)
}

fn measure_stage(
    config: &ExperimentConfig,
    job: &Job,
    reports: &[SolveReport],
    measures: &[Option<MeasurePoint>],
    refs: &[ErgodicRef],
    o: &mut JobOutput,
) {
    let inst = job.instance;
    let tol = &config.tolerances;
    let basis = TrigBasis::new(inst.dim(), tol.holonomy_modes);
    let (mut gaps, mut hols, mut key1s) = (Vec::new(), Vec::new(), Vec::new());
    for (k, (r, m)) in reports.iter().zip(measures).enumerate() {
        let Some(m) = m else { continue };
        let Some(lim) = find_ref(refs, r.eta) else { continue };
        let u = r.normalized(lim.c);
        let diag = match diagnose(&m.mu, &inst.model, &inst.diffusion, &basis, Some(&u), &[config.x0]) {
            Ok(d) => d,
            Err(e) => {
                o.error(job, "measure", &e);
                continue;
            }
        };
        let key1 = lim.mu.as_ref().map(|mu| key1_check(&u, mu));
        let gap = (diag.action + r.c_estimate).abs();
        gaps.push(gap);
        hols.push(diag.max_holonomy);
        key1s.extend(key1.map(f64::abs));
        if let Some(row) = o.runs.iter_mut().find(|row| row.k == k) {
            row.action = Some(diag.action);
            row.action_gap = Some(gap);
            row.max_holonomy = Some(diag.max_holonomy);
            row.key1 = key1;
        }
    }
    if gaps.is_empty() {
        return;
    }
    o.checks.push(trend_check("measure.action_gap", job, &gaps, tol.tol_action));
    o.checks.push(trend_check("measure.holonomy", job, &hols, tol.tol_holonomy));
    if !key1s.is_empty() {
        let kmax = key1s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        o.checks.push(CheckResult::new("measure.key1", job, kmax, Comparison::AtMost, tol.tol_key1));
    }
}

fn commutation_stage(config: &ExperimentConfig, job: &Job, finest: &SolveReport, o: &mut JobOutput) {
    let inst = job.instance;
    let grid = finest.grid();
    let etas: Vec<f64> = config
        .commutation_etas
        .iter()
        .copied()
        .filter(|e| *e >= 2.0 * grid.h())
        .collect();
    if etas.len() < 2 {
        o.error(
            job,
            "commutation",
            &HjError::KernelUnderResolved {
                eta: config.commutation_etas.iter().copied().fold(f64::INFINITY, f64::min),
                h: grid.h(),
            },
        );
        return;
    }
    let zeroth = ZerothOrder::from_report(finest);
    let w = &finest.solution;
    let probes = config.probes_for(inst.dim());
    let res = (|| -> Result<_> {
        let study = commutation_study(w, &inst.model, &inst.diffusion, &zeroth, &etas, &probes)?;
        let kernels = etas
            .iter()
            .map(|&e| MollifierKernel::new(grid, e))
            .collect::<Result<Vec<_>>>()?;
        let bound = eta_sq_laplacian_bound(w, &kernels)?;
        let spot = subsolution_equivalence_spotcheck(w, &inst.model, &inst.diffusion, &zeroth, &kernels, config.tolerances.ae_tau)?;
        Ok((study, bound, spot))
    })();
    let (study, bound, spot) = match res {
        Ok(v) => v,
        Err(e) => {
            o.error(job, "commutation", &e);
            return;
        }
    };
    for (row, b) in study.rows.iter().zip(&bound.rows) {
        o.commutation.push(CommutationCsvRow {
            instance: inst.name.clone(),
            n: job.n,
            eta: row.eta,
            max_abs_s: row.max_abs_s,
            max_s: row.max_s,
            max_r1: row.max_r1,
            max_abs_r2: row.max_abs_r2,
            max_abs_r0: row.max_abs_r0,
            eta2_lap: row.eta2_lap,
            eta2_lap_over_eta: b.ratio,
            split_defect: row.split_defect,
            triangle_holds: row.triangle_holds,
        });
    }
    for p in &study.probes {
        for (j, eta) in p.eta.iter().enumerate() {
            o.probes.push(ProbeCsvRow {
                instance: inst.name.clone(),
                n: job.n,
                probe_x: p.probe[0],
                probe_y: p.probe[1],
                node: p.node,
                eta: *eta,
                s: p.s[j],
                r2: p.r2[j],
            });
        }
    }

    let a = &inst.diffusion;
    let threshold = if a.is_degenerate() && !a.function().is_zero() {
        config.tolerances.slope_degenerate
    } else {
        config.tolerances.slope_regular
    };
    let slope_or_floor = |name: &str, slope: f64, values: Vec<f64>, o: &mut JobOutput| {
        let vmax = values.into_iter().fold(0.0f64, f64::max);
        if vmax <= 1e-10 {
            o.checks.push(CheckResult::new(&format!("{name}_max"), job, vmax, Comparison::AtMost, 1e-10));
        } else {
            let slope = if slope.is_nan() { f64::NEG_INFINITY } else { slope };
            o.checks.push(CheckResult::new(&format!("{name}_slope"), job, slope, Comparison::AtLeast, threshold));
        }
    };
    if study.kinked(config.tolerances.ae_tau) {
        let r2 = study.rows.iter().map(|r| r.max_abs_r2).collect();
        slope_or_floor("commutation.r2", study.slope_r2, r2, o);
    } else {
        slope_or_floor("commutation.s", study.slope, study.max_abs_s(), o);
    }
    let defect = study.rows.iter().map(|r| r.split_defect).fold(0.0f64, f64::max);
    o.checks.push(CheckResult::new("commutation.split_identity", job, defect, Comparison::AtMost, 1e-8));
    let broken = study.rows.iter().filter(|r| !r.triangle_holds).count() as f64;
    o.checks.push(CheckResult::new("commutation.triangle_failures", job, broken, Comparison::AtMost, 0.0));
    o.checks.push(CheckResult::with_pass(
        "commutation.eta2_laplacian_growth",
        job,
        bound.growth,
        Comparison::AtMost,
        2.0,
        bound.bounded,
    ));
    o.checks.push(CheckResult::new(
        "commutation.ae_fraction",
        job,
        spot.ae_fraction,
        Comparison::AtLeast,
        crate::commutation::AE_FRACTION,
    ));
    let worst = spot.worst_ratio();
    o.checks.push(CheckResult::with_pass(
        "commutation.mollified_bound",
        job,
        worst,
        Comparison::AtMost,
        1.0,
        spot.mollified_pass,
    ));
}

fn selection_stage(
    config: &ExperimentConfig,
    job: &Job,
    reports: &[SolveReport],
    finest: Option<&MeasurePoint>,
    c: f64,
    o: &mut JobOutput,
) {
    let eps = &config.eps;
    let halving = eps.len() >= 3 && eps.windows(2).all(|p| ((p[0] / p[1]) - 2.0).abs() <= 1e-9);
    if !halving {
        o.error(
            job,
            "selection",
            &HjError::InvalidParams("selection needs at least three halving eps levels".into()),
        );
        return;
    }
    let sel = assemble_selection(reports.to_vec(), c);
    for row in &sel.table {
        o.selection.push(SelectionCsvRow {
            instance: job.instance.name.clone(),
            n: job.n,
            eps: row.eps,
            eta: row.eta,
            iterations: row.iterations,
            residual: row.residual,
            c_estimate: row.c_estimate,
            c_ref: c,
            cauchy: row.cauchy,
        });
    }
    let diffs = sel.cauchy_differences();
    let (prev, last) = (diffs[diffs.len() - 2], diffs[diffs.len() - 1]);
    o.checks.push(CheckResult::with_pass(
        "selection.cauchy_trend",
        job,
        last,
        Comparison::AtMost,
        prev,
        sel.converged,
    ));
    if let Some(m) = finest {
        let pairing = key1_check(&sel.u0, &m.mu).abs();
        o.checks.push(CheckResult::new(
            "selection.u0_pairing",
            job,
            pairing,
            Comparison::AtMost,
            config.tolerances.tol_key1,
        ));
    }
}
