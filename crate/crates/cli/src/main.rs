use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hjlab::experiment::{emit_summary, parse_config, run_experiment, ExperimentConfig, ExperimentKind, RunOptions};
use hjlab::hamiltonian::validate_assumptions;
use hjlab::instances;

#[derive(Parser)]
#[command(name = "hjlab", version, about = "Discounted viscous Hamilton-Jacobi lab on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discounted equation along the eps sweep
    Solve(RunArgs),
    /// Solve plus adjoint densities and their checks
    Adjoint(RunArgs),
    /// Solve, adjoint and the induced measures with their diagnostics
    Measure(RunArgs),
    /// Mollification residual study on the finest solution
    Commutation(RunArgs),
    /// Normalized eps -> 0 sweep and its Cauchy differences
    Selection(RunArgs),
    /// Every stage
    Full(RunArgs),
    /// Check the config and the structural assumptions, without solving
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in problem instead of a config (repeatable)
    #[arg(long)]
    preset: Vec<String>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Write deterministic outputs (timing columns zeroed)
    #[arg(long)]
    seedless: bool,
}

fn load(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig, String> {
    if let Some(path) = &args.config {
        let mut cfg = parse_config(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.kind = kind;
        return Ok(cfg);
    }
    if args.preset.is_empty() {
        return Err("either --config or --preset is required".into());
    }
    let problems = args
        .preset
        .iter()
        .map(|n| instances::by_name(n).ok_or_else(|| format!("unknown preset '{n}'")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentConfig::with_defaults(kind, problems, PathBuf::from("hjlab-out")))
}

fn validate(cfg: &ExperimentConfig) -> bool {
    let mut ok = true;
    for p in &cfg.problems {
        let samples = if p.dim() == 1 { 1000 } else { 100 };
        match validate_assumptions(&p.model, &p.diffusion, samples) {
            Ok(r) => println!(
                "{}: convexity {:.3e}, superlinearity {:.3e}, |D_xH| constant {:.4}, |Da| constant {:.4}, degenerate {}",
                p.name,
                r.convexity_min_eigenvalue,
                r.superlinearity_ratio,
                r.dx_bound_constant,
                r.degeneracy_constant,
                p.diffusion.is_degenerate()
            ),
            Err(e) => {
                ok = false;
                println!("{}: {e}", p.name);
            }
        }
    }
    ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Solve(a) => (Some(ExperimentKind::Solve), a),
        Command::Adjoint(a) => (Some(ExperimentKind::Adjoint), a),
        Command::Measure(a) => (Some(ExperimentKind::Measure), a),
        Command::Commutation(a) => (Some(ExperimentKind::Commutation), a),
        Command::Selection(a) => (Some(ExperimentKind::Selection), a),
        Command::Full(a) => (Some(ExperimentKind::Full), a),
        Command::Validate(a) => (None, a),
    };
    let cfg = match load(args, kind.unwrap_or(ExperimentKind::Solve)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if kind.is_none() {
        return if validate(&cfg) { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    };
    if let Some(w) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions {
        output_dir: args.out.clone(),
        seedless: args.seedless,
    };
    match run_experiment(&cfg, &opts) {
        Ok(m) => {
            print!("{}", emit_summary(&m));
            println!("outputs in {}", m.output_dir.display());
            if m.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
