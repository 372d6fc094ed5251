//! Config-driven experiment runs.

pub mod config;
pub mod run;
pub mod summary;

pub use config::{parse_config, parse_config_str, ConfigError, ConfigErrorKind, ConfigErrors, ExperimentConfig, ExperimentKind, Tolerances};
pub use run::{run_experiment, CheckResult, Comparison, RunManifest, RunOptions, StageError};
pub use summary::emit_summary;
