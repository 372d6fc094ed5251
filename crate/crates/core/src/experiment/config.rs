//! Experiment configuration: sectioned TOML validated against a fixed schema.
//!
//! Every problem is reported at once, each with the offending key and, when
//! it can be located, its line.

use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{HjError, Result};
use crate::hamiltonian::{
    DiffusionCoefficient, HamiltonianKind, HamiltonianModel, PeriodicFunction, Point, TrigTerm,
};
use crate::instances::{self, ProblemInstance};
use crate::solver::EtaRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigErrorKind {
    MissingField,
    InvalidRange,
    UnknownKey,
    Syntax,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    /// Dotted key path, e.g. `sweep.eps`.
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = match self.line {
            Some(l) => format!(" (key `{}`, line {l})", self.key),
            None => format!(" (key `{}`)", self.key),
        };
        match self.kind {
            ConfigErrorKind::MissingField => write!(f, "missing field: {}{loc}", self.message),
            ConfigErrorKind::InvalidRange => write!(f, "invalid range: {}{loc}", self.message),
            ConfigErrorKind::UnknownKey => write!(f, "unknown key{loc}"),
            ConfigErrorKind::Syntax => write!(f, "syntax error: {}", self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Solve,
    Adjoint,
    Measure,
    Commutation,
    Selection,
    Full,
}

impl ExperimentKind {
    pub const NAMES: [&'static str; 6] = ["solve", "adjoint", "measure", "commutation", "selection", "full"];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => Self::Solve,
            "adjoint" => Self::Adjoint,
            "measure" => Self::Measure,
            "commutation" => Self::Commutation,
            "selection" => Self::Selection,
            "full" => Self::Full,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        Self::NAMES[*self as usize]
    }

    pub fn includes_adjoint(&self) -> bool {
        matches!(self, Self::Adjoint | Self::Measure | Self::Full)
    }

    pub fn includes_measures(&self) -> bool {
        matches!(self, Self::Measure | Self::Full)
    }

    pub fn includes_commutation(&self) -> bool {
        matches!(self, Self::Commutation | Self::Full)
    }

    pub fn includes_selection(&self) -> bool {
        matches!(self, Self::Selection | Self::Full)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Tolerances {
    pub tol_res: f64,
    pub max_steps: usize,
    pub tol_key1: f64,
    pub tol_action: f64,
    pub tol_holonomy: f64,
    pub tol_gap: f64,
    pub slope_degenerate: f64,
    pub slope_regular: f64,
    pub ae_tau: f64,
    pub holonomy_modes: i32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_res: 1e-9,
            max_steps: 200,
            tol_key1: 0.05,
            tol_action: 0.05,
            tol_holonomy: 0.05,
            tol_gap: 2e-2,
            slope_degenerate: 0.45,
            slope_regular: 0.9,
            ae_tau: 0.05,
            holonomy_modes: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub output_dir: PathBuf,
    pub x0: Point,
    pub problems: Vec<ProblemInstance>,
    /// Empty means the per-dimension default.
    pub grid_sizes: Vec<usize>,
    pub eps: Vec<f64>,
    pub eta_rule: EtaRule,
    pub tolerances: Tolerances,
    pub commutation_etas: Vec<f64>,
    /// Empty means the per-dimension default.
    pub probes: Vec<Point>,
    pub write_fields: bool,
    /// SHA-256 of the source text.
    pub hash: String,
}

/// `eps = 0.1 * 2^-k`, `k = 0..5`.
pub fn default_eps() -> Vec<f64> {
    (0..6).map(|k| 0.1 / f64::from(1u32 << k)).collect()
}

/// `{1/16, ..., 1/256}`
pub fn default_commutation_etas() -> Vec<f64> {
    (4..=8).map(|k| 1.0 / f64::from(1u32 << k)).collect()
}

pub fn default_grid_size(dim: usize) -> usize {
    if dim == 1 {
        1024
    } else {
        128
    }
}

impl ExperimentConfig {
    /// Config with the default sweep for the given problems.
    pub fn with_defaults(kind: ExperimentKind, problems: Vec<ProblemInstance>, output_dir: PathBuf) -> Self {
        Self {
            kind,
            output_dir,
            x0: [0.0, 0.0],
            problems,
            grid_sizes: Vec::new(),
            eps: default_eps(),
            eta_rule: EtaRule::EpsSquared,
            tolerances: Tolerances::default(),
            commutation_etas: default_commutation_etas(),
            probes: Vec::new(),
            write_fields: true,
            hash: String::new(),
        }
    }

    pub fn grid_sizes_for(&self, dim: usize) -> Vec<usize> {
        if self.grid_sizes.is_empty() {
            vec![default_grid_size(dim)]
        } else {
            self.grid_sizes.clone()
        }
    }

    pub fn probes_for(&self, dim: usize) -> Vec<Point> {
        if !self.probes.is_empty() {
            return self.probes.clone();
        }
        if dim == 1 {
            vec![[0.0, 0.0], [0.25, 0.0], [0.5, 0.0]]
        } else {
            vec![[0.0, 0.0], [0.25, 0.25], [0.5, 0.5]]
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("experiment", &["kind", "output_dir", "x0"]),
    (
        "problem",
        &["preset", "presets", "name", "hamiltonian", "dim", "potential", "diffusion"],
    ),
    ("grid", &["sizes"]),
    ("sweep", &["eps", "eta_rule", "eta", "eta_factor"]),
    (
        "tolerances",
        &[
            "tol_res",
            "max_steps",
            "tol_key1",
            "tol_action",
            "tol_holonomy",
            "tol_gap",
            "slope_degenerate",
            "slope_regular",
            "ae_tau",
            "holonomy_modes",
        ],
    ),
    ("commutation", &["etas", "probes"]),
    ("output", &["write_fields"]),
];

struct Ctx<'a> {
    src: &'a str,
    errors: Vec<ConfigError>,
}

impl<'a> Ctx<'a> {
    /// Line of `key = ...` inside `[section]`, 1-based.
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        for (n, raw) in self.src.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('[') && !line.starts_with("[[") {
                current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
                if key.is_empty() && current == section {
                    return Some(n + 1);
                }
                continue;
            }
            if current == section && !key.is_empty() {
                if let Some(rest) = line.strip_prefix(key) {
                    if rest.trim_start().starts_with('=') {
                        return Some(n + 1);
                    }
                }
            }
        }
        None
    }

    fn push(&mut self, kind: ConfigErrorKind, section: &str, key: &str, message: impl Into<String>) {
        let line = self.line_of(section, key);
        let full = if key.is_empty() {
            section.to_string()
        } else {
            format!("{section}.{key}")
        };
        self.errors.push(ConfigError {
            kind,
            key: full,
            line,
            message: message.into(),
        });
    }

    fn range(&mut self, section: &str, key: &str, message: impl Into<String>) {
        self.push(ConfigErrorKind::InvalidRange, section, key, message);
    }

    fn missing(&mut self, section: &str, key: &str) {
        self.push(
            ConfigErrorKind::MissingField,
            section,
            key,
            format!("`{section}.{key}` is required"),
        );
    }

    fn number(&mut self, section: &str, key: &str, v: &Value) -> Option<f64> {
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.range(section, key, format!("{key} must be a number"));
                None
            }
        }
    }

    fn numbers(&mut self, section: &str, key: &str, v: &Value) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.range(section, key, format!("{key} must be an array of numbers"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for it in items {
            out.push(self.number(section, key, it)?);
        }
        Some(out)
    }

    fn point(&mut self, section: &str, key: &str, v: &Value) -> Option<Point> {
        let xs = self.numbers(section, key, v)?;
        if xs.is_empty() || xs.len() > 2 {
            self.range(section, key, format!("{key} must have 1 or 2 coordinates"));
            return None;
        }
        Some([xs[0], xs.get(1).copied().unwrap_or(0.0)])
    }

    fn positive(&mut self, section: &str, key: &str, v: &Value) -> Option<f64> {
        let x = self.number(section, key, v)?;
        if !(x > 0.0 && x.is_finite()) {
            self.range(section, key, format!("{key} must be > 0"));
            return None;
        }
        Some(x)
    }

    fn terms(&mut self, section: &str, key: &str, v: &Value) -> Option<Vec<TrigTerm>> {
        let Value::Array(items) = v else {
            self.range(section, key, format!("{key} must be an array of terms"));
            return None;
        };
        let mut out = Vec::new();
        for it in items {
            let Value::Table(t) = it else {
                self.range(section, key, format!("{key} entries must be tables {{ k, cos, sin }}"));
                return None;
            };
            for k in t.keys() {
                if !["k", "cos", "sin"].contains(&k.as_str()) {
                    self.push(ConfigErrorKind::UnknownKey, section, &format!("{key}.{k}"), "");
                }
            }
            let Some(kv) = t.get("k") else {
                self.missing(section, &format!("{key}.k"));
                return None;
            };
            let Value::Array(ks) = kv else {
                self.range(section, key, "term frequency k must be an integer array");
                return None;
            };
            let mut freq = [0i32; 2];
            if ks.is_empty() || ks.len() > 2 {
                self.range(section, key, "term frequency k must have 1 or 2 entries");
                return None;
            }
            for (d, kk) in ks.iter().enumerate() {
                match kk.as_integer() {
                    Some(i) if i.abs() <= 64 => freq[d] = i as i32,
                    _ => {
                        self.range(section, key, "term frequencies must be integers with |k| <= 64");
                        return None;
                    }
                }
            }
            let cos = match t.get("cos") {
                Some(c) => self.number(section, key, c)?,
                None => 0.0,
            };
            let sin = match t.get("sin") {
                Some(s) => self.number(section, key, s)?,
                None => 0.0,
            };
            out.push(TrigTerm { k: freq, cos, sin });
        }
        Some(out)
    }
}

pub fn parse_config_str(src: &str) -> Result<ExperimentConfig> {
    let table: Table = match src.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(HjError::Config(ConfigErrors(vec![ConfigError {
                kind: ConfigErrorKind::Syntax,
                key: String::new(),
                line: None,
                message: e.to_string().trim().to_string(),
            }])))
        }
    };
    let mut cx = Ctx { src, errors: Vec::new() };

    for (name, value) in &table {
        match SCHEMA.iter().find(|(s, _)| s == name) {
            None => cx.push(ConfigErrorKind::UnknownKey, name, "", ""),
            Some((_, keys)) => match value {
                Value::Table(t) => {
                    for k in t.keys() {
                        if !keys.contains(&k.as_str()) {
                            cx.push(ConfigErrorKind::UnknownKey, name, k, "");
                        }
                    }
                }
                _ => cx.range(name, "", format!("`{name}` must be a section")),
            },
        }
    }
    let empty = Table::new();
    let section = |name: &str| -> &Table {
        match table.get(name) {
            Some(Value::Table(t)) => t,
            _ => &empty,
        }
    };

    // [experiment]
    let exp = section("experiment");
    let kind = match exp.get("kind") {
        None => {
            cx.missing("experiment", "kind");
            None
        }
        Some(Value::String(s)) => match ExperimentKind::parse(s) {
            Some(k) => Some(k),
            None => {
                cx.range(
                    "experiment",
                    "kind",
                    format!("kind must be one of {}", ExperimentKind::NAMES.join(", ")),
                );
                None
            }
        },
        Some(_) => {
            cx.range("experiment", "kind", "kind must be a string");
            None
        }
    };
    let output_dir = match exp.get("output_dir") {
        None => PathBuf::from("hjlab-out"),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(_) => {
            cx.range("experiment", "output_dir", "output_dir must be a string");
            PathBuf::from("hjlab-out")
        }
    };
    let x0 = exp
        .get("x0")
        .and_then(|v| cx.point("experiment", "x0", v))
        .unwrap_or([0.0, 0.0]);

    // [problem]
    let problems = parse_problems(&mut cx, section("problem"), table.contains_key("problem"));

    // [grid]
    let mut grid_sizes = Vec::new();
    if let Some(v) = section("grid").get("sizes") {
        if let Some(xs) = cx.numbers("grid", "sizes", v) {
            for x in xs {
                let n = x as usize;
                if x.fract() != 0.0 || x < 8.0 || !n.is_power_of_two() {
                    cx.range("grid", "sizes", "grid sizes must be powers of two >= 8");
                    break;
                }
                grid_sizes.push(n);
            }
            if grid_sizes.is_empty() && cx.errors.iter().all(|e| e.key != "grid.sizes") {
                cx.range("grid", "sizes", "sizes must not be empty");
            }
        }
    }

    // [sweep]
    let sweep = section("sweep");
    let mut eps = default_eps();
    if let Some(v) = sweep.get("eps") {
        if let Some(xs) = cx.numbers("sweep", "eps", v) {
            if xs.is_empty() {
                cx.range("sweep", "eps", "eps must not be empty");
            } else if xs.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                cx.range("sweep", "eps", "eps must be > 0");
            } else if xs.windows(2).any(|p| p[1] >= p[0]) {
                cx.range("sweep", "eps", "eps must be strictly decreasing");
            } else {
                eps = xs;
            }
        }
    }
    let eta = sweep.get("eta").and_then(|v| {
        let x = cx.number("sweep", "eta", v)?;
        if !(x >= 0.0 && x.is_finite()) {
            cx.range("sweep", "eta", "eta must be >= 0");
            return None;
        }
        Some(x)
    });
    let eta_factor = sweep
        .get("eta_factor")
        .and_then(|v| cx.positive("sweep", "eta_factor", v));
    let eta_rule = match sweep.get("eta_rule") {
        None => EtaRule::EpsSquared,
        Some(Value::String(s)) => match s.as_str() {
            "eps_squared" => EtaRule::EpsSquared,
            "eps_linear" => EtaRule::EpsLinear(eta_factor.unwrap_or(1.0)),
            "fixed" => match eta {
                Some(e) => EtaRule::Fixed(e),
                None => {
                    if !sweep.contains_key("eta") {
                        cx.missing("sweep", "eta");
                    }
                    EtaRule::EpsSquared
                }
            },
            _ => {
                cx.range("sweep", "eta_rule", "eta_rule must be one of fixed, eps_squared, eps_linear");
                EtaRule::EpsSquared
            }
        },
        Some(_) => {
            cx.range("sweep", "eta_rule", "eta_rule must be a string");
            EtaRule::EpsSquared
        }
    };

    // [tolerances]
    let tol = section("tolerances");
    let mut tolerances = Tolerances::default();
    {
        let mut pos = |key: &str, slot: &mut f64| {
            if let Some(v) = tol.get(key) {
                if let Some(x) = cx.positive("tolerances", key, v) {
                    *slot = x;
                }
            }
        };
        pos("tol_res", &mut tolerances.tol_res);
        pos("tol_key1", &mut tolerances.tol_key1);
        pos("tol_action", &mut tolerances.tol_action);
        pos("tol_holonomy", &mut tolerances.tol_holonomy);
        pos("tol_gap", &mut tolerances.tol_gap);
        pos("slope_degenerate", &mut tolerances.slope_degenerate);
        pos("slope_regular", &mut tolerances.slope_regular);
        pos("ae_tau", &mut tolerances.ae_tau);
    }
    for (key, slot) in [("max_steps", 0usize), ("holonomy_modes", 1usize)] {
        if let Some(v) = tol.get(key) {
            match v.as_integer() {
                Some(i) if i >= 1 && i <= 1_000_000_000 => {
                    if slot == 0 {
                        tolerances.max_steps = i as usize;
                    } else if i <= 32 {
                        tolerances.holonomy_modes = i as i32;
                    } else {
                        cx.range("tolerances", key, "holonomy_modes must be <= 32");
                    }
                }
                _ => cx.range("tolerances", key, format!("{key} must be a positive integer")),
            }
        }
    }

    // [commutation]
    let comm = section("commutation");
    let mut commutation_etas = default_commutation_etas();
    if let Some(v) = comm.get("etas") {
        if let Some(xs) = cx.numbers("commutation", "etas", v) {
            if xs.is_empty() || xs.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
                cx.range("commutation", "etas", "etas must be non-empty and lie in (0, 1/2]");
            } else {
                commutation_etas = xs;
            }
        }
    }
    let mut probes = Vec::new();
    if let Some(v) = comm.get("probes") {
        match v {
            Value::Array(items) => {
                for it in items {
                    if let Some(p) = cx.point("commutation", "probes", it) {
                        probes.push(p);
                    }
                }
            }
            _ => cx.range("commutation", "probes", "probes must be an array of points"),
        }
    }

    let write_fields = match section("output").get("write_fields") {
        None => true,
        Some(Value::Boolean(b)) => *b,
        Some(_) => {
            cx.range("output", "write_fields", "write_fields must be true or false");
            true
        }
    };

    if !cx.errors.is_empty() {
        return Err(HjError::Config(ConfigErrors(cx.errors)));
    }
    let hash = format!("{:x}", Sha256::digest(src.as_bytes()));
    Ok(ExperimentConfig {
        kind: kind.expect("validated"),
        output_dir,
        x0,
        problems,
        grid_sizes,
        eps,
        eta_rule,
        tolerances,
        commutation_etas,
        probes,
        write_fields,
        hash,
    })
}

fn parse_problems(cx: &mut Ctx, t: &Table, present: bool) -> Vec<ProblemInstance> {
    if !present {
        cx.missing("problem", "preset");
        return Vec::new();
    }
    let custom = t.contains_key("hamiltonian") || t.contains_key("potential") || t.contains_key("diffusion");
    let mut names: Vec<String> = Vec::new();
    if let Some(v) = t.get("preset") {
        match v {
            Value::String(s) => names.push(s.clone()),
            _ => cx.range("problem", "preset", "preset must be a string"),
        }
    }
    if let Some(v) = t.get("presets") {
        match v {
            Value::Array(items) => {
                for it in items {
                    match it.as_str() {
                        Some(s) => names.push(s.to_string()),
                        None => cx.range("problem", "presets", "presets must be strings"),
                    }
                }
            }
            _ => cx.range("problem", "presets", "presets must be an array of strings"),
        }
    }
    if custom && !names.is_empty() {
        cx.range("problem", "preset", "give either a preset or a custom problem, not both");
        return Vec::new();
    }
    if !custom {
        if names.is_empty() && !t.contains_key("preset") && !t.contains_key("presets") {
            cx.missing("problem", "preset");
        }
        let mut out = Vec::new();
        for n in names {
            match instances::by_name(&n) {
                Some(p) => out.push(p),
                None => {
                    let known: Vec<String> = instances::catalogue_1d()
                        .into_iter()
                        .chain(instances::catalogue_2d())
                        .map(|p| p.name)
                        .collect();
                    cx.range(
                        "problem",
                        if t.contains_key("preset") { "preset" } else { "presets" },
                        format!("unknown preset '{n}' (known: {})", known.join(", ")),
                    );
                }
            }
        }
        return out;
    }

    let kind = match t.get("hamiltonian") {
        None => {
            cx.missing("problem", "hamiltonian");
            None
        }
        Some(Value::String(s)) if s == "quadratic" => Some(HamiltonianKind::Quadratic),
        Some(Value::String(s)) if s == "quartic" => Some(HamiltonianKind::Quartic),
        Some(_) => {
            cx.range("problem", "hamiltonian", "hamiltonian must be quadratic or quartic");
            None
        }
    };
    let dim = match t.get("dim") {
        None => {
            cx.missing("problem", "dim");
            None
        }
        Some(v) => match v.as_integer() {
            Some(d @ (1 | 2)) => Some(d as usize),
            _ => {
                cx.range("problem", "dim", "dim must be 1 or 2");
                None
            }
        },
    };
    let potential = match t.get("potential") {
        None => Some(Vec::new()),
        Some(v) => cx.terms("problem", "potential", v),
    };
    let diffusion = match t.get("diffusion") {
        None => {
            cx.missing("problem", "diffusion");
            None
        }
        Some(v) => cx.terms("problem", "diffusion", v),
    };
    let name = match t.get("name") {
        None => "custom".to_string(),
        Some(Value::String(s)) if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') => {
            s.clone()
        }
        Some(_) => {
            cx.range("problem", "name", "name must be a non-empty [A-Za-z0-9_-] string");
            "custom".to_string()
        }
    };
    let (Some(kind), Some(dim), Some(pot), Some(dif)) = (kind, dim, potential, diffusion) else {
        return Vec::new();
    };
    if dim == 1 && pot.iter().chain(&dif).any(|t| t.k[1] != 0) {
        cx.range("problem", "dim", "1-D terms must have a single frequency");
        return Vec::new();
    }
    let model = HamiltonianModel::new(kind, PeriodicFunction::new(dim, pot));
    let a = DiffusionCoefficient::new(PeriodicFunction::new(dim, dif));
    if a.min_sampled() < -1e-12 {
        cx.range("problem", "diffusion", "diffusion must be >= 0 everywhere");
        return Vec::new();
    }
    vec![ProblemInstance::new(&name, model, a)]
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
kind = "solve"

[problem]
hamiltonian = "quadratic"
dim = 1
potential = [{ k = [1], cos = 1.0 }]
diffusion = [{ k = [0], cos = 1.0 }]

[sweep]
eps = [0.1]
"#;

    fn errors(src: &str) -> Vec<ConfigError> {
        match parse_config_str(src) {
            Err(HjError::Config(ConfigErrors(v))) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.kind, ExperimentKind::Solve);
        assert_eq!(c.eps, vec![0.1]);
        assert_eq!(c.problems.len(), 1);
        assert!(!c.problems[0].diffusion.is_degenerate());
        assert_eq!(c.eta_rule, EtaRule::EpsSquared);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn zero_eps_is_out_of_range() {
        let e = errors(&MINIMAL.replace("eps = [0.1]", "eps = [0.0]"));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, ConfigErrorKind::InvalidRange);
        assert!(e[0].to_string().starts_with("invalid range: eps must be > 0"));
        assert_eq!(e[0].line, Some(12));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = errors(&MINIMAL.replace("[sweep]", "[sweep]\ntheta_init = 3"));
        assert_eq!(e[0].kind, ConfigErrorKind::UnknownKey);
        assert_eq!(e[0].key, "sweep.theta_init");
        assert!(e[0].to_string().contains("unknown key"));
        let e = errors(&format!("{MINIMAL}\n[extras]\na = 1\n"));
        assert_eq!(e[0].key, "extras");
    }

    #[test]
    fn missing_fields_are_named() {
        let e = errors("[problem]\npreset = \"uniform\"\n");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, ConfigErrorKind::MissingField);
        assert_eq!(e[0].key, "experiment.kind");
        let e = errors("[experiment]\nkind = \"full\"\n");
        assert_eq!(e[0].key, "problem.preset");
    }

    #[test]
    fn errors_are_collected() {
        let src = MINIMAL
            .replace("eps = [0.1]", "eps = [0.1, 0.2]\neta_rule = \"fixed\"")
            .replace("kind = \"solve\"", "kind = \"solve\"\nbogus = 1");
        let e = errors(&src);
        let kinds: Vec<_> = e.iter().map(|x| x.kind).collect();
        assert!(kinds.contains(&ConfigErrorKind::UnknownKey));
        assert!(kinds.contains(&ConfigErrorKind::InvalidRange));
        assert!(kinds.contains(&ConfigErrorKind::MissingField));
    }

    #[test]
    fn presets_and_negative_diffusion() {
        let c = parse_config_str(
            "[experiment]\nkind = \"full\"\n[problem]\npresets = [\"trivial\", \"degenerate\"]\n",
        )
        .unwrap();
        assert_eq!(c.problems.len(), 2);
        assert_eq!(c.eps, default_eps());
        let e = errors(&MINIMAL.replace("cos = 1.0 }]\n\n[sweep]", "cos = -1.0 }]\n\n[sweep]"));
        assert!(e[0].to_string().contains("diffusion must be >= 0"));
    }

    #[test]
    fn syntax_errors_are_reported() {
        let e = errors("[experiment\nkind = 1");
        assert_eq!(e[0].kind, ConfigErrorKind::Syntax);
    }
}
