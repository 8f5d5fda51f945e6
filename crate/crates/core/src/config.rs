//! Run configuration: a strict JSON schema with explicit, recorded defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::grid::{PeriodicGrid, SiteSpace};
use crate::hierarchy::{DiscreteKernel, GridTruncation, Storage, MAX_ORDER};
use crate::kernel::{Dispersal, KernelSpec, Profile};
use crate::scale::{ScaleError, ScaleParams};
use crate::sim::{Initial, SimConfig};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unknown key `{key}` in {section}{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey { section: String, key: String, suggestion: Option<String> },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("`{key}`: {constraint}")]
    Invalid { key: String, constraint: String },
}

fn invalid(key: &str, constraint: impl std::fmt::Display) -> ConfigFileError {
    ConfigFileError::Invalid { key: key.to_string(), constraint: constraint.to_string() }
}

/// Kernel section as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    PureDeath { mortality: f64 },
    CellDivision { mortality: f64, division_rate: f64, dispersal: Profile },
    Contact { mortality: f64, mass: f64, dispersal: Profile },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageChoice {
    Full,
    TranslationInvariant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub spacing: f64,
    pub dim: usize,
    pub max_order: usize,
    pub storage: StorageChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub alpha0: f64,
    pub alpha_star: f64,
    pub q: f64,
    pub tol: f64,
    pub time_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rk4Config {
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub replicas: usize,
    pub n_snapshots: usize,
    pub n_cap: usize,
    /// Distance-bin edges for the pair-correlation estimator.
    pub bins: Vec<f64>,
}

/// End time, absolute or as a fraction of the existence horizon `T(α_*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Absolute(f64),
    HorizonFraction { horizon_fraction: f64 },
}

/// A fully resolved configuration. Serializing it yields a config file that
/// reproduces the run with no defaults left to apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub scale: ScaleConfig,
    pub initial: Initial,
    pub t_end: TimeSpec,
    pub rk4: Rk4Config,
    pub sim: SimSection,
    pub seed: u64,
    pub output: PathBuf,
}

/// A parsed configuration and the defaults that were filled in.
#[derive(Clone, Debug)]
pub struct ParsedConfig {
    pub config: RunConfig,
    /// `"section.key = value"` for every default applied.
    pub defaults_applied: Vec<String>,
}

const TOP_KEYS: &[&str] = &["kernel", "grid", "scale", "initial", "t_end", "rk4", "sim", "seed", "output"];
const GRID_KEYS: &[&str] = &["length", "spacing", "dim", "max_order", "storage"];
const SCALE_KEYS: &[&str] = &["alpha0", "alpha_star", "q", "tol", "time_nodes"];
const RK4_KEYS: &[&str] = &["dt"];
const SIM_KEYS: &[&str] = &["replicas", "n_snapshots", "n_cap", "bins"];
const DISPERSAL_KEYS: &[&str] = &["profile", "scale"];
const TIME_KEYS: &[&str] = &["horizon_fraction"];

/// Spelling-insensitive form: no separators, small numbers as digits.
fn normalize_key(key: &str) -> String {
    let mut k = key.to_lowercase().replace(['_', '-'], "");
    for (word, digit) in [("zero", "0"), ("one", "1"), ("two", "2"), ("three", "3")] {
        k = k.replace(word, digit);
    }
    k
}

fn suggest(key: &str, allowed: &[&str]) -> Option<String> {
    let key = normalize_key(key);
    allowed
        .iter()
        .map(|a| (strsim::normalized_damerau_levenshtein(&key, &normalize_key(a)), *a))
        .filter(|(score, _)| *score >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, a)| a.to_string())
}

fn check_keys(map: &Map<String, Value>, section: &str, allowed: &[&str]) -> Result<(), ConfigFileError> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigFileError::UnknownKey {
                section: section.to_string(),
                key: key.clone(),
                suggestion: suggest(key, allowed),
            });
        }
    }
    Ok(())
}

fn object<'a>(value: &'a Value, section: &str) -> Result<&'a Map<String, Value>, ConfigFileError> {
    value.as_object().ok_or_else(|| invalid(section, "must be a JSON object"))
}

fn check_schema(root: &Value) -> Result<(), ConfigFileError> {
    let top = object(root, "the top level")?;
    check_keys(top, "the top level", TOP_KEYS)?;
    for (name, keys) in [("grid", GRID_KEYS), ("scale", SCALE_KEYS), ("rk4", RK4_KEYS), ("sim", SIM_KEYS)] {
        if let Some(v) = top.get(name) {
            check_keys(object(v, name)?, name, keys)?;
        }
    }
    let kernel = object(top.get("kernel").ok_or_else(|| ConfigFileError::Missing("kernel".into()))?, "kernel")?;
    let kind =
        kernel.get("type").and_then(Value::as_str).ok_or_else(|| ConfigFileError::Missing("kernel.type".into()))?;
    let kernel_keys: &[&str] = match kind {
        "pure-death" => &["type", "mortality"],
        "cell-division" => &["type", "mortality", "division_rate", "dispersal"],
        "contact" => &["type", "mortality", "mass", "dispersal"],
        other => {
            return Err(invalid(
                "kernel.type",
                format!("unknown kernel `{other}`; expected pure-death, cell-division or contact"),
            ))
        }
    };
    check_keys(kernel, "kernel", kernel_keys)?;
    if let Some(d) = kernel.get("dispersal") {
        check_keys(object(d, "kernel.dispersal")?, "kernel.dispersal", DISPERSAL_KEYS)?;
    }
    if let Some(init) = top.get("initial") {
        let init = object(init, "initial")?;
        let keys: &[&str] = match init.get("type").and_then(Value::as_str) {
            Some("poisson") => &["type", "density"],
            Some("points") => &["type", "points"],
            _ => return Err(invalid("initial.type", "expected `poisson` or `points`")),
        };
        check_keys(init, "initial", keys)?;
    }
    if let Some(Value::Object(t)) = top.get("t_end") {
        check_keys(t, "t_end", TIME_KEYS)?;
    }
    Ok(())
}

fn take<T: serde::de::DeserializeOwned>(value: &Value, key: &str) -> Result<T, ConfigFileError> {
    serde_json::from_value(value.clone()).map_err(|e| invalid(key, e))
}

/// Reads `section.key`, or applies and records a default.
fn field<T>(
    section: Option<&Value>,
    name: &str,
    key: &str,
    default: T,
    applied: &mut Vec<String>,
) -> Result<T, ConfigFileError>
where
    T: serde::de::DeserializeOwned + Serialize,
{
    match section.and_then(|s| s.get(key)) {
        Some(v) => take(v, &format!("{name}.{key}")),
        None => {
            applied.push(format!("{name}.{key} = {}", serde_json::to_string(&default).expect("plain value")));
            Ok(default)
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ParsedConfig, ConfigFileError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ParsedConfig, ConfigFileError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigFileError::Json(e.to_string()))?;
    check_schema(&root)?;
    let mut applied = Vec::new();
    let top = root.as_object().expect("checked");
    let kernel: KernelConfig = take(&top["kernel"], "kernel")?;

    let grid_v = top.get("grid");
    let grid = GridConfig {
        length: field(grid_v, "grid", "length", 10.0, &mut applied)?,
        spacing: field(grid_v, "grid", "spacing", 0.5, &mut applied)?,
        dim: field(grid_v, "grid", "dim", 1, &mut applied)?,
        max_order: field(grid_v, "grid", "max_order", 3, &mut applied)?,
        storage: field(grid_v, "grid", "storage", StorageChoice::TranslationInvariant, &mut applied)?,
    };
    let scale_v = top.get("scale");
    let scale = ScaleConfig {
        alpha0: field(scale_v, "scale", "alpha0", 0.0, &mut applied)?,
        alpha_star: field(scale_v, "scale", "alpha_star", -1.0, &mut applied)?,
        q: field(scale_v, "scale", "q", 2.0, &mut applied)?,
        tol: field(scale_v, "scale", "tol", 1e-8, &mut applied)?,
        time_nodes: field(scale_v, "scale", "time_nodes", 64, &mut applied)?,
    };
    let initial = match top.get("initial") {
        Some(v) => take(v, "initial")?,
        None => {
            applied.push("initial = {\"type\":\"poisson\",\"density\":1.0}".into());
            Initial::Poisson { density: 1.0 }
        }
    };
    let t_end: TimeSpec = take(top.get("t_end").ok_or_else(|| ConfigFileError::Missing("t_end".into()))?, "t_end")?;
    let rk4 = Rk4Config { dt: field(top.get("rk4"), "rk4", "dt", 1e-3, &mut applied)? };
    let sim_v = top.get("sim");
    let default_bins = {
        let hi = (0.5 * grid.length).min(3.0);
        (0..=6).map(|i| hi * i as f64 / 6.0).collect::<Vec<f64>>()
    };
    let sim = SimSection {
        replicas: field(sim_v, "sim", "replicas", 1000, &mut applied)?,
        n_snapshots: field(sim_v, "sim", "n_snapshots", 2, &mut applied)?,
        n_cap: field(sim_v, "sim", "n_cap", 1_000_000, &mut applied)?,
        bins: field(sim_v, "sim", "bins", default_bins, &mut applied)?,
    };
    let seed = field(Some(&root), "config", "seed", 0u64, &mut applied)?;
    let output = field(Some(&root), "config", "output", PathBuf::from("runs"), &mut applied)?;
    // Top-level defaults are recorded without a section prefix.
    for entry in applied.iter_mut() {
        if let Some(rest) = entry.strip_prefix("config.") {
            *entry = rest.to_string();
        }
    }
    let config = RunConfig { kernel, grid, scale, initial, t_end, rk4, sim, seed, output };
    config.validate()?;
    Ok(ParsedConfig { config, defaults_applied: applied })
}

impl RunConfig {
    /// Re-checks every constraint of the embedded sections.
    pub fn validate(&self) -> Result<(), ConfigFileError> {
        let spec = self.kernel_spec()?;
        let grid = self.grid()?;
        if !(1..=MAX_ORDER).contains(&self.grid.max_order) {
            return Err(invalid("grid.max_order", format!("must be between 1 and {MAX_ORDER}")));
        }
        DiscreteKernel::new(&spec, &SiteSpace::Periodic(grid)).map_err(|e| invalid("grid.length", e))?;
        let s = &self.scale;
        ScaleParams::new(s.alpha0, s.alpha_star, s.q, 0.0, 0.0).map_err(|e| match e {
            ScaleError::AlphaOrder { .. } => invalid(
                "scale.alpha0",
                format!(
                    "alpha0 ({}) must exceed alpha_star ({}): the solution exists only while the scale index can decrease",
                    s.alpha0, s.alpha_star
                ),
            ),
            ScaleError::BadQ(_) => invalid("scale.q", e),
            other => invalid("scale.alpha0", other),
        })?;
        if !(s.tol > 0.0) {
            return Err(invalid("scale.tol", "must be positive"));
        }
        if s.time_nodes == 0 {
            return Err(invalid("scale.time_nodes", "must be at least 1"));
        }
        if !(self.rk4.dt > 0.0 && self.rk4.dt.is_finite()) {
            return Err(invalid("rk4.dt", "must be positive"));
        }
        match self.t_end {
            TimeSpec::Absolute(t) if !(t >= 0.0 && t.is_finite()) => {
                return Err(invalid("t_end", "must be non-negative and finite"))
            }
            TimeSpec::HorizonFraction { horizon_fraction: f } if !(f >= 0.0 && f.is_finite()) => {
                return Err(invalid("t_end.horizon_fraction", "must be non-negative and finite"))
            }
            _ => {}
        }
        if self.sim.replicas < 2 {
            return Err(invalid("sim.replicas", "estimators need at least 2 replicas"));
        }
        self.sim_config(0.0).validate().map_err(|e| invalid("sim", e))?;
        let half = 0.5 * self.grid.length;
        let b = &self.sim.bins;
        if b.len() < 2 || b[0] < 0.0 || b.windows(2).any(|w| !(w[1] > w[0])) || b[b.len() - 1] > half {
            return Err(invalid("sim.bins", format!("edges must increase strictly within [0, L/2] = [0, {half}]")));
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, ConfigFileError> {
        let dim = self.grid.dim;
        let dispersal = |p: &Profile| Dispersal::new(dim, *p).map_err(|e| invalid("kernel.dispersal", e));
        let spec = match &self.kernel {
            KernelConfig::PureDeath { mortality } => KernelSpec::pure_death(*mortality),
            KernelConfig::CellDivision { mortality, division_rate, dispersal: p } => {
                KernelSpec::cell_division(*mortality, *division_rate, dispersal(p)?)
            }
            KernelConfig::Contact { mortality, mass, dispersal: p } => {
                KernelSpec::contact(*mortality, *mass, dispersal(p)?)
            }
        };
        spec.map_err(|e| invalid("kernel", e))
    }

    pub fn grid(&self) -> Result<PeriodicGrid, ConfigFileError> {
        PeriodicGrid::with_spacing(self.grid.dim, self.grid.length, self.grid.spacing).map_err(|e| invalid("grid", e))
    }

    /// The same configuration on a grid with twice the spacing, if it tiles.
    pub fn coarsened(&self) -> Option<RunConfig> {
        let mut c = self.clone();
        c.grid.spacing *= 2.0;
        c.grid().ok()?;
        DiscreteKernel::new(&c.kernel_spec().ok()?, &SiteSpace::Periodic(c.grid().ok()?)).ok()?;
        Some(c)
    }

    pub fn storage(&self) -> Storage {
        match self.grid.storage {
            StorageChoice::Full => Storage::Full,
            StorageChoice::TranslationInvariant => Storage::TranslationInvariant,
        }
    }

    pub fn sim_config(&self, t_end: f64) -> SimConfig {
        SimConfig {
            length: self.grid.length,
            dim: self.grid.dim,
            kernel: self.kernel_spec().expect("validated"),
            t_end,
            n_snapshots: self.sim.n_snapshots,
            initial: self.initial.clone(),
            n_cap: self.sim.n_cap,
            seed: self.seed,
            replicas: self.sim.replicas,
        }
    }
}

/// Everything the solvers need, built from a validated configuration.
#[derive(Clone, Debug)]
pub struct Problem {
    pub spec: KernelSpec,
    pub kernel: DiscreteKernel,
    pub k0: GridTruncation,
    pub scale: ScaleParams,
    pub t_end: f64,
}

impl RunConfig {
    /// Discretized kernel and scale parameters; `β̄` and `φ̄` take the larger
    /// of the continuum and discretized values.
    fn kernel_and_scale(&self) -> Result<(KernelSpec, DiscreteKernel, ScaleParams), ConfigFileError> {
        let spec = self.kernel_spec()?;
        let space = SiteSpace::Periodic(self.grid()?);
        let kernel = DiscreteKernel::new(&spec, &space).map_err(|e| invalid("grid", e))?;
        let s = &self.scale;
        let scale = ScaleParams::new(
            s.alpha0,
            s.alpha_star,
            s.q,
            spec.beta_bar().max(kernel.beta_bar()),
            spec.phi_bar().max(kernel.phi_bar()),
        )
        .map_err(|e| invalid("scale", e))?;
        Ok((spec, kernel, scale))
    }

    fn resolve_time(&self, scale: &ScaleParams) -> Result<f64, ConfigFileError> {
        match self.t_end {
            TimeSpec::Absolute(t) => Ok(t),
            TimeSpec::HorizonFraction { horizon_fraction } => {
                let t = horizon_fraction * scale.horizon();
                if t.is_finite() {
                    Ok(t)
                } else {
                    Err(invalid("t_end.horizon_fraction", "the horizon is infinite for this kernel"))
                }
            }
        }
    }

    /// The end time in absolute units.
    pub fn end_time(&self) -> Result<f64, ConfigFileError> {
        let (_, _, scale) = self.kernel_and_scale()?;
        self.resolve_time(&scale)
    }

    pub fn problem(&self) -> Result<Problem, ConfigFileError> {
        let (spec, kernel, scale) = self.kernel_and_scale()?;
        let density = match self.initial {
            Initial::Poisson { density } => density,
            Initial::Points { .. } => return Err(invalid("initial", "the solvers need a Poisson initial state")),
        };
        let k0 = GridTruncation::poisson(kernel.space(), self.storage(), self.grid.max_order, density)
            .map_err(|e| invalid("grid", e))?;
        let t_end = self.resolve_time(&scale)?;
        Ok(Problem { spec, kernel, k0, scale, t_end })
    }
}
