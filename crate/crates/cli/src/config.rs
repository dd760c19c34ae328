//! Run configuration: a TOML document plus `key=value` overrides.

use std::path::PathBuf;

use pinchfold::pinch::PinchLevel;
use pinchfold::FoldedNodeParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override `{0}`: expected key=value")]
    Override(String),
    #[error("no command given")]
    MissingCommand,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Classify,
    Canards,
    Primaries,
    SpecfunCheck,
    Manifolds,
    Branches,
    Repro,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Classify => "classify",
            Command::Canards => "canards",
            Command::Primaries => "primaries",
            Command::SpecfunCheck => "specfun-check",
            Command::Manifolds => "manifolds",
            Command::Branches => "branches",
            Command::Repro => "repro",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub mu: f64,
    pub eps: f64,
    pub level: PinchLevel,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            mu: 1.0 / 8.5,
            eps: 0.05,
            level: PinchLevel::Sans,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// `(A, y, z)` in the coordinates of the chosen pinch level.
    pub state: [f64; 3],
    pub t0: f64,
    pub t1: f64,
    pub tol: f64,
    pub sample_dt: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            state: [0.05, -2.0, 0.0],
            t0: 0.0,
            t1: 0.3,
            tol: 1e-10,
            sample_dt: Some(1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    /// `(y, z)` points on the switching manifold.
    pub points: Vec<[f64; 2]>,
    /// Coefficients `(b, c)` of a desingularized slow flow `b y + c z`.
    pub singularity: Option<[f64; 2]>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            points: vec![[0.0, -1.0]],
            singularity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CanardsConfig {
    /// Values of `mu` to enumerate; empty means `params.mu`.
    pub mu: Vec<f64>,
    pub scan_points: usize,
    pub tail_time: f64,
    pub arc_points: usize,
    pub tol: f64,
}

impl Default for CanardsConfig {
    fn default() -> Self {
        Self {
            mu: Vec::new(),
            scan_points: 4000,
            tail_time: 3.0,
            arc_points: 801,
            tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    /// Stiffness values for sections and branch sampling.
    pub k: Vec<f64>,
    /// Branches are continued down to this stiffness.
    pub k_low: f64,
    pub y_far: f64,
    /// Offset of the boundary line from the critical manifold in `U`.
    pub offset: f64,
    pub intervals: usize,
    pub section_ds_max: f64,
    pub branch_ds_max: f64,
    pub bvp_tol: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            k: vec![10.0, 50.0, 200.0],
            k_low: 1.0,
            y_far: 3.0,
            offset: 0.0,
            intervals: 400,
            section_ds_max: 2e-3,
            branch_ds_max: 0.1,
            bvp_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub out_dir: PathBuf,
    pub params: ParamsConfig,
    pub simulate: SimulateConfig,
    pub classify: ClassifyConfig,
    pub canards: CanardsConfig,
    pub continuation: ContinuationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            out_dir: PathBuf::from("pinchfold-out"),
            params: ParamsConfig::default(),
            simulate: SimulateConfig::default(),
            classify: ClassifyConfig::default(),
            canards: CanardsConfig::default(),
            continuation: ContinuationConfig::default(),
        }
    }
}

/// Parse `text` as TOML, apply `key=value` overrides (dotted keys, values as
/// TOML literals or bare strings) and deserialize.
pub fn load(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        let (key, value) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Override(o.clone()));
        }
        let value = parse_value(value.trim());
        set_path(&mut doc, key, value).map_err(|_| ConfigError::Override(o.clone()))?;
    }
    let cfg: RunConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    Ok(cfg)
}

fn parse_value(s: &str) -> toml::Value {
    format!("v = {s}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(s.to_string()))
}

fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().ok_or(())?;
    let mut t = doc;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or(())?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Folded-node parameters, rejecting values outside `0 < mu < 1`, `0 < eps < 1/2`.
    pub fn folded_node(&self) -> Result<FoldedNodeParams, ConfigError> {
        FoldedNodeParams::new(self.params.mu, self.params.eps).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<Command, ConfigError> {
        let cmd = self.command.ok_or(ConfigError::MissingCommand)?;
        self.folded_node()?;
        for &mu in &self.canards.mu {
            FoldedNodeParams::new(mu, self.params.eps).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let c = &self.continuation;
        if c.k.is_empty() || c.k.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(ConfigError::Invalid("continuation.k must be a non-empty list of positive stiffness values".into()));
        }
        if !(c.k_low > 0.0) || !(c.y_far > 0.0) || c.intervals < 50 {
            return Err(ConfigError::Invalid(
                "continuation needs k_low > 0, y_far > 0 and at least 50 mesh intervals".into(),
            ));
        }
        let s = &self.simulate;
        if !(s.t1 > s.t0) || !(s.tol > 0.0) {
            return Err(ConfigError::Invalid("simulate needs t1 > t0 and tol > 0".into()));
        }
        Ok(cmd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_has_defaults_and_no_command() {
        let c = load("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(matches!(c.validate(), Err(ConfigError::MissingCommand)));
    }

    #[test]
    fn overrides_apply_to_nested_keys() {
        let c = load(
            "command = \"canards\"\n[params]\nmu = 0.3\n",
            &["params.eps=0.04".into(), "continuation.k=[10, 20]".into(), "out_dir=results".into()],
        )
        .unwrap();
        assert_eq!(c.command, Some(Command::Canards));
        assert_eq!(c.params.mu, 0.3);
        assert_eq!(c.params.eps, 0.04);
        assert_eq!(c.continuation.k, vec![10.0, 20.0]);
        assert_eq!(c.out_dir, PathBuf::from("results"));
    }

    #[test]
    fn invalid_mu_cites_the_bound() {
        let c = load("command = \"primaries\"\n[params]\nmu = 1.5\n", &[]).unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("0 < mu < 1"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(load("[params]\nnu = 1\n", &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(load("", &["oops".into()]), Err(ConfigError::Override(_))));
    }
}
