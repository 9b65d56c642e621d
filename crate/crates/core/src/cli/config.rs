//! Experiment configuration files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lebesgue_maps::{Atom, Exponent, FiniteMeasureSpace};
use crate::suites::{Settings, Tolerances};
use crate::target_spaces::{TargetSpace, TargetSpec};

/// A configuration problem, located by file position or by field.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    Io { path: PathBuf, message: String },
    Syntax { path: PathBuf, line: usize, column: usize, message: String },
    Field { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            ConfigError::Syntax { path, line, column, message } => {
                write!(f, "{}:{line}:{column}: {message}", path.display())
            }
            ConfigError::Field { field, message } => write!(f, "field `{field}`: {message}"),
        }
    }
}

fn field(name: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        field: name.to_string(),
        message: message.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    /// Each atom weighs `1 / count`.
    Uniform,
    /// Each atom weighs 1.
    Unit,
    /// Atom `i` weighs `i + 1`, normalized to total mass 1.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Atom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_law: Option<WeightLaw>,
}

impl BaseConfig {
    pub fn build(&self) -> Result<FiniteMeasureSpace, ConfigError> {
        let space = match (&self.atoms, self.count) {
            (Some(atoms), None) => {
                if self.weight_law.is_some() {
                    return Err(field("base.weight_law", "only allowed together with `count`"));
                }
                FiniteMeasureSpace::new(atoms.clone())
            }
            (None, Some(n)) => {
                if n == 0 {
                    return Err(field("base.count", "must be positive"));
                }
                let weights: Vec<f64> = match self.weight_law.unwrap_or(WeightLaw::Uniform) {
                    WeightLaw::Uniform => vec![1.0 / n as f64; n],
                    WeightLaw::Unit => vec![1.0; n],
                    WeightLaw::Linear => {
                        let total = (n * (n + 1)) as f64 / 2.0;
                        (1..=n).map(|i| i as f64 / total).collect()
                    }
                };
                FiniteMeasureSpace::from_weights(&weights)
            }
            _ => return Err(field("base", "give exactly one of `atoms` or `count`")),
        };
        space.map_err(|e| field("base", e))
    }
}

/// One experiment, as read from a JSON file. Every field is optional.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub base: Option<BaseConfig>,
    #[serde(default)]
    pub p: Option<Exponent>,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    /// Validates every field and turns the file into suite settings.
    pub fn settings(&self, seed_flag: Option<u64>, tolerance_flags: &[(String, f64)]) -> Result<Settings, ConfigError> {
        let mut s = Settings::new(seed_flag.or(self.seed).unwrap_or(0));
        if let Some(spec) = &self.target {
            s.target = Some(TargetSpace::from_spec(spec).map_err(|e| field("target", e))?);
        }
        if let Some(base) = &self.base {
            s.base = Some(base.build()?);
        }
        s.p = self.p;
        if let Some(g) = self.grid {
            if g < 3 {
                return Err(field("grid", "need at least 3 nodes"));
            }
            s.grid = Some(g);
        }
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(field("trials", "must be positive"));
            }
            s.trials = Some(t);
        }
        let mut tolerances = Tolerances::default();
        for (name, value) in &self.tolerances {
            tolerances
                .set(name, *value)
                .map_err(|e| field(&format!("tolerances.{name}"), e))?;
        }
        for (name, value) in tolerance_flags {
            tolerances
                .set(name, *value)
                .map_err(|e| field(&format!("--tolerance {name}"), e))?;
        }
        s.tolerances = tolerances;
        Ok(s)
    }
}
