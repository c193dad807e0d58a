use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::attacks::{AttackKind, MAX_UNKNOWN_ATTRIBUTES};
use crate::data::{AttributeSchema, Role};
use crate::error::{Error, Result};
use crate::models::{ForestConfig, MlpConfig, ModelConfig, ModelKind, TreeConfig};

/// One experiment, fully described by a TOML document.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub data: DataConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub attack_model: ForestConfig,
    #[serde(default)]
    pub attacks: Vec<AttackConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub csv: PathBuf,
    pub schema: PathBuf,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub stratify: Option<String>,
}

fn default_train_fraction() -> f64 {
    0.75
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "yes")]
    pub exposes_confidence: bool,
    /// Load this saved model instead of training one.
    #[serde(default)]
    pub saved: Option<PathBuf>,
    #[serde(default)]
    pub tree: TreeConfig,
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(default)]
    pub mlp: MlpConfig,
}

fn default_kind() -> String {
    "decision_tree".into()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AttackSplit {
    #[default]
    Train,
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: String,
    /// One attribute, or two for a multi-attribute run.
    pub sensitive: Vec<String>,
    /// Positive value for binary metrics; defaults to the first domain value.
    #[serde(default)]
    pub positive: Option<String>,
    /// Non-sensitive attributes the adversary does not know.
    #[serde(default)]
    pub unknown: Vec<String>,
    /// Attack through a facade that hides confidence scores.
    #[serde(default)]
    pub label_only: bool,
    /// Guess distribution for random guessing; defaults to uniform.
    #[serde(default)]
    pub probability: Option<Vec<f64>>,
    #[serde(default)]
    pub split: AttackSplit,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Attributes to break attack results down by.
    #[serde(default)]
    pub grouping: Vec<String>,
    /// Also attack the holdout split and compare.
    #[serde(default)]
    pub distributional: bool,
    #[serde(default)]
    pub per_class: bool,
}

impl AttackConfig {
    pub fn attack_kind(&self) -> Result<AttackKind> {
        self.kind.parse().map_err(|_| Error::Config(format!("unknown attack kind `{}`", self.kind)))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<ExperimentConfig> {
        let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        ExperimentConfig::from_toml_str(&text, base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(self.output.as_deref().unwrap_or(Path::new("out")))
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        self.target
            .kind
            .parse()
            .map_err(|_| Error::Config(format!("unknown target kind `{}`", self.target.kind)))
    }

    /// Model hyperparameters with every seed derived from the experiment seed.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            tree: TreeConfig {
                seed: self.seed,
                ..self.target.tree.clone()
            },
            forest: ForestConfig {
                seed: self.seed,
                ..self.target.forest.clone()
            },
            mlp: MlpConfig {
                seed: self.seed,
                ..self.target.mlp.clone()
            },
        }
    }

    pub fn attack_model_config(&self) -> ForestConfig {
        ForestConfig {
            seed: self.seed.wrapping_add(1),
            ..self.attack_model.clone()
        }
    }

    /// Checks everything that can be checked without data: kinds, capability
    /// combinations and the shape of each attack entry.
    pub fn validate(&self, label_only_override: bool) -> Result<()> {
        self.model_kind()?;
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(Error::Config("data.train_fraction must lie in (0, 1)".into()));
        }
        for (i, attack) in self.attacks.iter().enumerate() {
            let kind = attack.attack_kind()?;
            let at = format!("attack {} ({kind})", i + 1);
            if attack.sensitive.is_empty() || attack.sensitive.len() > 2 {
                return Err(Error::Config(format!("{at}: give one or two sensitive attributes")));
            }
            if attack.sensitive.len() == 2 && attack.sensitive[0] == attack.sensitive[1] {
                return Err(Error::Config(format!("{at}: the two sensitive attributes must differ")));
            }
            let confidence = self.target.exposes_confidence && !attack.label_only && !label_only_override;
            if kind.needs_confidence() && !confidence {
                return Err(Error::Capability(format!(
                    "{at} needs confidence scores but the target is label-only"
                )));
            }
            match kind {
                AttackKind::Fjrmia | AttackKind::Csmia if !attack.unknown.is_empty() => {
                    return Err(Error::Config(format!(
                        "{at}: unknown attributes need csmia_partial or lomia"
                    )));
                }
                AttackKind::CsmiaPartial if attack.unknown.is_empty() => {
                    return Err(Error::Config(format!("{at}: csmia_partial needs unknown attributes")));
                }
                AttackKind::CsmiaPartial if attack.unknown.len() > MAX_UNKNOWN_ATTRIBUTES => {
                    return Err(Error::Unsupported(format!(
                        "{at}: at most {MAX_UNKNOWN_ATTRIBUTES} unknown attributes are supported"
                    )));
                }
                _ => {}
            }
            if attack.sensitive.len() == 2
                && !matches!(kind, AttackKind::Fjrmia | AttackKind::Csmia | AttackKind::Lomia)
            {
                return Err(Error::Config(format!("{at}: no multi-attribute mode")));
            }
            if attack.probability.is_some() && kind != AttackKind::RandomGuess {
                return Err(Error::Config(format!("{at}: probability only applies to random_guess")));
            }
        }
        Ok(())
    }

    /// Checks attribute names and roles against the schema.
    pub fn validate_against(&self, schema: &AttributeSchema) -> Result<()> {
        for (i, attack) in self.attacks.iter().enumerate() {
            let at = format!("attack {}", i + 1);
            for name in &attack.sensitive {
                let attr = schema.attribute(name).map_err(|_| Error::Config(format!("{at}: unknown attribute `{name}`")))?;
                if attr.role != Role::Sensitive || !attr.is_categorical() {
                    return Err(Error::Config(format!("{at}: `{name}` is not a categorical sensitive attribute")));
                }
                if let Some(pos) = &attack.positive {
                    if attack.sensitive.len() == 1 && attr.index_of(pos).is_none() {
                        return Err(Error::Config(format!("{at}: `{pos}` is not a value of `{name}`")));
                    }
                }
            }
            for name in &attack.unknown {
                let attr = schema.attribute(name).map_err(|_| Error::Config(format!("{at}: unknown attribute `{name}`")))?;
                if attr.role != Role::Nonsensitive {
                    return Err(Error::Config(format!("{at}: `{name}` is not a non-sensitive attribute")));
                }
            }
        }
        for name in &self.analysis.grouping {
            schema
                .attribute(name)
                .map_err(|_| Error::Config(format!("unknown grouping attribute `{name}`")))?;
        }
        if let Some(s) = &self.data.stratify {
            schema
                .attribute(s)
                .map_err(|_| Error::Config(format!("unknown stratification attribute `{s}`")))?;
        }
        Ok(())
    }
}
