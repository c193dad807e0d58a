//! Target models and the black-box facade the attacks query.

mod forest;
mod lookup;
mod mlp;
mod tree;

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeSchema, Dataset, Record, Value};
use crate::error::{Error, Result};

pub use forest::{Forest, ForestConfig};
pub use lookup::MemorizingModel;
pub use mlp::{Column, Encoder, Layer, Mlp, MlpConfig, Network};
pub use tree::{argmax, DecisionTree, Node, Split, SplitTest, TreeConfig};

/// Anything that maps a record to a distribution over its classes.
pub trait Classifier: Send + Sync {
    fn classes(&self) -> &[String];
    fn predict_proba(&self, record: &Record) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    Mlp,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelKind> {
        match s {
            "decision_tree" | "tree" | "dt" => Ok(ModelKind::DecisionTree),
            "random_forest" | "forest" | "rf" => Ok(ModelKind::RandomForest),
            "mlp" | "dnn" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    DecisionTree(DecisionTree),
    RandomForest(Forest),
    Mlp(Mlp),
}

/// A fitted model together with the schema and column roles it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema: AttributeSchema,
    pub features: Vec<usize>,
    pub target: usize,
    pub body: ModelBody,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub mlp: MlpConfig,
}

impl TrainedModel {
    /// Fits a model predicting `target` from `features` on every record of `ds`.
    pub fn fit(ds: &Dataset, kind: ModelKind, features: &[usize], target: usize, config: &ModelConfig) -> Result<TrainedModel> {
        if ds.is_empty() {
            return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
        }
        let rows: Vec<usize> = (0..ds.len()).collect();
        let body = match kind {
            ModelKind::DecisionTree => ModelBody::DecisionTree(DecisionTree::fit(ds, &rows, features, target, &config.tree)?),
            ModelKind::RandomForest => ModelBody::RandomForest(Forest::fit(ds, &rows, features, target, &config.forest)?),
            ModelKind::Mlp => ModelBody::Mlp(Mlp::fit(ds, &rows, features, target, &config.mlp)?),
        };
        Ok(TrainedModel {
            schema: ds.schema.clone(),
            features: features.to_vec(),
            target,
            body,
        })
    }

    /// Fits a target classifier: every attribute except the label predicts the label.
    pub fn fit_target(ds: &Dataset, kind: ModelKind, config: &ModelConfig) -> Result<TrainedModel> {
        let target = ds.schema.label_index();
        TrainedModel::fit(ds, kind, &ds.schema.feature_indices(), target, config)
    }

    pub fn kind(&self) -> ModelKind {
        match self.body {
            ModelBody::DecisionTree(_) => ModelKind::DecisionTree,
            ModelBody::RandomForest(_) => ModelKind::RandomForest,
            ModelBody::Mlp(_) => ModelKind::Mlp,
        }
    }

    fn check(&self, record: &Record) -> Result<()> {
        if record.len() != self.schema.len() {
            return Err(Error::InvalidArgument(format!(
                "record has {} values, model expects {}",
                record.len(),
                self.schema.len()
            )));
        }
        Ok(())
    }

    /// Prediction that tolerates missing inputs only where the model can
    /// represent them natively: trees and forests stop at the first split on a
    /// missing attribute, networks cannot and return an error.
    pub fn predict_with_missing(&self, record: &Record) -> Result<Vec<f64>> {
        self.check(record)?;
        match &self.body {
            ModelBody::Mlp(_) => {
                if self.features.iter().any(|&f| record.get(f).is_missing()) {
                    return Err(Error::Unsupported("network models cannot take missing inputs".into()));
                }
                self.predict_proba(record)
            }
            _ => self.predict_proba(record),
        }
    }

    /// Normalized per-attribute importance (total weighted impurity decrease).
    /// Networks have no such measure and yield `None`.
    pub fn importances(&self) -> Option<Vec<(String, f64)>> {
        let raw = match &self.body {
            ModelBody::DecisionTree(t) => t.raw_importances(self.schema.len()),
            ModelBody::RandomForest(f) => f.raw_importances(self.schema.len()),
            ModelBody::Mlp(_) => return None,
        };
        let total: f64 = raw.iter().sum();
        Some(
            self.features
                .iter()
                .map(|&f| {
                    let v = if total > 0.0 { raw[f] / total } else { 0.0 };
                    (self.schema.attributes[f].name.clone(), v)
                })
                .collect(),
        )
    }
}

impl Classifier for TrainedModel {
    fn classes(&self) -> &[String] {
        self.schema.attributes[self.target].domain().unwrap_or(&[])
    }

    fn predict_proba(&self, record: &Record) -> Result<Vec<f64>> {
        self.check(record)?;
        Ok(match &self.body {
            ModelBody::DecisionTree(t) => t.predict(record).to_vec(),
            ModelBody::RandomForest(f) => f.predict(record),
            ModelBody::Mlp(m) => m.predict(record),
        })
    }
}

pub const ARTIFACT_FORMAT: &str = "miai-target";
pub const ARTIFACT_VERSION: u32 = 1;

/// A saved target: the model plus the capabilities of its prediction interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetArtifact {
    pub format: String,
    pub version: u32,
    pub exposes_confidence: bool,
    pub model: TrainedModel,
}

impl TargetArtifact {
    pub fn new(model: TrainedModel, exposes_confidence: bool) -> TargetArtifact {
        TargetArtifact {
            format: ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            exposes_confidence,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<TargetArtifact> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if header.format != ARTIFACT_FORMAT {
            return Err(Error::Format(format!("not a target model artifact (format `{}`)", header.format)));
        }
        if header.version != ARTIFACT_VERSION {
            return Err(Error::Format(format!(
                "unsupported artifact version {} (expected {ARTIFACT_VERSION})",
                header.version
            )));
        }
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TargetArtifact> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TargetArtifact::from_json(&text)
    }

    pub fn into_target(self) -> BlackBoxTarget {
        BlackBoxTarget::new(Arc::new(self.model), self.exposes_confidence)
    }
}

/// Counts queries made through a [`BlackBoxTarget`].
#[derive(Debug, Default)]
pub struct QueryLedger(AtomicU64);

impl QueryLedger {
    pub fn record(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn count(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutput {
    /// Index into the target's classes; ties resolve to the lowest index.
    pub label: usize,
    /// Per-class confidences, only when the interface exposes them.
    pub confidences: Option<Vec<f64>>,
}

impl PredictionOutput {
    pub fn label_confidence(&self) -> Option<f64> {
        self.confidences.as_ref().map(|c| c[self.label])
    }
}

/// Query-only access to a model. Clones share the ledger.
#[derive(Clone)]
pub struct BlackBoxTarget {
    model: Arc<dyn Classifier>,
    exposes_confidence: bool,
    ledger: Arc<QueryLedger>,
}

impl std::fmt::Debug for BlackBoxTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlackBoxTarget")
            .field("classes", &self.model.classes())
            .field("exposes_confidence", &self.exposes_confidence)
            .field("queries", &self.queries())
            .finish()
    }
}

impl BlackBoxTarget {
    pub fn new(model: Arc<dyn Classifier>, exposes_confidence: bool) -> BlackBoxTarget {
        BlackBoxTarget {
            model,
            exposes_confidence,
            ledger: Arc::default(),
        }
    }

    /// Same model, labels only, with its own ledger.
    pub fn label_only(&self) -> BlackBoxTarget {
        BlackBoxTarget {
            model: Arc::clone(&self.model),
            exposes_confidence: false,
            ledger: Arc::default(),
        }
    }

    /// Same model and capabilities with a separate ledger.
    pub fn with_fresh_ledger(&self) -> BlackBoxTarget {
        BlackBoxTarget {
            model: Arc::clone(&self.model),
            exposes_confidence: self.exposes_confidence,
            ledger: Arc::default(),
        }
    }

    pub fn exposes_confidence(&self) -> bool {
        self.exposes_confidence
    }

    pub fn classes(&self) -> &[String] {
        self.model.classes()
    }

    pub fn queries(&self) -> u64 {
        self.ledger.count()
    }

    pub fn predict(&self, record: &Record) -> Result<PredictionOutput> {
        self.ledger.record();
        let proba = self.model.predict_proba(record)?;
        if proba.len() != self.classes().len() {
            return Err(Error::InvalidArgument("model returned a distribution of the wrong length".into()));
        }
        Ok(PredictionOutput {
            label: argmax(&proba),
            confidences: self.exposes_confidence.then_some(proba),
        })
    }
}

/// Model confusion matrix: `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ModelConfusionMatrix {
    /// Estimated `p(y' = predicted | y = actual)`; zero for an empty row.
    pub fn probability(&self, actual: usize, predicted: usize) -> f64 {
        let row: u64 = self.counts[actual].iter().sum();
        if row == 0 {
            0.0
        } else {
            self.counts[actual][predicted] as f64 / row as f64
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let diag: u64 = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        diag as f64 / total as f64
    }
}

/// Queries `target` once per labelled record of `ds` and tabulates the outcome.
pub fn confusion_matrix(target: &BlackBoxTarget, ds: &Dataset) -> Result<ModelConfusionMatrix> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("confusion matrix of an empty dataset".into()));
    }
    let label = ds.schema.label_index();
    let classes = target.classes().to_vec();
    let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
    for record in &ds.records {
        let Value::Cat(y) = record.get(label) else { continue };
        let mut query = record.clone();
        query.set(label, Value::Missing);
        let out = target.predict(&query)?;
        counts[y as usize][out.label] += 1;
    }
    Ok(ModelConfusionMatrix { classes, counts })
}
