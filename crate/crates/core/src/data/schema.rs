//! Attribute schema: column roles, categorical domains and quantile binning.
//!
//! The on-disk schema is a small TOML document:
//!
//! ```toml
//! name = "adult"
//!
//! [[attributes]]
//! name = "age"
//! kind = "continuous"
//! bins = 4
//!
//! [[attributes]]
//! name = "marital-status"
//! role = "sensitive"
//! domain = ["married", "single"]
//!
//! [[attributes]]
//! name = "income"
//! role = "target_label"
//! ```
//!
//! `kind` defaults to `categorical`, `role` to `nonsensitive`. A categorical
//! attribute without a `domain` has it inferred from data (sorted
//! lexicographically).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sensitive,
    Nonsensitive,
    TargetLabel,
}

/// Equal-frequency bins fitted on a training sample.
///
/// A value `v` falls in bin `#{edge < v}`, so values equal to an edge land in
/// the lower bin. `representatives` holds the lower median of the fitted
/// sample inside each bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub edges: Vec<f64>,
    pub representatives: Vec<f64>,
}

impl Binning {
    /// Fits at most `bins` quantile bins on `values`. Edges are sample values,
    /// deduplicated, and never equal to the sample maximum, so every bin is
    /// populated by the fitting sample.
    pub fn fit(values: &[f64], bins: usize) -> Result<Binning> {
        if bins == 0 {
            return Err(Error::InvalidArgument("bin count must be positive".into()));
        }
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit bins on an empty or non-finite sample".into(),
            ));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let max = sorted[n - 1];
        let mut edges: Vec<f64> = Vec::with_capacity(bins.saturating_sub(1));
        for j in 1..bins {
            // lower empirical quantile at j / bins
            let rank = (j * n).div_ceil(bins).max(1);
            let edge = sorted[rank - 1];
            if edge < max && edges.last().is_none_or(|&last| edge > last) {
                edges.push(edge);
            }
        }
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); edges.len() + 1];
        for &v in &sorted {
            buckets[bin_of(&edges, v)].push(v);
        }
        let representatives = buckets
            .iter()
            .map(|b| b[(b.len() - 1) / 2])
            .collect();
        Ok(Binning {
            edges,
            representatives,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bin_of(&self, raw: f64) -> usize {
        bin_of(&self.edges, raw)
    }

    pub fn tokens(&self) -> Vec<String> {
        (0..self.len()).map(bin_token).collect()
    }
}

fn bin_of(edges: &[f64], raw: f64) -> usize {
    edges.partition_point(|&e| e < raw)
}

pub fn bin_token(index: usize) -> String {
    format!("bin{index}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeKind {
    /// An empty domain means "infer from data".
    Categorical { domain: Vec<String> },
    Continuous {
        bins: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        binning: Option<Binning>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub role: Role,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn categorical(name: &str, role: Role, domain: &[&str]) -> Attribute {
        Attribute {
            name: name.to_string(),
            role,
            kind: AttributeKind::Categorical {
                domain: domain.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn continuous(name: &str, role: Role, bins: usize) -> Attribute {
        Attribute {
            name: name.to_string(),
            role,
            kind: AttributeKind::Continuous {
                bins,
                binning: None,
            },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, AttributeKind::Categorical { .. })
    }

    pub fn domain(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Categorical { domain } => Some(domain),
            AttributeKind::Continuous { .. } => None,
        }
    }

    pub fn binning(&self) -> Option<&Binning> {
        match &self.kind {
            AttributeKind::Continuous { binning, .. } => binning.as_ref(),
            AttributeKind::Categorical { .. } => None,
        }
    }

    /// Number of distinct categories: the domain size, or the fitted bin count.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            AttributeKind::Categorical { domain } => Some(domain.len()),
            AttributeKind::Continuous { binning, .. } => binning.as_ref().map(Binning::len),
        }
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.domain()?
            .iter()
            .position(|v| v == token)
            .map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(default)]
    #[allow(dead_code)]
    name: Option<String>,
    attributes: Vec<AttributeEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeEntry {
    name: String,
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(default = "default_role")]
    role: Role,
    #[serde(default)]
    domain: Vec<String>,
    bins: Option<usize>,
}

fn default_kind() -> String {
    "categorical".into()
}

fn default_role() -> Role {
    Role::Nonsensitive
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<AttributeSchema> {
        let schema = AttributeSchema { attributes };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_toml_str(text: &str) -> Result<AttributeSchema> {
        let file: SchemaFile = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let mut attributes = Vec::with_capacity(file.attributes.len());
        for entry in file.attributes {
            let kind = match entry.kind.as_str() {
                "categorical" => {
                    if entry.bins.is_some() {
                        return Err(Error::Schema(format!(
                            "categorical attribute `{}` cannot declare bins",
                            entry.name
                        )));
                    }
                    AttributeKind::Categorical {
                        domain: entry.domain,
                    }
                }
                "continuous" => {
                    if !entry.domain.is_empty() {
                        return Err(Error::Schema(format!(
                            "continuous attribute `{}` cannot declare a domain",
                            entry.name
                        )));
                    }
                    let bins = entry.bins.unwrap_or(DEFAULT_BINS);
                    if bins == 0 {
                        return Err(Error::Schema(format!(
                            "attribute `{}` needs a positive bin count",
                            entry.name
                        )));
                    }
                    AttributeKind::Continuous {
                        bins,
                        binning: None,
                    }
                }
                other => {
                    return Err(Error::Schema(format!(
                        "attribute `{}` has unknown kind `{other}`",
                        entry.name
                    )))
                }
            };
            attributes.push(Attribute {
                name: entry.name,
                role: entry.role,
                kind,
            });
        }
        AttributeSchema::new(attributes)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<AttributeSchema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AttributeSchema::from_toml_str(&text)
    }

    /// Structural checks. Inferred (empty) domains are checked once resolved.
    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for attr in &self.attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            if let AttributeKind::Categorical { domain } = &attr.kind {
                let distinct: BTreeSet<&String> = domain.iter().collect();
                if distinct.len() != domain.len() {
                    return Err(Error::Schema(format!(
                        "attribute `{}` repeats a domain value",
                        attr.name
                    )));
                }
            }
        }
        let labels = self
            .attributes
            .iter()
            .filter(|a| a.role == Role::TargetLabel)
            .count();
        if labels != 1 {
            return Err(Error::Schema(format!(
                "exactly one target_label attribute required, found {labels}"
            )));
        }
        if let Some(label) = self.attributes.iter().find(|a| a.role == Role::TargetLabel) {
            if !label.is_categorical() {
                return Err(Error::Schema(format!(
                    "target label `{}` must be categorical",
                    label.name
                )));
            }
        }
        if !self.attributes.iter().any(|a| a.role == Role::Sensitive) {
            return Err(Error::Schema("at least one sensitive attribute required".into()));
        }
        for attr in self.attributes.iter().filter(|a| a.role == Role::Sensitive) {
            if let AttributeKind::Categorical { domain } = &attr.kind {
                if domain.len() == 1 {
                    return Err(Error::Schema(format!(
                        "sensitive attribute `{}` needs at least two values",
                        attr.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that every categorical domain is resolved and that sensitive
    /// domains have at least two values.
    pub fn validate_resolved(&self) -> Result<()> {
        self.validate()?;
        for attr in &self.attributes {
            if let AttributeKind::Categorical { domain } = &attr.kind {
                let min = if attr.role == Role::Sensitive { 2 } else { 1 };
                if domain.len() < min {
                    return Err(Error::Schema(format!(
                        "attribute `{}` resolved to {} value(s), needs at least {min}",
                        attr.name,
                        domain.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown attribute `{name}`")))
    }

    pub fn attribute(&self, name: &str) -> Result<&Attribute> {
        Ok(&self.attributes[self.index(name)?])
    }

    pub fn label_index(&self) -> usize {
        self.attributes
            .iter()
            .position(|a| a.role == Role::TargetLabel)
            .expect("validated schema has a target label")
    }

    pub fn label_domain(&self) -> &[String] {
        self.attributes[self.label_index()]
            .domain()
            .expect("target label is categorical")
    }

    pub fn sensitive_indices(&self) -> Vec<usize> {
        self.indices_with_role(Role::Sensitive)
    }

    pub fn nonsensitive_indices(&self) -> Vec<usize> {
        self.indices_with_role(Role::Nonsensitive)
    }

    fn indices_with_role(&self, role: Role) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    /// Every attribute except the target label, in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        let label = self.label_index();
        (0..self.len()).filter(|&i| i != label).collect()
    }

    pub fn is_binned(&self, name: &str) -> Result<bool> {
        Ok(self.attribute(name)?.binning().is_some())
    }
}

/// Maps a raw numeric value of a continuous attribute to its bin token.
pub fn bin_value(schema: &AttributeSchema, attribute: &str, raw: f64) -> Result<String> {
    let attr = schema.attribute(attribute)?;
    match &attr.kind {
        AttributeKind::Continuous {
            binning: Some(b), ..
        } => Ok(bin_token(b.bin_of(raw))),
        AttributeKind::Continuous { binning: None, .. } => Err(Error::InvalidArgument(format!(
            "binning for `{attribute}` has not been fitted"
        ))),
        AttributeKind::Categorical { .. } => Err(Error::InvalidArgument(format!(
            "attribute `{attribute}` is categorical, not continuous"
        ))),
    }
}
