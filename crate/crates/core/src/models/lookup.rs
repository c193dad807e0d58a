//! A classifier that memorizes its training records.

use std::collections::HashMap;

use super::Classifier;
use crate::data::{Dataset, Record, Value};
use crate::error::{Error, Result};

type Key = Vec<(u8, u64)>;

fn key_of(record: &Record, features: &[usize]) -> Key {
    features
        .iter()
        .map(|&f| match record.get(f) {
            Value::Missing => (0, 0),
            Value::Cat(c) => (1, u64::from(c)),
            Value::Num(x) => (2, x.to_bits()),
        })
        .collect()
}

/// Returns the empirical label distribution of the exact feature vector when
/// it was seen in training, and a fallback distribution otherwise.
#[derive(Debug, Clone)]
pub struct MemorizingModel {
    classes: Vec<String>,
    features: Vec<usize>,
    table: HashMap<Key, Vec<f64>>,
    fallback: Vec<f64>,
}

impl MemorizingModel {
    /// Memorizes every labelled record of `ds`; unseen inputs get the uniform distribution.
    pub fn fit(ds: &Dataset) -> Result<MemorizingModel> {
        let target = ds.schema.label_index();
        let features = ds.schema.feature_indices();
        let classes = ds.schema.label_domain().to_vec();
        if classes.is_empty() {
            return Err(Error::InvalidArgument("label domain is empty".into()));
        }
        let mut counts: HashMap<Key, Vec<f64>> = HashMap::new();
        for record in &ds.records {
            if let Value::Cat(y) = record.get(target) {
                counts
                    .entry(key_of(record, &features))
                    .or_insert_with(|| vec![0.0; classes.len()])[y as usize] += 1.0;
            }
        }
        for dist in counts.values_mut() {
            let s: f64 = dist.iter().sum();
            dist.iter_mut().for_each(|v| *v /= s);
        }
        let k = classes.len();
        Ok(MemorizingModel {
            classes,
            features,
            table: counts,
            fallback: vec![1.0 / k as f64; k],
        })
    }

    pub fn with_fallback(mut self, fallback: Vec<f64>) -> Result<MemorizingModel> {
        if fallback.len() != self.classes.len() {
            return Err(Error::InvalidArgument("fallback length differs from the class count".into()));
        }
        self.fallback = fallback;
        Ok(self)
    }

    pub fn memorized(&self) -> usize {
        self.table.len()
    }
}

impl Classifier for MemorizingModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict_proba(&self, record: &Record) -> Result<Vec<f64>> {
        Ok(self
            .table
            .get(&key_of(record, &self.features))
            .cloned()
            .unwrap_or_else(|| self.fallback.clone()))
    }
}
