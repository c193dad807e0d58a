//! Bagged ensemble of CART trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeConfig};
use crate::data::{Dataset, Record};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Split candidates per node; `None` uses the square root of the feature count.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 10,
            max_depth: 16,
            min_leaf: 5,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Each tree sees its own bootstrap sample drawn from a per-tree stream,
    /// so the result does not depend on how the work is scheduled.
    pub fn fit(ds: &Dataset, rows: &[usize], features: &[usize], target: usize, config: &ForestConfig) -> Result<Forest> {
        if config.trees == 0 {
            return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("no training rows".into()));
        }
        let max_features = config
            .max_features
            .unwrap_or_else(|| ((features.len() as f64).sqrt().ceil() as usize).max(1));
        let trees = (0..config.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(t as u64);
                let sample: Vec<usize> = (0..rows.len()).map(|_| rows[rng.gen_range(0..rows.len())]).collect();
                let tree_config = TreeConfig {
                    max_depth: config.max_depth,
                    min_leaf: config.min_leaf,
                    prune_fraction: 0.0,
                    max_features: Some(max_features),
                    seed: rng.gen(),
                };
                DecisionTree::fit(ds, &sample, features, target, &tree_config)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Forest { trees })
    }

    /// Mean of the trees' distributions; a tree stops at the first split on a
    /// missing attribute.
    pub fn predict(&self, record: &Record) -> Vec<f64> {
        let k = self.trees[0].n_classes;
        let mut out = vec![0.0; k];
        for tree in &self.trees {
            for (o, p) in out.iter_mut().zip(tree.predict(record)) {
                *o += p;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    pub fn raw_importances(&self, n_attributes: usize) -> Vec<f64> {
        let mut imp = vec![0.0; n_attributes];
        for tree in &self.trees {
            let t = tree.raw_importances(n_attributes);
            let s: f64 = t.iter().sum();
            if s > 0.0 {
                for (i, v) in imp.iter_mut().zip(t) {
                    *i += v / s;
                }
            }
        }
        imp
    }
}
