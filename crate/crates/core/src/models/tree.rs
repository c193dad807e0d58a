//! CART classification tree (Gini impurity) with reduced-error pruning.
//!
//! Categorical attributes split one-vs-rest (`x == v`), continuous ones on a
//! threshold (`x <= t`). Every node keeps the class distribution of the
//! training rows that reached it, so prediction can stop early: when a record
//! is missing the attribute a node splits on, that node's distribution is
//! returned (the "last prediction" strategy).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Dataset, Record, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Share of the training rows held out for reduced-error pruning; 0 disables pruning.
    pub prune_fraction: f64,
    /// Number of attributes sampled as split candidates at each node; `None` uses all.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 16,
            min_leaf: 2,
            prune_fraction: 0.1,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    Equals(u32),
    AtMost(f64),
}

impl SplitTest {
    /// `None` when the value is missing.
    fn goes_left(&self, value: Value) -> Option<bool> {
        match (self, value) {
            (_, Value::Missing) => None,
            (SplitTest::Equals(c), Value::Cat(v)) => Some(v == *c),
            (SplitTest::AtMost(t), Value::Num(x)) => Some(x <= *t),
            // kind mismatch cannot come from a validated record; treat as unknown
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub attribute: usize,
    pub test: SplitTest,
    pub left: usize,
    pub right: usize,
    /// Sample-weighted Gini decrease, used for attribute importance.
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub distribution: Vec<f64>,
    pub samples: usize,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_classes: usize,
}

fn gini(counts: &[f64], n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

struct Candidate {
    attribute: usize,
    test: SplitTest,
    gain: f64,
}

struct Builder<'a> {
    ds: &'a Dataset,
    labels: Vec<Option<u32>>,
    features: &'a [usize],
    n_classes: usize,
    config: &'a TreeConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &r in rows {
            if let Some(y) = self.labels[r] {
                counts[y as usize] += 1.0;
            }
        }
        counts
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&rows);
        let n = rows.len() as f64;
        let distribution = counts.iter().map(|c| c / n).collect();
        let id = self.nodes.len();
        self.nodes.push(Node {
            distribution,
            samples: rows.len(),
            split: None,
        });
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.config.max_depth || rows.len() < 2 * self.config.min_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(&rows) else {
            return id;
        };
        let (mut left, mut right, mut missing) = (Vec::new(), Vec::new(), Vec::new());
        for &r in &rows {
            match best.test.goes_left(self.ds.records[r].get(best.attribute)) {
                Some(true) => left.push(r),
                Some(false) => right.push(r),
                None => missing.push(r),
            }
        }
        if left.len() >= right.len() {
            left.extend(missing);
        } else {
            right.extend(missing);
        }
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id].split = Some(Split {
            attribute: best.attribute,
            test: best.test,
            left: l,
            right: r,
            decrease: best.gain * n,
        });
        id
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Candidate> {
        let mut features: Vec<usize> = self.features.to_vec();
        if let Some(m) = self.config.max_features {
            if m < features.len() {
                features.shuffle(&mut self.rng);
                features.truncate(m.max(1));
                features.sort_unstable();
            }
        }
        let n = rows.len() as f64;
        let mut best: Option<Candidate> = None;
        for &f in &features {
            let cand = match &self.ds.schema.attributes[f].kind {
                AttributeKind::Categorical { domain } => self.categorical_split(rows, f, domain.len(), n),
                AttributeKind::Continuous { .. } => self.numeric_split(rows, f, n),
            };
            if let Some(c) = cand {
                if c.gain > 1e-12 && best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn categorical_split(&self, rows: &[usize], f: usize, cardinality: usize, n: f64) -> Option<Candidate> {
        let k = self.n_classes;
        let mut per_cat = vec![0.0; cardinality * k];
        let mut cat_n = vec![0.0; cardinality];
        let mut known = vec![0.0; k];
        for &r in rows {
            let (Value::Cat(c), Some(y)) = (self.ds.records[r].get(f), self.labels[r]) else {
                continue;
            };
            per_cat[c as usize * k + y as usize] += 1.0;
            cat_n[c as usize] += 1.0;
            known[y as usize] += 1.0;
        }
        let nk: f64 = known.iter().sum();
        if nk == 0.0 {
            return None;
        }
        let parent = gini(&known, nk);
        let min_leaf = self.config.min_leaf as f64;
        let mut best: Option<Candidate> = None;
        let mut right = vec![0.0; k];
        for c in 0..cardinality {
            let ln = cat_n[c];
            let rn = nk - ln;
            if ln < min_leaf || rn < min_leaf || ln == 0.0 || rn == 0.0 {
                continue;
            }
            let left = &per_cat[c * k..(c + 1) * k];
            for j in 0..k {
                right[j] = known[j] - left[j];
            }
            let child = (ln / nk) * gini(left, ln) + (rn / nk) * gini(&right, rn);
            let gain = (nk / n) * (parent - child);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    attribute: f,
                    test: SplitTest::Equals(c as u32),
                    gain,
                });
            }
        }
        best
    }

    fn numeric_split(&self, rows: &[usize], f: usize, n: f64) -> Option<Candidate> {
        let k = self.n_classes;
        let mut pairs: Vec<(f64, u32)> = rows
            .iter()
            .filter_map(|&r| match (self.ds.records[r].get(f), self.labels[r]) {
                (Value::Num(x), Some(y)) => Some((x, y)),
                _ => None,
            })
            .collect();
        if pairs.len() < 2 {
            return None;
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nk = pairs.len() as f64;
        let mut known = vec![0.0; k];
        for &(_, y) in &pairs {
            known[y as usize] += 1.0;
        }
        let parent = gini(&known, nk);
        let min_leaf = self.config.min_leaf.max(1);
        let mut left = vec![0.0; k];
        let mut right = known.clone();
        let mut best: Option<Candidate> = None;
        for i in 0..pairs.len() - 1 {
            let y = pairs[i].1 as usize;
            left[y] += 1.0;
            right[y] -= 1.0;
            let (a, b) = (pairs[i].0, pairs[i + 1].0);
            if a == b {
                continue;
            }
            let ln = i + 1;
            let rn = pairs.len() - ln;
            if ln < min_leaf || rn < min_leaf {
                continue;
            }
            let (lf, rf) = (ln as f64, rn as f64);
            let child = (lf / nk) * gini(&left, lf) + (rf / nk) * gini(&right, rf);
            let gain = (nk / n) * (parent - child);
            if best.as_ref().is_none_or(|c| gain > c.gain) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Candidate {
                    attribute: f,
                    test: SplitTest::AtMost(threshold),
                    gain,
                });
            }
        }
        best
    }
}

impl DecisionTree {
    /// Fits a tree on `rows` of `ds` (duplicates allowed, as in bootstrap
    /// samples), predicting categorical attribute `target` from `features`.
    pub fn fit(
        ds: &Dataset,
        rows: &[usize],
        features: &[usize],
        target: usize,
        config: &TreeConfig,
    ) -> Result<DecisionTree> {
        let n_classes = ds.schema.attributes[target]
            .domain()
            .ok_or_else(|| Error::InvalidArgument("tree target must be categorical".into()))?
            .len();
        if features.contains(&target) {
            return Err(Error::InvalidArgument("target attribute cannot be a feature".into()));
        }
        let labels: Vec<Option<u32>> = ds.records.iter().map(|r| r.get(target).as_cat()).collect();
        let mut rows: Vec<usize> = rows.iter().copied().filter(|&r| labels[r].is_some()).collect();
        if rows.is_empty() {
            return Err(Error::InvalidArgument("no labelled training rows".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut holdout = Vec::new();
        if config.prune_fraction > 0.0 && rows.len() >= 20 {
            rows.shuffle(&mut rng);
            let h = ((rows.len() as f64) * config.prune_fraction).round() as usize;
            holdout = rows.split_off(rows.len() - h.min(rows.len() - 1));
            rows.sort_unstable();
        }
        let mut builder = Builder {
            ds,
            labels,
            features,
            n_classes,
            config,
            rng,
            nodes: Vec::new(),
        };
        builder.grow(rows, 0);
        let mut tree = DecisionTree {
            nodes: builder.nodes,
            n_classes,
        };
        if !holdout.is_empty() {
            let labels = &builder.labels;
            tree.prune(ds, &holdout, |r| labels[r].expect("labelled") as usize);
        }
        Ok(tree)
    }

    /// Index of the node where descent stops for `record`.
    pub fn leaf_for(&self, record: &Record) -> usize {
        let mut id = 0;
        while let Some(split) = &self.nodes[id].split {
            match split.test.goes_left(record.get(split.attribute)) {
                Some(true) => id = split.left,
                Some(false) => id = split.right,
                None => break,
            }
        }
        id
    }

    pub fn predict(&self, record: &Record) -> &[f64] {
        &self.nodes[self.leaf_for(record)].distribution
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, id: usize) -> usize {
            match &t.nodes[id].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    /// Total Gini decrease per attribute (unnormalized).
    pub fn raw_importances(&self, n_attributes: usize) -> Vec<f64> {
        let mut imp = vec![0.0; n_attributes];
        for node in &self.nodes {
            if let Some(s) = &node.split {
                imp[s.attribute] += s.decrease;
            }
        }
        imp
    }

    fn prune(&mut self, ds: &Dataset, holdout: &[usize], label: impl Fn(usize) -> usize) {
        // errors[node] = holdout errors if `node` were a leaf, over the rows reaching it
        let mut errors = vec![0usize; self.nodes.len()];
        // rows whose descent stopped at the node (missing split attribute)
        let mut stopped = vec![0usize; self.nodes.len()];
        for &r in holdout {
            let record = &ds.records[r];
            let y = label(r);
            let mut id = 0;
            loop {
                if argmax(&self.nodes[id].distribution) != y {
                    errors[id] += 1;
                }
                let Some(split) = &self.nodes[id].split else { break };
                match split.test.goes_left(record.get(split.attribute)) {
                    Some(true) => id = split.left,
                    Some(false) => id = split.right,
                    None => {
                        if argmax(&self.nodes[id].distribution) != y {
                            stopped[id] += 1;
                        }
                        break;
                    }
                }
            }
        }
        self.prune_node(0, &errors, &stopped);
        self.compact();
    }

    fn prune_node(&mut self, id: usize, errors: &[usize], stopped: &[usize]) -> usize {
        let Some(split) = self.nodes[id].split.clone() else {
            return errors[id];
        };
        let subtree = stopped[id]
            + self.prune_node(split.left, errors, stopped)
            + self.prune_node(split.right, errors, stopped);
        if errors[id] <= subtree {
            self.nodes[id].split = None;
            errors[id]
        } else {
            subtree
        }
    }

    fn compact(&mut self) {
        let old = std::mem::take(&mut self.nodes);
        fn copy(old: &[Node], id: usize, out: &mut Vec<Node>) -> usize {
            let new_id = out.len();
            out.push(Node {
                split: None,
                ..old[id].clone()
            });
            if let Some(s) = &old[id].split {
                let l = copy(old, s.left, out);
                let r = copy(old, s.right, out);
                out[new_id].split = Some(Split {
                    left: l,
                    right: r,
                    ..s.clone()
                });
            }
            new_id
        }
        copy(&old, 0, &mut self.nodes);
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, AttributeSchema, Role};

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![
            Attribute::categorical("a", Role::Nonsensitive, &["p", "q", "r"]),
            Attribute::continuous("b", Role::Nonsensitive, 4),
            Attribute::categorical("s", Role::Sensitive, &["no", "yes"]),
            Attribute::categorical("y", Role::TargetLabel, &["neg", "pos"]),
        ])
        .unwrap()
    }

    fn rec(a: u32, b: f64, s: u32, y: u32) -> Record {
        Record::new(vec![Value::Cat(a), Value::Num(b), Value::Cat(s), Value::Cat(y)])
    }

    fn all_rows(ds: &Dataset) -> Vec<usize> {
        (0..ds.len()).collect()
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let records: Vec<Record> = (0..300)
            .map(|i| {
                let a = i % 3;
                rec(a, (i * 7 % 11) as f64, i % 2, u32::from(a == 1))
            })
            .collect();
        let ds = Dataset::new("sep", schema(), records).unwrap();
        let tree = DecisionTree::fit(&ds, &all_rows(&ds), &[0, 1, 2], 3, &TreeConfig::default()).unwrap();
        for r in &ds.records {
            assert_eq!(argmax(tree.predict(r)) as u32, r.get(3).as_cat().unwrap());
        }
        let imp = tree.raw_importances(4);
        assert!(imp[0] > 0.0 && imp[1] == 0.0 && imp[2] == 0.0);
    }

    #[test]
    fn single_class_gives_one_leaf() {
        let records: Vec<Record> = (0..50).map(|i| rec(i % 3, i as f64, i % 2, 1)).collect();
        let ds = Dataset::new("one", schema(), records).unwrap();
        let tree = DecisionTree::fit(&ds, &all_rows(&ds), &[0, 1, 2], 3, &TreeConfig::default()).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict(&ds.records[0]), &[0.0, 1.0]);
    }

    #[test]
    fn numeric_threshold_split() {
        let records: Vec<Record> = (0..100).map(|i| rec(0, i as f64, 0, u32::from(i >= 40))).collect();
        let ds = Dataset::new("num", schema(), records).unwrap();
        let cfg = TreeConfig {
            prune_fraction: 0.0,
            ..TreeConfig::default()
        };
        let tree = DecisionTree::fit(&ds, &all_rows(&ds), &[1], 3, &cfg).unwrap();
        let root = tree.nodes[0].split.as_ref().unwrap();
        assert_eq!(root.test, SplitTest::AtMost(39.5));
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn missing_value_stops_descent() {
        // y = a==p AND s==yes; depth-2 tree splitting on a then s
        let mut records = Vec::new();
        for i in 0..200u32 {
            let a = if i % 2 == 0 { 0 } else { 1 };
            let s = (i / 2) % 2;
            let y = u32::from(a == 0 && s == 1);
            records.push(rec(a, 0.0, s, y));
        }
        let ds = Dataset::new("and", schema(), records).unwrap();
        let cfg = TreeConfig {
            prune_fraction: 0.0,
            ..TreeConfig::default()
        };
        let tree = DecisionTree::fit(&ds, &all_rows(&ds), &[0, 2], 3, &cfg).unwrap();
        let mut q = rec(0, 0.0, 1, 0);
        q.set(2, Value::Missing);
        let stop = tree.leaf_for(&q);
        let root = tree.nodes[0].split.as_ref().unwrap();
        // the node reached after the first split is returned
        assert_eq!(root.attribute, 0);
        assert_eq!(stop, root.left);
        assert_eq!(tree.nodes[stop].samples, 100);
        assert_eq!(tree.predict(&q), &[0.5, 0.5]);
        let all_missing = Record::new(vec![Value::Missing; 4]);
        assert_eq!(tree.leaf_for(&all_missing), 0);
        assert_eq!(tree.predict(&all_missing), &[0.75, 0.25]);
    }

    #[test]
    fn pruning_removes_noise_splits() {
        // label independent of features: pruning should collapse most structure
        let records: Vec<Record> = (0..400)
            .map(|i| rec(i % 3, ((i * 37) % 101) as f64, i % 2, u32::from((i * 7919) % 13 < 4)))
            .collect();
        let ds = Dataset::new("noise", schema(), records).unwrap();
        let full = DecisionTree::fit(
            &ds,
            &all_rows(&ds),
            &[0, 1, 2],
            3,
            &TreeConfig {
                prune_fraction: 0.0,
                ..TreeConfig::default()
            },
        )
        .unwrap();
        let pruned = DecisionTree::fit(&ds, &all_rows(&ds), &[0, 1, 2], 3, &TreeConfig::default()).unwrap();
        assert!(pruned.leaves() < full.leaves());
        for node in &pruned.nodes {
            let s: f64 = node.distribution.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            if let Some(sp) = &node.split {
                assert!(sp.left < pruned.nodes.len() && sp.right < pruned.nodes.len());
            }
        }
    }
}
