//! Label-only attack: harvest Case-1 records, train an attack model on them,
//! then infer the sensitive value of every record without further queries.

use rayon::prelude::*;

use super::{query_all_values, true_label, AdversaryKnowledge, AttackKind, AttackPrediction, Case};
use crate::data::{Dataset, Record, Value};
use crate::error::{Error, Result};
use crate::models::{argmax, BlackBoxTarget, Forest, ForestConfig, ModelBody, TrainedModel};

/// Case-1 records relabelled with the value that alone reproduced the true label.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackDataset {
    pub sensitive: usize,
    /// Attack-model inputs: the known non-sensitive attributes and the label.
    pub features: Vec<usize>,
    /// Harvested records; the sensitive cell holds the harvested value.
    pub records: Dataset,
    /// Index of each harvested record in the candidate dataset.
    pub source_rows: Vec<usize>,
    /// Case of every candidate, harvested or not.
    pub cases: Vec<Case>,
    pub queries_used: u64,
}

impl AttackDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Queries the target k times per candidate and keeps the Case-1 records.
pub fn lomia_harvest(target: &BlackBoxTarget, know: &AdversaryKnowledge, candidates: &Dataset) -> Result<AttackDataset> {
    let schema = &candidates.schema;
    know.validate(schema)?;
    let target = target.with_fresh_ledger();
    let outcomes = candidates
        .records
        .par_iter()
        .map(|r| {
            let y = true_label(schema, r)?;
            let outputs = query_all_values(&target, schema, know, r)?;
            let correct: Vec<usize> = (0..outputs.len()).filter(|&i| outputs[i].label == y).collect();
            Ok((Case::from_correct_count(correct.len()), correct.first().copied()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut source_rows = Vec::new();
    let mut cases = Vec::with_capacity(outcomes.len());
    for (i, (case, first)) in outcomes.into_iter().enumerate() {
        if case == Case::Case1 {
            let mut r = candidates.records[i].clone();
            r.set(know.sensitive, Value::Cat(first.expect("case 1 has a correct value") as u32));
            records.push(r);
            source_rows.push(i);
        }
        cases.push(case);
    }
    let mut features: Vec<usize> = know.known.iter().copied().collect();
    features.push(schema.label_index());
    features.sort_unstable();
    Ok(AttackDataset {
        sensitive: know.sensitive,
        features,
        records: Dataset::new(candidates.name.clone(), schema.clone(), records)?,
        source_rows,
        cases,
        queries_used: target.queries(),
    })
}

/// Forest mapping the known attributes and the label to the sensitive value.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    pub sensitive: usize,
    pub features: Vec<usize>,
    pub model: TrainedModel,
}

impl AttackModel {
    pub fn importances(&self) -> Option<Vec<(String, f64)>> {
        self.model.importances()
    }
}

pub fn lomia_train(dsa: &AttackDataset, config: &ForestConfig) -> Result<AttackModel> {
    if dsa.is_empty() {
        return Err(Error::EmptyAttackDataset);
    }
    let rows: Vec<usize> = (0..dsa.len()).collect();
    let forest = Forest::fit(&dsa.records, &rows, &dsa.features, dsa.sensitive, config)?;
    Ok(AttackModel {
        sensitive: dsa.sensitive,
        features: dsa.features.clone(),
        model: TrainedModel {
            schema: dsa.records.schema.clone(),
            features: dsa.features.clone(),
            target: dsa.sensitive,
            body: ModelBody::RandomForest(forest),
        },
    })
}

/// Predicts the sensitive value of `record`. MISSING inputs stop each tree
/// at the split that needs them; the label itself must be present.
pub fn lomia_infer(model: &AttackModel, record: &Record) -> Result<u32> {
    let label = model.model.schema.label_index();
    if record.len() != model.model.schema.len() {
        return Err(Error::InvalidArgument("record does not match the attack model's schema".into()));
    }
    if record.get(label).is_missing() {
        return Err(Error::InvalidArgument("LOMIA inference needs the record's true label".into()));
    }
    let mut q = record.clone();
    for i in 0..q.len() {
        if !model.features.contains(&i) {
            q.set(i, Value::Missing);
        }
    }
    Ok(argmax(&model.model.predict_with_missing(&q)?) as u32)
}

/// Full LOMIA run over `ds`: harvest with `harvest` knowledge, train, then
/// infer every record using only the attributes in `infer` knowledge.
pub fn lomia_attack(
    target: &BlackBoxTarget,
    harvest: &AdversaryKnowledge,
    infer: &AdversaryKnowledge,
    ds: &Dataset,
    config: &ForestConfig,
) -> Result<(AttackPrediction, AttackModel)> {
    if harvest.sensitive != infer.sensitive {
        return Err(Error::InvalidArgument("harvest and inference attack different attributes".into()));
    }
    infer.validate(&ds.schema)?;
    let dsa = lomia_harvest(target, harvest, ds)?;
    let model = lomia_train(&dsa, config)?;
    let label = ds.schema.label_index();
    let predictions = ds
        .records
        .par_iter()
        .map(|r| {
            let mut q = r.clone();
            for i in 0..q.len() {
                if i != label && !infer.known.contains(&i) {
                    q.set(i, Value::Missing);
                }
            }
            lomia_infer(&model, &q)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        AttackPrediction {
            attack: AttackKind::Lomia,
            attribute: harvest.sensitive,
            predictions,
            cases: Some(dsa.cases),
            queries_used: dsa.queries_used,
        },
        model,
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{Attribute, AttributeSchema, Role};
    use crate::models::{Classifier, MemorizingModel};

    fn dataset() -> Dataset {
        let schema = AttributeSchema::new(vec![
            Attribute::categorical("a", Role::Nonsensitive, &["p", "q", "r"]),
            Attribute::categorical("s", Role::Sensitive, &["no", "yes"]),
            Attribute::categorical("y", Role::TargetLabel, &["neg", "pos"]),
        ])
        .unwrap();
        // y = s XOR (a == q): every combination present once
        let records = (0..6u32)
            .map(|i| {
                let (a, s) = (i % 3, i / 3);
                Record::new(vec![Value::Cat(a), Value::Cat(s), Value::Cat(s ^ u32::from(a == 1))])
            })
            .collect();
        Dataset::new("x", schema, records).unwrap()
    }

    #[test]
    fn harvest_on_memorizing_target_is_exact() {
        let ds = dataset();
        let target = BlackBoxTarget::new(Arc::new(MemorizingModel::fit(&ds).unwrap()), false);
        let know = AdversaryKnowledge::full(&ds.schema, "s").unwrap();
        let dsa = lomia_harvest(&target, &know, &ds).unwrap();
        assert_eq!(dsa.queries_used, 12);
        assert_eq!(dsa.len(), 6);
        for (r, &src) in dsa.records.records.iter().zip(&dsa.source_rows) {
            assert_eq!(r.get(1), ds.records[src].get(1));
        }
        assert_eq!(dsa.features, vec![0, 2]);
    }

    struct Constant;

    impl Classifier for Constant {
        fn classes(&self) -> &[String] {
            static C: std::sync::OnceLock<Vec<String>> = std::sync::OnceLock::new();
            C.get_or_init(|| vec!["neg".into(), "pos".into()])
        }
        fn predict_proba(&self, _: &Record) -> Result<Vec<f64>> {
            Ok(vec![1.0, 0.0])
        }
    }

    #[test]
    fn constant_target_yields_empty_harvest_and_training_fails() {
        let ds = dataset();
        let target = BlackBoxTarget::new(Arc::new(Constant), false);
        let know = AdversaryKnowledge::full(&ds.schema, "s").unwrap();
        let dsa = lomia_harvest(&target, &know, &ds).unwrap();
        assert!(dsa.is_empty());
        assert!(dsa.cases.iter().all(|c| *c != Case::Case1));
        assert!(matches!(lomia_train(&dsa, &ForestConfig::default()), Err(Error::EmptyAttackDataset)));
    }

    #[test]
    fn inference_requires_the_label() {
        let ds = dataset();
        let target = BlackBoxTarget::new(Arc::new(MemorizingModel::fit(&ds).unwrap()), false);
        let know = AdversaryKnowledge::full(&ds.schema, "s").unwrap();
        let dsa = lomia_harvest(&target, &know, &ds).unwrap();
        let cfg = ForestConfig {
            min_leaf: 1,
            ..ForestConfig::default()
        };
        let model = lomia_train(&dsa, &cfg).unwrap();
        let mut r = ds.records[0].clone();
        r.set(2, Value::Missing);
        assert!(matches!(lomia_infer(&model, &r), Err(Error::InvalidArgument(_))));
        let mut r = ds.records[0].clone();
        r.set(0, Value::Missing);
        assert!(lomia_infer(&model, &r).unwrap() < 2);
    }
}
