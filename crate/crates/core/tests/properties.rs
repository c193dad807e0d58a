//! Property tests for attack decisions and analysis bookkeeping.

use std::sync::Arc;

use proptest::prelude::*;

use miai::analysis::{disparate_vulnerability, evaluate, per_class_efficacy};
use miai::attacks::{
    csmia_attack, csmia_decide, fjrmia_decide, partial_decide, query_template, AdversaryKnowledge, AttackKind,
    AttackPrediction, Case,
};
use miai::data::{Attribute, AttributeSchema, Dataset, Record, Role, Value};
use miai::models::{BlackBoxTarget, ModelConfig, ModelConfusionMatrix, ModelKind, PredictionOutput, TrainedModel};

fn schema(k: usize) -> AttributeSchema {
    let sens: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
    let sens: Vec<&str> = sens.iter().map(String::as_str).collect();
    AttributeSchema::new(vec![
        Attribute::categorical("a", Role::Nonsensitive, &["p", "q", "r"]),
        Attribute::categorical("g", Role::Nonsensitive, &["f", "m"]),
        Attribute::categorical("s", Role::Sensitive, &sens),
        Attribute::categorical("y", Role::TargetLabel, &["lo", "hi"]),
    ])
    .unwrap()
}

fn dataset(k: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((0..3u32, 0..2u32, 0..k as u32, 0..2u32), 12..80).prop_map(move |rows| {
        let records = rows
            .into_iter()
            .map(|(a, g, s, y)| Record::new(vec![Value::Cat(a), Value::Cat(g), Value::Cat(s), Value::Cat(y)]))
            .collect();
        Dataset::new("prop", schema(k), records).unwrap()
    })
}

fn output(label: usize, conf: Vec<f64>) -> PredictionOutput {
    PredictionOutput {
        label,
        confidences: Some(conf),
    }
}

/// Binary responses where `label` is the argmax of `[1 - p, p]`.
fn responses() -> impl Strategy<Value = Vec<PredictionOutput>> {
    prop::collection::vec(0.0..1.0f64, 2..6).prop_map(|ps| {
        ps.into_iter()
            .map(|p| output(usize::from(p > 0.5), vec![1.0 - p, p]))
            .collect()
    })
}

proptest! {
    #[test]
    fn csmia_decision_follows_the_correct_set(outputs in responses(), y in 0..2usize) {
        let (v, case) = csmia_decide(&outputs, y).unwrap();
        let v = v as usize;
        prop_assert!(v < outputs.len());
        let correct: Vec<usize> = (0..outputs.len()).filter(|&i| outputs[i].label == y).collect();
        let conf: Vec<f64> = outputs.iter().map(|o| o.label_confidence().unwrap()).collect();
        match correct.len() {
            0 => {
                prop_assert_eq!(case, Case::Case3);
                prop_assert!(conf.iter().all(|&c| c >= conf[v]));
            }
            1 => {
                prop_assert_eq!(case, Case::Case1);
                prop_assert_eq!(v, correct[0]);
            }
            _ => {
                prop_assert_eq!(case, Case::Case2);
                prop_assert!(correct.contains(&v));
                prop_assert!(correct.iter().all(|&i| conf[i] <= conf[v]));
            }
        }
    }

    #[test]
    fn csmia_needs_confidences(n in 2..5usize, y in 0..2usize) {
        let outputs: Vec<PredictionOutput> =
            (0..n).map(|i| PredictionOutput { label: i % 2, confidences: None }).collect();
        prop_assert!(csmia_decide(&outputs, y).is_err());
    }

    #[test]
    fn partial_decision_is_one_of_the_top_counts(
        rows in prop::collection::vec((0..4usize, 0.0..3.0f64, 0.0..3.0f64), 2..6)
    ) {
        let correct: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let correct_conf: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let all_conf: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let (v, case) = partial_decide(&correct, &correct_conf, &all_conf);
        let v = v as usize;
        let max = *correct.iter().max().unwrap();
        let tied = correct.iter().filter(|&&c| c == max).count();
        if max == 0 {
            prop_assert_eq!(case, Case::Case3);
            prop_assert!(all_conf.iter().all(|&c| c >= all_conf[v]));
        } else {
            prop_assert_eq!(correct[v], max);
            prop_assert_eq!(case, if tied == 1 { Case::Case1 } else { Case::Case2 });
        }
    }

    #[test]
    fn fjrmia_picks_a_maximal_score(
        counts in prop::collection::vec(prop::collection::vec(0..20u64, 2), 2),
        prior in prop::collection::vec(0.01..1.0f64, 2..5),
        predicted_seed in prop::collection::vec(0..2usize, 5),
        y in 0..2usize,
    ) {
        prop_assume!(counts.iter().all(|r| r.iter().sum::<u64>() > 0));
        let confusion = ModelConfusionMatrix { classes: vec!["lo".into(), "hi".into()], counts };
        let predicted = &predicted_seed[..prior.len().min(predicted_seed.len())];
        let prior = &prior[..predicted.len()];
        let v = fjrmia_decide(&confusion, prior, y, predicted) as usize;
        let score = |i: usize| confusion.probability(y, predicted[i]) * prior[i];
        prop_assert!((0..predicted.len()).all(|i| score(i) <= score(v)));
    }

    #[test]
    fn query_template_hides_label_and_unknowns(
        ds in dataset(3),
        drop_a in any::<bool>(),
        drop_g in any::<bool>(),
    ) {
        let s = ds.schema.clone();
        let mut unknown = Vec::new();
        if drop_a { unknown.push("a"); }
        if drop_g { unknown.push("g"); }
        let know = AdversaryKnowledge::full(&s, "s").unwrap().without(&s, &unknown).unwrap();
        for r in &ds.records {
            let q = query_template(&s, &know, r);
            prop_assert!(q.get(3).is_missing());
            prop_assert_eq!(q.get(0).is_missing(), drop_a);
            prop_assert_eq!(q.get(1).is_missing(), drop_g);
            prop_assert_eq!(q.get(2), r.get(2));
        }
    }

    #[test]
    fn csmia_runs_partition_and_count_queries(ds in dataset(3)) {
        let model = TrainedModel::fit_target(&ds, ModelKind::DecisionTree, &ModelConfig::default()).unwrap();
        let target = BlackBoxTarget::new(Arc::new(model), true);
        let know = AdversaryKnowledge::full(&ds.schema, "s").unwrap();
        let pred = csmia_attack(&target, &know, &ds).unwrap();
        prop_assert_eq!(pred.queries_used, 3 * ds.len() as u64);
        prop_assert_eq!(pred.case_counts().unwrap().iter().sum::<usize>(), ds.len());
        prop_assert!(pred.predictions.iter().all(|&p| p < 3));
    }

    #[test]
    fn subgroups_and_classes_cover_every_record(
        ds in dataset(2),
        preds in prop::collection::vec(0..2u32, 80),
    ) {
        let pred = AttackPrediction {
            attack: AttackKind::Csmia,
            attribute: 2,
            predictions: preds[..ds.len()].to_vec(),
            cases: None,
            queries_used: 0,
        };
        let overall = evaluate(&pred, &ds, 0).unwrap();
        let report = disparate_vulnerability(&pred, &ds, "g", 0, None).unwrap();
        prop_assert_eq!(report.rows.iter().map(|r| r.size).sum::<usize>(), ds.len());
        let correct: f64 = report.rows.iter().map(|r| r.accuracy * r.scored as f64).sum();
        prop_assert!((correct / ds.len() as f64 - overall.metrics.accuracy).abs() < 1e-9);

        let classes = per_class_efficacy(&pred, &ds, 0).unwrap();
        let total = |f: fn(&miai::metrics::OutcomeCounts) -> u64| classes.iter().map(|c| f(&c.counts)).sum::<u64>();
        prop_assert_eq!(total(|c| c.tp), overall.counts.tp);
        prop_assert_eq!(total(|c| c.tn), overall.counts.tn);
        prop_assert_eq!(total(|c| c.fp), overall.counts.fp);
        prop_assert_eq!(total(|c| c.fn_), overall.counts.fn_);
    }
}
