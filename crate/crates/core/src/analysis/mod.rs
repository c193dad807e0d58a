//! Analyses over completed attack runs: scoring, disparate vulnerability by
//! subgroup, training-set versus holdout comparison, per-class efficacy and
//! query accounting.

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackKind, AttackPrediction, Case};
use crate::data::{Dataset, Value};
use crate::error::{Error, Result};
use crate::metrics::{attack_confusion, count_outcomes, metric_bundle, AttackConfusionMatrix, MetricBundle, OutcomeCounts};
use crate::models::BlackBoxTarget;

pub const MISSING_GROUP: &str = "(missing)";

/// Scores of one attack run against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub attack: AttackKind,
    pub attribute: String,
    pub positive: String,
    /// Records with a known true value; only these are scored.
    pub scored: usize,
    pub counts: OutcomeCounts,
    pub metrics: MetricBundle,
    pub confusion: AttackConfusionMatrix,
    pub case_counts: Option<[usize; 3]>,
    pub queries: u64,
}

fn check_cover(pred: &AttackPrediction, ds: &Dataset) -> Result<()> {
    if pred.predictions.len() != ds.len() {
        return Err(Error::InvalidArgument(format!(
            "attack results cover {} records, dataset has {}",
            pred.predictions.len(),
            ds.len()
        )));
    }
    Ok(())
}

fn domain(ds: &Dataset, attribute: usize) -> Result<&[String]> {
    ds.schema.attributes[attribute]
        .domain()
        .ok_or_else(|| Error::InvalidArgument("attacked attribute must be categorical".into()))
}

/// Aligned (prediction, truth) pairs over `rows`, skipping unknown truths.
fn pairs(pred: &AttackPrediction, ds: &Dataset, rows: impl Iterator<Item = usize>) -> (Vec<u32>, Vec<u32>) {
    rows.filter_map(|i| ds.records[i].get(pred.attribute).as_cat().map(|t| (pred.predictions[i], t)))
        .unzip()
}

/// Scores `pred` with `positive` (a domain index) as the positive class.
pub fn evaluate(pred: &AttackPrediction, ds: &Dataset, positive: u32) -> Result<Evaluation> {
    check_cover(pred, ds)?;
    let domain = domain(ds, pred.attribute)?;
    let positive_token = domain
        .get(positive as usize)
        .ok_or_else(|| Error::InvalidArgument("positive value outside the domain".into()))?
        .clone();
    let (p, t) = pairs(pred, ds, 0..ds.len());
    let counts = count_outcomes(&p, &t, &positive)?;
    Ok(Evaluation {
        attack: pred.attack,
        attribute: ds.schema.attributes[pred.attribute].name.clone(),
        positive: positive_token,
        scored: p.len(),
        metrics: metric_bundle(&counts)?,
        confusion: attack_confusion(&p, &t, domain)?,
        counts,
        case_counts: pred.case_counts(),
        queries: pred.queries_used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupRow {
    pub value: String,
    pub size: usize,
    pub scored: usize,
    pub accuracy: f64,
    /// Binary sensitive attributes only.
    pub metrics: Option<MetricBundle>,
    /// Multi-valued sensitive attributes only.
    pub confusion: Option<AttackConfusionMatrix>,
    /// Share of the subgroup that is Case 1 and correctly inferred.
    pub correct_case1: Option<f64>,
    pub target_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupReport {
    pub attack: AttackKind,
    pub grouping: String,
    pub rows: Vec<SubgroupRow>,
}

/// Whether the target predicts each record's label correctly (None without a label).
/// Uses a separate ledger so attack query counts are unaffected.
pub fn target_correctness(target: &BlackBoxTarget, ds: &Dataset) -> Result<Vec<Option<bool>>> {
    let target = target.with_fresh_ledger();
    let label = ds.schema.label_index();
    ds.records
        .iter()
        .map(|r| {
            let Value::Cat(y) = r.get(label) else { return Ok(None) };
            let mut q = r.clone();
            q.set(label, Value::Missing);
            Ok(Some(target.predict(&q)?.label == y as usize))
        })
        .collect()
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-value breakdown of an attack run by `grouping`. Records missing the
/// grouping value form their own subgroup.
pub fn disparate_vulnerability(
    pred: &AttackPrediction,
    ds: &Dataset,
    grouping: &str,
    positive: u32,
    target_correct: Option<&[Option<bool>]>,
) -> Result<SubgroupReport> {
    check_cover(pred, ds)?;
    let g = ds.schema.index(grouping)?;
    let attr = &ds.schema.attributes[g];
    let tokens: Vec<String> = match (attr.domain(), attr.binning()) {
        (Some(d), _) => d.to_vec(),
        (None, Some(b)) => b.tokens(),
        (None, None) => {
            return Err(Error::InvalidArgument(format!(
                "grouping attribute `{grouping}` is continuous and has no fitted bins"
            )))
        }
    };
    if let Some(tc) = target_correct {
        if tc.len() != ds.len() {
            return Err(Error::InvalidArgument("target correctness does not cover the dataset".into()));
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); tokens.len() + 1];
    for (i, r) in ds.records.iter().enumerate() {
        let slot = ds.category(r, g).map_or(tokens.len(), |c| c as usize);
        members[slot].push(i);
    }
    let domain = domain(ds, pred.attribute)?;
    let binary = domain.len() == 2;
    let mut rows = Vec::new();
    for (slot, rows_in) in members.iter().enumerate() {
        if rows_in.is_empty() {
            continue;
        }
        let value = tokens.get(slot).cloned().unwrap_or_else(|| MISSING_GROUP.to_string());
        let (p, t) = pairs(pred, ds, rows_in.iter().copied());
        let correct = p.iter().zip(&t).filter(|(a, b)| a == b).count();
        let counts = count_outcomes(&p, &t, &positive)?;
        let metrics = if binary && counts.total() > 0 {
            Some(metric_bundle(&counts)?)
        } else {
            None
        };
        let confusion = if !binary && !p.is_empty() {
            Some(attack_confusion(&p, &t, domain)?)
        } else {
            None
        };
        let correct_case1 = pred.cases.as_ref().map(|cases| {
            let hits = rows_in
                .iter()
                .filter(|&&i| {
                    cases[i] == Case::Case1 && ds.records[i].get(pred.attribute) == Value::Cat(pred.predictions[i])
                })
                .count();
            ratio(hits, rows_in.len())
        });
        let target_accuracy = target_correct.map(|tc| {
            let labelled: Vec<bool> = rows_in.iter().filter_map(|&i| tc[i]).collect();
            ratio(labelled.iter().filter(|&&c| c).count(), labelled.len())
        });
        rows.push(SubgroupRow {
            value,
            size: rows_in.len(),
            scored: p.len(),
            accuracy: ratio(correct, p.len()),
            metrics,
            confusion,
            correct_case1,
            target_accuracy,
        });
    }
    Ok(SubgroupReport {
        attack: pred.attack,
        grouping: grouping.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyComparison {
    pub attack: AttackKind,
    pub on_training: MetricBundle,
    pub on_holdout: MetricBundle,
    pub training_cases: Option<[usize; 3]>,
    pub holdout_cases: Option<[usize; 3]>,
}

/// Runs the same attack over the training set and a same-distribution
/// holdout and pairs the scores. `run` gets its own ledger per call because
/// every attack runner starts from a fresh one.
pub fn distributional_privacy(
    run: impl Fn(&Dataset) -> Result<AttackPrediction>,
    dst: &Dataset,
    dsd: &Dataset,
    positive: u32,
) -> Result<PrivacyComparison> {
    if dst.schema.attributes.len() != dsd.schema.attributes.len()
        || dst.schema.attributes.iter().zip(&dsd.schema.attributes).any(|(a, b)| a.name != b.name)
    {
        return Err(Error::InvalidArgument("training and holdout sets have different schemas".into()));
    }
    let on_t = run(dst)?;
    let on_d = run(dsd)?;
    let et = evaluate(&on_t, dst, positive)?;
    let ed = evaluate(&on_d, dsd, positive)?;
    Ok(PrivacyComparison {
        attack: on_t.attack,
        on_training: et.metrics,
        on_holdout: ed.metrics,
        training_cases: et.case_counts,
        holdout_cases: ed.case_counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub label: String,
    pub counts: OutcomeCounts,
    pub metrics: Option<MetricBundle>,
}

/// Attack scores per true target-model class label.
pub fn per_class_efficacy(pred: &AttackPrediction, ds: &Dataset, positive: u32) -> Result<Vec<ClassRow>> {
    check_cover(pred, ds)?;
    let label = ds.schema.label_index();
    ds.schema
        .label_domain()
        .iter()
        .enumerate()
        .map(|(y, name)| {
            let rows = (0..ds.len()).filter(|&i| ds.records[i].get(label) == Value::Cat(y as u32));
            let (p, t) = pairs(pred, ds, rows);
            let counts = count_outcomes(&p, &t, &positive)?;
            let metrics = if counts.total() > 0 {
                Some(metric_bundle(&counts)?)
            } else {
                None
            };
            Ok(ClassRow {
                label: name.clone(),
                counts,
                metrics,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub attack: AttackKind,
    pub attribute: String,
    pub records: usize,
    /// Queries per record: the sensitive domain size times the number of
    /// completions of unknown attributes (1 with full knowledge).
    pub per_record: u64,
    pub expected: u64,
    pub actual: u64,
    pub matches: bool,
}

impl QueryRow {
    pub fn new(attack: AttackKind, attribute: &str, records: usize, per_record: u64, actual: u64) -> QueryRow {
        let per_record = if attack.queries_target() { per_record } else { 0 };
        let expected = records as u64 * per_record;
        QueryRow {
            attack,
            attribute: attribute.to_string(),
            records,
            per_record,
            expected,
            actual,
            matches: expected == actual,
        }
    }
}

/// Ledger totals next to the analytic `N * k` expectation.
pub fn query_report(rows: Vec<QueryRow>) -> (Vec<QueryRow>, bool) {
    let ok = rows.iter().all(|r| r.matches);
    (rows, ok)
}
