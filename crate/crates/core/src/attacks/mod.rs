//! The attack suite: NaiveA, RandGA, FJRMIA, CSMIA (full and partial
//! knowledge) and LOMIA, plus multi-attribute runs.
//!
//! Every querying attack builds its queries the same way: the target record
//! is copied, its label and every attribute the adversary does not know are
//! set to MISSING, and the sensitive attribute takes each candidate value in
//! turn. Per-record work runs on the current rayon pool and is collected in
//! record order, so results do not depend on the thread count.

mod lomia;

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, AttributeSchema, Dataset, MarginalPrior, Record, Role, Value};
use crate::error::{Error, Result};
use crate::models::{BlackBoxTarget, ModelConfusionMatrix, PredictionOutput};

pub use lomia::{lomia_attack, lomia_harvest, lomia_infer, lomia_train, AttackDataset, AttackModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Naive,
    RandomGuess,
    Fjrmia,
    Csmia,
    CsmiaPartial,
    Lomia,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Naive => "NaiveA",
            AttackKind::RandomGuess => "RandGA",
            AttackKind::Fjrmia => "FJRMIA",
            AttackKind::Csmia => "CSMIA",
            AttackKind::CsmiaPartial => "CSMIA-partial",
            AttackKind::Lomia => "LOMIA",
        }
    }

    pub fn needs_confidence(self) -> bool {
        matches!(self, AttackKind::Csmia | AttackKind::CsmiaPartial)
    }

    pub fn queries_target(self) -> bool {
        !matches!(self, AttackKind::Naive | AttackKind::RandomGuess)
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<AttackKind> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "naive" | "naivea" => Ok(AttackKind::Naive),
            "random_guess" | "randga" => Ok(AttackKind::RandomGuess),
            "fjrmia" => Ok(AttackKind::Fjrmia),
            "csmia" => Ok(AttackKind::Csmia),
            "csmia_partial" => Ok(AttackKind::CsmiaPartial),
            "lomia" => Ok(AttackKind::Lomia),
            other => Err(Error::InvalidArgument(format!("unknown attack `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Case {
    Case1,
    Case2,
    Case3,
}

impl Case {
    pub fn number(self) -> u8 {
        match self {
            Case::Case1 => 1,
            Case::Case2 => 2,
            Case::Case3 => 3,
        }
    }

    fn from_correct_count(count: usize) -> Case {
        match count {
            1 => Case::Case1,
            0 => Case::Case3,
            _ => Case::Case2,
        }
    }
}

/// What the adversary can read and use when attacking `sensitive`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryKnowledge {
    pub sensitive: usize,
    /// Non-sensitive attributes readable from the target record.
    pub known: BTreeSet<usize>,
    pub knows_true_label: bool,
    pub marginal_prior: Option<MarginalPrior>,
    pub model_confusion: Option<ModelConfusionMatrix>,
}

impl AdversaryKnowledge {
    /// Knows every non-sensitive attribute and the true label.
    pub fn full(schema: &AttributeSchema, sensitive: &str) -> Result<AdversaryKnowledge> {
        let idx = schema.index(sensitive)?;
        let know = AdversaryKnowledge {
            sensitive: idx,
            known: schema.nonsensitive_indices().into_iter().collect(),
            knows_true_label: true,
            marginal_prior: None,
            model_confusion: None,
        };
        know.validate(schema)?;
        Ok(know)
    }

    /// Removes the named attributes from the known set.
    pub fn without(mut self, schema: &AttributeSchema, unknown: &[impl AsRef<str>]) -> Result<AdversaryKnowledge> {
        for name in unknown {
            let idx = schema.index(name.as_ref())?;
            if schema.attributes[idx].role != Role::Nonsensitive {
                return Err(Error::InvalidArgument(format!(
                    "`{}` is not a non-sensitive attribute",
                    name.as_ref()
                )));
            }
            self.known.remove(&idx);
        }
        Ok(self)
    }

    pub fn with_prior(mut self, prior: MarginalPrior) -> AdversaryKnowledge {
        self.marginal_prior = Some(prior);
        self
    }

    pub fn with_confusion(mut self, confusion: ModelConfusionMatrix) -> AdversaryKnowledge {
        self.model_confusion = Some(confusion);
        self
    }

    /// Non-sensitive attributes the adversary does not know, in schema order.
    pub fn unknown(&self, schema: &AttributeSchema) -> Vec<usize> {
        schema
            .nonsensitive_indices()
            .into_iter()
            .filter(|i| !self.known.contains(i))
            .collect()
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        let attr = schema
            .attributes
            .get(self.sensitive)
            .ok_or_else(|| Error::InvalidArgument("sensitive attribute out of range".into()))?;
        if attr.role != Role::Sensitive {
            return Err(Error::InvalidArgument(format!("`{}` is not marked sensitive", attr.name)));
        }
        if !attr.is_categorical() {
            return Err(Error::InvalidArgument(format!(
                "sensitive attribute `{}` must be categorical",
                attr.name
            )));
        }
        for &k in &self.known {
            match schema.attributes.get(k) {
                Some(a) if a.role == Role::Nonsensitive => {}
                _ => return Err(Error::InvalidArgument("known attributes must be non-sensitive".into())),
            }
        }
        Ok(())
    }

    fn domain_size(&self, schema: &AttributeSchema) -> usize {
        schema.attributes[self.sensitive].cardinality().unwrap_or(0)
    }
}

/// Result of running one attack over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPrediction {
    pub attack: AttackKind,
    pub attribute: usize,
    /// Sensitive-domain index per record.
    pub predictions: Vec<u32>,
    pub cases: Option<Vec<Case>>,
    pub queries_used: u64,
}

impl AttackPrediction {
    /// Count of records per case, indexed 0..3 for cases 1..3.
    pub fn case_counts(&self) -> Option<[usize; 3]> {
        self.cases.as_ref().map(|cases| {
            let mut counts = [0; 3];
            for c in cases {
                counts[c.number() as usize - 1] += 1;
            }
            counts
        })
    }
}

fn true_label(schema: &AttributeSchema, record: &Record) -> Result<usize> {
    match record.get(schema.label_index()) {
        Value::Cat(y) => Ok(y as usize),
        _ => Err(Error::InvalidArgument("the attack needs the record's true label".into())),
    }
}

/// The query template for `record`: label and unknown attributes MISSING.
pub fn query_template(schema: &AttributeSchema, know: &AdversaryKnowledge, record: &Record) -> Record {
    let mut q = record.clone();
    for i in 0..schema.len() {
        if i != know.sensitive && !know.known.contains(&i) {
            q.set(i, Value::Missing);
        }
    }
    q
}

fn query_all_values(
    target: &BlackBoxTarget,
    schema: &AttributeSchema,
    know: &AdversaryKnowledge,
    record: &Record,
) -> Result<Vec<PredictionOutput>> {
    let mut q = query_template(schema, know, record);
    (0..know.domain_size(schema) as u32)
        .map(|v| {
            q.set(know.sensitive, Value::Cat(v));
            target.predict(&q)
        })
        .collect()
}

fn check_record_len(schema: &AttributeSchema, record: &Record) -> Result<()> {
    if record.len() != schema.len() {
        return Err(Error::InvalidArgument(format!(
            "record has {} values, schema has {}",
            record.len(),
            schema.len()
        )));
    }
    Ok(())
}

/// Lowest index holding the smallest value.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// FJRMIA decision: argmax of `C[y, y'_i] * p_i`, ties to the higher prior, then the lower index.
pub fn fjrmia_decide(confusion: &ModelConfusionMatrix, prior: &[f64], y: usize, predicted: &[usize]) -> u32 {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &yp) in predicted.iter().enumerate() {
        let score = confusion.probability(y, yp) * prior[i];
        if score > best_score || (score == best_score && prior[i] > prior[best]) {
            best = i;
            best_score = score;
        }
    }
    best as u32
}

/// CSMIA decision over the k responses for one record with true label `y`.
pub fn csmia_decide(outputs: &[PredictionOutput], y: usize) -> Result<(u32, Case)> {
    let conf = outputs
        .iter()
        .map(|o| {
            o.label_confidence()
                .ok_or_else(|| Error::Capability("CSMIA needs confidence scores".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let correct: Vec<usize> = (0..outputs.len()).filter(|&i| outputs[i].label == y).collect();
    let case = Case::from_correct_count(correct.len());
    let predicted = match case {
        Case::Case1 => correct[0],
        Case::Case2 => {
            let mut best = correct[0];
            for &i in &correct[1..] {
                if conf[i] > conf[best] {
                    best = i;
                }
            }
            best
        }
        Case::Case3 => argmin(&conf),
    };
    Ok((predicted as u32, case))
}

/// Partial-knowledge CSMIA decision from per-value correct counts, summed
/// confidences of the correct predictions, and summed confidences of all predictions.
pub fn partial_decide(correct: &[usize], correct_conf: &[f64], all_conf: &[f64]) -> (u32, Case) {
    let max = correct.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return (argmin(all_conf) as u32, Case::Case3);
    }
    let tied: Vec<usize> = (0..correct.len()).filter(|&i| correct[i] == max).collect();
    if tied.len() == 1 {
        return (tied[0] as u32, Case::Case1);
    }
    let mut best = tied[0];
    for &i in &tied[1..] {
        if correct_conf[i] > correct_conf[best] {
            best = i;
        }
    }
    (best as u32, Case::Case2)
}

pub fn fjrmia(target: &BlackBoxTarget, schema: &AttributeSchema, know: &AdversaryKnowledge, record: &Record) -> Result<u32> {
    let (confusion, prior) = match (&know.model_confusion, &know.marginal_prior) {
        (Some(c), Some(p)) => (c, p),
        _ => {
            return Err(Error::Capability(
                "FJRMIA needs the marginal prior and the model confusion matrix".into(),
            ))
        }
    };
    check_record_len(schema, record)?;
    let y = true_label(schema, record)?;
    let outputs = query_all_values(target, schema, know, record)?;
    let predicted: Vec<usize> = outputs.iter().map(|o| o.label).collect();
    Ok(fjrmia_decide(confusion, &prior.probabilities, y, &predicted))
}

pub fn csmia(
    target: &BlackBoxTarget,
    schema: &AttributeSchema,
    know: &AdversaryKnowledge,
    record: &Record,
) -> Result<(u32, Case)> {
    if !target.exposes_confidence() {
        return Err(Error::Capability("CSMIA needs a target that exposes confidence scores".into()));
    }
    check_record_len(schema, record)?;
    let y = true_label(schema, record)?;
    let outputs = query_all_values(target, schema, know, record)?;
    csmia_decide(&outputs, y)
}

/// Candidate values for an unknown attribute: its domain, or its bin representatives.
fn candidates(schema: &AttributeSchema, attribute: usize) -> Result<Vec<Value>> {
    let attr = &schema.attributes[attribute];
    match &attr.kind {
        AttributeKind::Categorical { domain } => Ok((0..domain.len() as u32).map(Value::Cat).collect()),
        AttributeKind::Continuous { binning: Some(b), .. } => {
            Ok(b.representatives.iter().map(|&x| Value::Num(x)).collect())
        }
        AttributeKind::Continuous { binning: None, .. } => Err(Error::InvalidArgument(format!(
            "unknown continuous attribute `{}` needs fitted bins",
            attr.name
        ))),
    }
}

pub const MAX_UNKNOWN_ATTRIBUTES: usize = 2;

pub fn csmia_partial(
    target: &BlackBoxTarget,
    schema: &AttributeSchema,
    know: &AdversaryKnowledge,
    record: &Record,
) -> Result<(u32, Case)> {
    if !target.exposes_confidence() {
        return Err(Error::Capability("CSMIA needs a target that exposes confidence scores".into()));
    }
    check_record_len(schema, record)?;
    let unknown = know.unknown(schema);
    if unknown.len() > MAX_UNKNOWN_ATTRIBUTES {
        return Err(Error::Unsupported(format!(
            "partial-knowledge CSMIA supports at most {MAX_UNKNOWN_ATTRIBUTES} unknown attributes, got {}",
            unknown.len()
        )));
    }
    let y = true_label(schema, record)?;
    let options = unknown
        .iter()
        .map(|&u| candidates(schema, u))
        .collect::<Result<Vec<_>>>()?;
    let k = know.domain_size(schema);
    let mut correct = vec![0usize; k];
    let mut correct_conf = vec![0.0; k];
    let mut all_conf = vec![0.0; k];
    let mut q = query_template(schema, know, record);
    let completions: usize = options.iter().map(Vec::len).product();
    for v in 0..k {
        q.set(know.sensitive, Value::Cat(v as u32));
        for c in 0..completions {
            let mut rest = c;
            for (slot, &attr) in unknown.iter().enumerate() {
                let n = options[slot].len();
                q.set(attr, options[slot][rest % n]);
                rest /= n;
            }
            let out = target.predict(&q)?;
            let conf = out
                .label_confidence()
                .ok_or_else(|| Error::Capability("CSMIA needs confidence scores".into()))?;
            all_conf[v] += conf;
            if out.label == y {
                correct[v] += 1;
                correct_conf[v] += conf;
            }
        }
    }
    Ok(partial_decide(&correct, &correct_conf, &all_conf))
}

pub fn naive_attack(prior: &MarginalPrior, ds: &Dataset) -> Result<AttackPrediction> {
    let attribute = ds.schema.index(&prior.attribute)?;
    let guess = prior.argmax() as u32;
    Ok(AttackPrediction {
        attack: AttackKind::Naive,
        attribute,
        predictions: vec![guess; ds.len()],
        cases: None,
        queries_used: 0,
    })
}

/// Independent draws from `p` per record; record `i` uses stream `i` of the seeded generator.
pub fn random_guess_attack(p: &[f64], ds: &Dataset, attribute: usize, seed: u64) -> Result<AttackPrediction> {
    let k = ds
        .schema
        .attributes
        .get(attribute)
        .and_then(|a| a.cardinality())
        .ok_or_else(|| Error::InvalidArgument("random guessing needs a categorical attribute".into()))?;
    if p.len() != k || p.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "guess probabilities must be {k} non-negative values summing to 1"
        )));
    }
    let predictions = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = None;
            for (j, &pj) in p.iter().enumerate() {
                acc += pj;
                if pj > 0.0 {
                    pick = Some(j);
                    if u < acc {
                        break;
                    }
                }
            }
            pick.unwrap_or(0) as u32
        })
        .collect();
    Ok(AttackPrediction {
        attack: AttackKind::RandomGuess,
        attribute,
        predictions,
        cases: None,
        queries_used: 0,
    })
}

pub fn fjrmia_attack(target: &BlackBoxTarget, know: &AdversaryKnowledge, ds: &Dataset) -> Result<AttackPrediction> {
    know.validate(&ds.schema)?;
    let target = target.with_fresh_ledger();
    let predictions = ds
        .records
        .par_iter()
        .map(|r| fjrmia(&target, &ds.schema, know, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackPrediction {
        attack: AttackKind::Fjrmia,
        attribute: know.sensitive,
        predictions,
        cases: None,
        queries_used: target.queries(),
    })
}

fn case_attack(
    kind: AttackKind,
    target: &BlackBoxTarget,
    know: &AdversaryKnowledge,
    ds: &Dataset,
    decide: impl Fn(&BlackBoxTarget, &AttributeSchema, &AdversaryKnowledge, &Record) -> Result<(u32, Case)> + Sync,
) -> Result<AttackPrediction> {
    know.validate(&ds.schema)?;
    if !target.exposes_confidence() {
        return Err(Error::Capability(format!("{kind} needs a target that exposes confidence scores")));
    }
    let target = target.with_fresh_ledger();
    let results = ds
        .records
        .par_iter()
        .map(|r| decide(&target, &ds.schema, know, r))
        .collect::<Result<Vec<_>>>()?;
    let (predictions, cases) = results.into_iter().unzip();
    Ok(AttackPrediction {
        attack: kind,
        attribute: know.sensitive,
        predictions,
        cases: Some(cases),
        queries_used: target.queries(),
    })
}

pub fn csmia_attack(target: &BlackBoxTarget, know: &AdversaryKnowledge, ds: &Dataset) -> Result<AttackPrediction> {
    case_attack(AttackKind::Csmia, target, know, ds, csmia)
}

pub fn csmia_partial_attack(target: &BlackBoxTarget, know: &AdversaryKnowledge, ds: &Dataset) -> Result<AttackPrediction> {
    case_attack(AttackKind::CsmiaPartial, target, know, ds, csmia_partial)
}

/// Runs `kind` once per sensitive attribute. Each instance only knows the
/// non-sensitive attributes, so the other sensitive attribute is MISSING in
/// its queries and absent from its LOMIA attack model.
pub fn multi_attribute(
    kind: AttackKind,
    target: &BlackBoxTarget,
    knowledge: &[AdversaryKnowledge],
    ds: &Dataset,
    forest: &crate::models::ForestConfig,
) -> Result<Vec<AttackPrediction>> {
    knowledge
        .iter()
        .map(|know| match kind {
            AttackKind::Fjrmia => fjrmia_attack(target, know, ds),
            AttackKind::Csmia => csmia_attack(target, know, ds),
            AttackKind::Lomia => lomia_attack(target, know, know, ds, forest).map(|(p, _)| p),
            other => Err(Error::Unsupported(format!("{other} has no multi-attribute mode"))),
        })
        .collect()
}

/// True sensitive values of `ds` for `attribute` (None where MISSING).
pub fn truths(ds: &Dataset, attribute: usize) -> Vec<Option<u32>> {
    ds.records.iter().map(|r| r.get(attribute).as_cat()).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::Attribute;
    use crate::models::Classifier;

    fn out(label: usize, conf: f64) -> PredictionOutput {
        let mut c = vec![0.0; 2];
        c[label] = conf;
        c[1 - label] = 1.0 - conf;
        PredictionOutput {
            label,
            confidences: Some(c),
        }
    }

    #[test]
    fn csmia_cases_from_worked_examples() {
        // y = 0; index 0 = "no", 1 = "yes"
        assert_eq!(csmia_decide(&[out(1, 0.8), out(0, 0.6)], 0).unwrap(), (1, Case::Case1));
        assert_eq!(csmia_decide(&[out(0, 0.7), out(0, 0.9)], 0).unwrap(), (1, Case::Case2));
        assert_eq!(csmia_decide(&[out(1, 0.6), out(1, 0.9)], 0).unwrap(), (0, Case::Case3));
        // ties go to the lowest index
        assert_eq!(csmia_decide(&[out(0, 0.7), out(0, 0.7)], 0).unwrap(), (0, Case::Case2));
        assert_eq!(csmia_decide(&[out(1, 0.7), out(1, 0.7)], 0).unwrap(), (0, Case::Case3));
        let label_only = PredictionOutput {
            label: 0,
            confidences: None,
        };
        assert!(matches!(
            csmia_decide(&[label_only.clone(), label_only], 0),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn partial_rules() {
        assert_eq!(partial_decide(&[2, 1], &[1.5, 0.9], &[1.5, 2.0]), (0, Case::Case1));
        assert_eq!(partial_decide(&[1, 1], &[0.8, 0.9], &[1.5, 1.5]), (1, Case::Case2));
        assert_eq!(partial_decide(&[0, 0], &[0.0, 0.0], &[1.4, 1.3]), (1, Case::Case3));
        // the confidence tie-break only looks at the tied values
        assert_eq!(partial_decide(&[2, 2, 1], &[1.0, 1.2, 5.0], &[0.0; 3]), (1, Case::Case2));
    }

    #[test]
    fn fjrmia_worked_example() {
        let cm = ModelConfusionMatrix {
            classes: vec!["c0".into(), "c1".into()],
            counts: vec![vec![9, 1], vec![2, 8]],
        };
        assert_eq!(fjrmia_decide(&cm, &[0.8, 0.2], 0, &[0, 1]), 0);
        assert_eq!(fjrmia_decide(&cm, &[1.0, 0.0], 0, &[1, 0]), 0);
        // equal scores: the higher prior wins
        let flat = ModelConfusionMatrix {
            classes: vec!["c0".into(), "c1".into()],
            counts: vec![vec![1, 1], vec![1, 1]],
        };
        assert_eq!(fjrmia_decide(&flat, &[0.3, 0.7], 0, &[0, 0]), 1);
    }

    struct Constant(Vec<String>);

    impl Classifier for Constant {
        fn classes(&self) -> &[String] {
            &self.0
        }
        fn predict_proba(&self, _: &Record) -> Result<Vec<f64>> {
            Ok(vec![0.7, 0.3])
        }
    }

    fn dataset(n: u32) -> Dataset {
        let schema = AttributeSchema::new(vec![
            Attribute::categorical("a", Role::Nonsensitive, &["p", "q", "r"]),
            Attribute::categorical("s", Role::Sensitive, &["no", "yes"]),
            Attribute::categorical("y", Role::TargetLabel, &["neg", "pos"]),
        ])
        .unwrap();
        let records = (0..n)
            .map(|i| Record::new(vec![Value::Cat(i % 3), Value::Cat(i % 2), Value::Cat((i / 2) % 2)]))
            .collect();
        Dataset::new("d", schema, records).unwrap()
    }

    #[test]
    fn query_counts_and_capabilities() {
        let ds = dataset(50);
        let target = BlackBoxTarget::new(Arc::new(Constant(vec!["neg".into(), "pos".into()])), true);
        let know = AdversaryKnowledge::full(&ds.schema, "s").unwrap();
        let run = csmia_attack(&target, &know, &ds).unwrap();
        assert_eq!(run.queries_used, 100);
        let counts = run.case_counts().unwrap();
        assert_eq!(counts.iter().sum::<usize>(), 50);
        assert_eq!(counts[0], 0);
        assert!(matches!(
            csmia_attack(&target.label_only(), &know, &ds),
            Err(Error::Capability(_))
        ));
        assert!(matches!(fjrmia_attack(&target, &know, &ds), Err(Error::Capability(_))));
        let partial = know.clone().without(&ds.schema, &["a"]).unwrap();
        let run = csmia_partial_attack(&target, &partial, &ds).unwrap();
        assert_eq!(run.queries_used, 50 * 2 * 3);
    }

    #[test]
    fn random_guess_is_seeded_and_validated() {
        let ds = dataset(200);
        let a = random_guess_attack(&[0.5, 0.5], &ds, 1, 7).unwrap();
        let b = random_guess_attack(&[0.5, 0.5], &ds, 1, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.queries_used, 0);
        let all = random_guess_attack(&[1.0, 0.0], &ds, 1, 7).unwrap();
        assert!(all.predictions.iter().all(|&p| p == 0));
        assert!(random_guess_attack(&[0.5, 0.6], &ds, 1, 7).is_err());
        assert!(random_guess_attack(&[1.0], &ds, 1, 7).is_err());
    }

    #[test]
    fn knowledge_rejects_sensitive_as_known() {
        let ds = dataset(4);
        assert!(AdversaryKnowledge::full(&ds.schema, "a").is_err());
        let know = AdversaryKnowledge::full(&ds.schema, "s").unwrap();
        assert!(know.clone().without(&ds.schema, &["s"]).is_err());
        let mut bad = know;
        bad.known.insert(1);
        assert!(bad.validate(&ds.schema).is_err());
    }

    #[test]
    fn query_template_hides_label_and_unknowns() {
        let ds = dataset(4);
        let know = AdversaryKnowledge::full(&ds.schema, "s")
            .unwrap()
            .without(&ds.schema, &["a"])
            .unwrap();
        let q = query_template(&ds.schema, &know, &ds.records[1]);
        assert_eq!(q.values, vec![Value::Missing, Value::Cat(1), Value::Missing]);
    }
}
