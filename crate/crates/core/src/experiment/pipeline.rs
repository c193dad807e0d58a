use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{AttackSplit, ExperimentConfig};
use super::report::render_report;
use crate::analysis::{
    disparate_vulnerability, evaluate, per_class_efficacy, query_report, target_correctness, ClassRow, Evaluation,
    PrivacyComparison, QueryRow, SubgroupReport,
};
use crate::attacks::{
    csmia_attack, csmia_partial_attack, fjrmia_attack, lomia_attack, naive_attack, random_guess_attack,
    AdversaryKnowledge, AttackKind, AttackPrediction,
};
use crate::data::{load_csv, marginal_prior, split, split_stratified, AttributeSchema, Dataset};
use crate::error::{Error, Result};
use crate::models::{confusion_matrix, ModelBody, ModelConfusionMatrix, TargetArtifact, TrainedModel};

pub const MODEL_FILE: &str = "model.json";
pub const ATTACKS_FILE: &str = "attacks.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const REPORT_FILE: &str = "report.txt";
pub const PREDICTIONS_DIR: &str = "predictions";

const ATTACKS_FORMAT: &str = "miai-attacks";
const METRICS_FORMAT: &str = "miai-metrics";
const DOCUMENT_VERSION: u32 = 1;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub label_only: bool,
}

impl RunOptions {
    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| config.output_dir())
    }
}

/// Reads the config, applies the seed override and runs data-free validation.
pub fn load_config(path: impl AsRef<Path>, options: &RunOptions) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(path)?;
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    config.validate(options.label_only)?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Loads the CSV and splits it; no bins are fitted yet.
fn load_splits(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let schema = AttributeSchema::from_file(config.resolve(&config.data.schema))?;
    config.validate_against(&schema)?;
    let ds = load_csv(config.resolve(&config.data.csv), &schema)?;
    match &config.data.stratify {
        Some(attr) => split_stratified(&ds, config.data.train_fraction, config.seed, attr),
        None => split(&ds, config.data.train_fraction, config.seed),
    }
}

fn model_path(config: &ExperimentConfig, options: &RunOptions) -> PathBuf {
    match &config.target.saved {
        Some(p) => config.resolve(p),
        None => options.out_dir(config).join(MODEL_FILE),
    }
}

/// Trains the target on the training split and saves it.
pub fn train_target(config: &ExperimentConfig, options: &RunOptions) -> Result<PathBuf> {
    if config.target.saved.is_some() {
        return Err(Error::Config("the target is loaded from `target.saved`; nothing to train".into()));
    }
    let (dst, _) = load_splits(config)?;
    let dst = dst.fit_binning()?;
    let model = TrainedModel::fit_target(&dst, config.model_kind()?, &config.model_config())?;
    let path = options.out_dir(config).join(MODEL_FILE);
    let artifact = TargetArtifact::new(model, config.target.exposes_confidence);
    write_file(&path, &artifact.to_json()?)?;
    Ok(path)
}

/// Loads the saved target and both splits, binned the way the target was trained.
fn load_target_and_splits(config: &ExperimentConfig, options: &RunOptions) -> Result<(TargetArtifact, Dataset, Dataset)> {
    let artifact = TargetArtifact::load(model_path(config, options))?;
    let (dst, dsd) = load_splits(config)?;
    let dst = dst.with_binning_from(&artifact.model.schema)?;
    let dsd = dsd.with_binning_from(&artifact.model.schema)?;
    if dst.schema != artifact.model.schema {
        return Err(Error::Format("the saved target was trained on a different schema".into()));
    }
    Ok((artifact, dst, dsd))
}

/// One attack over one split for one sensitive attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRun {
    /// 1-based position of the attack in the config.
    pub index: usize,
    pub attack: AttackKind,
    pub attribute: String,
    pub split: String,
    pub positive: String,
    pub records: usize,
    /// Queries each record costs: domain size times unknown-attribute completions.
    pub per_record: u64,
    pub prediction: AttackPrediction,
    /// Attack-model importances (LOMIA only).
    pub importances: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttacksDocument {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub runs: Vec<AttackRun>,
}

fn split_name(s: &AttackSplit) -> &'static str {
    match s {
        AttackSplit::Train => "train",
        AttackSplit::Holdout => "holdout",
    }
}

fn completions(schema: &AttributeSchema, unknown: &[usize]) -> Result<u64> {
    unknown.iter().try_fold(1u64, |acc, &u| {
        schema.attributes[u]
            .cardinality()
            .map(|c| acc * c as u64)
            .ok_or_else(|| Error::InvalidArgument(format!("`{}` has no fitted bins", schema.attributes[u].name)))
    })
}

/// Runs every configured attack against the saved target.
pub fn attack(config: &ExperimentConfig, options: &RunOptions) -> Result<PathBuf> {
    let (artifact, dst, dsd) = load_target_and_splits(config, options)?;
    // the saved target's interface decides what the attacks may use
    let mut effective = config.clone();
    effective.target.exposes_confidence = artifact.exposes_confidence && config.target.exposes_confidence;
    effective.validate(options.label_only)?;
    let mut target = artifact.into_target();
    if options.label_only || !config.target.exposes_confidence {
        target = target.label_only();
    }
    let schema = dst.schema.clone();
    let mut confusion: Option<ModelConfusionMatrix> = None;
    let mut runs = Vec::new();
    for (i, spec) in config.attacks.iter().enumerate() {
        let kind = spec.attack_kind()?;
        let facade = if spec.label_only { target.label_only() } else { target.clone() };
        let mut splits = vec![spec.split.clone()];
        if config.analysis.distributional && spec.split == AttackSplit::Train {
            splits.push(AttackSplit::Holdout);
        }
        if kind == AttackKind::Fjrmia && confusion.is_none() {
            confusion = Some(confusion_matrix(&target.with_fresh_ledger(), &dst)?);
        }
        for which in &splits {
            let ds = match which {
                AttackSplit::Train => &dst,
                AttackSplit::Holdout => &dsd,
            };
            if ds.is_empty() {
                return Err(Error::InvalidArgument(format!("the {} split is empty", split_name(which))));
            }
            for name in &spec.sensitive {
                let full = AdversaryKnowledge::full(&schema, name)?;
                let partial = full.clone().without(&schema, &spec.unknown)?;
                let attribute = full.sensitive;
                let k = schema.attributes[attribute].cardinality().unwrap_or(0) as u64;
                let mut per_record = k;
                let mut importances = None;
                let prediction = match kind {
                    AttackKind::Naive => naive_attack(&marginal_prior(&dst, name)?, ds)?,
                    AttackKind::RandomGuess => {
                        let p = spec.probability.clone().unwrap_or_else(|| vec![1.0 / k as f64; k as usize]);
                        random_guess_attack(&p, ds, attribute, config.seed.wrapping_add(i as u64))?
                    }
                    AttackKind::Fjrmia => {
                        let know = full
                            .with_prior(marginal_prior(&dst, name)?)
                            .with_confusion(confusion.clone().expect("computed above"));
                        fjrmia_attack(&facade, &know, ds)?
                    }
                    AttackKind::Csmia => csmia_attack(&facade, &full, ds)?,
                    AttackKind::CsmiaPartial => {
                        per_record = k * completions(&schema, &partial.unknown(&schema))?;
                        csmia_partial_attack(&facade, &partial, ds)?
                    }
                    AttackKind::Lomia => {
                        let (p, model) = lomia_attack(&facade, &full, &partial, ds, &config.attack_model_config())?;
                        importances = model.importances();
                        p
                    }
                };
                let positive = match (&spec.positive, spec.sensitive.len()) {
                    (Some(p), 1) => p.clone(),
                    _ => schema.attributes[attribute].domain().expect("categorical")[0].clone(),
                };
                runs.push(AttackRun {
                    index: i + 1,
                    attack: kind,
                    attribute: name.clone(),
                    split: split_name(which).to_string(),
                    positive,
                    records: ds.len(),
                    per_record,
                    prediction,
                    importances,
                });
            }
        }
    }
    let out = options.out_dir(config);
    for run in &runs {
        let ds = if run.split == "train" { &dst } else { &dsd };
        write_predictions(&out, run, ds)?;
    }
    let doc = AttacksDocument {
        format: ATTACKS_FORMAT.into(),
        version: DOCUMENT_VERSION,
        seed: config.seed,
        runs,
    };
    let path = out.join(ATTACKS_FILE);
    write_file(&path, &to_json(&doc)?)?;
    Ok(path)
}

fn prediction_file(run: &AttackRun) -> String {
    format!(
        "{:02}-{}-{}-{}.csv",
        run.index,
        run.attack.name().to_ascii_lowercase(),
        run.attribute,
        run.split
    )
}

fn write_predictions(out: &Path, run: &AttackRun, ds: &Dataset) -> Result<()> {
    let dir = out.join(PREDICTIONS_DIR);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(prediction_file(run));
    let csv_err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["record_index", "attribute", "predicted", "true", "case"]).map_err(csv_err)?;
    let attr = run.prediction.attribute;
    for (i, &p) in run.prediction.predictions.iter().enumerate() {
        let predicted = ds.token(attr, crate::data::Value::Cat(p));
        let truth = ds.token(attr, ds.records[i].get(attr));
        let case = run
            .prediction
            .cases
            .as_ref()
            .map(|c| c[i].number().to_string())
            .unwrap_or_default();
        w.write_record([i.to_string(), run.attribute.clone(), predicted, truth, case])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub kind: String,
    pub exposes_confidence: bool,
    pub train_records: usize,
    pub holdout_records: usize,
    pub train_accuracy: f64,
    pub holdout_accuracy: f64,
    pub train_confusion: ModelConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationEntry {
    pub index: usize,
    pub split: String,
    pub evaluation: Evaluation,
    pub importances: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassEntry {
    pub index: usize,
    pub attack: AttackKind,
    pub attribute: String,
    pub rows: Vec<ClassRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupEntry {
    pub index: usize,
    pub attribute: String,
    pub report: SubgroupReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionalEntry {
    pub index: usize,
    pub attribute: String,
    pub comparison: PrivacyComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub target: TargetSummary,
    pub attacks: Vec<EvaluationEntry>,
    pub subgroups: Vec<SubgroupEntry>,
    pub per_class: Vec<PerClassEntry>,
    pub distributional: Vec<DistributionalEntry>,
    pub queries: Vec<QueryRow>,
    pub queries_match: bool,
}

fn load_attacks(path: &Path) -> Result<AttacksDocument> {
    let text = read_file(path)?;
    let doc: AttacksDocument = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if doc.format != ATTACKS_FORMAT || doc.version != DOCUMENT_VERSION {
        return Err(Error::Format(format!(
            "{} is `{}` version {}, expected `{ATTACKS_FORMAT}` version {DOCUMENT_VERSION}",
            path.display(),
            doc.format,
            doc.version
        )));
    }
    Ok(doc)
}

fn positive_index(ds: &Dataset, attribute: usize, token: &str) -> Result<u32> {
    ds.schema.attributes[attribute]
        .index_of(token)
        .ok_or_else(|| Error::Format(format!("`{token}` is not a value of the attacked attribute")))
}

/// Scores the saved attack runs and writes the metric document and text report.
pub fn report(config: &ExperimentConfig, options: &RunOptions) -> Result<PathBuf> {
    let out = options.out_dir(config);
    let doc = load_attacks(&out.join(ATTACKS_FILE))?;
    if doc.seed != config.seed {
        return Err(Error::Format(format!(
            "attack results were produced with seed {}, the config uses {}",
            doc.seed, config.seed
        )));
    }
    let (artifact, dst, dsd) = load_target_and_splits(config, options)?;
    let exposes_confidence = artifact.exposes_confidence;
    let kind = artifact.model.kind();
    let target = artifact.into_target();
    let train_correct = target_correctness(&target, &dst)?;
    let holdout_correct = target_correctness(&target, &dsd)?;
    let accuracy = |c: &[Option<bool>]| {
        let known: Vec<bool> = c.iter().flatten().copied().collect();
        if known.is_empty() {
            0.0
        } else {
            known.iter().filter(|&&b| b).count() as f64 / known.len() as f64
        }
    };
    let summary = TargetSummary {
        kind: serde_json::to_value(kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        exposes_confidence,
        train_records: dst.len(),
        holdout_records: dsd.len(),
        train_accuracy: accuracy(&train_correct),
        holdout_accuracy: accuracy(&holdout_correct),
        train_confusion: confusion_matrix(&target.with_fresh_ledger(), &dst)?,
    };

    let mut attacks = Vec::new();
    let mut subgroups = Vec::new();
    let mut per_class = Vec::new();
    let mut queries = Vec::new();
    for run in &doc.runs {
        let (ds, correct) = if run.split == "train" {
            (&dst, &train_correct)
        } else {
            (&dsd, &holdout_correct)
        };
        let attribute = run.prediction.attribute;
        let positive = positive_index(ds, attribute, &run.positive)?;
        attacks.push(EvaluationEntry {
            index: run.index,
            split: run.split.clone(),
            evaluation: evaluate(&run.prediction, ds, positive)?,
            importances: run.importances.clone(),
        });
        queries.push(QueryRow::new(
            run.attack,
            &run.attribute,
            run.records,
            run.per_record,
            run.prediction.queries_used,
        ));
        if run.split != "train" {
            continue;
        }
        for grouping in &config.analysis.grouping {
            subgroups.push(SubgroupEntry {
                index: run.index,
                attribute: run.attribute.clone(),
                report: disparate_vulnerability(&run.prediction, ds, grouping, positive, Some(correct))?,
            });
        }
        if config.analysis.per_class {
            per_class.push(PerClassEntry {
                index: run.index,
                attack: run.attack,
                attribute: run.attribute.clone(),
                rows: per_class_efficacy(&run.prediction, ds, positive)?,
            });
        }
    }
    let mut distributional = Vec::new();
    for t in attacks.iter().filter(|e| e.split == "train") {
        let holdout = attacks
            .iter()
            .find(|d| d.split == "holdout" && d.index == t.index && d.evaluation.attribute == t.evaluation.attribute);
        if let Some(d) = holdout {
            distributional.push(DistributionalEntry {
                index: t.index,
                attribute: t.evaluation.attribute.clone(),
                comparison: PrivacyComparison {
                    attack: t.evaluation.attack,
                    on_training: t.evaluation.metrics,
                    on_holdout: d.evaluation.metrics,
                    training_cases: t.evaluation.case_counts,
                    holdout_cases: d.evaluation.case_counts,
                },
            });
        }
    }
    let (queries, queries_match) = query_report(queries);
    let metrics = MetricsDocument {
        format: METRICS_FORMAT.into(),
        version: DOCUMENT_VERSION,
        seed: config.seed,
        target: summary,
        attacks,
        subgroups,
        per_class,
        distributional,
        queries,
        queries_match,
    };
    write_file(&out.join(METRICS_FILE), &to_json(&metrics)?)?;
    write_file(&out.join(REPORT_FILE), &render_report(&metrics))?;
    Ok(out.join(METRICS_FILE))
}

/// All three stages in order, communicating through the output directory.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<PathBuf> {
    if config.target.saved.is_none() {
        train_target(config, options)?;
    }
    attack(config, options)?;
    report(config, options)
}

/// Human-readable summary of a saved target.
pub fn inspect_model(path: impl AsRef<Path>) -> Result<String> {
    let artifact = TargetArtifact::load(path)?;
    let model = &artifact.model;
    let mut s = String::new();
    let kind = serde_json::to_value(model.kind()).ok().and_then(|v| v.as_str().map(str::to_string));
    s.push_str(&format!("kind: {}\n", kind.unwrap_or_default()));
    s.push_str(&format!("exposes_confidence: {}\n", artifact.exposes_confidence));
    s.push_str(&format!("target: {}\n", model.schema.attributes[model.target].name));
    let classes = model.schema.attributes[model.target].domain().unwrap_or(&[]).join(", ");
    s.push_str(&format!("classes: {classes}\n"));
    match &model.body {
        ModelBody::DecisionTree(t) => {
            s.push_str(&format!("nodes: {}\nleaves: {}\ndepth: {}\n", t.nodes.len(), t.leaves(), t.depth()));
        }
        ModelBody::RandomForest(f) => {
            s.push_str(&format!("trees: {}\n", f.trees.len()));
        }
        ModelBody::Mlp(m) => {
            let widths: Vec<String> = std::iter::once(m.network.layers[0].inputs)
                .chain(m.network.layers.iter().map(|l| l.outputs))
                .map(|w| w.to_string())
                .collect();
            s.push_str(&format!("layers: {}\nparameters: {}\n", widths.join("-"), m.network.parameter_count()));
        }
    }
    if let Some(imp) = model.importances() {
        let width = imp.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        s.push_str("importances:\n");
        for (name, v) in &imp {
            s.push_str(&format!("  {name:<width$}  {v:.6}\n"));
        }
        s.push_str(&format!("  {:<width$}  {:.6}\n", "total", imp.iter().map(|(_, v)| v).sum::<f64>()));
    }
    Ok(s)
}
