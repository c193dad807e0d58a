//! C ABI over the miai library.
//!
//! Every function returns a [`MiaiStatus`]. On failure the message is
//! available from [`miai_last_error`] on the same thread. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Panics are caught and reported as `MIAI_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use miai::analysis::{evaluate, Evaluation};
use miai::attacks::{
    csmia_attack, csmia_partial_attack, fjrmia_attack, lomia_attack, naive_attack, random_guess_attack,
    AdversaryKnowledge, AttackKind, AttackPrediction,
};
use miai::data::{load_csv, marginal_prior, split, AttributeSchema, Dataset};
use miai::metrics::{metric_bundle, MetricBundle, OutcomeCounts};
use miai::models::{
    confusion_matrix, BlackBoxTarget, ForestConfig, ModelConfig, ModelKind, TargetArtifact, TrainedModel,
};
use miai::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiaiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    Capability = 6,
    Unsupported = 7,
    Format = 8,
    Training = 9,
    EmptyAttackDataset = 10,
    Config = 11,
    Panic = 12,
}

impl From<&Error> for MiaiStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => MiaiStatus::Io,
            Error::Parse { .. } => MiaiStatus::Parse,
            Error::Schema(_) | Error::SchemaViolation { .. } => MiaiStatus::Schema,
            Error::InvalidArgument(_) => MiaiStatus::InvalidArgument,
            Error::Capability(_) => MiaiStatus::Capability,
            Error::Training { .. } => MiaiStatus::Training,
            Error::EmptyAttackDataset => MiaiStatus::EmptyAttackDataset,
            Error::Unsupported(_) => MiaiStatus::Unsupported,
            Error::Format(_) => MiaiStatus::Format,
            Error::Config(_) => MiaiStatus::Config,
        }
    }
}

/// Scores of an attack (or of raw outcome counts) with a binary positive class.
/// Rates are fractions in [0, 1].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MiaiMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub fpr: f64,
    pub g_mean: f64,
    pub mcc: f64,
    /// Target queries spent by the attack.
    pub queries: u64,
    /// Records per CSMIA case; zero for attacks without cases.
    pub case1: u64,
    pub case2: u64,
    pub case3: u64,
}

impl MiaiMetrics {
    fn new(c: &OutcomeCounts, m: &MetricBundle) -> MiaiMetrics {
        MiaiMetrics {
            tp: c.tp,
            tn: c.tn,
            fp: c.fp,
            fn_: c.fn_,
            precision: m.precision,
            recall: m.recall,
            accuracy: m.accuracy,
            f1: m.f1,
            fpr: m.fpr,
            g_mean: m.g_mean,
            mcc: m.mcc,
            ..MiaiMetrics::default()
        }
    }
}

pub struct MiaiDataset {
    inner: Dataset,
}

pub struct MiaiTarget {
    artifact: TargetArtifact,
    target: BlackBoxTarget,
    queries: u64,
}

impl MiaiTarget {
    fn new(artifact: TargetArtifact) -> MiaiTarget {
        let target = BlackBoxTarget::new(Arc::new(artifact.model.clone()), artifact.exposes_confidence);
        MiaiTarget {
            artifact,
            target,
            queries: 0,
        }
    }
}

pub struct MiaiReport {
    prediction: AttackPrediction,
    evaluation: Evaluation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MiaiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MiaiStatus::from(&e), e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(MiaiStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(MiaiStatus::InvalidArgument, message.into())
}

/// Runs `f`, recording any error or panic for [`miai_last_error`].
fn guard(f: impl FnOnce() -> FfiResult) -> MiaiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MiaiStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            MiaiStatus::Panic
        }
    }
}

unsafe fn string_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

unsafe fn optional_string<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        string_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn miai_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string returned by this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn miai_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a CSV file validated against a TOML attribute schema.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_dataset_load(
    csv_path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut MiaiDataset,
) -> MiaiStatus {
    guard(|| {
        let csv_path = string_arg(csv_path, "csv_path")?;
        let schema_path = string_arg(schema_path, "schema_path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let schema = AttributeSchema::from_file(schema_path)?;
        let inner = load_csv(csv_path, &schema)?;
        write_out(out, boxed(MiaiDataset { inner }), "out")
    })
}

/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_dataset_len(ds: *const MiaiDataset, out: *mut usize) -> MiaiStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        write_out(out, ds.inner.len(), "out")
    })
}

/// Shuffles with `seed` and splits into training and holdout sets.
///
/// # Safety
/// `ds` must be a live dataset handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_dataset_split(
    ds: *const MiaiDataset,
    train_fraction: f64,
    seed: u64,
    out_train: *mut *mut MiaiDataset,
    out_holdout: *mut *mut MiaiDataset,
) -> MiaiStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        if out_train.is_null() || out_holdout.is_null() {
            return Err(null("out_train/out_holdout"));
        }
        let (train, holdout) = split(&ds.inner, train_fraction, seed)?;
        write_out(out_train, boxed(MiaiDataset { inner: train }), "out_train")?;
        write_out(out_holdout, boxed(MiaiDataset { inner: holdout }), "out_holdout")
    })
}

/// # Safety
/// `ds` must be NULL or a dataset handle that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn miai_dataset_free(ds: *mut MiaiDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains a target model of `kind` (`decision_tree`, `random_forest` or `mlp`)
/// with default hyperparameters on `train`.
///
/// # Safety
/// `train` must be a live dataset handle, `kind` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn miai_target_train(
    train: *const MiaiDataset,
    kind: *const c_char,
    seed: u64,
    exposes_confidence: bool,
    out: *mut *mut MiaiTarget,
) -> MiaiStatus {
    guard(|| {
        let train = handle(train, "train")?;
        let kind: ModelKind = string_arg(kind, "kind")?.parse()?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut config = ModelConfig::default();
        config.tree.seed = seed;
        config.forest.seed = seed;
        config.mlp.seed = seed;
        let binned = train.inner.fit_binning()?;
        let model = TrainedModel::fit_target(&binned, kind, &config)?;
        write_out(out, boxed(MiaiTarget::new(TargetArtifact::new(model, exposes_confidence))), "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn miai_target_load(path: *const c_char, out: *mut *mut MiaiTarget) -> MiaiStatus {
    guard(|| {
        let path = string_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let artifact = TargetArtifact::load(path)?;
        write_out(out, boxed(MiaiTarget::new(artifact)), "out")
    })
}

/// # Safety
/// `target` must be a live target handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn miai_target_save(target: *const MiaiTarget, path: *const c_char) -> MiaiStatus {
    guard(|| {
        let target = handle(target, "target")?;
        let path = string_arg(path, "path")?;
        target.artifact.save(path)?;
        Ok(())
    })
}

/// Total queries that attacks have made against this target handle.
///
/// # Safety
/// `target` must be a live target handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_target_query_count(target: *const MiaiTarget, out: *mut u64) -> MiaiStatus {
    guard(|| {
        let target = handle(target, "target")?;
        write_out(out, target.queries, "out")
    })
}

/// # Safety
/// `target` must be NULL or a target handle that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn miai_target_free(target: *mut MiaiTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

struct AttackRequest<'a> {
    kind: AttackKind,
    sensitive: &'a str,
    unknown: Vec<&'a str>,
    positive: Option<&'a str>,
    seed: u64,
}

fn run_attack(target: &mut MiaiTarget, ds: &Dataset, reference: &Dataset, req: &AttackRequest) -> Result<MiaiReport, Failure> {
    let schema = &target.artifact.model.schema;
    let ds = ds.with_binning_from(schema)?;
    let reference = reference.with_binning_from(schema)?;
    let full = AdversaryKnowledge::full(schema, req.sensitive)?;
    if !req.unknown.is_empty() && !matches!(req.kind, AttackKind::CsmiaPartial | AttackKind::Lomia) {
        return Err(invalid(format!("{} needs every nonsensitive attribute", req.kind.name())));
    }
    let partial = full.clone().without(schema, &req.unknown)?;
    let facade = target.target.with_fresh_ledger();
    let prediction = match req.kind {
        AttackKind::Naive => naive_attack(&marginal_prior(&reference, req.sensitive)?, &ds)?,
        AttackKind::RandomGuess => {
            let k = schema.attributes[full.sensitive].cardinality().unwrap_or(0);
            random_guess_attack(&vec![1.0 / k as f64; k], &ds, full.sensitive, req.seed)?
        }
        AttackKind::Fjrmia => {
            let know = full
                .clone()
                .with_prior(marginal_prior(&reference, req.sensitive)?)
                .with_confusion(confusion_matrix(&facade.with_fresh_ledger(), &reference)?);
            fjrmia_attack(&facade, &know, &ds)?
        }
        AttackKind::Csmia => csmia_attack(&facade, &full, &ds)?,
        AttackKind::CsmiaPartial => csmia_partial_attack(&facade, &partial, &ds)?,
        AttackKind::Lomia => {
            let forest = ForestConfig {
                seed: req.seed,
                ..ForestConfig::default()
            };
            lomia_attack(&facade, &full, &partial, &ds, &forest)?.0
        }
    };
    let domain = schema.attributes[full.sensitive].domain().unwrap_or(&[]);
    let positive = match req.positive {
        Some(p) => domain
            .iter()
            .position(|v| v == p)
            .ok_or_else(|| invalid(format!("`{p}` is not a value of `{}`", req.sensitive)))? as u32,
        None => 0,
    };
    let evaluation = evaluate(&prediction, &ds, positive)?;
    target.queries += prediction.queries_used;
    Ok(MiaiReport { prediction, evaluation })
}

/// Runs one attack against `target` over the records of `ds`.
///
/// `attack` is one of `naive`, `random_guess`, `fjrmia`, `csmia`,
/// `csmia_partial` or `lomia`. `unknown` is a comma-separated list of
/// nonsensitive attributes the adversary lacks, or NULL. `positive` names the
/// positive sensitive value, or NULL for the first domain value. The marginal
/// prior and the target's confusion matrix are estimated on `reference`
/// (NULL means `ds`).
///
/// # Safety
/// Handles must be live (`reference` may be NULL), strings NUL-terminated
/// (optional ones may be NULL) and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn miai_attack_run(
    target: *mut MiaiTarget,
    ds: *const MiaiDataset,
    reference: *const MiaiDataset,
    attack: *const c_char,
    sensitive: *const c_char,
    unknown: *const c_char,
    positive: *const c_char,
    seed: u64,
    out: *mut *mut MiaiReport,
) -> MiaiStatus {
    guard(|| {
        let target = target.as_mut().ok_or_else(|| null("target"))?;
        let ds = handle(ds, "ds")?;
        let reference = if reference.is_null() { ds } else { handle(reference, "reference")? };
        let kind: AttackKind = string_arg(attack, "attack")?.parse()?;
        let unknown = optional_string(unknown, "unknown")?
            .map(|s| s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect())
            .unwrap_or_default();
        let req = AttackRequest {
            kind,
            sensitive: string_arg(sensitive, "sensitive")?,
            unknown,
            positive: optional_string(positive, "positive")?,
            seed,
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let report = run_attack(target, &ds.inner, &reference.inner, &req)?;
        write_out(out, boxed(report), "out")
    })
}

/// # Safety
/// `report` must be a live report handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_report_metrics(report: *const MiaiReport, out: *mut MiaiMetrics) -> MiaiStatus {
    guard(|| {
        let report = handle(report, "report")?;
        let e = &report.evaluation;
        let mut m = MiaiMetrics::new(&e.counts, &e.metrics);
        m.queries = e.queries;
        if let Some([c1, c2, c3]) = e.case_counts {
            (m.case1, m.case2, m.case3) = (c1 as u64, c2 as u64, c3 as u64);
        }
        write_out(out, m, "out")
    })
}

/// Number of per-record predictions in the report.
///
/// # Safety
/// `report` must be a live report handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_report_len(report: *const MiaiReport, out: *mut usize) -> MiaiStatus {
    guard(|| {
        let report = handle(report, "report")?;
        write_out(out, report.prediction.predictions.len(), "out")
    })
}

/// Predicted domain index of the sensitive attribute for record `index`.
///
/// # Safety
/// `report` must be a live report handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_report_prediction(report: *const MiaiReport, index: usize, out: *mut u32) -> MiaiStatus {
    guard(|| {
        let report = handle(report, "report")?;
        let p = report.prediction.predictions.get(index).ok_or_else(|| {
            invalid(format!("index {index} out of range for {} records", report.prediction.predictions.len()))
        })?;
        write_out(out, *p, "out")
    })
}

/// The full evaluation and predictions as JSON. Free with [`miai_string_free`].
///
/// # Safety
/// `report` must be a live report handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_report_to_json(report: *const MiaiReport, out: *mut *mut c_char) -> MiaiStatus {
    guard(|| {
        let report = handle(report, "report")?;
        let doc = serde_json::json!({
            "evaluation": report.evaluation,
            "prediction": report.prediction,
        });
        let text = serde_json::to_string(&doc).map_err(|e| Failure(MiaiStatus::Format, e.to_string()))?;
        let c = CString::new(text).map_err(|e| Failure(MiaiStatus::Format, e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `report` must be NULL or a report handle that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn miai_report_free(report: *mut MiaiReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Metrics from raw outcome counts; `queries` and the case counts are zero.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn miai_metrics_from_counts(tp: u64, tn: u64, fp: u64, fn_: u64, out: *mut MiaiMetrics) -> MiaiStatus {
    guard(|| {
        let counts = OutcomeCounts::new(tp, tn, fp, fn_);
        let bundle = metric_bundle(&counts)?;
        write_out(out, MiaiMetrics::new(&counts, &bundle), "out")
    })
}
