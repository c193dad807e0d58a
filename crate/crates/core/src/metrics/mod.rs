//! Attack evaluation metrics.
//!
//! Every ratio whose denominator is zero is reported as 0 rather than NaN,
//! so a constant "always negative" attack scores 0 on precision, recall, F1,
//! G-mean and MCC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl OutcomeCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> OutcomeCounts {
        OutcomeCounts { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Tabulates aligned binary predictions against ground truth.
pub fn count_outcomes<T: PartialEq>(predictions: &[T], truths: &[T], positive: &T) -> Result<OutcomeCounts> {
    if predictions.len() != truths.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut c = OutcomeCounts::default();
    for (p, t) in predictions.iter().zip(truths) {
        match (p == positive, t == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub fpr: f64,
    pub g_mean: f64,
    pub mcc: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn metric_bundle(c: &OutcomeCounts) -> Result<MetricBundle> {
    if c.total() == 0 {
        return Err(Error::InvalidArgument("no outcomes to score".into()));
    }
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let accuracy = (tp + tn) / (tp + tn + fp + fn_);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    let fpr = ratio(fp, fp + tn);
    let g_mean = (recall * specificity).sqrt();
    let mcc_den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio(tp * tn - fp * fn_, mcc_den);
    Ok(MetricBundle {
        precision,
        recall,
        accuracy,
        f1,
        fpr,
        g_mean,
        mcc,
    })
}

impl MetricBundle {
    pub fn from_counts(c: &OutcomeCounts) -> Result<MetricBundle> {
        metric_bundle(c)
    }

    /// Name/value pairs in report order.
    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("precision", self.precision),
            ("recall", self.recall),
            ("accuracy", self.accuracy),
            ("f1", self.f1),
            ("g_mean", self.g_mean),
            ("mcc", self.mcc),
            ("fpr", self.fpr),
        ]
    }
}

/// Multi-class attack confusion matrix (rows actual, columns predicted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfusionMatrix {
    pub values: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub accuracy: f64,
}

impl AttackConfusionMatrix {
    pub fn from_counts(values: Vec<String>, counts: Vec<Vec<u64>>) -> Result<AttackConfusionMatrix> {
        let k = values.len();
        if k == 0 || counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("confusion matrix must be k x k".into()));
        }
        let total: u64 = counts.iter().flatten().sum();
        let trace: u64 = (0..k).map(|i| counts[i][i]).sum();
        let recall: Vec<f64> = (0..k)
            .map(|i| ratio(counts[i][i] as f64, counts[i].iter().sum::<u64>() as f64))
            .collect();
        let precision: Vec<f64> = (0..k)
            .map(|j| {
                let col: u64 = counts.iter().map(|r| r[j]).sum();
                ratio(counts[j][j] as f64, col as f64)
            })
            .collect();
        Ok(AttackConfusionMatrix {
            avg_precision: precision.iter().sum::<f64>() / k as f64,
            avg_recall: recall.iter().sum::<f64>() / k as f64,
            accuracy: ratio(trace as f64, total as f64),
            values,
            counts,
            precision,
            recall,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Tabulates categorical predictions (indices into `domain`).
pub fn attack_confusion(predictions: &[u32], truths: &[u32], domain: &[String]) -> Result<AttackConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let k = domain.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &t) in predictions.iter().zip(truths) {
        if p as usize >= k || t as usize >= k {
            return Err(Error::InvalidArgument(format!(
                "value index outside a domain of {k} values"
            )));
        }
        counts[t as usize][p as usize] += 1;
    }
    AttackConfusionMatrix::from_counts(domain.to_vec(), counts)
}

/// Expected metrics of a random guess that says "positive" with probability
/// `p` when the positive class has prior `prior_positive`.
pub fn randga_envelope(prior_positive: f64, p: f64) -> Result<MetricBundle> {
    if !(0.0..=1.0).contains(&prior_positive) || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(
            "prior and guess probability must lie in [0, 1]".into(),
        ));
    }
    let precision = if p > 0.0 { prior_positive } else { 0.0 };
    let recall = p;
    Ok(MetricBundle {
        precision,
        recall,
        accuracy: p * prior_positive + (1.0 - p) * (1.0 - prior_positive),
        f1: ratio(2.0 * precision * recall, precision + recall),
        fpr: p,
        g_mean: (p * (1.0 - p)).sqrt(),
        mcc: 0.0,
    })
}

/// Percentage rounded half-up to two decimals (0.2541 -> 25.41).
pub fn percent(x: f64) -> f64 {
    ((x * 10_000.0) + 0.5 + 1e-7).floor() / 100.0
}
