//! Plain-text rendering of a metric document as aligned tables.

use std::fmt::Write;

use super::pipeline::MetricsDocument;
use crate::metrics::percent;

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.2}", percent(x))
}

pub fn render_report(doc: &MetricsDocument) -> String {
    let mut s = String::new();
    let t = &doc.target;
    let _ = writeln!(s, "Target model");
    let _ = writeln!(
        s,
        "  kind {}, confidences {}, seed {}",
        t.kind,
        if t.exposes_confidence { "exposed" } else { "hidden" },
        doc.seed
    );
    let _ = writeln!(
        s,
        "  training records {}, accuracy {}%; holdout records {}, accuracy {}%",
        t.train_records,
        pct(t.train_accuracy),
        t.holdout_records,
        pct(t.holdout_accuracy)
    );

    let _ = writeln!(s, "\nAttack performance (%)");
    let rows: Vec<Vec<String>> = doc
        .attacks
        .iter()
        .map(|e| {
            let m = &e.evaluation.metrics;
            let cases = e
                .evaluation
                .case_counts
                .map(|c| format!("{}/{}/{}", c[0], c[1], c[2]))
                .unwrap_or_else(|| "-".into());
            vec![
                format!("{}. {}", e.index, e.evaluation.attack),
                e.evaluation.attribute.clone(),
                e.split.clone(),
                pct(m.precision),
                pct(m.recall),
                pct(m.accuracy),
                pct(m.f1),
                pct(m.fpr),
                pct(m.g_mean),
                pct(m.mcc),
                cases,
            ]
        })
        .collect();
    s.push_str(&table(
        &["Attack", "Attribute", "Split", "Precision", "Recall", "Accuracy", "F1", "FPR", "G-mean", "MCC", "Cases 1/2/3"],
        &rows,
    ));

    for e in doc.attacks.iter().filter(|e| e.evaluation.confusion.values.len() > 2) {
        let c = &e.evaluation.confusion;
        let _ = writeln!(
            s,
            "\nConfusion matrix: {}. {} on {} ({}), rows actual, columns predicted",
            e.index, e.evaluation.attack, e.evaluation.attribute, e.split
        );
        let mut header = vec![""];
        header.extend(c.values.iter().map(String::as_str));
        header.push("Recall");
        let mut rows: Vec<Vec<String>> = c
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut row = vec![v.clone()];
                row.extend(c.counts[i].iter().map(u64::to_string));
                row.push(pct(c.recall[i]));
                row
            })
            .collect();
        let mut prec = vec!["Precision".to_string()];
        prec.extend(c.precision.iter().map(|p| pct(*p)));
        prec.push(String::new());
        rows.push(prec);
        s.push_str(&table(&header, &rows));
        let _ = writeln!(
            s,
            "  accuracy {}%, avg recall {}%, avg precision {}%",
            pct(c.accuracy),
            pct(c.avg_recall),
            pct(c.avg_precision)
        );
    }

    for e in doc.attacks.iter().filter(|e| e.importances.is_some()) {
        let _ = writeln!(
            s,
            "\nAttack model importances: {}. {} on {} ({})",
            e.index, e.evaluation.attack, e.evaluation.attribute, e.split
        );
        let rows: Vec<Vec<String>> = e
            .importances
            .iter()
            .flatten()
            .map(|(n, v)| vec![n.clone(), pct(*v)])
            .collect();
        s.push_str(&table(&["Attribute", "Importance (%)"], &rows));
    }

    for g in &doc.subgroups {
        let r = &g.report;
        let _ = writeln!(s, "\nDisparate vulnerability: {}. {} on {} by {}", g.index, r.attack, g.attribute, r.grouping);
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|row| {
                let opt = |v: Option<f64>| v.map(pct).unwrap_or_else(|| "-".into());
                vec![
                    row.value.clone(),
                    row.size.to_string(),
                    pct(row.accuracy),
                    opt(row.metrics.as_ref().map(|m| m.g_mean)),
                    opt(row.metrics.as_ref().map(|m| m.mcc)),
                    opt(row.correct_case1),
                    opt(row.target_accuracy),
                ]
            })
            .collect();
        s.push_str(&table(
            &["Value", "Size", "Accuracy", "G-mean", "MCC", "Correct Case 1", "TM accuracy"],
            &rows,
        ));
    }

    for p in &doc.per_class {
        let _ = writeln!(s, "\nPer target class: {}. {} on {}", p.index, p.attack, p.attribute);
        let rows: Vec<Vec<String>> = p
            .rows
            .iter()
            .map(|row| {
                let c = &row.counts;
                let m = |f: fn(&crate::metrics::MetricBundle) -> f64| {
                    row.metrics.as_ref().map(|b| pct(f(b))).unwrap_or_else(|| "-".into())
                };
                vec![
                    row.label.clone(),
                    c.tp.to_string(),
                    c.tn.to_string(),
                    c.fp.to_string(),
                    c.fn_.to_string(),
                    m(|b| b.precision),
                    m(|b| b.recall),
                    m(|b| b.accuracy),
                    m(|b| b.g_mean),
                    m(|b| b.mcc),
                ]
            })
            .collect();
        s.push_str(&table(
            &["Class", "TP", "TN", "FP", "FN", "Precision", "Recall", "Accuracy", "G-mean", "MCC"],
            &rows,
        ));
    }

    if !doc.distributional.is_empty() {
        let _ = writeln!(s, "\nTraining set versus holdout (%)");
        let rows: Vec<Vec<String>> = doc
            .distributional
            .iter()
            .map(|d| {
                let c = &d.comparison;
                vec![
                    format!("{}. {}", d.index, c.attack),
                    d.attribute.clone(),
                    pct(c.on_training.accuracy),
                    pct(c.on_holdout.accuracy),
                    pct(c.on_training.g_mean),
                    pct(c.on_holdout.g_mean),
                    pct(c.on_training.mcc),
                    pct(c.on_holdout.mcc),
                ]
            })
            .collect();
        s.push_str(&table(
            &["Attack", "Attribute", "Acc train", "Acc holdout", "G-mean train", "G-mean holdout", "MCC train", "MCC holdout"],
            &rows,
        ));
    }

    let _ = writeln!(s, "\nQueries");
    let rows: Vec<Vec<String>> = doc
        .queries
        .iter()
        .map(|q| {
            vec![
                q.attack.to_string(),
                q.attribute.clone(),
                q.records.to_string(),
                q.per_record.to_string(),
                q.expected.to_string(),
                q.actual.to_string(),
                if q.matches { "yes".into() } else { "NO".into() },
            ]
        })
        .collect();
    s.push_str(&table(&["Attack", "Attribute", "Records", "Per record", "Expected", "Ledger", "Match"], &rows));
    s
}
