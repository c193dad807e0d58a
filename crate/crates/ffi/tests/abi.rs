use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use miai_ffi::*;

const SCHEMA: &str = r#"
name = "toy"

[[attributes]]
name = "age"
kind = "continuous"
bins = 3

[[attributes]]
name = "job"

[[attributes]]
name = "sex"
domain = ["f", "m"]

[[attributes]]
name = "smoker"
role = "sensitive"
domain = ["yes", "no"]

[[attributes]]
name = "risk"
role = "target_label"
domain = ["low", "high"]
"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn cpath(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

fn last_error() -> String {
    let p = miai_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Writes a 300-record CSV where smokers are mostly high risk.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut csv = String::from("age,job,sex,smoker,risk\n");
    for i in 0..300u32 {
        let smoker = i % 3 == 0;
        let age = 20 + (i * 7) % 60;
        let high = smoker ^ (i % 11 == 0);
        csv.push_str(&format!(
            "{age},{},{},{},{}\n",
            ["clerk", "nurse", "driver"][(i % 5 % 3) as usize],
            if i % 2 == 0 { "f" } else { "m" },
            if smoker { "yes" } else { "no" },
            if high { "high" } else { "low" }
        ));
    }
    let csv_path = dir.join("toy.csv");
    let schema_path = dir.join("toy.schema.toml");
    std::fs::write(&csv_path, csv).unwrap();
    std::fs::write(&schema_path, SCHEMA).unwrap();
    (csv_path, schema_path)
}

struct Handles {
    _dir: tempfile::TempDir,
    dir: PathBuf,
    ds: *mut MiaiDataset,
    train: *mut MiaiDataset,
    holdout: *mut MiaiDataset,
}

impl Handles {
    fn new() -> Handles {
        let dir = tempfile::tempdir().unwrap();
        let (csv, schema) = fixture(dir.path());
        let mut ds = ptr::null_mut();
        let (mut train, mut holdout) = (ptr::null_mut(), ptr::null_mut());
        unsafe {
            assert_eq!(miai_dataset_load(cpath(&csv).as_ptr(), cpath(&schema).as_ptr(), &mut ds), MiaiStatus::Ok);
            assert_eq!(miai_dataset_split(ds, 0.75, 5, &mut train, &mut holdout), MiaiStatus::Ok);
        }
        Handles {
            dir: dir.path().to_path_buf(),
            _dir: dir,
            ds,
            train,
            holdout,
        }
    }

    fn target(&self, confidence: bool) -> *mut MiaiTarget {
        let mut t = ptr::null_mut();
        let status = unsafe { miai_target_train(self.train, c("decision_tree").as_ptr(), 1, confidence, &mut t) };
        assert_eq!(status, MiaiStatus::Ok);
        t
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            miai_dataset_free(self.ds);
            miai_dataset_free(self.train);
            miai_dataset_free(self.holdout);
        }
    }
}

unsafe fn attack(
    target: *mut MiaiTarget,
    ds: *const MiaiDataset,
    kind: &str,
    unknown: Option<&str>,
) -> (MiaiStatus, *mut MiaiReport) {
    let kind = c(kind);
    let sensitive = c("smoker");
    let positive = c("yes");
    let unknown = unknown.map(c);
    let mut report = ptr::null_mut();
    let status = miai_attack_run(
        target,
        ds,
        ptr::null(),
        kind.as_ptr(),
        sensitive.as_ptr(),
        unknown.as_ref().map_or(ptr::null(), |u| u.as_ptr()),
        positive.as_ptr(),
        3,
        &mut report,
    );
    (status, report)
}

unsafe fn metrics(report: *const MiaiReport) -> MiaiMetrics {
    let mut m = MiaiMetrics::default();
    assert_eq!(miai_report_metrics(report, &mut m), MiaiStatus::Ok);
    m
}

#[test]
fn dataset_sizes_follow_the_split() {
    let h = Handles::new();
    let mut n = 0usize;
    unsafe {
        assert_eq!(miai_dataset_len(h.ds, &mut n), MiaiStatus::Ok);
        assert_eq!(n, 300);
        assert_eq!(miai_dataset_len(h.train, &mut n), MiaiStatus::Ok);
        assert_eq!(n, 225);
        assert_eq!(miai_dataset_len(h.holdout, &mut n), MiaiStatus::Ok);
        assert_eq!(n, 75);
    }
}

#[test]
fn csmia_through_the_abi_counts_queries() {
    let h = Handles::new();
    let t = h.target(true);
    unsafe {
        let (status, report) = attack(t, h.train, "csmia", None);
        assert_eq!(status, MiaiStatus::Ok);
        let m = metrics(report);
        assert_eq!(m.queries, 450);
        assert_eq!(m.case1 + m.case2 + m.case3, 225);
        assert_eq!(m.tp + m.tn + m.fp + m.fn_, 225);
        assert!(m.g_mean > 0.5, "{m:?}");

        let (status, partial) = attack(t, h.train, "csmia_partial", Some("sex"));
        assert_eq!(status, MiaiStatus::Ok);
        assert_eq!(metrics(partial).queries, 900);
        let mut total = 0;
        assert_eq!(miai_target_query_count(t, &mut total), MiaiStatus::Ok);
        assert_eq!(total, 1350);

        let mut len = 0;
        assert_eq!(miai_report_len(report, &mut len), MiaiStatus::Ok);
        assert_eq!(len, 225);
        let mut p = 9;
        assert_eq!(miai_report_prediction(report, 0, &mut p), MiaiStatus::Ok);
        assert!(p < 2);
        assert_eq!(miai_report_prediction(report, 225, &mut p), MiaiStatus::InvalidArgument);

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(miai_report_to_json(report, &mut json), MiaiStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(doc["evaluation"]["queries"], 450);
        assert_eq!(doc["prediction"]["predictions"].as_array().unwrap().len(), 225);
        miai_string_free(json);

        miai_report_free(report);
        miai_report_free(partial);
        miai_target_free(t);
    }
}

#[test]
fn every_attack_runs_on_the_holdout() {
    let h = Handles::new();
    let t = h.target(true);
    unsafe {
        for kind in ["naive", "random_guess", "fjrmia", "csmia", "lomia"] {
            let (status, report) = attack(t, h.holdout, kind, None);
            assert_eq!(status, MiaiStatus::Ok, "{kind}: {}", last_error());
            let m = metrics(report);
            assert_eq!(m.tp + m.tn + m.fp + m.fn_, 75, "{kind}");
            let expected = if matches!(kind, "naive" | "random_guess") { 0 } else { 150 };
            assert_eq!(m.queries, expected, "{kind}");
            miai_report_free(report);
        }
        miai_target_free(t);
    }
}

#[test]
fn label_only_targets_refuse_confidence_attacks() {
    let h = Handles::new();
    let t = h.target(false);
    unsafe {
        let (status, report) = attack(t, h.train, "csmia", None);
        assert_eq!(status, MiaiStatus::Capability);
        assert!(report.is_null());
        assert!(last_error().contains("confidence"));
        let (status, report) = attack(t, h.train, "lomia", Some("sex,job"));
        assert_eq!(status, MiaiStatus::Ok, "{}", last_error());
        assert!(miai_last_error().is_null());
        miai_report_free(report);
        miai_target_free(t);
    }
}

#[test]
fn saved_targets_reload_with_identical_predictions() {
    let h = Handles::new();
    let t = h.target(true);
    let path = cpath(&h.dir.join("model.json"));
    unsafe {
        assert_eq!(miai_target_save(t, path.as_ptr()), MiaiStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(miai_target_load(path.as_ptr(), &mut loaded), MiaiStatus::Ok);
        let (_, a) = attack(t, h.train, "csmia", None);
        let (_, b) = attack(loaded, h.train, "csmia", None);
        let mut json_a = ptr::null_mut();
        let mut json_b = ptr::null_mut();
        miai_report_to_json(a, &mut json_a);
        miai_report_to_json(b, &mut json_b);
        assert_eq!(CStr::from_ptr(json_a), CStr::from_ptr(json_b));
        miai_string_free(json_a);
        miai_string_free(json_b);
        miai_report_free(a);
        miai_report_free(b);
        miai_target_free(t);
        miai_target_free(loaded);
    }
}

#[test]
fn failures_report_codes_and_messages() {
    let h = Handles::new();
    unsafe {
        let mut ds = ptr::null_mut();
        let missing = cpath(&h.dir.join("absent.csv"));
        let schema = cpath(&h.dir.join("toy.schema.toml"));
        assert_eq!(miai_dataset_load(missing.as_ptr(), schema.as_ptr(), &mut ds), MiaiStatus::Io);
        assert!(last_error().contains("absent.csv"));
        assert!(ds.is_null());
        assert_eq!(miai_dataset_load(ptr::null(), schema.as_ptr(), &mut ds), MiaiStatus::NullPointer);
        assert_eq!(miai_dataset_len(ptr::null(), ptr::null_mut()), MiaiStatus::NullPointer);

        let mut t = ptr::null_mut();
        assert_eq!(miai_target_train(h.train, c("svm").as_ptr(), 0, true, &mut t), MiaiStatus::InvalidArgument);
        let bad = h.dir.join("bad.json");
        std::fs::write(&bad, r#"{"format":"miai-target","version":7}"#).unwrap();
        assert_eq!(miai_target_load(cpath(&bad).as_ptr(), &mut t), MiaiStatus::Format);
        assert!(last_error().contains("version"));

        let target = h.target(true);
        let (status, _) = attack(target, h.train, "telepathy", None);
        assert_eq!(status, MiaiStatus::InvalidArgument);
        let (status, _) = attack(target, h.train, "csmia_partial", Some("sex,job,age"));
        assert_eq!(status, MiaiStatus::Unsupported);
        let (status, _) = attack(target, h.train, "fjrmia", Some("sex"));
        assert_eq!(status, MiaiStatus::InvalidArgument);
        let mut queries = 1;
        miai_target_query_count(target, &mut queries);
        assert_eq!(queries, 0);
        miai_target_free(target);

        miai_dataset_free(ptr::null_mut());
        miai_target_free(ptr::null_mut());
        miai_report_free(ptr::null_mut());
        miai_string_free(ptr::null_mut());
    }
}

#[test]
fn metrics_from_counts_match_the_library() {
    let mut m = MiaiMetrics::default();
    unsafe {
        assert_eq!(miai_metrics_from_counts(7664, 17085, 1244, 9229, &mut m), MiaiStatus::Ok);
    }
    assert!((m.accuracy - 0.7027).abs() < 5e-4);
    assert!((m.f1 - 0.5941).abs() < 5e-4);
    assert!((m.fpr - 0.0679).abs() < 5e-4);
    assert_eq!((m.tp, m.fn_, m.queries), (7664, 9229, 0));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/miai.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ MiaiMetrics m; return miai_metrics_from_counts(1, 1, 0, 0, &m) == MIAI_STATUS_OK ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    match std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() {
        Ok(status) => assert!(status.success(), "cc rejected the header"),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
