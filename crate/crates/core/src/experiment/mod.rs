//! Config-driven experiment pipeline behind the command-line tool.
//!
//! The three stages communicate only through files in the output directory:
//! `train-target` writes `model.json`, `attack` writes `attacks.json` plus
//! one prediction CSV per run, and `report` writes `metrics.json` and
//! `report.txt`. A full run executes the same three stages in order.

mod config;
mod pipeline;
mod report;

pub use config::{AnalysisConfig, AttackConfig, AttackSplit, DataConfig, ExperimentConfig, TargetConfig};
pub use pipeline::{
    attack, inspect_model, load_config, report, run, train_target, AttackRun, AttacksDocument, MetricsDocument,
    RunOptions, TargetSummary,
};
pub use report::render_report;
