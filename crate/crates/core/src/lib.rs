//! Active-learning triage of static-analysis warnings.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: CSV ingestion, feature schema fitting and numeric encoding.
//! - [`learners`]: class-weighted linear SVM, CART decision tree and random forest.
//! - [`engine`]: the incremental active-learning loop (query strategies,
//!   presumptive negatives, aggressive undersampling, simulation).
//! - [`baselines`]: random ordering and supervised version-to-version ranking.
//! - [`metrics`]: total recall, cost, ROC-AUC, recall-cost curves and run summaries.
//! - [`report`]: run-set CSV rows and markdown reports.
//! - [`synthetic`]: seeded generator for warning corpora with known class counts.

pub mod baselines;
pub mod dataset;
pub mod engine;
pub mod learners;
pub mod matrix;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod synthetic;

pub use dataset::{
    encode, fit_schema, load_csv, load_version_pair, Class, CsvOptions, DatasetError,
    EncodedDataset, FeatureSchema, Label, VersionPair, WarningRecord,
};
pub use engine::{EngineConfig, EngineError, Phase, SessionState};
pub use learners::{LearnerError, LearnerKind, TrainConfig, TrainedModel};
pub use matrix::Matrix;
pub use metrics::{MetricsError, RecallCostCurve, RunSummary};
