//! Classifiers embedded in the triage loop.
//!
//! Every model exposes two views of a row:
//!
//! - a decision **score** used by uncertainty sampling and undersampling
//!   (`w·x + b` for the SVM, `2p − 1` of the leaf positive fraction for trees);
//! - a positive-class **probability** used by certainty sampling and ranking.

mod forest;
mod platt;
mod svm;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Class;
use crate::matrix::Matrix;

pub use forest::RandomForest;
pub use platt::PlattScaling;
pub use svm::{LinearSvm, SvmReport};
pub use tree::{DecisionTree, Node, SplitChoice};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training set needs both classes (positives: {positives}, negatives: {negatives})")]
    DegenerateTraining { positives: usize, negatives: usize },
    #[error("model expects {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("model document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LinearSvm,
    DecisionTree,
    RandomForest,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::LinearSvm, LearnerKind::RandomForest, LearnerKind::DecisionTree];

    /// Short name used on the command line and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            LearnerKind::LinearSvm => "svm",
            LearnerKind::DecisionTree => "dt",
            LearnerKind::RandomForest => "rf",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm" | "linear_svm" | "linear-svm" => Ok(LearnerKind::LinearSvm),
            "dt" | "tree" | "decision_tree" | "decision-tree" => Ok(LearnerKind::DecisionTree),
            "rf" | "forest" | "random_forest" | "random-forest" => Ok(LearnerKind::RandomForest),
            other => Err(LearnerError::InvalidConfig(format!("unknown learner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    /// `c_y = n / (2 · n_y)`.
    Balanced,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Soft-margin penalty.
    pub c: f64,
    pub max_epochs: usize,
    /// Stop once the projected-gradient spread of an epoch falls below this.
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_epochs: 1000,
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_samples_leaf: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

/// Number of candidate features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `max(1, ⌊√d⌋)`.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: LearnerKind,
    pub class_weighting: ClassWeighting,
    pub seed: u64,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default)]
    pub forest: ForestParams,
}

impl TrainConfig {
    /// Defaults per learner: a balanced-weight SVM, unweighted trees.
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            kind,
            class_weighting: match kind {
                LearnerKind::LinearSvm => ClassWeighting::Balanced,
                _ => ClassWeighting::None,
            },
            seed: 0,
            svm: SvmParams::default(),
            tree: TreeParams::default(),
            forest: ForestParams::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::InvalidConfig(m.to_string()));
        if !(self.svm.c > 0.0 && self.svm.c.is_finite()) {
            return bad("svm.c must be positive");
        }
        if self.svm.max_epochs == 0 {
            return bad("svm.max_epochs must be positive");
        }
        if !(self.svm.tolerance > 0.0) {
            return bad("svm.tolerance must be positive");
        }
        if self.tree.min_samples_leaf == 0 {
            return bad("tree.min_samples_leaf must be positive");
        }
        if self.tree.max_depth == Some(0) {
            return bad("tree.max_depth must be positive when set");
        }
        if self.forest.n_trees == 0 {
            return bad("forest.n_trees must be positive");
        }
        if self.forest.max_features == MaxFeatures::Count(0) {
            return bad("forest.max_features must be positive");
        }
        Ok(())
    }
}

/// Per-class sample weights `[positive, negative]`.
pub(crate) fn class_weights(y: &[Class], weighting: ClassWeighting) -> [f64; 2] {
    match weighting {
        ClassWeighting::None => [1.0, 1.0],
        ClassWeighting::Balanced => {
            let n = y.len() as f64;
            let pos = y.iter().filter(|c| c.is_positive()).count() as f64;
            let neg = n - pos;
            [n / (2.0 * pos), n / (2.0 * neg)]
        }
    }
}

pub(crate) fn weight_of(class: Class, weights: [f64; 2]) -> f64 {
    match class {
        Class::Positive => weights[0],
        Class::Negative => weights[1],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n_features: usize,
    pub n_rows: usize,
    /// `[positive, negative]`.
    pub class_weights: [f64; 2],
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    LinearSvm(LinearSvm),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub meta: TrainingMeta,
    pub params: ModelParams,
}

pub fn train(x: &Matrix, y: &[Class], cfg: &TrainConfig) -> Result<TrainedModel, LearnerError> {
    train_inner(x, y, cfg).map(|(m, _)| m)
}

/// Train a linear SVM (whatever `cfg.kind` says) and also return its optimisation trace.
pub fn train_svm_with_report(
    x: &Matrix,
    y: &[Class],
    cfg: &TrainConfig,
) -> Result<(TrainedModel, SvmReport), LearnerError> {
    let cfg = TrainConfig {
        kind: LearnerKind::LinearSvm,
        ..cfg.clone()
    };
    let (model, report) = train_inner(x, y, &cfg)?;
    Ok((model, report.expect("svm training reports")))
}

fn train_inner(x: &Matrix, y: &[Class], cfg: &TrainConfig) -> Result<(TrainedModel, Option<SvmReport>), LearnerError> {
    cfg.validate()?;
    if x.rows() != y.len() {
        return Err(LearnerError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    let positives = y.iter().filter(|c| c.is_positive()).count();
    let negatives = y.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(LearnerError::DegenerateTraining { positives, negatives });
    }
    let weights = class_weights(y, cfg.class_weighting);
    let mut report = None;
    let params = match cfg.kind {
        LearnerKind::LinearSvm => {
            let (svm, r) = svm::fit(x, y, weights, &cfg.svm, cfg.seed);
            report = Some(r);
            ModelParams::LinearSvm(svm)
        }
        LearnerKind::DecisionTree => {
            ModelParams::DecisionTree(DecisionTree::fit(x, y, weights, &cfg.tree, MaxFeatures::All, None, cfg.seed))
        }
        LearnerKind::RandomForest => {
            ModelParams::RandomForest(RandomForest::fit(x, y, weights, &cfg.tree, &cfg.forest, cfg.seed))
        }
    };
    let model = TrainedModel {
        meta: TrainingMeta {
            n_features: x.cols(),
            n_rows: x.rows(),
            class_weights: weights,
            seed: cfg.seed,
        },
        params,
    };
    Ok((model, report))
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        match self.params {
            ModelParams::LinearSvm(_) => LearnerKind::LinearSvm,
            ModelParams::DecisionTree(_) => LearnerKind::DecisionTree,
            ModelParams::RandomForest(_) => LearnerKind::RandomForest,
        }
    }

    pub fn n_features(&self) -> usize {
        self.meta.n_features
    }

    fn check(&self, x: &Matrix) -> Result<(), LearnerError> {
        if x.cols() != self.meta.n_features {
            return Err(LearnerError::DimensionMismatch {
                expected: self.meta.n_features,
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Decision value of one row; callers guarantee the row width.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::LinearSvm(m) => m.decision(row),
            ModelParams::DecisionTree(t) => t.score_row(row),
            ModelParams::RandomForest(f) => f.score_row(row),
        }
    }

    pub fn proba_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::LinearSvm(m) => m.platt.probability(m.decision(row)),
            ModelParams::DecisionTree(t) => t.proba_row(row),
            ModelParams::RandomForest(f) => f.proba_row(row),
        }
    }

    /// A strictly increasing transform of [`proba_row`](Self::proba_row) that does
    /// not saturate to exactly 1.0, so argmax over it matches argmax over the
    /// exact probability.
    pub fn confidence_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::LinearSvm(m) => m.platt.logit(m.decision(row)),
            _ => self.proba_row(row),
        }
    }

    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>, LearnerError> {
        self.check(x)?;
        Ok(x.iter_rows().map(|r| self.score_row(r)).collect())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, LearnerError> {
        self.check(x)?;
        Ok(x.iter_rows().map(|r| self.proba_row(r)).collect())
    }

    /// Hard labels at score 0.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<Class>, LearnerError> {
        Ok(self
            .score(x)?
            .into_iter()
            .map(|s| if s > 0.0 { Class::Positive } else { Class::Negative })
            .collect())
    }
}

pub const MODEL_FORMAT: &str = "actriage-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Versioned JSON envelope for persisted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub kind: LearnerKind,
    /// Fingerprint of the feature schema the model was trained under.
    pub schema_fingerprint: Option<String>,
    pub model: TrainedModel,
}

impl ModelDocument {
    pub fn new(model: TrainedModel, schema_fingerprint: Option<String>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            kind: model.kind(),
            schema_fingerprint,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| LearnerError::Document(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(LearnerError::Document(format!("unexpected format `{}`", doc.format)));
        }
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::Document(format!("unsupported version {}", doc.version)));
        }
        if doc.kind != doc.model.kind() {
            return Err(LearnerError::Document("kind does not match parameters".into()));
        }
        Ok(doc)
    }
}
