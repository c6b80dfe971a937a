//! Incremental active-learning loop over a fixed pool of warnings.
//!
//! A session starts either cold (random sampling without replacement until the
//! first actionable warning is found) or warm (a model trained on the previous
//! version drives the very first query). Once a positive label exists, the
//! model is retrained after every label and queries follow the current phase:
//!
//! - **uncertainty**: smallest `|score|`, i.e. closest to the decision boundary;
//! - **certainty**: highest positive probability, entered once
//!   `certainty_switch_threshold` positives have been found.
//!
//! Each retrain augments the labeled set with presumptive negatives (a fresh
//! uniform sample of unlabeled rows presumed unactionable) and, in the
//! certainty phase, undersamples negatives down to the number of positives,
//! keeping those the current model scores most negative.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Class, EncodedDataset, Label};
use crate::learners::{self, LearnerError, LearnerKind, TrainConfig, TrainedModel};
use crate::matrix::Matrix;
use crate::metrics::{MetricsError, RecallCostCurve};
use crate::rng;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("pool is empty")]
    EmptyPool,
    #[error("every warning in the pool is already labeled")]
    Exhausted,
    #[error("unknown warning id `{0}`")]
    UnknownId(String),
    #[error("warning `{0}` is already labeled")]
    AlreadyLabeled(String),
    #[error("label must be actionable or unactionable, got {0}")]
    InvalidLabel(Label),
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("simulation needs ground truth for every pool row")]
    MissingGroundTruth,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ColdSampling,
    Uncertainty,
    Certainty,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::ColdSampling => "cold_sampling",
            Phase::Uncertainty => "uncertainty",
            Phase::Certainty => "certainty",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub learner: TrainConfig,
    /// Positives found before switching from uncertainty to certainty sampling.
    pub certainty_switch_threshold: usize,
    /// Aggressive undersampling during the certainty phase.
    pub undersampling: bool,
    pub presumptive_negatives: bool,
    /// Simulation stops once this fraction of actionable warnings is found.
    pub stop_recall: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Model trained on the previous version; skips cold sampling.
    #[serde(default)]
    pub warm_start_model: Option<TrainedModel>,
}

impl EngineConfig {
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            learner: TrainConfig::new(kind),
            certainty_switch_threshold: 10,
            undersampling: true,
            presumptive_negatives: true,
            stop_recall: 0.95,
            batch_size: 1,
            seed: 0,
            warm_start_model: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stop_recall(mut self, stop: f64) -> Self {
        self.stop_recall = stop;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.stop_recall > 0.0 && self.stop_recall <= 1.0) {
            return Err(EngineError::InvalidConfig("stop_recall must lie in (0, 1]".into()));
        }
        if self.certainty_switch_threshold == 0 {
            return Err(EngineError::InvalidConfig("certainty_switch_threshold must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(EngineError::InvalidConfig("batch_size must be at least 1".into()));
        }
        self.learner.validate()?;
        Ok(())
    }
}

/// One answered query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub step: usize,
    pub id: String,
    pub row: usize,
    pub label: Class,
    /// Phase the query was issued in.
    pub phase: Phase,
}

/// Rows and classes of one retraining set, as pool row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub rows: Vec<usize>,
    pub classes: Vec<Class>,
    /// How many of `rows` are presumptive negatives.
    pub presumed: usize,
    /// Negatives dropped by undersampling.
    pub discarded: usize,
}

impl TrainingSet {
    pub fn positives(&self) -> usize {
        self.classes.iter().filter(|c| c.is_positive()).count()
    }

    pub fn negatives(&self) -> usize {
        self.classes.len() - self.positives()
    }

    pub fn matrix(&self, pool: &EncodedDataset) -> Matrix {
        pool.x.select_rows(&self.rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RetrainOutcome {
    Retrained,
    /// No positive label yet; the existing model (if any) is kept.
    NotStarted,
    /// The training set had a single class; the existing model is kept.
    Degenerate { positives: usize, negatives: usize },
}

/// State of one triage session.
#[derive(Debug, Clone)]
pub struct SessionState {
    pool: Arc<EncodedDataset>,
    config: EngineConfig,
    labels: Vec<Option<Class>>,
    n_labeled: usize,
    n_positive: usize,
    cold_order: Vec<usize>,
    phase: Phase,
    model: Option<TrainedModel>,
    rng: rng::Rng,
    history: Vec<QueryRecord>,
    id_index: HashMap<String, usize>,
}

const COLD_ORDER_STREAM: u64 = 0xC01D;

impl SessionState {
    pub fn new(pool: Arc<EncodedDataset>, config: EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        if pool.is_empty() {
            return Err(EngineError::EmptyPool);
        }
        if let Some(m) = &config.warm_start_model {
            if m.n_features() != pool.x.cols() {
                return Err(LearnerError::DimensionMismatch {
                    expected: m.n_features(),
                    found: pool.x.cols(),
                }
                .into());
            }
        }
        let mut cold_order: Vec<usize> = (0..pool.n_rows()).collect();
        cold_order.shuffle(&mut rng::seeded(rng::derive_seed(config.seed, COLD_ORDER_STREAM)));
        let id_index = pool.ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let (phase, model) = match &config.warm_start_model {
            Some(m) => (Phase::Uncertainty, Some(m.clone())),
            None => (Phase::ColdSampling, None),
        };
        Ok(Self {
            labels: vec![None; pool.n_rows()],
            n_labeled: 0,
            n_positive: 0,
            cold_order,
            phase,
            model,
            rng: rng::seeded(config.seed),
            history: Vec::new(),
            id_index,
            pool,
            config,
        })
    }

    pub fn pool(&self) -> &EncodedDataset {
        &self.pool
    }

    pub fn pool_arc(&self) -> &Arc<EncodedDataset> {
        &self.pool
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn model(&self) -> Option<&TrainedModel> {
        self.model.as_ref()
    }

    pub fn history(&self) -> &[QueryRecord] {
        &self.history
    }

    pub fn labeled_count(&self) -> usize {
        self.n_labeled
    }

    pub fn positive_count(&self) -> usize {
        self.n_positive
    }

    pub fn unlabeled_count(&self) -> usize {
        self.pool.n_rows() - self.n_labeled
    }

    pub fn label_of(&self, row: usize) -> Option<Class> {
        self.labels[row]
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn unlabeled_rows(&self) -> Vec<usize> {
        (0..self.pool.n_rows()).filter(|&r| self.labels[r].is_none()).collect()
    }

    /// Current model's positive probability for a pool row (0.5 before any model).
    pub fn probability(&self, row: usize) -> f64 {
        self.model.as_ref().map_or(0.5, |m| m.proba_row(self.pool.x.row(row)))
    }

    /// Unlabeled rows ordered by current probability, most likely actionable first.
    pub fn ranking(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64, f64)> = self
            .unlabeled_rows()
            .into_iter()
            .map(|r| {
                let key = self.model.as_ref().map_or(0.0, |m| m.confidence_row(self.pool.x.row(r)));
                (r, key, self.probability(r))
            })
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out.into_iter().map(|(r, _, p)| (r, p)).collect()
    }

    /// Rows to query next under the current phase, best first.
    pub fn next_rows(&self) -> Result<Vec<usize>, EngineError> {
        let remaining = self.unlabeled_count();
        if remaining == 0 {
            return Err(EngineError::Exhausted);
        }
        let k = self.config.batch_size.min(remaining);
        let model = match (&self.model, self.phase) {
            (Some(m), Phase::Uncertainty | Phase::Certainty) => m,
            _ => {
                return Ok(self
                    .cold_order
                    .iter()
                    .copied()
                    .filter(|&r| self.labels[r].is_none())
                    .take(k)
                    .collect())
            }
        };
        // smaller key = queried earlier
        let key = |row: usize| -> f64 {
            let x = self.pool.x.row(row);
            match self.phase {
                Phase::Certainty => -model.confidence_row(x),
                _ => model.score_row(x).abs(),
            }
        };
        let mut keyed: Vec<(f64, usize)> = (0..self.pool.n_rows())
            .filter(|&r| self.labels[r].is_none())
            .map(|r| (key(r), r))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k == 1 {
            let best = keyed.iter().copied().min_by(cmp).expect("non-empty");
            return Ok(vec![best.1]);
        }
        keyed.sort_by(cmp);
        Ok(keyed.into_iter().take(k).map(|(_, r)| r).collect())
    }

    /// Ids to present next (a batch when `batch_size > 1`).
    pub fn next_batch(&self) -> Result<Vec<String>, EngineError> {
        Ok(self.next_rows()?.into_iter().map(|r| self.pool.ids[r].clone()).collect())
    }

    pub fn next_query(&self) -> Result<String, EngineError> {
        Ok(self.next_batch()?.swap_remove(0))
    }

    /// Record a label without retraining.
    pub fn record_label(&mut self, id: &str, label: Label) -> Result<(), EngineError> {
        let class = label.class().ok_or(EngineError::InvalidLabel(label))?;
        let row = self.row_of(id).ok_or_else(|| EngineError::UnknownId(id.to_string()))?;
        if self.labels[row].is_some() {
            return Err(EngineError::AlreadyLabeled(id.to_string()));
        }
        self.labels[row] = Some(class);
        self.n_labeled += 1;
        if class.is_positive() {
            self.n_positive += 1;
        }
        self.history.push(QueryRecord {
            step: self.history.len(),
            id: id.to_string(),
            row,
            label: class,
            phase: self.phase,
        });
        self.advance_phase();
        Ok(())
    }

    fn advance_phase(&mut self) {
        if self.phase == Phase::ColdSampling && self.n_positive >= 1 {
            self.phase = Phase::Uncertainty;
        }
        if self.phase == Phase::Uncertainty && self.n_positive >= self.config.certainty_switch_threshold {
            self.phase = Phase::Certainty;
        }
    }

    /// Record a label and retrain.
    pub fn submit_label(&mut self, id: &str, label: Label) -> Result<RetrainOutcome, EngineError> {
        self.record_label(id, label)?;
        self.retrain()
    }

    /// Record a whole batch, then retrain once. Validates every entry first.
    pub fn submit_labels(&mut self, labels: &[(String, Label)]) -> Result<RetrainOutcome, EngineError> {
        let mut seen = std::collections::HashSet::new();
        for (id, label) in labels {
            label.class().ok_or(EngineError::InvalidLabel(*label))?;
            let row = self.row_of(id).ok_or_else(|| EngineError::UnknownId(id.clone()))?;
            if self.labels[row].is_some() || !seen.insert(row) {
                return Err(EngineError::AlreadyLabeled(id.clone()));
            }
        }
        for (id, label) in labels {
            self.record_label(id, *label)?;
        }
        self.retrain()
    }

    /// Labeled rows plus presumptive negatives, undersampled in the certainty phase.
    ///
    /// Draws from the session RNG (presumptive sampling), so it is part of the
    /// reproducible state sequence.
    pub fn build_training_set(&mut self) -> TrainingSet {
        let mut rows: Vec<usize> = self.history.iter().map(|h| h.row).collect();
        let mut classes: Vec<Class> = self.history.iter().map(|h| h.label).collect();
        let mut presumed = 0;
        if self.config.presumptive_negatives {
            let unlabeled = self.unlabeled_rows();
            let m = self.n_labeled.min(unlabeled.len());
            if m > 0 {
                let mut picks: Vec<usize> = index::sample(&mut self.rng, unlabeled.len(), m).into_vec();
                picks.sort_unstable();
                rows.extend(picks.iter().map(|&i| unlabeled[i]));
                classes.extend(std::iter::repeat_n(Class::Negative, m));
                presumed = m;
            }
        }
        let mut set = TrainingSet {
            rows,
            classes,
            presumed,
            discarded: 0,
        };
        if self.phase == Phase::Certainty && self.config.undersampling {
            if let Some(model) = &self.model {
                set = undersample(set, |row| model.score_row(self.pool.x.row(row)));
            }
        }
        set
    }

    /// Rebuild the training set and refit. Single-class sets keep the old model.
    pub fn retrain(&mut self) -> Result<RetrainOutcome, EngineError> {
        if self.n_positive == 0 {
            return Ok(RetrainOutcome::NotStarted);
        }
        let set = self.build_training_set();
        let cfg = self.config.learner.clone().with_seed(self.rng.next_u64());
        match learners::train(&set.matrix(&self.pool), &set.classes, &cfg) {
            Ok(m) => {
                self.model = Some(m);
                Ok(RetrainOutcome::Retrained)
            }
            Err(LearnerError::DegenerateTraining { positives, negatives }) => {
                Ok(RetrainOutcome::Degenerate { positives, negatives })
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Panics if a structural invariant is broken; used by tests.
    pub fn check_invariants(&self) {
        let labeled = self.labels.iter().filter(|l| l.is_some()).count();
        assert_eq!(labeled, self.n_labeled);
        assert_eq!(self.history.len(), self.n_labeled);
        let pos = self.labels.iter().filter(|l| **l == Some(Class::Positive)).count();
        assert_eq!(pos, self.n_positive);
        for (i, h) in self.history.iter().enumerate() {
            assert_eq!(h.step, i);
            assert_eq!(self.labels[h.row], Some(h.label));
        }
        assert!(self.history.windows(2).all(|w| w[0].phase <= w[1].phase));
        assert!(self.history.last().is_none_or(|h| h.phase <= self.phase));
    }
}

/// Keep every positive and only the `#positives` negatives with the lowest score.
pub fn undersample(set: TrainingSet, score: impl Fn(usize) -> f64) -> TrainingSet {
    let positives = set.positives();
    let negatives = set.classes.len() - positives;
    if negatives <= positives {
        return set;
    }
    let mut neg: Vec<(f64, usize)> = set
        .rows
        .iter()
        .zip(&set.classes)
        .filter(|(_, c)| !c.is_positive())
        .map(|(&r, _)| (score(r), r))
        .collect();
    neg.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let keep: std::collections::HashSet<usize> = neg.iter().take(positives).map(|(_, r)| *r).collect();
    let (rows, classes): (Vec<usize>, Vec<Class>) = set
        .rows
        .iter()
        .zip(&set.classes)
        .filter(|(r, c)| c.is_positive() || keep.contains(r))
        .map(|(r, c)| (*r, *c))
        .unzip();
    let presumed_pool: std::collections::HashSet<usize> = set.rows[set.rows.len() - set.presumed..].iter().copied().collect();
    let presumed = rows.iter().filter(|r| presumed_pool.contains(r)).count();
    TrainingSet {
        discarded: set.discarded + (negatives - positives),
        rows,
        classes,
        presumed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationStatus {
    /// Stopping recall reached.
    Reached,
    /// Pool exhausted first.
    Exhausted,
    /// The pool has no actionable warnings; nothing was queried.
    NoTargets,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub curve: RecallCostCurve,
    pub state: SessionState,
    pub status: SimulationStatus,
}

/// Drive a session with the pool's ground truth as the oracle until
/// `|L_T| ≥ stop_recall · |T|` or the pool is exhausted.
pub fn run_simulation(pool: Arc<EncodedDataset>, config: EngineConfig) -> Result<SimulationOutcome, EngineError> {
    let truth = pool.known_labels().ok_or(EngineError::MissingGroundTruth)?;
    let mut state = SessionState::new(pool, config)?;
    let total = truth.len();
    let targets = truth.iter().filter(|c| c.is_positive()).count();
    if targets == 0 {
        return Ok(SimulationOutcome {
            curve: RecallCostCurve::empty(total, 0),
            state,
            status: SimulationStatus::NoTargets,
        });
    }
    let goal = state.config.stop_recall * targets as f64;
    let reached = |s: &SessionState| s.n_positive as f64 >= goal - 1e-9;
    let mut found = Vec::new();
    let status = loop {
        if reached(&state) {
            break SimulationStatus::Reached;
        }
        if state.unlabeled_count() == 0 {
            break SimulationStatus::Exhausted;
        }
        let batch = state.next_rows()?;
        for row in batch {
            let id = state.pool.ids[row].clone();
            state.record_label(&id, truth[row].label())?;
            found.push(state.n_positive);
            if reached(&state) {
                break;
            }
        }
        state.retrain()?;
    };
    let curve = RecallCostCurve::from_found_counts(&found, total, targets)?;
    Ok(SimulationOutcome { curve, state, status })
}

pub const CHECKPOINT_FORMAT: &str = "actriage-session";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub id: String,
    pub label: Class,
    pub phase: Phase,
}

/// Versioned JSON snapshot sufficient to resume a session bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCheckpoint {
    pub format: String,
    pub version: u32,
    pub pool_fingerprint: String,
    pub config: EngineConfig,
    pub phase: Phase,
    pub history: Vec<CheckpointEntry>,
    pub model: Option<TrainedModel>,
    pub rng: rng::Rng,
}

impl SessionState {
    pub fn checkpoint(&self) -> SessionCheckpoint {
        SessionCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            pool_fingerprint: self.pool.fingerprint(),
            config: self.config.clone(),
            phase: self.phase,
            history: self
                .history
                .iter()
                .map(|h| CheckpointEntry {
                    id: h.id.clone(),
                    label: h.label,
                    phase: h.phase,
                })
                .collect(),
            model: self.model.clone(),
            rng: self.rng.clone(),
        }
    }

    pub fn restore(pool: Arc<EncodedDataset>, cp: SessionCheckpoint) -> Result<Self, EngineError> {
        if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
            return Err(EngineError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                cp.format, cp.version
            )));
        }
        if cp.pool_fingerprint != pool.fingerprint() {
            return Err(EngineError::Checkpoint("pool does not match the checkpointed dataset".into()));
        }
        let mut state = SessionState::new(pool, cp.config)?;
        for (step, e) in cp.history.into_iter().enumerate() {
            let row = state
                .row_of(&e.id)
                .ok_or_else(|| EngineError::Checkpoint(format!("unknown id `{}`", e.id)))?;
            if state.labels[row].is_some() {
                return Err(EngineError::Checkpoint(format!("id `{}` labeled twice", e.id)));
            }
            state.labels[row] = Some(e.label);
            state.n_labeled += 1;
            if e.label.is_positive() {
                state.n_positive += 1;
            }
            state.history.push(QueryRecord {
                step,
                id: e.id,
                row,
                label: e.label,
                phase: e.phase,
            });
        }
        state.phase = cp.phase;
        state.model = cp.model;
        state.rng = cp.rng;
        Ok(state)
    }

    pub fn checkpoint_json(&self) -> String {
        serde_json::to_string(&self.checkpoint()).expect("checkpoint serializes")
    }

    pub fn restore_json(pool: Arc<EncodedDataset>, text: &str) -> Result<Self, EngineError> {
        let cp: SessionCheckpoint = serde_json::from_str(text).map_err(|e| EngineError::Checkpoint(e.to_string()))?;
        Self::restore(pool, cp)
    }
}
