//! Comparison orderings: a seeded random permutation, and a supervised model
//! trained on the previous version that ranks the current one by probability.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::dataset::{EncodedDataset, VersionPair};
use crate::learners::{self, LearnerError, TrainConfig, TrainedModel};
use crate::metrics::{self, curve_from_ranking, GroundTruth, MetricsError, RecallCostCurve};
use crate::rng;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Uniform random permutation of `ids`.
pub fn random_ranking<S: Clone>(ids: &[S], seed: u64) -> Result<Vec<S>, BaselineError> {
    if ids.is_empty() {
        return Err(BaselineError::EmptyPool);
    }
    let mut out = ids.to_vec();
    out.shuffle(&mut rng::seeded(seed));
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RandomRun {
    pub order: Vec<String>,
    pub curve: RecallCostCurve,
}

pub fn random_run(pool: &EncodedDataset, seed: u64) -> Result<RandomRun, BaselineError> {
    let truth = GroundTruth::from_dataset(pool)?;
    let order = random_ranking(&pool.ids, seed)?;
    let curve = curve_from_ranking(&order, &truth)?;
    Ok(RandomRun { order, curve })
}

#[derive(Debug, Clone)]
pub struct SupervisedRun {
    pub order: Vec<String>,
    /// Test-side probabilities in row order.
    pub probabilities: Vec<f64>,
    pub curve: RecallCostCurve,
    /// ROC-AUC of the probabilities against test ground truth.
    pub auc: f64,
    pub model: TrainedModel,
}

/// Train on `pair.train`, order `pair.test` by descending probability (ties by
/// row index) and walk that order against the test labels.
pub fn supervised_ranking(pair: &VersionPair, cfg: &TrainConfig) -> Result<SupervisedRun, BaselineError> {
    let test = &pair.test;
    if test.is_empty() {
        return Err(BaselineError::EmptyPool);
    }
    let train_labels = pair.train.known_labels().ok_or_else(|| {
        MetricsError::MissingGroundTruth("training version has unlabeled rows".into())
    })?;
    let model = learners::train(&pair.train.x, &train_labels, cfg)?;
    let probabilities = model.predict_proba(&test.x)?;
    let mut rows: Vec<usize> = (0..test.n_rows()).collect();
    rows.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]).then(a.cmp(&b)));
    let order: Vec<String> = rows.iter().map(|&r| test.ids[r].clone()).collect();
    let truth = GroundTruth::from_dataset(test)?;
    let curve = curve_from_ranking(&order, &truth)?;
    let test_labels = test.known_labels().expect("checked by GroundTruth::from_dataset");
    let auc = metrics::roc_auc(&probabilities, &test_labels)?;
    Ok(SupervisedRun {
        order,
        probabilities,
        curve,
        auc,
        model,
    })
}
