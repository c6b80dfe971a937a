//! Effort-aware evaluation: total recall, cost, ROC-AUC and recall-cost curves.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Class, EncodedDataset};
use crate::engine::SessionState;
use crate::learners::TrainedModel;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("found positives ({found}) exceed total positives ({total})")]
    RecallOverflow { found: usize, total: usize },
    #[error("inspected count ({labeled}) exceeds pool size ({total})")]
    CostOverflow { labeled: usize, total: usize },
    #[error("cost is undefined for an empty pool")]
    EmptyPool,
    #[error("AUC needs both classes (positives: {positives}, negatives: {negatives})")]
    SingleClass { positives: usize, negatives: usize },
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
    #[error("ranking is not a permutation of the ground truth: {0}")]
    NotPermutation(String),
    #[error("no values to summarise")]
    EmptySummary,
    #[error("ground truth unavailable: {0}")]
    MissingGroundTruth(String),
}

/// `L_T / T`, with the degenerate `T = 0` case flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recall {
    pub value: f64,
    /// Set when there are no targets; `value` is then 1.0.
    pub degenerate: bool,
}

pub fn total_recall(found: usize, targets: usize) -> Result<Recall, MetricsError> {
    if found > targets {
        return Err(MetricsError::RecallOverflow { found, total: targets });
    }
    if targets == 0 {
        return Ok(Recall {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(Recall {
        value: found as f64 / targets as f64,
        degenerate: false,
    })
}

/// `L / E`.
pub fn cost(labeled: usize, total: usize) -> Result<f64, MetricsError> {
    if total == 0 {
        return Err(MetricsError::EmptyPool);
    }
    if labeled > total {
        return Err(MetricsError::CostOverflow { labeled, total });
    }
    Ok(labeled as f64 / total as f64)
}

/// Probability that a random positive outranks a random negative, ties counting ½.
///
/// Computed from average ranks (Mann-Whitney U) in `O(n log n)`.
pub fn roc_auc(scores: &[f64], labels: &[Class]) -> Result<f64, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|c| c.is_positive()).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass { positives, negatives });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share their mean
        let avg = (i + 1 + j) as f64 / 2.0;
        let tied_pos = order[i..j].iter().filter(|&&k| labels[k].is_positive()).count();
        rank_sum += avg * tied_pos as f64;
        i = j;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub cost: f64,
    pub recall: f64,
}

/// Recall after each inspected warning, in inspection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCostCurve {
    pub points: Vec<CurvePoint>,
    /// `|E|`.
    pub total: usize,
    /// `|T|`.
    pub targets: usize,
}

impl RecallCostCurve {
    pub fn empty(total: usize, targets: usize) -> Self {
        Self {
            points: Vec::new(),
            total,
            targets,
        }
    }

    /// Build from the running count of positives found after each inspection.
    pub fn from_found_counts(found: &[usize], total: usize, targets: usize) -> Result<Self, MetricsError> {
        let points = found
            .iter()
            .enumerate()
            .map(|(k, &f)| {
                Ok(CurvePoint {
                    cost: cost(k + 1, total)?,
                    recall: total_recall(f, targets)?.value,
                })
            })
            .collect::<Result<_, MetricsError>>()?;
        Ok(Self { points, total, targets })
    }

    pub fn final_recall(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.recall)
    }

    pub fn final_cost(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.cost)
    }

    /// Recall reached once a `cost` fraction of the pool has been inspected.
    pub fn recall_at_cost(&self, cost: f64) -> f64 {
        self.points
            .iter()
            .take_while(|p| p.cost <= cost + 1e-12)
            .last()
            .map_or(0.0, |p| p.recall)
    }

    /// Two-column CSV, `cost,recall`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cost,recall\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{}", p.cost, p.recall);
        }
        s
    }
}

/// Id → class lookup for evaluating orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    classes: HashMap<String, Class>,
    positives: usize,
}

impl GroundTruth {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Class)>,
        S: Into<String>,
    {
        let classes: HashMap<String, Class> = pairs.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let positives = classes.values().filter(|c| c.is_positive()).count();
        Self { classes, positives }
    }

    pub fn from_dataset(ds: &EncodedDataset) -> Result<Self, MetricsError> {
        let labels = ds
            .known_labels()
            .ok_or_else(|| MetricsError::MissingGroundTruth("pool has unlabeled rows".into()))?;
        Ok(Self::from_pairs(ds.ids.iter().cloned().zip(labels)))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn class_of(&self, id: &str) -> Option<Class> {
        self.classes.get(id).copied()
    }
}

/// Walk `order` against the truth: point `k` is `(k/|E|, found(k)/|T|)`.
pub fn curve_from_ranking<S: AsRef<str>>(order: &[S], truth: &GroundTruth) -> Result<RecallCostCurve, MetricsError> {
    if order.len() != truth.len() {
        return Err(MetricsError::NotPermutation(format!(
            "{} ids for a pool of {}",
            order.len(),
            truth.len()
        )));
    }
    let mut seen = HashSet::with_capacity(order.len());
    let mut found = 0;
    let mut counts = Vec::with_capacity(order.len());
    for id in order {
        let id = id.as_ref();
        let class = truth
            .class_of(id)
            .ok_or_else(|| MetricsError::NotPermutation(format!("unknown id `{id}`")))?;
        if !seen.insert(id) {
            return Err(MetricsError::NotPermutation(format!("duplicate id `{id}`")));
        }
        if class.is_positive() {
            found += 1;
        }
        counts.push(found);
    }
    RecallCostCurve::from_found_counts(&counts, truth.len(), truth.positives())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostAtRecall {
    pub cost: f64,
    /// False when the curve never reaches the threshold; `cost` is then 1.0.
    pub reached: bool,
}

/// Smallest cost at which recall reaches `threshold` (in `(0, 1]`).
pub fn cost_at_recall(curve: &RecallCostCurve, threshold: f64) -> CostAtRecall {
    assert!(threshold > 0.0 && threshold <= 1.0, "recall threshold must lie in (0, 1]");
    curve
        .points
        .iter()
        .find(|p| p.recall + 1e-12 >= threshold)
        .map_or(
            CostAtRecall {
                cost: 1.0,
                reached: false,
            },
            |p| CostAtRecall {
                cost: p.cost,
                reached: true,
            },
        )
}

/// How an active-learning session is turned into a single ranking for AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucConstruction {
    /// Labeled items by query order (earliest highest), then unlabeled items by
    /// the final model's probability.
    #[default]
    RetrievalOrder,
    /// The final model's probabilities over the items never queried.
    FinalModelHeldOut,
}

/// ROC-AUC of a finished session over its pool's ground truth.
pub fn session_auc(
    state: &SessionState,
    final_model: Option<&TrainedModel>,
    construction: AucConstruction,
) -> Result<f64, MetricsError> {
    let pool = state.pool();
    let labels = pool
        .known_labels()
        .ok_or_else(|| MetricsError::MissingGroundTruth("pool has unlabeled rows".into()))?;
    let proba = |row: usize| final_model.map_or(0.5, |m| m.proba_row(pool.x.row(row)));
    match construction {
        AucConstruction::RetrievalOrder => {
            let queried = state.history().len();
            let mut scores: Vec<f64> = (0..pool.n_rows()).map(|r| proba(r)).collect();
            // labeled scores start at 2, above every probability
            for (rank, entry) in state.history().iter().enumerate() {
                scores[entry.row] = 2.0 + (queried - rank) as f64;
            }
            roc_auc(&scores, &labels)
        }
        AucConstruction::FinalModelHeldOut => {
            let rows = state.unlabeled_rows();
            let scores: Vec<f64> = rows.iter().map(|&r| proba(r)).collect();
            let held: Vec<Class> = rows.iter().map(|&r| labels[r]).collect();
            roc_auc(&scores, &held)
        }
    }
}

/// Median and interquartile range over a run set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub values: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 1]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Result<RunSummary, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptySummary);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = percentile(&sorted, 0.25);
    let q3 = percentile(&sorted, 0.75);
    Ok(RunSummary {
        values: values.to_vec(),
        median: percentile(&sorted, 0.5),
        q1,
        q3,
        iqr: q3 - q1,
    })
}
