//! Class-weighted linear SVM trained by dual coordinate descent.
//!
//! Minimises `½(‖w‖² + b²) + C Σ c_{y_i} max(0, 1 − y_i (w·x_i + b))` where the
//! bias is handled as an extra constant-1 feature, so it carries the same L2
//! penalty as the weights (the liblinear convention).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::platt::PlattScaling;
use super::{weight_of, SvmParams};
use crate::dataset::Class;
use crate::matrix::{dot, Matrix};
use crate::rng;

/// Value of the augmented bias feature.
const BIAS_FEATURE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub platt: PlattScaling,
}

impl LinearSvm {
    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }
}

/// Optimisation trace of one SVM fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    /// Primal objective at `w = 0` followed by its value after each epoch.
    pub objective_history: Vec<f64>,
    /// Objective of the returned parameters (the lowest seen).
    pub objective: f64,
    pub epochs: usize,
    pub converged: bool,
}

fn primal_objective(x: &Matrix, y: &[Class], costs: &[f64], w: &[f64], b: f64) -> f64 {
    let reg = 0.5 * (dot(w, w) + b * b);
    let loss: f64 = x
        .iter_rows()
        .zip(y)
        .zip(costs)
        .map(|((row, cls), c)| c * (1.0 - cls.sign() * (dot(w, row) + b)).max(0.0))
        .sum();
    reg + loss
}

pub(super) fn fit(x: &Matrix, y: &[Class], weights: [f64; 2], params: &SvmParams, seed: u64) -> (LinearSvm, SvmReport) {
    let n = x.rows();
    let d = x.cols();
    let costs: Vec<f64> = y.iter().map(|c| params.c * weight_of(*c, weights)).collect();
    let q_diag: Vec<f64> = x.iter_rows().map(|r| dot(r, r) + BIAS_FEATURE * BIAS_FEATURE).collect();

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::seeded(seed);

    let initial = primal_objective(x, y, &costs, &w, b);
    let mut history = vec![initial];
    let mut best = (initial, w.clone(), b);
    let mut converged = false;
    let mut epochs = 0;

    while epochs < params.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let row = x.row(i);
            let yi = y[i].sign();
            let g = yi * (dot(&w, row) + b * BIAS_FEATURE) - 1.0;
            let upper = costs[i];
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, upper);
                let step = (alpha[i] - old) * yi;
                if step != 0.0 {
                    for (wj, xj) in w.iter_mut().zip(row) {
                        *wj += step * xj;
                    }
                    b += step * BIAS_FEATURE;
                }
            }
        }
        let obj = primal_objective(x, y, &costs, &w, b);
        history.push(obj);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
        if pg_max - pg_min < params.tolerance {
            converged = true;
            break;
        }
    }

    let (objective, w, b) = best;
    let scores: Vec<f64> = x.iter_rows().map(|r| dot(&w, r) + b).collect();
    let platt = PlattScaling::fit(&scores, y);
    (
        LinearSvm {
            weights: w,
            bias: b,
            platt,
        },
        SvmReport {
            objective_history: history,
            objective,
            epochs,
            converged,
        },
    )
}
