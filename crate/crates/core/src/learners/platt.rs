//! Platt scaling: `P(y = +1 | s) = 1 / (1 + exp(A·s + B))`.
//!
//! Fitted with the regularised Newton method of Lin, Lin & Weng, using the
//! smoothed targets `(N₊ + 1)/(N₊ + 2)` and `1/(N₋ + 2)`.

use serde::{Deserialize, Serialize};

use crate::dataset::Class;

/// Upper bound on `A`; keeps the probability strictly increasing in the score.
const MAX_SLOPE: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaling {
    pub a: f64,
    pub b: f64,
}

impl PlattScaling {
    pub fn probability(&self, score: f64) -> f64 {
        let f = self.a * score + self.b;
        // evaluated in the form that cannot overflow exp()
        if f >= 0.0 {
            let e = (-f).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + f.exp())
        }
    }

    /// `ln(p / (1 − p))`, i.e. `−(A·s + B)`.
    pub fn logit(&self, score: f64) -> f64 {
        -(self.a * score + self.b)
    }

    pub fn fit(scores: &[f64], labels: &[Class]) -> Self {
        let n_pos = labels.iter().filter(|c| c.is_positive()).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        let hi = (n_pos + 1.0) / (n_pos + 2.0);
        let lo = 1.0 / (n_neg + 2.0);
        let t: Vec<f64> = labels.iter().map(|c| if c.is_positive() { hi } else { lo }).collect();

        let max_iter = 100;
        let min_step = 1e-10;
        let sigma = 1e-12;
        let eps = 1e-5;

        let mut a = 0.0;
        let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
        let objective = |a: f64, b: f64| -> f64 {
            scores
                .iter()
                .zip(&t)
                .map(|(s, ti)| {
                    let f = s * a + b;
                    if f >= 0.0 {
                        ti * f + (1.0 + (-f).exp()).ln()
                    } else {
                        (ti - 1.0) * f + (1.0 + f.exp()).ln()
                    }
                })
                .sum()
        };
        let mut fval = objective(a, b);

        for _ in 0..max_iter {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
            for (s, ti) in scores.iter().zip(&t) {
                let f = s * a + b;
                let (p, q) = if f >= 0.0 {
                    let e = (-f).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = f.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += s * s * d2;
                h22 += d2;
                h21 += s * d2;
                let d1 = ti - p;
                g1 += s * d1;
                g2 += d1;
            }
            if g1.abs() < eps && g2.abs() < eps {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;

            let mut step = 1.0;
            let mut accepted = false;
            while step >= min_step {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    accepted = true;
                    break;
                }
                step /= 2.0;
            }
            if !accepted {
                break;
            }
        }
        Self { a: a.min(MAX_SLOPE), b }
    }
}
