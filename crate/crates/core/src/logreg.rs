//! Binary logistic regression over sparse rows, shared by the profile
//! bigram analysis and the TF-IDF baseline.
//!
//! Minimizes `mean(logloss) + l2/2 * |w|^2` (intercept unpenalized) by
//! full-batch gradient descent with Armijo backtracking, stopping once the
//! gradient norm reaches `tol` or after `max_iter` iterations. Because the
//! loss is a mean, duplicating the data leaves the optimum unchanged.

use serde::{Deserialize, Serialize};

use crate::textenc::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub l2: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Nesterov momentum with gradient-based restarts. Off by default.
    pub accelerated: bool,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            tol: 1e-6,
            max_iter: 100_000,
            accelerated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LogRegError {
    #[error("no training rows")]
    Empty,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature index {index} out of range for {n_features} features")]
    FeatureIndex { index: usize, n_features: usize },
    #[error("invalid solver setting: {0}")]
    Config(String),
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(row: &SparseVec, w: &[f64]) -> f64 {
    row.iter().map(|&(j, x)| w[j] * x).sum()
}

struct Problem<'a> {
    rows: &'a [SparseVec],
    targets: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
    n_features: usize,
    l2: f64,
}

impl Problem<'_> {
    /// Parameters are `[intercept, w_0, .., w_{p-1}]`.
    fn objective(&self, theta: &[f64]) -> f64 {
        let (b, w) = (theta[0], &theta[1..]);
        let loss: f64 = self
            .rows
            .iter()
            .zip(self.targets.iter().zip(&self.weights))
            .map(|(r, (&y, &c))| {
                let z = b + dot(r, w);
                c * (softplus(z) - y * z)
            })
            .sum();
        loss / self.total_weight + 0.5 * self.l2 * w.iter().map(|x| x * x).sum::<f64>()
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) {
        let (b, w) = (theta[0], &theta[1..]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (r, (&y, &c)) in self.rows.iter().zip(self.targets.iter().zip(&self.weights)) {
            let resid = c * (sigmoid(b + dot(r, w)) - y);
            grad[0] += resid;
            for &(j, x) in r {
                grad[1 + j] += resid * x;
            }
        }
        let inv_n = 1.0 / self.total_weight;
        grad[0] *= inv_n;
        for j in 0..self.n_features {
            grad[1 + j] = grad[1 + j] * inv_n + self.l2 * w[j];
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn fit_logreg(
    rows: &[SparseVec],
    labels: &[bool],
    n_features: usize,
    cfg: &LogRegConfig,
) -> Result<LogRegModel, LogRegError> {
    fit_logreg_weighted(rows, labels, &vec![1.0; rows.len()], n_features, cfg)
}

/// As [`fit_logreg`], with a non-negative multiplicity per row. The loss is
/// the weighted mean, so scaling every weight by a power of two reproduces
/// the unweighted-duplicate fit bit for bit.
pub fn fit_logreg_weighted(
    rows: &[SparseVec],
    labels: &[bool],
    weights: &[f64],
    n_features: usize,
    cfg: &LogRegConfig,
) -> Result<LogRegModel, LogRegError> {
    if rows.is_empty() {
        return Err(LogRegError::Empty);
    }
    if rows.len() != labels.len() || rows.len() != weights.len() {
        return Err(LogRegError::LengthMismatch { rows: rows.len(), labels: labels.len().min(weights.len()) });
    }
    let total_weight: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || !(total_weight > 0.0) {
        return Err(LogRegError::Config("row weights must be non-negative with a positive sum".into()));
    }
    if !(cfg.l2 >= 0.0 && cfg.l2.is_finite()) || !(cfg.tol > 0.0) {
        return Err(LogRegError::Config(format!("l2 = {}, tol = {}", cfg.l2, cfg.tol)));
    }
    for r in rows {
        if let Some(&(index, _)) = r.iter().find(|(j, _)| *j >= n_features) {
            return Err(LogRegError::FeatureIndex { index, n_features });
        }
    }
    let problem = Problem {
        rows,
        targets: labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect(),
        weights: weights.to_vec(),
        total_weight,
        n_features,
        l2: cfg.l2,
    };

    let dim = n_features + 1;
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    // momentum state
    let mut prev = theta.clone();
    let mut momentum_k = 0usize;
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let mut grad_norm;

    loop {
        // evaluation point: theta itself, or the Nesterov look-ahead
        let point: Vec<f64> = if cfg.accelerated && momentum_k > 0 {
            let beta = (momentum_k as f64 - 1.0) / (momentum_k as f64 + 2.0);
            theta.iter().zip(&prev).map(|(t, p)| t + beta * (t - p)).collect()
        } else {
            theta.clone()
        };
        problem.gradient(&point, &mut grad);
        grad_norm = norm(&grad);
        if cfg.accelerated && momentum_k > 0 {
            // convergence is judged at the iterate, not the look-ahead
            let mut g_at_theta = vec![0.0; dim];
            problem.gradient(&theta, &mut g_at_theta);
            let gn = norm(&g_at_theta);
            if gn <= cfg.tol {
                grad_norm = gn;
                break;
            }
        } else if grad_norm <= cfg.tol {
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }

        let f0 = problem.objective(&point);
        let g2 = grad_norm * grad_norm;
        step = (step * 2.0).min(1e6);
        let mut trial_grad = vec![0.0; dim];
        loop {
            for i in 0..dim {
                trial[i] = point[i] - step * grad[i];
            }
            let f1 = problem.objective(&trial);
            if f1 <= f0 - 1e-4 * step * g2 || step < 1e-20 {
                break;
            }
            // Near the optimum the decrease drops below the objective's
            // rounding error. The objective is convex, so a trial point that
            // is still descending along -grad has not overshot the line
            // minimum and is accepted.
            if f1 - f0 <= 16.0 * f64::EPSILON * f0.abs().max(1.0) {
                problem.gradient(&trial, &mut trial_grad);
                if trial_grad.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() >= 0.0 {
                    break;
                }
            }
            step *= 0.5;
        }

        if cfg.accelerated && momentum_k > 0 && problem.objective(&trial) > problem.objective(&theta) {
            // the extrapolated step went uphill: drop momentum, retry from theta
            prev.copy_from_slice(&theta);
            momentum_k = 0;
            iterations += 1;
            continue;
        }
        if cfg.accelerated {
            // restart when the step opposes the momentum direction
            let restart = momentum_k > 0
                && grad
                    .iter()
                    .zip(trial.iter().zip(&theta))
                    .map(|(g, (t, th))| g * (t - th))
                    .sum::<f64>()
                    > 0.0;
            prev.copy_from_slice(&theta);
            momentum_k = if restart { 0 } else { momentum_k + 1 };
        }
        theta.copy_from_slice(&trial);
        iterations += 1;
    }

    Ok(LogRegModel {
        intercept: theta[0],
        weights: theta[1..].to_vec(),
        iterations,
        converged: grad_norm <= cfg.tol,
        grad_norm,
    })
}

impl LogRegModel {
    pub fn decision(&self, row: &SparseVec) -> f64 {
        self.intercept + dot(row, &self.weights)
    }

    pub fn predict_proba(&self, row: &SparseVec) -> f64 {
        sigmoid(self.decision(row))
    }
}
