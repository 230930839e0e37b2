//! Stacking meta-learner: binary logistic regression with an L2 (Ridge)
//! penalty on the weights, fitted to base-model probabilities.
//!
//! The objective is
//!
//! ```text
//! J(w, b) = -(1/N) Σ [ yᵢ log σ(w·xᵢ + b) + (1 - yᵢ) log(1 - σ(w·xᵢ + b)) ] + λ ‖w‖²
//! ```
//!
//! with the intercept `b` left unpenalized. It is minimized with damped
//! Newton steps and a backtracking line search, which reaches a gradient
//! ∞-norm of 1e-8 in a handful of iterations for the few-column matrices an
//! ensemble produces. Features are used as given (probabilities in `[0, 1]`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::predictions::PredictionMatrix;

pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.001, 0.01, 0.1, 1.0, 10.0];
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub lambda: f64,
    /// Stop once the gradient ∞-norm falls to this value.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            lambda: 0.1,
            tolerance: 1e-8,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub model_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Fingerprint of the training matrix.
    pub trained_on: String,
    pub optimizer_report: OptimizerReport,
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
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn score(weights: &[f64], intercept: f64, x: &[f64]) -> f64 {
    weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + intercept
}

/// The regularized log-loss over a fixed design matrix.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    rows: &'a [Vec<f64>],
    targets: Vec<f64>,
    lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(rows: &'a [Vec<f64>], labels: &[Label], lambda: f64) -> Self {
        Objective {
            rows,
            targets: labels.iter().map(|l| f64::from(l.as_u8())).collect(),
            lambda,
        }
    }

    pub fn for_matrix(matrix: &'a PredictionMatrix, lambda: f64) -> Self {
        Objective::new(matrix.rows(), matrix.labels(), lambda)
    }

    fn n(&self) -> f64 {
        self.rows.len() as f64
    }

    pub fn value(&self, weights: &[f64], intercept: f64) -> f64 {
        let loss: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .map(|(x, &y)| {
                let z = score(weights, intercept, x);
                softplus(z) - y * z
            })
            .sum();
        loss / self.n() + self.lambda * weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// `(∂J/∂w, ∂J/∂b)`.
    pub fn gradient(&self, weights: &[f64], intercept: f64) -> (Vec<f64>, f64) {
        let mut grad_w = vec![0.0; weights.len()];
        let mut grad_b = 0.0;
        for (x, &y) in self.rows.iter().zip(&self.targets) {
            let residual = sigmoid(score(weights, intercept, x)) - y;
            for (g, xj) in grad_w.iter_mut().zip(x) {
                *g += residual * xj;
            }
            grad_b += residual;
        }
        let n = self.n();
        for (g, w) in grad_w.iter_mut().zip(weights) {
            *g = *g / n + 2.0 * self.lambda * w;
        }
        (grad_w, grad_b / n)
    }

    /// Hessian over `(w, b)`, intercept in the last row/column.
    fn hessian(&self, weights: &[f64], intercept: f64) -> DMatrix<f64> {
        let m = weights.len();
        let mut h = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut xt = DVector::<f64>::zeros(m + 1);
        for x in self.rows {
            let p = sigmoid(score(weights, intercept, x));
            let s = p * (1.0 - p);
            xt.rows_mut(0, m).copy_from_slice(x);
            xt[m] = 1.0;
            h.ger(s, &xt, &xt, 1.0);
        }
        h /= self.n();
        for j in 0..m {
            h[(j, j)] += 2.0 * self.lambda;
        }
        h
    }
}

fn inf_norm(grad_w: &[f64], grad_b: f64) -> f64 {
    grad_w.iter().fold(grad_b.abs(), |acc, g| acc.max(g.abs()))
}

/// Solves `H d = -g`, adding diagonal damping when `H` is not numerically
/// positive definite (e.g. unpenalized duplicate columns).
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if let Some(chol) = h.clone().cholesky() {
        return -chol.solve(g);
    }
    let scale = h.diagonal().amax().max(1e-12);
    let mut damping = scale * 1e-10;
    loop {
        let damped = h + DMatrix::<f64>::identity(h.nrows(), h.ncols()) * damping;
        if let Some(chol) = damped.cholesky() {
            return -chol.solve(g);
        }
        damping *= 10.0;
        if damping > scale * 1e6 {
            // Fall back to steepest descent.
            return -g.clone() / scale;
        }
    }
}

pub fn train(matrix: &PredictionMatrix, options: TrainOptions) -> Result<MetaModel> {
    if !options.lambda.is_finite() || options.lambda < 0.0 {
        return Err(Error::InvalidLambda(options.lambda));
    }
    let labels = matrix.labels();
    let positives = labels.iter().filter(|l| l.is_sarcastic()).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }

    let objective = Objective::for_matrix(matrix, options.lambda);
    let m = matrix.n_models();
    let mut weights = vec![0.0; m];
    let mut intercept = 0.0;
    let mut value = objective.value(&weights, intercept);
    let mut iterations = 0;

    loop {
        let (grad_w, grad_b) = objective.gradient(&weights, intercept);
        let gradient_norm = inf_norm(&grad_w, grad_b);
        if gradient_norm <= options.tolerance {
            return Ok(MetaModel {
                model_ids: matrix.model_ids().to_vec(),
                weights,
                intercept,
                lambda: options.lambda,
                trained_on: matrix.fingerprint(),
                optimizer_report: OptimizerReport {
                    iterations,
                    gradient_norm,
                    objective: value,
                },
            });
        }
        if iterations >= options.max_iters {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm,
            });
        }
        iterations += 1;

        let mut g = DVector::<f64>::zeros(m + 1);
        g.rows_mut(0, m).copy_from_slice(&grad_w);
        g[m] = grad_b;
        let direction = newton_direction(&objective.hessian(&weights, intercept), &g);
        let slope = g.dot(&direction);

        // Armijo backtracking; the slack term lets steps through once the
        // decrease is below the objective's rounding error.
        let slack = 8.0 * f64::EPSILON * value.abs().max(1.0);
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let trial_w: Vec<f64> = weights
                .iter()
                .zip(direction.iter())
                .map(|(w, d)| w + step * d)
                .collect();
            let trial_b = intercept + step * direction[m];
            let trial_value = objective.value(&trial_w, trial_b);
            if trial_value <= value + 1e-4 * step * slope + slack {
                accepted = Some((trial_w, trial_b, trial_value));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((w, b, v)) => {
                weights = w;
                intercept = b;
                value = v;
            }
            None => {
                return Err(Error::NotConverged {
                    iterations,
                    gradient_norm,
                })
            }
        }
    }
}

fn check_columns(model: &MetaModel, matrix: &PredictionMatrix) -> Result<()> {
    if model.model_ids != matrix.model_ids() {
        return Err(Error::ColumnMismatch {
            expected: model.model_ids.clone(),
            found: matrix.model_ids().to_vec(),
        });
    }
    Ok(())
}

/// `σ(w·xᵢ + b)` for every row.
pub fn predict(model: &MetaModel, matrix: &PredictionMatrix) -> Result<Vec<f64>> {
    check_columns(model, matrix)?;
    Ok(matrix
        .rows()
        .iter()
        .map(|x| sigmoid(score(&model.weights, model.intercept, x)))
        .collect())
}

/// Hard labels at probability threshold 0.5 (strictly greater is sarcastic).
pub fn predict_labels(model: &MetaModel, matrix: &PredictionMatrix) -> Result<Vec<Label>> {
    Ok(predict(model, matrix)?
        .into_iter()
        .map(|p| if p > 0.5 { Label::Sarcastic } else { Label::NotSarcastic })
        .collect())
}

/// The `k` models with the largest `|weight|`, descending; equal magnitudes
/// are ordered by model id.
pub fn select_top_k(model: &MetaModel, k: usize) -> Result<Vec<String>> {
    let m = model.weights.len();
    if k == 0 || k > m {
        return Err(Error::InvalidK { k, m });
    }
    let mut ranked: Vec<(&String, f64)> = model
        .model_ids
        .iter()
        .zip(model.weights.iter().map(|w| w.abs()))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked.into_iter().take(k).map(|(id, _)| id.clone()).collect())
}

fn accuracy(predicted: &[Label], gold: &[Label]) -> f64 {
    let correct = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    correct as f64 / gold.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub lambda: f64,
    pub model: MetaModel,
    /// `(lambda, validation accuracy)` for every grid point, in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Trains one model per grid value and keeps the one with the best
/// validation accuracy; ties go to the larger λ.
pub fn tune_lambda(
    train_matrix: &PredictionMatrix,
    val_matrix: &PredictionMatrix,
    grid: &[f64],
    options: TrainOptions,
) -> Result<LambdaSearch> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(bad) = grid.iter().find(|l| !l.is_finite() || **l < 0.0) {
        return Err(Error::InvalidLambda(*bad));
    }
    if val_matrix.n_examples() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let mut best: Option<(f64, MetaModel)> = None;
    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let model = train(train_matrix, TrainOptions { lambda, ..options })?;
        let acc = accuracy(&predict_labels(&model, val_matrix)?, val_matrix.labels());
        scores.push((lambda, acc));
        let better = match &best {
            None => true,
            Some((best_acc, best_model)) => acc > *best_acc || (acc == *best_acc && lambda > best_model.lambda),
        };
        if better {
            best = Some((acc, model));
        }
    }
    let (_, model) = best.expect("grid is non-empty");
    Ok(LambdaSearch {
        lambda: model.lambda,
        model,
        scores,
    })
}
