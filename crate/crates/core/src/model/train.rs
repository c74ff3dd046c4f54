use serde::{Deserialize, Serialize};

use super::{encoding_for, sigmoid, LogisticModel, Standardization};
use crate::data::{compute_mad_weights, DatasetSchema, Labeled, Value};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    /// L2 penalty on the weights (not the bias).
    pub lambda: f64,
    pub learning_rate: f64,
    /// Stop once the gradient's infinity norm falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub decision_boundary: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            lambda: 1e-4,
            learning_rate: 0.1,
            tolerance: 1e-8,
            max_iterations: 10_000,
            decision_boundary: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
    pub gradient_norm: f64,
    pub final_learning_rate: f64,
    /// Loss after every accepted step, starting with the initial loss.
    pub loss_history: Vec<f64>,
    pub training_accuracy: f64,
    pub warnings: Vec<String>,
}

/// Mean negative log-likelihood plus `lambda/2 * |w|^2` over encoded rows.
/// Parameters are laid out as `[w_0, ..., w_{d-1}, bias]`.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub lambda: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl TrainingProblem {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len) + 1
    }

    fn logit(&self, params: &[f64], row: &[f64]) -> f64 {
        let d = row.len();
        row.iter()
            .zip(&params[..d])
            .fold(params[d], |acc, (x, w)| acc + x * w)
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let n = self.rows.len() as f64;
        let d = params.len() - 1;
        let nll: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .map(|(row, &t)| {
                let z = self.logit(params, row);
                softplus(z) - t * z
            })
            .sum();
        let penalty: f64 = params[..d].iter().map(|w| w * w).sum();
        nll / n + 0.5 * self.lambda * penalty
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let n = self.rows.len() as f64;
        let d = params.len() - 1;
        let mut g = vec![0.0; d + 1];
        for (row, &t) in self.rows.iter().zip(&self.targets) {
            let r = sigmoid(self.logit(params, row)) - t;
            for (gj, x) in g[..d].iter_mut().zip(row) {
                *gj += r * x;
            }
            g[d] += r;
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj /= n;
            if j < d {
                *gj += self.lambda * params[j];
            }
        }
        g
    }
}

/// Fits a logistic model by full-batch gradient descent. A step that would
/// raise the loss is rejected and the learning rate halved, so the loss
/// sequence never increases.
pub fn train(
    data: &[Labeled],
    schema: &DatasetSchema,
    settings: &TrainSettings,
) -> Result<(LogisticModel, TrainReport)> {
    if data.is_empty() {
        return Err(Error::Training("no training data".into()));
    }
    let positives = data.iter().filter(|r| r.positive).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::Training("training data contains a single class".into()));
    }
    for r in data {
        schema.check_instance(&r.instance)?;
    }

    let mut model = LogisticModel::zeros(schema);
    model.decision_boundary = settings.decision_boundary;
    model.mad_weights = compute_mad_weights(data, schema)?;
    let (encoding, _) = encoding_for(schema);
    model.encoding = encoding;
    for f in schema.features.iter().filter(|f| !f.is_categorical()) {
        let col: Vec<f64> = data
            .iter()
            .filter_map(|r| r.instance.get(&f.name).and_then(Value::as_number))
            .collect();
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        model
            .standardization
            .insert(f.name.clone(), Standardization { mean, scale });
    }

    let problem = TrainingProblem {
        rows: data.iter().map(|r| model.encode(&r.instance)).collect(),
        targets: data.iter().map(|r| if r.positive { 1.0 } else { 0.0 }).collect(),
        lambda: settings.lambda,
    };

    let mut params = vec![0.0; problem.dim()];
    let mut loss = problem.loss(&params);
    let mut grad = problem.gradient(&params);
    let mut lr = settings.learning_rate;
    let mut history = vec![loss];
    let mut iterations = 0;
    let inf_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut converged = inf_norm(&grad) <= settings.tolerance;

    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let candidate: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
        let candidate_loss = problem.loss(&candidate);
        if candidate_loss > loss {
            lr *= 0.5;
            if lr < 1e-30 {
                break;
            }
            continue;
        }
        params = candidate;
        loss = candidate_loss;
        grad = problem.gradient(&params);
        history.push(loss);
        converged = inf_norm(&grad) <= settings.tolerance;
    }

    let d = params.len() - 1;
    model.weights = params[..d].to_vec();
    model.bias = params[d];

    let correct = data
        .iter()
        .filter(|r| {
            let p = sigmoid(model.logit_unchecked(&r.instance));
            (p >= model.decision_boundary) == r.positive
        })
        .count();
    let report = TrainReport {
        iterations,
        converged,
        final_loss: loss,
        gradient_norm: inf_norm(&grad),
        final_learning_rate: lr,
        loss_history: history,
        training_accuracy: correct as f64 / data.len() as f64,
        warnings: model.mad_weights.warnings(),
    };
    if !converged {
        log::info!(
            "training stopped after {} iterations with gradient norm {:.3e}",
            iterations,
            report.gradient_norm
        );
    }
    Ok((model, report))
}
