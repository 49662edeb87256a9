//! Minimal differentiable classifier suite: logistic regression and a
//! one-hidden-layer network, trained by seeded mini-batch gradient descent
//! on cross-entropy. Enough model surface to train defended pipelines and
//! feed white-box attacks with exact input gradients.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    LogReg,
    Mlp,
}

/// Hyperparameters captured on the trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_width: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            hidden_width: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    LogReg {
        w: Vec<f64>,
        b: f64,
    },
    Mlp {
        /// hidden_width x input_dim, row-major.
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: f64,
        hidden_width: usize,
    },
}

/// A trained binary classifier with sigmoid output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub params: ModelParams,
    pub training_config: TrainConfig,
}

/// Standard binary-classification metrics with malicious (1) as positive.
/// All 0/0 ratios are defined as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Metrics {
    pub fn from_confusion(tp: u64, fp: u64, tn: u64, fn_: u64) -> Metrics {
        let total = (tp + fp + tn + fn_) as f64;
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            accuracy: if total == 0.0 { 0.0 } else { (tp + tn) as f64 / total },
            precision,
            recall,
            f1,
            tp,
            fp,
            tn,
            fn_,
        }
    }
}

// Stable logistic, clamped to the open unit interval so scores never
// saturate to exactly 0 or 1 even when the exponential under/overflows.
fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn init_uniform(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Trains a model of the given kind. Deterministic under the config seed:
/// identical data and config reproduce identical parameters.
pub fn train(kind: ModelKind, data: &Dataset, config: &TrainConfig) -> Result<Model> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyInput("train on empty dataset".into()));
    }
    if data.y.iter().any(|&v| v > 1) {
        return Err(Error::NonBinaryLabels);
    }
    if !data.x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(
            "training features must be finite".into(),
        ));
    }
    let d = data.n_features();
    let h = config.hidden_width;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut params = match kind {
        ModelKind::LogReg => ModelParams::LogReg {
            w: init_uniform(&mut rng, d, d),
            b: 0.0,
        },
        ModelKind::Mlp => ModelParams::Mlp {
            w1: init_uniform(&mut rng, h * d, d),
            b1: vec![0.0; h],
            w2: init_uniform(&mut rng, h, h),
            b2: 0.0,
            hidden_width: h,
        },
    };

    let n = data.n_rows();
    let batch = config.batch_size.max(1).min(n);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            epoch_loss += sgd_step(&mut params, data, chunk, config.learning_rate);
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
    }

    Ok(Model {
        kind,
        input_dim: d,
        params,
        training_config: config.clone(),
    })
}

// One mini-batch gradient step; returns the batch's summed loss.
fn sgd_step(params: &mut ModelParams, data: &Dataset, rows: &[usize], lr: f64) -> f64 {
    let scale = lr / rows.len() as f64;
    let mut loss = 0.0;
    match params {
        ModelParams::LogReg { w, b } => {
            let d = w.len();
            let mut grad_w = vec![0.0; d];
            let mut grad_b = 0.0;
            for &i in rows {
                let x = data.x.row(i);
                let y = data.y[i] as f64;
                let z = dot(w, &x) + *b;
                let s = sigmoid(z);
                loss += bce(s, y);
                let delta = s - y;
                for j in 0..d {
                    grad_w[j] += delta * x[j];
                }
                grad_b += delta;
            }
            for j in 0..d {
                w[j] -= scale * grad_w[j];
            }
            *b -= scale * grad_b;
        }
        ModelParams::Mlp {
            w1,
            b1,
            w2,
            b2,
            hidden_width,
        } => {
            let h = *hidden_width;
            let d = w1.len() / h;
            let mut grad_w1 = vec![0.0; h * d];
            let mut grad_b1 = vec![0.0; h];
            let mut grad_w2 = vec![0.0; h];
            let mut grad_b2 = 0.0;
            let mut z1 = vec![0.0; h];
            let mut a1 = vec![0.0; h];
            for &i in rows {
                let x = data.x.row(i);
                let y = data.y[i] as f64;
                for k in 0..h {
                    let row = &w1[k * d..(k + 1) * d];
                    z1[k] = dot(row, &x) + b1[k];
                    a1[k] = z1[k].max(0.0);
                }
                let z2 = w2.iter().zip(&a1).map(|(a, b)| a * b).sum::<f64>() + *b2;
                let s = sigmoid(z2);
                loss += bce(s, y);
                let delta2 = s - y;
                for k in 0..h {
                    grad_w2[k] += delta2 * a1[k];
                    if z1[k] > 0.0 {
                        let delta1 = delta2 * w2[k];
                        grad_b1[k] += delta1;
                        let g_row = &mut grad_w1[k * d..(k + 1) * d];
                        for j in 0..d {
                            g_row[j] += delta1 * x[j];
                        }
                    }
                }
                grad_b2 += delta2;
            }
            for v in w1.iter_mut().zip(&grad_w1) {
                *v.0 -= scale * v.1;
            }
            for v in b1.iter_mut().zip(&grad_b1) {
                *v.0 -= scale * v.1;
            }
            for v in w2.iter_mut().zip(&grad_w2) {
                *v.0 -= scale * v.1;
            }
            *b2 -= scale * grad_b2;
        }
    }
    loss
}

fn dot(w: &[f64], x: &ArrayView1<f64>) -> f64 {
    w.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

fn bce(s: f64, y: f64) -> f64 {
    let eps = 1e-12;
    -(y * s.max(eps).ln() + (1.0 - y) * (1.0 - s).max(eps).ln())
}

/// Mean cross-entropy of the model over a dataset.
pub fn mean_loss(model: &Model, data: &Dataset) -> Result<f64> {
    let (_, scores) = predict(model, &data.x)?;
    let total: f64 = scores
        .iter()
        .zip(data.y.iter())
        .map(|(&s, &y)| bce(s, y as f64))
        .sum();
    Ok(total / data.n_rows() as f64)
}

fn raw_score(model: &Model, x: &ArrayView1<f64>) -> f64 {
    match &model.params {
        ModelParams::LogReg { w, b } => sigmoid(dot(w, x) + b),
        ModelParams::Mlp {
            w1,
            b1,
            w2,
            b2,
            hidden_width,
        } => {
            let h = *hidden_width;
            let d = model.input_dim;
            let mut z2 = *b2;
            for k in 0..h {
                let z1 = dot(&w1[k * d..(k + 1) * d], x) + b1[k];
                if z1 > 0.0 {
                    z2 += w2[k] * z1;
                }
            }
            sigmoid(z2)
        }
    }
}

/// Sigmoid scores and 0/1 labels (label 1 iff score >= 0.5).
pub fn predict(model: &Model, x: &Array2<f64>) -> Result<(Array1<u8>, Array1<f64>)> {
    if x.ncols() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            got: x.ncols(),
        });
    }
    let scores = Array1::from_iter(x.rows().into_iter().map(|row| raw_score(model, &row)));
    let labels = scores.mapv(|s| u8::from(s >= 0.5));
    Ok((labels, scores))
}

/// Gradient of the cross-entropy loss at `(x, target)` with respect to the
/// input coordinates.
pub fn input_gradient(model: &Model, x: &ArrayView1<f64>, target: u8) -> Result<Vec<f64>> {
    if x.len() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            got: x.len(),
        });
    }
    let y = target as f64;
    Ok(match &model.params {
        ModelParams::LogReg { w, b } => {
            let delta = sigmoid(dot(w, x) + b) - y;
            w.iter().map(|wj| delta * wj).collect()
        }
        ModelParams::Mlp {
            w1,
            b1,
            w2,
            b2,
            hidden_width,
        } => {
            let h = *hidden_width;
            let d = model.input_dim;
            let mut z1 = vec![0.0; h];
            let mut z2 = *b2;
            for k in 0..h {
                z1[k] = dot(&w1[k * d..(k + 1) * d], x) + b1[k];
                if z1[k] > 0.0 {
                    z2 += w2[k] * z1[k];
                }
            }
            let delta2 = sigmoid(z2) - y;
            let mut grad = vec![0.0; d];
            for k in 0..h {
                if z1[k] > 0.0 {
                    let delta1 = delta2 * w2[k];
                    let row = &w1[k * d..(k + 1) * d];
                    for j in 0..d {
                        grad[j] += delta1 * row[j];
                    }
                }
            }
            grad
        }
    })
}

/// Evaluates the model on a labelled dataset.
pub fn evaluate(model: &Model, test: &Dataset) -> Result<Metrics> {
    if test.n_rows() == 0 {
        return Err(Error::EmptyInput("evaluate on empty dataset".into()));
    }
    let (labels, _) = predict(model, &test.x)?;
    Ok(metrics_from_predictions(&labels, &test.y))
}

/// Metrics from prediction/label vectors (positive class = 1).
pub fn metrics_from_predictions(pred: &Array1<u8>, truth: &Array1<u8>) -> Metrics {
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for (&p, &t) in pred.iter().zip(truth.iter()) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            _ => fn_ += 1,
        }
    }
    Metrics::from_confusion(tp, fp, tn, fn_)
}

/// Serializes a model to JSON.
pub fn save_model(model: &Model, path: &std::path::Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(model)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a model from JSON, validating parameter dimensions.
pub fn load_model(path: &std::path::Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    let model: Model = serde_json::from_str(&text)?;
    let consistent = match &model.params {
        ModelParams::LogReg { w, .. } => w.len() == model.input_dim,
        ModelParams::Mlp {
            w1,
            b1,
            w2,
            hidden_width,
            ..
        } => {
            w1.len() == hidden_width * model.input_dim
                && b1.len() == *hidden_width
                && w2.len() == *hidden_width
        }
    };
    if !consistent {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            got: 0,
        });
    }
    Ok(model)
}
