//! One-hidden-layer perceptron with a two-way softmax output.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;

pub const MLP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlpOptimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: MlpOptimizer,
}

/// Adam by default: plain SGD at lr 1e-3 badly underfits within 30 epochs on
/// interaction features of unit-norm embeddings.
impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            optimizer: MlpOptimizer::Adam,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |field: &str, message: &str| {
            Err(ClassifierError::InvalidConfig {
                field: field.into(),
                message: message.into(),
            })
        };
        if self.hidden == 0 {
            return bad("hidden", "must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be a finite non-negative number");
        }
        Ok(())
    }
}

/// Weights are row-major: `w1` is `hidden x input`, `w2` is `2 x hidden`.
/// Output index 0 is General, 1 is Zombie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub format_version: u32,
    pub input: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub seed: u64,
}

/// Gradient with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpGrad {
    fn zeros(m: &MlpModel) -> Self {
        Self {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: vec![0.0; 2],
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }
}

/// Max-shifted two-way softmax.
pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

impl MlpModel {
    /// He-style uniform initialization, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`,
    /// with zero biases.
    pub fn new(input: usize, hidden: usize, seed: u64) -> Result<Self, ClassifierError> {
        if input == 0 || hidden == 0 {
            return Err(ClassifierError::Shape("layer sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l1 = (6.0 / input as f64).sqrt();
        let l2 = (6.0 / hidden as f64).sqrt();
        let w1 = (0..hidden * input).map(|_| rng.random_range(-l1..l1)).collect();
        let w2 = (0..2 * hidden).map(|_| rng.random_range(-l2..l2)).collect();
        Ok(Self {
            format_version: MLP_FORMAT_VERSION,
            input,
            hidden,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; 2],
            seed,
        })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            format_version: MLP_FORMAT_VERSION,
            input,
            hidden,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; 2 * hidden],
            b2: vec![0.0; 2],
            seed: 0,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ClassifierError> {
        if x.len() != self.input {
            return Err(ClassifierError::Shape(format!(
                "feature length {} but the network expects {}",
                x.len(),
                self.input
            )));
        }
        Ok(())
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.input..(j + 1) * self.input];
                self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn output_logits(&self, h: &[f64]) -> [f64; 2] {
        let mut z = [self.b2[0], self.b2[1]];
        for (k, zk) in z.iter_mut().enumerate() {
            *zk += self.w2[k * self.hidden..(k + 1) * self.hidden]
                .iter()
                .zip(h)
                .map(|(w, v)| w * v)
                .sum::<f64>();
        }
        z
    }

    pub fn logits(&self, x: &[f64]) -> Result<[f64; 2], ClassifierError> {
        self.check_input(x)?;
        let h: Vec<f64> = self.hidden_pre(x).into_iter().map(|a| a.max(0.0)).collect();
        Ok(self.output_logits(&h))
    }

    /// `(p_general, p_zombie)`.
    pub fn forward(&self, x: &[f64]) -> Result<[f64; 2], ClassifierError> {
        Ok(softmax2(self.logits(x)?))
    }

    /// Mean cross-entropy over the rows and its gradient.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[bool]) -> Result<(f64, MlpGrad), ClassifierError> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(ClassifierError::Shape(format!("{} rows, {} labels", xs.len(), ys.len())));
        }
        let mut g = MlpGrad::zeros(self);
        let mut loss = 0.0;
        let inv_b = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            self.check_input(x)?;
            let pre = self.hidden_pre(x);
            let h: Vec<f64> = pre.iter().map(|a| a.max(0.0)).collect();
            let z = self.output_logits(&h);
            let t = usize::from(y);
            // log-softmax with max shift
            let m = z[0].max(z[1]);
            let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
            loss += lse - z[t];
            let p = softmax2(z);
            let dz = [
                (p[0] - if t == 0 { 1.0 } else { 0.0 }) * inv_b,
                (p[1] - if t == 1 { 1.0 } else { 0.0 }) * inv_b,
            ];
            for k in 0..2 {
                g.b2[k] += dz[k];
                for j in 0..self.hidden {
                    g.w2[k * self.hidden + j] += dz[k] * h[j];
                }
            }
            for j in 0..self.hidden {
                if pre[j] <= 0.0 {
                    continue;
                }
                let dh = dz[0] * self.w2[j] + dz[1] * self.w2[self.hidden + j];
                g.b1[j] += dh;
                let row = &mut g.w1[j * self.input..(j + 1) * self.input];
                for (gw, xv) in row.iter_mut().zip(x.iter()) {
                    *gw += dh * xv;
                }
            }
        }
        Ok((loss * inv_b, g))
    }

    pub fn params_flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    /// Inverse of [`params_flat`](Self::params_flat).
    pub fn set_params_flat(&mut self, p: &[f64]) {
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let json = serde_json::to_string(self).map_err(|e| ClassifierError::Format(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| ClassifierError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClassifierError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let m: Self = serde_json::from_str(&text).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if m.format_version != MLP_FORMAT_VERSION {
            return Err(ClassifierError::Format(format!(
                "MLP format version {} (expected {MLP_FORMAT_VERSION})",
                m.format_version
            )));
        }
        if m.w1.len() != m.hidden * m.input || m.b1.len() != m.hidden || m.w2.len() != 2 * m.hidden || m.b2.len() != 2 {
            return Err(ClassifierError::Format("MLP parameter shapes are inconsistent".into()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MlpTrainLog {
    pub epoch_losses: Vec<f64>,
    pub train_accuracy: f64,
}

/// Mini-batch training of a fresh network on precomputed features.
/// Labels: `true` = Zombie.
pub fn mlp_train(xs: &[Vec<f64>], ys: &[bool], cfg: &MlpConfig) -> Result<(MlpModel, MlpTrainLog), ClassifierError> {
    cfg.validate()?;
    if xs.len() != ys.len() {
        return Err(ClassifierError::Shape(format!("{} rows, {} labels", xs.len(), ys.len())));
    }
    if !ys.iter().any(|&y| y) || !ys.iter().any(|&y| !y) {
        return Err(ClassifierError::SingleClass);
    }
    let input = xs[0].len();
    let mut model = MlpModel::new(input, cfg.hidden, crate::derive_seed(cfg.seed, "mlp/init"))?;
    model.seed = cfg.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.seed, "mlp/shuffle"));
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let n_params = model.params_flat().len();
    let (mut m1, mut m2) = (vec![0.0; n_params], vec![0.0; n_params]);
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut step = 0i32;
    let mut log = MlpTrainLog::default();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<bool> = chunk.iter().map(|&i| ys[i]).collect();
            let (loss, g) = model.loss_and_grad(&bx, &by)?;
            total += loss * chunk.len() as f64;
            let grad = g.flat();
            let mut params = model.params_flat();
            match cfg.optimizer {
                MlpOptimizer::Sgd => {
                    for (p, gk) in params.iter_mut().zip(&grad) {
                        *p -= cfg.learning_rate * gk;
                    }
                }
                MlpOptimizer::Adam => {
                    step += 1;
                    let bc1 = 1.0 - beta1.powi(step);
                    let bc2 = 1.0 - beta2.powi(step);
                    for k in 0..n_params {
                        m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
                        m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
                        params[k] -= cfg.learning_rate * (m1[k] / bc1) / ((m2[k] / bc2).sqrt() + eps);
                    }
                }
            }
            model.set_params_flat(&params);
        }
        log.epoch_losses.push(total / xs.len() as f64);
    }
    let correct = xs
        .iter()
        .zip(ys)
        .filter(|(x, &y)| model.forward(x).map(|p| (p[1] > 0.5) == y).unwrap_or(false))
        .count();
    log.train_accuracy = correct as f64 / xs.len() as f64;
    Ok((model, log))
}
