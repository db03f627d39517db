use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{tokenized_gradients, TokenizedPair};
use super::ContrastiveError;
use crate::corpus::{CleanPair, Label, ReplyPair};
use crate::textenc::{cosine, EmbeddingBackend, EncoderModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    /// Lazy Adam: moments are kept and updated only for rows a batch touches.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnrConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub scale: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for MnrConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            epochs: 8,
            // Mean pooling divides each row's gradient by the token count, so
            // plain SGD on a freshly initialized table needs a large step.
            learning_rate: 0.1,
            scale: 20.0,
            seed: 0,
            optimizer: Optimizer::Sgd,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl MnrConfig {
    /// Learning rate used for fine-tuning a large pretrained encoder; far too
    /// small for a randomly initialized hashed table.
    pub const PRETRAINED_LEARNING_RATE: f64 = 1e-5;

    pub fn validate(&self) -> Result<(), ContrastiveError> {
        let bad = |field: &str, message: &str| {
            Err(ContrastiveError::InvalidConfig {
                field: field.into(),
                message: message.into(),
            })
        };
        if self.batch_size < 2 {
            return bad("batch_size", "must be at least 2");
        }
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be a finite non-negative number");
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale", "must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) {
            return bad("adam_beta1", "must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam_beta2", "must be in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Wall-clock time; kept out of the serialized log so reruns are
    /// byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub final_margin: Option<f64>,
}

impl TrainLog {
    /// One JSON object per epoch.
    pub fn to_jsonl(&self) -> String {
        self.epochs
            .iter()
            .map(|e| serde_json::to_string(e).expect("epoch log serializes") + "\n")
            .collect()
    }
}

struct AdamState {
    step: u64,
    m: BTreeMap<usize, Vec<f64>>,
    v: BTreeMap<usize, Vec<f64>>,
}

/// Fine-tune `model` with in-batch-negative ranking loss over the clean
/// pairs (parent = anchor, reply = positive).
pub fn train_encoder(
    clean_pairs: &[CleanPair],
    model: &EncoderModel,
    cfg: &MnrConfig,
) -> Result<(EncoderModel, TrainLog), ContrastiveError> {
    cfg.validate()?;
    if clean_pairs.len() < cfg.batch_size {
        return Err(ContrastiveError::TooFewPairs {
            have: clean_pairs.len(),
            batch_size: cfg.batch_size,
        });
    }
    let mut model = model.clone();
    let d = model.embed_dim();
    let data: Vec<TokenizedPair> = clean_pairs
        .iter()
        .map(|p| TokenizedPair::new(&model, &p.parent_text, &p.reply_text))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.seed, "contrastive/shuffle"));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut adam = AdamState {
        step: 0,
        m: BTreeMap::new(),
        v: BTreeMap::new(),
    };
    let mut log = TrainLog::default();

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks_exact(cfg.batch_size) {
            let batch: Vec<TokenizedPair> = chunk.iter().map(|&i| data[i].clone()).collect();
            let g = tokenized_gradients(&model, &batch, cfg.scale)?;
            total += g.loss;
            batches += 1;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (r, grad) in &g.rows {
                        for (w, gk) in model.row_mut(*r).iter_mut().zip(grad) {
                            *w -= cfg.learning_rate * gk;
                        }
                    }
                }
                Optimizer::Adam => {
                    adam.step += 1;
                    let t = adam.step as i32;
                    let bc1 = 1.0 - cfg.adam_beta1.powi(t);
                    let bc2 = 1.0 - cfg.adam_beta2.powi(t);
                    for (r, grad) in &g.rows {
                        let m = adam.m.entry(*r).or_insert_with(|| vec![0.0; d]);
                        let v = adam.v.entry(*r).or_insert_with(|| vec![0.0; d]);
                        let row = model.row_mut(*r);
                        for k in 0..d {
                            m[k] = cfg.adam_beta1 * m[k] + (1.0 - cfg.adam_beta1) * grad[k];
                            v[k] = cfg.adam_beta2 * v[k] + (1.0 - cfg.adam_beta2) * grad[k] * grad[k];
                            let mhat = m[k] / bc1;
                            let vhat = v[k] / bc2;
                            row[k] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
                        }
                    }
                }
            }
        }
        log.epochs.push(EpochLog {
            epoch: epoch + 1,
            mean_loss: total / batches as f64,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((model, log))
}

/// Mean parent/reply cosine over General pairs minus the same over Zombie
/// pairs. Unlabeled pairs are ignored.
pub fn similarity_margin<B: EmbeddingBackend + ?Sized>(backend: &B, pairs: &[ReplyPair]) -> Result<f64, ContrastiveError> {
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for p in pairs {
        let k = match p.label {
            Label::General => 0,
            Label::Zombie => 1,
            Label::Unlabeled => continue,
        };
        sums[k] += cosine(&backend.embed(&p.parent_text), &backend.embed(&p.reply_text));
        counts[k] += 1;
    }
    for (k, label) in [(0, Label::General), (1, Label::Zombie)] {
        if counts[k] == 0 {
            return Err(ContrastiveError::MissingClass(label));
        }
    }
    Ok(sums[0] / counts[0] as f64 - sums[1] / counts[1] as f64)
}
