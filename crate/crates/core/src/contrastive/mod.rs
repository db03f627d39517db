//! Contrastive fine-tuning of the hashed encoder with a multiple-negatives
//! ranking loss: each parent is pulled towards its own reply and pushed away
//! from the other replies in the batch.

mod loss;
mod train;

pub use loss::{
    mnr_gradients, mnr_loss, mnr_loss_grad, mnr_text_loss, tokenized_gradients, tokenized_loss, MnrGradients,
    MnrLoss, TokenizedPair,
};
pub use train::{similarity_margin, train_encoder, EpochLog, MnrConfig, Optimizer, TrainLog};

use crate::corpus::Label;

#[derive(Debug, thiserror::Error)]
pub enum ContrastiveError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{have} training pairs is fewer than one batch of {batch_size}")]
    TooFewPairs { have: usize, batch_size: usize },
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("no {0} pairs to evaluate")]
    MissingClass(Label),
}
