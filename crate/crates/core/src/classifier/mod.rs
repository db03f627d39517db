//! Coherence-based reply classification: interaction features over parent
//! and reply embeddings, an MLP head, the TF-IDF logistic-regression
//! baseline, evaluation metrics and error slices.

mod baseline;
mod errors;
mod features;
mod metrics;
mod mlp;

use std::path::PathBuf;

pub use baseline::{baseline_document, train_tfidf_logreg, BaselineConfig, TfidfLogReg};
pub use errors::{analyze_errors, is_exact_duplicate, normalize_whitespace, ErrorReport, ErrorRow, ErrorSlice};
pub use features::{build_features, pair_features, FeatureVector};
pub use metrics::{evaluate, ClassMetrics, Confusion, EvalReport};
pub use mlp::{mlp_train, softmax2, MlpConfig, MlpGrad, MlpModel, MlpOptimizer, MlpTrainLog, MLP_FORMAT_VERSION};

use crate::corpus::{Label, ReplyPair};
use crate::logreg::LogRegError;
use crate::textenc::{EmbeddingBackend, TextError};

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("gold labels must be general or zombie")]
    UnlabeledGold,
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("bad model file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Solver(#[from] LogRegError),
}

/// Zombie iff `p_zombie > 0.5`; an exact tie goes to General.
pub fn label_from_probability(p_zombie: f64) -> Label {
    if p_zombie > 0.5 {
        Label::Zombie
    } else {
        Label::General
    }
}

/// Classify one parent/reply pair, returning the label and `p_zombie`.
pub fn predict<B: EmbeddingBackend + ?Sized>(m: &MlpModel, backend: &B, parent: &str, reply: &str) -> (Label, f64) {
    let f = pair_features(backend, parent, reply);
    let p = m
        .forward(f.as_slice())
        .expect("classifier input width matches the encoder dimension")[1];
    (label_from_probability(p), p)
}

/// Encode labeled pairs and train the MLP head on their interaction features.
pub fn train_classifier<B: EmbeddingBackend + ?Sized>(
    pairs: &[&ReplyPair],
    backend: &B,
    cfg: &MlpConfig,
) -> Result<(MlpModel, MlpTrainLog), ClassifierError> {
    let labeled: Vec<&&ReplyPair> = pairs.iter().filter(|p| p.label.is_labeled()).collect();
    let xs: Vec<Vec<f64>> = labeled
        .iter()
        .map(|p| pair_features(backend, &p.parent_text, &p.reply_text).into_inner())
        .collect();
    let ys: Vec<bool> = labeled.iter().map(|p| p.label == Label::Zombie).collect();
    if xs.is_empty() {
        return Err(ClassifierError::SingleClass);
    }
    mlp_train(&xs, &ys, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_goes_to_general() {
        assert_eq!(label_from_probability(0.5), Label::General);
        assert_eq!(label_from_probability(0.5 + 1e-12), Label::Zombie);
        // a zero network is exactly uniform, so predict breaks the tie
        let enc = crate::textenc::EncoderModel::new_random(
            crate::textenc::EncoderConfig { hash_dim: 16, embed_dim: 4, ..Default::default() },
            1,
        )
        .unwrap();
        let m = MlpModel::zeros(16, 3);
        assert_eq!(predict(&m, &enc, "a", "b"), (Label::General, 0.5));
        assert_eq!(predict(&m, &enc, "a", "b"), predict(&m, &enc, "a", "b"));
    }
}
