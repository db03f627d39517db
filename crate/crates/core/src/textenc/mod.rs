//! Tokenization, TF-IDF vectors and the trainable hashed sentence encoder.

mod encoder;
mod tfidf;
mod tokenize;

pub use encoder::{
    cosine, l2_norm, token_hash, try_cosine, EmbeddingBackend, EncoderConfig, EncoderModel,
};
pub use tfidf::{SparseVec, TfidfModel, TfidfVectorizer};
pub use tokenize::{bigrams, is_japanese_script, tokenize, TokenizerConfig, TokenizerMode};

/// Version stamped into every serialized text model.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("vectorizer used before fit")]
    NotFitted,
    #[error("cannot fit on an empty corpus")]
    EmptyCorpus,
    #[error("model format version {found} does not match supported version {expected}")]
    FormatVersion { found: u32, expected: u32 },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
