//! Toolkit for studying "impression zombie" replies on a microblogging
//! platform: corpus handling and synthesis, account characterization,
//! text encoders, contrastive fine-tuning, coherence classification and an
//! LLM-judge harness.

pub mod analytics;
pub mod classifier;
pub mod contrastive;
pub mod corpus;
pub mod llmjudge;
pub mod logreg;
pub mod textenc;

/// Derive an independent stream seed for a named pipeline stage.
pub fn derive_seed(root: u64, stage: &str) -> u64 {
    textenc::token_hash(stage, root)
}
