//! Account and reply-pair records, JSONL ingestion, heuristic pre-labeling,
//! dataset splitting and the synthetic corpus generator.

mod io;
mod prelabel;
mod split;
mod synth;
mod types;

use std::path::PathBuf;

pub use io::{
    load_accounts, load_clean_pairs, load_pairs, write_accounts, write_clean_pairs, write_jsonl,
    write_pairs,
};
pub use prelabel::{heuristic_prelabel, PrelabelFlag};
pub use split::{split_pairs, train_size, DatasetSplit};
pub use synth::{synth_generate, ClassProfile, SynthConfig, SynthCorpus};
pub use types::{
    majority_label, AccountRecord, CleanPair, Label, ReplyPair, Vote, ANNOTATORS,
    ZOMBIE_VOTE_THRESHOLD,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: pair {pair_id:?} is labeled {label} but its votes imply {implied}")]
    MajorityVote {
        line: usize,
        pair_id: String,
        label: Label,
        implied: Label,
    },
    #[error("unlabeled pairs cannot be split: {pair_ids:?}")]
    Unlabeled { pair_ids: Vec<String> },
    #[error("train fraction must be in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
}
