use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    General,
    Zombie,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::General => "general",
            Label::Zombie => "zombie",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "general" => Some(Label::General),
            "zombie" => Some(Label::Zombie),
            "unlabeled" => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One annotator's judgement of a reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    General,
    Zombie,
}

impl From<Vote> for Label {
    fn from(v: Vote) -> Self {
        match v {
            Vote::General => Label::General,
            Vote::Zombie => Label::Zombie,
        }
    }
}

/// Number of annotators per reply when votes are present.
pub const ANNOTATORS: usize = 4;

/// A reply is Zombie when at least this many annotators say so.
pub const ZOMBIE_VOTE_THRESHOLD: usize = 2;

/// Label implied by a full set of votes.
pub fn majority_label(votes: &[Vote]) -> Label {
    let zombies = votes.iter().filter(|v| **v == Vote::Zombie).count();
    if zombies >= ZOMBIE_VOTE_THRESHOLD {
        Label::Zombie
    } else {
        Label::General
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountRecord {
    pub account_id: String,
    pub screen_name: String,
    pub profile_text: String,
    pub created_at: DateTime<Utc>,
    pub snapshot_at: DateTime<Utc>,
    pub total_posts: u64,
    pub followers_count: u64,
    pub following_count: u64,
    pub verified: bool,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyPair {
    pub pair_id: String,
    pub parent_text: String,
    pub reply_text: String,
    pub parent_author_id: String,
    pub reply_author_id: String,
    pub reply_created_at: DateTime<Utc>,
    pub label: Label,
    pub annotator_votes: Vec<Vote>,
}

/// Coherent parent/reply pair from the pre-zombie fine-tuning corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanPair {
    pub pair_id: String,
    pub parent_text: String,
    pub reply_text: String,
}
