use serde::{Deserialize, Serialize};

use super::transport::ChatMessage;
use super::verdict::{ANSWER_GENERAL, ANSWER_ZOMBIE};
use super::JudgeError;
use crate::corpus::{Label, ReplyPair};

pub const EXEMPLARS_PER_CLASS: usize = 5;

/// Instruction text shared by both modes. The wording is our own.
pub const SYSTEM_INSTRUCTIONS: &str = "You review replies on a social network. \
Some accounts post high-volume, low-effort replies to popular posts only to collect \
impressions; their replies usually have no real connection to the post they answer \
(unrelated promotion, generic praise, emoji strings, or a verbatim copy of the post). \
Ordinary users reply to what the post actually says. \
You will be shown a parent post and one reply. Decide whether the reply engages with \
the parent post. Answer with exactly one word: GENERAL if it comes from an ordinary \
user, ZOMBIE if it comes from an impression-farming account.";

/// Appended as a final user turn when re-asking after an unparseable answer.
pub const STRICT_REMINDER: &str = "Your previous answer could not be read. \
Reply with exactly one word and nothing else: GENERAL or ZOMBIE.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub parent: String,
    pub reply: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgePrompt {
    pub mode: PromptMode,
    pub system_instructions: String,
    pub exemplars: Vec<Exemplar>,
    pub query_parent: String,
    pub query_reply: String,
}

/// The user turn for one pair. [`extract_query`](super::extract_query)
/// inverts this.
pub fn format_query(parent: &str, reply: &str) -> String {
    format!("<parent>\n{parent}\n</parent>\n<reply>\n{reply}\n</reply>")
}

fn first_by_id(pool: &[&ReplyPair], label: Label) -> Result<Vec<Exemplar>, JudgeError> {
    let mut of_class: Vec<&ReplyPair> = pool.iter().copied().filter(|p| p.label == label).collect();
    if of_class.len() < EXEMPLARS_PER_CLASS {
        return Err(JudgeError::InsufficientExemplars {
            label,
            have: of_class.len(),
            need: EXEMPLARS_PER_CLASS,
        });
    }
    of_class.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    Ok(of_class[..EXEMPLARS_PER_CLASS]
        .iter()
        .map(|p| Exemplar {
            parent: p.parent_text.clone(),
            reply: p.reply_text.clone(),
            label,
        })
        .collect())
}

/// The first five General and first five Zombie pairs by `pair_id`,
/// interleaved General, Zombie, General, ... so that neither class sits
/// next to the query as a block.
pub fn select_exemplars(pool: &[&ReplyPair]) -> Result<Vec<Exemplar>, JudgeError> {
    let g = first_by_id(pool, Label::General)?;
    let z = first_by_id(pool, Label::Zombie)?;
    Ok(g.into_iter().zip(z).flat_map(|(a, b)| [a, b]).collect())
}

pub fn build_prompt(mode: PromptMode, train_pairs: &[&ReplyPair], query: &ReplyPair) -> Result<JudgePrompt, JudgeError> {
    let exemplars = match mode {
        PromptMode::ZeroShot => Vec::new(),
        PromptMode::FewShot => select_exemplars(train_pairs)?,
    };
    Ok(JudgePrompt::with_exemplars(mode, exemplars, query))
}

fn answer_token(label: Label) -> &'static str {
    if label == Label::Zombie {
        ANSWER_ZOMBIE
    } else {
        ANSWER_GENERAL
    }
}

impl JudgePrompt {
    pub(crate) fn with_exemplars(mode: PromptMode, exemplars: Vec<Exemplar>, query: &ReplyPair) -> Self {
        Self {
            mode,
            system_instructions: SYSTEM_INSTRUCTIONS.to_string(),
            exemplars,
            query_parent: query.parent_text.clone(),
            query_reply: query.reply_text.clone(),
        }
    }

    /// System turn, one user/assistant exchange per exemplar, then the query.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut m = vec![ChatMessage::system(&self.system_instructions)];
        for e in &self.exemplars {
            m.push(ChatMessage::user(&format_query(&e.parent, &e.reply)));
            m.push(ChatMessage::assistant(answer_token(e.label)));
        }
        m.push(ChatMessage::user(&format_query(&self.query_parent, &self.query_reply)));
        m
    }
}
