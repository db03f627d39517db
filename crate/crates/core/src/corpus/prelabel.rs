//! Evidence flags from account metadata. The flags are hints for annotators,
//! never a final label.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::types::AccountRecord;
use crate::textenc::is_japanese_script;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PrelabelFlag {
    NonJapaneseName,
    Verified,
    NonJapaneseProfile,
}

fn has_japanese(s: &str) -> bool {
    s.chars().any(is_japanese_script)
}

pub fn heuristic_prelabel(a: &AccountRecord) -> BTreeSet<PrelabelFlag> {
    let mut flags = BTreeSet::new();
    let name = &a.screen_name;
    if !has_japanese(name) && name.chars().any(char::is_alphabetic) {
        flags.insert(PrelabelFlag::NonJapaneseName);
    }
    if a.verified {
        flags.insert(PrelabelFlag::Verified);
    }
    if !a.profile_text.is_empty() && !has_japanese(&a.profile_text) {
        flags.insert(PrelabelFlag::NonJapaneseProfile);
    }
    flags
}
