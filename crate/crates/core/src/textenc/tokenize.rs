//! Mixed-script tokenizer for Japanese/Latin social-media text.
//!
//! Runs of Japanese or CJK characters become overlapping character n-grams,
//! runs of letters and digits become word tokens, and any remaining symbol
//! (emoji, dingbats, ...) is a token of its own. Whitespace and punctuation
//! only separate tokens.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TokenizerMode {
    #[default]
    MixedScript,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    /// Window length for CJK character n-grams. Must be at least 1.
    pub cjk_ngram: usize,
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            mode: TokenizerMode::MixedScript,
            cjk_ngram: 2,
            lowercase: true,
        }
    }
}

/// Hiragana, Katakana and the CJK Unified Ideographs block.
pub fn is_japanese_script(c: char) -> bool {
    matches!(c, '\u{3040}'..='\u{309F}' | '\u{30A0}'..='\u{30FF}' | '\u{4E00}'..='\u{9FFF}')
}

fn is_cjk(c: char) -> bool {
    is_japanese_script(c)
        || matches!(
            c,
            '\u{3400}'..='\u{4DBF}' | '\u{F900}'..='\u{FAFF}' | '\u{FF66}'..='\u{FF9F}'
        )
}

fn is_word_char(c: char) -> bool {
    // Devanagari vowel signs and Latin combining marks are not alphanumeric
    // in std, but belong to the surrounding word.
    c.is_alphanumeric() || matches!(c, '\u{0300}'..='\u{036F}' | '\u{0900}'..='\u{097F}')
}

fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || c.is_control()
        || c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{00A1}'..='\u{00BF}'
                | '\u{2000}'..='\u{206F}'
                | '\u{3000}'..='\u{303F}'
                | '\u{FE00}'..='\u{FE0F}'
                | '\u{FF01}'..='\u{FF0F}'
                | '\u{FF1A}'..='\u{FF20}'
                | '\u{FF3B}'..='\u{FF40}'
                | '\u{FF5B}'..='\u{FF65}'
        )
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Cjk,
    Word,
    Symbol,
    Separator,
}

fn classify(c: char) -> Class {
    if is_cjk(c) {
        Class::Cjk
    } else if is_word_char(c) {
        Class::Word
    } else if is_separator(c) {
        Class::Separator
    } else {
        Class::Symbol
    }
}

pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let n = cfg.cjk_ngram.max(1);
    let mut tokens = Vec::new();
    let mut run: Vec<char> = Vec::new();
    let mut run_class = Class::Separator;

    let flush = |run: &mut Vec<char>, class: Class, tokens: &mut Vec<String>| {
        match class {
            Class::Cjk => {
                if run.len() <= n {
                    tokens.push(run.iter().collect());
                } else {
                    tokens.extend(run.windows(n).map(|w| w.iter().collect::<String>()));
                }
            }
            Class::Word => {
                let word: String = run.iter().collect();
                tokens.push(if cfg.lowercase { word.to_lowercase() } else { word });
            }
            Class::Symbol | Class::Separator => {}
        }
        run.clear();
    };

    for c in text.chars() {
        let class = classify(c);
        if class != run_class && !run.is_empty() {
            flush(&mut run, run_class, &mut tokens);
        }
        match class {
            Class::Separator => {}
            Class::Symbol => tokens.push(c.to_string()),
            Class::Cjk | Class::Word => run.push(c),
        }
        run_class = class;
    }
    if !run.is_empty() {
        flush(&mut run, run_class, &mut tokens);
    }
    tokens
}

/// Adjacent token pairs joined by a single space.
pub fn bigrams(tokens: &[String]) -> Vec<String> {
    tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect()
}
