use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::corpus::{Label, ReplyPair};
use crate::textenc::{tokenize, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub pair_id: String,
    pub gold: Label,
    pub predicted: Label,
    pub reply_tokens: usize,
    pub exact_duplicate: bool,
    pub parent_text: String,
    pub reply_text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSlice {
    pub count: usize,
    /// `None` for an empty slice.
    pub median_reply_tokens: Option<f64>,
    /// Replies equal to their parent after whitespace normalization.
    pub exact_duplicates: usize,
    pub rows: Vec<ErrorRow>,
}

/// Misclassifications split by direction, Zombie being the positive class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub false_positives: ErrorSlice,
    pub false_negatives: ErrorSlice,
}

/// Collapse whitespace runs and trim.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn is_exact_duplicate(p: &ReplyPair) -> bool {
    normalize_whitespace(&p.parent_text) == normalize_whitespace(&p.reply_text)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn slice(rows: Vec<ErrorRow>) -> ErrorSlice {
    ErrorSlice {
        count: rows.len(),
        median_reply_tokens: median(rows.iter().map(|r| r.reply_tokens as f64).collect()),
        exact_duplicates: rows.iter().filter(|r| r.exact_duplicate).count(),
        rows,
    }
}

/// Predictions that are not Zombie count as General (an abstention on a
/// zombie reply is a false negative).
pub fn analyze_errors(preds: &[Label], gold: &[Label], pairs: &[&ReplyPair]) -> Result<ErrorReport, ClassifierError> {
    if preds.len() != gold.len() || preds.len() != pairs.len() {
        return Err(ClassifierError::Shape(format!(
            "{} predictions, {} gold labels, {} pairs",
            preds.len(),
            gold.len(),
            pairs.len()
        )));
    }
    let cfg = TokenizerConfig::default();
    let (mut fp, mut fn_) = (Vec::new(), Vec::new());
    for ((&p, &g), pair) in preds.iter().zip(gold).zip(pairs) {
        let predicted_zombie = p == Label::Zombie;
        let gold_zombie = match g {
            Label::Zombie => true,
            Label::General => false,
            Label::Unlabeled => return Err(ClassifierError::UnlabeledGold),
        };
        if predicted_zombie == gold_zombie {
            continue;
        }
        let row = ErrorRow {
            pair_id: pair.pair_id.clone(),
            gold: g,
            predicted: p,
            reply_tokens: tokenize(&pair.reply_text, &cfg).len(),
            exact_duplicate: is_exact_duplicate(pair),
            parent_text: pair.parent_text.clone(),
            reply_text: pair.reply_text.clone(),
        };
        if gold_zombie {
            fn_.push(row);
        } else {
            fp.push(row);
        }
    }
    Ok(ErrorReport {
        false_positives: slice(fp),
        false_negatives: slice(fn_),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn pair(id: &str, parent: &str, reply: &str, label: Label) -> ReplyPair {
        ReplyPair {
            pair_id: id.into(),
            parent_text: parent.into(),
            reply_text: reply.into(),
            parent_author_id: "a".into(),
            reply_author_id: "b".into(),
            reply_created_at: Utc.with_ymd_and_hms(2024, 7, 12, 0, 0, 0).unwrap(),
            label,
            annotator_votes: vec![],
        }
    }

    #[test]
    fn no_errors_no_slices() {
        let p = [pair("1", "a", "b", Label::General)];
        let refs: Vec<&ReplyPair> = p.iter().collect();
        let r = analyze_errors(&[Label::General], &[Label::General], &refs).unwrap();
        assert_eq!(r, ErrorReport::default());
    }

    #[test]
    fn duplicate_false_negative_is_tallied() {
        let p = [
            pair("1", "今日は 晴れ", "今日は  晴れ ", Label::Zombie),
            pair("2", "x", "short reply", Label::General),
            pair("3", "x", "y", Label::Zombie),
        ];
        let refs: Vec<&ReplyPair> = p.iter().collect();
        let r = analyze_errors(
            &[Label::General, Label::Zombie, Label::Zombie],
            &[Label::Zombie, Label::General, Label::Zombie],
            &refs,
        )
        .unwrap();
        assert_eq!(r.false_negatives.count, 1);
        assert_eq!(r.false_negatives.exact_duplicates, 1);
        assert_eq!(r.false_positives.count, 1);
        assert_eq!(r.false_positives.median_reply_tokens, Some(2.0));
        assert_eq!(r.false_positives.exact_duplicates, 0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }
}
