//! TF-IDF features over the concatenated parent and reply, fed to an
//! L2-regularized logistic regression.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::corpus::{Label, ReplyPair};
use crate::logreg::{fit_logreg, LogRegConfig, LogRegModel};
use crate::textenc::{TfidfModel, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub tokenizer: TokenizerConfig,
    pub solver: LogRegConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfLogReg {
    pub tfidf: TfidfModel,
    pub logreg: LogRegModel,
}

/// Parent and reply joined by a single space.
pub fn baseline_document(parent: &str, reply: &str) -> String {
    format!("{parent} {reply}")
}

/// Fit the vocabulary and the regression on the training pairs only.
pub fn train_tfidf_logreg(train: &[&ReplyPair], cfg: &BaselineConfig) -> Result<TfidfLogReg, ClassifierError> {
    let labeled: Vec<&ReplyPair> = train.iter().copied().filter(|p| p.label.is_labeled()).collect();
    if !labeled.iter().any(|p| p.label == Label::Zombie) || !labeled.iter().any(|p| p.label == Label::General) {
        return Err(ClassifierError::SingleClass);
    }
    let docs: Vec<String> = labeled.iter().map(|p| baseline_document(&p.parent_text, &p.reply_text)).collect();
    let tfidf = TfidfModel::fit(&docs, &cfg.tokenizer)?;
    let rows: Vec<_> = docs.iter().map(|d| tfidf.transform(d)).collect();
    let ys: Vec<bool> = labeled.iter().map(|p| p.label == Label::Zombie).collect();
    let logreg = fit_logreg(&rows, &ys, tfidf.n_features(), &cfg.solver)?;
    Ok(TfidfLogReg { tfidf, logreg })
}

impl TfidfLogReg {
    pub fn p_zombie(&self, parent: &str, reply: &str) -> f64 {
        self.logreg.predict_proba(&self.tfidf.transform(&baseline_document(parent, reply)))
    }

    /// Zombie iff `p > 0.5`; an exact tie goes to General.
    pub fn predict(&self, parent: &str, reply: &str) -> (Label, f64) {
        let p = self.p_zombie(parent, reply);
        (if p > 0.5 { Label::Zombie } else { Label::General }, p)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let json = serde_json::to_string(self).map_err(|e| ClassifierError::Format(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| ClassifierError::Io { path: path.to_path_buf(), source: e })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClassifierError::Io { path: path.to_path_buf(), source: e })?;
        let m: Self = serde_json::from_str(&text).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if m.tfidf.format_version != crate::textenc::FORMAT_VERSION {
            return Err(ClassifierError::Format(format!(
                "TF-IDF format version {} (expected {})",
                m.tfidf.format_version,
                crate::textenc::FORMAT_VERSION
            )));
        }
        Ok(m)
    }
}
