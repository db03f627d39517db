//! TF-IDF vectorizer with smoothed idf and L2-normalized rows.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, TokenizerConfig};
use super::{TextError, FORMAT_VERSION};

/// Sparse row: `(column, value)` pairs sorted by column.
pub type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub format_version: u32,
    pub tokenizer: TokenizerConfig,
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_docs_fit: usize,
}

impl TfidfModel {
    /// `idf(t) = ln((1 + n) / (1 + df(t))) + 1`. Columns are assigned in
    /// lexicographic token order.
    pub fn fit<S: AsRef<str>>(docs: &[S], cfg: &TokenizerConfig) -> Result<Self, TextError> {
        if docs.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<String> = tokenize(doc.as_ref(), cfg);
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let n = docs.len() as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (token, count)) in df.into_iter().enumerate() {
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
            vocabulary.insert(token, i);
        }
        Ok(Self {
            format_version: FORMAT_VERSION,
            tokenizer: cfg.clone(),
            vocabulary,
            idf,
            n_docs_fit: docs.len(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.idf.len()
    }

    /// Out-of-vocabulary tokens are ignored; an empty result is the zero vector.
    pub fn transform(&self, doc: &str) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokenize(doc, &self.tokenizer) {
            if let Some(&col) = self.vocabulary.get(&t) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let mut row: SparseVec = counts
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col]))
            .collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        row
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        let json = serde_json::to_vec(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let bytes = std::fs::read(path)?;
        let model: Self = serde_json::from_slice(&bytes)?;
        if model.format_version != FORMAT_VERSION {
            return Err(TextError::FormatVersion {
                found: model.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(model)
    }
}

/// Stateful wrapper for callers that construct the vectorizer before the
/// corpus is available.
#[derive(Debug, Clone, Default)]
pub struct TfidfVectorizer {
    cfg: TokenizerConfig,
    model: Option<TfidfModel>,
}

impl TfidfVectorizer {
    pub fn new(cfg: TokenizerConfig) -> Self {
        Self { cfg, model: None }
    }

    pub fn fit<S: AsRef<str>>(&mut self, docs: &[S]) -> Result<&TfidfModel, TextError> {
        self.model = Some(TfidfModel::fit(docs, &self.cfg)?);
        Ok(self.model.as_ref().expect("just fitted"))
    }

    pub fn transform(&self, doc: &str) -> Result<SparseVec, TextError> {
        self.model
            .as_ref()
            .map(|m| m.transform(doc))
            .ok_or(TextError::NotFitted)
    }

    pub fn model(&self) -> Option<&TfidfModel> {
        self.model.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_doc_idf_is_one() {
        let m = TfidfModel::fit(&["a b"], &TokenizerConfig::default()).unwrap();
        assert_eq!(m.idf, vec![1.0, 1.0]);
        let v = m.transform("a b");
        let h = std::f64::consts::SQRT_2 / 2.0;
        assert_eq!(v.len(), 2);
        assert!((v[0].1 - h).abs() < 1e-15 && (v[1].1 - h).abs() < 1e-15);
    }

    #[test]
    fn idf_formula() {
        let docs = ["a b", "a c", "a"];
        let m = TfidfModel::fit(&docs, &TokenizerConfig::default()).unwrap();
        let b = m.vocabulary["b"];
        let a = m.vocabulary["a"];
        assert!((m.idf[a] - 1.0).abs() < 1e-15);
        assert!((m.idf[b] - ((4.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
        assert!(m.idf.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn oov_and_empty() {
        let m = TfidfModel::fit(&["a b"], &TokenizerConfig::default()).unwrap();
        assert_eq!(m.transform("zzz a"), vec![(0, 1.0)]);
        assert!(m.transform("").is_empty());
    }

    #[test]
    fn transform_before_fit_errors() {
        let v = TfidfVectorizer::new(TokenizerConfig::default());
        assert!(matches!(v.transform("a"), Err(TextError::NotFitted)));
    }

    #[test]
    fn empty_corpus_errors() {
        let docs: [&str; 0] = [];
        assert!(TfidfModel::fit(&docs, &TokenizerConfig::default()).is_err());
    }

    #[test]
    fn order_invariance() {
        let m = TfidfModel::fit(&["x y z", "y z w"], &TokenizerConfig::default()).unwrap();
        assert_eq!(m.transform("x y y z"), m.transform("y z x y"));
    }
}
