use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::corpus::Label;
use crate::logreg::{fit_logreg_weighted, LogRegConfig};
use crate::textenc::{bigrams, tokenize, SparseVec, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioRow {
    pub bigram: String,
    pub coefficient: f64,
    pub odds_ratio: f64,
    /// Number of profiles containing the bigram.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioTable {
    /// Sorted by descending odds ratio, ties by bigram.
    pub rows: Vec<OddsRatioRow>,
    pub regularization_strength: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Distinct lowercase word bigrams of a profile.
pub fn profile_bigrams(text: &str) -> BTreeSet<String> {
    bigrams(&tokenize(text, &TokenizerConfig::default())).into_iter().collect()
}

/// One multivariate logistic regression (Zombie = 1) over binary bigram
/// presence features, reported as per-bigram odds ratios.
pub fn bigram_odds_ratios(
    profiles: &[(String, Label)],
    min_support: usize,
    l2_strength: f64,
) -> Result<OddsRatioTable, AnalyticsError> {
    bigram_odds_ratios_with(profiles, min_support, &LogRegConfig { l2: l2_strength, ..Default::default() })
}

pub fn bigram_odds_ratios_with(
    profiles: &[(String, Label)],
    min_support: usize,
    solver: &LogRegConfig,
) -> Result<OddsRatioTable, AnalyticsError> {
    if min_support == 0 {
        return Err(AnalyticsError::InvalidArgument("min_support must be at least 1".into()));
    }
    if !(solver.l2 >= 0.0) {
        return Err(AnalyticsError::InvalidArgument("l2 strength must be non-negative".into()));
    }
    let labeled: Vec<(BTreeSet<String>, bool)> = profiles
        .iter()
        .filter(|(_, l)| l.is_labeled())
        .map(|(t, l)| (profile_bigrams(t), *l == Label::Zombie))
        .collect();
    for (want, name) in [(true, Label::Zombie), (false, Label::General)] {
        if !labeled.iter().any(|(_, y)| *y == want) {
            return Err(AnalyticsError::MissingClass(name));
        }
    }

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (grams, _) in &labeled {
        for g in grams {
            *df.entry(g.as_str()).or_default() += 1;
        }
    }
    let vocab: Vec<&str> = df.iter().filter(|(_, &c)| c >= min_support).map(|(g, _)| *g).collect();
    let empty = |converged| OddsRatioTable {
        rows: Vec::new(),
        regularization_strength: solver.l2,
        converged,
        iterations: 0,
    };
    if vocab.is_empty() {
        return Ok(empty(true));
    }
    let index: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, g)| (*g, i)).collect();

    // Collapse identical (feature set, label) patterns into weighted rows so
    // duplicated inputs produce exactly the same fit.
    let mut patterns: BTreeMap<(Vec<usize>, bool), f64> = BTreeMap::new();
    for (grams, y) in &labeled {
        let feats: Vec<usize> = grams.iter().filter_map(|g| index.get(g.as_str()).copied()).collect();
        *patterns.entry((feats, *y)).or_default() += 1.0;
    }
    let mut rows: Vec<SparseVec> = Vec::with_capacity(patterns.len());
    let mut ys = Vec::with_capacity(patterns.len());
    let mut ws = Vec::with_capacity(patterns.len());
    for ((feats, y), w) in patterns {
        rows.push(feats.into_iter().map(|j| (j, 1.0)).collect());
        ys.push(y);
        ws.push(w);
    }
    let model = fit_logreg_weighted(&rows, &ys, &ws, vocab.len(), solver)?;

    let mut out: Vec<OddsRatioRow> = vocab
        .iter()
        .zip(&model.weights)
        .map(|(g, &c)| OddsRatioRow {
            bigram: g.to_string(),
            coefficient: c,
            odds_ratio: c.exp(),
            support: df[g],
        })
        .collect();
    out.sort_by(|a, b| b.odds_ratio.total_cmp(&a.odds_ratio).then_with(|| a.bigram.cmp(&b.bigram)));
    Ok(OddsRatioTable {
        rows: out,
        regularization_strength: solver.l2,
        converged: model.converged,
        iterations: model.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<(String, Label)> {
        let mut v = Vec::new();
        for i in 0..20 {
            let lead = ["crypto", "promo", "nft"][i % 3];
            v.push((format!("{lead} follow back"), Label::Zombie));
            v.push(("good morning".to_string(), if i % 2 == 0 { Label::Zombie } else { Label::General }));
            v.push((format!("good morning friends {}", i % 4), Label::General));
            v.push(("cat lover".to_string(), Label::General));
        }
        v
    }

    fn get<'a>(t: &'a OddsRatioTable, g: &str) -> &'a OddsRatioRow {
        t.rows.iter().find(|r| r.bigram == g).unwrap()
    }

    #[test]
    fn zombie_only_bigram_tops_table() {
        let t = bigram_odds_ratios(&corpus(), 2, 1e-4).unwrap();
        assert!(t.converged);
        assert_eq!(t.rows[0].bigram, "follow back");
        assert!(t.rows[0].odds_ratio > 1.0);
        for r in &t.rows {
            assert!(((r.odds_ratio - r.coefficient.exp()) / r.odds_ratio).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_feature_matches_contingency() {
        // a=(x,Z) b=(x,G) c=(!x,Z) d=(!x,G)
        let (a, b, c, d) = (14usize, 6usize, 5usize, 25usize);
        let mut p = Vec::new();
        for (n, x, l) in [(a, true, Label::Zombie), (b, true, Label::General), (c, false, Label::Zombie), (d, false, Label::General)] {
            for _ in 0..n {
                p.push((if x { "follow back" } else { "hello" }.to_string(), l));
            }
        }
        let cfg = LogRegConfig { l2: 0.0, tol: 1e-10, ..Default::default() };
        let t = bigram_odds_ratios_with(&p, 1, &cfg).unwrap();
        let or = (a * d) as f64 / (b * c) as f64;
        let got = get(&t, "follow back").odds_ratio;
        assert!(((got - or) / or).abs() < 1e-3, "{got} vs {or}");
    }

    #[test]
    fn balanced_bigram_near_one() {
        let mut p = Vec::new();
        for i in 0..40 {
            let l = if i % 2 == 0 { Label::Zombie } else { Label::General };
            p.push((if i % 4 < 2 { "blue sky" } else { "red sun" }.to_string(), l));
        }
        let t = bigram_odds_ratios(&p, 1, 1e-4).unwrap();
        assert!((get(&t, "blue sky").odds_ratio - 1.0).abs() <= 0.05);
    }

    #[test]
    fn duplication_invariance() {
        let c = corpus();
        let mut doubled = c.clone();
        doubled.extend(c.iter().cloned());
        let t1 = bigram_odds_ratios(&c, 2, 1e-4).unwrap();
        let t2 = bigram_odds_ratios(&doubled, 2, 1e-4).unwrap();
        // support doubles; min_support 2 vs 4 would differ, so compare with
        // equal effective thresholds
        let t2b = bigram_odds_ratios(&doubled, 4, 1e-4).unwrap();
        for r in &t1.rows {
            let s = t2b.rows.iter().find(|x| x.bigram == r.bigram).unwrap();
            assert!(((s.odds_ratio - r.odds_ratio) / r.odds_ratio).abs() <= 1e-9);
            assert_eq!(s.support, 2 * r.support);
        }
        assert!(!t2.rows.is_empty());
    }

    #[test]
    fn errors_and_empty_table() {
        let only_z = vec![("a b".to_string(), Label::Zombie)];
        assert!(matches!(bigram_odds_ratios(&only_z, 1, 1e-4), Err(AnalyticsError::MissingClass(_))));
        let p = vec![("a b".to_string(), Label::Zombie), ("c d".to_string(), Label::General)];
        assert!(bigram_odds_ratios(&p, 5, 1e-4).unwrap().rows.is_empty());
        assert!(bigram_odds_ratios(&p, 0, 1e-4).is_err());
    }
}
