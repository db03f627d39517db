use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::corpus::{ReplyPair, Vote};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    /// `None` when chance agreement is 1 and kappa is undefined.
    pub kappa: Option<f64>,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
}

/// Fleiss' kappa over an `N x k` matrix of per-item category counts.
pub fn fleiss_kappa(votes: &[Vec<u32>], raters_per_item: u32) -> Result<KappaResult, AnalyticsError> {
    let n = raters_per_item as f64;
    if raters_per_item < 2 {
        return Err(AnalyticsError::InvalidArgument("at least two raters per item are required".into()));
    }
    if votes.is_empty() {
        return Err(AnalyticsError::TooFewObservations { needed: 1, got: 0 });
    }
    let k = votes[0].len();
    if k < 2 {
        return Err(AnalyticsError::InvalidArgument("at least two categories are required".into()));
    }
    for (i, row) in votes.iter().enumerate() {
        if row.len() != k || row.iter().sum::<u32>() != raters_per_item {
            return Err(AnalyticsError::InvalidArgument(format!(
                "row {i} must have {k} entries summing to {raters_per_item}"
            )));
        }
    }
    let items = votes.len() as f64;
    let p_bar = votes
        .iter()
        .map(|row| {
            let s: f64 = row.iter().map(|&c| c as f64 * (c as f64 - 1.0)).sum();
            s / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..k)
        .map(|j| {
            let pj = votes.iter().map(|r| r[j] as f64).sum::<f64>() / (items * n);
            pj * pj
        })
        .sum();
    let kappa = if (1.0 - p_e).abs() < 1e-15 {
        None
    } else {
        Some((p_bar - p_e) / (1.0 - p_e))
    };
    Ok(KappaResult {
        kappa,
        observed_agreement: p_bar,
        expected_agreement: p_e,
    })
}

/// `[general, zombie]` vote counts for every pair carrying votes.
pub fn votes_matrix(pairs: &[ReplyPair]) -> Vec<Vec<u32>> {
    pairs
        .iter()
        .filter(|p| !p.annotator_votes.is_empty())
        .map(|p| {
            let z = p.annotator_votes.iter().filter(|v| **v == Vote::Zombie).count() as u32;
            vec![p.annotator_votes.len() as u32 - z, z]
        })
        .collect()
}
