use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::{Label, ReplyPair};
use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train_fraction: f64,
    pub stratified: bool,
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

impl DatasetSplit {
    /// Partition `pairs` into (train, test) in their original order.
    pub fn apply<'a>(&self, pairs: &'a [ReplyPair]) -> (Vec<&'a ReplyPair>, Vec<&'a ReplyPair>) {
        let train = pairs.iter().filter(|p| self.train_ids.contains(&p.pair_id)).collect();
        let test = pairs.iter().filter(|p| self.test_ids.contains(&p.pair_id)).collect();
        (train, test)
    }
}

/// Train-set size: `train_fraction * n` rounded half to even.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    (train_fraction * n as f64).round_ties_even() as usize
}

fn shuffled_prefix(mut ids: Vec<String>, fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<String>) {
    // sort first so the split depends on the id set, not the file order
    ids.sort_unstable();
    ids.shuffle(rng);
    let k = train_size(ids.len(), fraction);
    let test = ids.split_off(k);
    (ids, test)
}

/// Seeded shuffle of pair ids followed by a prefix cut. With `stratified`,
/// each class is cut separately (so the overall train size is the sum of the
/// per-class rounded sizes).
pub fn split_pairs(
    pairs: &[ReplyPair],
    train_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<DatasetSplit, CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(train_fraction));
    }
    let unlabeled: Vec<String> = pairs
        .iter()
        .filter(|p| !p.label.is_labeled())
        .map(|p| p.pair_id.clone())
        .collect();
    if !unlabeled.is_empty() {
        return Err(CorpusError::Unlabeled { pair_ids: unlabeled });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_ids = BTreeSet::new();
    let mut test_ids = BTreeSet::new();
    let groups: Vec<Vec<String>> = if stratified {
        [Label::General, Label::Zombie]
            .iter()
            .map(|l| {
                pairs
                    .iter()
                    .filter(|p| p.label == *l)
                    .map(|p| p.pair_id.clone())
                    .collect()
            })
            .collect()
    } else {
        vec![pairs.iter().map(|p| p.pair_id.clone()).collect()]
    };
    for ids in groups {
        let (train, test) = shuffled_prefix(ids, train_fraction, &mut rng);
        train_ids.extend(train);
        test_ids.extend(test);
    }
    Ok(DatasetSplit {
        seed,
        train_fraction,
        stratified,
        train_ids,
        test_ids,
    })
}
