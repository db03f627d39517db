use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::corpus::Label;

/// Precision and recall for one class; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Gold items of this class.
    pub support: usize,
}

/// Counts indexed `[gold][predicted]`; gold rows are General, Zombie and the
/// predicted columns General, Zombie, none (an abstention or unparseable
/// answer, always wrong).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[usize; 3]; 2],
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        self.counts[0][0] + self.counts[1][1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub general: ClassMetrics,
    pub zombie: ClassMetrics,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub n_test: usize,
    /// Metrics that were undefined, e.g. `"zombie.precision"`.
    pub undefined: Vec<String>,
}

fn idx(l: Label) -> usize {
    match l {
        Label::General => 0,
        Label::Zombie => 1,
        Label::Unlabeled => 2,
    }
}

/// Compare predictions with gold labels. A prediction of `Unlabeled` means
/// no answer and counts as a miss.
pub fn evaluate(preds: &[Label], gold: &[Label]) -> Result<EvalReport, ClassifierError> {
    if preds.len() != gold.len() {
        return Err(ClassifierError::Shape(format!("{} predictions for {} gold labels", preds.len(), gold.len())));
    }
    if gold.is_empty() {
        return Err(ClassifierError::Shape("nothing to evaluate".into()));
    }
    if gold.iter().any(|g| !g.is_labeled()) {
        return Err(ClassifierError::UnlabeledGold);
    }
    let mut c = Confusion::default();
    for (&p, &g) in preds.iter().zip(gold) {
        c.counts[idx(g)][idx(p)] += 1;
    }
    let mut undefined = Vec::new();
    let mut class = |k: usize, name: &str| {
        let tp = c.counts[k][k];
        let predicted = c.counts[0][k] + c.counts[1][k];
        let actual: usize = c.counts[k].iter().sum();
        let ratio = |num: usize, den: usize, metric: &str, undefined: &mut Vec<String>| {
            if den == 0 {
                undefined.push(format!("{name}.{metric}"));
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        ClassMetrics {
            precision: ratio(tp, predicted, "precision", &mut undefined),
            recall: ratio(tp, actual, "recall", &mut undefined),
            support: actual,
        }
    };
    let general = class(0, "general");
    let zombie = class(1, "zombie");
    Ok(EvalReport {
        general,
        zombie,
        accuracy: c.trace() as f64 / gold.len() as f64,
        confusion: c,
        n_test: gold.len(),
        undefined,
    })
}
