use std::collections::BTreeMap;

use super::ContrastiveError;
use crate::textenc::{l2_norm, EncoderModel};

/// Loss value plus the number of zero-norm rows whose cosines were taken as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MnrLoss {
    pub loss: f64,
    pub zero_norm_rows: usize,
}

fn check_shapes(anchors: &[Vec<f64>], positives: &[Vec<f64>]) -> Result<usize, ContrastiveError> {
    if anchors.is_empty() {
        return Err(ContrastiveError::EmptyBatch);
    }
    if anchors.len() != positives.len() {
        return Err(ContrastiveError::Shape(format!(
            "{} anchors but {} positives",
            anchors.len(),
            positives.len()
        )));
    }
    let d = anchors[0].len();
    if anchors.iter().chain(positives).any(|r| r.len() != d) {
        return Err(ContrastiveError::Shape("embedding rows differ in length".into()));
    }
    Ok(d)
}

/// Unit vector and original norm; zero rows stay zero.
fn unit(v: &[f64]) -> (Vec<f64>, f64) {
    let n = l2_norm(v);
    if n > 0.0 {
        (v.iter().map(|x| x / n).collect(), n)
    } else {
        (vec![0.0; v.len()], 0.0)
    }
}

fn logsumexp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

/// `logsumexp(row) - row[i]`, accurate even when the result is tiny: the
/// arg-max term contributes exactly 1 and the rest goes through `ln_1p`.
fn ce_term(row: &[f64], i: usize) -> f64 {
    let am = (0..row.len()).fold(0, |best, j| if row[j] > row[best] { j } else { best });
    let m = row[am];
    let rest: f64 = row.iter().enumerate().filter(|(j, _)| *j != am).map(|(_, s)| (s - m).exp()).sum();
    (m - row[i]) + rest.ln_1p()
}

/// Multiple-negatives ranking loss with `S[i][j] = scale * cos(a_i, p_j)`:
/// `mean_i( -S[i][i] + logsumexp_j S[i][j] )`.
pub fn mnr_loss(anchors: &[Vec<f64>], positives: &[Vec<f64>], scale: f64) -> Result<MnrLoss, ContrastiveError> {
    mnr_loss_grad(anchors, positives, scale).map(|(l, _, _)| l)
}

/// Loss together with its gradient with respect to every anchor and positive
/// row (before normalization).
pub fn mnr_loss_grad(
    anchors: &[Vec<f64>],
    positives: &[Vec<f64>],
    scale: f64,
) -> Result<(MnrLoss, Vec<Vec<f64>>, Vec<Vec<f64>>), ContrastiveError> {
    let d = check_shapes(anchors, positives)?;
    let b = anchors.len();
    let (ua, na): (Vec<_>, Vec<_>) = anchors.iter().map(|r| unit(r)).unzip();
    let (up, np): (Vec<_>, Vec<_>) = positives.iter().map(|r| unit(r)).unzip();
    let zero_norm_rows = na.iter().chain(&np).filter(|n| **n == 0.0).count();

    let mut loss = 0.0;
    // dL/dS, one row per anchor
    let mut g = vec![vec![0.0; b]; b];
    for i in 0..b {
        let s: Vec<f64> = (0..b)
            .map(|j| scale * ua[i].iter().zip(&up[j]).map(|(x, y)| x * y).sum::<f64>())
            .collect();
        let lse = logsumexp(&s);
        loss += ce_term(&s, i);
        for j in 0..b {
            g[i][j] = ((s[j] - lse).exp() - if i == j { 1.0 } else { 0.0 }) / b as f64;
        }
    }
    loss /= b as f64;

    // back through the dot products onto the unit vectors
    let mut gua = vec![vec![0.0; d]; b];
    let mut gup = vec![vec![0.0; d]; b];
    for i in 0..b {
        for j in 0..b {
            let c = scale * g[i][j];
            for k in 0..d {
                gua[i][k] += c * up[j][k];
                gup[j][k] += c * ua[i][k];
            }
        }
    }
    // back through x -> x / |x|: (g - x̂ (x̂·g)) / |x|
    let through_norm = |gu: &mut Vec<f64>, u: &[f64], n: f64| {
        if n == 0.0 {
            gu.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        let dot: f64 = gu.iter().zip(u).map(|(a, b)| a * b).sum();
        for (x, uk) in gu.iter_mut().zip(u) {
            *x = (*x - uk * dot) / n;
        }
    };
    for i in 0..b {
        through_norm(&mut gua[i], &ua[i], na[i]);
        through_norm(&mut gup[i], &up[i], np[i]);
    }
    Ok((MnrLoss { loss, zero_norm_rows }, gua, gup))
}

/// A batch member as token buckets (occurrences kept, so repeats weigh more).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPair {
    pub anchor: Vec<usize>,
    pub positive: Vec<usize>,
}

impl TokenizedPair {
    pub fn new(model: &EncoderModel, anchor: &str, positive: &str) -> Self {
        Self {
            anchor: model.token_buckets(anchor),
            positive: model.token_buckets(positive),
        }
    }
}

/// Sparse gradient of the batch loss with respect to the embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct MnrGradients {
    pub loss: f64,
    /// Touched bucket -> gradient of that table row.
    pub rows: BTreeMap<usize, Vec<f64>>,
}

pub fn tokenized_loss(model: &EncoderModel, batch: &[TokenizedPair], scale: f64) -> Result<f64, ContrastiveError> {
    let a: Vec<Vec<f64>> = batch.iter().map(|p| model.pool(&p.anchor)).collect();
    let p: Vec<Vec<f64>> = batch.iter().map(|p| model.pool(&p.positive)).collect();
    Ok(mnr_loss(&a, &p, scale)?.loss)
}

pub fn tokenized_gradients(
    model: &EncoderModel,
    batch: &[TokenizedPair],
    scale: f64,
) -> Result<MnrGradients, ContrastiveError> {
    let a: Vec<Vec<f64>> = batch.iter().map(|p| model.pool(&p.anchor)).collect();
    let p: Vec<Vec<f64>> = batch.iter().map(|p| model.pool(&p.positive)).collect();
    let (l, ga, gp) = mnr_loss_grad(&a, &p, scale)?;
    let d = model.embed_dim();
    let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    // mean pooling spreads each text's gradient evenly over its tokens
    let mut scatter = |buckets: &[usize], g: &[f64]| {
        if buckets.is_empty() {
            return;
        }
        let w = 1.0 / buckets.len() as f64;
        for &r in buckets {
            let row = rows.entry(r).or_insert_with(|| vec![0.0; d]);
            for (x, gk) in row.iter_mut().zip(g) {
                *x += w * gk;
            }
        }
    };
    for (i, pair) in batch.iter().enumerate() {
        scatter(&pair.anchor, &ga[i]);
        scatter(&pair.positive, &gp[i]);
    }
    Ok(MnrGradients { loss: l.loss, rows })
}

/// Batch loss for raw `(anchor, positive)` texts.
pub fn mnr_text_loss(model: &EncoderModel, batch: &[(&str, &str)], scale: f64) -> Result<f64, ContrastiveError> {
    let t: Vec<TokenizedPair> = batch.iter().map(|(a, p)| TokenizedPair::new(model, a, p)).collect();
    tokenized_loss(model, &t, scale)
}

/// Exact gradient of [`mnr_text_loss`] with respect to the table rows the
/// batch touches; every other row has zero gradient.
pub fn mnr_gradients(model: &EncoderModel, batch: &[(&str, &str)], scale: f64) -> Result<MnrGradients, ContrastiveError> {
    let t: Vec<TokenizedPair> = batch.iter().map(|(a, p)| TokenizedPair::new(model, a, p)).collect();
    tokenized_gradients(model, &t, scale)
}
