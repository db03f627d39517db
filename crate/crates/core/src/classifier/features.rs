use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::textenc::EmbeddingBackend;

/// `concat(u, v, u - v, u * v)` for parent embedding `u` and reply
/// embedding `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Embedding dimension `d` (the vector has `4d` entries).
    pub fn embed_dim(&self) -> usize {
        self.0.len() / 4
    }

    /// The four `d`-long blocks in order `u, v, u - v, u * v`.
    pub fn blocks(&self) -> [&[f64]; 4] {
        let d = self.embed_dim();
        [&self.0[..d], &self.0[d..2 * d], &self.0[2 * d..3 * d], &self.0[3 * d..]]
    }
}

pub fn build_features(u: &[f64], v: &[f64]) -> Result<FeatureVector, ClassifierError> {
    if u.len() != v.len() {
        return Err(ClassifierError::Shape(format!("embedding lengths {} and {}", u.len(), v.len())));
    }
    let d = u.len();
    let mut f = Vec::with_capacity(4 * d);
    f.extend_from_slice(u);
    f.extend_from_slice(v);
    f.extend(u.iter().zip(v).map(|(a, b)| a - b));
    f.extend(u.iter().zip(v).map(|(a, b)| a * b));
    let fv = FeatureVector(f);
    debug_assert!({
        let [a, b, diff, prod] = fv.blocks();
        (0..d).all(|i| diff[i] == a[i] - b[i] && prod[i] == a[i] * b[i])
    });
    Ok(fv)
}

pub fn pair_features<B: EmbeddingBackend + ?Sized>(backend: &B, parent: &str, reply: &str) -> FeatureVector {
    build_features(&backend.embed(parent), &backend.embed(reply)).expect("backend returns fixed-length vectors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_example() {
        let f = build_features(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(f.as_slice(), &[1.0, 0.0, 0.0, 1.0, 1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn identical_inputs() {
        let u = [0.5, -2.0, 3.0];
        let f = build_features(&u, &u).unwrap();
        let [_, _, diff, prod] = f.blocks();
        assert!(diff.iter().all(|&x| x == 0.0));
        assert_eq!(prod, &[0.25, 4.0, 9.0]);
    }

    #[test]
    fn mismatch() {
        assert!(build_features(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn block_identities(uv in (1usize..=64).prop_flat_map(|d| (
            prop::collection::vec(-10.0f64..10.0, d),
            prop::collection::vec(-10.0f64..10.0, d),
        ))) {
            let (u, v) = uv;
            let f = build_features(&u, &v).unwrap();
            prop_assert_eq!(f.as_slice().len(), 4 * u.len());
            let [a, b, diff, prod] = f.blocks();
            for i in 0..u.len() {
                // exact up to the rounding of one subtraction and one addition
                let tol = 2.0 * f64::EPSILON * a[i].abs().max(b[i].abs());
                prop_assert!((diff[i] + b[i] - a[i]).abs() <= tol);
                prop_assert_eq!(prod[i], a[i] * b[i]);
            }
        }
    }
}
