//! Hashed-token sentence encoder.
//!
//! Every token is hashed (seeded XXH64) into one row of a trainable
//! `hash_dim x embed_dim` table; a text embeds to the mean of its rows,
//! optionally L2-normalized. Collisions are accepted: the table size bounds
//! memory and unseen tokens still land somewhere.

use std::hash::Hasher;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use super::tokenize::{tokenize, TokenizerConfig};
use super::{TextError, FORMAT_VERSION};

const MAGIC: &[u8; 8] = b"IZENC\0\0\0";

/// Anything that can turn text into a fixed-length vector.
///
/// The classifier and contrastive evaluation only depend on this trait, so a
/// pretrained model can stand in for the hashed encoder.
pub trait EmbeddingBackend {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub hash_dim: usize,
    pub embed_dim: usize,
    pub hash_seed: u64,
    pub normalize_output: bool,
    pub tokenizer: TokenizerConfig,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hash_dim: 65_536,
            embed_dim: 64,
            hash_seed: 0x1A2B_3C4D_5E6F_7081,
            normalize_output: true,
            tokenizer: TokenizerConfig::default(),
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), TextError> {
        validate(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    hash_seed: u64,
    hash_dim: usize,
    embed_dim: usize,
    normalize_output: bool,
    tokenizer: TokenizerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    cfg: EncoderConfig,
    /// Row-major `hash_dim x embed_dim`.
    table: Vec<f64>,
}

/// Seeded XXH64 of the token's UTF-8 bytes.
pub fn token_hash(token: &str, seed: u64) -> u64 {
    let mut h = XxHash64::with_seed(seed);
    h.write(token.as_bytes());
    h.finish()
}

impl EncoderModel {
    /// Table entries drawn i.i.d. from N(0, 1/embed_dim) so rows have
    /// roughly unit norm.
    pub fn new_random(cfg: EncoderConfig, seed: u64) -> Result<Self, TextError> {
        validate(&cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (cfg.embed_dim as f64).sqrt())
            .expect("finite positive std");
        let table = (0..cfg.hash_dim * cfg.embed_dim)
            .map(|_| normal.sample(&mut rng))
            .collect();
        Ok(Self { cfg, table })
    }

    pub fn from_table(cfg: EncoderConfig, table: Vec<f64>) -> Result<Self, TextError> {
        validate(&cfg)?;
        if table.len() != cfg.hash_dim * cfg.embed_dim {
            return Err(TextError::Shape(format!(
                "table has {} entries, expected {}x{}",
                table.len(),
                cfg.hash_dim,
                cfg.embed_dim
            )));
        }
        Ok(Self { cfg, table })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn embed_dim(&self) -> usize {
        self.cfg.embed_dim
    }

    pub fn hash_dim(&self) -> usize {
        self.cfg.hash_dim
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row(&self, bucket: usize) -> &[f64] {
        let d = self.cfg.embed_dim;
        &self.table[bucket * d..(bucket + 1) * d]
    }

    pub fn row_mut(&mut self, bucket: usize) -> &mut [f64] {
        let d = self.cfg.embed_dim;
        &mut self.table[bucket * d..(bucket + 1) * d]
    }

    pub fn bucket(&self, token: &str) -> usize {
        (token_hash(token, self.cfg.hash_seed) % self.cfg.hash_dim as u64) as usize
    }

    /// Bucket of every token occurrence, in text order (duplicates kept).
    pub fn token_buckets(&self, text: &str) -> Vec<usize> {
        tokenize(text, &self.cfg.tokenizer)
            .iter()
            .map(|t| self.bucket(t))
            .collect()
    }

    /// Unnormalized mean of the given rows; zero vector for no buckets.
    pub fn pool(&self, buckets: &[usize]) -> Vec<f64> {
        let d = self.cfg.embed_dim;
        let mut out = vec![0.0; d];
        if buckets.is_empty() {
            return out;
        }
        for &b in buckets {
            for (o, x) in out.iter_mut().zip(self.row(b)) {
                *o += x;
            }
        }
        let inv = 1.0 / buckets.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        out
    }

    pub fn encode(&self, text: &str) -> Vec<f64> {
        let mut v = self.pool(&self.token_buckets(text));
        if self.cfg.normalize_output {
            let norm = l2_norm(&v);
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
        }
        v
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        let header = Header {
            format_version: FORMAT_VERSION,
            hash_seed: self.cfg.hash_seed,
            hash_dim: self.cfg.hash_dim,
            embed_dim: self.cfg.embed_dim,
            normalize_output: self.cfg.normalize_output,
            tokenizer: self.cfg.tokenizer.clone(),
        };
        let header = serde_json::to_vec(&header)?;
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for x in &self.table {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(TextError::Format("not an encoder checkpoint".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        if len > 1 << 20 {
            return Err(TextError::Format(format!("header length {len} is implausible")));
        }
        let mut header = vec![0u8; len];
        r.read_exact(&mut header)?;
        let version: serde_json::Value = serde_json::from_slice(&header)?;
        let found = version
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| TextError::Format("header lacks format_version".into()))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(TextError::FormatVersion {
                found: found as u32,
                expected: FORMAT_VERSION,
            });
        }
        let header: Header = serde_json::from_slice(&header)?;
        let cfg = EncoderConfig {
            hash_dim: header.hash_dim,
            embed_dim: header.embed_dim,
            hash_seed: header.hash_seed,
            normalize_output: header.normalize_output,
            tokenizer: header.tokenizer,
        };
        validate(&cfg)?;
        let n = cfg.hash_dim * cfg.embed_dim;
        let mut bytes = Vec::with_capacity(n * 8);
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * 8 {
            return Err(TextError::Format(format!(
                "table payload has {} bytes, expected {}",
                bytes.len(),
                n * 8
            )));
        }
        let table = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self { cfg, table })
    }
}

impl EmbeddingBackend for EncoderModel {
    fn dim(&self) -> usize {
        self.cfg.embed_dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        self.encode(text)
    }
}

fn validate(cfg: &EncoderConfig) -> Result<(), TextError> {
    if cfg.hash_dim == 0 || cfg.embed_dim == 0 {
        return Err(TextError::Shape("hash_dim and embed_dim must be positive".into()));
    }
    if cfg.tokenizer.cjk_ngram == 0 {
        return Err(TextError::Shape("cjk_ngram must be at least 1".into()));
    }
    Ok(())
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity, or `None` when either vector has zero norm.
pub fn try_cosine(u: &[f64], v: &[f64]) -> Option<f64> {
    assert_eq!(u.len(), v.len(), "cosine of vectors with different lengths");
    let nu = l2_norm(u);
    let nv = l2_norm(v);
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Some((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Cosine similarity; 0 when either vector is zero (see [`try_cosine`]).
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    try_cosine(u, v).unwrap_or(0.0)
}
