//! Run configuration: built-in defaults, then an optional TOML/JSON file,
//! then `--set section.key=value` overrides, then `--seed`. Stage seeds are
//! always derived from the root seed.

use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use impzombie::analytics::ReportConfig;
use impzombie::classifier::{BaselineConfig, MlpConfig};
use impzombie::contrastive::MnrConfig;
use impzombie::corpus::SynthConfig;
use impzombie::derive_seed;
use impzombie::llmjudge::{JudgeConfig, PromptMode, TransportConfig};
use impzombie::textenc::EncoderConfig;

use crate::usage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    /// Cut each class separately.
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, stratified: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum JudgeBackend {
    /// Chat-completions endpoint from `judge.transport`.
    Http,
    /// Offline: Zombie iff the reply shares no token with its parent.
    MockOverlap,
    /// Offline: answers the gold label (sanity check of the plumbing).
    MockGold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeSection {
    pub backend: JudgeBackend,
    pub mode: PromptMode,
    pub max_in_flight: usize,
    pub strict_retry: bool,
    pub transport: TransportConfig,
}

impl Default for JudgeSection {
    fn default() -> Self {
        let j = JudgeConfig::default();
        Self {
            backend: JudgeBackend::Http,
            mode: j.mode,
            max_in_flight: j.max_in_flight,
            strict_retry: j.strict_retry,
            transport: j.transport,
        }
    }
}

impl JudgeSection {
    pub fn judge_config(&self) -> JudgeConfig {
        JudgeConfig {
            mode: self.mode,
            transport: self.transport.clone(),
            max_in_flight: self.max_in_flight,
            strict_retry: self.strict_retry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stage seed is `derive_seed(seed, stage)`.
    pub seed: u64,
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub split_seed: u64,
    pub analytics: ReportConfig,
    pub encoder: EncoderConfig,
    pub encoder_init_seed: u64,
    pub contrastive: MnrConfig,
    pub classifier: MlpConfig,
    pub baseline: BaselineConfig,
    pub judge: JudgeSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut c = Self {
            seed: 0,
            synth: SynthConfig::default(),
            split: SplitConfig::default(),
            split_seed: 0,
            analytics: ReportConfig::default(),
            encoder: EncoderConfig::default(),
            encoder_init_seed: 0,
            contrastive: MnrConfig::default(),
            classifier: MlpConfig::default(),
            baseline: BaselineConfig::default(),
            judge: JudgeSection::default(),
        };
        c.derive_seeds();
        c
    }
}

impl RunConfig {
    fn derive_seeds(&mut self) {
        let root = self.seed;
        self.synth.seed = derive_seed(root, "synth");
        self.split_seed = derive_seed(root, "split");
        self.encoder_init_seed = derive_seed(root, "encoder/init");
        self.contrastive.seed = derive_seed(root, "contrastive");
        self.classifier.seed = derive_seed(root, "classifier");
    }

    fn validate(&self) -> Result<()> {
        self.synth.validate().map_err(|e| usage(format!("synth: {e}")))?;
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(usage(format!("invalid config field `split.train_fraction`: {f} is not in (0, 1)")));
        }
        if self.analytics.n_bins == 0 {
            return Err(usage("invalid config field `analytics.n_bins`: must be at least 1"));
        }
        self.encoder.validate().map_err(|e| usage(format!("encoder: {e}")))?;
        self.contrastive.validate().map_err(|e| usage(format!("contrastive: {e}")))?;
        self.classifier.validate().map_err(|e| usage(format!("classifier: {e}")))?;
        self.judge.judge_config().validate().map_err(|e| usage(format!("judge: {e}")))?;
        Ok(())
    }

    /// Defaults, file, `--set` overrides and `--seed`, in increasing
    /// priority. Stage seeds are then derived from the root seed, replacing
    /// any value given for them.
    pub fn resolve(file: Option<&Path>, sets: &[String], seed: Option<u64>) -> Result<Self> {
        let mut v = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = file {
            merge(&mut v, read_file(path)?);
        }
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
            set_path(&mut v, key, serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string())))?;
        }
        if let Some(seed) = seed {
            v["seed"] = Value::from(seed);
        }
        let mut cfg: RunConfig = serde_json::from_value(v).map_err(|e| usage(format!("config: {e}")))?;
        cfg.derive_seeds();
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    } else {
        let t: toml::Value = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Ok(serde_json::to_value(t)?)
    }
}

/// Deep merge of objects; anything else in `over` replaces `base`.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| usage(format!("--set {key}: `{}` is not a section", parts[..i].join("."))))?;
        if !obj.contains_key(*part) {
            return Err(usage(format!("--set {key}: unknown config field `{part}`")));
        }
        cur = obj.get_mut(*part).expect("checked");
    }
    *cur = value;
    Ok(())
}
