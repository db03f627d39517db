//! `impzombie`: synthesize data, characterize accounts, train and evaluate
//! the coherence classifier and its baselines, and write reports.
//!
//! Exit codes: 0 success, 2 usage/config error or missing input, 1 runtime
//! failure.

mod config;
mod markdown;
mod stages;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use config::{JudgeBackend, RunConfig};

/// Error that maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub struct Ctx {
    pub out: PathBuf,
    pub quiet: bool,
}

impl Ctx {
    pub fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Parser)]
#[command(name = "impzombie", version, about = "Impression-zombie analytics and reply coherence classification")]
struct Cli {
    /// TOML or JSON config file (`.json` extension selects JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed; overrides the config file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Run directory for inputs and outputs.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    /// Override one config value, e.g. `--set synth.n_zombie_pairs=500`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ZeroShot,
    FewShot,
}

#[derive(Subcommand)]
enum Command {
    /// Generate accounts.jsonl, pairs.jsonl and clean_pairs.jsonl.
    Synth,
    /// Account statistics, tests, distributions, heatmaps and bigram odds ratios.
    Analyze {
        #[arg(long)]
        accounts: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Seeded train/test split of the labeled pairs into split.json.
    Split {
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Fine-tune the hashed encoder on clean pairs (encoder.bin, encoder_base.bin).
    TrainEncoder {
        #[arg(long)]
        clean_pairs: Option<PathBuf>,
        /// Labeled pairs for the similarity-margin check (optional).
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Train the MLP heads on both encoders and the TF-IDF baseline.
    TrainClassifier {
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
    },
    /// Score all three models on the test split (eval_report.json).
    Evaluate {
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
    },
    /// Run the LLM judge on the test split.
    Judge {
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<JudgeBackend>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Render report.md from the reports in the run directory.
    Report,
    /// synth, analyze, split, train-encoder, train-classifier, evaluate
    /// (and judge, if a backend is given), then report.
    Pipeline {
        #[arg(long, value_enum, value_name = "BACKEND")]
        judge: Option<JudgeBackend>,
    },
}

/// Advisory lock on the run directory, removed on drop.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let path = dir.join(".impzombie.lock");
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                anyhow::anyhow!(
                    "{} is in use by another impzombie command (lock file {}; delete it if no run is active)",
                    dir.display(),
                    path.display()
                )
            } else {
                anyhow::Error::new(e).context(format!("cannot write to output directory {}", dir.display()))
            }
        })?;
        let _ = writeln!(f, "{}", std::process::id());
        Ok(Self(path))
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut sets = cli.sets.clone();
    if let Command::Judge { backend, mode, .. } = &cli.command {
        if let Some(b) = backend {
            sets.push(format!("judge.backend={}", serde_json::to_string(b)?));
        }
        if let Some(m) = mode {
            let m = match m {
                ModeArg::ZeroShot => "zero_shot",
                ModeArg::FewShot => "few_shot",
            };
            sets.push(format!("judge.mode={m}"));
        }
    }
    if let Command::Pipeline { judge: Some(b) } = &cli.command {
        sets.push(format!("judge.backend={}", serde_json::to_string(b)?));
    }
    let cfg = RunConfig::resolve(cli.config.as_deref(), &sets, cli.seed)?;

    let ctx = Ctx { out: cli.out.clone(), quiet: cli.quiet };
    let _lock = DirLock::acquire(&ctx.out)?;
    let resolved = ctx.out.join("config.resolved.json");
    std::fs::write(&resolved, serde_json::to_string_pretty(&cfg)? + "\n")
        .with_context(|| format!("writing {}", resolved.display()))?;

    match &cli.command {
        Command::Synth => stages::synth(&ctx, &cfg),
        Command::Analyze { accounts, pairs } => stages::analyze(&ctx, &cfg, accounts.as_deref(), pairs.as_deref()),
        Command::Split { pairs } => stages::split(&ctx, &cfg, pairs.as_deref()),
        Command::TrainEncoder { clean_pairs, pairs } => {
            stages::train_encoder_stage(&ctx, &cfg, clean_pairs.as_deref(), pairs.as_deref())
        }
        Command::TrainClassifier { pairs, split } => {
            stages::train_classifier_stage(&ctx, &cfg, pairs.as_deref(), split.as_deref())
        }
        Command::Evaluate { pairs, split } => stages::evaluate_stage(&ctx, pairs.as_deref(), split.as_deref()),
        Command::Judge { pairs, split, .. } => stages::judge(&ctx, &cfg, pairs.as_deref(), split.as_deref()),
        Command::Report => stages::report(&ctx),
        Command::Pipeline { judge } => {
            stages::synth(&ctx, &cfg)?;
            stages::analyze(&ctx, &cfg, None, None)?;
            stages::split(&ctx, &cfg, None)?;
            stages::train_encoder_stage(&ctx, &cfg, None, None)?;
            stages::train_classifier_stage(&ctx, &cfg, None, None)?;
            stages::evaluate_stage(&ctx, None, None)?;
            if judge.is_some() {
                stages::judge(&ctx, &cfg, None, None)?;
            }
            stages::report(&ctx)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
