//! One function per subcommand. Every stage reads named files from the run
//! directory (or explicit paths) and writes its outputs back into it.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use impzombie::analytics::summary_report;
use impzombie::classifier::{
    analyze_errors, evaluate, predict, train_classifier, train_tfidf_logreg, EvalReport, MlpModel, TfidfLogReg,
};
use impzombie::contrastive::{similarity_margin, train_encoder};
use impzombie::corpus::{
    load_accounts, load_clean_pairs, load_pairs, split_pairs, synth_generate, write_accounts, write_clean_pairs,
    write_pairs, DatasetSplit, Label, ReplyPair,
};
use impzombie::llmjudge::{judge_pairs, HttpTransport, JudgeReport, MockTransport, Transport};
use impzombie::textenc::{EmbeddingBackend, EncoderModel};

use crate::config::{JudgeBackend, RunConfig};
use crate::{usage, Ctx};

pub const ACCOUNTS: &str = "accounts.jsonl";
pub const PAIRS: &str = "pairs.jsonl";
pub const CLEAN_PAIRS: &str = "clean_pairs.jsonl";
pub const SPLIT: &str = "split.json";
pub const ENCODER: &str = "encoder.bin";
pub const ENCODER_BASE: &str = "encoder_base.bin";
pub const MLP: &str = "mlp.json";
pub const MLP_BASE: &str = "mlp_base.json";
pub const TFIDF: &str = "tfidf_logreg.json";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const JUDGE_REPORT: &str = "judge_report.json";
pub const ANALYTICS_REPORT: &str = "report.json";
pub const MARKDOWN_REPORT: &str = "report.md";

/// Model names used as eval_report rows, in table order.
pub const MODEL_PROPOSED: &str = "proposed";
pub const MODEL_PROPOSED_BASE: &str = "proposed_without_fine_tuning";
pub const MODEL_TFIDF: &str = "tfidf_logreg";

/// `explicit` if given, else `name` inside the run directory; must exist.
pub fn input(ctx: &Ctx, explicit: Option<&Path>, name: &str) -> Result<PathBuf> {
    let p = explicit.map_or_else(|| ctx.out.join(name), Path::to_path_buf);
    if !p.is_file() {
        return Err(usage(format!("missing input file: {}", p.display())));
    }
    Ok(p)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = std::io::BufWriter::new(f);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn synth(ctx: &Ctx, cfg: &RunConfig) -> Result<()> {
    let corpus = synth_generate(&cfg.synth)?;
    write_accounts(&ctx.out.join(ACCOUNTS), &corpus.accounts)?;
    write_pairs(&ctx.out.join(PAIRS), &corpus.pairs)?;
    write_clean_pairs(&ctx.out.join(CLEAN_PAIRS), &corpus.clean_pairs)?;
    ctx.info(format!(
        "synth: {} accounts, {} pairs, {} clean pairs",
        corpus.accounts.len(),
        corpus.pairs.len(),
        corpus.clean_pairs.len()
    ));
    Ok(())
}

pub fn analyze(ctx: &Ctx, cfg: &RunConfig, accounts: Option<&Path>, pairs: Option<&Path>) -> Result<()> {
    let accounts = load_accounts(&input(ctx, accounts, ACCOUNTS)?)?;
    let pairs = load_pairs(&input(ctx, pairs, PAIRS)?)?;
    let report = summary_report(&accounts, &pairs, &cfg.analytics)?;
    let written = report.write_to(&ctx.out)?;
    for w in &report.warnings {
        ctx.info(format!("analyze: warning: {w}"));
    }
    ctx.info(format!("analyze: wrote {} files", written.len()));
    Ok(())
}

pub fn split(ctx: &Ctx, cfg: &RunConfig, pairs: Option<&Path>) -> Result<()> {
    let pairs = load_pairs(&input(ctx, pairs, PAIRS)?)?;
    let s = split_pairs(&pairs, cfg.split.train_fraction, cfg.split_seed, cfg.split.stratified)?;
    write_json(&ctx.out.join(SPLIT), &s)?;
    ctx.info(format!("split: {} train, {} test", s.train_ids.len(), s.test_ids.len()));
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MarginReport {
    base: f64,
    fine_tuned: f64,
    gain: f64,
}

pub fn train_encoder_stage(ctx: &Ctx, cfg: &RunConfig, clean: Option<&Path>, pairs: Option<&Path>) -> Result<()> {
    let clean = load_clean_pairs(&input(ctx, clean, CLEAN_PAIRS)?)?;
    let base = EncoderModel::new_random(cfg.encoder.clone(), cfg.encoder_init_seed)?;
    let (tuned, mut log) = train_encoder(&clean, &base, &cfg.contrastive)?;
    // margins need labeled pairs; skip quietly when there are none
    let pairs_path = pairs.map_or_else(|| ctx.out.join(PAIRS), Path::to_path_buf);
    if pairs_path.is_file() {
        let pairs = load_pairs(&pairs_path)?;
        if let (Ok(b), Ok(t)) = (similarity_margin(&base, &pairs), similarity_margin(&tuned, &pairs)) {
            log.final_margin = Some(t);
            write_json(&ctx.out.join("encoder_margin.json"), &MarginReport { base: b, fine_tuned: t, gain: t - b })?;
            ctx.info(format!("train-encoder: similarity margin {b:.4} -> {t:.4}"));
        }
    }
    base.save(&ctx.out.join(ENCODER_BASE))?;
    tuned.save(&ctx.out.join(ENCODER))?;
    std::fs::write(ctx.out.join("encoder_train_log.jsonl"), log.to_jsonl())?;
    let secs: f64 = log.epochs.iter().map(|e| e.seconds).sum();
    ctx.info(format!("train-encoder: {} epochs in {secs:.1}s", log.epochs.len()));
    Ok(())
}

fn load_split(ctx: &Ctx, pairs: Option<&Path>, split: Option<&Path>) -> Result<(Vec<ReplyPair>, DatasetSplit)> {
    let pairs = load_pairs(&input(ctx, pairs, PAIRS)?)?;
    let split: DatasetSplit = read_json(&input(ctx, split, SPLIT)?)?;
    Ok((pairs, split))
}

fn load_encoder(ctx: &Ctx, name: &str) -> Result<EncoderModel> {
    Ok(EncoderModel::load(&input(ctx, None, name)?)?)
}

#[derive(Debug, Serialize)]
struct ClassifierTrainLog<'a> {
    model: &'a str,
    epoch_losses: &'a [f64],
    train_accuracy: f64,
}

pub fn train_classifier_stage(ctx: &Ctx, cfg: &RunConfig, pairs: Option<&Path>, split: Option<&Path>) -> Result<()> {
    let (pairs, split) = load_split(ctx, pairs, split)?;
    let (train, _) = split.apply(&pairs);
    let mut logs = Vec::new();
    for (enc_name, out_name, model) in [(ENCODER, MLP, MODEL_PROPOSED), (ENCODER_BASE, MLP_BASE, MODEL_PROPOSED_BASE)] {
        let enc = load_encoder(ctx, enc_name)?;
        let (m, log) = train_classifier(&train, &enc, &cfg.classifier)?;
        m.save(&ctx.out.join(out_name))?;
        ctx.info(format!("train-classifier: {model}: train accuracy {:.4}", log.train_accuracy));
        logs.push(serde_json::to_value(ClassifierTrainLog {
            model,
            epoch_losses: &log.epoch_losses,
            train_accuracy: log.train_accuracy,
        })?);
    }
    let b = train_tfidf_logreg(&train, &cfg.baseline)?;
    b.save(&ctx.out.join(TFIDF))?;
    ctx.info(format!(
        "train-classifier: tfidf baseline {} features, {} iterations",
        b.tfidf.n_features(),
        b.logreg.iterations
    ));
    write_json(&ctx.out.join("classifier_train_log.json"), &logs)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prediction {
    pub pair_id: String,
    pub p_zombie: f64,
    pub label: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalTable {
    pub n_test: usize,
    pub rows: Vec<EvalRow>,
}

fn mlp_predictions<B: EmbeddingBackend>(m: &MlpModel, enc: &B, test: &[&ReplyPair]) -> Vec<Prediction> {
    test.iter()
        .map(|p| {
            let (label, p_zombie) = predict(m, enc, &p.parent_text, &p.reply_text);
            Prediction { pair_id: p.pair_id.clone(), p_zombie, label }
        })
        .collect()
}

fn tfidf_predictions(b: &TfidfLogReg, test: &[&ReplyPair]) -> Vec<Prediction> {
    test.iter()
        .map(|p| {
            let (label, p_zombie) = b.predict(&p.parent_text, &p.reply_text);
            Prediction { pair_id: p.pair_id.clone(), p_zombie, label }
        })
        .collect()
}

pub fn evaluate_stage(ctx: &Ctx, pairs: Option<&Path>, split: Option<&Path>) -> Result<()> {
    let (pairs, split) = load_split(ctx, pairs, split)?;
    let (_, test) = split.apply(&pairs);
    if test.is_empty() {
        return Err(usage("the split has an empty test set"));
    }
    let gold: Vec<Label> = test.iter().map(|p| p.label).collect();

    let mlp = MlpModel::load(&input(ctx, None, MLP)?)?;
    let mlp_base = MlpModel::load(&input(ctx, None, MLP_BASE)?)?;
    let tfidf = TfidfLogReg::load(&input(ctx, None, TFIDF)?)?;
    let enc = load_encoder(ctx, ENCODER)?;
    let enc_base = load_encoder(ctx, ENCODER_BASE)?;

    let runs = [
        (MODEL_PROPOSED, "predictions.jsonl", mlp_predictions(&mlp, &enc, &test)),
        (MODEL_PROPOSED_BASE, "predictions_without_fine_tuning.jsonl", mlp_predictions(&mlp_base, &enc_base, &test)),
        (MODEL_TFIDF, "predictions_tfidf_logreg.jsonl", tfidf_predictions(&tfidf, &test)),
    ];
    let mut rows = Vec::new();
    for (model, file, preds) in &runs {
        write_jsonl(&ctx.out.join(file), preds)?;
        let labels: Vec<Label> = preds.iter().map(|p| p.label).collect();
        let report = evaluate(&labels, &gold)?;
        ctx.info(format!("evaluate: {model}: accuracy {:.4}", report.accuracy));
        rows.push(EvalRow { model: model.to_string(), report });
    }
    write_json(&ctx.out.join(EVAL_REPORT), &EvalTable { n_test: test.len(), rows })?;

    let labels: Vec<Label> = runs[0].2.iter().map(|p| p.label).collect();
    let errors = analyze_errors(&labels, &gold, &test)?;
    write_json(&ctx.out.join("error_slices.json"), &errors)?;
    Ok(())
}

pub fn judge(ctx: &Ctx, cfg: &RunConfig, pairs: Option<&Path>, split: Option<&Path>) -> Result<()> {
    let (pairs, split) = load_split(ctx, pairs, split)?;
    let (train, test) = split.apply(&pairs);
    let jc = cfg.judge.judge_config();
    let transport: Box<dyn Transport> = match cfg.judge.backend {
        JudgeBackend::Http => Box::new(HttpTransport::from_config(&jc.transport).map_err(|e| usage(e.to_string()))?),
        JudgeBackend::MockOverlap => Box::new(MockTransport::overlap()),
        JudgeBackend::MockGold => Box::new(MockTransport::gold(&test)),
    };
    let run = judge_pairs(&test, &train, transport.as_ref(), &jc).map_err(|e| match e {
        impzombie::llmjudge::JudgeError::InsufficientExemplars { .. } => usage(e.to_string()),
        other => other.into(),
    })?;
    run.write_audit(&ctx.out.join("audit.jsonl"))?;
    write_json(&ctx.out.join(JUDGE_REPORT), &run.report)?;
    // the judge gives no probability, and a failed or unparseable answer is "unlabeled"
    let preds: Vec<serde_json::Value> = run
        .outcomes
        .iter()
        .map(|o| serde_json::json!({"pair_id": o.pair_id, "label": o.predicted()}))
        .collect();
    write_jsonl(&ctx.out.join("judge_predictions.jsonl"), &preds)?;
    ctx.info(format!(
        "judge: accuracy {:.4} ({} unparseable, {} failed)",
        run.report.eval.accuracy, run.report.n_unparseable, run.report.n_failed
    ));
    Ok(())
}

pub fn report(ctx: &Ctx) -> Result<()> {
    let analytics = ctx.out.join(ANALYTICS_REPORT);
    let eval = ctx.out.join(EVAL_REPORT);
    let judge = ctx.out.join(JUDGE_REPORT);
    if !analytics.is_file() && !eval.is_file() {
        return Err(usage(format!(
            "missing input file: need {} or {}",
            analytics.display(),
            eval.display()
        )));
    }
    let a: Option<impzombie::analytics::SummaryReport> = analytics.is_file().then(|| read_json(&analytics)).transpose()?;
    let e: Option<EvalTable> = eval.is_file().then(|| read_json(&eval)).transpose()?;
    let j: Option<JudgeReport> = judge.is_file().then(|| read_json(&judge)).transpose()?;
    let md = crate::markdown::render(a.as_ref(), e.as_ref(), j.as_ref());
    std::fs::write(ctx.out.join(MARKDOWN_REPORT), md)?;
    ctx.info(format!("report: wrote {}", ctx.out.join(MARKDOWN_REPORT).display()));
    Ok(())
}
