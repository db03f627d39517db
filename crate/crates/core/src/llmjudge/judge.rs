use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::prompt::{select_exemplars, Exemplar, JudgePrompt, PromptMode, STRICT_REMINDER};
use super::transport::{ChatMessage, ChatRequest, Transport, TransportConfig, TransportError};
use super::verdict::{parse_verdict, JudgeVerdict, Verdict};
use super::JudgeError;
use crate::classifier::{evaluate, EvalReport};
use crate::corpus::{Label, ReplyPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeConfig {
    pub mode: PromptMode,
    pub transport: TransportConfig,
    /// Requests in flight at once; 1 means strictly sequential.
    pub max_in_flight: usize,
    /// Re-ask once with a stricter reminder when an answer is unparseable.
    pub strict_retry: bool,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            mode: PromptMode::ZeroShot,
            transport: TransportConfig::default(),
            max_in_flight: 1,
            strict_retry: false,
        }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.max_in_flight == 0 {
            return Err(JudgeError::InvalidConfig {
                field: "max_in_flight".into(),
                message: "must be at least 1".into(),
            });
        }
        self.transport.validate()
    }
}

/// One request/response exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub pair_id: String,
    pub prompt_sha256: String,
    /// `None` when the transport gave up.
    pub response_text: Option<String>,
    pub verdict: Option<Verdict>,
    pub latency_ms: u64,
    /// Transport attempts spent on this exchange.
    pub attempts: u32,
    /// Whether this was the stricter second ask.
    pub strict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeOutcome {
    pub pair_id: String,
    pub gold: Label,
    /// `None` when every attempt failed at the transport level.
    pub verdict: Option<JudgeVerdict>,
    pub error: Option<String>,
}

impl JudgeOutcome {
    /// What evaluation sees: failures and unparseable answers are misses.
    pub fn predicted(&self) -> Label {
        self.verdict.as_ref().map_or(Label::Unlabeled, |v| v.label.to_label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub mode: PromptMode,
    pub model_name: String,
    pub n_pairs: usize,
    pub n_unparseable: usize,
    pub n_failed: usize,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeRun {
    pub outcomes: Vec<JudgeOutcome>,
    pub audit: Vec<AuditRecord>,
    pub report: JudgeReport,
}

impl JudgeRun {
    pub fn write_audit(&self, path: &Path) -> Result<(), JudgeError> {
        let io = |e| JudgeError::Io { path: path.to_path_buf(), source: e };
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for r in &self.audit {
            serde_json::to_writer(&mut w, r).map_err(|e| io(e.into()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

struct Exchange {
    record: AuditRecord,
    result: Result<String, TransportError>,
}

fn exchange(transport: &dyn Transport, cfg: &TransportConfig, pair_id: &str, req: &ChatRequest, strict: bool) -> Exchange {
    let start = Instant::now();
    let mut attempts = 0;
    let result = loop {
        attempts += 1;
        match transport.complete(req) {
            Err(e) if e.retryable && attempts <= cfg.max_retries => {
                let delay = cfg.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            other => break other,
        }
    };
    let record = AuditRecord {
        pair_id: pair_id.to_string(),
        prompt_sha256: req.sha256_hex(),
        response_text: result.as_ref().ok().cloned(),
        verdict: result.as_ref().ok().map(|t| parse_verdict(t).label),
        latency_ms: start.elapsed().as_millis() as u64,
        attempts,
        strict,
        error: result.as_ref().err().map(|e| e.message.clone()),
    };
    Exchange { record, result }
}

fn judge_one(
    pair: &ReplyPair,
    exemplars: &[Exemplar],
    transport: &dyn Transport,
    cfg: &JudgeConfig,
) -> (JudgeOutcome, Vec<AuditRecord>) {
    let prompt = JudgePrompt::with_exemplars(cfg.mode, exemplars.to_vec(), pair);
    let mut req = ChatRequest {
        model: cfg.transport.model_name.clone(),
        messages: prompt.messages(),
        temperature: cfg.transport.temperature,
    };
    let first = exchange(transport, &cfg.transport, &pair.pair_id, &req, false);
    let mut audit = vec![first.record];
    let mut result = first.result.map(|t| parse_verdict(&t));

    if cfg.strict_retry && matches!(&result, Ok(v) if v.label == Verdict::Unparseable) {
        let previous = result.as_ref().map(|v| v.raw_response.clone()).unwrap_or_default();
        req.messages.push(ChatMessage::assistant(&previous));
        req.messages.push(ChatMessage::user(STRICT_REMINDER));
        let second = exchange(transport, &cfg.transport, &pair.pair_id, &req, true);
        audit.push(second.record);
        result = second.result.map(|t| parse_verdict(&t));
    }

    let outcome = JudgeOutcome {
        pair_id: pair.pair_id.clone(),
        gold: pair.label,
        verdict: result.as_ref().ok().cloned(),
        error: result.err().map(|e| e.message),
    };
    (outcome, audit)
}

/// Judge every pair, scoring against its gold label. Few-shot exemplars come
/// from `exemplar_pool` (normally the training split). Transport failures
/// that survive the retries are kept as per-pair errors and scored as misses;
/// output order always follows `pairs`.
pub fn judge_pairs(
    pairs: &[&ReplyPair],
    exemplar_pool: &[&ReplyPair],
    transport: &dyn Transport,
    cfg: &JudgeConfig,
) -> Result<JudgeRun, JudgeError> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(JudgeError::Empty);
    }
    let exemplars = match cfg.mode {
        PromptMode::ZeroShot => Vec::new(),
        PromptMode::FewShot => select_exemplars(exemplar_pool)?,
    };

    let slots: Vec<Mutex<Option<(JudgeOutcome, Vec<AuditRecord>)>>> = pairs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= pairs.len() {
            break;
        }
        let r = judge_one(pairs[i], &exemplars, transport, cfg);
        *slots[i].lock().expect("no worker panics while holding a slot") = Some(r);
    };
    let workers = cfg.max_in_flight.min(pairs.len());
    if workers == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(worker);
            }
        });
    }

    let mut outcomes = Vec::with_capacity(pairs.len());
    let mut audit = Vec::new();
    for slot in slots {
        let (o, a) = slot.into_inner().expect("slot lock").expect("every pair judged");
        outcomes.push(o);
        audit.extend(a);
    }
    let preds: Vec<Label> = outcomes.iter().map(JudgeOutcome::predicted).collect();
    let gold: Vec<Label> = outcomes.iter().map(|o| o.gold).collect();
    let eval = evaluate(&preds, &gold)?;
    let report = JudgeReport {
        mode: cfg.mode,
        model_name: cfg.transport.model_name.clone(),
        n_pairs: outcomes.len(),
        n_unparseable: outcomes
            .iter()
            .filter(|o| o.verdict.as_ref().is_some_and(|v| v.label == Verdict::Unparseable))
            .count(),
        n_failed: outcomes.iter().filter(|o| o.verdict.is_none()).count(),
        eval,
    };
    Ok(JudgeRun { outcomes, audit, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmjudge::MockTransport;
    use chrono::{TimeZone, Utc};
    use std::sync::atomic::AtomicU32;

    fn pair(id: usize, label: Label) -> ReplyPair {
        ReplyPair {
            pair_id: format!("p{id:03}"),
            parent_text: format!("parent text number {id}"),
            reply_text: format!("reply {id}"),
            parent_author_id: "a".into(),
            reply_author_id: "b".into(),
            reply_created_at: Utc.with_ymd_and_hms(2024, 7, 1, 0, 0, 0).unwrap(),
            label,
            annotator_votes: vec![],
        }
    }

    fn corpus(n: usize) -> Vec<ReplyPair> {
        (0..n).map(|i| pair(i, if i % 3 == 0 { Label::Zombie } else { Label::General })).collect()
    }

    fn quick() -> JudgeConfig {
        JudgeConfig {
            transport: TransportConfig { backoff_ms: 0, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn gold_mock_is_perfect() {
        let c = corpus(30);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        for mode in [PromptMode::ZeroShot, PromptMode::FewShot] {
            let run = judge_pairs(&refs, &refs, &MockTransport::gold(&refs), &JudgeConfig { mode, ..quick() }).unwrap();
            assert_eq!(run.report.eval.accuracy, 1.0);
            assert_eq!(run.audit.len(), 30);
            // identity mock: metrics equal a direct evaluate on gold vs gold
            let gold: Vec<Label> = c.iter().map(|p| p.label).collect();
            assert_eq!(run.report.eval, evaluate(&gold, &gold).unwrap());
        }
    }

    #[test]
    fn maybe_is_all_unparseable() {
        let c = corpus(12);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        let run = judge_pairs(&refs, &[], &MockTransport::constant("maybe"), &quick()).unwrap();
        assert_eq!(run.report.eval.accuracy, 0.0);
        assert_eq!(run.report.n_unparseable, 12);
        assert!(run.outcomes.iter().all(|o| o.verdict.as_ref().unwrap().raw_response == "maybe"));
    }

    #[test]
    fn retries_then_succeeds() {
        let c = corpus(3);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        let calls = std::sync::Arc::new(AtomicU32::new(0));
        let k = calls.clone();
        let flaky = MockTransport::new(move |_| {
            if k.fetch_add(1, Ordering::SeqCst) % 3 < 2 {
                Err(TransportError::retryable("503"))
            } else {
                Ok("GENERAL".into())
            }
        });
        let run = judge_pairs(&refs, &[], &flaky, &quick()).unwrap();
        assert_eq!(run.report.n_failed, 0);
        assert!(run.audit.iter().all(|a| a.attempts == 3));
        assert_eq!(calls.load(Ordering::SeqCst), 9);
    }

    #[test]
    fn exhausted_retries_give_partial_results() {
        let c = corpus(4);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        let t = MockTransport::new(|req| {
            if req.messages.last().unwrap().content.contains("number 2") {
                Err(TransportError::retryable("timeout"))
            } else {
                Ok("ZOMBIE".into())
            }
        });
        let run = judge_pairs(&refs, &[], &t, &quick()).unwrap();
        assert_eq!(run.report.n_failed, 1);
        assert_eq!(run.outcomes[2].error.as_deref(), Some("timeout"));
        assert_eq!(run.audit[2].attempts, 4);
        assert_eq!(run.outcomes[2].predicted(), Label::Unlabeled);
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let c = corpus(1);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        let t = MockTransport::new(|_| Err(TransportError::fatal("HTTP 401")));
        let run = judge_pairs(&refs, &[], &t, &quick()).unwrap();
        assert_eq!(run.audit[0].attempts, 1);
    }

    #[test]
    fn strict_retry_reasks_once() {
        let c = corpus(6);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        let t = MockTransport::new(|req| {
            Ok(if req.messages.last().unwrap().content == STRICT_REMINDER { "ZOMBIE" } else { "hmm" }.into())
        });
        let off = judge_pairs(&refs, &[], &t, &quick()).unwrap();
        assert_eq!(off.report.n_unparseable, 6);
        let on = judge_pairs(&refs, &[], &t, &JudgeConfig { strict_retry: true, ..quick() }).unwrap();
        assert_eq!(on.report.n_unparseable, 0);
        assert_eq!(on.audit.len(), 12);
        assert!(on.audit[1].strict && !on.audit[0].strict);
    }

    #[test]
    fn concurrency_preserves_order() {
        let c = corpus(40);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        let seq = judge_pairs(&refs, &refs, &MockTransport::overlap(), &quick()).unwrap();
        let par = judge_pairs(&refs, &refs, &MockTransport::overlap(), &JudgeConfig { max_in_flight: 7, ..quick() }).unwrap();
        assert_eq!(seq.outcomes, par.outcomes);
        let ids: Vec<&str> = par.audit.iter().map(|a| a.pair_id.as_str()).collect();
        let want: Vec<&str> = c.iter().map(|p| p.pair_id.as_str()).collect();
        assert_eq!(ids, want);
        assert_eq!(seq.report, par.report);
    }

    #[test]
    fn few_shot_without_exemplars_errors() {
        let c = corpus(3);
        let refs: Vec<&ReplyPair> = c.iter().collect();
        let cfg = JudgeConfig { mode: PromptMode::FewShot, ..quick() };
        assert!(matches!(
            judge_pairs(&refs, &refs, &MockTransport::constant("GENERAL"), &cfg),
            Err(JudgeError::InsufficientExemplars { .. })
        ));
        assert!(matches!(
            judge_pairs(&[], &refs, &MockTransport::constant("GENERAL"), &quick()),
            Err(JudgeError::Empty)
        ));
    }
}
