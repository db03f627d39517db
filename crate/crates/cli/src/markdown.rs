//! `report.md`: the analytics summary and the model comparison as tables.

use std::fmt::Write;

use impzombie::analytics::SummaryReport;
use impzombie::classifier::EvalReport;
use impzombie::llmjudge::JudgeReport;

use crate::stages::EvalTable;

fn num(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:.1}%", 100.0 * x))
}

fn p_value(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

fn analytics(out: &mut String, a: &SummaryReport) {
    let _ = writeln!(out, "## Account characterization\n");
    let _ = writeln!(out, "Reference time: {}\n", a.reference_time.to_rfc3339());
    let _ = writeln!(
        out,
        "| class | accounts | pairs | posts/day | age (days) | follow ratio | >10k posts | <500 days |"
    );
    let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|---:|---:|");
    for (label, c) in &a.classes {
        let _ = writeln!(
            out,
            "| {label} | {} | {} | {} | {} | {} | {} | {} |",
            c.n_accounts,
            c.n_pairs,
            num(c.mean_posts_per_day, 2),
            num(c.mean_age_days, 1),
            num(c.mean_ff_ratio, 2),
            pct(c.share_over_10k_posts),
            pct(c.share_younger_than_500_days),
        );
    }
    if !a.t_tests.is_empty() {
        let _ = writeln!(out, "\nWelch t-tests, general vs zombie:\n");
        let _ = writeln!(out, "| metric | t | df | p |");
        let _ = writeln!(out, "|---|---:|---:|---:|");
        for (metric, t) in &a.t_tests {
            let _ = writeln!(
                out,
                "| {metric} | {:.3} | {:.1} | {} |",
                t.t_statistic,
                t.degrees_of_freedom,
                p_value(t.p_value)
            );
        }
    }
    if let Some(k) = &a.annotator_agreement {
        let _ = writeln!(out, "\nAnnotator agreement (Fleiss' kappa): {}", num(k.kappa, 3));
    }
    if !a.top_bigrams.is_empty() {
        let _ = writeln!(out, "\nProfile bigrams by odds ratio:\n");
        let _ = writeln!(out, "| bigram | odds ratio | support |");
        let _ = writeln!(out, "|---|---:|---:|");
        for r in &a.top_bigrams {
            let _ = writeln!(out, "| {} | {:.3} | {} |", r.bigram, r.odds_ratio, r.support);
        }
    }
    for w in &a.warnings {
        let _ = writeln!(out, "\n> warning: {w}");
    }
    out.push('\n');
}

fn eval_row(out: &mut String, model: &str, r: &EvalReport) {
    let _ = writeln!(
        out,
        "| {model} | {} | {} | {} | {} | {:.4} |",
        num(r.general.precision, 4),
        num(r.general.recall, 4),
        num(r.zombie.precision, 4),
        num(r.zombie.recall, 4),
        r.accuracy
    );
}

pub fn render(a: Option<&SummaryReport>, e: Option<&EvalTable>, j: Option<&JudgeReport>) -> String {
    let mut out = String::from("# Impression zombie report\n\n");
    if let Some(a) = a {
        analytics(&mut out, a);
    }
    if e.is_some() || j.is_some() {
        let _ = writeln!(out, "## Classification\n");
        if let Some(e) = e {
            let _ = writeln!(out, "Test pairs: {}\n", e.n_test);
        }
        let _ = writeln!(out, "| model | general precision | general recall | zombie precision | zombie recall | accuracy |");
        let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|");
        for row in e.map(|e| e.rows.as_slice()).unwrap_or_default() {
            eval_row(&mut out, &row.model, &row.report);
        }
        if let Some(j) = j {
            let mode = serde_json::to_value(j.mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            eval_row(&mut out, &format!("llm judge ({}, {mode})", j.model_name), &j.eval);
            let _ = writeln!(out, "\nJudge: {} unparseable, {} failed of {}.", j.n_unparseable, j.n_failed, j.n_pairs);
        }
        let flagged: Vec<&String> = e.iter().flat_map(|e| &e.rows).flat_map(|r| &r.report.undefined).collect();
        if !flagged.is_empty() {
            let _ = writeln!(out, "\nUndefined metrics (empty denominator) are shown as n/a.");
        }
    }
    out
}
