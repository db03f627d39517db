//! Aggregates the per-class characterization statistics into one
//! serializable document, plus the plot-ready CSV tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::heatmap::{activity_heatmap, HeatmapZ, DAY_NAMES, DEFAULT_TZ_OFFSET_MINUTES};
use super::kappa::{fleiss_kappa, votes_matrix, KappaResult};
use super::kde::{histogram_kde, HistogramKde};
use super::odds::{bigram_odds_ratios, OddsRatioRow};
use super::stats::{account_age_days, ff_ratios, linear_fit, mean, posts_per_day, welch_t_test, LinearFit, TTestResult};
use super::AnalyticsError;
use crate::corpus::{AccountRecord, Label, ReplyPair, ANNOTATORS};

/// Accounts above this many total posts count as heavy posters.
pub const HEAVY_POSTER_THRESHOLD: u64 = 10_000;
/// Accounts younger than this are counted as recent.
pub const YOUNG_ACCOUNT_DAYS: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub reference_time: DateTime<Utc>,
    pub n_bins: usize,
    pub top_n_bigrams: usize,
    pub min_support: usize,
    pub l2_strength: f64,
    pub tz_offset_minutes: i32,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            reference_time: Utc.with_ymd_and_hms(2024, 11, 1, 0, 0, 0).unwrap(),
            n_bins: 30,
            top_n_bigrams: 20,
            min_support: 5,
            l2_strength: 1e-4,
            tz_offset_minutes: DEFAULT_TZ_OFFSET_MINUTES,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub n_accounts: usize,
    pub n_pairs: usize,
    pub mean_posts_per_day: Option<f64>,
    pub mean_age_days: Option<f64>,
    pub mean_ff_ratio: Option<f64>,
    /// Accounts left out of the follow ratio because they have no followers.
    pub ff_excluded: usize,
    pub share_over_10k_posts: Option<f64>,
    pub share_younger_than_500_days: Option<f64>,
    /// Total posts regressed on account age in days.
    pub posts_vs_age_fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub metric: String,
    pub label: Label,
    pub histogram: HistogramKde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub reference_time: DateTime<Utc>,
    pub classes: BTreeMap<Label, ClassSummary>,
    /// Welch tests, general vs zombie, keyed by metric.
    pub t_tests: BTreeMap<String, TTestResult>,
    pub distributions: Vec<Distribution>,
    pub top_bigrams: Vec<OddsRatioRow>,
    pub heatmaps: BTreeMap<Label, HeatmapZ>,
    pub annotator_agreement: Option<KappaResult>,
    pub warnings: Vec<String>,
}

pub const METRICS: [&str; 3] = ["posts_per_day", "age_days", "ff_ratio"];

struct ClassData {
    posts_per_day: Vec<f64>,
    age_days: Vec<f64>,
    ff_ratio: Vec<f64>,
}

impl ClassData {
    fn metric(&self, name: &str) -> &[f64] {
        match name {
            "posts_per_day" => &self.posts_per_day,
            "age_days" => &self.age_days,
            _ => &self.ff_ratio,
        }
    }
}

pub fn summary_report(
    accounts: &[AccountRecord],
    pairs: &[ReplyPair],
    cfg: &ReportConfig,
) -> Result<SummaryReport, AnalyticsError> {
    let mut warnings = Vec::new();
    let mut classes = BTreeMap::new();
    let mut data = BTreeMap::new();

    for label in [Label::General, Label::Zombie] {
        let accts: Vec<AccountRecord> = accounts.iter().filter(|a| a.label == label).cloned().collect();
        let mut s = ClassSummary {
            n_accounts: accts.len(),
            n_pairs: pairs.iter().filter(|p| p.label == label).count(),
            ..Default::default()
        };
        let ages = accts
            .iter()
            .map(|a| account_age_days(a, cfg.reference_time))
            .collect::<Result<Vec<_>, _>>()?;
        let ppd = accts
            .iter()
            .map(|a| posts_per_day(a, cfg.reference_time))
            .collect::<Result<Vec<_>, _>>()?;
        let (ratios, excluded) = ff_ratios(&accts);
        s.mean_posts_per_day = mean(&ppd);
        s.mean_age_days = mean(&ages);
        s.mean_ff_ratio = mean(&ratios);
        s.ff_excluded = excluded;
        if !accts.is_empty() {
            let n = accts.len() as f64;
            s.share_over_10k_posts =
                Some(accts.iter().filter(|a| a.total_posts > HEAVY_POSTER_THRESHOLD).count() as f64 / n);
            s.share_younger_than_500_days = Some(ages.iter().filter(|&&d| d < YOUNG_ACCOUNT_DAYS).count() as f64 / n);
            let posts: Vec<f64> = accts.iter().map(|a| a.total_posts as f64).collect();
            s.posts_vs_age_fit = linear_fit(&ages, &posts).ok();
        } else {
            warnings.push(format!("no {label} accounts; class statistics omitted"));
        }
        classes.insert(label, s);
        data.insert(
            label,
            ClassData {
                posts_per_day: ppd,
                age_days: ages,
                ff_ratio: ratios,
            },
        );
    }

    let mut t_tests = BTreeMap::new();
    let mut distributions = Vec::new();
    for metric in METRICS {
        let g = data[&Label::General].metric(metric);
        let z = data[&Label::Zombie].metric(metric);
        if !g.is_empty() && !z.is_empty() {
            match welch_t_test(g, z) {
                Ok(t) => {
                    t_tests.insert(metric.to_string(), t);
                }
                Err(e) => warnings.push(format!("t-test on {metric} skipped: {e}")),
            }
        }
        for label in [Label::General, Label::Zombie] {
            let v = data[&label].metric(metric);
            if v.is_empty() {
                continue;
            }
            let histogram = histogram_kde(v, cfg.n_bins)?;
            if histogram.kde_absent {
                warnings.push(format!("{metric} for {label} is constant; density omitted"));
            }
            distributions.push(Distribution {
                metric: metric.to_string(),
                label,
                histogram,
            });
        }
    }

    // bigram analysis over accounts with a non-empty profile
    let profiles: Vec<(String, Label)> = accounts
        .iter()
        .filter(|a| a.label.is_labeled() && !a.profile_text.trim().is_empty())
        .map(|a| (a.profile_text.clone(), a.label))
        .collect();
    let top_bigrams = match bigram_odds_ratios(&profiles, cfg.min_support, cfg.l2_strength) {
        Ok(mut t) => {
            if !t.converged {
                warnings.push(format!("bigram regression stopped after {} iterations before converging", t.iterations));
            }
            t.rows.truncate(cfg.top_n_bigrams);
            t.rows
        }
        Err(AnalyticsError::MissingClass(l)) => {
            if !accounts.is_empty() {
                warnings.push(format!("bigram odds ratios skipped: no {l} profiles"));
            }
            Vec::new()
        }
        Err(e) => return Err(e),
    };

    let mut heatmaps = BTreeMap::new();
    for label in [Label::General, Label::Zombie] {
        let ts: Vec<DateTime<Utc>> = pairs.iter().filter(|p| p.label == label).map(|p| p.reply_created_at).collect();
        if !ts.is_empty() {
            heatmaps.insert(label, activity_heatmap(&ts, cfg.tz_offset_minutes)?);
        }
    }

    let votes = votes_matrix(pairs);
    let annotator_agreement = if votes.is_empty() {
        None
    } else {
        let k = fleiss_kappa(&votes, ANNOTATORS as u32)?;
        if k.kappa.is_none() {
            warnings.push("all annotator votes fall in one category; kappa undefined".into());
        }
        Some(k)
    };

    Ok(SummaryReport {
        reference_time: cfg.reference_time,
        classes,
        t_tests,
        distributions,
        top_bigrams,
        heatmaps,
        annotator_agreement,
        warnings,
    })
}

fn csv_err(path: &Path, e: csv::Error) -> AnalyticsError {
    AnalyticsError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), AnalyticsError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| AnalyticsError::Io { path: path.to_path_buf(), source: e })
}

impl SummaryReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Write `report.json` and the CSV tables into `dir`, returning the paths
    /// written in a fixed order.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, AnalyticsError> {
        std::fs::create_dir_all(dir).map_err(|e| AnalyticsError::Io { path: dir.to_path_buf(), source: e })?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json() + "\n").map_err(|e| AnalyticsError::Io { path: json.clone(), source: e })?;
        written.push(json);

        for (label, h) in &self.heatmaps {
            let p = dir.join(format!("heatmap_{label}.csv"));
            let rows = (0..7).flat_map(|d| (0..24).map(move |hr| (DAY_NAMES[d], hr, h.counts[d][hr], h.cells[d][hr])));
            write_csv(&p, &["day", "hour", "count", "z"], rows)?;
            written.push(p);
        }
        for d in &self.distributions {
            let h = &d.histogram;
            let p = dir.join(format!("hist_{}_{}.csv", d.metric, d.label));
            let rows = h
                .relative_frequencies
                .iter()
                .enumerate()
                .map(|(i, f)| (h.bin_edges[i], h.bin_edges[i + 1], *f));
            write_csv(&p, &["bin_lo", "bin_hi", "freq"], rows)?;
            written.push(p);
            if !h.kde_absent {
                let p = dir.join(format!("kde_{}_{}.csv", d.metric, d.label));
                write_csv(&p, &["x", "density"], h.kde_grid.iter().copied())?;
                written.push(p);
            }
        }
        let p = dir.join("odds_ratios.csv");
        let rows = self
            .top_bigrams
            .iter()
            .map(|r| (r.bigram.as_str(), r.coefficient, r.odds_ratio, r.support));
        write_csv(&p, &["bigram", "coef", "odds_ratio", "support"], rows)?;
        written.push(p);
        Ok(written)
    }
}
