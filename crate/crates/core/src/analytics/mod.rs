//! Characterization statistics for the two account classes: activity and
//! age distributions, follow ratios, profile bigram odds ratios, posting
//! heatmaps and inter-annotator agreement, with plot-ready table output.

mod heatmap;
mod kappa;
mod kde;
mod odds;
mod report;
mod stats;

use std::path::PathBuf;

pub use heatmap::{activity_heatmap, HeatmapZ, DAY_NAMES, DEFAULT_TZ_OFFSET_MINUTES};
pub use kappa::{fleiss_kappa, votes_matrix, KappaResult};
pub use kde::{histogram_kde, silverman_bandwidth, HistogramKde, KDE_GRID_POINTS};
pub use odds::{bigram_odds_ratios, bigram_odds_ratios_with, profile_bigrams, OddsRatioRow, OddsRatioTable};
pub use report::{
    summary_report, ClassSummary, Distribution, ReportConfig, SummaryReport, HEAVY_POSTER_THRESHOLD, METRICS,
    YOUNG_ACCOUNT_DAYS,
};
pub use stats::{
    account_age_days, ff_ratios, linear_fit, mean, posts_per_day, quantile_sorted, sample_variance,
    student_t_two_sided_p, welch_t_test, LinearFit, TTestResult,
};

use crate::corpus::Label;
use crate::logreg::LogRegError;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("account {account_id:?} was created after the reference time")]
    FutureCreation { account_id: String },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("regressor is constant")]
    ConstantRegressor,
    #[error("both samples have zero variance and different means")]
    ZeroVariance,
    #[error("no {0} examples")]
    MissingClass(Label),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solver(#[from] LogRegError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
