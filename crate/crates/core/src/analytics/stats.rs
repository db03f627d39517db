use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::AnalyticsError;
use crate::corpus::AccountRecord;

pub fn mean(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        None
    } else {
        Some(x.iter().sum::<f64>() / x.len() as f64)
    }
}

/// Unbiased sample variance; `None` below two observations.
pub fn sample_variance(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let m = mean(x)?;
    Some(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64)
}

/// Linear-interpolation quantile of a sorted slice (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn account_age_days(a: &AccountRecord, reference: DateTime<Utc>) -> Result<f64, AnalyticsError> {
    if a.created_at > reference {
        return Err(AnalyticsError::FutureCreation {
            account_id: a.account_id.clone(),
        });
    }
    Ok((reference - a.created_at).num_milliseconds() as f64 / 86_400_000.0)
}

/// Total posts over account age, with the age clamped to at least one day.
pub fn posts_per_day(a: &AccountRecord, reference: DateTime<Utc>) -> Result<f64, AnalyticsError> {
    let age = account_age_days(a, reference)?;
    Ok(a.total_posts as f64 / age.max(1.0))
}

/// Following / followers per account. Accounts without followers are left
/// out and counted in the second element.
pub fn ff_ratios(accounts: &[AccountRecord]) -> (Vec<f64>, usize) {
    let mut ratios = Vec::with_capacity(accounts.len());
    let mut excluded = 0;
    for a in accounts {
        if a.followers_count == 0 {
            excluded += 1;
        } else {
            ratios.push(a.following_count as f64 / a.followers_count as f64);
        }
    }
    (ratios, excluded)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares for `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalyticsError::TooFewObservations { needed: 2, got: x.len() });
    }
    let mx = mean(x).unwrap();
    let my = mean(y).unwrap();
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(AnalyticsError::ConstantRegressor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
}

/// Two-sided Student-t tail probability `P(|T| >= |t|)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Welch's unequal-variance t-test, two-sided.
///
/// Both samples need at least two observations. A single zero-variance
/// sample is fine; if both are constant the result is `t = 0, p = 1` for
/// equal means and an error otherwise.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TTestResult, AnalyticsError> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(AnalyticsError::TooFewObservations { needed: 2, got: s.len() });
        }
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mx, my) = (mean(x).unwrap(), mean(y).unwrap());
    let (vx, vy) = (sample_variance(x).unwrap(), sample_variance(y).unwrap());
    let (a, b) = (vx / nx, vy / ny);
    if a + b == 0.0 {
        if mx == my {
            return Ok(TTestResult {
                t_statistic: 0.0,
                degrees_of_freedom: nx + ny - 2.0,
                p_value: 1.0,
            });
        }
        return Err(AnalyticsError::ZeroVariance);
    }
    let t = (mx - my) / (a + b).sqrt();
    let df = (a + b) * (a + b) / (a * a / (nx - 1.0) + b * b / (ny - 1.0));
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided_p(t, df),
    })
}
