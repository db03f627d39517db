use serde::{Deserialize, Serialize};

use super::stats::{mean, quantile_sorted};
use super::AnalyticsError;

/// Number of evaluation points on the KDE grid.
pub const KDE_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramKde {
    /// `n_bins + 1` ascending edges.
    pub bin_edges: Vec<f64>,
    pub relative_frequencies: Vec<f64>,
    /// `(x, density)`; empty when the KDE is absent.
    pub kde_grid: Vec<(f64, f64)>,
    /// Silverman bandwidth; 0 when the KDE is absent.
    pub bandwidth: f64,
    /// Set when all values were identical and no density was estimated.
    pub kde_absent: bool,
}

impl HistogramKde {
    /// Linear interpolation of the gridded density; 0 outside the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        let g = &self.kde_grid;
        if g.is_empty() || x < g[0].0 || x > g[g.len() - 1].0 {
            return 0.0;
        }
        let i = g.partition_point(|p| p.0 <= x).clamp(1, g.len() - 1);
        let (x0, y0) = g[i - 1];
        let (x1, y1) = g[i];
        if x1 == x0 {
            return y0;
        }
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR/1.34) * n^(-1/5)`, falling
/// back to the standard deviation when the IQR is zero.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = mean(values).unwrap_or(0.0);
    let sd = (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Equal-width histogram over `[min, max]` plus a Gaussian KDE.
pub fn histogram_kde(values: &[f64], n_bins: usize) -> Result<HistogramKde, AnalyticsError> {
    if n_bins == 0 {
        return Err(AnalyticsError::InvalidArgument("n_bins must be at least 1".into()));
    }
    if values.is_empty() {
        return Err(AnalyticsError::TooFewObservations { needed: 1, got: 0 });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::InvalidArgument("values must be finite".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = values.len() as f64;

    if lo == hi {
        let mut freqs = vec![0.0; n_bins];
        freqs[0] = 1.0;
        let bin_edges = (0..=n_bins).map(|i| lo + i as f64).collect();
        return Ok(HistogramKde {
            bin_edges,
            relative_frequencies: freqs,
            kde_grid: Vec::new(),
            bandwidth: 0.0,
            kde_absent: true,
        });
    }

    let width = (hi - lo) / n_bins as f64;
    let bin_edges: Vec<f64> = (0..=n_bins)
        .map(|i| if i == n_bins { hi } else { lo + i as f64 * width })
        .collect();
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let relative_frequencies = counts.iter().map(|&c| c as f64 / n).collect();

    let h = silverman_bandwidth(values);
    let (g_lo, g_hi) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (g_hi - g_lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let kde_grid = (0..KDE_GRID_POINTS)
        .map(|i| {
            let x = g_lo + i as f64 * step;
            let s: f64 = values
                .iter()
                .map(|v| {
                    let u = (x - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            (x, s * norm)
        })
        .collect();

    Ok(HistogramKde {
        bin_edges,
        relative_frequencies,
        kde_grid,
        bandwidth: h,
        kde_absent: false,
    })
}
