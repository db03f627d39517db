use chrono::{DateTime, Datelike, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Japan Standard Time, the default local clock for the heatmap.
pub const DEFAULT_TZ_OFFSET_MINUTES: i32 = 540;

pub const DAY_NAMES: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapZ {
    /// Raw counts, rows Mon..Sun, columns local hour 0..23.
    pub counts: [[u64; 24]; 7],
    /// Counts standardized over all 168 cells (population standard deviation).
    pub cells: [[f64; 24]; 7],
    pub timezone_offset_minutes: i32,
}

/// Bin timestamps by local weekday and hour, then z-score globally.
/// Uniform counts give an all-zero grid.
pub fn activity_heatmap(timestamps: &[DateTime<Utc>], tz_offset_minutes: i32) -> Result<HeatmapZ, AnalyticsError> {
    if timestamps.is_empty() {
        return Err(AnalyticsError::TooFewObservations { needed: 1, got: 0 });
    }
    let mut counts = [[0u64; 24]; 7];
    let offset = Duration::minutes(tz_offset_minutes as i64);
    for ts in timestamps {
        let local = ts.naive_utc() + offset;
        let day = local.weekday().num_days_from_monday() as usize;
        counts[day][local.hour() as usize] += 1;
    }

    let flat: Vec<f64> = counts.iter().flatten().map(|&c| c as f64).collect();
    let m = flat.iter().sum::<f64>() / 168.0;
    let sd = (flat.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / 168.0).sqrt();
    let mut cells = [[0.0; 24]; 7];
    if sd > 0.0 {
        for d in 0..7 {
            for h in 0..24 {
                cells[d][h] = (counts[d][h] as f64 - m) / sd;
            }
        }
    }
    Ok(HeatmapZ {
        counts,
        cells,
        timezone_offset_minutes: tz_offset_minutes,
    })
}
