//! Overlay metrics: active-path size, depth, and box-plot statistics.

use serde::Serialize;
use thiserror::Error;

use crate::geom_graph::{Network, Point};
use crate::hull;
use crate::overlay::OverlayResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("overlay has an empty active path")]
    EmptyOverlay,
    #[error("cannot summarize an empty sample")]
    EmptySample,
}

/// Ratio of the active path's diameter to the network's diameter, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct DepthValue(f64);

impl DepthValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Number of distinct nodes recruited by any walk.
pub fn active_path_size(result: &OverlayResult) -> usize {
    result.active_path.len()
}

/// Largest distance between two active-path nodes over the largest distance
/// between any two nodes of the network.
pub fn depth(result: &OverlayResult, net: &Network) -> Result<DepthValue, MetricsError> {
    if result.active_path.is_empty() {
        return Err(MetricsError::EmptyOverlay);
    }
    let points: Vec<Point> = result
        .active_path
        .iter()
        .map(|&v| net.position(v))
        .collect();
    let reach = hull::diameter(&points);
    let span = net.max_pairwise_distance();
    if span == 0.0 {
        return Ok(DepthValue(0.0));
    }
    Ok(DepthValue((reach / span).clamp(0.0, 1.0)))
}

/// Tukey box-plot summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
    pub count: usize,
}

impl BoxStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Quantile of sorted data, interpolating linearly between closest ranks.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartiles by linear interpolation; whiskers at the most extreme samples
/// inside the 1.5·IQR fences; everything beyond the fences is an outlier.
pub fn box_stats(samples: &[f64]) -> Result<BoxStats, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |x: &f64| *x >= lo_fence && *x <= hi_fence;
    Ok(BoxStats {
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        // q1 and q3 always lie inside the fences, so these exist.
        lower_whisker: sorted
            .iter()
            .copied()
            .find(inside)
            .expect("q1 within fences")
            .min(q1),
        upper_whisker: sorted
            .iter()
            .copied()
            .rev()
            .find(inside)
            .expect("q3 within fences")
            .max(q3),
        outliers: sorted
            .iter()
            .copied()
            .filter(|x| *x < lo_fence || *x > hi_fence)
            .collect(),
        count: sorted.len(),
    })
}
