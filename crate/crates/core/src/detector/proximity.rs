//! Ranking of negative/positive coefficient pairs at the analysis scale.

use serde::{Deserialize, Serialize};

use super::config::DetectorConfig;
use crate::signal::{ms_to_samples, samples_to_ms};

/// A negative coefficient extremum followed by a positive one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPair {
    pub neg_index: usize,
    pub pos_index: usize,
    pub neg_value: f64,
    pub pos_value: f64,
    pub period_ms: f64,
    /// |neg_value| + |pos_value|
    pub energy: f64,
    /// energy weighted by the Gaussian period prior
    pub score: f64,
}

pub fn gaussian_weight(period_ms: f64, center_ms: f64, sigma_ms: f64) -> f64 {
    let z = (period_ms - center_ms) / sigma_ms;
    (-0.5 * z * z).exp()
}

/// Inclusive sample range searched for extrema.
pub fn search_range(len: usize, sampling_rate: f64, window_ms: [f64; 2], onset: Option<usize>) -> (usize, usize) {
    if len == 0 {
        return (0, 0);
    }
    match onset {
        None => (0, len - 1),
        Some(o) => {
            let at = |ms: f64| -> usize {
                let i = o as f64 + ms_to_samples(ms, sampling_rate).round();
                i.clamp(0.0, (len - 1) as f64) as usize
            };
            (at(window_ms[0]), at(window_ms[1]))
        }
    }
}

/// Row with sub-threshold coefficients set to zero.
pub fn apply_threshold(row: &[f64], c_tau: f64) -> Vec<f64> {
    row.iter()
        .map(|&c| if c >= c_tau || c <= -c_tau { c } else { 0.0 })
        .collect()
}

/// Indices of negative and positive local extrema of the thresholded row
/// inside `lo..=hi`. Plateaus report their first sample.
pub fn local_extrema(kept: &[f64], lo: usize, hi: usize) -> (Vec<usize>, Vec<usize>) {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    if kept.is_empty() {
        return (neg, pos);
    }
    for i in lo..=hi.min(kept.len() - 1) {
        let c = kept[i];
        let left = if i > 0 { kept[i - 1] } else { 0.0 };
        let right = kept.get(i + 1).copied().unwrap_or(0.0);
        if c < 0.0 && c < left && c <= right {
            neg.push(i);
        } else if c > 0.0 && c > left && c >= right {
            pos.push(i);
        }
    }
    (neg, pos)
}

/// Candidate pairs ranked by score, best first.
pub fn proximity_detect(
    row: &[f64],
    sampling_rate: f64,
    config: &DetectorConfig,
    onset: Option<usize>,
) -> Vec<CoefficientPair> {
    let kept = apply_threshold(row, config.c_tau);
    if kept.iter().all(|&c| c == 0.0) {
        return Vec::new();
    }
    let (lo, hi) = search_range(row.len(), sampling_rate, config.search_window_ms, onset);
    let (negs, poss) = local_extrema(&kept, lo, hi);
    let [pmin, pmax] = config.period_window_ms;

    let mut pairs = Vec::new();
    for &n in &negs {
        for &p in poss.iter().filter(|&&p| p > n) {
            let period_ms = samples_to_ms((p - n) as f64, sampling_rate);
            if period_ms < pmin {
                continue;
            }
            if period_ms > pmax {
                break;
            }
            let energy = kept[n].abs() + kept[p].abs();
            let weight = gaussian_weight(period_ms, config.gaussian_center_ms, config.gaussian_sigma_ms);
            pairs.push(CoefficientPair {
                neg_index: n,
                pos_index: p,
                neg_value: kept[n],
                pos_value: kept[p],
                period_ms,
                energy,
                score: energy * weight,
            });
        }
    }
    pairs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.neg_index.cmp(&b.neg_index))
            .then(a.pos_index.cmp(&b.pos_index))
    });
    pairs
}
