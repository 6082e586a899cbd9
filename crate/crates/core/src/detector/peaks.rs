//! Slope-persistence peak search for P1, N1 and P2 around a coefficient pair.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::config::DetectorConfig;
use super::proximity::CoefficientPair;
use crate::signal::{ms_to_samples, samples_to_ms, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    /// From stimulus onset (or the first sample).
    pub latency_ms: f64,
    /// uV, read from the preprocessed signal.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub p1: Peak,
    pub n1: Peak,
    pub p2: Peak,
}

/// Padded segment around an accepted peak set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start_index: usize,
    pub end_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodBound {
    P1N1,
    N1P2,
    Total,
}

/// Why a pair did not yield an acceptable peak set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakFailure {
    NoPersistentMinimum,
    MissingP1,
    MissingP2,
    PeriodBound {
        bound: PeriodBound,
        period_ms: f64,
        limits: [f64; 2],
    },
    Morphology,
}

impl fmt::Display for PeakFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeakFailure::NoPersistentMinimum => write!(f, "no persistent minimum in frame"),
            PeakFailure::MissingP1 => write!(f, "no persistent maximum before N1"),
            PeakFailure::MissingP2 => write!(f, "no persistent maximum after N1"),
            PeakFailure::PeriodBound {
                bound,
                period_ms,
                limits,
            } => write!(
                f,
                "{bound:?} period {period_ms:.1} ms outside [{}, {}]",
                limits[0], limits[1]
            ),
            PeakFailure::Morphology => write!(f, "N1 is not below both flanking peaks"),
        }
    }
}

/// Parameters of one peak-search attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSearch {
    pub persistence: usize,
    pub frame_extension_ms: f64,
}

impl PeakSearch {
    pub fn primary(config: &DetectorConfig) -> Self {
        Self {
            persistence: config.persistence,
            frame_extension_ms: config.frame_extension_ms,
        }
    }

    /// Relaxed parameters for retry number `attempt` (1-based).
    pub fn retry(config: &DetectorConfig, attempt: u32) -> Self {
        Self {
            persistence: config.retry_persistence,
            frame_extension_ms: config.frame_extension_ms
                + attempt as f64 * config.retry_frame_extension_ms,
        }
    }
}

/// Strictly falling for `k` samples into `i` and strictly rising for `k` after.
pub fn is_persistent_min(x: &[f64], i: usize, k: usize) -> bool {
    i >= k && i + k < x.len() && (1..=k).all(|j| x[i - j] > x[i - j + 1] && x[i + j] > x[i + j - 1])
}

pub fn is_persistent_max(x: &[f64], i: usize, k: usize) -> bool {
    i >= k && i + k < x.len() && (1..=k).all(|j| x[i - j] < x[i - j + 1] && x[i + j] < x[i + j - 1])
}

fn check(bound: PeriodBound, period_ms: f64, limits: [f64; 2]) -> Result<(), PeakFailure> {
    if period_ms < limits[0] || period_ms > limits[1] {
        Err(PeakFailure::PeriodBound {
            bound,
            period_ms,
            limits,
        })
    } else {
        Ok(())
    }
}

/// N1 is the lowest persistent minimum inside the pair frame; P1 and P2 are
/// the nearest persistent maxima on either side of it.
pub fn detect_peaks_with(
    signal: &Signal,
    pair: &CoefficientPair,
    config: &DetectorConfig,
    search: PeakSearch,
) -> Result<PeakSet, PeakFailure> {
    let x = &signal.samples;
    if x.is_empty() {
        return Err(PeakFailure::NoPersistentMinimum);
    }
    let k = search.persistence;
    let ext = ms_to_samples(search.frame_extension_ms, signal.sampling_rate).round() as usize;
    let lo = pair.neg_index.saturating_sub(ext);
    let hi = (pair.pos_index + ext).min(x.len() - 1);

    let n1 = (lo..=hi)
        .filter(|&i| is_persistent_min(x, i, k))
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if x[b] <= x[i] => Some(b),
            _ => Some(i),
        })
        .ok_or(PeakFailure::NoPersistentMinimum)?;
    let p1 = (0..n1)
        .rev()
        .find(|&i| is_persistent_max(x, i, k))
        .ok_or(PeakFailure::MissingP1)?;
    let p2 = (n1 + 1..x.len())
        .find(|&i| is_persistent_max(x, i, k))
        .ok_or(PeakFailure::MissingP2)?;

    let fs = signal.sampling_rate;
    let bounds = &config.peak_period_bounds_ms;
    check(PeriodBound::P1N1, samples_to_ms((n1 - p1) as f64, fs), bounds.p1_n1)?;
    check(PeriodBound::N1P2, samples_to_ms((p2 - n1) as f64, fs), bounds.n1_p2)?;

    let peak = |i: usize| Peak {
        index: i,
        latency_ms: signal.latency_ms(i),
        amplitude: x[i],
    };
    Ok(PeakSet {
        p1: peak(p1),
        n1: peak(n1),
        p2: peak(p2),
    })
}

/// Peak search with the configured (non-relaxed) parameters.
pub fn detect_peaks(
    signal: &Signal,
    pair: &CoefficientPair,
    config: &DetectorConfig,
) -> Result<PeakSet, PeakFailure> {
    detect_peaks_with(signal, pair, config, PeakSearch::primary(config))
}

/// Final period and morphology check, then the padded segment.
pub fn validate_and_segment(
    peaks: &PeakSet,
    signal: &Signal,
    config: &DetectorConfig,
) -> Result<Segment, PeakFailure> {
    let fs = signal.sampling_rate;
    let total = samples_to_ms((peaks.p2.index - peaks.p1.index) as f64, fs);
    check(PeriodBound::Total, total, config.peak_period_bounds_ms.total)?;
    if !(peaks.n1.amplitude < peaks.p1.amplitude && peaks.n1.amplitude < peaks.p2.amplitude) {
        return Err(PeakFailure::Morphology);
    }
    let pad = ms_to_samples(config.padding_ms, fs).round() as usize;
    Ok(Segment {
        start_index: peaks.p1.index.saturating_sub(pad),
        end_index: (peaks.p2.index + pad).min(signal.len().saturating_sub(1)),
    })
}
