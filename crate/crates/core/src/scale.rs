//! Analysis-scale selection, the localization test and threshold calibration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{search_range, Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::signal::{ms_to_samples, Signal};
use crate::wavelet::{CwtMatrix, WaveletSpec};

/// Per-scale sum of absolute coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEnergy {
    pub scales: Vec<f64>,
    pub energy: Vec<f64>,
    pub best: f64,
}

pub fn scale_energy(cwt: &CwtMatrix) -> Result<ScaleEnergy> {
    if cwt.scales.is_empty() || cwt.n_times == 0 {
        return Err(Error::InvalidArgument("empty coefficient matrix".into()));
    }
    let energy: Vec<f64> = cwt.rows().map(|r| r.iter().map(|c| c.abs()).sum()).collect();
    let best = argmax_first(&energy);
    Ok(ScaleEnergy {
        scales: cwt.scales.clone(),
        best: cwt.scales[best],
        energy,
    })
}

fn argmax_first(x: &[f64]) -> usize {
    x.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub localized: bool,
    pub peak_time_index: usize,
    pub peak_scale: f64,
    pub concentration: f64,
}

/// Share of above-threshold coefficients lying within `window_ms` of the
/// time of the largest |C|.
pub fn cone_of_influence(cwt: &CwtMatrix, c_tau: f64, window_ms: f64, fraction: f64) -> ConeReport {
    let n = cwt.n_times.max(1);
    let peak = argmax_first(&cwt.coefficients.iter().map(|c| c.abs()).collect::<Vec<_>>());
    let (peak_row, peak_time) = (peak / n, peak % n);
    let peak_scale = cwt.scales.get(peak_row).copied().unwrap_or(0.0);
    let half = ms_to_samples(window_ms, cwt.sampling_rate).round() as usize;
    let (lo, hi) = (peak_time.saturating_sub(half), peak_time + half);

    let mut total = 0usize;
    let mut inside = 0usize;
    for (i, c) in cwt.coefficients.iter().enumerate() {
        if c.abs() > c_tau {
            total += 1;
            let t = i % n;
            if (lo..=hi).contains(&t) {
                inside += 1;
            }
        }
    }
    let concentration = if total == 0 {
        0.0
    } else {
        inside as f64 / total as f64
    };
    ConeReport {
        localized: total > 0 && concentration >= fraction,
        peak_time_index: peak_time,
        peak_scale,
        concentration,
    }
}

/// The cone's peak scale when localized, else the energy argmax within the band.
pub fn select_analysis_scale(cwt: &CwtMatrix, cone: &ConeReport, config: &DetectorConfig) -> Result<f64> {
    if cone.localized {
        return Ok(cone.peak_scale);
    }
    let [low, high] = config.scale_band;
    let energy = scale_energy(cwt)?;
    let in_band: Vec<usize> = (0..cwt.scales.len())
        .filter(|&i| cwt.scales[i] >= low - 1e-9 && cwt.scales[i] <= high + 1e-9)
        .collect();
    if in_band.is_empty() {
        return Err(Error::DisjointBand { low, high });
    }
    let sub: Vec<f64> = in_band.iter().map(|&i| energy.energy[i]).collect();
    Ok(cwt.scales[in_band[argmax_first(&sub)]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCalibration {
    pub c_tau: f64,
    pub n_trials: usize,
    pub per_trial_peaks: Vec<f64>,
    /// Analysis scale used for each trial.
    pub per_trial_scales: Vec<f64>,
}

impl ThresholdCalibration {
    /// Half the mean of the per-trial peak coefficients.
    pub fn from_peaks(peaks: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        if peaks.is_empty() {
            return Err(Error::Calibration("no labeled trials".into()));
        }
        let mean = peaks.iter().sum::<f64>() / peaks.len() as f64;
        Ok(Self {
            c_tau: 0.5 * mean,
            n_trials: peaks.len(),
            per_trial_peaks: peaks,
            per_trial_scales: scales,
        })
    }
}

/// Largest positive coefficient of `row` within the post-onset window.
pub fn peak_in_window(row: &[f64], sampling_rate: f64, onset: usize, window_ms: [f64; 2]) -> Option<f64> {
    let (lo, hi) = search_range(row.len(), sampling_rate, window_ms, Some(onset));
    row[lo..=hi]
        .iter()
        .copied()
        .filter(|&c| c > 0.0)
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))))
}

/// Sets the coefficient threshold from trials known to contain the component.
pub fn calibrate_threshold(
    trials: &[Signal],
    spec: &WaveletSpec,
    config: &DetectorConfig,
) -> Result<ThresholdCalibration> {
    let first = trials
        .first()
        .ok_or_else(|| Error::Calibration("no labeled trials".into()))?;
    let detector = Detector::with_wavelet(config.clone(), spec.clone(), first.sampling_rate)?;
    calibrate_with(&detector, trials)
}

/// Calibration using an existing pipeline (its own threshold drives scale selection).
pub fn calibrate_with(detector: &Detector, trials: &[Signal]) -> Result<ThresholdCalibration> {
    if trials.is_empty() {
        return Err(Error::Calibration("no labeled trials".into()));
    }
    let window = detector.config().calibration_window_ms;
    let per_trial: Vec<(f64, f64)> = trials
        .par_iter()
        .enumerate()
        .map(|(i, trial)| {
            let onset = trial
                .onset
                .ok_or_else(|| Error::Calibration(format!("trial {i} has no onset index")))?;
            let analysis = detector.analyse(trial)?;
            let peak = peak_in_window(analysis.row(), trial.sampling_rate, onset, window).ok_or_else(|| {
                Error::Calibration(format!(
                    "trial {i} has no positive coefficient in {}..{} ms",
                    window[0], window[1]
                ))
            })?;
            Ok((peak, analysis.scale))
        })
        .collect::<Result<_>>()?;
    let (peaks, scales) = per_trial.into_iter().unzip();
    ThresholdCalibration::from_peaks(peaks, scales)
}
