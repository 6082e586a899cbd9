//! Two-stage detection: coefficient-pair proximity, then peak identification.

mod config;
mod peaks;
mod proximity;

pub use config::{DetectorConfig, LowpassConfig, PeakPeriodBounds};
pub use peaks::{
    detect_peaks, detect_peaks_with, is_persistent_max, is_persistent_min, validate_and_segment, Peak,
    PeakFailure, PeakSearch, PeakSet, PeriodBound, Segment,
};
pub use proximity::{
    apply_threshold, gaussian_weight, local_extrema, proximity_detect, search_range, CoefficientPair,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{design_lowpass_with_stopband, filter_signal, FirFilter};
use crate::scale::{cone_of_influence, select_analysis_scale, ConeReport};
use crate::signal::Signal;
use crate::wavelet::{load_wavelet, Cwt, CwtMatrix, WaveletSpec};

/// Shortest trial the detector accepts.
pub const MIN_DURATION_MS: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub present: bool,
    pub start_index: usize,
    pub end_index: usize,
    pub p1: Option<Peak>,
    pub n1: Option<Peak>,
    pub p2: Option<Peak>,
    pub best_scale: f64,
    pub pair: Option<CoefficientPair>,
    /// Rank of the accepted pair in the proximity ordering.
    pub pair_rank: Option<usize>,
    /// Whether relaxed peak-search parameters were tried at any point.
    pub retried: bool,
}

impl Detection {
    pub fn absent(best_scale: f64, retried: bool) -> Self {
        Self {
            present: false,
            start_index: 0,
            end_index: 0,
            p1: None,
            n1: None,
            p2: None,
            best_scale,
            pair: None,
            pair_rank: None,
            retried,
        }
    }
}

/// Intermediate products of the front half of the pipeline.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub filtered: Signal,
    pub cwt: CwtMatrix,
    pub cone: ConeReport,
    pub scale: f64,
    pub scale_index: usize,
}

impl Analysis {
    /// Coefficients at the analysis scale.
    pub fn row(&self) -> &[f64] {
        self.cwt.row(self.scale_index)
    }
}

/// A configured pipeline for signals at one sampling rate.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    spec: WaveletSpec,
    transform: Cwt,
    lowpass: FirFilter,
    scales: Vec<f64>,
}

impl Detector {
    pub fn new(config: DetectorConfig, sampling_rate: f64) -> Result<Self> {
        config.validate()?;
        let spec = load_wavelet(&config.wavelet)?;
        Self::with_wavelet(config, spec, sampling_rate)
    }

    /// Uses `spec` in place of the wavelet named in the config.
    pub fn with_wavelet(config: DetectorConfig, spec: WaveletSpec, sampling_rate: f64) -> Result<Self> {
        config.validate()?;
        let transform = Cwt::new(&spec, config.cascade_iterations)?;
        let lp = &config.lowpass;
        let lowpass =
            design_lowpass_with_stopband(sampling_rate, lp.cutoff_hz, lp.stopband_hz, lp.attenuation_db)
                .map_err(|e| Error::config("lowpass", e.to_string()))?;
        let scales = config.scales();
        Ok(Self {
            config,
            spec,
            transform,
            lowpass,
            scales,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn wavelet(&self) -> &WaveletSpec {
        &self.spec
    }

    pub fn lowpass(&self) -> &FirFilter {
        &self.lowpass
    }

    /// Same pipeline with a different threshold.
    pub fn with_c_tau(&self, c_tau: f64) -> Result<Self> {
        if !(c_tau.is_finite() && c_tau >= 0.0) {
            return Err(Error::config("c_tau", format!("must be non-negative, got {c_tau}")));
        }
        let mut next = self.clone();
        next.config.c_tau = c_tau;
        Ok(next)
    }

    /// Lowpass, transform over the band, cone test and scale choice.
    pub fn analyse(&self, signal: &Signal) -> Result<Analysis> {
        signal.validate()?;
        if signal.duration_ms() < MIN_DURATION_MS {
            return Err(Error::InvalidArgument(format!(
                "signal lasts {:.1} ms, need at least {MIN_DURATION_MS} ms",
                signal.duration_ms()
            )));
        }
        let filtered = filter_signal(signal, &self.lowpass)?;
        let cwt = self.transform.transform(&filtered, &self.scales)?;
        let c = &self.config;
        let cone = cone_of_influence(&cwt, c.c_tau, c.cone_window_ms, c.cone_fraction);
        let scale = select_analysis_scale(&cwt, &cone, c)?;
        let scale_index = cwt
            .scale_index(scale)
            .ok_or(Error::DisjointBand {
                low: c.scale_band[0],
                high: c.scale_band[1],
            })?;
        Ok(Analysis {
            filtered,
            cwt,
            cone,
            scale,
            scale_index,
        })
    }

    pub fn detect(&self, signal: &Signal) -> Result<Detection> {
        let analysis = self.analyse(signal)?;
        Ok(self.detect_from(&analysis))
    }

    /// Back half of the pipeline on a precomputed analysis.
    pub fn detect_from(&self, analysis: &Analysis) -> Detection {
        let c = &self.config;
        let signal = &analysis.filtered;
        let pairs = proximity_detect(analysis.row(), signal.sampling_rate, c, signal.onset);
        let mut retried = false;
        for (rank, pair) in pairs.iter().enumerate() {
            for attempt in 0..=c.max_retries {
                let search = if attempt == 0 {
                    PeakSearch::primary(c)
                } else {
                    retried = true;
                    PeakSearch::retry(c, attempt)
                };
                let outcome = detect_peaks_with(signal, pair, c, search)
                    .and_then(|peaks| validate_and_segment(&peaks, signal, c).map(|seg| (peaks, seg)));
                if let Ok((peaks, seg)) = outcome {
                    return Detection {
                        present: true,
                        start_index: seg.start_index,
                        end_index: seg.end_index,
                        p1: Some(peaks.p1),
                        n1: Some(peaks.n1),
                        p2: Some(peaks.p2),
                        best_scale: analysis.scale,
                        pair: Some(pair.clone()),
                        pair_rank: Some(rank),
                        retried,
                    };
                }
            }
        }
        Detection::absent(analysis.scale, retried)
    }
}

/// One-shot detection; builds the pipeline for the signal's rate.
pub fn detect(signal: &Signal, config: &DetectorConfig) -> Result<Detection> {
    Detector::new(config.clone(), signal.sampling_rate)?.detect(signal)
}
