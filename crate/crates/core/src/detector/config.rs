use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::{cascade, load_wavelet, scale_grid};

/// Lowpass applied before the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowpassConfig {
    pub cutoff_hz: f64,
    pub stopband_hz: f64,
    pub attenuation_db: f64,
}

impl Default for LowpassConfig {
    fn default() -> Self {
        Self {
            cutoff_hz: 65.0,
            stopband_hz: 100.0,
            attenuation_db: 25.0,
        }
    }
}

/// Admissible intervals (ms) between the three identified peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakPeriodBounds {
    pub p1_n1: [f64; 2],
    pub n1_p2: [f64; 2],
    pub total: [f64; 2],
}

impl Default for PeakPeriodBounds {
    fn default() -> Self {
        Self {
            p1_n1: [20.0, 90.0],
            n1_p2: [20.0, 90.0],
            total: [60.0, 160.0],
        }
    }
}

/// Every tunable of the detection pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub wavelet: String,
    /// Dyadic refinement levels used to sample the mother wavelet.
    pub cascade_iterations: u32,
    /// Inclusive scale range searched for the analysis scale.
    pub scale_band: [f64; 2],
    pub scale_step: f64,
    /// Coefficient threshold (uV * samples); 0 keeps every coefficient.
    pub c_tau: f64,
    /// Admissible distance between a negative coefficient and the positive one after it.
    pub period_window_ms: [f64; 2],
    pub gaussian_center_ms: f64,
    pub gaussian_sigma_ms: f64,
    /// Margin added around P1..P2 when marking the segment.
    pub padding_ms: f64,
    /// Post-onset window for coefficient extrema; the whole trial without an onset.
    pub search_window_ms: [f64; 2],
    pub peak_period_bounds_ms: PeakPeriodBounds,
    /// Samples of consistent slope required on each side of a peak.
    pub persistence: usize,
    /// Extension of the pair span searched for N1.
    pub frame_extension_ms: f64,
    pub retry_persistence: usize,
    /// Extra frame extension added on each retry.
    pub retry_frame_extension_ms: f64,
    pub max_retries: u32,
    /// Half-width of the window around the global maximum used for the localization test.
    pub cone_window_ms: f64,
    pub cone_fraction: f64,
    /// Post-onset window scanned for the peak coefficient during calibration.
    pub calibration_window_ms: [f64; 2],
    pub lowpass: LowpassConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            wavelet: "sym5".into(),
            cascade_iterations: cascade::DEFAULT_ITERATIONS,
            scale_band: [40.0, 90.0],
            scale_step: 1.0,
            c_tau: 0.0,
            period_window_ms: [60.0, 88.0],
            gaussian_center_ms: 70.0,
            gaussian_sigma_ms: 9.0,
            padding_ms: 10.0,
            search_window_ms: [0.0, 400.0],
            peak_period_bounds_ms: PeakPeriodBounds::default(),
            persistence: 3,
            frame_extension_ms: 20.0,
            retry_persistence: 2,
            retry_frame_extension_ms: 20.0,
            max_retries: 1,
            cone_window_ms: 100.0,
            cone_fraction: 0.8,
            calibration_window_ms: [100.0, 250.0],
            lowpass: LowpassConfig::default(),
        }
    }
}

fn window(field: &str, w: [f64; 2]) -> Result<()> {
    if !(w[0].is_finite() && w[1].is_finite() && w[0] < w[1]) {
        return Err(Error::config(field, format!("need low < high, got [{}, {}]", w[0], w[1])));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::config(field, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::config(field, format!("must be non-negative, got {v}")));
    }
    Ok(())
}

impl DetectorConfig {
    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        load_wavelet(&self.wavelet).map_err(|e| Error::config("wavelet", e.to_string()))?;
        if !(cascade::MIN_ITERATIONS..=cascade::MAX_ITERATIONS).contains(&self.cascade_iterations) {
            return Err(Error::config(
                "cascade_iterations",
                format!(
                    "must lie in [{}, {}]",
                    cascade::MIN_ITERATIONS,
                    cascade::MAX_ITERATIONS
                ),
            ));
        }
        window("scale_band", self.scale_band)?;
        positive("scale_band", self.scale_band[0])?;
        positive("scale_step", self.scale_step)?;
        non_negative("c_tau", self.c_tau)?;
        window("period_window_ms", self.period_window_ms)?;
        non_negative("period_window_ms", self.period_window_ms[0])?;
        if !self.gaussian_center_ms.is_finite() {
            return Err(Error::config("gaussian_center_ms", "must be finite"));
        }
        positive("gaussian_sigma_ms", self.gaussian_sigma_ms)?;
        non_negative("padding_ms", self.padding_ms)?;
        window("search_window_ms", self.search_window_ms)?;
        window("peak_period_bounds_ms.p1_n1", self.peak_period_bounds_ms.p1_n1)?;
        window("peak_period_bounds_ms.n1_p2", self.peak_period_bounds_ms.n1_p2)?;
        window("peak_period_bounds_ms.total", self.peak_period_bounds_ms.total)?;
        if self.persistence == 0 {
            return Err(Error::config("persistence", "must be at least 1"));
        }
        if self.retry_persistence == 0 {
            return Err(Error::config("retry_persistence", "must be at least 1"));
        }
        non_negative("frame_extension_ms", self.frame_extension_ms)?;
        non_negative("retry_frame_extension_ms", self.retry_frame_extension_ms)?;
        positive("cone_window_ms", self.cone_window_ms)?;
        if !(self.cone_fraction > 0.0 && self.cone_fraction <= 1.0) {
            return Err(Error::config("cone_fraction", "must lie in (0, 1]"));
        }
        window("calibration_window_ms", self.calibration_window_ms)?;
        positive("lowpass.cutoff_hz", self.lowpass.cutoff_hz)?;
        if !(self.lowpass.stopband_hz > self.lowpass.cutoff_hz) {
            return Err(Error::config("lowpass.stopband_hz", "must exceed the cutoff"));
        }
        if !(self.lowpass.attenuation_db >= 20.0) {
            return Err(Error::config("lowpass.attenuation_db", "must be at least 20 dB"));
        }
        Ok(())
    }

    /// The scale grid spanned by `scale_band`.
    pub fn scales(&self) -> Vec<f64> {
        scale_grid(self.scale_band[0], self.scale_band[1], self.scale_step)
    }
}
