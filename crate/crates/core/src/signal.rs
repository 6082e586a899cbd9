use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled single-channel trace in microvolts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub samples: Vec<f64>,
    /// Hz.
    pub sampling_rate: f64,
    /// Sample index of stimulus onset, if the trace is stimulus-locked.
    pub onset: Option<usize>,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sampling_rate: f64) -> Self {
        Self {
            samples,
            sampling_rate,
            onset: None,
        }
    }

    pub fn with_onset(mut self, onset: usize) -> Self {
        self.onset = Some(onset);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sampling_rate
    }

    /// Converts a duration to a (fractional) number of samples.
    pub fn ms_to_samples(&self, ms: f64) -> f64 {
        ms_to_samples(ms, self.sampling_rate)
    }

    /// Milliseconds from onset (or from the first sample when there is no onset).
    pub fn latency_ms(&self, index: usize) -> f64 {
        let origin = self.onset.unwrap_or(0) as f64;
        (index as f64 - origin) * 1000.0 / self.sampling_rate
    }

    /// Checks the rate and that every sample is finite.
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate.is_finite() && self.sampling_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate
            )));
        }
        if let Some(i) = self.samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        if let Some(onset) = self.onset {
            if onset >= self.samples.len() {
                return Err(Error::InvalidArgument(format!(
                    "onset index {onset} beyond signal length {}",
                    self.samples.len()
                )));
            }
        }
        Ok(())
    }
}

pub fn ms_to_samples(ms: f64, sampling_rate: f64) -> f64 {
    ms * sampling_rate / 1000.0
}

pub fn samples_to_ms(samples: f64, sampling_rate: f64) -> f64 {
    samples * 1000.0 / sampling_rate
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}
