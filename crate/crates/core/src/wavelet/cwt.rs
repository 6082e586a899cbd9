//! Direct time-domain continuous wavelet transform.

use serde::{Deserialize, Serialize};

use super::cascade::{cascade_evaluate, SampledWavelet, DEFAULT_ITERATIONS};
use super::filters::WaveletSpec;
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Coefficients C(a, b), one row per scale, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtMatrix {
    pub scales: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub n_times: usize,
    pub sampling_rate: f64,
}

impl CwtMatrix {
    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coefficients[i * self.n_times..(i + 1) * self.n_times]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coefficients.chunks(self.n_times.max(1))
    }

    pub fn get(&self, scale_index: usize, time: usize) -> f64 {
        self.coefficients[scale_index * self.n_times + time]
    }

    /// Row index of `scale`, if it is on the grid.
    pub fn scale_index(&self, scale: f64) -> Option<usize> {
        self.scales.iter().position(|&s| (s - scale).abs() < 1e-9)
    }
}

/// Scales `low, low + step, ...` up to and including `high`.
pub fn scale_grid(low: f64, high: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || !(high >= low) {
        return Vec::new();
    }
    let n = ((high - low) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| low + i as f64 * step).collect()
}

/// Correlation taps for one scale, indexed from `-half_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleKernel {
    pub scale: f64,
    pub half_width: usize,
    pub taps: Vec<f64>,
}

/// A mother wavelet prepared for repeated transforms.
#[derive(Debug, Clone)]
pub struct Cwt {
    wavelet: SampledWavelet,
}

impl Cwt {
    pub fn new(spec: &WaveletSpec, iterations: u32) -> Result<Self> {
        Ok(Self::from_sampled(cascade_evaluate(spec, iterations)?))
    }

    pub fn from_sampled(wavelet: SampledWavelet) -> Self {
        Self { wavelet }
    }

    pub fn wavelet(&self) -> &SampledWavelet {
        &self.wavelet
    }

    /// The wavelet dilated to `scale` samples per unit, centred on its
    /// support midpoint and renormalized to unit energy.
    pub fn kernel(&self, scale: f64) -> ScaleKernel {
        let w = &self.wavelet;
        let half_support = 0.5 * (w.support[1] - w.support[0]);
        let centre = w.centre();
        let half_width = (half_support * scale).floor() as usize;
        let inv_sqrt = 1.0 / scale.sqrt();
        let mut taps: Vec<f64> = (0..=2 * half_width)
            .map(|i| {
                let j = i as f64 - half_width as f64;
                w.value_at(centre + j / scale) * inv_sqrt
            })
            .collect();
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        if energy > 0.0 {
            let norm = energy.sqrt();
            taps.iter_mut().for_each(|t| *t /= norm);
        }
        ScaleKernel {
            scale,
            half_width,
            taps,
        }
    }

    /// Places the scale-`scale` kernel into a zero trace of length `len`, centred at `at`.
    pub fn render(&self, scale: f64, at: usize, len: usize) -> Vec<f64> {
        let k = self.kernel(scale);
        let mut out = vec![0.0; len];
        for (i, &t) in k.taps.iter().enumerate() {
            let pos = at as i64 + i as i64 - k.half_width as i64;
            if (0..len as i64).contains(&pos) {
                out[pos as usize] = t;
            }
        }
        out
    }

    pub fn transform(&self, signal: &Signal, scales: &[f64]) -> Result<CwtMatrix> {
        signal.validate()?;
        check_scales(scales)?;
        let max_scale = scales[scales.len() - 1];
        let width = self.wavelet.support[1] - self.wavelet.support[0];
        let needed = max_scale * width / 4.0;
        if (signal.len() as f64) < needed {
            return Err(Error::InvalidArgument(format!(
                "signal of {} samples is shorter than the {needed:.0} samples needed for scale {max_scale}",
                signal.len()
            )));
        }
        let x = &signal.samples;
        let n = x.len();
        let mut coefficients = Vec::with_capacity(n * scales.len());
        for &a in scales {
            coefficients.extend(correlate(x, &self.kernel(a)));
        }
        Ok(CwtMatrix {
            scales: scales.to_vec(),
            coefficients,
            n_times: n,
            sampling_rate: signal.sampling_rate,
        })
    }
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("empty scale grid".into()));
    }
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidArgument("scales must be positive and finite".into()));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("scales must be strictly ascending".into()));
    }
    Ok(())
}

/// C[b] = sum_j k[j] x[b + j], zero outside the signal.
fn correlate(x: &[f64], kernel: &ScaleKernel) -> Vec<f64> {
    let n = x.len() as i64;
    let h = kernel.half_width as i64;
    (0..n)
        .map(|b| {
            let lo = (b - h).max(0);
            let hi = (b + h).min(n - 1);
            if hi < lo {
                return 0.0;
            }
            let k0 = (lo - (b - h)) as usize;
            x[lo as usize..=hi as usize]
                .iter()
                .zip(&kernel.taps[k0..])
                .map(|(a, k)| a * k)
                .sum()
        })
        .collect()
}

/// Transform with a freshly evaluated wavelet at the default resolution.
pub fn cwt(signal: &Signal, spec: &WaveletSpec, scales: &[f64]) -> Result<CwtMatrix> {
    Cwt::new(spec, DEFAULT_ITERATIONS)?.transform(signal, scales)
}
