//! Mother-wavelet evaluation on dyadic grids by refinement.
//!
//! The scaling function is first solved exactly at the integers (the
//! eigenvector of the two-scale matrix with eigenvalue 1, found by power
//! iteration from a unit impulse), then refined one dyadic level per
//! iteration. Every level therefore holds exact dyadic samples, and the
//! wavelet at level J comes from one final pass with the highpass filter.

use serde::{Deserialize, Serialize};

use super::filters::WaveletSpec;
use crate::error::{Error, Result};

pub const DEFAULT_ITERATIONS: u32 = 10;
pub const MIN_ITERATIONS: u32 = 4;
pub const MAX_ITERATIONS: u32 = 14;

const ZERO_MEAN_TOL: f64 = 1e-3;

/// Samples of psi on the grid `support[0] + k / samples_per_unit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWavelet {
    pub values: Vec<f64>,
    pub samples_per_unit: usize,
    /// [start, end] in natural units; the end point itself is not sampled.
    pub support: [f64; 2],
}

impl SampledWavelet {
    pub fn step(&self) -> f64 {
        1.0 / self.samples_per_unit as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.step()).sqrt()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step()
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.support[0] + self.support[1])
    }

    /// Linear interpolation at `x` (natural units); zero outside the support.
    pub fn value_at(&self, x: f64) -> f64 {
        let pos = (x - self.support[0]) * self.samples_per_unit as f64;
        if !(pos >= 0.0) {
            return 0.0;
        }
        let i = pos.floor() as usize;
        let n = self.values.len();
        if i >= n {
            return 0.0;
        }
        let frac = pos - i as f64;
        let a = self.values[i];
        let b = if i + 1 < n { self.values[i + 1] } else { 0.0 };
        a + frac * (b - a)
    }
}

/// Exact scaling-function values at the integers 0..N-1.
fn integer_samples(spec: &WaveletSpec) -> Result<Vec<f64>> {
    let c: Vec<f64> = spec.lowpass.iter().map(|h| h * std::f64::consts::SQRT_2).collect();
    let n = c.len();
    let tap = |k: i64| -> f64 {
        if (0..n as i64).contains(&k) {
            c[k as usize]
        } else {
            0.0
        }
    };
    let first = c.iter().position(|&v| v != 0.0).unwrap_or(0);
    let mut v = vec![0.0; n];
    v[first] = 1.0;
    for _ in 0..10_000 {
        let mut next: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| tap(2 * i as i64 - j as i64) * v[j]).sum())
            .collect();
        let s: f64 = next.iter().sum();
        if s == 0.0 || !s.is_finite() {
            break;
        }
        next.iter_mut().for_each(|x| *x /= s);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < 1e-15 {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence {
        wavelet: spec.name.clone(),
        reason: "scaling function at the integers did not settle".into(),
    })
}

/// One dyadic refinement: phi(k / 2^(j+1)) = sum_n c_n phi(k / 2^j - n).
fn refine(prev: &[f64], stride: usize, filter: &[f64], out_len: usize) -> Vec<f64> {
    (0..out_len)
        .map(|k| {
            filter
                .iter()
                .enumerate()
                .filter_map(|(n, &c)| {
                    let off = n * stride;
                    (k >= off && k - off < prev.len()).then(|| c * prev[k - off])
                })
                .sum()
        })
        .collect()
}

/// Evaluates psi at `2^iterations` samples per unit, normalized to unit L2 norm.
pub fn cascade_evaluate(spec: &WaveletSpec, iterations: u32) -> Result<SampledWavelet> {
    if !(MIN_ITERATIONS..=MAX_ITERATIONS).contains(&iterations) {
        return Err(Error::InvalidArgument(format!(
            "cascade iterations must lie in [{MIN_ITERATIONS}, {MAX_ITERATIONS}], got {iterations}"
        )));
    }
    let low: Vec<f64> = spec.lowpass.iter().map(|h| h * std::f64::consts::SQRT_2).collect();
    let high: Vec<f64> = spec.highpass.iter().map(|g| g * std::f64::consts::SQRT_2).collect();
    let span = low.len() - 1;

    let mut phi = integer_samples(spec)?;
    for level in 0..iterations - 1 {
        let stride = 1usize << level;
        phi = refine(&phi, stride, &low, span * (stride << 1) + 1);
    }
    let per_unit = 1usize << iterations;
    let width = (span + high.len() - 1) / 2;
    let values = refine(&phi, per_unit >> 1, &high, width * per_unit);

    let mut wavelet = SampledWavelet {
        values,
        samples_per_unit: per_unit,
        support: [0.0, width as f64],
    };
    let raw_norm = wavelet.l2_norm();
    if !raw_norm.is_finite() || raw_norm == 0.0 {
        return Err(Error::NonConvergence {
            wavelet: spec.name.clone(),
            reason: format!("degenerate norm {raw_norm}"),
        });
    }
    wavelet.values.iter_mut().for_each(|v| *v /= raw_norm);
    let mean = wavelet.integral();
    if mean.abs() > ZERO_MEAN_TOL {
        return Err(Error::NonConvergence {
            wavelet: spec.name.clone(),
            reason: format!("integral {mean:.2e} exceeds {ZERO_MEAN_TOL}"),
        });
    }
    Ok(wavelet)
}

/// L2 distance between two evaluations compared on the coarser grid.
pub fn iterate_difference(a: &SampledWavelet, b: &SampledWavelet) -> f64 {
    let (coarse, fine) = if a.samples_per_unit <= b.samples_per_unit {
        (a, b)
    } else {
        (b, a)
    };
    let ratio = fine.samples_per_unit / coarse.samples_per_unit;
    let sq: f64 = coarse
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = fine.values.get(k * ratio).copied().unwrap_or(0.0);
            (v - w) * (v - w)
        })
        .sum();
    (sq * coarse.step()).sqrt()
}
