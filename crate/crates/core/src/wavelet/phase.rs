//! Phase response and group delay of wavelet filters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::cascade::{cascade_evaluate, SampledWavelet, DEFAULT_ITERATIONS};
use super::filters::WaveletSpec;
use crate::error::{Error, Result};

/// Magnitude below which phase and delays are left undefined.
pub const MAGNITUDE_FLOOR: f64 = 1e-8;
pub const MIN_FREQS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDelayProfile {
    /// rad/sample, strictly inside (0, pi).
    pub omega: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Unwrapped, radians.
    pub phase: Vec<f64>,
    /// Samples; `None` where the response magnitude is below the floor.
    pub group_delay: Vec<Option<f64>>,
    pub phase_delay: Vec<Option<f64>>,
}

impl GroupDelayProfile {
    pub fn defined_delays(&self) -> impl Iterator<Item = f64> + '_ {
        self.group_delay.iter().flatten().copied()
    }

    /// max - min of the defined group delays.
    pub fn delay_range(&self) -> f64 {
        let (lo, hi) = self
            .defined_delays()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(t), h.max(t)));
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }
}

/// `n` frequencies evenly spaced strictly inside (0, pi).
pub fn frequency_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| PI * i as f64 / (n + 1) as f64).collect()
}

/// H(omega) e^{i omega c} and sum (n - c) h_n e^{-i omega (n - c)}, with c the
/// filter midpoint. Symmetric tap pairs are accumulated together so
/// linear-phase filters keep an exactly linear phase.
fn response(taps: &[f64], omega: f64) -> (Complex64, Complex64) {
    let n = taps.len();
    let mid = (n as f64 - 1.0) / 2.0;
    let mut h = Complex64::new(0.0, 0.0);
    let mut nh = Complex64::new(0.0, 0.0);
    for k in 0..n / 2 {
        let (a, b) = (taps[k], taps[n - 1 - k]);
        let m = k as f64 - mid;
        let (s, c) = (omega * m).sin_cos();
        // a e^{-i w m} + b e^{+i w m}
        h += Complex64::new((a + b) * c, (b - a) * s);
        nh += Complex64::new((a - b) * m * c, -(a + b) * m * s);
    }
    if n % 2 == 1 {
        h += taps[n / 2];
    }
    (h, nh)
}

/// tau(omega) = Re{ sum n h_n e^{-i omega n} / sum h_n e^{-i omega n} }.
pub fn group_delay_at(taps: &[f64], omega: f64) -> Option<f64> {
    let (h, nh) = response(taps, omega);
    (h.norm() >= MAGNITUDE_FLOOR).then(|| centre_of(taps) + (nh / h).re)
}

fn centre_of(taps: &[f64]) -> f64 {
    (taps.len() as f64 - 1.0) / 2.0
}

fn unwrap(phase: &mut [f64]) {
    for i in 1..phase.len() {
        let turns = ((phase[i] - phase[i - 1]) / (2.0 * PI)).round();
        phase[i] -= turns * 2.0 * PI;
    }
}

/// Group and phase delay of an arbitrary FIR filter.
pub fn group_delay_of_taps(taps: &[f64], n_freqs: usize) -> Result<GroupDelayProfile> {
    if n_freqs < MIN_FREQS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_FREQS} frequencies, got {n_freqs}"
        )));
    }
    if taps.is_empty() {
        return Err(Error::InvalidArgument("empty filter".into()));
    }
    let omega = frequency_grid(n_freqs);
    let mut magnitude = Vec::with_capacity(n_freqs);
    let mut phase = Vec::with_capacity(n_freqs);
    let mut group_delay = Vec::with_capacity(n_freqs);
    for &w in &omega {
        let (h, nh) = response(taps, w);
        let defined = h.norm() >= MAGNITUDE_FLOOR;
        magnitude.push(h.norm());
        phase.push(h.arg() - w * centre_of(taps));
        group_delay.push(defined.then(|| centre_of(taps) + (nh / h).re));
    }
    unwrap(&mut phase);
    let phase_delay = omega
        .iter()
        .zip(&phase)
        .zip(&magnitude)
        .map(|((w, p), m)| (*m >= MAGNITUDE_FLOOR).then(|| -p / w))
        .collect();
    Ok(GroupDelayProfile {
        omega,
        magnitude,
        phase,
        group_delay,
        phase_delay,
    })
}

/// Group delay of the wavelet's scaling filter.
pub fn group_delay(spec: &WaveletSpec, n_freqs: usize) -> Result<GroupDelayProfile> {
    group_delay_of_taps(&spec.lowpass, n_freqs)
}

fn spectrum_magnitude(x: &[f64], step: f64, omega: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, -omega * step);
    let mut z = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &v) in x.iter().enumerate() {
        acc += z * v;
        z *= rot;
        if k % 64 == 63 {
            z /= z.norm();
        }
    }
    acc.norm() * step
}

/// Peak of |Psi(omega)| in radians per natural unit.
pub fn centre_frequency(wavelet: &SampledWavelet) -> f64 {
    let stride = (wavelet.samples_per_unit / 64).max(1);
    let x: Vec<f64> = wavelet.values.iter().step_by(stride).copied().collect();
    let step = stride as f64 / wavelet.samples_per_unit as f64;
    let top = (8.0 * PI).min(PI / step);
    let n = 4096;
    let dw = top / n as f64;
    let mag = |w: f64| spectrum_magnitude(&x, step, w);
    let best = (1..=n)
        .map(|i| (i, mag(i as f64 * dw)))
        .fold((1, f64::NEG_INFINITY), |acc, (i, m)| if m > acc.1 { (i, m) } else { acc });
    // golden-section refinement inside the neighbouring grid cells
    let (mut a, mut b) = ((best.0 as f64 - 1.0) * dw, (best.0 as f64 + 1.0) * dw);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (mag(c), mag(d));
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = mag(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = mag(d);
        }
    }
    0.5 * (a + b)
}

/// Time shift (ms) implied by the filter group delay at the scale's centre frequency.
pub fn asymmetry_shift(spec: &WaveletSpec, scale: f64, sampling_rate: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    if !(sampling_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be positive, got {sampling_rate}"
        )));
    }
    let wavelet = cascade_evaluate(spec, DEFAULT_ITERATIONS)?;
    let omega = centre_frequency(&wavelet) / scale;
    if !(omega > 0.0 && omega < PI) {
        return Err(Error::OutOfBand { scale, omega });
    }
    let tau = group_delay_at(&spec.lowpass, omega).ok_or(Error::OutOfBand { scale, omega })?;
    Ok(tau * scale / sampling_rate * 1000.0)
}
