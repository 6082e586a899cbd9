//! Linear-phase FIR lowpass design and zero-phase application.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Transition width used when only a cutoff is given.
pub const DEFAULT_TRANSITION_HZ: f64 = 35.0;
pub const MAX_PASSBAND_RIPPLE_DB: f64 = 1.0;
const MAX_TAPS: usize = 4001;
const GRID: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirFilter {
    pub taps: Vec<f64>,
    pub design_cutoff_hz: f64,
    pub design_stopband_hz: f64,
    pub design_attenuation_db: f64,
    pub sampling_rate: f64,
}

impl FirFilter {
    /// Magnitude response at `freq_hz`.
    pub fn gain(&self, freq_hz: f64) -> f64 {
        amplitude(&self.taps, 2.0 * PI * freq_hz / self.sampling_rate).abs()
    }

    pub fn gain_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.gain(freq_hz).log10()
    }
}

/// Real amplitude of a symmetric filter about its centre tap.
fn amplitude(taps: &[f64], omega: f64) -> f64 {
    let m = (taps.len() - 1) as f64 / 2.0;
    taps.iter()
        .enumerate()
        .map(|(k, h)| h * (omega * (k as f64 - m)).cos())
        .sum()
}

fn hamming_sinc(n: usize, cutoff: f64) -> Vec<f64> {
    let m = (n - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 - m;
            let ideal = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let window = 0.54 - 0.46 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
            ideal * window
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    taps
}

fn meets(taps: &[f64], pass: f64, stop: f64, attenuation_db: f64) -> bool {
    let passband_ok = (0..=GRID).all(|i| {
        let f = pass * i as f64 / GRID as f64;
        (20.0 * amplitude(taps, 2.0 * PI * f).abs().log10()).abs() <= MAX_PASSBAND_RIPPLE_DB
    });
    passband_ok
        && (0..=GRID).all(|i| {
            let f = stop + (0.5 - stop) * i as f64 / GRID as f64;
            20.0 * amplitude(taps, 2.0 * PI * f).abs().log10() <= -attenuation_db
        })
}

/// Hamming windowed-sinc lowpass with the smallest odd tap count whose
/// measured response meets the passband ripple and stopband attenuation.
pub fn design_lowpass_with_stopband(
    sampling_rate: f64,
    cutoff_hz: f64,
    stopband_hz: f64,
    attenuation_db: f64,
) -> Result<FirFilter> {
    let nyquist = sampling_rate / 2.0;
    if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad sampling rate {sampling_rate}")));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and the Nyquist frequency {nyquist} Hz"
        )));
    }
    if !(stopband_hz > cutoff_hz) {
        return Err(Error::InvalidArgument(format!(
            "stopband edge {stopband_hz} Hz must exceed the cutoff {cutoff_hz} Hz"
        )));
    }
    if !(attenuation_db >= 20.0) {
        return Err(Error::InvalidArgument(format!(
            "stopband attenuation must be at least 20 dB, got {attenuation_db}"
        )));
    }
    let stop = stopband_hz.min(nyquist);
    let (pass_n, stop_n) = (cutoff_hz / sampling_rate, stop / sampling_rate);
    let ideal = 0.5 * (pass_n + stop_n);
    (3..=MAX_TAPS)
        .step_by(2)
        .map(|n| hamming_sinc(n, ideal))
        .find(|taps| meets(taps, pass_n, stop_n, attenuation_db))
        .map(|taps| FirFilter {
            taps,
            design_cutoff_hz: cutoff_hz,
            design_stopband_hz: stop,
            design_attenuation_db: attenuation_db,
            sampling_rate,
        })
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no Hamming design up to {MAX_TAPS} taps reaches {attenuation_db} dB"
            ))
        })
}

/// Lowpass whose stopband starts [`DEFAULT_TRANSITION_HZ`] above the cutoff.
pub fn design_lowpass(sampling_rate: f64, cutoff_hz: f64, attenuation_db: f64) -> Result<FirFilter> {
    design_lowpass_with_stopband(
        sampling_rate,
        cutoff_hz,
        cutoff_hz + DEFAULT_TRANSITION_HZ,
        attenuation_db,
    )
}

fn centred_convolve(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len() as i64;
    let m = (taps.len() / 2) as i64;
    (0..n)
        .map(|i| {
            taps.iter()
                .enumerate()
                .filter_map(|(j, h)| {
                    let k = i + j as i64 - m;
                    (0..n).contains(&k).then(|| h * x[k as usize])
                })
                .sum()
        })
        .collect()
}

/// Applies `filter` forward and backward over a mirror-padded copy.
pub fn filter_signal(signal: &Signal, filter: &FirFilter) -> Result<Signal> {
    if (signal.sampling_rate - filter.sampling_rate).abs() > 1e-9 * filter.sampling_rate {
        return Err(Error::RateMismatch {
            filter: filter.sampling_rate,
            signal: signal.sampling_rate,
        });
    }
    let x = &signal.samples;
    let n = x.len();
    if n == 0 {
        return Ok(signal.clone());
    }
    let pad = (3 * (filter.taps.len() - 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| x[n - 1 - i]));

    let mut y = centred_convolve(&ext, &filter.taps);
    y.reverse();
    let mut y = centred_convolve(&y, &filter.taps);
    y.reverse();

    Ok(Signal {
        samples: y[pad..pad + n].to_vec(),
        sampling_rate: signal.sampling_rate,
        onset: signal.onset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::rms;

    fn paper_filter() -> FirFilter {
        design_lowpass(512.0, 65.0, 25.0).unwrap()
    }

    fn tone(freq: f64, n: usize) -> Signal {
        Signal::new(
            (0..n).map(|i| (2.0 * PI * freq * i as f64 / 512.0).sin()).collect(),
            512.0,
        )
    }

    #[test]
    fn design_meets_stopband() {
        let f = paper_filter();
        assert!(f.gain_db(100.0) <= -25.0, "{}", f.gain_db(100.0));
        assert!(f.taps.len() % 2 == 1);
        assert!((f.gain(0.0) - 1.0).abs() < 1e-6);
        assert!((f.taps.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let n = f.taps.len();
        for k in 0..n {
            assert!((f.taps[k] - f.taps[n - 1 - k]).abs() < 1e-12);
        }
        for i in 0..=65 {
            assert!(f.gain_db(i as f64).abs() <= 1.0);
        }
    }

    #[test]
    fn cutoff_above_nyquist_fails() {
        assert!(design_lowpass(512.0, 300.0, 25.0).is_err());
        assert!(design_lowpass(512.0, 65.0, 10.0).is_err());
    }

    #[test]
    fn passes_alpha_rejects_line_noise() {
        let f = paper_filter();
        let x = tone(10.0, 1024);
        let y = filter_signal(&x, &f).unwrap();
        let ratio = rms(&y.samples[100..924]) / rms(&x.samples[100..924]);
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
        let x = tone(150.0, 1024);
        let y = filter_signal(&x, &f).unwrap();
        assert!(rms(&y.samples) < 0.1 * rms(&x.samples));
    }

    #[test]
    fn constant_is_preserved() {
        let x = Signal::new(vec![3.25; 300], 512.0);
        let y = filter_signal(&x, &paper_filter()).unwrap();
        assert_eq!(y.len(), 300);
        assert!(y.samples.iter().all(|v| (v - 3.25).abs() < 1e-6));
    }

    #[test]
    fn rate_mismatch() {
        let x = Signal::new(vec![0.0; 64], 256.0);
        assert!(matches!(
            filter_signal(&x, &paper_filter()),
            Err(Error::RateMismatch { .. })
        ));
    }

    #[test]
    fn no_lag_on_in_band_tone() {
        let f = paper_filter();
        let x = Signal::new(
            (0..1024)
                .map(|i| {
                    let t = i as f64 / 512.0;
                    (2.0 * PI * 7.0 * t).sin() + 0.5 * (2.0 * PI * 23.0 * t + 0.3).cos()
                })
                .collect(),
            512.0,
        );
        let y = filter_signal(&x, &f).unwrap();
        let xc = |lag: i64| -> f64 {
            (200..824).map(|i| x.samples[i] * y.samples[(i as i64 + lag) as usize]).sum()
        };
        let best = (-10..=10).max_by(|a, b| xc(*a).total_cmp(&xc(*b))).unwrap();
        assert_eq!(best, 0);
    }

    #[test]
    fn refiltering_in_band_is_idempotent() {
        let f = paper_filter();
        let x = tone(20.0, 1024);
        let once = filter_signal(&x, &f).unwrap();
        let twice = filter_signal(&once, &f).unwrap();
        let r = rms(&twice.samples) / rms(&once.samples);
        assert!((r - 1.0).abs() < 0.01);
    }
}
