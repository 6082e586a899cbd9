//! Synthetic EEG: pink background with an alpha rhythm, plus a triphasic
//! P1-N1-P2 template injected at a requested signal-to-noise ratio.
//!
//! All randomness comes from xoshiro256** seeded through SplitMix64
//! (`Xoshiro256StarStar::seed_from_u64`). Uniforms take the top 53 bits of
//! each output; Gaussians use the Box-Muller transform. Draw order for a
//! background of N samples: for each frequency bin k = 1..=N/2 one
//! Box-Muller pair (cosine then sine coefficient), then one uniform for the
//! alpha phase.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{ms_to_samples, rms, Signal};

/// RMS of the pink component before the alpha rhythm is added.
pub const BACKGROUND_RMS_UV: f64 = 10.0;
pub const ALPHA_HZ: f64 = 10.0;
pub const ALPHA_BAND_HZ: [f64; 2] = [8.0, 12.0];
/// Below this frequency the 1/f spectrum is held flat.
pub const PINK_FLOOR_HZ: f64 = 1.0;
pub const N1_WINDOW_MS: [f64; 2] = [130.0, 200.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateParams {
    pub p1_latency_ms: f64,
    pub n1_latency_ms: f64,
    pub p2_latency_ms: f64,
    pub p1_amp_uv: f64,
    pub n1_amp_uv: f64,
    pub p2_amp_uv: f64,
    /// Gaussian standard deviations of the P1, N1 and P2 bumps.
    pub widths_ms: [f64; 3],
}

impl Default for TemplateParams {
    fn default() -> Self {
        Self {
            p1_latency_ms: 110.0,
            n1_latency_ms: 170.0,
            p2_latency_ms: 230.0,
            p1_amp_uv: 3.0,
            n1_amp_uv: -6.0,
            p2_amp_uv: 3.0,
            widths_ms: [18.0; 3],
        }
    }
}

impl TemplateParams {
    /// Same shape moved so that N1 sits at `n1_ms`.
    pub fn shifted_to(&self, n1_ms: f64) -> Self {
        let d = n1_ms - self.n1_latency_ms;
        Self {
            p1_latency_ms: self.p1_latency_ms + d,
            n1_latency_ms: n1_ms,
            p2_latency_ms: self.p2_latency_ms + d,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSpec {
    pub seed: u64,
    pub duration_ms: f64,
    pub sampling_rate: f64,
    pub onset_ms: f64,
    pub has_erp: bool,
    pub snr_db: f64,
    pub template: TemplateParams,
    /// Power of the 10 Hz rhythm relative to the pink power in 8-12 Hz.
    pub alpha_power: f64,
}

impl Default for TrialSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            duration_ms: 1000.0,
            sampling_rate: 512.0,
            onset_ms: 200.0,
            has_erp: true,
            snr_db: 0.0,
            template: TemplateParams::default(),
            alpha_power: 1.0,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidTrialSpec(msg.into())
}

impl TrialSpec {
    pub fn n_samples(&self) -> usize {
        ms_to_samples(self.duration_ms, self.sampling_rate).round() as usize
    }

    pub fn onset_index(&self) -> usize {
        ms_to_samples(self.onset_ms, self.sampling_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate.is_finite() && self.sampling_rate > 0.0) {
            return Err(invalid(format!("sampling_rate must be positive, got {}", self.sampling_rate)));
        }
        if !(self.duration_ms >= 300.0) {
            return Err(invalid(format!("duration_ms must be at least 300, got {}", self.duration_ms)));
        }
        if !(self.onset_ms >= 0.0 && self.onset_ms < self.duration_ms) {
            return Err(invalid(format!("onset_ms {} outside the trial", self.onset_ms)));
        }
        if !(self.alpha_power.is_finite() && self.alpha_power >= 0.0) {
            return Err(invalid(format!("alpha_power must be non-negative, got {}", self.alpha_power)));
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("snr_db must be finite"));
        }
        if self.has_erp {
            self.validate_template()?;
        }
        Ok(())
    }

    fn validate_template(&self) -> Result<()> {
        let t = &self.template;
        if !(t.p1_latency_ms < t.n1_latency_ms && t.n1_latency_ms < t.p2_latency_ms) {
            return Err(invalid("latencies must satisfy p1 < n1 < p2"));
        }
        let [lo, hi] = N1_WINDOW_MS;
        if !(t.n1_latency_ms >= lo && t.n1_latency_ms <= hi) {
            return Err(invalid(format!(
                "n1_latency_ms {} outside [{lo}, {hi}]",
                t.n1_latency_ms
            )));
        }
        if !(t.n1_amp_uv < 0.0 && t.p1_amp_uv > 0.0 && t.p2_amp_uv > 0.0) {
            return Err(invalid("amplitudes must satisfy n1 < 0 < p1, p2"));
        }
        if t.widths_ms.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("widths must be positive"));
        }
        Ok(())
    }

    /// Template support [P1 - 2 sd, P2 + 2 sd] in ms after onset.
    fn support_ms(&self) -> [f64; 2] {
        let t = &self.template;
        [
            t.p1_latency_ms - 2.0 * t.widths_ms[0],
            t.p2_latency_ms + 2.0 * t.widths_ms[2],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub has_erp: bool,
    pub n1_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTrial {
    pub id: u64,
    pub signal: Signal,
    pub spec: TrialSpec,
    pub truth: Truth,
}

fn uniform(rng: &mut Xoshiro256StarStar) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn gaussian_pair(rng: &mut Xoshiro256StarStar) -> (f64, f64) {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Pink noise plus a 10 Hz rhythm, mean removed. Deterministic per seed.
pub fn make_background(duration_ms: f64, sampling_rate: f64, seed: u64, alpha_power: f64) -> Result<Signal> {
    TrialSpec {
        seed,
        duration_ms,
        sampling_rate,
        has_erp: false,
        alpha_power,
        onset_ms: 0.0,
        ..TrialSpec::default()
    }
    .validate()?;
    let n = ms_to_samples(duration_ms, sampling_rate).round() as usize;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);

    let bins = n / 2;
    let spectrum: Vec<f64> = (1..=bins)
        .map(|k| 1.0 / (k as f64 * sampling_rate / n as f64).max(PINK_FLOOR_HZ))
        .collect();
    let coeffs: Vec<(f64, f64)> = spectrum
        .iter()
        .map(|s| {
            let (a, b) = gaussian_pair(&mut rng);
            (a * s.sqrt(), b * s.sqrt())
        })
        .collect();
    let phase = 2.0 * PI * uniform(&mut rng);

    let table: Vec<(f64, f64)> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).sin_cos()).collect();
    let mut x: Vec<f64> = (0..n)
        .map(|t| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let (s, c) = table[((i + 1) * t) % n];
                    a * c + b * s
                })
                .sum()
        })
        .collect();
    let scale = BACKGROUND_RMS_UV / rms(&x).max(f64::MIN_POSITIVE);
    x.iter_mut().for_each(|v| *v *= scale);

    let total: f64 = spectrum.iter().sum();
    let band: f64 = spectrum
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let f = (i + 1) as f64 * sampling_rate / n as f64;
            (ALPHA_BAND_HZ[0]..=ALPHA_BAND_HZ[1]).contains(&f)
        })
        .map(|(_, s)| s)
        .sum();
    let band_power = BACKGROUND_RMS_UV * BACKGROUND_RMS_UV * band / total.max(f64::MIN_POSITIVE);
    let amp = (2.0 * alpha_power * band_power).sqrt();
    for (t, v) in x.iter_mut().enumerate() {
        *v += amp * (2.0 * PI * ALPHA_HZ * t as f64 / sampling_rate + phase).sin();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    Ok(Signal::new(x, sampling_rate))
}

/// Sum of three Gaussian bumps, time-locked to the onset, over the whole trial.
pub fn make_template(spec: &TrialSpec) -> Result<Vec<f64>> {
    if !spec.has_erp {
        return Err(invalid("template requested for a trial without an ERP"));
    }
    spec.validate()?;
    let t = &spec.template;
    let onset = spec.onset_index() as f64;
    let bumps = [
        (t.p1_latency_ms, t.p1_amp_uv, t.widths_ms[0]),
        (t.n1_latency_ms, t.n1_amp_uv, t.widths_ms[1]),
        (t.p2_latency_ms, t.p2_amp_uv, t.widths_ms[2]),
    ];
    Ok((0..spec.n_samples())
        .map(|i| {
            let ms = (i as f64 - onset) * 1000.0 / spec.sampling_rate;
            bumps
                .iter()
                .map(|&(lat, amp, w)| {
                    let z = (ms - lat) / w;
                    amp * (-0.5 * z * z).exp()
                })
                .sum()
        })
        .collect())
}

/// Background plus (optionally) the template scaled to `snr_db` inside its support.
pub fn make_trial(spec: &TrialSpec) -> Result<LabeledTrial> {
    spec.validate()?;
    let background = make_background(spec.duration_ms, spec.sampling_rate, spec.seed, spec.alpha_power)?;
    let onset = spec.onset_index();
    let mut signal = background.with_onset(onset);
    let mut truth = Truth {
        has_erp: false,
        n1_index: None,
    };
    if spec.has_erp {
        let [lo_ms, hi_ms] = spec.support_ms();
        if spec.onset_ms + hi_ms > spec.duration_ms {
            return Err(Error::TemplateOverflow {
                end_ms: spec.onset_ms + hi_ms,
                duration_ms: spec.duration_ms,
            });
        }
        let template = make_template(spec)?;
        let at = |ms: f64| (onset as f64 + ms_to_samples(ms, spec.sampling_rate).round()).max(0.0) as usize;
        let (lo, hi) = (at(lo_ms), at(hi_ms).min(signal.len() - 1));
        let gain = 10f64.powf(spec.snr_db / 20.0) * rms(&signal.samples[lo..=hi]) / rms(&template[lo..=hi]);
        for (x, t) in signal.samples.iter_mut().zip(&template) {
            *x += gain * t;
        }
        truth = Truth {
            has_erp: true,
            n1_index: Some(at(spec.template.n1_latency_ms)),
        };
    }
    Ok(LabeledTrial {
        id: spec.seed,
        signal,
        spec: spec.clone(),
        truth,
    })
}

/// A reproducible mix of ERP-bearing and background-only trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    /// Template, rates and timing shared by every trial; `seed` and `has_erp` are overridden.
    pub base: TrialSpec,
    pub positives: usize,
    pub negatives: usize,
    /// N1 latency drawn uniformly from this range (ms) for each positive trial.
    pub n1_range_ms: Option<[f64; 2]>,
    pub seed: u64,
}

/// Trials `0..positives` carry the ERP, the rest are background only.
/// Trial seeds and latencies come from one SplitMix64 stream over `seed`.
pub fn make_corpus(spec: &CorpusSpec) -> Result<Vec<LabeledTrial>> {
    let mut stream = SplitMix64::seed_from_u64(spec.seed);
    let total = spec.positives + spec.negatives;
    let mut specs = Vec::with_capacity(total);
    for i in 0..total {
        let mut trial = spec.base.clone();
        trial.seed = stream.next_u64();
        trial.has_erp = i < spec.positives;
        if let (true, Some([lo, hi])) = (trial.has_erp, spec.n1_range_ms) {
            let u = (stream.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            trial.template = trial.template.shifted_to(lo + u * (hi - lo));
        }
        specs.push(trial);
    }
    specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            make_trial(s).map(|mut t| {
                t.id = i as u64;
                t
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_is_deterministic_and_centred() {
        let a = make_background(1000.0, 512.0, 42, 1.0).unwrap();
        let b = make_background(1000.0, 512.0, 42, 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 512);
        let mean = a.samples.iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 0.5);
        assert_ne!(a, make_background(1000.0, 512.0, 43, 1.0).unwrap());
    }

    #[test]
    fn template_minimum_at_n1() {
        let spec = TrialSpec::default();
        let w = make_template(&spec).unwrap();
        let argmin = (0..w.len()).min_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        let expect = spec.onset_index() + (170.0f64 * 0.512).round() as usize;
        assert!((argmin as i64 - expect as i64).abs() <= 1);
    }

    #[test]
    fn template_is_linear_in_amplitudes() {
        let spec = TrialSpec::default();
        let mut scaled = spec.clone();
        scaled.template.p1_amp_uv *= 2.5;
        scaled.template.n1_amp_uv *= 2.5;
        scaled.template.p2_amp_uv *= 2.5;
        let a = make_template(&spec).unwrap();
        let b = make_template(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.5 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn template_needs_an_erp() {
        let spec = TrialSpec {
            has_erp: false,
            ..TrialSpec::default()
        };
        assert!(make_template(&spec).is_err());
    }

    #[test]
    fn negative_trial_is_pure_background() {
        let spec = TrialSpec {
            seed: 9,
            has_erp: false,
            ..TrialSpec::default()
        };
        let t = make_trial(&spec).unwrap();
        let bg = make_background(1000.0, 512.0, 9, 1.0).unwrap();
        assert_eq!(t.signal.samples, bg.samples);
        assert!(!t.truth.has_erp);
        assert_eq!(t.truth.n1_index, None);
    }

    #[test]
    fn snr_zero_means_equal_rms() {
        let spec = TrialSpec {
            seed: 3,
            ..TrialSpec::default()
        };
        let trial = make_trial(&spec).unwrap();
        let bg = make_background(1000.0, 512.0, 3, 1.0).unwrap();
        let (lo, hi) = (102 + 38, 102 + 136);
        let injected: Vec<f64> = trial.signal.samples[lo..=hi]
            .iter()
            .zip(&bg.samples[lo..=hi])
            .map(|(a, b)| a - b)
            .collect();
        let ratio = rms(&injected) / rms(&bg.samples[lo..=hi]);
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn template_past_the_end_overflows() {
        let spec = TrialSpec {
            duration_ms: 400.0,
            ..TrialSpec::default()
        };
        assert!(matches!(make_trial(&spec), Err(Error::TemplateOverflow { .. })));
    }

    #[test]
    fn n1_outside_window_is_rejected() {
        let mut spec = TrialSpec::default();
        spec.template = spec.template.shifted_to(300.0);
        assert!(matches!(spec.validate(), Err(Error::InvalidTrialSpec(_))));
    }

    #[test]
    fn corpus_layout() {
        let c = make_corpus(&CorpusSpec {
            base: TrialSpec::default(),
            positives: 3,
            negatives: 2,
            n1_range_ms: Some([150.0, 190.0]),
            seed: 5,
        })
        .unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c.iter().filter(|t| t.truth.has_erp).count(), 3);
        assert!(c.iter().enumerate().all(|(i, t)| t.id == i as u64));
        for t in &c[..3] {
            let n1 = t.spec.template.n1_latency_ms;
            assert!((150.0..=190.0).contains(&n1));
            assert!((t.spec.template.p1_latency_ms - (n1 - 60.0)).abs() < 1e-9);
        }
    }
}
