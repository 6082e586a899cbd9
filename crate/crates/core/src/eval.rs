//! Confusion-matrix scoring and the calibrate-then-detect benchmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::detector::{Detection, Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::scale::{calibrate_with, ThresholdCalibration};
use crate::signal::{samples_to_ms, Signal};
use crate::synth::{LabeledTrial, Truth};

/// A present detection on a positive trial must place N1 this close to the truth.
pub const LATENCY_GATE_MS: f64 = 30.0;
pub const DEFAULT_CALIBRATION_TRIALS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
    /// tp / (tp + fn); `None` without positive trials.
    pub hit_rate: Option<f64>,
    /// tn / (tn + fp); `None` without negative trials.
    pub rejection_rate: Option<f64>,
    pub overall: Option<f64>,
    /// Sorted ascending.
    pub latency_errors_ms: Vec<f64>,
    pub median_latency_error_ms: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

impl EvalReport {
    pub fn from_counts(tp: usize, fn_: usize, fp: usize, tn: usize, mut latency_errors_ms: Vec<f64>) -> Self {
        latency_errors_ms.sort_by(f64::total_cmp);
        Self {
            tp,
            fn_,
            fp,
            tn,
            hit_rate: ratio(tp, tp + fn_),
            rejection_rate: ratio(tn, tn + fp),
            overall: ratio(tp + tn, tp + fn_ + fp + tn),
            median_latency_error_ms: median(&latency_errors_ms),
            latency_errors_ms,
        }
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    pub fn false_positive_rate(&self) -> Option<f64> {
        ratio(self.fp, self.negatives())
    }
}

fn pct(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |r| format!("{:.*}%", digits, 100.0 * r))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10}{:>16}{:>20}{:>12}",
            "Real", "Predicted ERP", "Predicted non-ERP", "Accuracy"
        )?;
        writeln!(f, "{:<10}{:>16}{:>20}{:>12}", "ERP", self.tp, self.fn_, pct(self.hit_rate, 1))?;
        writeln!(
            f,
            "{:<10}{:>16}{:>20}{:>12}",
            "Non-ERP",
            self.fp,
            self.tn,
            pct(self.rejection_rate, 1)
        )?;
        write!(f, "Overall accuracy: {}", pct(self.overall, 2))
    }
}

/// Confusion counts of `detections` against aligned `truths`.
pub fn score(detections: &[Detection], truths: &[Truth], sampling_rate: f64) -> Result<EvalReport> {
    if detections.len() != truths.len() {
        return Err(Error::LengthMismatch {
            detections: detections.len(),
            truths: truths.len(),
        });
    }
    let (mut tp, mut fn_, mut fp, mut tn) = (0, 0, 0, 0);
    let mut errors = Vec::new();
    for (d, t) in detections.iter().zip(truths) {
        match (t.has_erp, d.present) {
            (true, true) => {
                let err = match (d.n1, t.n1_index) {
                    (Some(n1), Some(truth)) => {
                        Some(samples_to_ms((n1.index as f64 - truth as f64).abs(), sampling_rate))
                    }
                    _ => None,
                };
                match err {
                    Some(e) if e <= LATENCY_GATE_MS => {
                        tp += 1;
                        errors.push(e);
                    }
                    _ => fn_ += 1,
                }
            }
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fn_, fp, tn, errors))
}

/// Everything produced by one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    /// Configuration actually used, with the calibrated threshold.
    pub config: DetectorConfig,
    pub calibration: ThresholdCalibration,
    pub calibration_ids: Vec<u64>,
    /// Evaluation trials with their detections, in ascending id order.
    pub results: Vec<(u64, Detection)>,
    pub report: EvalReport,
}

/// Calibrates on the `calibration_trials` positive trials with the smallest
/// ids, then detects and scores on every remaining trial.
pub fn benchmark(corpus: &[LabeledTrial], config: &DetectorConfig, calibration_trials: usize) -> Result<BenchmarkRun> {
    if corpus.is_empty() {
        return Err(Error::CorpusTooSmall {
            available: 0,
            required: calibration_trials,
        });
    }
    let rate = corpus[0].signal.sampling_rate;
    if corpus.iter().any(|t| t.signal.sampling_rate != rate) {
        return Err(Error::InvalidArgument("corpus mixes sampling rates".into()));
    }
    let mut ordered: Vec<&LabeledTrial> = corpus.iter().collect();
    ordered.sort_by_key(|t| t.id);

    let positives: Vec<&LabeledTrial> = ordered.iter().copied().filter(|t| t.truth.has_erp).collect();
    if positives.len() < calibration_trials || ordered.len() <= calibration_trials {
        return Err(Error::CorpusTooSmall {
            available: positives.len(),
            required: calibration_trials,
        });
    }
    let held_out = &positives[..calibration_trials];
    let calibration_ids: Vec<u64> = held_out.iter().map(|t| t.id).collect();

    let detector = Detector::new(config.clone(), rate)?;
    let calib_signals: Vec<Signal> = held_out.iter().map(|t| t.signal.clone()).collect();
    let calibration = calibrate_with(&detector, &calib_signals)?;
    let detector = detector.with_c_tau(calibration.c_tau)?;

    let evaluation: Vec<&LabeledTrial> = ordered
        .iter()
        .copied()
        .filter(|t| calibration_ids.binary_search(&t.id).is_err())
        .collect();
    let detections: Vec<Detection> = evaluation
        .par_iter()
        .map(|t| detector.detect(&t.signal))
        .collect::<Result<_>>()?;
    let truths: Vec<Truth> = evaluation.iter().map(|t| t.truth).collect();
    let report = score(&detections, &truths, rate)?;
    Ok(BenchmarkRun {
        config: detector.config().clone(),
        calibration,
        calibration_ids,
        results: evaluation.iter().map(|t| t.id).zip(detections).collect(),
        report,
    })
}

/// [`benchmark`] with the default 20 held-out calibration trials.
pub fn run_benchmark(corpus: &[LabeledTrial], config: &DetectorConfig) -> Result<EvalReport> {
    benchmark(corpus, config, DEFAULT_CALIBRATION_TRIALS).map(|run| run.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Peak;

    fn present_at(n1: usize) -> Detection {
        let peak = |i| Peak {
            index: i,
            latency_ms: 0.0,
            amplitude: 0.0,
        };
        Detection {
            present: true,
            start_index: n1 - 40,
            end_index: n1 + 40,
            p1: Some(peak(n1 - 30)),
            n1: Some(peak(n1)),
            p2: Some(peak(n1 + 30)),
            best_scale: 65.0,
            pair: None,
            pair_rank: Some(0),
            retried: false,
        }
    }

    #[test]
    fn table_rates() {
        let r = EvalReport::from_counts(580, 20, 84, 516, vec![]);
        assert!((r.hit_rate.unwrap() - 0.96667).abs() < 1e-4);
        assert!((r.rejection_rate.unwrap() - 0.86).abs() < 1e-12);
        assert!((r.overall.unwrap() - 0.913333).abs() < 1e-5);
        let text = r.to_string();
        assert!(text.contains("96.7%") && text.contains("86.0%") && text.contains("91.33%"));
    }

    #[test]
    fn all_absent_all_negative() {
        let d = vec![Detection::absent(65.0, false); 5];
        let t = vec![
            Truth {
                has_erp: false,
                n1_index: None
            };
            5
        ];
        let r = score(&d, &t, 512.0).unwrap();
        assert_eq!(r.overall, Some(1.0));
        assert_eq!(r.fp, 0);
        assert_eq!(r.hit_rate, None);
    }

    #[test]
    fn latency_gate() {
        let truth = Truth {
            has_erp: true,
            n1_index: Some(200),
        };
        let near = present_at(210);
        let far = present_at(200 + 16);
        let r = score(&[near, far], &[truth, truth], 512.0).unwrap();
        assert_eq!((r.tp, r.fn_), (1, 1));
        assert!((r.latency_errors_ms[0] - 10.0 / 0.512).abs() < 1e-9);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(matches!(
            score(&[Detection::absent(1.0, false)], &[], 512.0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tiny_corpus_cannot_split() {
        use crate::synth::{make_corpus, CorpusSpec, TrialSpec};
        let corpus = make_corpus(&CorpusSpec {
            base: TrialSpec::default(),
            positives: 5,
            negatives: 5,
            n1_range_ms: None,
            seed: 1,
        })
        .unwrap();
        assert!(matches!(
            run_benchmark(&corpus, &DetectorConfig::default()),
            Err(Error::CorpusTooSmall { .. })
        ));
    }
}
