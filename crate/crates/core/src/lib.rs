//! Single-trial detection of triphasic event-related potentials (P1-N1-P2,
//! e.g. the face-sensitive N170) from the asymmetric response of a
//! continuous wavelet transform.
//!
//! The pipeline lowpasses a trial, transforms it over a band of scales,
//! picks an analysis scale, ranks negative-then-positive coefficient pairs
//! by energy under a Gaussian prior on their spacing, and confirms the
//! best pair by finding P1, N1 and P2 in the signal itself.

pub mod detector;
pub mod error;
pub mod eval;
pub mod io;
pub mod preprocess;
pub mod scale;
pub mod signal;
pub mod synth;
pub mod wavelet;

pub use detector::{detect, Detection, Detector, DetectorConfig};
pub use error::{Error, Result};
pub use eval::{run_benchmark, score, EvalReport};
pub use scale::{calibrate_threshold, ThresholdCalibration};
pub use signal::Signal;
pub use synth::{make_background, make_template, make_trial, LabeledTrial, TrialSpec};
pub use wavelet::{cwt, load_wavelet, CwtMatrix, WaveletSpec};
