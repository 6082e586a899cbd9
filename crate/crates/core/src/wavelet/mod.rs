//! Filter banks, mother-wavelet sampling, the CWT and filter phase analysis.

pub mod cascade;
pub mod cwt;
pub mod filters;
pub mod phase;

pub use cascade::{cascade_evaluate, iterate_difference, SampledWavelet, DEFAULT_ITERATIONS};
pub use cwt::{cwt, scale_grid, Cwt, CwtMatrix, ScaleKernel};
pub use filters::{load_wavelet, WaveletSpec, SUPPORTED};
pub use phase::{
    asymmetry_shift, centre_frequency, group_delay, group_delay_at, group_delay_of_taps,
    GroupDelayProfile,
};
