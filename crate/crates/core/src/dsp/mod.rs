//! Signal types and numerical primitives shared by every other module.

pub mod fft;
pub mod fir;
pub mod resample;
pub mod signal;
pub mod spectrum;

pub use fft::{analytic, mix, remove_negative_frequencies};
pub use fir::{design_highpass, design_lowpass, filter, FirDesign, FirFilter, Filterable};
pub use resample::{rate_change_filter, resample, RateStage, RESAMPLE_STOPBAND_DB};
pub use signal::{power, IqSignal, Power, RealSignal};
