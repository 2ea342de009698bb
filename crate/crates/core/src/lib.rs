//! Synthesis, channel simulation and spectrogram classification of amateur-radio
//! digital operating modes.
//!
//! The crate is organised bottom-up:
//!
//! * [`dsp`] holds the signal types and primitives (FIR design, analytic signal,
//!   mixing, integer-factor resampling).
//! * [`modes`] is the catalog of 98 operating-mode parameterisations over 17
//!   operating modes, with waveform synthesizers.
//! * [`channel`] implements the augmentation / impairment pipeline.
//! * [`rx`] simulates USB transmission into a wideband I/Q stream and the
//!   channelizer that brings it back to 6 kHz audio.
//! * [`features`] turns audio windows into spectrogram tensors.
//! * [`classifier`] is a small CNN trained from scratch with SGD.
//! * [`eval`] runs the windowed evaluation protocol, the duration × FFT-size
//!   grid, augmentation ablations and SNR sweeps.
//! * [`io`] and [`config`] define the on-disk formats and run configuration.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod classifier;
pub mod config;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod modes;
pub mod rx;
pub mod seeds;

mod parallel;

pub use error::{Error, Result};

/// Audio-frequency sample rate used throughout.
pub const AF_RATE_HZ: u32 = 6000;
