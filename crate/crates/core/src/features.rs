//! Spectrograms and classifier input tensors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classifier::Tensor;
use crate::dsp::fft::fft_forward;
use crate::dsp::spectrum::hann;
use crate::dsp::RealSignal;
use crate::error::{Error, Result};
use crate::AF_RATE_HZ;

/// Transform lengths of the evaluation grid.
pub const GRID_N_FFT: [usize; 3] = [64, 128, 256];
/// Window durations of the evaluation grid, seconds.
pub const GRID_DURATIONS_S: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
pub const DEFAULT_LOG_FLOOR_DB: f64 = -80.0;

/// STFT settings. Hann window, hop of half the transform length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub duration_s: f64,
    pub log_floor_db: f64,
}

impl SpectrogramConfig {
    pub fn new(n_fft: usize, duration_s: f64) -> Result<Self> {
        let cfg = Self {
            n_fft,
            hop: n_fft / 2,
            duration_s,
            log_floor_db: DEFAULT_LOG_FLOOR_DB,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 4 || !self.n_fft.is_power_of_two() {
            return Err(Error::param(format!("n_fft must be a power of two, got {}", self.n_fft)));
        }
        if self.hop != self.n_fft / 2 {
            return Err(Error::param(format!("hop must be n_fft/2, got {}", self.hop)));
        }
        if !(self.duration_s > 0.0) || self.window_len() < self.n_fft {
            return Err(Error::param(format!(
                "{} s at {AF_RATE_HZ} Hz is shorter than n_fft {}",
                self.duration_s, self.n_fft
            )));
        }
        if !self.log_floor_db.is_finite() {
            return Err(Error::param("log floor must be finite"));
        }
        Ok(())
    }

    /// Window length in samples at the AF rate.
    pub fn window_len(&self) -> usize {
        (self.duration_s * AF_RATE_HZ as f64).round() as usize
    }

    pub fn freq_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Frame count for `n` input samples.
    pub fn frames_for(&self, n: usize) -> usize {
        if n < self.n_fft {
            0
        } else {
            (n - self.n_fft) / self.hop + 1
        }
    }
}

/// Log-magnitude STFT in dB, stored `[freq_bins × frames]` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    values: Vec<f64>,
    freq_bins: usize,
    frames: usize,
    config: SpectrogramConfig,
}

impl Spectrogram {
    pub fn new(values: Vec<f64>, freq_bins: usize, frames: usize, config: SpectrogramConfig) -> Result<Self> {
        if values.len() != freq_bins * frames || freq_bins == 0 || frames == 0 {
            return Err(Error::param(format!(
                "{} values do not fill {freq_bins} x {frames}",
                values.len()
            )));
        }
        Ok(Self {
            values,
            freq_bins,
            frames,
            config,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn freq_bins(&self) -> usize {
        self.freq_bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn config(&self) -> &SpectrogramConfig {
        &self.config
    }

    pub fn at(&self, bin: usize, frame: usize) -> f64 {
        self.values[bin * self.frames + frame]
    }
}

fn check_input(signal: &RealSignal, cfg: &SpectrogramConfig) -> Result<()> {
    if cfg.n_fft < 4 || !cfg.n_fft.is_power_of_two() || cfg.hop == 0 {
        return Err(Error::param(format!("bad STFT geometry n_fft {} hop {}", cfg.n_fft, cfg.hop)));
    }
    if signal.sample_rate_hz() != AF_RATE_HZ {
        return Err(Error::param(format!(
            "spectrograms are defined at {AF_RATE_HZ} Hz, got {}",
            signal.sample_rate_hz()
        )));
    }
    if signal.len() < cfg.n_fft {
        return Err(Error::param(format!(
            "{} samples is shorter than n_fft {}",
            signal.len(),
            cfg.n_fft
        )));
    }
    Ok(())
}

// One-sided complex STFT, frame-major.
fn stft(signal: &RealSignal, cfg: &SpectrogramConfig) -> Vec<Vec<Complex64>> {
    let n = cfg.n_fft;
    let w = hann(n);
    let frames = cfg.frames_for(signal.len());
    let x = signal.samples();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    (0..frames)
        .map(|f| {
            let seg = &x[f * cfg.hop..f * cfg.hop + n];
            for ((b, &s), &wi) in buf.iter_mut().zip(seg).zip(&w) {
                *b = Complex64::new(s * wi, 0.0);
            }
            fft_forward(&mut buf);
            buf[..n / 2 + 1].to_vec()
        })
        .collect()
}

/// Magnitude spectrogram in dB relative to a full-scale sine: magnitudes are
/// scaled by `2 / Σw`, so a sine of amplitude A peaks at `20·log10(A)`. Values
/// below the floor are clipped to it.
pub fn spectrogram(signal: &RealSignal, cfg: &SpectrogramConfig) -> Result<Spectrogram> {
    check_input(signal, cfg)?;
    let frames = stft(signal, cfg);
    let bins = cfg.freq_bins();
    let scale = 2.0 / hann(cfg.n_fft).iter().sum::<f64>();
    let mut values = vec![0.0; bins * frames.len()];
    for (f, spec) in frames.iter().enumerate() {
        for (k, c) in spec.iter().enumerate() {
            let mag = c.norm() * scale;
            let db = if mag > 0.0 { 20.0 * mag.log10() } else { f64::NEG_INFINITY };
            values[k * frames.len() + f] = db.max(cfg.log_floor_db);
        }
    }
    let n_frames = frames.len();
    Spectrogram::new(values, bins, n_frames, *cfg)
}

/// Linear one-sided power per frame, `[frames][freq_bins]`, scaled so each
/// frame sums to the energy of the windowed segment `Σ (x·w)²`.
pub fn power_spectrogram(signal: &RealSignal, cfg: &SpectrogramConfig) -> Result<Vec<Vec<f64>>> {
    check_input(signal, cfg)?;
    let n = cfg.n_fft;
    Ok(stft(signal, cfg)
        .into_iter()
        .map(|spec| {
            spec.iter()
                .enumerate()
                .map(|(k, c)| {
                    let dup = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                    dup * c.norm_sqr() / n as f64
                })
                .collect()
        })
        .collect())
}

/// Classifier input `[3 × freq_bins × frames]`: the spectrogram min-max
/// normalized to [0, 1] and replicated into three identical channels. A
/// constant spectrogram maps to 0.5 everywhere.
pub fn to_model_input(spec: &Spectrogram) -> Tensor {
    let v = spec.values();
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let span = hi - lo;
    let norm: Vec<f64> = if span > 0.0 {
        v.iter().map(|&x| (x - lo) / span).collect()
    } else {
        vec![0.5; v.len()]
    };
    let mut data = Vec::with_capacity(norm.len() * 3);
    for _ in 0..3 {
        data.extend_from_slice(&norm);
    }
    Tensor::new(vec![3, spec.freq_bins(), spec.frames()], data).expect("shape matches data")
}

/// Spectrogram followed by [`to_model_input`].
pub fn featurize(signal: &RealSignal, cfg: &SpectrogramConfig) -> Result<Tensor> {
    Ok(to_model_input(&spectrogram(signal, cfg)?))
}

/// Number of windows of `duration_s` at `shift_s` that fit in `n` samples.
pub fn window_count(n: usize, rate_hz: u32, duration_s: f64, shift_s: f64) -> Result<usize> {
    let (d, s) = window_geometry(rate_hz, duration_s, shift_s)?;
    if d > n {
        return Err(Error::param(format!(
            "window of {d} samples exceeds signal of {n}"
        )));
    }
    Ok((n - d) / s + 1)
}

fn window_geometry(rate_hz: u32, duration_s: f64, shift_s: f64) -> Result<(usize, usize)> {
    if !(duration_s > 0.0) || !(shift_s > 0.0) || !duration_s.is_finite() || !shift_s.is_finite() {
        return Err(Error::param(format!(
            "window duration {duration_s} s and shift {shift_s} s must be positive"
        )));
    }
    let d = (duration_s * rate_hz as f64).round() as usize;
    let s = (shift_s * rate_hz as f64).round() as usize;
    if d == 0 || s == 0 {
        return Err(Error::param("window or shift rounds to zero samples"));
    }
    Ok((d, s))
}

/// Sliding windows: `floor((T − d)/s) + 1` slices, each exactly `duration_s` long.
pub fn window_slices(signal: &RealSignal, duration_s: f64, shift_s: f64) -> Result<Vec<RealSignal>> {
    let count = window_count(signal.len(), signal.sample_rate_hz(), duration_s, shift_s)?;
    let (d, s) = window_geometry(signal.sample_rate_hz(), duration_s, shift_s)?;
    (0..count).map(|i| signal.slice(i * s, d)).collect()
}
