use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::{fft_forward, fft_inverse};
use super::signal::{IqSignal, RealSignal};
use crate::error::{Error, Result};

/// Parameters a filter was designed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirDesign {
    /// Passband edge.
    pub cutoff_hz: f64,
    /// Width of the transition band; the stopband starts at `cutoff_hz + transition_hz`.
    pub transition_hz: f64,
    pub stopband_db: f64,
    pub sample_rate_hz: f64,
}

/// Linear-phase FIR filter with an odd number of symmetric taps.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    design: FirDesign,
}

impl FirFilter {
    pub fn from_taps(taps: Vec<f64>, design: FirDesign) -> Result<Self> {
        if taps.len() < 3 || taps.len().is_multiple_of(2) {
            return Err(Error::param(format!(
                "FIR filter needs an odd tap count >= 3, got {}",
                taps.len()
            )));
        }
        Ok(Self { taps, design })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn design(&self) -> &FirDesign {
        &self.design
    }

    /// Group delay in samples.
    pub fn delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Scales every tap, e.g. to give an interpolation filter a gain of L.
    pub fn scaled(mut self, gain: f64) -> Self {
        for t in &mut self.taps {
            *t *= gain;
        }
        self
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.design.sample_rate_hz;
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| h * Complex64::from_polar(1.0, -w * n as f64))
            .sum()
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

// The Kaiser length estimate is occasionally a fraction of a dB short.
const DESIGN_MARGIN_DB: f64 = 3.0;

/// Kaiser-windowed sinc lowpass. Passband ends at `cutoff_hz`, stopband starts at
/// `cutoff_hz + transition_hz`; DC gain is exactly one.
pub fn design_lowpass(
    cutoff_hz: f64,
    transition_hz: f64,
    stopband_db: f64,
    sample_rate_hz: f64,
) -> Result<FirFilter> {
    let valid = cutoff_hz.is_finite()
        && transition_hz.is_finite()
        && sample_rate_hz.is_finite()
        && cutoff_hz > 0.0
        && transition_hz > 0.0
        && cutoff_hz + transition_hz < sample_rate_hz / 2.0;
    if !valid {
        return Err(Error::param(format!(
            "invalid band edges: cutoff {cutoff_hz} Hz + transition {transition_hz} Hz at {sample_rate_hz} Hz"
        )));
    }
    if !(stopband_db >= 20.0) {
        return Err(Error::param(format!(
            "stopband attenuation must be >= 20 dB, got {stopband_db}"
        )));
    }
    let atten = stopband_db + DESIGN_MARGIN_DB;
    let dw = 2.0 * PI * transition_hz / sample_rate_hz;
    let mut n = ((atten - 7.95) / (2.285 * dw)).ceil() as usize + 1;
    if n.is_multiple_of(2) {
        n += 1;
    }
    let n = n.max(3);
    let beta = kaiser_beta(atten);
    let m = (n - 1) as f64 / 2.0;
    let fc = (cutoff_hz + transition_hz / 2.0) / sample_rate_hz;
    let i0b = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 - m;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            let r = t / m;
            let win = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
            sinc * win
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= dc;
    }
    FirFilter::from_taps(
        taps,
        FirDesign {
            cutoff_hz,
            transition_hz,
            stopband_db,
            sample_rate_hz,
        },
    )
}

/// Highpass by spectral inversion of a lowpass: stopband below `stop_hz`,
/// passband above `stop_hz + transition_hz`.
pub fn design_highpass(
    stop_hz: f64,
    transition_hz: f64,
    stopband_db: f64,
    sample_rate_hz: f64,
) -> Result<FirFilter> {
    let lp = design_lowpass(stop_hz, transition_hz, stopband_db, sample_rate_hz)?;
    let center = lp.delay();
    let mut taps: Vec<f64> = lp.taps.iter().map(|t| -t).collect();
    taps[center] += 1.0;
    FirFilter::from_taps(taps, lp.design)
}

/// Above this tap count, convolution goes through the FFT.
const DIRECT_MAX_TAPS: usize = 96;

/// Zero-padded linear convolution with the filter's group delay removed, so the
/// output has the input's length and timeline.
pub(crate) fn convolve_aligned(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let c = (taps.len() - 1) / 2;
    if taps.len() <= DIRECT_MAX_TAPS {
        return (0..n)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                // y[i] = sum_j h[j] x[i + c - j]
                let j_lo = (i + c).saturating_sub(n - 1);
                let j_hi = (i + c).min(taps.len() - 1);
                for j in j_lo..=j_hi {
                    acc += x[i + c - j] * taps[j];
                }
                acc
            })
            .collect();
    }
    let full = n + taps.len() - 1;
    let size = full.next_power_of_two();
    let mut hx = vec![Complex64::new(0.0, 0.0); size];
    for (d, &t) in hx.iter_mut().zip(taps) {
        *d = Complex64::new(t, 0.0);
    }
    let mut xx = vec![Complex64::new(0.0, 0.0); size];
    xx[..n].copy_from_slice(x);
    fft_forward(&mut hx);
    fft_forward(&mut xx);
    for (a, b) in xx.iter_mut().zip(&hx) {
        *a *= b;
    }
    fft_inverse(&mut xx);
    xx[c..c + n].to_vec()
}

/// Signals that can be passed through an FIR filter.
pub trait Filterable: Sized {
    fn filtered(&self, f: &FirFilter) -> Result<Self>;
}

impl Filterable for RealSignal {
    fn filtered(&self, f: &FirFilter) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::param("cannot filter an empty signal"));
        }
        let x: Vec<Complex64> = self.samples().iter().map(|&s| Complex64::new(s, 0.0)).collect();
        let y = convolve_aligned(&x, f.taps());
        Ok(RealSignal::from_parts(
            y.into_iter().map(|v| v.re).collect(),
            self.sample_rate_hz(),
        ))
    }
}

impl Filterable for IqSignal {
    fn filtered(&self, f: &FirFilter) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::param("cannot filter an empty signal"));
        }
        Ok(IqSignal::from_parts(
            convolve_aligned(self.samples(), f.taps()),
            self.sample_rate_hz(),
        ))
    }
}

/// Applies `f` to `signal`, preserving its length and time alignment.
pub fn filter<S: Filterable>(signal: &S, f: &FirFilter) -> Result<S> {
    signal.filtered(f)
}
