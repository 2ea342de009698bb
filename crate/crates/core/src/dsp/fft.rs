use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::signal::{IqSignal, RealSignal};
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT (unnormalized).
pub fn fft_forward(buf: &mut [Complex64]) {
    if buf.len() < 2 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place inverse DFT, scaled by 1/N so that it inverts [`fft_forward`].
pub fn fft_inverse(buf: &mut [Complex64]) {
    if buf.len() < 2 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Zeroes the negative-frequency half of a spectrum and doubles the positive half.
/// DC and (for even lengths) the Nyquist bin keep unit weight.
pub(crate) fn project_positive(spectrum: &mut [Complex64]) {
    let n = spectrum.len();
    let half = n / 2;
    for (k, v) in spectrum.iter_mut().enumerate().skip(1) {
        if k < half || (k == half && n % 2 == 1) {
            *v *= 2.0;
        } else if k > half {
            *v = Complex64::new(0.0, 0.0);
        }
    }
}

/// Minimum input length accepted by [`analytic`].
pub const ANALYTIC_MIN_LEN: usize = 64;

/// Analytic signal by the frequency-domain method: the real part equals the input
/// and the negative-frequency DFT bins are exactly zero.
pub fn analytic(signal: &RealSignal) -> Result<IqSignal> {
    if signal.len() < ANALYTIC_MIN_LEN {
        return Err(Error::param(format!(
            "analytic signal needs at least {ANALYTIC_MIN_LEN} samples, got {}",
            signal.len()
        )));
    }
    let mut buf: Vec<Complex64> = signal
        .samples()
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    fft_forward(&mut buf);
    project_positive(&mut buf);
    fft_inverse(&mut buf);
    Ok(IqSignal::from_parts(buf, signal.sample_rate_hz()))
}

/// Removes negative-frequency content from a complex signal (block DFT projection).
pub fn remove_negative_frequencies(signal: &IqSignal) -> IqSignal {
    let mut buf = signal.samples().to_vec();
    if buf.len() >= 2 {
        fft_forward(&mut buf);
        let n = buf.len();
        for v in buf.iter_mut().skip(n / 2 + 1) {
            *v = Complex64::new(0.0, 0.0);
        }
        fft_inverse(&mut buf);
    }
    IqSignal::from_parts(buf, signal.sample_rate_hz())
}

/// Phasor `exp(i·2π·freq·n/rate)` evaluated from the absolute sample index, so the
/// result never depends on how a stream was split into blocks.
#[inline]
pub(crate) fn phasor(freq_hz: f64, rate_hz: f64, n: u64) -> Complex64 {
    let cycles = (freq_hz * n as f64 / rate_hz).rem_euclid(1.0);
    Complex64::from_polar(1.0, 2.0 * PI * cycles)
}

/// Frequency translation by a complex exponential.
pub fn mix(signal: &IqSignal, shift_hz: f64) -> Result<IqSignal> {
    let rate = signal.sample_rate_hz() as f64;
    if !shift_hz.is_finite() || shift_hz.abs() >= rate / 2.0 {
        return Err(Error::param(format!(
            "mix shift {shift_hz} Hz outside (-{0}, {0}) Hz",
            rate / 2.0
        )));
    }
    Ok(IqSignal::from_parts(mix_from(signal.samples(), shift_hz, rate, 0), signal.sample_rate_hz()))
}

pub(crate) fn mix_from(samples: &[Complex64], shift_hz: f64, rate_hz: f64, first_index: u64) -> Vec<Complex64> {
    if shift_hz == 0.0 {
        return samples.to_vec();
    }
    samples
        .iter()
        .enumerate()
        .map(|(i, &s)| s * phasor(shift_hz, rate_hz, first_index + i as u64))
        .collect()
}

/// One-sided magnitude spectrum peak, returned as (frequency Hz, magnitude).
/// Test and diagnostics helper.
pub fn peak_frequency(samples: &[f64], rate_hz: f64) -> (f64, f64) {
    let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    fft_forward(&mut buf);
    let n = buf.len();
    let (k, m) = buf[..=n / 2]
        .iter()
        .enumerate()
        .map(|(k, v)| (k, v.norm()))
        .fold((0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
    (k as f64 * rate_hz / n as f64, m)
}
