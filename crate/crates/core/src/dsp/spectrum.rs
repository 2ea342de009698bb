use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::fft_forward;
use super::signal::RealSignal;
use crate::error::{Error, Result};

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch power spectral density estimate with Hann windows and 50% overlap.
/// Returns one-sided (frequency Hz, power density) pairs.
pub fn welch_psd(signal: &RealSignal, segment: usize) -> Result<Vec<(f64, f64)>> {
    if segment < 2 || signal.len() < segment {
        return Err(Error::param(format!(
            "welch segment {segment} invalid for {} samples",
            signal.len()
        )));
    }
    let w = hann(segment);
    let wss: f64 = w.iter().map(|v| v * v).sum();
    let hop = segment / 2;
    let rate = signal.sample_rate_hz() as f64;
    let mut acc = vec![0.0; segment / 2 + 1];
    let mut count = 0usize;
    let x = signal.samples();
    let mut buf = vec![Complex64::new(0.0, 0.0); segment];
    let mut start = 0;
    while start + segment <= x.len() {
        for (b, (s, wv)) in buf.iter_mut().zip(x[start..start + segment].iter().zip(&w)) {
            *b = Complex64::new(s * wv, 0.0);
        }
        fft_forward(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let scale = 1.0 / (count as f64 * wss * rate);
    Ok(acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || k == segment / 2 { 1.0 } else { 2.0 };
            (k as f64 * rate / segment as f64, p * scale * one_sided)
        })
        .collect())
}

/// Band containing `fraction` of the total power, with the excluded power split
/// evenly between the two tails. Returns (low Hz, high Hz).
pub fn occupied_band(signal: &RealSignal, fraction: f64) -> Result<(f64, f64)> {
    let psd = welch_psd(signal, 1024.min(signal.len()))?;
    let total: f64 = psd.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return Err(Error::param("occupied band of a silent signal"));
    }
    let tail = (1.0 - fraction) / 2.0 * total;
    let mut cum = 0.0;
    let mut lo = psd[0].0;
    for &(f, p) in &psd {
        cum += p;
        if cum >= tail {
            lo = f;
            break;
        }
    }
    let mut cum = 0.0;
    let mut hi = psd[psd.len() - 1].0;
    for &(f, p) in psd.iter().rev() {
        cum += p;
        if cum >= tail {
            hi = f;
            break;
        }
    }
    Ok((lo, hi))
}
