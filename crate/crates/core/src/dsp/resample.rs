use num_complex::Complex64;

use super::fir::{design_lowpass, FirFilter};
use super::signal::IqSignal;
use crate::error::{Error, Result};

/// Stopband attenuation of automatically designed rate-change filters.
pub const RESAMPLE_STOPBAND_DB: f64 = 70.0;

/// Integer-factor rate change (upsample by `up`, filter, downsample by `down`)
/// that processes a stream block by block.
///
/// Output sample `m` is `sum_j h[j] * u[m*down + j - c]` where `u` is the input
/// zero-stuffed by `up` and `c` the filter delay, so outputs are time-aligned
/// with the input. Every output is computed by the same loop regardless of how
/// the input was split into blocks, which makes results bit-identical across
/// block sizes.
#[derive(Debug, Clone)]
pub struct RateStage {
    up: usize,
    down: usize,
    taps: Vec<f64>,
    center: usize,
    buf: Vec<Complex64>,
    // Absolute input index of buf[0].
    base: usize,
    received: usize,
    next_out: usize,
}

impl RateStage {
    pub fn new(up: usize, down: usize, filter: &FirFilter) -> Result<Self> {
        if up == 0 || down == 0 {
            return Err(Error::param("rate factors must be positive"));
        }
        Ok(Self {
            up,
            down,
            taps: filter.taps().to_vec(),
            center: filter.delay(),
            buf: Vec::new(),
            base: 0,
            received: 0,
            next_out: 0,
        })
    }

    pub fn up(&self) -> usize {
        self.up
    }

    pub fn down(&self) -> usize {
        self.down
    }

    fn output(&self, m: usize) -> Complex64 {
        let l = self.up as i64;
        let c = self.center as i64;
        let p0 = (m * self.down) as i64 - c;
        // first j with (p0 + j) divisible by up and p0 + j >= 0
        // first tap index landing on a non-stuffed, non-negative input sample
        let mut j = if p0 >= 0 { (l - p0 % l) % l } else { -p0 };
        let mut acc = Complex64::new(0.0, 0.0);
        let n_taps = self.taps.len() as i64;
        while j < n_taps {
            let xi = ((p0 + j) / l) as usize;
            if xi >= self.received {
                break;
            }
            acc += self.buf[xi - self.base] * self.taps[j as usize];
            j += l;
        }
        acc
    }

    // Highest input index needed by output m.
    fn last_needed(&self, m: usize) -> usize {
        (m * self.down + self.center) / self.up
    }

    fn drain_consumed(&mut self) {
        let p = (self.next_out * self.down) as i64 - self.center as i64;
        let keep_from = if p <= 0 { 0 } else { p as usize / self.up };
        if keep_from > self.base + 4096 {
            let drop = keep_from - self.base;
            self.buf.drain(..drop);
            self.base = keep_from;
        }
    }

    /// Feeds a block, appending every output that is now fully determined.
    pub fn push(&mut self, input: &[Complex64], out: &mut Vec<Complex64>) {
        self.buf.extend_from_slice(input);
        self.received += input.len();
        while self.received > 0 && self.last_needed(self.next_out) < self.received {
            out.push(self.output(self.next_out));
            self.next_out += 1;
        }
        self.drain_consumed();
    }

    /// Flushes the remaining outputs, treating samples past the end as zero.
    /// The total output count is `ceil(received * up / down)`.
    pub fn finish(&mut self, out: &mut Vec<Complex64>) {
        let total = (self.received * self.up).div_ceil(self.down);
        while self.next_out < total {
            out.push(self.output(self.next_out));
            self.next_out += 1;
        }
    }

    /// Whole-signal convenience wrapper.
    pub fn process_all(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity((input.len() * self.up).div_ceil(self.down));
        self.push(input, &mut out);
        self.finish(&mut out);
        out
    }
}

/// Anti-alias / anti-image filter for an integer rate change. The passband covers
/// 80% of the lower Nyquist frequency and the stopband starts at it, so images and
/// aliases land at least 70 dB down.
pub fn rate_change_filter(high_rate_hz: f64, low_rate_hz: f64) -> Result<FirFilter> {
    let nyq = low_rate_hz / 2.0;
    design_lowpass(0.8 * nyq, 0.2 * nyq, RESAMPLE_STOPBAND_DB, high_rate_hz)
}

/// Integer-ratio resampling of a complex signal. Non-integer ratios are rejected.
pub fn resample(signal: &IqSignal, new_rate_hz: u32) -> Result<IqSignal> {
    let old = signal.sample_rate_hz();
    if new_rate_hz == 0 {
        return Err(Error::param("target rate must be positive"));
    }
    if new_rate_hz == old {
        return Ok(signal.clone());
    }
    let (up, down) = if new_rate_hz > old && new_rate_hz.is_multiple_of(old) {
        ((new_rate_hz / old) as usize, 1)
    } else if old > new_rate_hz && old.is_multiple_of(new_rate_hz) {
        (1, (old / new_rate_hz) as usize)
    } else {
        return Err(Error::param(format!(
            "non-integer rate ratio {old} Hz -> {new_rate_hz} Hz"
        )));
    };
    let high = old.max(new_rate_hz) as f64;
    let low = old.min(new_rate_hz) as f64;
    let f = rate_change_filter(high, low)?.scaled(up as f64);
    let mut stage = RateStage::new(up, down, &f)?;
    Ok(IqSignal::from_parts(stage.process_all(signal.samples()), new_rate_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fft::{fft_forward, phasor};

    fn ctone(freq: f64, rate: u32, n: usize) -> IqSignal {
        IqSignal::new((0..n).map(|i| phasor(freq, rate as f64, i as u64)).collect(), rate).unwrap()
    }

    fn peak_bin(x: &[Complex64]) -> (usize, f64) {
        let mut b = x.to_vec();
        fft_forward(&mut b);
        b.iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm()))
            .fold((0, -1.0), |a, c| if c.1 > a.1 { c } else { a })
    }

    #[test]
    fn decimate_by_two_keeps_tone() {
        let x = ctone(100.0, 12_000, 24_000);
        let y = resample(&x, 6000).unwrap();
        assert_eq!(y.len(), 12_000);
        let (k, _) = peak_bin(y.samples());
        assert_eq!(k, 200); // 100 Hz at 0.5 Hz/bin
    }

    #[test]
    fn same_rate_is_identity_and_bad_ratio_rejected() {
        let x = ctone(100.0, 12_000, 100);
        assert_eq!(resample(&x, 12_000).unwrap(), x);
        assert!(resample(&x, 7000).is_err());
    }

    #[test]
    fn interpolation_preserves_amplitude() {
        let x = ctone(700.0, 6000, 6000);
        let y = resample(&x, 18_000).unwrap();
        assert_eq!(y.len(), 18_000);
        for s in &y.samples()[2000..16_000] {
            assert!((s.norm() - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn aliases_suppressed() {
        // 5 kHz at 12 kHz would alias to -1 kHz at 6 kHz.
        let x = ctone(5000.0, 12_000, 24_000);
        let y = resample(&x, 6000).unwrap();
        let p: f64 = y.samples()[1000..11_000].iter().map(|v| v.norm_sqr()).sum::<f64>() / 10_000.0;
        assert!(10.0 * p.log10() < -60.0);
    }

    #[test]
    fn block_size_independent() {
        let x: Vec<Complex64> = (0..5000)
            .map(|i| Complex64::new((i as f64 * 0.01).sin(), (i as f64 * 0.037).cos()))
            .collect();
        let f = rate_change_filter(30_000.0, 6000.0).unwrap();
        let whole = RateStage::new(3, 5, &f).unwrap().process_all(&x);
        for block in [1usize, 7, 333, 4999] {
            let mut st = RateStage::new(3, 5, &f).unwrap();
            let mut out = Vec::new();
            for chunk in x.chunks(block) {
                st.push(chunk, &mut out);
            }
            st.finish(&mut out);
            assert_eq!(out, whole, "block {block}");
        }
    }
}
