//! Simulated transmit/receive chain. `usb_modulate` places an AF signal as an
//! upper sideband inside a wideband I/Q stream; `channelize` and
//! `usb_demodulate` recover it.
//!
//! Internally the channel is handled centred on zero: the wideband stream is
//! mixed down by `carrier_offset + bw/2`, decimated in integer stages, lowpass
//! filtered to `±bw/2`, then mixed back up by `bw/2` at the AF rate so the
//! result is a one-sided baseband occupying `0..bw`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::fft::mix_from;
use crate::dsp::{
    analytic, design_highpass, design_lowpass, filter, FirFilter, IqSignal, Power, RateStage,
    RealSignal, RESAMPLE_STOPBAND_DB,
};
use crate::error::{Error, Result};

/// Wideband/narrowband rates and channel placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelizerConfig {
    pub wideband_rate_hz: u32,
    pub carrier_offset_hz: f64,
    pub channel_bw_hz: f64,
    pub af_rate_hz: u32,
}

impl Default for ChannelizerConfig {
    fn default() -> Self {
        Self {
            wideband_rate_hz: 1_000_000,
            carrier_offset_hz: 200_000.0,
            channel_bw_hz: 3000.0,
            af_rate_hz: 6000,
        }
    }
}

// Largest denominator accepted for the wideband/AF rate ratio.
const MAX_INTERP: u64 = 16;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// One integer rate-change step between two rates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StagePlan {
    up: usize,
    down: usize,
    // rate at which the filter runs
    filter_rate: f64,
    // lower of input/output rate; sets where aliases and images fall
    low_rate: f64,
}

impl ChannelizerConfig {
    pub fn validate(&self) -> Result<()> {
        let wb = self.wideband_rate_hz as f64;
        let ok = self.wideband_rate_hz > 0
            && self.af_rate_hz > 0
            && self.channel_bw_hz > 0.0
            && self.carrier_offset_hz.is_finite()
            && self.carrier_offset_hz.abs() + self.channel_bw_hz < wb / 2.0
            && self.af_rate_hz as f64 >= 2.0 * self.channel_bw_hz
            && self.wideband_rate_hz >= self.af_rate_hz;
        if !ok {
            return Err(Error::param(format!("invalid channelizer configuration {self:?}")));
        }
        let g = gcd(self.wideband_rate_hz as u64, self.af_rate_hz as u64);
        if self.af_rate_hz as u64 / g > MAX_INTERP {
            return Err(Error::param(format!(
                "rate ratio {}/{} needs more than {MAX_INTERP}x interpolation",
                self.wideband_rate_hz, self.af_rate_hz
            )));
        }
        Ok(())
    }

    fn half_bw(&self) -> f64 {
        self.channel_bw_hz / 2.0
    }

    // Guard band between the channel edge and where stage aliases may land.
    fn guard(&self) -> f64 {
        0.05 * self.channel_bw_hz
    }

    /// Shift that brings the channel centre to 0 Hz on the wideband stream.
    fn centre_hz(&self) -> f64 {
        self.carrier_offset_hz + self.half_bw()
    }

    /// Decimation stages from wideband to AF: single prime factors while the
    /// rate stays at or above the AF rate, then one combined rational stage.
    fn plan(&self) -> Vec<StagePlan> {
        let wb = self.wideband_rate_hz as u64;
        let af = self.af_rate_hz as u64;
        let g = gcd(wb, af);
        let (p, q) = (wb / g, af / g);
        let mut stages = Vec::new();
        let mut rate = wb;
        let mut rest = p;
        for f in prime_factors(p) {
            if rate.is_multiple_of(f) && rate / f >= af && ((rate / f) * q).is_multiple_of(rest / f) {
                stages.push(StagePlan {
                    up: 1,
                    down: f as usize,
                    filter_rate: rate as f64,
                    low_rate: (rate / f) as f64,
                });
                rate /= f;
                rest /= f;
            }
        }
        if rest > 1 || q > 1 {
            stages.push(StagePlan {
                up: q as usize,
                down: rest as usize,
                filter_rate: (rate * q) as f64,
                low_rate: af.min(rate) as f64,
            });
        }
        stages
    }

    fn stage_filter(&self, s: &StagePlan) -> Result<FirFilter> {
        let pass = self.half_bw();
        let stop = s.low_rate - pass - self.guard();
        let f = design_lowpass(pass, stop - pass, RESAMPLE_STOPBAND_DB, s.filter_rate)?;
        Ok(if s.up > 1 { f.scaled(s.up as f64) } else { f })
    }

    /// Final channel filter at the AF rate, centred on zero.
    fn channel_filter(&self) -> Result<FirFilter> {
        let g = self.guard();
        design_lowpass(
            self.half_bw() - g,
            2.0 * g,
            RESAMPLE_STOPBAND_DB,
            self.af_rate_hz as f64,
        )
    }
}

/// Block-wise channelizer. Feeding the same stream in any block partition
/// yields bit-identical output.
#[derive(Debug, Clone)]
pub struct Channelizer {
    cfg: ChannelizerConfig,
    stages: Vec<RateStage>,
    in_index: u64,
    out_index: u64,
}

impl Channelizer {
    pub fn new(cfg: ChannelizerConfig) -> Result<Self> {
        cfg.validate()?;
        let mut stages = Vec::new();
        for s in cfg.plan() {
            stages.push(RateStage::new(s.up, s.down, &cfg.stage_filter(&s)?)?);
        }
        stages.push(RateStage::new(1, 1, &cfg.channel_filter()?)?);
        Ok(Self {
            cfg,
            stages,
            in_index: 0,
            out_index: 0,
        })
    }

    pub fn config(&self) -> &ChannelizerConfig {
        &self.cfg
    }

    fn run(&mut self, block: &[Complex64], flush: bool) -> Vec<Complex64> {
        let wb = self.cfg.wideband_rate_hz as f64;
        let mut cur = mix_from(block, -self.cfg.centre_hz(), wb, self.in_index);
        self.in_index += block.len() as u64;
        for st in &mut self.stages {
            let mut next = Vec::new();
            st.push(&cur, &mut next);
            if flush {
                st.finish(&mut next);
            }
            cur = next;
        }
        let out = mix_from(&cur, self.cfg.half_bw(), self.cfg.af_rate_hz as f64, self.out_index);
        self.out_index += out.len() as u64;
        out
    }

    /// Feeds a block of wideband samples, returning any AF-rate output now available.
    pub fn push(&mut self, block: &[Complex64]) -> Vec<Complex64> {
        self.run(block, false)
    }

    /// Flushes the filter tails. The channelizer must not be fed afterwards.
    pub fn finish(&mut self) -> Vec<Complex64> {
        self.run(&[], true)
    }
}

/// Extracts the channel from a wideband stream: complex baseband at the AF
/// rate with the carrier at 0 Hz and the upper sideband in `0..channel_bw`.
pub fn channelize(wideband: &IqSignal, cfg: &ChannelizerConfig) -> Result<IqSignal> {
    cfg.validate()?;
    if wideband.sample_rate_hz() != cfg.wideband_rate_hz {
        return Err(Error::param(format!(
            "wideband rate {} Hz does not match configured {} Hz",
            wideband.sample_rate_hz(),
            cfg.wideband_rate_hz
        )));
    }
    let mut ch = Channelizer::new(*cfg)?;
    let mut out = ch.push(wideband.samples());
    out.extend(ch.finish());
    Ok(IqSignal::from_parts(out, cfg.af_rate_hz))
}

/// Places `af` as an upper sideband at `carrier_offset_hz` in a wideband I/Q
/// stream, reversing the channelizer's stages.
pub fn usb_modulate(af: &RealSignal, cfg: &ChannelizerConfig) -> Result<IqSignal> {
    cfg.validate()?;
    if af.sample_rate_hz() != cfg.af_rate_hz {
        return Err(Error::param(format!(
            "AF rate {} Hz does not match configured {} Hz",
            af.sample_rate_hz(),
            cfg.af_rate_hz
        )));
    }
    let z = analytic(af)?;
    let mut cur = mix_from(z.samples(), -cfg.half_bw(), cfg.af_rate_hz as f64, 0);
    cur = RateStage::new(1, 1, &cfg.channel_filter()?)?.process_all(&cur);
    for s in cfg.plan().iter().rev() {
        let inv = StagePlan {
            up: s.down,
            down: s.up,
            ..*s
        };
        cur = RateStage::new(inv.up, inv.down, &cfg.stage_filter(&inv)?)?.process_all(&cur);
    }
    let out = mix_from(&cur, cfg.centre_hz(), cfg.wideband_rate_hz as f64, 0);
    Ok(IqSignal::from_parts(out, cfg.wideband_rate_hz))
}

/// Lower edge of the demodulator's DC-blocking highpass.
pub const DEMOD_HIGHPASS_STOP_HZ: f64 = 20.0;
/// Frequency above which the highpass passes with full gain.
pub const DEMOD_HIGHPASS_PASS_HZ: f64 = 50.0;

/// Upper-sideband demodulation of a channelized baseband: the real part of the
/// one-sided signal, followed by a 50 Hz highpass that removes DC and carrier
/// leakage.
pub fn usb_demodulate(chan: &IqSignal) -> Result<RealSignal> {
    if chan.is_empty() {
        return RealSignal::new(Vec::new(), chan.sample_rate_hz());
    }
    let hp = design_highpass(
        DEMOD_HIGHPASS_STOP_HZ,
        DEMOD_HIGHPASS_PASS_HZ - DEMOD_HIGHPASS_STOP_HZ,
        RESAMPLE_STOPBAND_DB,
        chan.sample_rate_hz() as f64,
    )?;
    filter(&chan.re(), &hp)
}

/// Value returned by [`estimate_snr`] when the residual is exactly zero.
pub const SNR_CAP_DB: f64 = 120.0;

/// `10·log10(power(clean) / power(received − clean))`, capped at
/// [`SNR_CAP_DB`]. Assumes gain- and time-aligned inputs.
pub fn estimate_snr(clean: &RealSignal, received: &RealSignal) -> Result<f64> {
    if clean.len() != received.len() {
        return Err(Error::param(format!(
            "length mismatch: {} vs {}",
            clean.len(),
            received.len()
        )));
    }
    let ps = clean.power()?;
    let pn = received.sub(clean)?.power()?;
    if pn == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (ps / pn).log10()).min(SNR_CAP_DB))
}
