//! Waveform-level synthesizers. They reproduce each mode's time-frequency
//! structure (symbol rate, tone grid, carrier layout, keying envelope) from a
//! seeded payload; protocol layers such as varicode, FEC and interleaving are
//! replaced by simple bit codings with comparable symbol statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::catalog::{ModeFamily, ModeSpec, AF_BAND_HZ};
use super::payload::Payload;
use crate::dsp::fft::{fft_forward, fft_inverse};
use crate::dsp::RealSignal;
use crate::error::{Error, Result};

/// Peak amplitude of every synthesized signal.
pub const PEAK_AMPLITUDE: f64 = 0.8;
/// Phase-reversal symbols sent before PSK data.
const PSK_PREAMBLE_SYMBOLS: usize = 32;
/// Fraction of a symbol over which FSK frequency steps are smoothed.
const FSK_RAMP_FRACTION: f64 = 0.2;
/// Raised-cosine keying edge for Morse elements.
const CW_EDGE_S: f64 = 0.005;
/// Noise mode passband.
const NOISE_BAND_HZ: (f64, f64) = (75.0, 2925.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharCoding {
    /// Leading 1, seven data bits, then a "00" gap (varicode-like statistics).
    Psk,
    /// Seven ASCII bits.
    Ascii7,
    /// Six-bit code of a reduced upper-case alphabet, complemented on every
    /// other character so the tone distribution stays centred.
    Six,
}

fn char_bits(c: u8, position: usize, coding: CharCoding, out: &mut Vec<u8>) {
    match coding {
        CharCoding::Psk => {
            out.push(1);
            out.extend((0..7).rev().map(|b| (c >> b) & 1));
            out.extend([0, 0]);
        }
        CharCoding::Ascii7 => out.extend((0..7).rev().map(|b| (c >> b) & 1)),
        CharCoding::Six => {
            let mask = if position % 2 == 1 { 0x3f } else { 0 };
            let v = (c.wrapping_sub(32) & 0x3f) ^ mask;
            out.extend((0..6).rev().map(|b| (v >> b) & 1));
        }
    }
}

/// Produces at least `count` coded bits from the payload. Scrambling whitens
/// the stream; repetition stands in for FEC and leaves correlated neighbours.
fn payload_bits(payload: &Payload, coding: CharCoding, scramble: bool, repeat: u32, count: usize) -> Vec<u8> {
    let repeat = repeat.max(1) as usize;
    let raw_needed = count.div_ceil(repeat) + 16;
    let mut raw = Vec::with_capacity(raw_needed + 16);
    for (i, c) in payload.chars().enumerate() {
        if raw.len() >= raw_needed {
            break;
        }
        char_bits(c, i, coding, &mut raw);
    }
    if scramble {
        let mut rng = ChaCha8Rng::seed_from_u64(payload.seed ^ 0x5c2a_4b1d_9e37_f00d);
        let mut word = 0u64;
        for (i, b) in raw.iter_mut().enumerate() {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            *b ^= ((word >> (i % 64)) & 1) as u8;
        }
    }
    let mut out = Vec::with_capacity(raw.len() * repeat);
    for b in raw {
        for _ in 0..repeat {
            out.push(b);
        }
    }
    out
}

fn pack_symbols(bits: &[u8], bits_per_symbol: usize, count: usize) -> Vec<u32> {
    bits.chunks(bits_per_symbol)
        .take(count)
        .map(|ch| ch.iter().fold(0u32, |a, &b| (a << 1) | b as u32))
        .collect()
}

fn log2_exact(n: u32) -> usize {
    debug_assert!(n.is_power_of_two());
    n.trailing_zeros() as usize
}

/// Absolute carrier phases of a differential M-PSK stream with a reversal preamble.
fn dpsk_symbols(payload: &Payload, order: u32, repeat: u32, scramble: bool, n_sym: usize) -> Vec<Complex64> {
    let k = log2_exact(order);
    let coding = if scramble { CharCoding::Ascii7 } else { CharCoding::Psk };
    let bits = payload_bits(payload, coding, scramble, repeat, n_sym * k);
    let data = pack_symbols(&bits, k, n_sym);
    let mut theta = 0.0f64;
    let mut out = Vec::with_capacity(n_sym);
    for i in 0..n_sym {
        let step = if i < PSK_PREAMBLE_SYMBOLS && !scramble {
            PI
        } else {
            let s = data[i.min(data.len() - 1)];
            if order == 2 {
                // bit 0 reverses the phase
                if s == 0 { PI } else { 0.0 }
            } else {
                2.0 * PI * s as f64 / order as f64
            }
        };
        theta = (theta + step).rem_euclid(2.0 * PI);
        out.push(Complex64::from_polar(1.0, theta));
    }
    out
}

/// Adds one PSK carrier with cosine-shaped transitions between symbols.
fn add_psk_carrier(out: &mut [f64], symbols: &[Complex64], baud: f64, carrier_hz: f64, phase0: f64, rate: f64) {
    for (i, o) in out.iter_mut().enumerate() {
        let t = i as f64 / rate;
        let x = t * baud;
        let k = (x.floor() as usize).min(symbols.len() - 2);
        let u = x - k as f64;
        let w = (0.5 * PI * u).sin().powi(2);
        let b = symbols[k] + (symbols[k + 1] - symbols[k]) * w;
        let c = Complex64::from_polar(1.0, 2.0 * PI * carrier_hz * t + phase0);
        *o += (b * c).re;
    }
}

/// Phase-continuous FSK over (frequency, end time) segments. Frequency steps are
/// smoothed with a raised-cosine ramp of `ramp_s`.
fn add_fsk(out: &mut [f64], segments: &[(f64, f64)], ramp_s: f64, phase0: f64, rate: f64) {
    let mut seg = 0usize;
    let mut seg_start = 0.0;
    let mut prev_f = segments[0].0;
    let mut phase = phase0;
    for (i, o) in out.iter_mut().enumerate() {
        let t = i as f64 / rate;
        while seg + 1 < segments.len() && t >= segments[seg].1 {
            prev_f = segments[seg].0;
            seg_start = segments[seg].1;
            seg += 1;
        }
        let cur = segments[seg].0;
        let dt = t - seg_start;
        let f = if seg > 0 && dt < ramp_s {
            prev_f + (cur - prev_f) * (0.5 * PI * dt / ramp_s).sin().powi(2)
        } else {
            cur
        };
        *o += phase.cos();
        phase = (phase + 2.0 * PI * f / rate).rem_euclid(2.0 * PI);
    }
}

fn tone_frequency(spec: &ModeSpec, index: u32) -> f64 {
    spec.center_hz + (index as f64 - (spec.tones as f64 - 1.0) / 2.0) * spec.tone_spacing_hz
}

fn symbol_count(duration_s: f64, baud: f64) -> usize {
    (duration_s * baud).ceil() as usize + 3
}

fn synth_psk(out: &mut [f64], spec: &ModeSpec, payload: &Payload, duration_s: f64, rate: f64, rng: &mut ChaCha8Rng) {
    let n_sym = symbol_count(duration_s, spec.baud);
    let symbols = dpsk_symbols(payload, spec.psk_order, spec.bit_repeat, false, n_sym);
    add_psk_carrier(out, &symbols, spec.baud, spec.center_hz, rng.random_range(0.0..2.0 * PI), rate);
}

/// Carrier centres for multi-carrier modes; carriers whose occupied band would
/// leave the audio channel are dropped.
pub(crate) fn carrier_frequencies(spec: &ModeSpec) -> Vec<f64> {
    let half_width = 0.6 * spec.baud;
    (0..spec.carriers)
        .map(|k| spec.center_hz + (k as f64 - (spec.carriers as f64 - 1.0) / 2.0) * spec.tone_spacing_hz)
        .filter(|f| f - half_width >= AF_BAND_HZ.0 && f + half_width <= AF_BAND_HZ.1)
        .collect()
}

fn synth_multicarrier(out: &mut [f64], spec: &ModeSpec, payload: &Payload, duration_s: f64, rate: f64, rng: &mut ChaCha8Rng) {
    let n_sym = symbol_count(duration_s, spec.baud);
    let freqs = carrier_frequencies(spec);
    // MT63 and OFDM spread data over all carriers (scrambled); MC-PSK carries
    // independent PSK streams.
    let scramble = spec.family != ModeFamily::MultiCarrierPsk;
    for (c, &f) in freqs.iter().enumerate() {
        let sub = Payload::with_length(
            payload.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(c as u64 + 1)),
            payload.length_chars.min(4096),
        );
        let symbols = dpsk_symbols(&sub, spec.psk_order.max(2), spec.bit_repeat, scramble, n_sym);
        add_psk_carrier(out, &symbols, spec.baud, f, rng.random_range(0.0..2.0 * PI), rate);
    }
}

fn synth_mfsk(out: &mut [f64], spec: &ModeSpec, payload: &Payload, duration_s: f64, rate: f64, rng: &mut ChaCha8Rng) {
    let n_sym = symbol_count(duration_s, spec.baud);
    let k = log2_exact(spec.tones);
    // Contestia's reduced alphabet is sent without whitening, Olivia and MFSK
    // symbols are effectively scrambled by their coding.
    let contestia = spec.om_label == "Contestia";
    let coding = if contestia { CharCoding::Six } else { CharCoding::Ascii7 };
    // Repetition is per symbol: repeating bits inside a symbol would confine
    // the stream to a fraction of the tone set.
    let repeat = spec.bit_repeat.max(1) as usize;
    let distinct = n_sym.div_ceil(repeat);
    let bits = payload_bits(payload, coding, !contestia, 1, distinct * k);
    let symbols: Vec<u32> = pack_symbols(&bits, k, distinct)
        .into_iter()
        .flat_map(|s| std::iter::repeat_n(s, repeat))
        .take(n_sym)
        .collect();
    let segments: Vec<(f64, f64)> = symbols
        .iter()
        .enumerate()
        .map(|(i, &s)| (tone_frequency(spec, s), (i + 1) as f64 / spec.baud))
        .collect();
    add_fsk(out, &segments, FSK_RAMP_FRACTION / spec.baud, rng.random_range(0.0..2.0 * PI), rate);
}

fn synth_ifk(out: &mut [f64], spec: &ModeSpec, payload: &Payload, duration_s: f64, rate: f64, rng: &mut ChaCha8Rng) {
    let n_sym = symbol_count(duration_s, spec.baud);
    // 18-tone modes carry nibbles with an offset of 2; IFKP's 33 tones carry
    // 5-bit symbols with an offset of 1.
    let (bits_per_symbol, offset) = if spec.tones == 33 { (5, 1) } else { (4, 2) };
    let bits = payload_bits(payload, CharCoding::Ascii7, true, spec.bit_repeat, n_sym * bits_per_symbol);
    let symbols = pack_symbols(&bits, bits_per_symbol, n_sym);
    let mut tone = 0u32;
    let segments: Vec<(f64, f64)> = symbols
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            tone = (tone + s + offset) % spec.tones;
            (tone_frequency(spec, tone), (i + 1) as f64 / spec.baud)
        })
        .collect();
    add_fsk(out, &segments, FSK_RAMP_FRACTION / spec.baud, rng.random_range(0.0..2.0 * PI), rate);
}

fn synth_rtty(out: &mut [f64], spec: &ModeSpec, payload: &Payload, duration_s: f64, rate: f64, rng: &mut ChaCha8Rng) {
    let bit_s = 1.0 / spec.baud;
    let mark = spec.center_hz + spec.tone_spacing_hz / 2.0;
    let space = spec.center_hz - spec.tone_spacing_hz / 2.0;
    let mut segments = Vec::new();
    let mut t = 0.0;
    for c in payload.chars() {
        if t > duration_s + 1.0 {
            break;
        }
        let code = c & 0x1f;
        let mut push = |f: f64, d: f64| {
            t += d;
            segments.push((f, t));
        };
        push(space, bit_s);
        for b in 0..5 {
            push(if (code >> b) & 1 == 1 { mark } else { space }, bit_s);
        }
        push(mark, 1.5 * bit_s);
    }
    add_fsk(out, &segments, FSK_RAMP_FRACTION * bit_s, rng.random_range(0.0..2.0 * PI), rate);
}

fn synth_throb(out: &mut [f64], spec: &ModeSpec, payload: &Payload, duration_s: f64, rate: f64, rng: &mut ChaCha8Rng) {
    let n_sym = symbol_count(duration_s, spec.baud);
    let tones = spec.tones;
    let pairs: Vec<(u32, u32)> = (0..tones)
        .flat_map(|a| (a + 1..tones).map(move |b| (a, b)))
        .collect();
    let phases: Vec<f64> = (0..tones).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let symbols: Vec<(u32, u32)> = payload
        .chars()
        .take(n_sym)
        .map(|c| {
            if c == b' ' {
                // space is a single tone at the centre
                (tones / 2, tones / 2)
            } else {
                pairs[(c as usize * 7) % pairs.len()]
            }
        })
        .collect();
    for (i, o) in out.iter_mut().enumerate() {
        let t = i as f64 / rate;
        let x = t * spec.baud;
        let k = (x.floor() as usize).min(symbols.len() - 1);
        let env = (PI * (x - k as f64)).sin().powi(2);
        let (a, b) = symbols[k];
        let fa = tone_frequency(spec, a);
        let mut v = (2.0 * PI * fa * t + phases[a as usize]).cos();
        if b != a {
            let fb = tone_frequency(spec, b);
            v = 0.5 * (v + (2.0 * PI * fb * t + phases[b as usize]).cos());
        }
        *o += env * v;
    }
}

fn morse(c: u8) -> Option<&'static str> {
    Some(match c {
        b'A' => ".-", b'B' => "-...", b'C' => "-.-.", b'D' => "-..", b'E' => ".",
        b'F' => "..-.", b'G' => "--.", b'H' => "....", b'I' => "..", b'J' => ".---",
        b'K' => "-.-", b'L' => ".-..", b'M' => "--", b'N' => "-.", b'O' => "---",
        b'P' => ".--.", b'Q' => "--.-", b'R' => ".-.", b'S' => "...", b'T' => "-",
        b'U' => "..-", b'V' => "...-", b'W' => ".--", b'X' => "-..-", b'Y' => "-.--",
        b'Z' => "--..", b'0' => "-----", b'1' => ".----", b'2' => "..---", b'3' => "...--",
        b'4' => "....-", b'5' => ".....", b'6' => "-....", b'7' => "--...", b'8' => "---..",
        b'9' => "----.",
        _ => return None,
    })
}

fn synth_cw(out: &mut [f64], spec: &ModeSpec, payload: &Payload, duration_s: f64, rate: f64, rng: &mut ChaCha8Rng) {
    let dot = 1.0 / spec.baud;
    // (start, end) of key-down intervals
    let mut marks: Vec<(f64, f64)> = Vec::new();
    let mut t = 0.0;
    for c in payload.chars() {
        if t > duration_s {
            break;
        }
        match morse(c) {
            Some(code) => {
                for e in code.bytes() {
                    let len = if e == b'-' { 3.0 * dot } else { dot };
                    marks.push((t, t + len));
                    t += len + dot;
                }
                // inter-character gap is three dots, one already spent
                t += 2.0 * dot;
            }
            // word gap is seven dots, three already spent
            None => t += 4.0 * dot,
        }
    }
    let phase0 = rng.random_range(0.0..2.0 * PI);
    let mut m = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        let t = i as f64 / rate;
        while m < marks.len() && t >= marks[m].1 {
            m += 1;
        }
        if m == marks.len() || t < marks[m].0 {
            continue;
        }
        let (s, e) = marks[m];
        let edge = |x: f64| if x < CW_EDGE_S { (0.5 * PI * x / CW_EDGE_S).sin().powi(2) } else { 1.0 };
        let env = edge(t - s).min(edge(e - t));
        *o += env * (2.0 * PI * spec.center_hz * t + phase0).cos();
    }
}

fn synth_noise(out: &mut [f64], rate: f64, rng: &mut ChaCha8Rng) {
    let n = out.len();
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    fft_forward(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 { k } else { n - k } as f64 * rate / n as f64;
        if f < NOISE_BAND_HZ.0 || f > NOISE_BAND_HZ.1 {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft_inverse(&mut buf);
    for (o, v) in out.iter_mut().zip(&buf) {
        *o = v.re;
    }
}

/// Synthesizes `duration_s` seconds of `spec` at `rate_hz`, normalized to a
/// peak of [`PEAK_AMPLITUDE`]. Output is a pure function of the arguments.
pub fn synthesize(spec: &ModeSpec, payload: &Payload, duration_s: f64, rate_hz: u32) -> Result<RealSignal> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::param(format!("duration must be positive, got {duration_s}")));
    }
    let top = spec.center_hz + spec.nominal_bandwidth_hz / 2.0;
    if (rate_hz as f64) < 2.0 * top {
        return Err(Error::param(format!(
            "rate {rate_hz} Hz too low for content up to {top} Hz"
        )));
    }
    let rate = rate_hz as f64;
    let n = (duration_s * rate).round() as usize;
    let mut out = vec![0.0; n];
    if n == 0 {
        return RealSignal::new(out, rate_hz);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(payload.seed ^ 0xa076_1d64_78bd_642f);
    match spec.family {
        ModeFamily::Psk => synth_psk(&mut out, spec, payload, duration_s, rate, &mut rng),
        ModeFamily::MultiCarrierPsk | ModeFamily::Mt63 | ModeFamily::OfdmGeneric => {
            synth_multicarrier(&mut out, spec, payload, duration_s, rate, &mut rng)
        }
        ModeFamily::Mfsk => synth_mfsk(&mut out, spec, payload, duration_s, rate, &mut rng),
        ModeFamily::Ifk => synth_ifk(&mut out, spec, payload, duration_s, rate, &mut rng),
        ModeFamily::FskRtty => synth_rtty(&mut out, spec, payload, duration_s, rate, &mut rng),
        ModeFamily::Throb => synth_throb(&mut out, spec, payload, duration_s, rate, &mut rng),
        ModeFamily::Cw => synth_cw(&mut out, spec, payload, duration_s, rate, &mut rng),
        ModeFamily::Noise => synth_noise(&mut out, rate, &mut rng),
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = PEAK_AMPLITUDE / peak;
        for v in &mut out {
            *v *= g;
        }
    }
    RealSignal::new(out, rate_hz)
}
