use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::RealSignal;
use crate::error::{Error, Result};

/// Audio interchange encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioFormat {
    /// RIFF WAVE, mono, 16-bit PCM.
    #[default]
    Wav,
    /// Headerless little-endian f32 samples.
    RawF32,
}

impl AudioFormat {
    /// Guesses from the extension: `.f32` and `.raw` are raw, anything else WAVE.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("f32" | "raw") => AudioFormat::RawF32,
            _ => AudioFormat::Wav,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClipPolicy {
    /// Samples outside [-1, 1] are an error.
    #[default]
    Reject,
    /// Saturate at full scale.
    Allow,
}

const FULL_SCALE: f64 = 32767.0;

/// Writes mono 16-bit PCM. Samples map to `round(x * 32767)`.
pub fn write_wav(path: &Path, signal: &RealSignal, clip: ClipPolicy) -> Result<()> {
    std::fs::write(path, encode_wav(signal, clip)?)?;
    Ok(())
}

pub(crate) fn encode_wav(signal: &RealSignal, clip: ClipPolicy) -> Result<Vec<u8>> {
    let n = signal.len();
    let data_len = u32::try_from(n * 2)
        .ok()
        .filter(|&l| l <= u32::MAX - 36)
        .ok_or_else(|| Error::param("signal too long for a WAVE file"))?;
    let rate = signal.sample_rate_hz();
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for (i, &x) in signal.samples().iter().enumerate() {
        if x.abs() > 1.0 && clip == ClipPolicy::Reject {
            return Err(Error::param(format!(
                "sample {i} is {x:.4}, outside full scale; rescale or allow clipping"
            )));
        }
        let q = (x.clamp(-1.0, 1.0) * FULL_SCALE).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    Ok(out)
}

/// Reads mono 16-bit PCM. With `expected_rate_hz`, any other rate is a format
/// error.
pub fn read_wav(path: &Path, expected_rate_hz: Option<u32>) -> Result<RealSignal> {
    decode_wav(&std::fs::read(path)?, expected_rate_hz)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub(crate) fn decode_wav(b: &[u8], expected_rate_hz: Option<u32>) -> Result<RealSignal> {
    if b.len() < 12 {
        return Err(Error::format(b.len() as u64, "truncated RIFF header"));
    }
    if &b[0..4] != b"RIFF" {
        return Err(Error::format(0, "missing RIFF tag"));
    }
    if &b[8..12] != b"WAVE" {
        return Err(Error::format(8, "missing WAVE tag"));
    }
    let mut pos = 12usize;
    let mut rate = None;
    while pos + 8 <= b.len() {
        let id = &b[pos..pos + 4];
        let size = u32_at(b, pos + 4) as usize;
        let body = pos + 8;
        let end = body
            .checked_add(size)
            .filter(|&e| e <= b.len())
            .ok_or_else(|| Error::format(pos as u64 + 4, format!("chunk size {size} runs past end of file")))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::format(pos as u64 + 4, "fmt chunk shorter than 16 bytes"));
                }
                let tag = u16_at(b, body);
                if tag != 1 {
                    return Err(Error::format(body as u64, format!("format tag {tag}, only PCM (1) is supported")));
                }
                let channels = u16_at(b, body + 2);
                if channels != 1 {
                    return Err(Error::format(body as u64 + 2, format!("{channels} channels, expected mono")));
                }
                let r = u32_at(b, body + 4);
                if let Some(want) = expected_rate_hz {
                    if r != want {
                        return Err(Error::format(body as u64 + 4, format!("sample rate {r} Hz, expected {want} Hz")));
                    }
                }
                if r == 0 {
                    return Err(Error::format(body as u64 + 4, "sample rate 0"));
                }
                let bits = u16_at(b, body + 14);
                if bits != 16 {
                    return Err(Error::format(body as u64 + 14, format!("{bits} bits per sample, expected 16")));
                }
                rate = Some(r);
            }
            b"data" => {
                let r = rate.ok_or_else(|| Error::format(pos as u64, "data chunk before fmt chunk"))?;
                if !size.is_multiple_of(2) {
                    return Err(Error::format(pos as u64 + 4, "odd data size for 16-bit samples"));
                }
                let samples = b[body..end]
                    .chunks_exact(2)
                    .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / FULL_SCALE)
                    .collect();
                return RealSignal::new(samples, r);
            }
            _ => {}
        }
        pos = end + (size & 1);
    }
    Err(Error::format(b.len() as u64, "no data chunk"))
}

/// Writes headerless little-endian f32. Lossless for values representable in f32.
pub fn write_raw_f32(path: &Path, signal: &RealSignal) -> Result<()> {
    let mut out = Vec::with_capacity(signal.len() * 4);
    for &x in signal.samples() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads headerless little-endian f32; the rate is not stored and must be given.
pub fn read_raw_f32(path: &Path, sample_rate_hz: u32) -> Result<RealSignal> {
    let b = std::fs::read(path)?;
    if b.len() % 4 != 0 {
        return Err(Error::format(
            (b.len() - b.len() % 4) as u64,
            "trailing bytes after the last f32 sample",
        ));
    }
    let samples: Vec<f64> = b
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::format(i as u64 * 4, "non-finite sample"));
    }
    RealSignal::new(samples, sample_rate_hz)
}

/// Reads AF audio in either format, checking the rate.
pub fn read_audio(path: &Path, format: AudioFormat, rate_hz: u32) -> Result<RealSignal> {
    match format {
        AudioFormat::Wav => read_wav(path, Some(rate_hz)),
        AudioFormat::RawF32 => read_raw_f32(path, rate_hz),
    }
}

pub fn write_audio(path: &Path, signal: &RealSignal, format: AudioFormat, clip: ClipPolicy) -> Result<()> {
    match format {
        AudioFormat::Wav => write_wav(path, signal, clip),
        AudioFormat::RawF32 => write_raw_f32(path, signal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::AF_RATE_HZ;

    fn tone(n: usize, amp: f64) -> RealSignal {
        let s = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * 700.0 * i as f64 / 6000.0).sin())
            .collect();
        RealSignal::new(s, AF_RATE_HZ).unwrap()
    }

    #[test]
    fn wav_within_one_lsb_and_exact_on_reread() {
        let x = tone(6000, 0.8);
        let a = decode_wav(&encode_wav(&x, ClipPolicy::Reject).unwrap(), Some(6000)).unwrap();
        let worst = x
            .samples()
            .iter()
            .zip(a.samples())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / FULL_SCALE, "{worst}");
        let b = decode_wav(&encode_wav(&a, ClipPolicy::Reject).unwrap(), Some(6000)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn header_layout() {
        let w = encode_wav(&tone(10, 0.1), ClipPolicy::Reject).unwrap();
        assert_eq!(w.len(), 64);
        assert_eq!(&w[0..4], b"RIFF");
        assert_eq!(u32_at(&w, 4), 56);
        assert_eq!(u32_at(&w, 24), 6000);
        assert_eq!(u32_at(&w, 28), 12000);
    }

    #[test]
    fn clipping_policy() {
        let loud = tone(100, 1.5);
        assert!(encode_wav(&loud, ClipPolicy::Reject).is_err());
        let w = decode_wav(&encode_wav(&loud, ClipPolicy::Allow).unwrap(), None).unwrap();
        assert!((w.peak() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_rate_names_expected() {
        let x = RealSignal::new(vec![0.0; 8], 8000).unwrap();
        let e = decode_wav(&encode_wav(&x, ClipPolicy::Reject).unwrap(), Some(6000)).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("6000 Hz") && msg.contains("byte 24"), "{msg}");
    }

    #[test]
    fn malformed_offsets() {
        let good = encode_wav(&tone(10, 0.1), ClipPolicy::Reject).unwrap();
        let mut bad = good.clone();
        bad[8] = b'X';
        assert!(matches!(decode_wav(&bad, None), Err(Error::Format { offset: 8, .. })));
        let mut bad = good.clone();
        bad[22] = 2;
        assert!(matches!(decode_wav(&bad, None), Err(Error::Format { offset: 22, .. })));
        assert!(matches!(decode_wav(&good[..50], None), Err(Error::Format { offset: 40, .. })));
        assert!(matches!(decode_wav(b"RIF", None), Err(Error::Format { .. })));
    }

    #[test]
    fn skips_unknown_chunks() {
        let good = encode_wav(&tone(10, 0.1), ClipPolicy::Reject).unwrap();
        let mut w = good[..36].to_vec();
        w.extend_from_slice(b"LIST");
        w.extend_from_slice(&3u32.to_le_bytes());
        w.extend_from_slice(&[1, 2, 3, 0]);
        w.extend_from_slice(&good[36..]);
        assert_eq!(decode_wav(&w, Some(6000)).unwrap(), decode_wav(&good, Some(6000)).unwrap());
    }

    #[test]
    fn raw_f32_roundtrip() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("x.f32");
        let x = tone(500, 0.3);
        write_raw_f32(&p, &x).unwrap();
        let y = read_raw_f32(&p, AF_RATE_HZ).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert_eq!(*a as f32, *b as f32);
        }
        std::fs::write(&p, [0u8; 7]).unwrap();
        assert!(matches!(read_raw_f32(&p, AF_RATE_HZ), Err(Error::Format { offset: 4, .. })));
        assert_eq!(AudioFormat::from_path(&p), AudioFormat::RawF32);
    }
}
