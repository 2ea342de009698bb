use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Spectrogram, SpectrogramConfig};

/// Exact values of an exported spectrogram. `values[bin][frame]` in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramSidecar {
    pub config: SpectrogramConfig,
    pub sample_rate_hz: u32,
    pub freq_bins: usize,
    pub frames: usize,
    pub values: Vec<Vec<f64>>,
}

/// Writes `<stem>.pgm` (8-bit binary greymap, highest frequency on the top
/// row, min-max scaled) and `<stem>.json` with the exact dB values.
pub fn write_spectrogram(stem: &Path, spec: &Spectrogram, sample_rate_hz: u32) -> Result<()> {
    let (f, t) = (spec.freq_bins(), spec.frames());
    let lo = spec.values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spec.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut pgm = format!("P5\n{t} {f}\n255\n").into_bytes();
    for bin in (0..f).rev() {
        for frame in 0..t {
            let v = if span > 0.0 { (spec.at(bin, frame) - lo) / span } else { 0.5 };
            pgm.push((v * 255.0).round() as u8);
        }
    }
    std::fs::write(stem.with_extension("pgm"), pgm)?;
    let side = SpectrogramSidecar {
        config: *spec.config(),
        sample_rate_hz,
        freq_bins: f,
        frames: t,
        values: (0..f).map(|b| (0..t).map(|j| spec.at(b, j)).collect()).collect(),
    };
    crate::eval::write_json(&stem.with_extension("json"), &side)
}

pub fn read_spectrogram_sidecar(path: &Path) -> Result<SpectrogramSidecar> {
    let s: SpectrogramSidecar = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if s.values.len() != s.freq_bins || s.values.iter().any(|r| r.len() != s.frames) {
        return Err(Error::param(format!(
            "sidecar values are not {}×{}",
            s.freq_bins, s.frames
        )));
    }
    Ok(s)
}
