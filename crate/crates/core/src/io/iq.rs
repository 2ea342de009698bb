use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::IqSignal;
use crate::error::{Error, Result};

/// Sample format tag stored in the sidecar.
pub const IQ_FORMAT: &str = "cf32_le";

/// Sidecar metadata of a wideband capture, stored next to it as `<file>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqMeta {
    pub format: String,
    pub sample_rate_hz: u32,
    /// Offset of the channel of interest from the capture centre.
    pub carrier_offset_hz: f64,
    pub start_time_s: f64,
}

impl IqMeta {
    pub fn new(sample_rate_hz: u32, carrier_offset_hz: f64, start_time_s: f64) -> Self {
        Self {
            format: IQ_FORMAT.to_owned(),
            sample_rate_hz,
            carrier_offset_hz,
            start_time_s,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes interleaved f32 (I, Q) pairs and the sidecar. The sidecar rate must
/// match the signal.
pub fn write_iq(path: &Path, signal: &IqSignal, meta: &IqMeta) -> Result<()> {
    if meta.sample_rate_hz != signal.sample_rate_hz() {
        return Err(Error::param(format!(
            "sidecar rate {} Hz differs from signal rate {} Hz",
            meta.sample_rate_hz,
            signal.sample_rate_hz()
        )));
    }
    let mut out = Vec::with_capacity(signal.len() * 8);
    for z in signal.samples() {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    std::fs::write(path, out)?;
    super::super::eval::write_json(&sidecar_path(path), meta)
}

/// Reads a capture written by [`write_iq`]. WAVE files are refused: wideband
/// captures are always f32 pairs with a sidecar.
pub fn read_iq(path: &Path) -> Result<(IqSignal, IqMeta)> {
    let b = std::fs::read(path)?;
    if b.starts_with(b"RIFF") {
        return Err(Error::format(0, "WAVE is not a wideband I/Q format; expected cf32_le pairs with a .json sidecar"));
    }
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side)
        .map_err(|e| Error::param(format!("missing sidecar {}: {e}", side.display())))?;
    let meta: IqMeta = serde_json::from_str(&text)?;
    if meta.format != IQ_FORMAT {
        return Err(Error::param(format!("sidecar format {:?}, expected {IQ_FORMAT:?}", meta.format)));
    }
    if b.len() % 8 != 0 {
        return Err(Error::format((b.len() - b.len() % 8) as u64, "trailing bytes after the last I/Q pair"));
    }
    let f = |c: &[u8]| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let samples: Vec<Complex64> = b.chunks_exact(8).map(|c| Complex64::new(f(&c[..4]), f(&c[4..]))).collect();
    if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::format(i as u64 * 8, "non-finite sample"));
    }
    Ok((IqSignal::new(samples, meta.sample_rate_hz)?, meta))
}
