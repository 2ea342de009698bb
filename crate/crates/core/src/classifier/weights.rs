//! Versioned binary weight container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "OPMW" | version u32 | config_len u32 | config JSON
//! | entry_count u32 | entries...
//! entry: name_len u16 | name UTF-8 | rank u8 | dims u32 × rank | f32 × prod(dims)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::CompactCnnConfig;
use super::net::{Cnn, Param};
use crate::error::{Error, Result};

pub const WEIGHTS_MAGIC: [u8; 4] = *b"OPMW";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

/// Stored model: architecture plus every parameter and batch-norm buffer,
/// narrowed to f32. Networks rebuilt from it widen exactly, so a weights value
/// and its decoded file give identical predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub version: u32,
    pub config: CompactCnnConfig,
    pub entries: Vec<WeightEntry>,
}

impl Cnn {
    pub fn to_weights(&self) -> ModelWeights {
        ModelWeights {
            version: WEIGHTS_VERSION,
            config: self.config.clone(),
            entries: self
                .params
                .iter()
                .map(|p| WeightEntry {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    values: p.data.iter().map(|&v| v as f32).collect(),
                })
                .collect(),
        }
    }

    pub fn from_weights(w: &ModelWeights) -> Result<Self> {
        if w.version != WEIGHTS_VERSION {
            return Err(Error::param(format!("unsupported weights version {}", w.version)));
        }
        let mut net = Cnn::new(w.config.clone(), 0)?;
        if net.params.len() != w.entries.len() {
            return Err(Error::param(format!(
                "architecture has {} tensors, weights have {}",
                net.params.len(),
                w.entries.len()
            )));
        }
        for (p, e) in net.params.iter_mut().zip(&w.entries) {
            if p.name != e.name || p.shape != e.shape || p.data.len() != e.values.len() {
                return Err(Error::param(format!(
                    "weights entry {} {:?} does not match {} {:?}",
                    e.name, e.shape, p.name, p.shape
                )));
            }
            p.data = e.values.iter().map(|&v| v as f64).collect();
        }
        Ok(net)
    }

    /// Rounds every parameter to f32 precision in place.
    pub fn quantize(&mut self) {
        for Param { data, .. } in &mut self.params {
            for v in data.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!("truncated {what}: need {n} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

impl ModelWeights {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(&WEIGHTS_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        let cfg = serde_json::to_vec(&self.config)?;
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(&cfg);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            let name = e.name.as_bytes();
            let name_len = u16::try_from(name.len())
                .map_err(|_| Error::param(format!("tensor name too long: {}", e.name)))?;
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(name);
            let rank = u8::try_from(e.shape.len()).map_err(|_| Error::param("tensor rank above 255"))?;
            out.push(rank);
            for &d in &e.shape {
                let d = u32::try_from(d).map_err(|_| Error::param("tensor dimension above u32"))?;
                out.extend_from_slice(&d.to_le_bytes());
            }
            if e.values.len() != e.shape.iter().product::<usize>() {
                return Err(Error::param(format!("entry {} has inconsistent size", e.name)));
            }
            for v in &e.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4, "magic")? != WEIGHTS_MAGIC {
            return Err(Error::format(0, "not a weights file (bad magic)"));
        }
        let at = r.pos as u64;
        let version = r.u32("version")?;
        if version != WEIGHTS_VERSION {
            return Err(Error::format(at, format!("unsupported version {version}")));
        }
        let len = r.u32("config length")? as usize;
        let at = r.pos as u64;
        let config: CompactCnnConfig = serde_json::from_slice(r.take(len, "config")?)
            .map_err(|e| Error::format(at, format!("bad config: {e}")))?;
        let count = r.u32("entry count")? as usize;
        let mut entries = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name_len = r.u16("name length")? as usize;
            let at = r.pos as u64;
            let name = std::str::from_utf8(r.take(name_len, "name")?)
                .map_err(|_| Error::format(at, "tensor name is not UTF-8"))?
                .to_owned();
            let rank = r.u8("rank")? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32("dimension")? as usize);
            }
            let at = r.pos;
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .and_then(|n| n.checked_mul(4).map(|b| (n, b)))
                .ok_or_else(|| Error::format(at as u64, "tensor size overflows"))?;
            let raw = r.take(n.1, "values")?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            entries.push(WeightEntry { name, shape, values });
        }
        if r.pos != buf.len() {
            return Err(Error::format(r.pos as u64, format!("{} trailing bytes", buf.len() - r.pos)));
        }
        Ok(Self {
            version,
            config,
            entries,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Cnn {
        Cnn::new(CompactCnnConfig::desk(4), 11).unwrap()
    }

    #[test]
    fn bytes_roundtrip_bit_exact() {
        let w = small().to_weights();
        let back = ModelWeights::from_bytes(&w.to_bytes().unwrap()).unwrap();
        assert_eq!(back, w);
        let bits = |w: &ModelWeights| -> Vec<u32> {
            w.entries.iter().flat_map(|e| e.values.iter().map(|v| v.to_bits())).collect()
        };
        assert_eq!(bits(&back), bits(&w));
    }

    #[test]
    fn errors_carry_offsets() {
        let bytes = small().to_weights().to_bytes().unwrap();
        match ModelWeights::from_bytes(&bytes[..bytes.len() - 3]) {
            Err(Error::Format { offset, .. }) => assert!(offset > 8),
            other => panic!("{other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ModelWeights::from_bytes(&bad), Err(Error::Format { offset: 0, .. })));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(ModelWeights::from_bytes(&bad), Err(Error::Format { offset: 4, .. })));
        let mut long = bytes;
        long.push(0);
        assert!(ModelWeights::from_bytes(&long).is_err());
    }

    #[test]
    fn widen_narrow_consistent() {
        let mut net = small();
        net.quantize();
        let back = Cnn::from_weights(&net.to_weights()).unwrap();
        assert_eq!(back, net);
    }
}
