use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{self, Split};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub omp_label: String,
    pub om_label: String,
    pub split: Split,
    pub seed: u64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    /// Fingerprint of the impairment plan applied, if any.
    #[serde(default)]
    pub augmentation_fingerprint: Option<String>,
}

/// An index of labelled audio files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            entries: Vec::new(),
        }
    }
}

impl Manifest {
    /// Labels must exist in the catalog with a consistent OM, and no payload
    /// seed may appear in two splits.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::param(format!(
                "manifest schema {} is not supported (expected {MANIFEST_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut seen: HashMap<(u64, &str), Split> = HashMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            let om = modes::rollup_om(&e.omp_label)
                .map_err(|_| Error::param(format!("entry {i}: unknown OMP {:?}", e.omp_label)))?;
            if om != e.om_label {
                return Err(Error::param(format!(
                    "entry {i}: {:?} belongs to {om:?}, not {:?}",
                    e.omp_label, e.om_label
                )));
            }
            if let Some(prev) = seen.insert((e.seed, e.omp_label.as_str()), e.split) {
                if prev != e.split {
                    return Err(Error::param(format!(
                        "entry {i}: seed {} of {:?} used in both {} and {}",
                        e.seed,
                        e.omp_label,
                        prev.as_str(),
                        e.split.as_str()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        crate::eval::write_json(path, self)
    }

    /// Loads and validates, failing on the first entry whose file is missing.
    pub fn load(path: &Path) -> Result<Self> {
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        m.validate()?;
        let base = path.parent().unwrap_or(Path::new(""));
        for (i, e) in m.entries.iter().enumerate() {
            let p = base.join(&e.path);
            if !p.is_file() {
                return Err(Error::param(format!(
                    "entry {i} ({}): file {} does not exist",
                    e.omp_label,
                    p.display()
                )));
            }
        }
        Ok(m)
    }

    /// Absolute (or manifest-relative joined) path of an entry.
    pub fn resolve(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
        manifest_path.parent().unwrap_or(Path::new("")).join(&entry.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(path: &str, omp: &str, om: &str, split: Split, seed: u64) -> ManifestEntry {
        ManifestEntry {
            path: path.into(),
            omp_label: omp.into(),
            om_label: om.into(),
            split,
            seed,
            duration_s: 1.0,
            sample_rate_hz: 6000,
            augmentation_fingerprint: None,
        }
    }

    #[test]
    fn integrity_checks() {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join("a.wav"), b"x").unwrap();
        let mut m = Manifest::default();
        m.entries.push(entry("a.wav", "Olivia 8/250", "Olivia", Split::Train, 1));
        let p = d.path().join("manifest.json");
        m.save(&p).unwrap();
        assert_eq!(Manifest::load(&p).unwrap(), m);

        m.entries.push(entry("b.wav", "CW", "CW", Split::Test, 2));
        m.save(&p).unwrap();
        let e = Manifest::load(&p).unwrap_err().to_string();
        assert!(e.contains("entry 1") && e.contains("b.wav"), "{e}");

        let mut bad = Manifest::default();
        bad.entries.push(entry("a.wav", "Olivia 8/250", "MFSK", Split::Train, 1));
        assert!(bad.validate().is_err());
        bad.entries[0] = entry("a.wav", "Olivia 9/9", "Olivia", Split::Train, 1);
        assert!(bad.validate().is_err());
        bad.entries = vec![
            entry("a.wav", "CW", "CW", Split::Train, 5),
            entry("a.wav", "CW", "CW", Split::Val, 5),
        ];
        assert!(bad.validate().unwrap_err().to_string().contains("both"));
    }
}
