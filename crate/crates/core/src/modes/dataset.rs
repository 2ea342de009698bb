use serde::{Deserialize, Serialize};

use super::catalog::catalog;
use super::payload::Payload;
use super::synth::synthesize;
use crate::dsp::RealSignal;
use crate::error::{Error, Result};
use crate::seeds;
use crate::AF_RATE_HZ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    /// Seconds generated per OMP: 180 s train, 60 s validation, 75 s test.
    pub fn default_duration_s(self) -> f64 {
        match self {
            Split::Train => 180.0,
            Split::Val => 60.0,
            Split::Test => 75.0,
        }
    }

    fn tag(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Val => 2,
            Split::Test => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::param(format!("unknown split {other:?}"))),
        }
    }
}

/// A synthesized clean signal with its labels.
#[derive(Debug, Clone)]
pub struct LabeledSignal {
    /// Index into [`catalog`].
    pub omp_index: usize,
    pub omp_label: String,
    pub om_label: String,
    pub split: Split,
    pub seed: u64,
    pub signal: RealSignal,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub split: Split,
    pub duration_s: f64,
    pub entries: Vec<LabeledSignal>,
}

/// Payload seed for one (global seed, split, OMP) triple. The split tag keeps
/// seeds of different splits apart.
pub fn payload_seed(global_seed: u64, split: Split, omp_index: usize) -> u64 {
    seeds::derive(&[global_seed, split.tag(), omp_index as u64])
}

/// One signal per catalog OMP.
pub fn build_dataset(split: Split, duration_per_omp_s: f64, seed: u64) -> Result<Dataset> {
    let all: Vec<usize> = (0..catalog().len()).collect();
    build_dataset_for(&all, split, duration_per_omp_s, seed)
}

/// One signal per listed catalog index.
pub fn build_dataset_for(omp_indices: &[usize], split: Split, duration_per_omp_s: f64, seed: u64) -> Result<Dataset> {
    if !(duration_per_omp_s > 0.0) {
        return Err(Error::param(format!(
            "duration per OMP must be positive, got {duration_per_omp_s}"
        )));
    }
    let cat = catalog();
    let mut entries = Vec::with_capacity(omp_indices.len());
    for &idx in omp_indices {
        let spec = cat
            .get(idx)
            .ok_or_else(|| Error::param(format!("catalog index {idx} out of range")))?;
        let s = payload_seed(seed, split, idx);
        let signal = synthesize(spec, &Payload::new(s), duration_per_omp_s, AF_RATE_HZ)?;
        entries.push(LabeledSignal {
            omp_index: idx,
            omp_label: spec.omp_label.clone(),
            om_label: spec.om_label.clone(),
            split,
            seed: s,
            signal,
        });
    }
    Ok(Dataset {
        split,
        duration_s: duration_per_omp_s,
        entries,
    })
}
