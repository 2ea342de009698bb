//! Run configuration. `RunConfig::default()` mirrors the reference setup (all
//! 98 classes, 180/60/75 s splits, the full-size CNN, batch 256);
//! [`RunConfig::desk`] is a reduced preset that trains on one CPU core in minutes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{fixed_val_plan, AugMask, AugPlan, AugRanges};
use crate::classifier::{CompactCnnConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{SpectrogramConfig, DEFAULT_LOG_FLOOR_DB};
use crate::modes::{self, Split};
use crate::seeds;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// `Repro` runs single-threaded; `Fast` may spread per-item work over threads.
/// Both produce identical results because every item has its own derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    #[default]
    Repro,
    Fast,
}

/// Twenty classes chosen so that no two share a waveform up to protocol coding.
pub const DESK_SUBSET: [&str; 20] = [
    "BPSK 31",
    "BPSK 250",
    "QPSK 500",
    "8PSK 1000",
    "MC-PSK 500C2",
    "MC-PSK 500C4",
    "Olivia 8/250",
    "Olivia 32/1000",
    "Contestia 4/500",
    "MFSK 16",
    "MFSK 128",
    "DominoEx X88",
    "Thor 25x4",
    "Throb BX2",
    "MT63 1000S",
    "OFDM 750F",
    "RTTY",
    "CW",
    "Noise",
    "IFKP",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// OMP labels to use, in class-index order. Empty means the whole catalog.
    pub classes: Vec<String>,
    pub train_duration_s: f64,
    pub val_duration_s: f64,
    pub test_duration_s: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            classes: Vec::new(),
            train_duration_s: Split::Train.default_duration_s(),
            val_duration_s: Split::Val.default_duration_s(),
            test_duration_s: Split::Test.default_duration_s(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    pub ranges: AugRanges,
    pub mask: AugMask,
    /// Applied once to the validation split.
    pub val_plan: AugPlan,
    /// Seed for the impaired test condition (the validation plan's ops with a
    /// held-out generator). Derived from the run seed when absent.
    pub test_plan_seed: Option<u64>,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            ranges: AugRanges::default(),
            mask: AugMask::all(),
            val_plan: fixed_val_plan(),
            test_plan_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub n_fft: usize,
    pub duration_s: f64,
    pub log_floor_db: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            n_fft: 128,
            duration_s: 2.0,
            log_floor_db: DEFAULT_LOG_FLOOR_DB,
        }
    }
}

impl FeatureConfig {
    pub fn spectrogram(&self) -> Result<SpectrogramConfig> {
        let mut s = SpectrogramConfig::new(self.n_fft, self.duration_s)?;
        s.log_floor_db = self.log_floor_db;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Window shift of the test protocol.
    pub shift_s: f64,
    /// Window shift when cutting training and validation signals; defaults to
    /// the window duration capped at [`MAX_DEFAULT_TRAIN_SHIFT_S`].
    pub train_shift_s: Option<f64>,
    /// Cap on decisions per class, used to equalize counts across durations.
    pub max_windows_per_class: Option<usize>,
    pub snr_list_db: Vec<f64>,
}

/// Long windows overlap during training so a fixed amount of audio still
/// yields enough examples: without the cap a 4 s model sees a quarter of the
/// windows of a 1 s model.
pub const MAX_DEFAULT_TRAIN_SHIFT_S: f64 = 2.0;

impl EvalConfig {
    /// Training shift for windows of `duration_s`.
    pub fn training_shift(&self, duration_s: f64) -> f64 {
        self.train_shift_s.unwrap_or(duration_s.min(MAX_DEFAULT_TRAIN_SHIFT_S))
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            shift_s: 0.5,
            train_shift_s: None,
            max_windows_per_class: None,
            snr_list_db: default_snr_list(),
        }
    }
}

/// −6 to 27 dB in 3 dB steps.
pub fn default_snr_list() -> Vec<f64> {
    (0..12).map(|i| -6.0 + 3.0 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub exec: ExecMode,
    /// Worker threads in fast mode; 0 picks the available parallelism.
    pub threads: usize,
    pub dataset: DatasetConfig,
    pub augmentation: AugmentationConfig,
    pub features: FeatureConfig,
    /// Architecture; `num_classes` is overwritten with the class count.
    pub model: CompactCnnConfig,
    /// Optimizer settings; `seed` is overwritten with a value derived from the run seed.
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            exec: ExecMode::Repro,
            threads: 0,
            dataset: DatasetConfig::default(),
            augmentation: AugmentationConfig::default(),
            features: FeatureConfig::default(),
            model: CompactCnnConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

// Sub-seed tags.
const TAG_DATA: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_TRAIN: u64 = 3;
const TAG_TEST_PLAN: u64 = 4;
const TAG_SWEEP: u64 = 5;
const TAG_AUG: u64 = 6;

impl RunConfig {
    /// Reduced preset: the twenty-class subset, 60 s of training audio per
    /// class, the smaller CNN, batches of 64 and at most 20 epochs.
    pub fn desk() -> Self {
        let classes: Vec<String> = DESK_SUBSET.iter().map(|s| s.to_string()).collect();
        let mut train = TrainConfig::desk();
        train.max_epochs = 20;
        Self {
            dataset: DatasetConfig {
                classes,
                train_duration_s: 60.0,
                ..DatasetConfig::default()
            },
            model: CompactCnnConfig::desk(DESK_SUBSET.len()),
            train,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::param(format!(
                "config schema {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let labels = self.class_labels();
        if labels.len() < 2 {
            return Err(Error::param("need at least two classes"));
        }
        let idx = self.class_indices()?;
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != idx.len() {
            return Err(Error::param("class list contains duplicates"));
        }
        let d = &self.dataset;
        for (name, v) in [
            ("train", d.train_duration_s),
            ("val", d.val_duration_s),
            ("test", d.test_duration_s),
        ] {
            if !(v >= self.features.duration_s) {
                return Err(Error::param(format!(
                    "{name} duration {v} s is shorter than the {} s window",
                    self.features.duration_s
                )));
            }
        }
        self.features.spectrogram()?;
        self.model_config().validate()?;
        self.train.validate()?;
        for op in &self.augmentation.val_plan.ops {
            op.validate()?;
        }
        if !(self.eval.shift_s > 0.0) || self.eval.train_shift_s.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::param("window shifts must be positive"));
        }
        Ok(())
    }

    pub fn class_labels(&self) -> Vec<String> {
        if self.dataset.classes.is_empty() {
            modes::catalog().iter().map(|m| m.omp_label.clone()).collect()
        } else {
            self.dataset.classes.clone()
        }
    }

    /// Catalog indices of the configured classes, in class order.
    pub fn class_indices(&self) -> Result<Vec<usize>> {
        self.class_labels()
            .iter()
            .map(|l| modes::find(l).map(|m| m.index()))
            .collect()
    }

    pub fn model_config(&self) -> CompactCnnConfig {
        CompactCnnConfig {
            num_classes: self.class_labels().len(),
            ..self.model.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.train_seed(),
            ..self.train.clone()
        }
    }

    pub fn data_seed(&self) -> u64 {
        seeds::derive(&[self.seed, TAG_DATA])
    }

    pub fn init_seed(&self) -> u64 {
        seeds::derive(&[self.seed, TAG_INIT])
    }

    pub fn train_seed(&self) -> u64 {
        seeds::derive(&[self.seed, TAG_TRAIN])
    }

    pub fn augmentation_seed(&self) -> u64 {
        seeds::derive(&[self.seed, TAG_AUG])
    }

    pub fn test_plan_seed(&self) -> u64 {
        self.augmentation
            .test_plan_seed
            .unwrap_or_else(|| seeds::derive(&[self.seed, TAG_TEST_PLAN]))
    }

    pub fn sweep_noise_seed(&self) -> u64 {
        seeds::derive(&[self.seed, TAG_SWEEP])
    }

    pub fn threads(&self) -> usize {
        match self.exec {
            ExecMode::Repro => 1,
            ExecMode::Fast if self.threads > 0 => self.threads,
            ExecMode::Fast => std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reference_setup() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.class_labels().len(), 98);
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.augmentation.val_plan, fixed_val_plan());
        assert_eq!(c.augmentation.ranges, AugRanges::default());
        assert_eq!(c.dataset.train_duration_s, 180.0);
        assert_eq!(c.eval.snr_list_db.first(), Some(&-6.0));
        assert_eq!(c.eval.snr_list_db.last(), Some(&27.0));
    }

    #[test]
    fn training_shift_caps_long_windows() {
        let mut e = EvalConfig::default();
        assert_eq!(e.training_shift(1.0), 1.0);
        assert_eq!(e.training_shift(2.0), 2.0);
        assert_eq!(e.training_shift(4.0), 2.0);
        e.train_shift_s = Some(0.5);
        assert_eq!(e.training_shift(4.0), 0.5);
    }

    #[test]
    fn desk_subset_is_waveform_distinct() {
        let c = RunConfig::desk();
        c.validate().unwrap();
        let mut groups: Vec<String> = c
            .class_indices()
            .unwrap()
            .iter()
            .map(|&i| {
                let m = &modes::catalog()[i];
                m.waveform_degenerate_group.clone().unwrap_or_else(|| m.omp_label.clone())
            })
            .collect();
        groups.sort();
        groups.dedup();
        assert_eq!(groups.len(), 20);
    }

    #[test]
    fn toml_roundtrip() {
        for c in [RunConfig::default(), RunConfig::desk()] {
            let text = c.to_toml().unwrap();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        }
        // an empty file is the default configuration
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = RunConfig::desk();
        c.dataset.classes.push("BPSK 31".into());
        assert!(c.validate().is_err());
        let mut c = RunConfig::desk();
        c.dataset.classes = vec!["Nope".into(), "CW".into()];
        assert!(c.validate().is_err());
        let mut c = RunConfig::desk();
        c.dataset.test_duration_s = 1.0;
        assert!(c.validate().is_err());
        assert!(RunConfig::from_toml("schema_version = 7").is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let c = RunConfig::default();
        let s = [c.data_seed(), c.init_seed(), c.train_seed(), c.test_plan_seed(), c.sweep_noise_seed(), c.augmentation_seed()];
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                assert_ne!(s[i], s[j]);
            }
        }
    }
}
