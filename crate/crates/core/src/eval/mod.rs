//! Evaluation protocol: one decision per sliding window, OMP and OM accuracy,
//! confusion matrices; plus the experiment drivers built on it.

mod experiment;
mod report;

pub use experiment::{
    build_data, impaired_test_set, run_ablation, run_experiment, run_grid, run_snr_sweep, train_model,
    AblationResult, AblationRow, AblationTable, AugmentedTrainSource, ExperimentData, GridCell, GridSpec,
    GridTable, RunResult, SignalSet, SnrCurve, SnrPoint, WindowSet,
};
pub use report::{
    emit_ablation, emit_grid, emit_report, emit_snr_curves, grid_csv, summary_text, write_json, ReportFormat,
};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{predict, Cnn, ModelWeights};
use crate::dsp::RealSignal;
use crate::error::{Error, Result};
use crate::features::{featurize, window_slices, SpectrogramConfig};
use crate::modes;
use crate::parallel::par_map;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Window shift of the evaluation protocol.
pub const DEFAULT_SHIFT_S: f64 = 0.5;

/// A trained network together with what it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub weights: ModelWeights,
    /// OMP label of each output class.
    pub classes: Vec<String>,
    pub features: SpectrogramConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    classes: Vec<String>,
    features: SpectrogramConfig,
}

impl TrainedModel {
    /// Writes `weights.bin` and `model.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.weights.save(&dir.join("weights.bin"))?;
        write_json(
            &dir.join("model.json"),
            &ModelMeta {
                classes: self.classes.clone(),
                features: self.features,
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let weights = ModelWeights::load(&dir.join("weights.bin"))?;
        let meta: ModelMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("model.json"))?)?;
        if meta.classes.len() != weights.config.num_classes {
            return Err(Error::param(format!(
                "{} class labels for a {}-class network",
                meta.classes.len(),
                weights.config.num_classes
            )));
        }
        Ok(Self {
            weights,
            classes: meta.classes,
            features: meta.features,
        })
    }
}

/// One window's ground truth and prediction, as class indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub truth: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub duration_s: f64,
    pub shift_s: f64,
    pub n_fft: usize,
    /// OMP labels in class-index order.
    pub classes: Vec<String>,
    /// All OM labels, the axes of `confusion_om`.
    pub om_classes: Vec<String>,
    pub decisions: usize,
    pub windows_per_class: Vec<usize>,
    /// Percent.
    pub omp_accuracy: f64,
    /// Percent, after mapping truth and prediction to their OM.
    pub om_accuracy: f64,
    pub per_class_accuracy: BTreeMap<String, f64>,
    /// Row-normalized, rows are the true class. Rows of absent classes are zero.
    pub confusion_omp: Vec<Vec<f64>>,
    pub confusion_om: Vec<Vec<f64>>,
}

fn normalize_rows(counts: Vec<Vec<u64>>) -> Vec<Vec<f64>> {
    counts
        .into_iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect()
}

impl EvalReport {
    pub fn from_decisions(
        classes: &[String],
        decisions: &[Decision],
        duration_s: f64,
        shift_s: f64,
        n_fft: usize,
    ) -> Result<Self> {
        if decisions.is_empty() {
            return Err(Error::param("no decisions to report"));
        }
        let k = classes.len();
        let om_classes: Vec<String> = modes::om_labels().iter().map(|s| s.to_string()).collect();
        let om_of: Vec<usize> = classes
            .iter()
            .map(|c| {
                let om = modes::rollup_om(c)?;
                Ok(om_classes.iter().position(|o| o == om).expect("rollup yields a catalog OM"))
            })
            .collect::<Result<_>>()?;
        let mut omp = vec![vec![0u64; k]; k];
        let mut om = vec![vec![0u64; om_classes.len()]; om_classes.len()];
        let mut windows = vec![0usize; k];
        let (mut hit_omp, mut hit_om) = (0usize, 0usize);
        for d in decisions {
            if d.truth >= k || d.predicted >= k {
                return Err(Error::param(format!("decision {d:?} outside {k} classes")));
            }
            omp[d.truth][d.predicted] += 1;
            om[om_of[d.truth]][om_of[d.predicted]] += 1;
            windows[d.truth] += 1;
            hit_omp += usize::from(d.truth == d.predicted);
            hit_om += usize::from(om_of[d.truth] == om_of[d.predicted]);
        }
        let n = decisions.len() as f64;
        let per_class_accuracy = classes
            .iter()
            .enumerate()
            .filter(|&(i, _)| windows[i] > 0)
            .map(|(i, c)| (c.clone(), 100.0 * omp[i][i] as f64 / windows[i] as f64))
            .collect();
        let report = Self {
            schema_version: REPORT_SCHEMA_VERSION,
            duration_s,
            shift_s,
            n_fft,
            classes: classes.to_vec(),
            om_classes,
            decisions: decisions.len(),
            windows_per_class: windows,
            omp_accuracy: 100.0 * hit_omp as f64 / n,
            om_accuracy: 100.0 * hit_om as f64 / n,
            per_class_accuracy,
            confusion_omp: normalize_rows(omp),
            confusion_om: normalize_rows(om),
        };
        report.check_invariants()?;
        Ok(report)
    }

    /// OM accuracy never below OMP accuracy; confusion rows sum to 1 or 0.
    pub fn check_invariants(&self) -> Result<()> {
        if self.om_accuracy < self.omp_accuracy {
            return Err(Error::Internal(format!(
                "OM accuracy {} below OMP accuracy {}",
                self.om_accuracy, self.omp_accuracy
            )));
        }
        for m in [&self.confusion_omp, &self.confusion_om] {
            for row in m {
                let s: f64 = row.iter().sum();
                if s != 0.0 && (s - 1.0).abs() > 1e-9 {
                    return Err(Error::Internal(format!("confusion row sums to {s}")));
                }
            }
        }
        Ok(())
    }
}

/// Evaluation knobs beyond duration and shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Keep at most this many windows per test signal (the first ones).
    pub max_windows: Option<usize>,
    pub threads: usize,
}

/// Windowed evaluation with default options.
pub fn evaluate(
    model: &TrainedModel,
    test: &[(usize, RealSignal)],
    duration_s: f64,
    shift_s: f64,
) -> Result<EvalReport> {
    evaluate_with(model, test, duration_s, shift_s, &EvalOptions::default())
}

/// Cuts every test signal into `duration_s` windows every `shift_s` and
/// classifies each window independently.
pub fn evaluate_with(
    model: &TrainedModel,
    test: &[(usize, RealSignal)],
    duration_s: f64,
    shift_s: f64,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if (duration_s - model.features.duration_s).abs() > 1e-9 {
        return Err(Error::param(format!(
            "model was trained on {} s windows, evaluation asked for {duration_s} s",
            model.features.duration_s
        )));
    }
    if test.is_empty() {
        return Err(Error::param("empty test set"));
    }
    let net = Cnn::from_weights(&model.weights)?;
    if net.num_classes() != model.classes.len() {
        return Err(Error::param("class list does not match the network"));
    }
    let mut jobs: Vec<(usize, RealSignal)> = Vec::new();
    for (label, signal) in test {
        if *label >= model.classes.len() {
            return Err(Error::param(format!("test label {label} outside the model's classes")));
        }
        let mut w = window_slices(signal, duration_s, shift_s)?;
        if let Some(m) = opts.max_windows {
            w.truncate(m);
        }
        jobs.extend(w.into_iter().map(|s| (*label, s)));
    }
    let spec = model.features;
    let decisions = par_map(&jobs, opts.threads, |(truth, window)| -> Result<Decision> {
        let p = predict(&net, &featurize(window, &spec)?)?;
        Ok(Decision {
            truth: *truth,
            predicted: p.label,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    EvalReport::from_decisions(&model.classes, &decisions, duration_s, shift_s, spec.n_fft)
}
