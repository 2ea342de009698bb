use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::{emit_report, write_json, ReportFormat};
use super::{evaluate_with, EvalOptions, EvalReport, TrainedModel};
use crate::channel::{add_noise_snr, apply_plan, expanded_copy, AugMask, AugRanges, EXPANSION_FACTOR};
use crate::classifier::{train, Cnn, EpochRecord, EpochSource, Example, ExampleSet, TrainOutcome};
use crate::config::RunConfig;
use crate::dsp::RealSignal;
use crate::error::{Error, Result};
use crate::features::{featurize, window_count, window_slices, SpectrogramConfig};
use crate::modes::{build_dataset_for, Split};
use crate::parallel::par_map;
use crate::seeds;

/// Labelled signals, label = class position.
pub type SignalSet = Vec<(usize, RealSignal)>;

/// Clean synthesized splits for the configured classes.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub classes: Vec<String>,
    pub train: SignalSet,
    pub val: SignalSet,
    pub test: SignalSet,
}

/// Synthesizes the train, validation and test splits.
pub fn build_data(cfg: &RunConfig) -> Result<ExperimentData> {
    cfg.validate()?;
    let idx = cfg.class_indices()?;
    let split = |split: Split, dur: f64| -> Result<SignalSet> {
        let ds = build_dataset_for(&idx, split, dur, cfg.data_seed())?;
        ds.entries
            .into_iter()
            .map(|e| {
                let label = idx
                    .iter()
                    .position(|&i| i == e.omp_index)
                    .ok_or_else(|| Error::Internal(format!("unexpected class {}", e.omp_label)))?;
                Ok((label, e.signal))
            })
            .collect()
    };
    Ok(ExperimentData {
        classes: cfg.class_labels(),
        train: split(Split::Train, cfg.dataset.train_duration_s)?,
        val: split(Split::Val, cfg.dataset.val_duration_s)?,
        test: split(Split::Test, cfg.dataset.test_duration_s)?,
    })
}

fn cut_windows(set: &[(usize, RealSignal)], duration_s: f64, shift_s: f64) -> Result<SignalSet> {
    let mut out = Vec::new();
    for (label, s) in set {
        out.extend(window_slices(s, duration_s, shift_s)?.into_iter().map(|w| (*label, w)));
    }
    Ok(out)
}

/// Windows featurized on demand.
pub struct WindowSet {
    windows: SignalSet,
    spec: SpectrogramConfig,
    threads: usize,
}

impl WindowSet {
    pub fn new(windows: SignalSet, spec: SpectrogramConfig, threads: usize) -> Self {
        Self { windows, spec, threads }
    }
}

impl ExampleSet for WindowSet {
    fn len(&self) -> usize {
        self.windows.len()
    }

    fn example(&self, index: usize) -> Result<Example> {
        let (label, w) = self
            .windows
            .get(index)
            .ok_or_else(|| Error::param(format!("window {index} out of range")))?;
        Ok(Example {
            input: featurize(w, &self.spec)?,
            label: *label,
        })
    }

    fn examples(&self, indices: &[usize]) -> Result<Vec<Example>> {
        par_map(indices, self.threads, |&i| self.example(i)).into_iter().collect()
    }
}

/// Training windows expanded six-fold every epoch: five copies with freshly
/// sampled impairment plans and the clean window. Item `i` is copy `i % 6` of
/// window `i / 6`, and its plan seed depends only on (run seed, window, epoch,
/// copy).
pub struct AugmentedTrainSource {
    windows: SignalSet,
    spec: SpectrogramConfig,
    ranges: AugRanges,
    mask: AugMask,
    seed: u64,
    epoch_seed: u64,
    threads: usize,
}

impl AugmentedTrainSource {
    pub fn new(windows: SignalSet, spec: SpectrogramConfig, ranges: AugRanges, mask: AugMask, seed: u64, threads: usize) -> Self {
        Self {
            windows,
            spec,
            ranges,
            mask,
            seed,
            epoch_seed: 0,
            threads,
        }
    }
}

impl ExampleSet for AugmentedTrainSource {
    fn len(&self) -> usize {
        self.windows.len() * EXPANSION_FACTOR
    }

    fn example(&self, index: usize) -> Result<Example> {
        let base = index / EXPANSION_FACTOR;
        let (label, w) = self
            .windows
            .get(base)
            .ok_or_else(|| Error::param(format!("item {index} out of range")))?;
        let item = expanded_copy(
            *label,
            w,
            base as u64,
            index % EXPANSION_FACTOR,
            &self.ranges,
            &self.mask,
            self.seed,
            self.epoch_seed,
        )?;
        Ok(Example {
            input: featurize(&item.signal, &self.spec)?,
            label: item.label,
        })
    }

    fn examples(&self, indices: &[usize]) -> Result<Vec<Example>> {
        par_map(indices, self.threads, |&i| self.example(i)).into_iter().collect()
    }
}

impl EpochSource for AugmentedTrainSource {
    fn begin_epoch(&mut self, _epoch: usize, epoch_seed: u64) -> Result<()> {
        self.epoch_seed = epoch_seed;
        Ok(())
    }
}

/// Applies the configured validation plan, with a per-class generator seed
/// derived from `seed`, to each whole signal.
fn impair(set: &[(usize, RealSignal)], cfg: &RunConfig, seed: u64) -> Result<SignalSet> {
    let threads = cfg.threads();
    par_map(set, threads, |(label, s)| {
        let plan = cfg
            .augmentation
            .val_plan
            .clone()
            .with_seed(seeds::derive(&[seed, *label as u64]));
        Ok((*label, apply_plan(s, &plan)?))
    })
    .into_iter()
    .collect()
}

/// The simulated test condition: the validation plan's impairments with a
/// held-out generator seed.
pub fn impaired_test_set(cfg: &RunConfig, data: &ExperimentData) -> Result<SignalSet> {
    impair(&data.test, cfg, cfg.test_plan_seed())
}

/// Trains one model on `data` as configured.
pub fn train_model(
    cfg: &RunConfig,
    data: &ExperimentData,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<(TrainedModel, TrainOutcome)> {
    cfg.validate()?;
    let spec = cfg.features.spectrogram()?;
    let dur = cfg.features.duration_s;
    let shift = cfg.eval.training_shift(dur);
    let threads = cfg.threads();
    let mut source = AugmentedTrainSource::new(
        cut_windows(&data.train, dur, shift)?,
        spec,
        cfg.augmentation.ranges,
        cfg.augmentation.mask,
        cfg.augmentation_seed(),
        threads,
    );
    let val_seed = cfg.augmentation.val_plan.rng_seed;
    let val = WindowSet::new(cut_windows(&impair(&data.val, cfg, val_seed)?, dur, shift)?, spec, threads);
    let mut net = Cnn::new(cfg.model_config(), cfg.init_seed())?;
    let outcome = train(&mut net, &mut source, &val, &cfg.train_config(), observer)?;
    Ok((
        TrainedModel {
            weights: outcome.best.clone(),
            classes: data.classes.clone(),
            features: spec,
        },
        outcome,
    ))
}

/// Everything one configured run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub model: TrainedModel,
    pub outcome: TrainOutcome,
    /// Evaluation on the impaired test condition.
    pub report: EvalReport,
}

fn eval_options(cfg: &RunConfig) -> EvalOptions {
    EvalOptions {
        max_windows: cfg.eval.max_windows_per_class,
        threads: cfg.threads(),
    }
}

/// Trains and evaluates one configuration. With `out_dir`, writes the run
/// directory: `config.toml`, `weights.bin`, `model.json`, `history.json`,
/// `report.json` and confusion CSVs.
pub fn run_experiment(
    cfg: &RunConfig,
    data: &ExperimentData,
    out_dir: Option<&Path>,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<RunResult> {
    let (model, outcome) = train_model(cfg, data, observer)?;
    let test = impaired_test_set(cfg, data)?;
    let report = evaluate_with(&model, &test, cfg.features.duration_s, cfg.eval.shift_s, &eval_options(cfg))?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        cfg.save(&dir.join("config.toml"))?;
        model.save(dir)?;
        write_json(&dir.join("history.json"), &outcome.history)?;
        emit_report(&report, dir, ReportFormat::Table)?;
    }
    Ok(RunResult { model, outcome, report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub omp_accuracy: f64,
    pub om_accuracy: f64,
    pub decisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrCurve {
    pub label: String,
    pub duration_s: f64,
    pub n_fft: usize,
    pub points: Vec<SnrPoint>,
}

impl SnrCurve {
    /// Adjacent pairs where accuracy falls by more than `tolerance` points as
    /// SNR rises, as (lower SNR, higher SNR, drop).
    pub fn monotonic_violations(&self, tolerance: f64) -> Vec<(f64, f64, f64)> {
        self.points
            .windows(2)
            .filter_map(|w| {
                let drop = w[0].omp_accuracy - w[1].omp_accuracy;
                (drop > tolerance).then_some((w[0].snr_db, w[1].snr_db, drop))
            })
            .collect()
    }

    pub fn accuracy_at(&self, snr_db: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.snr_db - snr_db).abs() < 1e-9)
            .map(|p| p.omp_accuracy)
    }
}

/// Accuracy over SNR. Calibrated noise is added to the clean test signals
/// before windowing. Each class uses the same noise realization (scaled) at
/// every SNR, so the curve reflects the SNR change rather than noise draws.
pub fn run_snr_sweep(
    model: &TrainedModel,
    clean_test: &[(usize, RealSignal)],
    snr_list_db: &[f64],
    shift_s: f64,
    noise_seed: u64,
    opts: &EvalOptions,
) -> Result<SnrCurve> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let mut points = Vec::with_capacity(snr_list_db.len());
    for &snr in snr_list_db {
        let noisy: SignalSet = par_map(clean_test, opts.threads, |(label, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(&[noise_seed, *label as u64]));
            Ok((*label, add_noise_snr(s, snr, &mut rng)?))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let r = evaluate_with(model, &noisy, model.features.duration_s, shift_s, opts)?;
        points.push(SnrPoint {
            snr_db: snr,
            omp_accuracy: r.omp_accuracy,
            om_accuracy: r.om_accuracy,
            decisions: r.decisions,
        });
    }
    Ok(SnrCurve {
        label: format!("{}s", model.features.duration_s),
        duration_s: model.features.duration_s,
        n_fft: model.features.n_fft,
        points,
    })
}

/// Training conditions of the augmentation ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationRow {
    WithAll,
    NoAmplify,
    NoFreqShift,
    NoSimTone1,
    NoSimTones,
    NoNoise,
    WithoutAll,
}

impl AblationRow {
    pub const ALL: [AblationRow; 7] = [
        AblationRow::WithAll,
        AblationRow::NoAmplify,
        AblationRow::NoFreqShift,
        AblationRow::NoSimTone1,
        AblationRow::NoSimTones,
        AblationRow::NoNoise,
        AblationRow::WithoutAll,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AblationRow::WithAll => "with all Augs.",
            AblationRow::NoAmplify => "-Amplify",
            AblationRow::NoFreqShift => "-FreqShift",
            AblationRow::NoSimTone1 => "-SimTone1",
            AblationRow::NoSimTones => "-SimTone1/2",
            AblationRow::NoNoise => "-Noise",
            AblationRow::WithoutAll => "without all Augs.",
        }
    }

    pub fn mask(self) -> AugMask {
        let all = AugMask::all();
        match self {
            AblationRow::WithAll => all,
            AblationRow::NoAmplify => AugMask { amplify: false, ..all },
            AblationRow::NoFreqShift => AugMask { freq_shift: false, ..all },
            AblationRow::NoSimTone1 => AugMask { sim_tone_1: false, ..all },
            AblationRow::NoSimTones => AugMask {
                sim_tone_1: false,
                sim_tone_2: false,
                ..all
            },
            AblationRow::NoNoise => AugMask { noise: false, ..all },
            AblationRow::WithoutAll => AugMask::none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub row: AblationRow,
    pub label: String,
    pub report: EvalReport,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationResult>,
}

/// One full train + impaired-test evaluation per row, all on the same data.
/// Row runs go to `out_dir/<row>/` when a directory is given.
pub fn run_ablation(
    cfg: &RunConfig,
    data: &ExperimentData,
    rows: &[AblationRow],
    out_dir: Option<&Path>,
    observer: &mut dyn FnMut(AblationRow, &EpochRecord),
) -> Result<AblationTable> {
    let mut out = Vec::with_capacity(rows.len());
    for &row in rows {
        let mut c = cfg.clone();
        c.augmentation.mask = row.mask();
        let dir: Option<PathBuf> = out_dir.map(|d| d.join(serde_json::to_value(row).map(|v| v.as_str().unwrap_or("row").to_owned()).unwrap_or_default()));
        let r = run_experiment(&c, data, dir.as_deref(), &mut |e| observer(row, e))?;
        out.push(AblationResult {
            row,
            label: row.label().to_owned(),
            report: r.report,
            best_epoch: r.outcome.best_epoch,
        });
    }
    Ok(AblationTable { rows: out })
}

/// Duration × transform-length grid, one model per cell and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub durations_s: Vec<f64>,
    pub n_ffts: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            durations_s: vec![4.0, 3.0, 2.0, 1.0],
            n_ffts: vec![256, 128, 64],
            seeds: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub duration_s: f64,
    pub n_fft: usize,
    pub omp_mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub omp_spread: f64,
    pub om_mean: f64,
    pub om_spread: f64,
    pub decisions: usize,
    pub omp_per_seed: Vec<f64>,
    pub om_per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub spec: GridSpec,
    pub cells: Vec<GridCell>,
}

fn mean_spread(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

impl GridTable {
    pub fn cell(&self, duration_s: f64, n_fft: usize) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| (c.duration_s - duration_s).abs() < 1e-9 && c.n_fft == n_fft)
    }
}

/// Trains and evaluates every grid cell for every seed. All cells evaluate the
/// same number of windows per class: the count the longest duration allows.
pub fn run_grid(
    cfg: &RunConfig,
    grid: &GridSpec,
    out_dir: Option<&Path>,
    observer: &mut dyn FnMut(f64, usize, u64, &EpochRecord),
) -> Result<GridTable> {
    if grid.durations_s.is_empty() || grid.n_ffts.is_empty() || grid.seeds.is_empty() {
        return Err(Error::param("grid needs durations, transform lengths and seeds"));
    }
    let longest = grid.durations_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let test_len = (cfg.dataset.test_duration_s * crate::AF_RATE_HZ as f64).round() as usize;
    let cap = window_count(test_len, crate::AF_RATE_HZ, longest, cfg.eval.shift_s)?;
    let mut per_cell: Vec<(f64, usize, Vec<EvalReport>)> = Vec::new();
    for &d in &grid.durations_s {
        for &n in &grid.n_ffts {
            per_cell.push((d, n, Vec::new()));
        }
    }
    for &seed in &grid.seeds {
        let mut base = cfg.clone();
        base.seed = seed;
        let data = build_data(&base)?;
        for (d, n, reports) in per_cell.iter_mut() {
            let mut c = base.clone();
            c.features.duration_s = *d;
            c.features.n_fft = *n;
            c.eval.max_windows_per_class = Some(cap);
            let dir = out_dir.map(|o| o.join(format!("{d}s_{n}_seed{seed}")));
            let (dd, nn) = (*d, *n);
            let r = run_experiment(&c, &data, dir.as_deref(), &mut |e| observer(dd, nn, seed, e))?;
            reports.push(r.report);
        }
    }
    let cells = per_cell
        .into_iter()
        .map(|(d, n, reports)| {
            let omp: Vec<f64> = reports.iter().map(|r| r.omp_accuracy).collect();
            let om: Vec<f64> = reports.iter().map(|r| r.om_accuracy).collect();
            let (omp_mean, omp_spread) = mean_spread(&omp);
            let (om_mean, om_spread) = mean_spread(&om);
            GridCell {
                duration_s: d,
                n_fft: n,
                omp_mean,
                omp_spread,
                om_mean,
                om_spread,
                decisions: reports[0].decisions,
                omp_per_seed: omp,
                om_per_seed: om,
            }
        })
        .collect();
    Ok(GridTable {
        spec: grid.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_rows() {
        let labels: Vec<_> = AblationRow::ALL.iter().map(|r| r.label()).collect();
        assert_eq!(
            labels,
            ["with all Augs.", "-Amplify", "-FreqShift", "-SimTone1", "-SimTone1/2", "-Noise", "without all Augs."]
        );
        assert!(!AblationRow::NoNoise.mask().noise);
        assert!(AblationRow::NoNoise.mask().amplify);
        assert_eq!(AblationRow::WithoutAll.mask(), AugMask::none());
    }

    #[test]
    fn curve_violations() {
        let pts = |v: &[f64]| SnrCurve {
            label: "x".into(),
            duration_s: 1.0,
            n_fft: 64,
            points: v
                .iter()
                .enumerate()
                .map(|(i, &a)| SnrPoint {
                    snr_db: -6.0 + 3.0 * i as f64,
                    omp_accuracy: a,
                    om_accuracy: a,
                    decisions: 1,
                })
                .collect(),
        };
        assert!(pts(&[10.0, 20.0, 19.0, 40.0]).monotonic_violations(2.0).is_empty());
        assert_eq!(pts(&[10.0, 20.0, 15.0]).monotonic_violations(2.0), vec![(-3.0, 0.0, 5.0)]);
        assert_eq!(pts(&[10.0, 20.0]).accuracy_at(-3.0), Some(20.0));
    }

    #[test]
    fn spread_is_sample_std() {
        let (m, s) = mean_spread(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        assert_eq!(mean_spread(&[5.0]), (5.0, 0.0));
    }
}
