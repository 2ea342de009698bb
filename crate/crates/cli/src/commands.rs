use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use opmode_core::channel::{apply_plan, fixed_val_plan, sample_train_plan, AugPlan, AugRanges};
use opmode_core::classifier::EpochRecord;
use opmode_core::config::{default_snr_list, ExecMode, RunConfig};
use opmode_core::dsp::RealSignal;
use opmode_core::eval::{
    build_data, emit_ablation, emit_grid, emit_report, emit_snr_curves, evaluate_with, run_ablation, run_experiment,
    run_grid, run_snr_sweep, summary_text, AblationRow, AblationTable, EvalOptions, EvalReport, GridSpec, GridTable,
    ReportFormat, SignalSet, SnrCurve, TrainedModel,
};
use opmode_core::features::{spectrogram, SpectrogramConfig};
use opmode_core::io::{
    read_audio, read_iq, write_audio, write_iq, write_spectrogram, AudioFormat, ClipPolicy, IqMeta, Manifest,
    ManifestEntry,
};
use opmode_core::modes::{self, build_dataset_for, catalog, Split};
use opmode_core::rx::{channelize, usb_demodulate, usb_modulate, ChannelizerConfig};
use opmode_core::{seeds, AF_RATE_HZ};

use crate::{
    AblateArgs, AudioKind, AugmentArgs, Cli, Command, ConfigArgs, EvalArgs, FeaturizeArgs, GenArgs, GridArgs, PlanKind,
    Preset, ReportArgs, ReportKind, RunArgs, RxArgs, SweepArgs, TxsimArgs,
};

/// Ablation rows as accepted on the command line.
#[derive(Clone, Copy, ValueEnum)]
pub enum Row {
    WithAll,
    NoAmplify,
    NoFreqShift,
    NoSimTone1,
    NoSimTones,
    NoNoise,
    WithoutAll,
}

impl From<Row> for AblationRow {
    fn from(r: Row) -> Self {
        match r {
            Row::WithAll => AblationRow::WithAll,
            Row::NoAmplify => AblationRow::NoAmplify,
            Row::NoFreqShift => AblationRow::NoFreqShift,
            Row::NoSimTone1 => AblationRow::NoSimTone1,
            Row::NoSimTones => AblationRow::NoSimTones,
            Row::NoNoise => AblationRow::NoNoise,
            Row::WithoutAll => AblationRow::WithoutAll,
        }
    }
}

struct Ctx {
    seed: Option<u64>,
    json: bool,
    data_dir: PathBuf,
}

impl Ctx {
    fn emit(&self, text: impl std::fmt::Display, value: serde_json::Value) {
        if self.json {
            println!("{value}");
        } else {
            println!("{text}");
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed,
        json: cli.json,
        data_dir: cli.data_dir,
    };
    match cli.command {
        Command::Catalog { counts } => catalog_cmd(&ctx, counts),
        Command::Gen(a) => gen(&ctx, a),
        Command::Augment(a) => augment(&ctx, a),
        Command::Txsim(a) => txsim(&ctx, a),
        Command::Rx(a) => rx(&ctx, a),
        Command::Featurize(a) => featurize(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Grid(a) => grid(&ctx, a),
        Command::SnrSweep(a) => snr_sweep(&ctx, a),
        Command::Ablate(a) => ablate(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn catalog_cmd(ctx: &Ctx, counts: bool) -> Result<()> {
    let cat = catalog();
    let oms = modes::om_labels();
    if counts {
        ctx.emit(
            format!("{} OMP / {} OM", cat.len(), oms.len()),
            json!({ "omp": cat.len(), "om": oms.len() }),
        );
        return Ok(());
    }
    let mut text = String::new();
    for om in &oms {
        let params: Vec<&str> = cat.iter().filter(|m| m.om_label == *om).map(|m| m.param.as_str()).collect();
        text += &format!("{om:<10} {}\n", params.join(", "));
    }
    text += &format!("{} OMP / {} OM", cat.len(), oms.len());
    let entries: Vec<_> = cat
        .iter()
        .map(|m| {
            json!({
                "omp_label": m.omp_label,
                "om_label": m.om_label,
                "baud": m.baud,
                "tones": m.tones,
                "tone_spacing_hz": m.tone_spacing_hz,
                "carriers": m.carriers,
                "bandwidth_hz": m.nominal_bandwidth_hz,
            })
        })
        .collect();
    ctx.emit(text, json!(entries));
    Ok(())
}

fn audio_format(path: &Path) -> AudioFormat {
    AudioFormat::from_path(path)
}

fn clip(allow: bool) -> ClipPolicy {
    if allow {
        ClipPolicy::Allow
    } else {
        ClipPolicy::Reject
    }
}

fn read_af(path: &Path) -> Result<RealSignal> {
    read_audio(path, audio_format(path), AF_RATE_HZ).with_context(|| format!("reading {}", path.display()))
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn gen(ctx: &Ctx, a: GenArgs) -> Result<()> {
    let split: Split = a.split.parse()?;
    let duration = a.duration.unwrap_or_else(|| split.default_duration_s());
    let indices: Vec<usize> = if a.classes.is_empty() {
        (0..catalog().len()).collect()
    } else {
        a.classes
            .iter()
            .map(|c| Ok(modes::find(c.trim())?.index()))
            .collect::<Result<_>>()?
    };
    let out = a.out.unwrap_or_else(|| ctx.data_dir.join(split.as_str()));
    std::fs::create_dir_all(&out)?;
    let cfg = RunConfig {
        seed: ctx.seed.unwrap_or(0),
        ..RunConfig::default()
    };
    let ds = build_dataset_for(&indices, split, duration, cfg.data_seed())?;
    let (ext, format) = match a.format {
        AudioKind::Wav => ("wav", AudioFormat::Wav),
        AudioKind::F32 => ("f32", AudioFormat::RawF32),
    };
    let mut manifest = Manifest::default();
    for (i, e) in ds.entries.iter().enumerate() {
        let name = format!("{i:03}_{}.{ext}", file_stem(&e.omp_label));
        write_audio(&out.join(&name), &e.signal, format, ClipPolicy::Reject)?;
        manifest.entries.push(ManifestEntry {
            path: name.into(),
            omp_label: e.omp_label.clone(),
            om_label: e.om_label.clone(),
            split,
            seed: e.seed,
            duration_s: e.signal.duration_s(),
            sample_rate_hz: e.signal.sample_rate_hz(),
            augmentation_fingerprint: None,
        });
    }
    let path = out.join("manifest.json");
    manifest.save(&path)?;
    ctx.emit(
        format!(
            "wrote {} signals of {duration} s ({} split) and {}",
            manifest.entries.len(),
            split.as_str(),
            path.display()
        ),
        json!({ "manifest": path, "entries": manifest.entries.len(), "duration_s": duration, "split": split }),
    );
    Ok(())
}

fn augment(ctx: &Ctx, a: AugmentArgs) -> Result<()> {
    let x = read_af(&a.input)?;
    let plan: AugPlan = match a.plan {
        PlanKind::Fixed => match ctx.seed {
            Some(s) => fixed_val_plan().with_seed(s),
            None => fixed_val_plan(),
        },
        PlanKind::Random => sample_train_plan(&AugRanges::default(), &mut ChaCha8Rng::seed_from_u64(ctx.seed.unwrap_or(0))),
    };
    let y = apply_plan(&x, &plan)?;
    write_audio(&a.output, &y, audio_format(&a.output), clip(a.allow_clip))?;
    ctx.emit(
        format!(
            "{}\nfingerprint {}",
            serde_json::to_string_pretty(&plan)?,
            plan.fingerprint()
        ),
        json!({ "plan": plan, "fingerprint": plan.fingerprint(), "output": a.output }),
    );
    Ok(())
}

fn txsim(ctx: &Ctx, a: TxsimArgs) -> Result<()> {
    let x = read_af(&a.input)?;
    let cfg = ChannelizerConfig {
        wideband_rate_hz: a.rate,
        carrier_offset_hz: a.offset,
        ..ChannelizerConfig::default()
    };
    cfg.validate()?;
    let iq = usb_modulate(&x, &cfg)?;
    write_iq(&a.output, &iq, &IqMeta::new(a.rate, a.offset, 0.0))?;
    ctx.emit(
        format!("{} I/Q samples at {} Hz, carrier offset {} Hz", iq.len(), a.rate, a.offset),
        json!({ "samples": iq.len(), "sample_rate_hz": a.rate, "carrier_offset_hz": a.offset }),
    );
    Ok(())
}

fn rx(ctx: &Ctx, a: RxArgs) -> Result<()> {
    let (iq, meta) = read_iq(&a.input)?;
    let cfg = ChannelizerConfig {
        wideband_rate_hz: meta.sample_rate_hz,
        carrier_offset_hz: meta.carrier_offset_hz,
        ..ChannelizerConfig::default()
    };
    let audio = usb_demodulate(&channelize(&iq, &cfg)?)?;
    let rate = f64::from(AF_RATE_HZ);
    let start = (a.start * rate).round() as usize;
    let len = match a.length {
        Some(l) => (l * rate).round() as usize,
        None => audio.len().saturating_sub(start),
    };
    let cut = audio.slice(start, len)?;
    write_audio(&a.output, &cut, audio_format(&a.output), clip(a.allow_clip))?;
    ctx.emit(
        format!("{:.3} s of audio at {AF_RATE_HZ} Hz", cut.duration_s()),
        json!({ "samples": cut.len(), "sample_rate_hz": AF_RATE_HZ, "start_s": a.start }),
    );
    Ok(())
}

fn featurize(ctx: &Ctx, a: FeaturizeArgs) -> Result<()> {
    let x = read_af(&a.input)?;
    let cfg = SpectrogramConfig::new(a.n_fft, a.duration)?;
    let start = (a.offset * f64::from(AF_RATE_HZ)).round() as usize;
    let w = x.slice(start, cfg.window_len())?;
    let s = spectrogram(&w, &cfg)?;
    write_spectrogram(&a.out, &s, AF_RATE_HZ)?;
    ctx.emit(
        format!("{} frequency bins x {} frames", s.freq_bins(), s.frames()),
        json!({ "freq_bins": s.freq_bins(), "frames": s.frames(), "n_fft": cfg.n_fft, "hop": cfg.hop }),
    );
    Ok(())
}

fn load_config(ctx: &Ctx, a: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => match a.preset {
            Preset::Desk => RunConfig::desk(),
            Preset::Full => RunConfig::default(),
        },
    };
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.train.max_epochs = e;
    }
    if a.fast {
        cfg.exec = ExecMode::Fast;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn progress(json: bool) -> impl FnMut(&EpochRecord) {
    move |e: &EpochRecord| {
        if !json {
            eprintln!(
                "epoch {:3}  loss {:.4}  train {:5.1}%  val {:5.1}%",
                e.epoch,
                e.train_loss,
                100.0 * e.train_accuracy,
                100.0 * e.val_accuracy
            );
        }
    }
}

fn report_line(r: &EvalReport) -> String {
    format!(
        "{} decisions ({} s windows every {} s): OMP {:.2}%, OM {:.2}%",
        r.decisions, r.duration_s, r.shift_s, r.omp_accuracy, r.om_accuracy
    )
}

fn train(ctx: &Ctx, a: RunArgs) -> Result<()> {
    let mut cfg = load_config(ctx, &a.config)?;
    if let Some(d) = a.duration {
        cfg.features.duration_s = d;
    }
    if let Some(n) = a.n_fft {
        cfg.features.n_fft = n;
    }
    cfg.validate()?;
    let data = build_data(&cfg)?;
    let r = run_experiment(&cfg, &data, Some(&a.out), &mut progress(ctx.json))?;
    ctx.emit(
        format!("best epoch {}; impaired test: {}", r.outcome.best_epoch, report_line(&r.report)),
        json!({
            "run_dir": a.out,
            "best_epoch": r.outcome.best_epoch,
            "stopped_early": r.outcome.stopped_early,
            "omp_accuracy": r.report.omp_accuracy,
            "om_accuracy": r.report.om_accuracy,
            "decisions": r.report.decisions,
        }),
    );
    Ok(())
}

/// Reads the manifest entries belonging to the model's classes.
fn manifest_signals(path: &Path, classes: &[String]) -> Result<SignalSet> {
    let m = Manifest::load(path)?;
    let mut out = Vec::new();
    for e in &m.entries {
        if let Some(label) = classes.iter().position(|c| *c == e.omp_label) {
            out.push((label, read_af(&Manifest::resolve(path, e))?));
        }
    }
    if out.is_empty() {
        bail!("no manifest entry matches the model's classes");
    }
    Ok(out)
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let test = manifest_signals(&a.manifest, &model.classes)?;
    let duration = a.duration.unwrap_or(model.features.duration_s);
    let opts = EvalOptions {
        max_windows: a.max_windows,
        threads: 1,
    };
    let r = evaluate_with(&model, &test, duration, a.shift, &opts)?;
    if let Some(out) = &a.out {
        emit_report(&r, out, ReportFormat::Table)?;
    }
    let present: Vec<usize> = r.windows_per_class.iter().copied().filter(|&w| w > 0).collect();
    let per_omp = if present.windows(2).all(|w| w[0] == w[1]) {
        format!("{} windows/OMP", present[0])
    } else {
        format!("{}-{} windows/OMP", present.iter().min().unwrap(), present.iter().max().unwrap())
    };
    ctx.emit(
        format!("{}; {per_omp}\n{}", report_line(&r), summary_text(&r)),
        serde_json::to_value(&r)?,
    );
    Ok(())
}

fn grid(ctx: &Ctx, a: GridArgs) -> Result<()> {
    let cfg = load_config(ctx, &a.config)?;
    let spec = GridSpec {
        durations_s: a.durations,
        n_ffts: a.n_ffts,
        seeds: a.seeds,
    };
    let json_mode = ctx.json;
    let table = run_grid(&cfg, &spec, Some(&a.out), &mut |d, n, s, e| {
        if !json_mode {
            eprintln!("[{d} s, n_fft {n}, seed {s}] epoch {} val {:.1}%", e.epoch, 100.0 * e.val_accuracy);
        }
    })?;
    emit_grid(&table, &a.out)?;
    ctx.emit(grid_text(&table), serde_json::to_value(&table)?);
    Ok(())
}

fn grid_text(t: &GridTable) -> String {
    let mut s = format!("{:<6}", "Dur");
    for n in &t.spec.n_ffts {
        s += &format!("{:>24}", format!("n_fft {n}"));
    }
    s.push('\n');
    for d in &t.spec.durations_s {
        s += &format!("{:<6}", format!("{d}s"));
        for n in &t.spec.n_ffts {
            let cell = t.cell(*d, *n).expect("every cell is computed");
            s += &format!(
                "{:>24}",
                format!("{:.1}±{:.1} / {:.1}±{:.1}", cell.omp_mean, cell.omp_spread, cell.om_mean, cell.om_spread)
            );
        }
        s.push('\n');
    }
    s + "cells: OMP mean±std / OM mean±std over seeds"
}

fn snr_sweep(ctx: &Ctx, a: SweepArgs) -> Result<()> {
    let mut curves = Vec::new();
    let mut synthesized: Option<(Vec<String>, SignalSet, RunConfig)> = None;
    for dir in &a.model {
        let model = TrainedModel::load(dir)?;
        let cfg = RunConfig::load(&dir.join("config.toml")).unwrap_or_default();
        let test = match &a.manifest {
            Some(m) => manifest_signals(m, &model.classes)?,
            None => {
                if synthesized.is_none() {
                    let data = build_data(&cfg)?;
                    synthesized = Some((data.classes.clone(), data.test, cfg.clone()));
                }
                let (classes, test, _) = synthesized.as_ref().unwrap();
                if *classes != model.classes {
                    bail!("{} was trained on different classes than the first model", dir.display());
                }
                test.clone()
            }
        };
        let snrs = a.snrs.clone().unwrap_or_else(|| {
            if cfg.eval.snr_list_db.is_empty() {
                default_snr_list()
            } else {
                cfg.eval.snr_list_db.clone()
            }
        });
        let noise_seed = match ctx.seed {
            Some(s) => seeds::derive(&[s, 5]),
            None => synthesized.as_ref().map_or(cfg.sweep_noise_seed(), |(_, _, c)| c.sweep_noise_seed()),
        };
        let opts = EvalOptions {
            max_windows: a.max_windows,
            threads: cfg.threads(),
        };
        let mut c = run_snr_sweep(&model, &test, &snrs, a.shift, noise_seed, &opts)?;
        c.label = dir.file_name().map_or(c.label, |n| n.to_string_lossy().into_owned());
        curves.push(c);
    }
    emit_snr_curves(&curves, &a.out)?;
    ctx.emit(curves_text(&curves), serde_json::to_value(&curves)?);
    Ok(())
}

fn curves_text(curves: &[SnrCurve]) -> String {
    let mut s = format!("{:>8}", "SNR dB");
    for c in curves {
        s += &format!("{:>14}", c.label);
    }
    s.push('\n');
    let n = curves.first().map_or(0, |c| c.points.len());
    for i in 0..n {
        s += &format!("{:>8}", curves[0].points[i].snr_db);
        for c in curves {
            s += &format!("{:>14.2}", c.points[i].omp_accuracy);
        }
        s.push('\n');
    }
    for c in curves {
        for (lo, hi, drop) in c.monotonic_violations(2.0) {
            s += &format!("{}: accuracy falls {drop:.2} points from {lo} to {hi} dB\n", c.label);
        }
    }
    s.trim_end().to_owned()
}

fn ablate(ctx: &Ctx, a: AblateArgs) -> Result<()> {
    let cfg = load_config(ctx, &a.config)?;
    let rows: Vec<AblationRow> = if a.rows.is_empty() {
        AblationRow::ALL.to_vec()
    } else {
        a.rows.iter().map(|&r| r.into()).collect()
    };
    let data = build_data(&cfg)?;
    let json_mode = ctx.json;
    let table = run_ablation(&cfg, &data, &rows, Some(&a.out), &mut |row, e| {
        if !json_mode {
            eprintln!("[{}] epoch {} val {:.1}%", row.label(), e.epoch, 100.0 * e.val_accuracy);
        }
    })?;
    emit_ablation(&table, &a.out)?;
    ctx.emit(ablation_text(&table), serde_json::to_value(&table)?);
    Ok(())
}

fn ablation_text(t: &AblationTable) -> String {
    let mut s = format!("{:<20}{:>10}{:>10}\n", "Training", "OMP %", "OM %");
    for r in &t.rows {
        s += &format!("{:<20}{:>10.2}{:>10.2}\n", r.label, r.report.omp_accuracy, r.report.om_accuracy);
    }
    s.trim_end().to_owned()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<()> {
    let format = match a.format {
        ReportKind::Table => ReportFormat::Table,
        ReportKind::PlotData => ReportFormat::PlotData,
    };
    let mut written = Vec::new();
    let mut text = Vec::new();
    let p = a.input.join("report.json");
    if p.exists() {
        let r: EvalReport = read_json(&p)?;
        r.check_invariants()?;
        written.extend(emit_report(&r, &a.out, format)?);
        text.push(report_line(&r));
    }
    let p = a.input.join("grid.json");
    if p.exists() {
        let t: GridTable = read_json(&p)?;
        written.extend(emit_grid(&t, &a.out)?);
        text.push(grid_text(&t));
    }
    let p = a.input.join("ablation.json");
    if p.exists() {
        let t: AblationTable = read_json(&p)?;
        written.extend(emit_ablation(&t, &a.out)?);
        text.push(ablation_text(&t));
    }
    let p = a.input.join("snr_curves.json");
    if p.exists() {
        let c: Vec<SnrCurve> = read_json(&p)?;
        written.extend(emit_snr_curves(&c, &a.out)?);
        text.push(curves_text(&c));
    }
    if written.is_empty() {
        bail!("{} holds no result files", a.input.display());
    }
    ctx.emit(text.join("\n\n"), json!({ "written": written }));
    Ok(())
}
