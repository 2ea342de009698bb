//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.
//!
//! Criteria 9 to 11 train four desk-scale models (about 12 minutes each on one
//! core). Pass criterion numbers to run a subset:
//! `cargo test -p opmode-core --test acceptance -- 3 5`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opmode_core::channel::{
    add_noise_snr, expand_training_set, fixed_val_plan, freq_shift, sample_train_plan, AugKind, AugMask, AugOp,
    AugRanges, EXPANSION_FACTOR,
};
use opmode_core::classifier::{loss_and_grad, BlockConfig, Cnn, CompactCnnConfig, Tensor};
use opmode_core::config::{default_snr_list, RunConfig};
use opmode_core::dsp::{IqSignal, RealSignal};
use opmode_core::eval::{
    build_data, evaluate_with, impaired_test_set, run_experiment, run_snr_sweep, train_model, EvalOptions, EvalReport,
    ExperimentData, SnrCurve, TrainedModel,
};
use opmode_core::features::{power_spectrogram, spectrogram, to_model_input, window_count, SpectrogramConfig};
use opmode_core::modes::{catalog, find, om_labels, synthesize, Payload};
use opmode_core::rx::{channelize, usb_demodulate, usb_modulate, ChannelizerConfig};
use opmode_core::AF_RATE_HZ;

const RATE: f64 = AF_RATE_HZ as f64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- oracles

/// Single-bin DFT magnitude, Hann-windowed and scaled so a sine of amplitude A
/// reads A.
fn tone_amplitude(x: &[f64], freq_hz: f64) -> f64 {
    let n = x.len();
    let (mut re, mut im, mut wsum) = (0.0, 0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
        let ph = 2.0 * PI * freq_hz * i as f64 / RATE;
        re += w * v * ph.cos();
        im -= w * v * ph.sin();
        wsum += w;
    }
    2.0 * (re * re + im * im).sqrt() / wsum
}

/// Frequency of the strongest component within `span_hz` of `near_hz`.
fn peak_near(x: &[f64], near_hz: f64, span_hz: f64, step_hz: f64) -> (f64, f64) {
    let steps = (2.0 * span_hz / step_hz).round() as usize;
    (0..=steps)
        .map(|k| {
            let f = near_hz - span_hz + k as f64 * step_hz;
            (f, tone_amplitude(x, f))
        })
        .fold((near_hz, -1.0), |best, c| if c.1 > best.1 { c } else { best })
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn sine(freq_hz: f64, amp: f64, seconds: f64) -> Vec<f64> {
    let n = (seconds * RATE).round() as usize;
    (0..n).map(|i| amp * (2.0 * PI * freq_hz * i as f64 / RATE).sin()).collect()
}

fn af(x: Vec<f64>) -> RealSignal {
    RealSignal::new(x, AF_RATE_HZ).unwrap()
}

// --------------------------------------------------------------- criteria

// The operating-mode table, transcribed row by row.
const TABLE: &[(&str, &[&str])] = &[
    ("BPSK", &["31", "63", "63F", "125", "250", "500", "1000"]),
    ("QPSK", &["31", "63", "125", "250", "500"]),
    ("8PSK", &["125", "125F", "125FL", "250", "250F", "250FL", "500", "500F", "1000", "1000F", "1200F"]),
    ("MC-PSK", &["125C12", "250C6", "500C2", "500C4", "800C2", "1000C2"]),
    ("PSKR", &["125", "250", "500", "1000"]),
    ("Olivia", &["4/125", "4/250", "8/250", "8/500", "16/500", "16/1000", "32/1000", "64/2000"]),
    ("Contestia", &["4/125", "4/250", "4/500", "8/250", "8/500", "16/500", "32/1000", "64/2000"]),
    ("MFSK", &["4", "8", "11", "16", "22", "31", "64", "64L", "128", "128L"]),
    ("DominoEx", &["EX Micro", "EX4", "EX5", "EX8", "X11", "X16", "X22", "X44", "X88"]),
    ("Thor", &["Micro", "100", "11", "16", "22", "25x4", "4", "5", "50x1", "50x2", "8"]),
    ("Throb", &["BX1", "BX2", "BX4", "OB1", "OB2", "OB4"]),
    ("MT63", &["500S", "500L", "1000S", "1000L", "2000S", "2000L"]),
    ("OFDM", &["500F", "750F", "3500"]),
    ("RTTY", &["RTTY"]),
    ("IFKP", &["IFKP"]),
    ("CW", &["CW"]),
    ("Noise", &["Noise"]),
];

fn c01_catalog() -> Outcome {
    let expected: Vec<(String, String)> = TABLE
        .iter()
        .flat_map(|(om, ps)| ps.iter().map(move |p| (om.to_string(), p.to_string())))
        .collect();
    let got: Vec<(String, String)> = catalog().iter().map(|m| (m.om_label.clone(), m.param.clone())).collect();
    let oms: Vec<&str> = TABLE.iter().map(|r| r.0).collect();
    let distinct: BTreeSet<&str> = catalog().iter().map(|m| m.om_label.as_str()).collect();
    let pass = got == expected && got.len() == 98 && distinct.len() == 17 && om_labels() == oms;
    outcome(pass, format!("{} OMP / {} OM, rows match: {}", got.len(), distinct.len(), got == expected))
}

fn c02_augmentation() -> Outcome {
    let plan = fixed_val_plan();
    let fixed_ok = plan.ops
        == [
            AugOp::Amplify { factor: 0.5 },
            AugOp::FreqShift { shift_hz: 400.0 },
            AugOp::SimTone { freq_hz: 1000.0, amplitude: 0.03 },
            AugOp::SimTone { freq_hz: 2300.0, amplitude: 0.015 },
            AugOp::Noise { snr_db: 30.0 },
        ];
    let r = AugRanges::default();
    let in_range = |v: f64, lo: f64, hi: f64| v >= lo && v <= hi;
    let order = [AugKind::Amplify, AugKind::FreqShift, AugKind::SimTone, AugKind::SimTone, AugKind::Noise];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut bad = 0usize;
    for _ in 0..10_000 {
        let p = sample_train_plan(&r, &mut rng);
        let kinds: Vec<AugKind> = p.ops.iter().map(|o| o.kind()).collect();
        let ok = kinds == order
            && p.ops.iter().all(|op| match *op {
                AugOp::Amplify { factor } => in_range(factor, 0.1, 2.0),
                AugOp::FreqShift { shift_hz } => in_range(shift_hz, -500.0, 500.0),
                AugOp::SimTone { freq_hz, amplitude } => in_range(freq_hz, 10.0, 2990.0) && in_range(amplitude, 0.0, 0.3),
                AugOp::Noise { snr_db } => in_range(snr_db, -6.0, 42.0),
            });
        bad += usize::from(!ok);
    }
    let items: Vec<(usize, RealSignal)> = (0..3).map(|i| (i, af(sine(500.0 + 300.0 * i as f64, 0.5, 0.5)))).collect();
    let expanded = expand_training_set(&items, &r, &AugMask::all(), 7, 0).unwrap();
    let clean_last = expanded
        .chunks(6)
        .zip(&items)
        .all(|(group, (label, s))| {
            group[5].plan.is_none()
                && &group[5].signal == s
                && group.iter().all(|g| g.label == *label)
                && group[..5].iter().all(|g| g.plan.is_some())
        });
    let pass = fixed_ok && bad == 0 && EXPANSION_FACTOR == 6 && expanded.len() == 18 && clean_last;
    outcome(
        pass,
        format!("fixed plan ok: {fixed_ok}; 10000 sampled plans, {bad} out of range or order; expansion {} -> {}", items.len(), expanded.len()),
    )
}

fn c03_noise_snr() -> Outcome {
    let t0 = Instant::now();
    let spec = find("Olivia 8/250").unwrap();
    let x = synthesize(spec, &Payload::new(11), 1.0, AF_RATE_HZ).unwrap();
    let ps = mean_square(x.samples());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for target in [-6.0, 0.0, 12.0, 30.0, 42.0] {
        let y = add_noise_snr(&x, target, &mut rng).unwrap();
        let residual: Vec<f64> = y.samples().iter().zip(x.samples()).map(|(a, b)| a - b).collect();
        let realized = 10.0 * (ps / mean_square(&residual)).log10();
        worst = worst.max((realized - target).abs());
    }
    let dt = t0.elapsed();
    outcome(
        worst <= 0.1 && dt < Duration::from_secs(1),
        format!("worst |realized - target| {worst:.2e} dB over 5 targets, {:.3} s", dt.as_secs_f64()),
    )
}

fn c04_freq_shift() -> Outcome {
    let x = af(sine(1000.0, 0.5, 1.0));
    let mut bin_err = 0.0f64;
    let mut worst_image = f64::INFINITY;
    for shift in [400.0, -300.0, 150.0] {
        let y = freq_shift(&x, shift).unwrap();
        let want = 1000.0 + shift;
        let (f, a) = peak_near(y.samples(), want, 20.0, 0.1);
        bin_err = bin_err.max((f - want).abs());
        let image = tone_amplitude(y.samples(), 1000.0 - shift);
        worst_image = worst_image.min(20.0 * (a / image).log10());
    }
    let mut multi = vec![0.0; 6000];
    for (f, a) in [(500.0, 0.3), (1250.0, 0.2), (2100.0, 0.25)] {
        for (m, s) in multi.iter_mut().zip(sine(f, a, 1.0)) {
            *m += s;
        }
    }
    let m = af(multi);
    let back = freq_shift(&freq_shift(&m, 350.0).unwrap(), -350.0).unwrap();
    let diff: Vec<f64> = back.samples().iter().zip(m.samples()).map(|(a, b)| a - b).collect();
    let rms = mean_square(&diff).sqrt();
    // One FFT bin of a 1 s transform at 6 kHz is 1 Hz.
    let pass = bin_err <= 1.0 && worst_image >= 40.0 && rms <= 1e-2;
    outcome(
        pass,
        format!("peak error {bin_err:.2} Hz (bin 1 Hz), image suppression {worst_image:.1} dB, roundtrip RMS {rms:.2e}"),
    )
}

fn c05_rx_chain() -> Outcome {
    let t0 = Instant::now();
    let cfg = ChannelizerConfig::default();
    let tones: Vec<f64> = (0..25).map(|k| 300.0 + 100.0 * k as f64).collect();
    let amp = 0.03;
    let mut x = vec![0.0; 6000];
    for &f in &tones {
        for (v, s) in x.iter_mut().zip(sine(f, amp, 1.0)) {
            *v += s;
        }
    }
    let rx = usb_demodulate(&channelize(&usb_modulate(&af(x), &cfg).unwrap(), &cfg).unwrap()).unwrap();
    // Skip filter start-up and tail.
    let interior = &rx.samples()[600..5400];
    let (mut f_err, mut db_err) = (0.0f64, 0.0f64);
    for &f in &tones {
        let (pf, pa) = peak_near(interior, f, 5.0, 0.02);
        f_err = f_err.max((pf - f).abs());
        db_err = db_err.max((20.0 * (pa / amp).log10()).abs());
    }

    // Out-of-channel rejection: equal-amplitude complex tones placed in the
    // wideband stream, in-band reference at the channel centre.
    let rate = cfg.wideband_rate_hz as f64;
    let n = cfg.wideband_rate_hz as usize / 2;
    let through = |offset: f64| -> f64 {
        let iq: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(0.5, 2.0 * PI * (cfg.carrier_offset_hz + offset) * i as f64 / rate))
            .collect();
        let out = usb_demodulate(&channelize(&IqSignal::new(iq, cfg.wideband_rate_hz).unwrap(), &cfg).unwrap()).unwrap();
        mean_square(&out.samples()[600..2400])
    };
    let reference = through(1500.0);
    let rejection = [-3000.0, -1000.0, -300.0, 3400.0, 5000.0, 20_000.0]
        .iter()
        .map(|&o| 10.0 * (reference / through(o)).log10())
        .fold(f64::INFINITY, f64::min);
    let dt = t0.elapsed();
    let pass = f_err <= 1.0 && db_err <= 1.0 && rejection >= 60.0 && dt < Duration::from_secs(30);
    outcome(
        pass,
        format!(
            "25 tones 300-2700 Hz: worst {f_err:.3} Hz, {db_err:.3} dB; rejection {rejection:.1} dB; {:.1} s",
            dt.as_secs_f64()
        ),
    )
}

fn c06_spectrogram() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut shape_ok = 0;
    for d in [1.0, 2.0, 3.0, 4.0] {
        for n in [64usize, 128, 256] {
            let len = (d * RATE) as usize;
            let x = af((0..len).map(|_| rng.random_range(-0.5..0.5)).collect());
            let cfg = SpectrogramConfig::new(n, d).unwrap();
            let s = spectrogram(&x, &cfg).unwrap();
            let frames = (len - n) / (n / 2) + 1;
            let t = to_model_input(&s);
            if s.freq_bins() == n / 2 + 1 && s.frames() == frames && t.shape() == [3, n / 2 + 1, frames] {
                shape_ok += 1;
            }
        }
    }

    let spec = find("MFSK 16").unwrap();
    let mode = synthesize(spec, &Payload::new(5), 2.0, AF_RATE_HZ).unwrap();
    let x = af(mode.samples().iter().map(|v| v + rng.random_range(-0.5..0.5)).collect());
    let cfg = SpectrogramConfig::new(128, 2.0).unwrap();
    let p = power_spectrogram(&x, &cfg).unwrap();
    let w: Vec<f64> = (0..128).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / 128.0).cos()).collect();
    let mut parseval = 0.0f64;
    for (j, frame) in p.iter().enumerate() {
        let seg = &x.samples()[j * 64..j * 64 + 128];
        let energy: f64 = seg.iter().zip(&w).map(|(s, w)| (s * w).powi(2)).sum();
        let total: f64 = frame.iter().sum();
        parseval = parseval.max((total / energy - 1.0).abs());
    }

    // Min-max normalization cancels gain only while no value sits on the floor.
    let base = spectrogram(&x, &cfg).unwrap();
    let above_floor = |s: &opmode_core::features::Spectrogram| s.values().iter().all(|&v| v > cfg.log_floor_db);
    let mut floor_free = above_floor(&base);
    let reference = to_model_input(&base);
    let mut gain_err = 0.0f64;
    for g in [0.5, 2.0, 4.0] {
        let s = spectrogram(&x.scaled(g).unwrap(), &cfg).unwrap();
        floor_free &= above_floor(&s);
        let t = to_model_input(&s);
        for (a, b) in t.data().iter().zip(reference.data()) {
            gain_err = gain_err.max((a - b).abs());
        }
    }
    let pass = shape_ok == 12 && parseval <= 0.01 && floor_free && gain_err <= 1e-9;
    outcome(
        pass,
        format!("{shape_ok}/12 shapes exact; Parseval worst {parseval:.2e}; gain invariance {gain_err:.2e} (floor untouched: {floor_free})"),
    )
}

fn c07_gradient() -> Outcome {
    let cfg = CompactCnnConfig {
        blocks: vec![BlockConfig::new(4), BlockConfig { out_channels: 5, stride: [1, 2] }],
        ..CompactCnnConfig::with_classes(4)
    };
    let net = Cnn::new(cfg, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, h, w) = (3, 8, 12);
    let x = Tensor::new(vec![n, 3, h, w], (0..n * 3 * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let labels = [2, 0, 3];
    let (_, grads) = loss_and_grad(&net, &x, &labels).unwrap();
    let eps = 1e-4;
    let (mut probes, mut worst) = (0usize, 0.0f64);
    let mut layers = BTreeSet::new();
    for (name, g) in &grads.entries {
        for _ in 0..5 {
            let i = rng.random_range(0..g.len());
            let mut plus = net.clone();
            plus.param_mut(name).unwrap()[i] += eps;
            let mut minus = net.clone();
            minus.param_mut(name).unwrap()[i] -= eps;
            let fd = (loss_and_grad(&plus, &x, &labels).unwrap().0 - loss_and_grad(&minus, &x, &labels).unwrap().0)
                / (2.0 * eps);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
            worst = worst.max(rel);
            probes += 1;
            layers.insert(name.rsplit('.').nth(1).unwrap_or(name).to_string());
        }
    }
    let pass = worst <= 1e-4 && probes >= 25 && layers.len() >= 3;
    outcome(pass, format!("{probes} probes over {layers:?}, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------- trained models

struct Desk {
    cfg: RunConfig,
    data: ExperimentData,
    full: Option<(TrainedModel, EvalReport, Duration)>,
    no_noise: Option<EvalReport>,
    curves: Option<(SnrCurve, SnrCurve)>,
    reports: Vec<EvalReport>,
}

impl Desk {
    fn new() -> Self {
        let cfg = RunConfig::desk();
        let data = build_data(&cfg).unwrap();
        Self {
            cfg,
            data,
            full: None,
            no_noise: None,
            curves: None,
            reports: Vec::new(),
        }
    }

    fn train(&self, cfg: &RunConfig, tag: &str) -> (TrainedModel, EvalReport, Duration) {
        let t0 = Instant::now();
        let (model, outcome) = train_model(cfg, &self.data, &mut |e| {
            eprintln!(
                "  [{tag}] epoch {:2}: loss {:.3}, train {:.1}%, val {:.1}%",
                e.epoch,
                e.train_loss,
                100.0 * e.train_accuracy,
                100.0 * e.val_accuracy
            );
        })
        .unwrap();
        let dt = t0.elapsed();
        eprintln!("  [{tag}] best epoch {}, {:.0} s", outcome.best_epoch, dt.as_secs_f64());
        let test = impaired_test_set(cfg, &self.data).unwrap();
        let opts = EvalOptions {
            max_windows: None,
            threads: cfg.threads(),
        };
        let report = evaluate_with(&model, &test, cfg.features.duration_s, cfg.eval.shift_s, &opts).unwrap();
        (model, report, dt)
    }

    fn full(&mut self) -> &(TrainedModel, EvalReport, Duration) {
        if self.full.is_none() {
            let r = self.train(&self.cfg.clone(), "2 s");
            self.reports.push(r.1.clone());
            self.full = Some(r);
        }
        self.full.as_ref().unwrap()
    }
}

fn c08_windows(desk: Option<&mut Desk>) -> Outcome {
    let n = window_count(75 * AF_RATE_HZ as usize, AF_RATE_HZ, 2.0, 0.5).unwrap();
    let oracle = ((75.0 - 2.0) / 0.5f64).floor() as usize + 1;
    let mut detail = format!("75 s at 2 s / 0.5 s: {n} windows (oracle {oracle})");
    let mut pass = n == 147 && oracle == 147;
    if let Some(desk) = desk {
        desk.full();
        let r = &desk.full.as_ref().unwrap().1;
        let per_class = r.windows_per_class.iter().all(|&w| w == 147) && r.decisions == 147 * r.classes.len();
        let om_ok = desk.reports.iter().all(|r| r.om_accuracy >= r.omp_accuracy && r.check_invariants().is_ok());
        pass &= per_class && om_ok;
        detail += &format!(
            "; desk report {} decisions, 147 per class: {per_class}; OM >= OMP on all {} reports: {om_ok}",
            r.decisions,
            desk.reports.len()
        );
    }
    outcome(pass, detail)
}

fn c09_desk(desk: &mut Desk) -> Outcome {
    let classes = desk.cfg.class_labels().len();
    let (_, report, dt) = desk.full();
    let chance = 100.0 / classes as f64;
    let acc = report.omp_accuracy;
    let above = acc >= 70.0;
    let ratio_target = 25.0 * chance;
    let ratio = acc >= ratio_target;
    let fast = *dt < Duration::from_secs(30 * 60);
    outcome(
        above && ratio && fast,
        format!(
            "{classes} classes, window accuracy {acc:.2}% (>= 70: {above}; >= 25 x chance {chance}% = {ratio_target}%: {ratio}); OM {:.2}%; training {:.0} s",
            report.om_accuracy,
            dt.as_secs_f64()
        ),
    )
}

fn c10_ablation(desk: &mut Desk) -> Outcome {
    let full = desk.full().1.omp_accuracy;
    if desk.no_noise.is_none() {
        let mut cfg = desk.cfg.clone();
        cfg.augmentation.mask = AugMask {
            noise: false,
            ..AugMask::all()
        };
        let r = desk.train(&cfg, "2 s -Noise").1;
        desk.reports.push(r.clone());
        desk.no_noise = Some(r);
    }
    let without = desk.no_noise.as_ref().unwrap().omp_accuracy;
    let drop = full - without;
    outcome(
        drop >= 30.0,
        format!("with all {full:.2}%, -Noise {without:.2}%, drop {drop:.2} points (target >= 30)"),
    )
}

fn c11_snr(desk: &mut Desk) -> Outcome {
    if desk.curves.is_none() {
        let test_len = (desk.cfg.dataset.test_duration_s * RATE).round() as usize;
        let opts = EvalOptions {
            max_windows: Some(window_count(test_len, AF_RATE_HZ, 4.0, 0.5).unwrap()),
            threads: desk.cfg.threads(),
        };
        let mut curve = |d: f64| {
            let mut cfg = desk.cfg.clone();
            cfg.features.duration_s = d;
            // Same number of training windows per class for both durations.
            cfg.eval.train_shift_s = Some(1.0);
            let (model, report, _) = desk.train(&cfg, &format!("{d} s"));
            desk.reports.push(report);
            run_snr_sweep(&model, &desk.data.test, &default_snr_list(), 0.5, cfg.sweep_noise_seed(), &opts).unwrap()
        };
        let long = curve(4.0);
        let short = curve(1.0);
        desk.curves = Some((long, short));
    }
    let (long, short) = desk.curves.as_ref().unwrap();
    let domain = long.points.first().map(|p| p.snr_db) == Some(-6.0) && long.points.last().map(|p| p.snr_db) == Some(27.0);
    let violations = long.monotonic_violations(2.0).len() + short.monotonic_violations(2.0).len();
    // Low SNR: the lower half of the sweep.
    let low: Vec<(f64, f64, f64)> = long
        .points
        .iter()
        .zip(&short.points)
        .filter(|(l, _)| l.snr_db < 10.5)
        .map(|(l, s)| (l.snr_db, l.omp_accuracy, s.omp_accuracy))
        .collect();
    let dominated = low.iter().all(|&(_, l, s)| l >= s - 2.0);
    let fmt = |c: &SnrCurve| c.points.iter().map(|p| format!("{:.0}", p.omp_accuracy)).collect::<Vec<_>>().join(" ");
    outcome(
        domain && violations == 0 && dominated,
        format!(
            "4 s [{}] / 1 s [{}] over -6..27 dB; {violations} monotonicity violations; 4 s >= 1 s - 2 below 10.5 dB: {dominated}",
            fmt(long),
            fmt(short)
        ),
    )
}

fn c12_repro() -> Outcome {
    let mut cfg = RunConfig::desk();
    cfg.dataset.classes = ["BPSK 31", "RTTY", "Olivia 8/250"].map(String::from).to_vec();
    cfg.model = CompactCnnConfig::desk(3);
    cfg.dataset.train_duration_s = 6.0;
    cfg.dataset.val_duration_s = 3.0;
    cfg.dataset.test_duration_s = 5.0;
    cfg.features.duration_s = 1.0;
    cfg.train.batch_size = 8;
    cfg.train.max_epochs = 2;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let data = build_data(&cfg).unwrap();
    run_experiment(&cfg, &data, Some(a.path()), &mut |_| {}).unwrap();
    let archived = RunConfig::load(&a.path().join("config.toml")).unwrap();
    let data = build_data(&archived).unwrap();
    run_experiment(&archived, &data, Some(b.path()), &mut |_| {}).unwrap();
    let mut files: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    let differing: Vec<&String> = files
        .iter()
        .filter(|f| std::fs::read(a.path().join(f)).ok() != std::fs::read(b.path().join(f)).ok())
        .collect();
    outcome(
        differing.is_empty() && files.len() >= 6,
        format!("re-executed archived run: {} files compared, differing {differing:?}", files.len()),
    )
}

fn main() {
    let selected: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut desk: Option<Desk> = None;
    let mut failures = 0;
    let mut run = |n: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        if !want(n) {
            return;
        }
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failures += usize::from(!o.pass);
        println!("{} criterion {n:2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    run(1, "catalog fidelity", &mut c01_catalog);
    run(2, "augmentation exactness", &mut c02_augmentation);
    run(3, "noise SNR targeting", &mut c03_noise_snr);
    run(4, "frequency shift", &mut c04_freq_shift);
    run(5, "receive chain roundtrip", &mut c05_rx_chain);
    run(6, "spectrogram contracts", &mut c06_spectrogram);
    run(7, "gradient check", &mut c07_gradient);
    if selected.is_empty() || [9, 10, 11].iter().any(|n| selected.contains(n)) {
        desk = Some(Desk::new());
    }
    if let Some(d) = desk.as_mut() {
        run(9, "desk-scale end-to-end", &mut || c09_desk(d));
        run(10, "ablation direction", &mut || c10_ablation(d));
        run(11, "SNR sweep shape", &mut || c11_snr(d));
    }
    run(8, "window protocol", &mut || c08_windows(desk.as_mut()));
    run(12, "reproducibility", &mut c12_repro);
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
