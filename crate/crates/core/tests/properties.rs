use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use opmode_core::channel::{add_noise_snr, apply_plan, freq_shift, sample_train_plan, AugRanges};
use opmode_core::dsp::{analytic, design_lowpass, filter, mix, power, IqSignal, RealSignal};
use opmode_core::eval::{Decision, EvalReport};
use opmode_core::features::{featurize, spectrogram, window_count, window_slices, SpectrogramConfig};
use opmode_core::io::{read_wav, write_wav, ClipPolicy};
use opmode_core::modes::catalog;

const RATE: u32 = 6000;

fn real(v: Vec<f64>) -> RealSignal {
    RealSignal::new(v, RATE).unwrap()
}

fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(i, &s)| s * Complex64::from_polar(1.0, -2.0 * PI * (k * i % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn samples(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn filter_is_linear(x in samples(200..400), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x.iter().map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let f = design_lowpass(1000.0, 300.0, 60.0, RATE as f64).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = filter(&real(combo), &f).unwrap();
        let fx = filter(&real(x), &f).unwrap();
        let fy = filter(&real(y), &f).unwrap();
        for ((l, p), q) in lhs.samples().iter().zip(fx.samples()).zip(fy.samples()) {
            prop_assert!((l - (a * p + b * q)).abs() <= 1e-9);
        }
    }

    #[test]
    fn mix_then_unmix_is_identity(re in samples(64..300), shift in -2900.0f64..2900.0) {
        let z: Vec<Complex64> = re.iter().enumerate().map(|(i, &r)| Complex64::new(r, (i as f64).sin())).collect();
        let x = IqSignal::new(z, RATE).unwrap();
        let back = mix(&mix(&x, shift).unwrap(), -shift).unwrap();
        for (a, b) in x.samples().iter().zip(back.samples()) {
            prop_assert!((a - b).norm() <= 1e-9);
        }
    }

    #[test]
    fn power_scales_with_square_of_gain(x in samples(1..500), g in -10.0f64..10.0) {
        prop_assume!(x.iter().any(|&s| s != 0.0));
        let p = power(&real(x.clone())).unwrap();
        let scaled = power(&real(x.iter().map(|s| g * s).collect())).unwrap();
        prop_assert!((scaled - g * g * p).abs() <= 1e-12 * (1.0 + g * g * p));
    }

    #[test]
    fn analytic_suppresses_negative_frequencies(x in samples(128..129)) {
        let z = analytic(&real(x.clone())).unwrap();
        for (a, b) in z.samples().iter().zip(&x) {
            prop_assert!((a.re - b).abs() <= 1e-9);
        }
        let spec = naive_dft(z.samples());
        let n = spec.len();
        let pos: f64 = spec[1..n / 2].iter().map(|c| c.norm_sqr()).sum();
        let neg: f64 = spec[n / 2 + 1..].iter().map(|c| c.norm_sqr()).sum();
        prop_assume!(pos > 1e-6);
        prop_assert!(10.0 * (pos / neg.max(1e-300)).log10() >= 40.0);
    }

    #[test]
    fn freq_shift_roundtrip_on_bin_centred_tones(
        tones in prop::collection::vec((500u32..2500, 0.05f64..0.3, 0.0f64..(2.0 * PI)), 1..4),
        shift in -300i32..=300,
    ) {
        let n = RATE as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| tones.iter().map(|&(f, a, ph)| a * (2.0 * PI * f as f64 * i as f64 / n as f64 + ph).sin()).sum())
            .collect();
        let x = real(x);
        let back = freq_shift(&freq_shift(&x, shift as f64).unwrap(), -shift as f64).unwrap();
        let err: f64 = x.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        prop_assert!(err.sqrt() <= 1e-9);
    }

    #[test]
    fn noise_hits_target_snr(x in samples(600..1200), snr in -10.0f64..30.0, seed in any::<u64>()) {
        prop_assume!(power(&real(x.clone())).unwrap() > 1e-3);
        let clean = real(x);
        let noisy = add_noise_snr(&clean, snr, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let residual: Vec<f64> = noisy.samples().iter().zip(clean.samples()).map(|(a, b)| a - b).collect();
        let measured = 10.0 * (power(&clean).unwrap() / power(&real(residual)).unwrap()).log10();
        prop_assert!((measured - snr).abs() <= 1e-6);
    }

    #[test]
    fn sampled_plans_are_deterministic(seed in any::<u64>()) {
        let ranges = AugRanges::default();
        let p1 = sample_train_plan(&ranges, &mut ChaCha8Rng::seed_from_u64(seed));
        let p2 = sample_train_plan(&ranges, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(&p1, &p2);
        let x = real((0..1200).map(|i| (2.0 * PI * 1000.0 * i as f64 / RATE as f64).sin() * 0.3).collect());
        prop_assert_eq!(apply_plan(&x, &p1).unwrap(), apply_plan(&x, &p2).unwrap());
    }

    #[test]
    fn model_input_is_gain_invariant(seed in any::<u64>(), g in 0.25f64..4.0) {
        // Only holds while no bin is clipped at the log floor.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..6000).map(|_| rand::Rng::random_range(&mut rng, -0.5..0.5)).collect();
        let cfg = SpectrogramConfig::new(128, 1.0).unwrap();
        let (x, y) = (real(x.clone()), real(x.iter().map(|s| g * s).collect()));
        for s in [&x, &y] {
            prop_assume!(spectrogram(s, &cfg).unwrap().values().iter().all(|&v| v > cfg.log_floor_db));
        }
        let a = featurize(&x, &cfg).unwrap();
        let b = featurize(&y, &cfg).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn om_accuracy_never_below_omp(pairs in prop::collection::vec((0usize..20, 0usize..20), 1..300)) {
        let classes: Vec<String> = catalog().iter().take(20).map(|m| m.omp_label.clone()).collect();
        let decisions: Vec<Decision> = pairs.iter().map(|&(truth, predicted)| Decision { truth, predicted }).collect();
        let r = EvalReport::from_decisions(&classes, &decisions, 2.0, 2.0, 128).unwrap();
        prop_assert!(r.om_accuracy >= r.omp_accuracy);
        let hits = pairs.iter().filter(|(t, p)| t == p).count();
        prop_assert!((r.omp_accuracy - 100.0 * hits as f64 / pairs.len() as f64).abs() <= 1e-9);
    }

    #[test]
    fn window_count_matches_formula(n in 1usize..50_000, d_ms in 1u32..5000, s_ms in 1u32..5000) {
        let (d, s) = (d_ms as f64 / 1000.0, s_ms as f64 / 1000.0);
        let (dn, sn) = ((d * RATE as f64).round() as usize, (s * RATE as f64).round() as usize);
        match window_count(n, RATE, d, s) {
            Ok(c) => {
                prop_assert!(dn <= n);
                prop_assert_eq!(c, (n - dn) / sn + 1);
                let x = real(vec![0.0; n]);
                let w = window_slices(&x, d, s).unwrap();
                prop_assert_eq!(w.len(), c);
                prop_assert!(w.iter().all(|w| w.len() == dn));
            }
            Err(_) => prop_assert!(dn > n),
        }
    }

    #[test]
    fn wav_roundtrip_within_quantization(x in samples(1..2000)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let sig = real(x);
        write_wav(&path, &sig, ClipPolicy::Reject).unwrap();
        let back = read_wav(&path, Some(RATE)).unwrap();
        prop_assert_eq!(back.len(), sig.len());
        for (a, b) in sig.samples().iter().zip(back.samples()) {
            prop_assert!((a - b).abs() <= 0.5 / 32767.0 + 1e-12);
        }
    }
}
