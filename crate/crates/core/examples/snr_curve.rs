//! Trains the desk configuration at one window duration and prints its
//! accuracy over the default SNR list.
//!
//! `cargo run --release -p opmode-core --example snr_curve -- [duration_s] [train_shift_s]`

use std::time::Instant;

use opmode_core::config::RunConfig;
use opmode_core::eval::{build_data, run_snr_sweep, train_model, EvalOptions};
use opmode_core::features::window_count;
use opmode_core::AF_RATE_HZ;

fn main() -> opmode_core::Result<()> {
    let mut cfg = RunConfig::desk();
    if let Some(d) = std::env::args().nth(1) {
        cfg.features.duration_s = d.parse().expect("duration in seconds");
    }
    if let Some(s) = std::env::args().nth(2) {
        cfg.eval.train_shift_s = Some(s.parse().expect("training shift in seconds"));
    }
    let t0 = Instant::now();
    let data = build_data(&cfg)?;
    let (model, outcome) = train_model(&cfg, &data, &mut |e| {
        println!(
            "epoch {:2}  loss {:.3}  train {:5.1}%  val {:5.1}%  [{:.0} s]",
            e.epoch,
            e.train_loss,
            100.0 * e.train_accuracy,
            100.0 * e.val_accuracy,
            t0.elapsed().as_secs_f64()
        );
    })?;
    println!("best epoch {}", outcome.best_epoch);
    // Same decision count as a 4 s model gets from the test signal.
    let test_len = (cfg.dataset.test_duration_s * AF_RATE_HZ as f64).round() as usize;
    let opts = EvalOptions {
        max_windows: Some(window_count(test_len, AF_RATE_HZ, 4.0, cfg.eval.shift_s)?),
        threads: cfg.threads(),
    };
    let curve = run_snr_sweep(&model, &data.test, &cfg.eval.snr_list_db, cfg.eval.shift_s, cfg.sweep_noise_seed(), &opts)?;
    for p in &curve.points {
        println!("{:6.1} dB  OMP {:5.1}%  OM {:5.1}%", p.snr_db, p.omp_accuracy, p.om_accuracy);
    }
    println!("total {:.0} s", t0.elapsed().as_secs_f64());
    Ok(())
}
