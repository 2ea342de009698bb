//! Trains and evaluates the desk configuration, printing progress.
//!
//! `cargo run --release -p opmode-core --example desk_run -- [duration_s]`

use std::time::Instant;

use opmode_core::config::RunConfig;
use opmode_core::eval::{build_data, run_experiment};

fn main() -> opmode_core::Result<()> {
    let mut cfg = RunConfig::desk();
    if let Some(d) = std::env::args().nth(1) {
        cfg.features.duration_s = d.parse().expect("duration in seconds");
    }
    let t0 = Instant::now();
    let data = build_data(&cfg)?;
    println!("data ready in {:.1} s", t0.elapsed().as_secs_f64());
    let r = run_experiment(&cfg, &data, None, &mut |e| {
        println!(
            "epoch {:2}  loss {:.3}  train {:5.1}%  val {:5.1}%  [{:.0} s]",
            e.epoch,
            e.train_loss,
            100.0 * e.train_accuracy,
            100.0 * e.val_accuracy,
            t0.elapsed().as_secs_f64()
        );
    })?;
    println!(
        "best epoch {}  test OMP {:.2}%  OM {:.2}%  total {:.0} s",
        r.outcome.best_epoch,
        r.report.omp_accuracy,
        r.report.om_accuracy,
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}
