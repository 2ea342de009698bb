//! Benchmark fixtures shared by the criterion targets.

use opmode_core::dsp::RealSignal;
use opmode_core::modes::{find, synthesize, Payload};
use opmode_core::AF_RATE_HZ;

/// `seconds` of a synthesized mode at the audio rate.
pub fn mode_signal(label: &str, seconds: f64) -> RealSignal {
    synthesize(find(label).expect("catalog label"), &Payload::new(1), seconds, AF_RATE_HZ).expect("synthesis")
}
