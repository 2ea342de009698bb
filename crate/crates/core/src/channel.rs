//! Channel-impairment augmentation: Amplify, FreqShift, SimTone and Noise, the
//! sampled training plans, the fixed validation plan and training-set expansion.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp::{analytic, mix, remove_negative_frequencies, IqSignal, Power, RealSignal};
use crate::error::{Error, Result};
use crate::seeds;

/// One impairment with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugOp {
    Amplify { factor: f64 },
    FreqShift { shift_hz: f64 },
    SimTone { freq_hz: f64, amplitude: f64 },
    Noise { snr_db: f64 },
}

/// Which slot of the canonical sequence an op occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugKind {
    Amplify,
    FreqShift,
    SimTone,
    Noise,
}

impl AugOp {
    pub fn kind(&self) -> AugKind {
        match self {
            AugOp::Amplify { .. } => AugKind::Amplify,
            AugOp::FreqShift { .. } => AugKind::FreqShift,
            AugOp::SimTone { .. } => AugKind::SimTone,
            AugOp::Noise { .. } => AugKind::Noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AugOp::Amplify { factor } => factor > 0.0 && factor.is_finite(),
            AugOp::FreqShift { shift_hz } => shift_hz.abs() <= 1000.0,
            AugOp::SimTone { freq_hz, amplitude } => {
                freq_hz > 0.0 && freq_hz < 3000.0 && amplitude >= 0.0 && amplitude.is_finite()
            }
            AugOp::Noise { snr_db } => snr_db.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid augmentation {self:?}")))
        }
    }
}

/// Ordered impairment sequence. `rng_seed` drives every random draw made while
/// applying it (tone phases, noise samples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugPlan {
    pub ops: Vec<AugOp>,
    pub rng_seed: u64,
}

/// Closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Sampling ranges for training plans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugRanges {
    pub amplify: Range,
    pub freq_shift_hz: Range,
    pub sim_tone_freq_hz: Range,
    pub sim_tone_amp: Range,
    pub noise_snr_db: Range,
}

impl Default for AugRanges {
    fn default() -> Self {
        Self {
            amplify: Range::new(0.1, 2.0),
            freq_shift_hz: Range::new(-500.0, 500.0),
            sim_tone_freq_hz: Range::new(10.0, 2990.0),
            sim_tone_amp: Range::new(0.0, 0.3),
            noise_snr_db: Range::new(-6.0, 42.0),
        }
    }
}

/// Per-slot switches used by ablations. Slots follow the canonical order
/// Amplify, FreqShift, SimTone 1, SimTone 2, Noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugMask {
    pub amplify: bool,
    pub freq_shift: bool,
    pub sim_tone_1: bool,
    pub sim_tone_2: bool,
    pub noise: bool,
}

impl Default for AugMask {
    fn default() -> Self {
        Self::all()
    }
}

impl AugMask {
    pub const fn all() -> Self {
        Self {
            amplify: true,
            freq_shift: true,
            sim_tone_1: true,
            sim_tone_2: true,
            noise: true,
        }
    }

    pub const fn none() -> Self {
        Self {
            amplify: false,
            freq_shift: false,
            sim_tone_1: false,
            sim_tone_2: false,
            noise: false,
        }
    }

    fn slots(&self) -> [bool; 5] {
        [self.amplify, self.freq_shift, self.sim_tone_1, self.sim_tone_2, self.noise]
    }
}

impl AugPlan {
    pub fn empty(rng_seed: u64) -> Self {
        Self {
            ops: Vec::new(),
            rng_seed,
        }
    }

    /// Drops the ops whose canonical slot is disabled. Only meaningful for plans
    /// in canonical order.
    pub fn masked(&self, mask: &AugMask) -> Self {
        let keep = mask.slots();
        let ops = if self.ops.len() == 5 {
            self.ops
                .iter()
                .zip(keep)
                .filter_map(|(op, k)| k.then_some(*op))
                .collect()
        } else {
            self.ops.clone()
        };
        Self {
            ops,
            rng_seed: self.rng_seed,
        }
    }

    pub fn with_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    /// Short stable description of the plan, stored in manifests.
    pub fn fingerprint(&self) -> String {
        let mut h = seeds::splitmix64(self.rng_seed);
        for op in &self.ops {
            let words: [f64; 2] = match *op {
                AugOp::Amplify { factor } => [1.0, factor],
                AugOp::FreqShift { shift_hz } => [2.0, shift_hz],
                AugOp::SimTone { freq_hz, amplitude } => [freq_hz, amplitude],
                AugOp::Noise { snr_db } => [4.0, snr_db],
            };
            for w in words {
                h = seeds::splitmix64(h ^ w.to_bits());
            }
        }
        format!("{h:016x}")
    }
}

/// Multiplies every sample by `factor`; no clipping.
pub fn amplify(signal: &RealSignal, factor: f64) -> Result<RealSignal> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::param(format!("amplify factor must be positive, got {factor}")));
    }
    signal.scaled(factor)
}

fn check_shift(signal: &RealSignal, shift_hz: f64) -> Result<()> {
    let nyq = signal.sample_rate_hz() as f64 / 2.0;
    if !shift_hz.is_finite() || shift_hz.abs() >= nyq {
        return Err(Error::param(format!("frequency shift {shift_hz} Hz outside (-{nyq}, {nyq})")));
    }
    Ok(())
}

/// Shifts the spectrum by `shift_hz`: analytic signal, complex mix, removal of
/// everything that landed at negative frequencies, real part.
pub fn freq_shift(signal: &RealSignal, shift_hz: f64) -> Result<RealSignal> {
    check_shift(signal, shift_hz)?;
    let z = analytic(signal)?;
    let shifted = mix(&z, shift_hz)?;
    Ok(remove_negative_frequencies(&shifted).re())
}

/// Adds `amplitude * sin(2π f t + phase)`.
pub fn sim_tone(signal: &RealSignal, freq_hz: f64, amplitude: f64, phase_rad: f64) -> Result<RealSignal> {
    let rate = signal.sample_rate_hz() as f64;
    if !(freq_hz > 0.0 && freq_hz < rate / 2.0) || !(amplitude >= 0.0) || !phase_rad.is_finite() {
        return Err(Error::param(format!(
            "tone {freq_hz} Hz / amplitude {amplitude} invalid at {rate} Hz"
        )));
    }
    let w = 2.0 * PI * freq_hz / rate;
    let out = signal
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &s)| s + amplitude * (w * i as f64 + phase_rad).sin())
        .collect();
    RealSignal::new(out, signal.sample_rate_hz())
}

/// Adds white Gaussian noise so that the realized signal-to-noise ratio equals
/// `snr_db` exactly: the drawn noise is rescaled to the target power, which is
/// measured from the signal as it is at this point.
pub fn add_noise_snr(signal: &RealSignal, snr_db: f64, rng: &mut impl Rng) -> Result<RealSignal> {
    if !snr_db.is_finite() {
        return Err(Error::param("SNR must be finite"));
    }
    let ps = signal.power()?;
    if ps <= 0.0 {
        return Err(Error::param("cannot target an SNR on a zero-power signal"));
    }
    let noise: Vec<f64> = (0..signal.len()).map(|_| rng.sample(StandardNormal)).collect();
    let pn = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
    let target = ps / 10f64.powf(snr_db / 10.0);
    let g = if pn > 0.0 { (target / pn).sqrt() } else { 0.0 };
    let out = signal
        .samples()
        .iter()
        .zip(&noise)
        .map(|(s, n)| s + g * n)
        .collect();
    RealSignal::new(out, signal.sample_rate_hz())
}

/// Applies one op, drawing any randomness from `rng`.
pub fn apply_op(signal: &RealSignal, op: &AugOp, rng: &mut impl Rng) -> Result<RealSignal> {
    op.validate()?;
    match *op {
        AugOp::Amplify { factor } => amplify(signal, factor),
        AugOp::FreqShift { shift_hz } => freq_shift(signal, shift_hz),
        AugOp::SimTone { freq_hz, amplitude } => {
            let phase = rng.random_range(0.0..2.0 * PI);
            sim_tone(signal, freq_hz, amplitude, phase)
        }
        AugOp::Noise { snr_db } => add_noise_snr(signal, snr_db, rng),
    }
}

/// Applies the plan's ops strictly in order; `hook` sees each op just before it runs.
pub fn apply_plan_with_hook(
    signal: &RealSignal,
    plan: &AugPlan,
    mut hook: impl FnMut(&AugOp),
) -> Result<RealSignal> {
    for op in &plan.ops {
        op.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.rng_seed);
    let mut cur = signal.clone();
    for op in &plan.ops {
        hook(op);
        cur = apply_op(&cur, op, &mut rng)?;
    }
    Ok(cur)
}

pub fn apply_plan(signal: &RealSignal, plan: &AugPlan) -> Result<RealSignal> {
    apply_plan_with_hook(signal, plan, |_| {})
}

/// Canonical training plan: Amplify, FreqShift, SimTone, SimTone, Noise with each
/// parameter uniform over its range. The two tones are drawn independently from
/// the same ranges.
pub fn sample_train_plan(ranges: &AugRanges, rng: &mut impl Rng) -> AugPlan {
    let ops = vec![
        AugOp::Amplify { factor: ranges.amplify.sample(rng) },
        AugOp::FreqShift { shift_hz: ranges.freq_shift_hz.sample(rng) },
        AugOp::SimTone {
            freq_hz: ranges.sim_tone_freq_hz.sample(rng),
            amplitude: ranges.sim_tone_amp.sample(rng),
        },
        AugOp::SimTone {
            freq_hz: ranges.sim_tone_freq_hz.sample(rng),
            amplitude: ranges.sim_tone_amp.sample(rng),
        },
        AugOp::Noise { snr_db: ranges.noise_snr_db.sample(rng) },
    ];
    AugPlan {
        ops,
        rng_seed: rng.random(),
    }
}

/// Seed of the fixed validation plan unless overridden.
pub const VAL_PLAN_SEED: u64 = 0x5641_4c00;

/// The fixed validation plan: Amplify 0.5, FreqShift 400 Hz, SimTone 1000 Hz at
/// 0.03, SimTone 2300 Hz at 0.015, Noise 30 dB.
pub fn fixed_val_plan() -> AugPlan {
    AugPlan {
        ops: vec![
            AugOp::Amplify { factor: 0.5 },
            AugOp::FreqShift { shift_hz: 400.0 },
            AugOp::SimTone { freq_hz: 1000.0, amplitude: 0.03 },
            AugOp::SimTone { freq_hz: 2300.0, amplitude: 0.015 },
            AugOp::Noise { snr_db: 30.0 },
        ],
        rng_seed: VAL_PLAN_SEED,
    }
}

/// Augmented copies per clean item.
pub const AUGMENTED_COPIES: usize = 5;
/// Output items per input item: the augmented copies plus the clean original.
pub const EXPANSION_FACTOR: usize = AUGMENTED_COPIES + 1;

/// A training item after expansion.
#[derive(Debug, Clone)]
pub struct ExpandedItem {
    pub label: usize,
    pub signal: RealSignal,
    /// `None` for the clean copy.
    pub plan: Option<AugPlan>,
}

/// Expands every (label, signal) item into five independently augmented copies
/// followed by the untouched original. Plans are drawn from
/// `seed = derive(global_seed, item_id, epoch, copy)`, so each epoch sees new
/// impairments while results stay independent of processing order.
pub fn expand_training_set(
    items: &[(usize, RealSignal)],
    ranges: &AugRanges,
    mask: &AugMask,
    global_seed: u64,
    epoch: u64,
) -> Result<Vec<ExpandedItem>> {
    if items.is_empty() {
        return Err(Error::param("cannot expand an empty training set"));
    }
    let mut out = Vec::with_capacity(items.len() * EXPANSION_FACTOR);
    for (item_id, (label, signal)) in items.iter().enumerate() {
        out.extend(expand_item(*label, signal, item_id as u64, ranges, mask, global_seed, epoch)?);
    }
    Ok(out)
}

/// Expansion of a single item; see [`expand_training_set`].
pub fn expand_item(
    label: usize,
    signal: &RealSignal,
    item_id: u64,
    ranges: &AugRanges,
    mask: &AugMask,
    global_seed: u64,
    epoch: u64,
) -> Result<Vec<ExpandedItem>> {
    (0..EXPANSION_FACTOR)
        .map(|copy| expanded_copy(label, signal, item_id, copy, ranges, mask, global_seed, epoch))
        .collect()
}

/// Copy `copy` (0-based) of an item's expansion. Copies below
/// [`AUGMENTED_COPIES`] are augmented, the last one is the clean original.
#[allow(clippy::too_many_arguments)]
pub fn expanded_copy(
    label: usize,
    signal: &RealSignal,
    item_id: u64,
    copy: usize,
    ranges: &AugRanges,
    mask: &AugMask,
    global_seed: u64,
    epoch: u64,
) -> Result<ExpandedItem> {
    if copy >= EXPANSION_FACTOR {
        return Err(Error::param(format!("copy {copy} out of {EXPANSION_FACTOR}")));
    }
    if copy == AUGMENTED_COPIES {
        return Ok(ExpandedItem {
            label,
            signal: signal.clone(),
            plan: None,
        });
    }
    let seed = seeds::derive(&[global_seed, item_id, epoch, copy as u64]);
    let plan = sample_train_plan(ranges, &mut ChaCha8Rng::seed_from_u64(seed)).masked(mask);
    Ok(ExpandedItem {
        label,
        signal: apply_plan(signal, &plan)?,
        plan: Some(plan),
    })
}

/// Largest accepted total drift.
pub const MAX_DRIFT_HZ: f64 = 500.0;

/// Frequency offset ramping linearly from 0 at the first sample to
/// `total_drift_hz` at the end, modelling oscillator drift.
pub fn linear_drift(signal: &RealSignal, total_drift_hz: f64) -> Result<RealSignal> {
    if !total_drift_hz.is_finite() || total_drift_hz.abs() > MAX_DRIFT_HZ {
        return Err(Error::param(format!(
            "drift {total_drift_hz} Hz outside +-{MAX_DRIFT_HZ} Hz"
        )));
    }
    let z = analytic(signal)?;
    let rate = signal.sample_rate_hz() as f64;
    let n = signal.len() as f64;
    let span = ((n - 1.0) / rate).max(1.0 / rate);
    let rotated: Vec<Complex64> = z
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let t = i as f64 / rate;
            // phase = 2π ∫ drift·τ/span dτ
            let cycles = (0.5 * total_drift_hz * t * t / span).rem_euclid(1.0);
            s * Complex64::from_polar(1.0, 2.0 * PI * cycles)
        })
        .collect();
    Ok(remove_negative_frequencies(&IqSignal::from_parts(rotated, signal.sample_rate_hz())).re())
}
