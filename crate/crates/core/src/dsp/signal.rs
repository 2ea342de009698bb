use num_complex::Complex64;

use crate::error::{Error, Result};

/// A real-valued sampled waveform, e.g. the audio-frequency output of a modem.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSignal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

/// A complex baseband (I/Q) waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: u32,
}

impl RealSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::param(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Constructor for internal operations whose outputs are finite by construction.
    pub(crate) fn from_parts(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        debug_assert!(sample_rate_hz > 0);
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn zeros(len: usize, sample_rate_hz: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Copies `len` samples starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.samples.len())
            .ok_or_else(|| Error::param("slice out of range"))?;
        Ok(Self::from_parts(
            self.samples[start..end].to_vec(),
            self.sample_rate_hz,
        ))
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Sample-wise sum of two equal-length, equal-rate signals.
    pub fn add(&self, other: &RealSignal) -> Result<Self> {
        check_compatible(self.len(), other.len(), self.sample_rate_hz, other.sample_rate_hz)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts(samples, self.sample_rate_hz))
    }

    /// Sample-wise difference `self - other`.
    pub fn sub(&self, other: &RealSignal) -> Result<Self> {
        check_compatible(self.len(), other.len(), self.sample_rate_hz, other.sample_rate_hz)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_parts(samples, self.sample_rate_hz))
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|s| s * gain).collect(), self.sample_rate_hz)
    }

    pub fn to_iq(&self) -> IqSignal {
        IqSignal::from_parts(
            self.samples.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
            self.sample_rate_hz,
        )
    }
}

impl IqSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::param(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate_hz: u32) -> Self {
        debug_assert!(sample_rate_hz > 0);
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn add(&self, other: &IqSignal) -> Result<Self> {
        check_compatible(self.len(), other.len(), self.sample_rate_hz, other.sample_rate_hz)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts(samples, self.sample_rate_hz))
    }

    /// Real part of every sample.
    pub fn re(&self) -> RealSignal {
        RealSignal::from_parts(self.samples.iter().map(|s| s.re).collect(), self.sample_rate_hz)
    }
}

fn check_compatible(la: usize, lb: usize, ra: u32, rb: u32) -> Result<()> {
    if la != lb {
        return Err(Error::param(format!("length mismatch: {la} vs {lb}")));
    }
    if ra != rb {
        return Err(Error::param(format!("sample rate mismatch: {ra} vs {rb}")));
    }
    Ok(())
}

/// Mean squared magnitude of a sample sequence.
pub trait Power {
    fn power(&self) -> Result<f64>;
}

impl Power for RealSignal {
    fn power(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::param("power of an empty signal"));
        }
        Ok(self.samples.iter().map(|s| s * s).sum::<f64>() / self.len() as f64)
    }
}

impl Power for IqSignal {
    fn power(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::param("power of an empty signal"));
        }
        Ok(self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.len() as f64)
    }
}

/// Mean squared magnitude; errors on empty input.
pub fn power<S: Power + ?Sized>(signal: &S) -> Result<f64> {
    signal.power()
}
