use crate::error::{Error, Result};

/// Sample rate used by every pipeline stage.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono waveform with amplitudes nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio buffer"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn from_f64(samples: &[f64], sample_rate: u32) -> Result<Self> {
        Self::new(samples.iter().map(|&s| s as f32).collect(), sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Saturates samples to [-1, 1]; returns how many were clipped.
    pub fn clip(&mut self) -> usize {
        let mut clipped = 0;
        for s in &mut self.samples {
            if s.abs() > 1.0 {
                *s = s.signum();
                clipped += 1;
            }
        }
        clipped
    }

    pub fn slice(&self, start: usize, end: usize) -> AudioBuffer {
        AudioBuffer {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let ss: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        (ss / self.samples.len() as f64).sqrt()
    }
}
