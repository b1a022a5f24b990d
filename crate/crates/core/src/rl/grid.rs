//! Discrete factor grids for the three action heads.

use crate::error::{Error, Result};

/// Candidate duration, pitch and gain factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    pub duration: Vec<f64>,
    pub pitch: Vec<f64>,
    pub gain: Vec<f64>,
}

fn steps(start: f64, step: f64, count: usize) -> Vec<f64> {
    // integer-stepped, then rounded to kill accumulated float error
    (0..count).map(|i| ((start + step * i as f64) * 1e9).round() / 1e9).collect()
}

impl Default for ActionGrid {
    /// Duration and gain 0.25..=1.90 step 0.15; pitch 0.5..=1.5 step 0.1.
    fn default() -> Self {
        Self { duration: steps(0.25, 0.15, 12), pitch: steps(0.5, 0.1, 11), gain: steps(0.25, 0.15, 12) }
    }
}

impl ActionGrid {
    /// Pitch and gain pinned to 1.
    pub fn duration_only() -> Self {
        Self { pitch: vec![1.0], gain: vec![1.0], ..Self::default() }
    }

    /// Every head pinned to 1: the environment leaves audio untouched.
    pub fn identity() -> Self {
        Self { duration: vec![1.0], pitch: vec![1.0], gain: vec![1.0] }
    }

    /// Head sizes `[duration, pitch, gain]`.
    pub fn sizes(&self) -> [usize; 3] {
        [self.duration.len(), self.pitch.len(), self.gain.len()]
    }

    /// Index of the exact value 1.0 in each grid.
    pub fn identity_indices(&self) -> Result<[usize; 3]> {
        let find = |g: &[f64], name: &str| {
            g.iter()
                .position(|&v| v == 1.0)
                .ok_or_else(|| Error::Config(format!("{name} grid has no identity entry")))
        };
        Ok([find(&self.duration, "duration")?, find(&self.pitch, "pitch")?, find(&self.gain, "gain")?])
    }

    /// Factors `(duration, pitch, gain)` for an action.
    pub fn factors(&self, action: Action) -> (f64, f64, f64) {
        (self.duration[action.duration], self.pitch[action.pitch], self.gain[action.gain])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("duration", &self.duration), ("pitch", &self.pitch), ("gain", &self.gain)] {
            if g.is_empty() || g.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Config(format!("{name} grid must be nonempty and positive")));
            }
        }
        Ok(())
    }
}

/// Chosen index per head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub duration: usize,
    pub pitch: usize,
    pub gain: usize,
}

impl Action {
    pub fn indices(self) -> [usize; 3] {
        [self.duration, self.pitch, self.gain]
    }

    pub fn from_indices(i: [usize; 3]) -> Self {
        Self { duration: i[0], pitch: i[1], gain: i[2] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let g = ActionGrid::default();
        assert_eq!(g.sizes(), [12, 11, 12]);
        assert_eq!(g.duration[0], 0.25);
        assert_eq!(g.duration[11], 1.9);
        for (i, &d) in g.duration.iter().enumerate() {
            assert!((d - (0.25 + 0.15 * i as f64)).abs() < 1e-12);
        }
        assert_eq!(g.pitch[0], 0.5);
        assert_eq!(g.pitch[10], 1.5);
        assert_eq!(g.identity_indices().unwrap(), [5, 5, 5]);
        assert_eq!(g.factors(Action::from_indices([5, 5, 5])), (1.0, 1.0, 1.0));
    }
}
