//! The five emotion classes and distributions over them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const NUM_EMOTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emotion {
    Neutral = 0,
    Angry = 1,
    Happy = 2,
    Sad = 3,
    Fearful = 4,
}

impl Emotion {
    pub const ALL: [Emotion; NUM_EMOTIONS] = [
        Emotion::Neutral,
        Emotion::Angry,
        Emotion::Happy,
        Emotion::Sad,
        Emotion::Fearful,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Emotion> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Angry => "angry",
            Emotion::Happy => "happy",
            Emotion::Sad => "sad",
            Emotion::Fearful => "fearful",
        }
    }

    pub fn one_hot(self) -> [f64; NUM_EMOTIONS] {
        let mut v = [0.0; NUM_EMOTIONS];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown emotion '{s}'")))
    }
}

/// A point on the 5-class probability simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionDistribution([f64; NUM_EMOTIONS]);

impl EmotionDistribution {
    pub const TOLERANCE: f64 = 1e-6;

    pub fn new(probs: [f64; NUM_EMOTIONS]) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::Config(format!("not a distribution: {probs:?}")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights onto the simplex.
    pub fn from_weights(w: [f64; NUM_EMOTIONS]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::Config(format!("cannot normalize weights {w:?}")));
        }
        Ok(Self(w.map(|x| x / sum)))
    }

    pub fn one_hot(e: Emotion) -> Self {
        Self(e.one_hot())
    }

    pub fn probs(&self) -> &[f64; NUM_EMOTIONS] {
        &self.0
    }

    pub fn get(&self, e: Emotion) -> f64 {
        self.0[e.index()]
    }

    /// Most probable class; ties go to the lowest class index.
    pub fn argmax(&self) -> Emotion {
        let mut best = 0;
        for i in 1..NUM_EMOTIONS {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        Emotion::ALL[best]
    }

    /// Class indices ordered by decreasing probability, ties by index.
    pub fn ranking(&self) -> [usize; NUM_EMOTIONS] {
        let mut idx = [0, 1, 2, 3, 4];
        idx.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        idx
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_take_lowest_index() {
        let d = EmotionDistribution::new([0.1, 0.4, 0.4, 0.05, 0.05]).unwrap();
        assert_eq!(d.argmax(), Emotion::Angry);
        assert_eq!(d.ranking()[..2], [1, 2]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("Sad".parse::<Emotion>().unwrap(), Emotion::Sad);
        assert!("bored".parse::<Emotion>().is_err());
    }

    #[test]
    fn rejects_off_simplex() {
        assert!(EmotionDistribution::new([0.5, 0.5, 0.5, 0.0, 0.0]).is_err());
    }
}
