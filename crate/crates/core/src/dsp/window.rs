use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic Hann window `0.5 - 0.5 cos(2 pi n / len)`.
pub fn hann_window(len: usize) -> Result<Vec<f64>> {
    if len < 2 || len % 2 != 0 {
        return Err(Error::BadLength(len));
    }
    Ok((0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect())
}

/// Overlap-add window sum for `frames` Hann frames at hop `len / 2`.
pub fn ola_denominator(len: usize, frames: usize) -> Result<Vec<f64>> {
    let w = hann_window(len)?;
    let hop = len / 2;
    let mut den = vec![0.0; hop * (frames + 1)];
    for k in 0..frames {
        for (j, &v) in w.iter().enumerate() {
            den[k * hop + j] += v;
        }
    }
    Ok(den)
}

/// Largest `|den - 1|` away from the first and last half-window.
pub fn cola_deviation(len: usize) -> Result<f64> {
    let den = ola_denominator(len, 16)?;
    let hop = len / 2;
    Ok(den[hop..den.len() - hop].iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_quarter() {
        let w = hann_window(8).unwrap();
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_odd_and_tiny() {
        assert!(matches!(hann_window(7), Err(Error::BadLength(7))));
        assert!(hann_window(0).is_err());
    }

    #[test]
    fn cola_at_half_overlap() {
        for len in [2usize, 8, 64, 256, 1000] {
            let w = hann_window(len).unwrap();
            let hop = len / 2;
            for n in 0..hop {
                let s = w[n] + w[n + hop];
                assert!((s - 1.0).abs() < 1e-12, "len {len} n {n} sum {s}");
            }
        }
    }

    #[test]
    fn denominator_edges_taper() {
        let den = ola_denominator(8, 3).unwrap();
        assert_eq!(den.len(), 16);
        assert_eq!(den[0], 0.0);
        assert!(cola_deviation(64).unwrap() < 1e-12);
    }
}
