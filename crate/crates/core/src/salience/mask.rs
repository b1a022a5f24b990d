//! Energy gating of the posterior and mask-to-segment conversion.

use super::model::FRAME_HOP;
use super::prior::CLAMP;
use crate::error::{Error, Result};

/// `true` where a frame is within `threshold_db` of the loudest frame.
/// A silent signal keeps nothing.
pub fn energy_keep(energies: &[f64], threshold_db: f64) -> Vec<bool> {
    let peak = energies.iter().cloned().fold(0.0, f64::max);
    energies
        .iter()
        .map(|&e| peak > 0.0 && e > 0.0 && 20.0 * (e / peak).log10() >= threshold_db)
        .collect()
}

/// Forces `q_t` to the clamp floor wherever the frame falls below the
/// energy threshold.
pub fn energy_gate(q: &[f64], energies: &[f64], threshold_db: f64) -> Result<Vec<f64>> {
    if q.len() != energies.len() {
        return Err(Error::LengthMismatch { expected: q.len(), got: energies.len() });
    }
    Ok(q.iter()
        .zip(energy_keep(energies, threshold_db))
        .map(|(&qt, keep)| if keep { qt } else { CLAMP })
        .collect())
}

/// Frame runs `[a, b)` of a binary mask after merging gaps shorter than two
/// frames and dropping runs shorter than three.
pub fn mask_runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut t = 0;
    while t < mask.len() {
        if !mask[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < mask.len() && mask[t] {
            t += 1;
        }
        match runs.last_mut() {
            Some(last) if start - last.1 < 2 => last.1 = t,
            _ => runs.push((start, t)),
        }
    }
    runs.retain(|(a, b)| b - a >= 3);
    runs
}

/// Sample spans for a frame mask: run `[a, b)` maps to `[a * hop, b * hop + win)`.
pub fn extract_segments(mask: &[bool], hop: usize, win: usize) -> Vec<(usize, usize)> {
    mask_runs(mask).into_iter().map(|(a, b)| (a * hop, b * hop + win)).collect()
}

/// Truncates spans to a signal of `len` samples, dropping empty ones.
pub fn clip_spans(spans: &[(usize, usize)], len: usize) -> Vec<(usize, usize)> {
    spans.iter().map(|&(s, e)| (s.min(len), e.min(len))).filter(|(s, e)| s < e).collect()
}

/// Sample spans of the frame mask of a `len`-sample signal at the extractor hop.
pub fn mask_segments(mask: &[bool], len: usize) -> Vec<(usize, usize)> {
    clip_spans(&extract_segments(mask, FRAME_HOP, FRAME_HOP), len)
}

/// Intersection-over-union in samples between the union of `spans` and a
/// reference span. Spans are assumed disjoint.
pub fn span_iou(spans: &[(usize, usize)], reference: (usize, usize)) -> f64 {
    let covered: usize = spans.iter().map(|(s, e)| e - s).sum();
    let inter: usize = spans
        .iter()
        .map(|&(s, e)| e.min(reference.1).saturating_sub(s.max(reference.0)))
        .sum();
    let union = covered + (reference.1 - reference.0) - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().filter(|c| !c.is_whitespace()).map(|c| c == '1').collect()
    }

    #[test]
    fn single_run_span() {
        assert_eq!(extract_segments(&bits("0011100"), 320, 320), vec![(640, 1920)]);
    }

    #[test]
    fn one_frame_gap_merges() {
        assert_eq!(mask_runs(&bits("11011")), vec![(0, 5)]);
        assert_eq!(mask_runs(&bits("1110111")), vec![(0, 7)]);
        assert_eq!(mask_runs(&bits("11100111")), vec![(0, 3), (5, 8)]);
    }

    #[test]
    fn short_runs_dropped() {
        assert!(extract_segments(&bits("010"), 320, 320).is_empty());
        assert!(mask_runs(&bits("0110")).is_empty());
    }

    #[test]
    fn gate_cases() {
        let q = [0.3, 0.6, 0.9];
        assert_eq!(energy_gate(&q, &[1.0, 0.5, 0.2], -40.0).unwrap(), q.to_vec());
        let gated = energy_gate(&q, &[0.0, 0.5, 0.2], -40.0).unwrap();
        assert_eq!(gated, vec![CLAMP, 0.6, 0.9]);
        assert_eq!(energy_gate(&q, &[0.0; 3], -40.0).unwrap(), vec![CLAMP; 3]);
        assert!(matches!(energy_gate(&q, &[1.0], -40.0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn iou_values() {
        assert_eq!(span_iou(&[(0, 10)], (0, 10)), 1.0);
        assert_eq!(span_iou(&[], (0, 10)), 0.0);
        assert!((span_iou(&[(5, 15)], (0, 10)) - 5.0 / 15.0).abs() < 1e-12);
        assert_eq!(clip_spans(&[(0, 50), (60, 80)], 55), vec![(0, 50)]);
    }
}
