//! Overlap-add time-scale modification with waveform-similarity search.
//!
//! Output frames sit at anchors `gamma(k) = k * hop`. Each frame reads the
//! input at `sigma(k) = tau^-1(gamma(k))`, nudged within `+-search_radius` to
//! the position most similar to the natural continuation of the previous
//! frame, and the frames are overlap-added with weight normalization.

use super::window::hann_window;
use crate::error::{Error, Result};
use crate::signal::AudioBuffer;

/// Floor on the overlap-add weight sum where frames do not fully overlap.
pub const OLA_DENOMINATOR_FLOOR: f64 = 1e-8;

/// Tie margin for the similarity search; near-ties keep the candidate closest
/// to the nominal position.
const SIMILARITY_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WsolaParams {
    pub window_len: usize,
    pub hop: usize,
    pub search_radius: usize,
}

impl Default for WsolaParams {
    fn default() -> Self {
        Self::new(512, 128).expect("default parameters are valid")
    }
}

impl WsolaParams {
    /// Half-overlap parameters for an even `window_len`.
    pub fn new(window_len: usize, search_radius: usize) -> Result<Self> {
        let p = Self { window_len, hop: window_len / 2, search_radius };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 || self.window_len % 2 != 0 {
            return Err(Error::BadLength(self.window_len));
        }
        if self.hop * 2 != self.window_len {
            return Err(Error::Config(format!("hop {} must be half of window {}", self.hop, self.window_len)));
        }
        if self.search_radius >= self.hop {
            return Err(Error::Config(format!("search radius {} must be below hop {}", self.search_radius, self.hop)));
        }
        Ok(())
    }

    pub fn overlap(&self) -> usize {
        self.window_len - self.hop
    }
}

/// Monotone piecewise-linear map from input to output sample positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeStretchMap {
    points: Vec<(f64, f64)>,
}

impl TimeStretchMap {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 || points[0] != (0.0, 0.0) {
            return Err(Error::Config("time map needs at least two breakpoints starting at (0, 0)".into()));
        }
        if points.windows(2).any(|p| !(p[1].0 > p[0].0 && p[1].1 > p[0].1)) {
            return Err(Error::Config("time map must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn uniform(len_in: usize, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || len_in == 0 {
            return Err(Error::Config(format!("invalid uniform stretch {factor} over {len_in} samples")));
        }
        Self::new(vec![(0.0, 0.0), (len_in as f64, len_in as f64 * factor)])
    }

    /// Unit slope everywhere except the given sorted, disjoint
    /// `(start, end, factor)` input intervals.
    pub fn piecewise(len_in: usize, segments: &[(usize, usize, f64)]) -> Result<Self> {
        let mut points = vec![(0.0, 0.0)];
        let (mut x, mut y) = (0.0, 0.0);
        for &(s, e, f) in segments {
            if (s as f64) < x || e <= s || e > len_in || !(f > 0.0) {
                return Err(Error::Config(format!("bad stretch segment {s}..{e} x{f}")));
            }
            if s as f64 > x {
                y += s as f64 - x;
                x = s as f64;
                points.push((x, y));
            }
            y += (e - s) as f64 * f;
            x = e as f64;
            points.push((x, y));
        }
        if (len_in as f64) > x {
            y += len_in as f64 - x;
            points.push((len_in as f64, y));
        }
        Self::new(points)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn input_len(&self) -> f64 {
        self.points.last().expect("nonempty").0
    }

    pub fn output_len(&self) -> f64 {
        self.points.last().expect("nonempty").1
    }

    /// Inverse map at a single output position.
    pub fn inverse(&self, out: f64) -> Result<f64> {
        if !(0.0..=self.output_len()).contains(&out) {
            return Err(Error::OutOfRange { value: out, lo: 0.0, hi: self.output_len() });
        }
        let i = self.points.partition_point(|p| p.1 < out).max(1);
        let ((x0, y0), (x1, y1)) = (self.points[i - 1], self.points[i]);
        Ok(x0 + (out - y0) * (x1 - x0) / (y1 - y0))
    }
}

/// Output frame positions `k * hop` for `k < ceil(out_len / hop)`.
pub fn output_anchors(out_len: usize, hop: usize) -> Vec<usize> {
    assert!(hop >= 1, "hop must be positive");
    (0..out_len.div_ceil(hop)).map(|k| k * hop).collect()
}

/// Input frame positions `sigma(k) = tau^-1(gamma(k))`, rounded.
pub fn invert_map(map: &TimeStretchMap, anchors: &[usize]) -> Result<Vec<usize>> {
    anchors.iter().map(|&g| map.inverse(g as f64).map(|x| x.round() as usize)).collect()
}

fn ncc(a: &[f32], b: &[f32]) -> Option<f64> {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    (aa > 0.0 && bb > 0.0).then(|| ab / (aa * bb).sqrt())
}

/// Searches `[sigma - radius, sigma + radius]` (clamped to the signal) for the
/// read position whose first `template.len()` samples best match `template`
/// by normalized cross-correlation.
pub fn wsola_adjust(y: &[f32], sigma: usize, template: &[f32], params: &WsolaParams) -> usize {
    let width = template.len();
    if params.search_radius == 0 || width == 0 || y.len() < width || template.iter().all(|&s| s == 0.0) {
        return sigma;
    }
    let radius = params.search_radius as i64;
    let (lo, hi) = (0i64, (y.len() - width) as i64);
    let mut best: Option<(usize, f64)> = None;
    for step in 0..=2 * radius {
        // 0, -1, +1, -2, +2, ...
        let d = if step % 2 == 0 { -(step / 2) } else { step / 2 + 1 };
        let cand = sigma as i64 + d;
        if cand < lo || cand > hi {
            continue;
        }
        let cand = cand as usize;
        let score = ncc(&y[cand..cand + width], template).unwrap_or(0.0);
        if best.is_none_or(|(_, s)| score > s + SIMILARITY_TIE) {
            best = Some((cand, score));
        }
    }
    best.map_or(sigma, |(c, _)| c)
}

/// Normalized overlap-add of frames read at `sigma` and placed at `gamma`.
pub fn overlap_add_synthesize(y: &[f32], sigma: &[usize], gamma: &[usize], window: &[f64], out_len: usize) -> Result<Vec<f32>> {
    if sigma.len() != gamma.len() {
        return Err(Error::LengthMismatch { expected: gamma.len(), got: sigma.len() });
    }
    let mut num = vec![0.0f64; out_len];
    let mut den = vec![0.0f64; out_len];
    for (&s, &g) in sigma.iter().zip(gamma) {
        for (j, &w) in window.iter().enumerate() {
            let n = g + j;
            if n >= out_len {
                break;
            }
            let v = y.get(s + j).copied().unwrap_or(0.0) as f64;
            num[n] += w * v;
            den[n] += w;
        }
    }
    Ok(num.iter().zip(&den).map(|(&a, &b)| (a / b.max(OLA_DENOMINATOR_FLOOR)) as f32).collect())
}

pub fn time_stretch(y: &AudioBuffer, map: &TimeStretchMap, params: &WsolaParams) -> Result<AudioBuffer> {
    params.validate()?;
    if y.len() < params.window_len {
        return Err(Error::SignalTooShort { len: y.len(), needed: params.window_len });
    }
    let window = hann_window(params.window_len)?;
    let out_len = map.output_len().round() as usize;
    let gamma = output_anchors(out_len, params.hop);
    let nominal = invert_map(map, &gamma)?;
    let overlap = params.overlap();
    let mut sigma = Vec::with_capacity(nominal.len());
    let mut template = vec![0.0f32; overlap];
    for (k, &s) in nominal.iter().enumerate() {
        let adjusted = if k == 0 {
            s
        } else {
            let start = sigma[k - 1] + params.hop;
            for (j, t) in template.iter_mut().enumerate() {
                *t = y.samples.get(start + j).copied().unwrap_or(0.0);
            }
            wsola_adjust(&y.samples, s, &template, params)
        };
        sigma.push(adjusted);
    }
    let z = overlap_add_synthesize(&y.samples, &sigma, &gamma, &window, out_len)?;
    AudioBuffer::new(z, y.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{estimate_f0_autocorr, snr_db};
    use std::f64::consts::PI;

    fn tone(freq: f64, n: usize) -> AudioBuffer {
        let s = (0..n).map(|i| (0.5 * (2.0 * PI * freq * i as f64 / 16000.0).sin()) as f32).collect();
        AudioBuffer::new(s, 16000).unwrap()
    }

    #[test]
    fn anchors() {
        assert_eq!(output_anchors(1000, 256), vec![0, 256, 512, 768]);
        assert_eq!(output_anchors(3, 1), vec![0, 1, 2]);
        for (len, hop) in [(1usize, 7usize), (513, 256), (512, 256), (10_000, 33)] {
            assert_eq!(output_anchors(len, hop).len(), len.div_ceil(hop));
        }
    }

    #[test]
    fn inverse_maps() {
        let id = TimeStretchMap::uniform(1000, 1.0).unwrap();
        let g = output_anchors(1000, 100);
        assert_eq!(invert_map(&id, &g).unwrap(), g);
        let double = TimeStretchMap::uniform(1000, 2.0).unwrap();
        assert_eq!(invert_map(&double, &[512]).unwrap(), vec![256]);
        let m = TimeStretchMap::piecewise(80_000, &[(32_000, 48_000, 1.5)]).unwrap();
        assert_eq!(m.output_len(), 88_000.0);
        assert_eq!(m.inverse(56_000.0).unwrap(), 48_000.0);
        assert!(matches!(m.inverse(88_001.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn map_rejects_non_monotone() {
        assert!(TimeStretchMap::new(vec![(0.0, 0.0), (10.0, 5.0), (8.0, 9.0)]).is_err());
        assert!(TimeStretchMap::new(vec![(1.0, 0.0), (10.0, 5.0)]).is_err());
    }

    #[test]
    fn zero_radius_keeps_position() {
        let y = tone(200.0, 4000);
        let p = WsolaParams::new(512, 0).unwrap();
        assert_eq!(wsola_adjust(&y.samples, 1000, &y.samples[700..956], &p), 1000);
        let zeros = vec![0.0f32; 4000];
        let p = WsolaParams::new(512, 128).unwrap();
        assert_eq!(wsola_adjust(&zeros, 1000, &y.samples[700..956], &p), 1000);
    }

    #[test]
    fn search_realigns_to_period() {
        // 200 Hz -> 80-sample period.
        let y = tone(200.0, 8000);
        let p = WsolaParams::new(512, 128).unwrap();
        let natural = 2000;
        let template = &y.samples[natural..natural + 256];
        for offset in [-70i64, -37, 13, 41, 80] {
            let found = wsola_adjust(&y.samples, (natural as i64 + offset) as usize, template, &p) as i64;
            let rem = (found - natural as i64).rem_euclid(80);
            assert!(rem <= 1 || rem >= 79, "offset {offset} found {found}");
        }
    }

    #[test]
    fn identity_ola_denominator_is_one() {
        let w = hann_window(64).unwrap();
        let y = vec![1.0f32; 1024];
        let g = output_anchors(1024, 32);
        let z = overlap_add_synthesize(&y, &g, &g, &w, 1024).unwrap();
        for &v in &z[32..1024 - 32] {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_frame_reproduces_support() {
        let w = hann_window(8).unwrap();
        let y: Vec<f32> = (0..8).map(|i| i as f32 * 0.1).collect();
        let z = overlap_add_synthesize(&y, &[0], &[0], &w, 8).unwrap();
        for i in 1..8 {
            assert!((z[i] - y[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn length_and_pitch_contracts() {
        let y = tone(220.0, 16000);
        let p = WsolaParams::default();
        let z = time_stretch(&y, &TimeStretchMap::uniform(y.len(), 1.5).unwrap(), &p).unwrap();
        assert!((z.len() as f64 - 24000.0).abs() <= 512.0);
        let f0 = estimate_f0_autocorr(&z.slice(2000, 22000), 75.0, 400.0).unwrap();
        assert!((f0 - 220.0).abs() < 220.0 * 0.03, "f0 {f0}");
    }

    #[test]
    fn identity_stretch_snr() {
        let y = tone(173.0, 16000);
        for (radius, min_snr) in [(0usize, 60.0), (128, 25.0)] {
            let p = WsolaParams::new(512, radius).unwrap();
            let z = time_stretch(&y, &TimeStretchMap::uniform(y.len(), 1.0).unwrap(), &p).unwrap();
            assert_eq!(z.len(), y.len());
            let snr = snr_db(&y.samples[800..15200], &z.samples[800..15200]);
            assert!(snr >= min_snr, "radius {radius} snr {snr}");
        }
    }

    #[test]
    fn too_short() {
        let y = tone(200.0, 100);
        let map = TimeStretchMap::uniform(100, 1.0).unwrap();
        assert!(matches!(time_stretch(&y, &map, &WsolaParams::default()), Err(Error::SignalTooShort { .. })));
    }
}
