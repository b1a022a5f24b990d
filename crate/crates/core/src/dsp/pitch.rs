use crate::error::{Error, Result};
use crate::signal::AudioBuffer;

const VOICING_THRESHOLD: f64 = 0.3;
/// The first local peak within this fraction of the global maximum wins,
/// which keeps period multiples from being reported (octave errors).
const FIRST_PEAK_FRACTION: f64 = 0.9;

fn normalized_autocorr(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        ab += x[i] * x[i + lag];
        aa += x[i] * x[i];
        bb += x[i + lag] * x[i + lag];
    }
    if aa > 0.0 && bb > 0.0 {
        ab / (aa * bb).sqrt()
    } else {
        0.0
    }
}

/// Autocorrelation F0 estimate in `[fmin, fmax]` with parabolic refinement.
pub fn estimate_f0_autocorr(y: &AudioBuffer, fmin: f64, fmax: f64) -> Result<f64> {
    if !(fmin > 0.0 && fmax > fmin) {
        return Err(Error::Config(format!("bad F0 range {fmin}..{fmax}")));
    }
    let sr = y.sample_rate as f64;
    let needed = (2.0 * sr / fmin).ceil() as usize;
    if y.len() < needed {
        return Err(Error::SignalTooShort { len: y.len(), needed });
    }
    let x: Vec<f64> = y.samples.iter().map(|&s| s as f64).collect();
    let min_lag = ((sr / fmax).floor() as usize).max(2);
    let max_lag = (sr / fmin).ceil() as usize;
    let r: Vec<f64> = (min_lag - 1..=max_lag + 1).map(|lag| normalized_autocorr(&x, lag)).collect();
    let at = |lag: usize| r[lag + 1 - min_lag];
    let peak = (min_lag..=max_lag).map(at).fold(f64::NEG_INFINITY, f64::max);
    if peak < VOICING_THRESHOLD {
        return Err(Error::Unvoiced(peak));
    }
    let lag = (min_lag..=max_lag)
        .find(|&l| at(l) >= FIRST_PEAK_FRACTION * peak && at(l) >= at(l - 1) && at(l) >= at(l + 1))
        .unwrap_or_else(|| (min_lag..=max_lag).max_by(|&a, &b| at(a).total_cmp(&at(b))).expect("nonempty"));
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 1e-12 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    Ok(sr / (lag as f64 + delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn buf(s: Vec<f64>) -> AudioBuffer {
        AudioBuffer::from_f64(&s, 16000).unwrap()
    }

    #[test]
    fn sine_220() {
        let y = buf((0..8000).map(|i| (2.0 * PI * 220.0 * i as f64 / 16000.0).sin()).collect());
        let f0 = estimate_f0_autocorr(&y, 75.0, 400.0).unwrap();
        assert!((f0 - 220.0).abs() < 1.0, "f0 {f0}");
    }

    #[test]
    fn sawtooth_110_no_octave_error() {
        let y = buf((0..8000).map(|i| 2.0 * ((110.0 * i as f64 / 16000.0) % 1.0) - 1.0).collect());
        let f0 = estimate_f0_autocorr(&y, 75.0, 400.0).unwrap();
        assert!((f0 - 110.0).abs() < 1.0, "f0 {f0}");
    }

    #[test]
    fn white_noise_is_unvoiced() {
        let mut rng = crate::seed::rng_from(4);
        let y = buf((0..8000).map(|_| rng.gen_range(-1.0..1.0)).collect());
        assert!(matches!(estimate_f0_autocorr(&y, 75.0, 400.0), Err(Error::Unvoiced(_))));
    }

    #[test]
    fn short_input() {
        let y = buf(vec![0.1; 100]);
        assert!(matches!(estimate_f0_autocorr(&y, 75.0, 400.0), Err(Error::SignalTooShort { .. })));
    }
}
