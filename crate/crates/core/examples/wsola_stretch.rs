//! Time-stretches a harmonic tone by several factors and reports output
//! length and F0, which WSOLA should leave unchanged.
//!
//! cargo run --example wsola_stretch

use std::f64::consts::PI;

use prosody_core::dsp::{estimate_f0_autocorr, time_stretch, TimeStretchMap, WsolaParams};
use prosody_core::signal::{AudioBuffer, SAMPLE_RATE};

fn main() -> prosody_core::Result<()> {
    let sr = SAMPLE_RATE as f64;
    let tone: Vec<f64> = (0..SAMPLE_RATE as usize)
        .map(|n| (1..=4).map(|h| 0.2 / h as f64 * (2.0 * PI * 220.0 * h as f64 * n as f64 / sr).sin()).sum())
        .collect();
    let y = AudioBuffer::from_f64(&tone, SAMPLE_RATE)?;
    let params = WsolaParams::default();
    println!("factor  out_len  expected  f0_hz");
    for factor in [0.5, 0.75, 1.0, 1.25, 1.5, 1.9] {
        let z = time_stretch(&y, &TimeStretchMap::uniform(y.len(), factor)?, &params)?;
        let f0 = estimate_f0_autocorr(&z, 80.0, 400.0)?;
        println!("{factor:>6.2}  {:>7}  {:>8.0}  {f0:.1}", z.len(), factor * y.len() as f64);
    }
    Ok(())
}
