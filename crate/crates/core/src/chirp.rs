//! Chirp spread spectrum on top of the analytic DCT-FSK tone.
//!
//! The chirp phase is referenced to `n = 0` with zero initial phase and has
//! quadratic term `π·f_mod·n²/(2N)`, so the instantaneous frequency is
//! `(2m+1)/4N + f_mod·n/2N` cycles/sample and sweeps `f_mod/2` over a block.

use std::f64::consts::PI;

use crate::dctfm::{BasebandSignal, Measurement, ModulationConfig};
use crate::error::{Error, Result};
use crate::Complex;

/// Fraction of spectral energy enclosed by [`occupied_bandwidth`].
pub const OCCUPIED_ENERGY_FRACTION: f64 = 0.99;

const ZERO_PAD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParams {
    /// Chirp rate `f_mod`; zero disables spreading.
    pub spreading_rate: f64,
    pub n_levels: usize,
}

impl ChirpParams {
    pub fn new(spreading_rate: f64, n_levels: usize) -> Result<Self> {
        if !(spreading_rate >= 0.0 && spreading_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "spreading rate must be non-negative, got {spreading_rate}"
            )));
        }
        if n_levels < 2 {
            return Err(Error::invalid(format!(
                "n_levels must be >= 2, got {n_levels}"
            )));
        }
        Ok(Self {
            spreading_rate,
            n_levels,
        })
    }
}

/// `exp(jπ·f_mod·n²/2N)` for `n = 0..N`.
pub fn chirp_sequence(p: &ChirpParams) -> Vec<Complex> {
    let n = p.n_levels as f64;
    (0..p.n_levels)
        .map(|i| {
            let i = i as f64;
            Complex::from_polar(1.0, PI * p.spreading_rate * i * i / (2.0 * n))
        })
        .collect()
}

/// Analytic tone `A·√(2/N)·exp(jπ(2m+1)n/2N)`.
pub fn analytic_tone(m: Measurement, cfg: &ModulationConfig) -> Result<BasebandSignal> {
    cfg.check_measurement(m)?;
    let n = cfg.n_levels();
    let a = cfg.carrier_amplitude() * (2.0 / n as f64).sqrt();
    let samples = (0..n)
        .map(|i| {
            Complex::from_polar(
                a,
                PI * (2 * m.index() + 1) as f64 * i as f64 / (2 * n) as f64,
            )
        })
        .collect();
    Ok(BasebandSignal::new(samples, cfg.sample_rate()))
}

/// Instantaneous frequency of the spread tone in cycles/sample.
pub fn instantaneous_frequency(n: usize, m: Measurement, p: &ChirpParams) -> Result<f64> {
    let levels = p.n_levels;
    if n >= levels {
        return Err(Error::invalid(format!(
            "sample index {n} out of range [0, {levels})"
        )));
    }
    if m.index() >= levels {
        return Err(Error::invalid(format!(
            "measurement {} out of range [0, {levels})",
            m.index()
        )));
    }
    let nf = levels as f64;
    Ok((2 * m.index() + 1) as f64 / (4.0 * nf) + p.spreading_rate * n as f64 / (2.0 * nf))
}

fn rotate(z: &BasebandSignal, p: &ChirpParams, conjugate: bool) -> Result<BasebandSignal> {
    if z.len() != p.n_levels {
        return Err(Error::LengthMismatch {
            expected: p.n_levels,
            actual: z.len(),
        });
    }
    if p.spreading_rate == 0.0 {
        return Ok(z.clone());
    }
    let samples = z
        .samples
        .iter()
        .zip(chirp_sequence(p))
        .map(|(s, c)| if conjugate { s * c.conj() } else { s * c })
        .collect();
    Ok(BasebandSignal::new(samples, z.sample_rate))
}

/// Multiplies by the chirp.
pub fn spread(z: &BasebandSignal, p: &ChirpParams) -> Result<BasebandSignal> {
    rotate(z, p, false)
}

/// Multiplies by the conjugate chirp; exact inverse of [`spread`].
pub fn despread(z: &BasebandSignal, p: &ChirpParams) -> Result<BasebandSignal> {
    rotate(z, p, true)
}

/// Power spectrum on a zero-padded grid of `ZERO_PAD·len` bins over one
/// period of normalised frequency.
fn power_spectrum(samples: &[Complex]) -> Vec<f64> {
    let size = ZERO_PAD * samples.len();
    let twiddles: Vec<Complex> = (0..size)
        .map(|k| Complex::from_polar(1.0, -2.0 * PI * k as f64 / size as f64))
        .collect();
    (0..size)
        .map(|k| {
            samples
                .iter()
                .enumerate()
                .map(|(n, s)| s * twiddles[(k * n) % size])
                .sum::<Complex>()
                .norm_sqr()
        })
        .collect()
}

/// Width in cycles/sample of the narrowest (circular) frequency band
/// holding 99% of the block's spectral energy.
pub fn occupied_bandwidth(z: &BasebandSignal) -> Result<f64> {
    if z.energy() == 0.0 {
        return Err(Error::invalid("occupied bandwidth of a zero signal"));
    }
    let power = power_spectrum(&z.samples);
    let size = power.len();
    let target = OCCUPIED_ENERGY_FRACTION * power.iter().sum::<f64>();

    // Sliding window over the doubled spectrum.
    let mut best = size;
    let mut end = 0;
    let mut acc = 0.0;
    for start in 0..size {
        while acc < target && end < start + size {
            acc += power[end % size];
            end += 1;
        }
        if acc >= target {
            best = best.min(end - start);
        }
        acc -= power[start];
    }
    Ok(best as f64 / size as f64)
}
