//! DCT-FSK ("DCT-FM") modulation for computing.
//!
//! A measurement `m ∈ [0, N)` is sent as the single tone
//! `z[n] = A·√(2/N)·cos(π(2m+1)n / 2N)`, `n = 0..N`, which is one row of the
//! DCT-III kernel. Detection is a matched-filter bank over all `N` rows.

mod approx;
mod modem;
mod transform;

pub use approx::{approximate_function, reconstruct, theoretical_mse, FunctionSpec};
pub use modem::{demodulate, modulate_multitone, modulate_single_tone, Detection, Modem};
pub use transform::{dct_forward, dct_inverse};

use crate::chirp::ChirpParams;
use crate::error::{Error, Result};
use crate::Complex;

/// Physical parameters shared by transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationConfig {
    n_levels: usize,
    carrier_amplitude: f64,
    observation_time: f64,
    spreading_rate: f64,
}

impl ModulationConfig {
    pub fn new(
        n_levels: usize,
        carrier_amplitude: f64,
        observation_time: f64,
        spreading_rate: f64,
    ) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::invalid(format!(
                "n_levels must be >= 2, got {n_levels}"
            )));
        }
        if !(carrier_amplitude > 0.0 && carrier_amplitude.is_finite()) {
            return Err(Error::invalid(format!(
                "carrier amplitude must be positive, got {carrier_amplitude}"
            )));
        }
        if !(observation_time > 0.0 && observation_time.is_finite()) {
            return Err(Error::invalid(format!(
                "observation time must be positive, got {observation_time}"
            )));
        }
        if !(spreading_rate >= 0.0 && spreading_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "spreading rate must be non-negative, got {spreading_rate}"
            )));
        }
        Ok(Self {
            n_levels,
            carrier_amplitude,
            observation_time,
            spreading_rate,
        })
    }

    /// Unit amplitude, no chirp, and an observation time that puts the
    /// sample rate at 500 kHz.
    pub fn with_levels(n_levels: usize) -> Result<Self> {
        Self::new(n_levels, 1.0, n_levels as f64 / 500e3, 0.0)
    }

    pub fn with_amplitude(self, carrier_amplitude: f64) -> Result<Self> {
        Self::new(
            self.n_levels,
            carrier_amplitude,
            self.observation_time,
            self.spreading_rate,
        )
    }

    pub fn with_spreading_rate(self, spreading_rate: f64) -> Result<Self> {
        Self::new(
            self.n_levels,
            self.carrier_amplitude,
            self.observation_time,
            spreading_rate,
        )
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn carrier_amplitude(&self) -> f64 {
        self.carrier_amplitude
    }

    pub fn observation_time(&self) -> f64 {
        self.observation_time
    }

    pub fn spreading_rate(&self) -> f64 {
        self.spreading_rate
    }

    /// `W = 1/T` in Hz.
    pub fn signal_bandwidth(&self) -> f64 {
        1.0 / self.observation_time
    }

    /// `f_s = N/T` in Hz.
    pub fn sample_rate(&self) -> f64 {
        self.n_levels as f64 / self.observation_time
    }

    /// Receive filter bandwidth `W(2N-1)/4` in Hz.
    pub fn max_baseband_bandwidth(&self) -> f64 {
        self.signal_bandwidth() * (2.0 * self.n_levels as f64 - 1.0) / 4.0
    }

    pub fn chirp_params(&self) -> ChirpParams {
        ChirpParams {
            spreading_rate: self.spreading_rate,
            n_levels: self.n_levels,
        }
    }

    pub(crate) fn check_measurement(&self, m: Measurement) -> Result<()> {
        if m.index() < self.n_levels {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "measurement {} out of range [0, {})",
                m.index(),
                self.n_levels
            )))
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n_levels {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.n_levels,
                actual: len,
            })
        }
    }
}

/// A quantised measurement, i.e. the transmitted symbol index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Measurement(usize);

impl Measurement {
    pub fn new(index: usize, n_levels: usize) -> Result<Self> {
        if index < n_levels {
            Ok(Self(index))
        } else {
            Err(Error::invalid(format!(
                "measurement {index} out of range [0, {n_levels})"
            )))
        }
    }

    /// Wraps an index without a range check. Every operation that consumes a
    /// measurement validates it against its own configuration.
    pub const fn from_index(index: usize) -> Self {
        Self(index)
    }

    /// Nearest-integer quantisation of `x`, clamped to `[0, N-1]`.
    pub fn quantize(x: f64, n_levels: usize) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("cannot quantize {x}")));
        }
        if n_levels == 0 {
            return Err(Error::invalid("n_levels must be positive"));
        }
        let top = (n_levels - 1) as f64;
        Ok(Self(x.clamp(0.0, top).round() as usize))
    }

    pub const fn index(self) -> usize {
        self.0
    }
}

impl From<Measurement> for usize {
    fn from(m: Measurement) -> usize {
        m.0
    }
}

/// A block of `N` complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandSignal {
    pub samples: Vec<Complex>,
    pub sample_rate: f64,
}

impl BasebandSignal {
    pub fn new(samples: Vec<Complex>, sample_rate: f64) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn from_real(samples: &[f64], sample_rate: f64) -> Self {
        Self::new(
            samples.iter().map(|&x| Complex::new(x, 0.0)).collect(),
            sample_rate,
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.re).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.samples.iter().map(|&s| s * factor).collect(),
            self.sample_rate,
        )
    }
}

/// Gaussian tail `Q(x) = P(Z > x)`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Union-bound symbol error probability of `N`-ary orthogonal FSK,
/// `(N-1)·Q(√snr)`, with `snr = A²|h|²/N₀`.
///
/// The approximation only holds at high SNR; the result is clamped to
/// `[0, 1]`.
pub fn symbol_error_probability(snr: f64, n_levels: usize) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::invalid(format!("snr must be >= 0, got {snr}")));
    }
    if n_levels < 2 {
        return Err(Error::invalid(format!(
            "n_levels must be >= 2, got {n_levels}"
        )));
    }
    if snr.is_infinite() {
        return Ok(0.0);
    }
    let p = (n_levels - 1) as f64 * gaussian_tail(snr.sqrt());
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_rates() {
        let cfg = ModulationConfig::new(256, 1.0, 1e-3, 0.0).unwrap();
        assert!((cfg.signal_bandwidth() - 1e3).abs() < 1e-9);
        assert!((cfg.sample_rate() - 256.0 * 1e3).abs() < 1e-6);
        assert!(cfg.max_baseband_bandwidth() < cfg.sample_rate() / 2.0);
        assert!((cfg.max_baseband_bandwidth() - 1e3 * 511.0 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(ModulationConfig::new(1, 1.0, 1.0, 0.0).is_err());
        assert!(ModulationConfig::new(8, 0.0, 1.0, 0.0).is_err());
        assert!(ModulationConfig::new(8, 1.0, -1.0, 0.0).is_err());
        assert!(ModulationConfig::new(8, 1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn quantize_rounds_and_clamps() {
        assert_eq!(Measurement::quantize(3.4, 8).unwrap().index(), 3);
        assert_eq!(Measurement::quantize(3.6, 8).unwrap().index(), 4);
        assert_eq!(Measurement::quantize(-2.0, 8).unwrap().index(), 0);
        assert_eq!(Measurement::quantize(99.0, 8).unwrap().index(), 7);
        assert!(Measurement::quantize(f64::NAN, 8).is_err());
        assert!(Measurement::new(8, 8).is_err());
    }

    #[test]
    fn error_probability_limits() {
        assert_eq!(symbol_error_probability(f64::INFINITY, 256).unwrap(), 0.0);
        assert!(symbol_error_probability(1e4, 256).unwrap() < 1e-300);
        // 255 * Q(0) = 127.5, clamped.
        assert_eq!(symbol_error_probability(0.0, 256).unwrap(), 1.0);
        assert!(symbol_error_probability(-1.0, 256).is_err());
    }

    // Q(4) by Simpson quadrature of the standard normal density on [4, 40].
    fn q_by_quadrature(x0: f64) -> f64 {
        let (a, b, n) = (x0, 40.0, 200_000usize);
        let h = (b - a) / n as f64;
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = pdf(a) + pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn error_probability_at_snr_16_matches_quadrature() {
        let oracle = 255.0 * q_by_quadrature(4.0);
        assert!((oracle - 8.076e-3).abs() < 1e-6, "oracle {oracle}");
        let p = symbol_error_probability(16.0, 256).unwrap();
        assert!((p - oracle).abs() / oracle < 1e-9);
    }
}
