use std::f64::consts::PI;

use super::{BasebandSignal, FunctionSpec, Measurement, ModulationConfig};
use crate::chirp::chirp_sequence;
use crate::error::{Error, Result};
use crate::Complex;

/// Result of a matched-filter decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub symbol: Measurement,
    /// Correlation of the received real part with each unit-amplitude
    /// candidate tone.
    pub scores: Vec<f64>,
}

fn tone_phase(m: usize, n: usize, n_levels: usize) -> f64 {
    PI * (2 * m + 1) as f64 * n as f64 / (2 * n_levels) as f64
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Transmitter / receiver pair with precomputed tone and chirp tables.
///
/// Building a modem costs `O(N²)` trigonometric evaluations; reuse it across
/// symbols. All methods take `&self`, so a modem can be shared between
/// worker threads.
#[derive(Debug, Clone)]
pub struct Modem {
    cfg: ModulationConfig,
    // Row m holds √(2/N)·cos(π(2m+1)n/2N), n = 0..N.
    cos_rows: Vec<f64>,
    // Matching sine rows, only needed to build analytic tones for spreading.
    sin_rows: Option<Vec<f64>>,
    chirp: Option<Vec<Complex>>,
}

impl Modem {
    pub fn new(cfg: ModulationConfig) -> Self {
        let n = cfg.n_levels();
        let norm = (2.0 / n as f64).sqrt();
        let table = |f: fn(f64) -> f64| {
            let mut rows = Vec::with_capacity(n * n);
            for m in 0..n {
                rows.extend((0..n).map(|i| norm * f(tone_phase(m, i, n))));
            }
            rows
        };
        let chirped = cfg.spreading_rate() > 0.0;
        Self {
            cfg,
            cos_rows: table(f64::cos),
            sin_rows: chirped.then(|| table(f64::sin)),
            chirp: chirped.then(|| chirp_sequence(&cfg.chirp_params())),
        }
    }

    pub fn config(&self) -> &ModulationConfig {
        &self.cfg
    }

    pub fn n_levels(&self) -> usize {
        self.cfg.n_levels()
    }

    pub fn is_chirped(&self) -> bool {
        self.chirp.is_some()
    }

    /// Unit-amplitude real tone for symbol `m`.
    pub fn tone(&self, m: usize) -> &[f64] {
        let n = self.n_levels();
        &self.cos_rows[m * n..(m + 1) * n]
    }

    /// Transmitted block for one symbol: the real tone when unchirped,
    /// otherwise the analytic tone multiplied by the chirp.
    pub fn transmit(&self, m: Measurement) -> Result<BasebandSignal> {
        self.cfg.check_measurement(m)?;
        let mut weights = vec![0.0; self.n_levels()];
        weights[m.index()] = 1.0;
        self.transmit_weighted(&weights)
    }

    /// Coherent sum `Σ_j w_j · transmit(j)`. Over-the-air superposition of
    /// users sharing one chirp reduces to a weighted sum per symbol index.
    pub fn transmit_weighted(&self, weights: &[f64]) -> Result<BasebandSignal> {
        let n = self.n_levels();
        self.cfg.check_len(weights.len())?;
        let amp = self.cfg.carrier_amplitude();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let aw = amp * w;
            for (acc, &t) in re.iter_mut().zip(&self.cos_rows[j * n..(j + 1) * n]) {
                *acc += aw * t;
            }
            if let Some(sin_rows) = &self.sin_rows {
                for (acc, &t) in im.iter_mut().zip(&sin_rows[j * n..(j + 1) * n]) {
                    *acc += aw * t;
                }
            }
        }
        let mut samples: Vec<Complex> = re
            .into_iter()
            .zip(im)
            .map(|(r, i)| Complex::new(r, i))
            .collect();
        if let Some(chirp) = &self.chirp {
            for (s, c) in samples.iter_mut().zip(chirp) {
                *s *= c;
            }
        }
        Ok(BasebandSignal::new(samples, self.cfg.sample_rate()))
    }

    /// Matched-filter outputs `c_j = Σ_n x[n]·u_j[n]` for a real block.
    pub fn correlate(&self, real: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_levels();
        self.cfg.check_len(real.len())?;
        Ok(self
            .cos_rows
            .chunks_exact(n)
            .map(|row| row.iter().zip(real).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Despreads (when chirped), drops the imaginary part and correlates.
    pub fn project(&self, y: &BasebandSignal) -> Result<Vec<f64>> {
        self.cfg.check_len(y.len())?;
        let real: Vec<f64> = match &self.chirp {
            Some(chirp) => y
                .samples
                .iter()
                .zip(chirp)
                .map(|(s, c)| (s * c.conj()).re)
                .collect(),
            None => y.real_part(),
        };
        self.correlate(&real)
    }

    /// Full receiver for one symbol block.
    pub fn demodulate(&self, y: &BasebandSignal) -> Result<Detection> {
        let scores = self.project(y)?;
        Ok(Detection {
            symbol: Measurement::from_index(argmax(&scores)),
            scores,
        })
    }
}

/// Single-tone DCT-FSK block `A·√(2/N)·cos(π(2m+1)n/2N)` with zero
/// imaginary part. Ignores the spreading rate; see [`crate::chirp::spread`].
pub fn modulate_single_tone(m: Measurement, cfg: &ModulationConfig) -> Result<BasebandSignal> {
    cfg.check_measurement(m)?;
    let n = cfg.n_levels();
    let a = cfg.carrier_amplitude() * (2.0 / n as f64).sqrt();
    let samples: Vec<f64> = (0..n)
        .map(|i| a * tone_phase(m.index(), i, n).cos())
        .collect();
    Ok(BasebandSignal::from_real(&samples, cfg.sample_rate()))
}

/// Multi-tone block `A·√(2/N)·Σ_{k∈𝒦} F_k cos(πk(2m+1)n/2N)`.
pub fn modulate_multitone(
    spec: &FunctionSpec,
    m: Measurement,
    cfg: &ModulationConfig,
) -> Result<BasebandSignal> {
    cfg.check_measurement(m)?;
    if spec.n_levels() != cfg.n_levels() {
        return Err(Error::LengthMismatch {
            expected: cfg.n_levels(),
            actual: spec.n_levels(),
        });
    }
    if spec.retained().is_empty() {
        return Err(Error::invalid("retained coefficient set is empty"));
    }
    let n = cfg.n_levels();
    let a = cfg.carrier_amplitude() * (2.0 / n as f64).sqrt();
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let acc: f64 = spec
                .retained_coefficients()
                .map(|(k, f)| f * (k as f64 * tone_phase(m.index(), i, n)).cos())
                .sum();
            a * acc
        })
        .collect();
    Ok(BasebandSignal::from_real(&samples, cfg.sample_rate()))
}

/// Matched-filter detection on the real part of an already despread block.
///
/// Builds a [`Modem`] per call; loops should hold one and call
/// [`Modem::correlate`] instead.
pub fn demodulate(y: &BasebandSignal, cfg: &ModulationConfig) -> Result<Detection> {
    cfg.check_len(y.len())?;
    let modem = Modem::new(cfg.with_spreading_rate(0.0)?);
    modem.demodulate(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> ModulationConfig {
        ModulationConfig::with_levels(n).unwrap()
    }

    #[test]
    fn first_sample_of_symbol_zero() {
        let z = modulate_single_tone(Measurement::from_index(0), &cfg(8)).unwrap();
        assert!((z.samples[0].re - 0.5).abs() < 1e-15);
        assert!(z.samples.iter().all(|s| s.im == 0.0));
    }

    #[test]
    fn energy_matches_direct_summation() {
        // Oracle: plain summation of A²(2/N)cos² without the modulator.
        for &(n, amp) in &[(8usize, 1.0), (64, 2.5), (256, 0.3)] {
            let c = cfg(n).with_amplitude(amp).unwrap();
            for m in [0, 1, n / 2, n - 1] {
                let direct: f64 = (0..n)
                    .map(|i| {
                        let v = (PI * (2 * m + 1) as f64 * i as f64 / (2 * n) as f64).cos();
                        amp * amp * 2.0 / n as f64 * v * v
                    })
                    .sum();
                let closed = amp * amp * (n + 1) as f64 / n as f64;
                assert!((direct - closed).abs() / closed < 1e-12);
                let z = modulate_single_tone(Measurement::from_index(m), &c).unwrap();
                assert!((z.energy() - closed).abs() / closed < 1e-9);
            }
        }
    }

    #[test]
    fn out_of_range_symbol_rejected() {
        let c = cfg(8);
        assert!(modulate_single_tone(Measurement::from_index(8), &c).is_err());
        assert!(Modem::new(c).transmit(Measurement::from_index(9)).is_err());
    }

    #[test]
    fn noise_free_round_trip_all_symbols() {
        let c = cfg(256);
        let modem = Modem::new(c);
        for m in 0..256 {
            let z = modulate_single_tone(Measurement::from_index(m), &c).unwrap();
            assert_eq!(modem.demodulate(&z).unwrap().symbol.index(), m);
        }
        let z = modulate_single_tone(Measurement::from_index(3), &c).unwrap();
        assert_eq!(demodulate(&z, &c).unwrap().symbol.index(), 3);
    }

    #[test]
    fn detection_is_scale_invariant() {
        let c = cfg(256);
        let modem = Modem::new(c);
        let z = modulate_single_tone(Measurement::from_index(77), &c).unwrap();
        for alpha in [1e-7, 0.5, 3.0, 1e6] {
            assert_eq!(
                modem.demodulate(&z.scaled(alpha)).unwrap().symbol.index(),
                77
            );
        }
    }

    #[test]
    fn cross_correlation_is_one_over_n_plus_one_of_diagonal() {
        let n = 64;
        let c = cfg(n);
        let waves: Vec<Vec<f64>> = (0..n)
            .map(|m| {
                modulate_single_tone(Measurement::from_index(m), &c)
                    .unwrap()
                    .real_part()
            })
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let bound = 2.0 / n as f64 * 0.5;
        for a in 0..n {
            let diag = dot(&waves[a], &waves[a]);
            for b in 0..n {
                if a != b {
                    let cross = dot(&waves[a], &waves[b]);
                    assert!(cross.abs() <= bound + 1e-12);
                    assert!(cross.abs() / diag <= 1.0 / (n + 1) as f64 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn multitone_special_cases() {
        let n = 16;
        let c = cfg(n).with_amplitude(2.0).unwrap();
        let m = Measurement::from_index(5);

        let single = FunctionSpec::from_coefficients(n, &[(1, 1.0)]).unwrap();
        let a = modulate_multitone(&single, m, &c).unwrap();
        let b = modulate_single_tone(m, &c).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).norm() < 1e-12);
        }

        let dc = FunctionSpec::from_coefficients(n, &[(0, 0.7)]).unwrap();
        let z = modulate_multitone(&dc, m, &c).unwrap();
        let expected = 2.0 * (2.0 / n as f64).sqrt() * 0.7;
        assert!(z.samples.iter().all(|s| (s.re - expected).abs() < 1e-12));

        let zero = FunctionSpec::from_coefficients(n, &[(2, 0.0), (3, 0.0)]).unwrap();
        let z = modulate_multitone(&zero, m, &c).unwrap();
        assert!(z.samples.iter().all(|s| s.norm() == 0.0));

        let empty = FunctionSpec::from_coefficients(n, &[]).unwrap();
        assert!(modulate_multitone(&empty, m, &c).is_err());
    }

    #[test]
    fn weighted_transmit_is_linear() {
        let c = cfg(32).with_spreading_rate(0.5).unwrap();
        let modem = Modem::new(c);
        let mut w = vec![0.0; 32];
        w[3] = 2.0;
        w[9] = 0.5;
        let sum = modem.transmit_weighted(&w).unwrap();
        let a = modem.transmit(Measurement::from_index(3)).unwrap();
        let b = modem.transmit(Measurement::from_index(9)).unwrap();
        for i in 0..32 {
            let expected = a.samples[i] * 2.0 + b.samples[i] * 0.5;
            assert!((sum.samples[i] - expected).norm() < 1e-12);
        }
    }
}
