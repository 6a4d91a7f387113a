//! Type-based multiple access over the LoRa tone set.
//!
//! Users that hold the same measurement transmit the same tone, so the
//! superposed signal carries the histogram of measurements (the *type*)
//! rather than individual symbols. The receiver projects onto the tone set,
//! recovers the normalised histogram `r`, and fits a parameterised pmf to it.

use std::io::{self, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::add_noise;
use crate::dctfm::{BasebandSignal, Measurement, Modem};
use crate::error::{Error, Result};

/// Floor applied to pmf entries before they are used as divisors or in
/// logarithms.
pub const PMF_FLOOR: f64 = 1e-12;

/// Default grid resolution of the parameter search.
pub const DEFAULT_GRID_STEP: f64 = 0.1;

/// Pseudo-count added to the objective's denominators by
/// [`ParameterModel::with_channel_noise`], in units of `1/L`.
///
/// Cells whose expected count is well below one make the chi-square
/// criterion chase single outlying users; with `0.1/L` the estimator stays
/// within about 1 dB of `1/L` NMSE from L = 10 to 1000.
pub const PSEUDO_COUNT: f64 = 0.1;

/// Noisy normalised histogram `r(n) ≈ L_n/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    values: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// The exact type `L_n/L` of a set of measurements.
    pub fn from_measurements(measurements: &[Measurement], n_levels: usize) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::invalid("cannot build a type from zero measurements"));
        }
        let mut counts = vec![0.0; n_levels];
        for m in measurements {
            *counts.get_mut(m.index()).ok_or_else(|| {
                Error::invalid(format!("measurement {} out of range", m.index()))
            })? += 1.0;
        }
        let l = measurements.len() as f64;
        Ok(Self::new(counts.into_iter().map(|c| c / l).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `index,value` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_index_value_csv(
            out,
            "index",
            "value",
            self.values.iter().enumerate().map(|(i, &v)| (i as f64, v)),
        )
    }
}

fn write_index_value_csv<W: Write>(
    mut out: W,
    key: &str,
    value: &str,
    rows: impl Iterator<Item = (f64, f64)>,
) -> io::Result<()> {
    writeln!(out, "{key},{value}")?;
    for (k, v) in rows {
        writeln!(out, "{k},{v}")?;
    }
    Ok(())
}

/// `L` i.i.d. draws of `round(clamp(𝒩(θ, σ²), 0, N-1))`.
pub fn sample_measurements<R: Rng + ?Sized>(
    theta: f64,
    sigma: f64,
    users: usize,
    n_levels: usize,
    rng: &mut R,
) -> Result<Vec<Measurement>> {
    if n_levels < 2 {
        return Err(Error::invalid(format!(
            "n_levels must be >= 2, got {n_levels}"
        )));
    }
    if !(0.0..=(n_levels - 1) as f64).contains(&theta) {
        return Err(Error::invalid(format!(
            "theta {theta} outside [0, {}]",
            n_levels - 1
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if users == 0 {
        return Err(Error::invalid("need at least one user"));
    }
    let dist = Normal::new(theta, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    (0..users)
        .map(|_| Measurement::quantize(dist.sample(rng), n_levels))
        .collect()
}

/// Synchronous over-the-air sum `Σ_l h_l·z_l[n] + w[n]`.
///
/// `gains` defaults to `h_l = 1` for every user. All users share the modem's
/// amplitude and chirp.
pub fn superpose<R: Rng + ?Sized>(
    measurements: &[Measurement],
    gains: Option<&[f64]>,
    modem: &Modem,
    noise_variance: f64,
    rng: &mut R,
) -> Result<BasebandSignal> {
    if measurements.is_empty() {
        return Err(Error::invalid("need at least one user"));
    }
    if let Some(g) = gains {
        if g.len() != measurements.len() {
            return Err(Error::LengthMismatch {
                expected: measurements.len(),
                actual: g.len(),
            });
        }
        if let Some(bad) = g.iter().find(|&&h| !(h >= 0.0 && h.is_finite())) {
            return Err(Error::invalid(format!(
                "channel gain must be >= 0, got {bad}"
            )));
        }
    }
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::invalid(format!(
            "noise variance must be >= 0, got {noise_variance}"
        )));
    }
    let mut weights = vec![0.0; modem.n_levels()];
    for (l, m) in measurements.iter().enumerate() {
        modem.config().check_measurement(*m)?;
        weights[m.index()] += gains.map_or(1.0, |g| g[l]);
    }
    let mut y = modem.transmit_weighted(&weights)?;
    add_noise(&mut y, noise_variance, rng);
    Ok(y)
}

/// Recovers `r` from a superposed block of `users` transmissions.
///
/// The tone set has Gram matrix `I + 11ᵀ/N`, so the matched-filter outputs
/// are decorrelated with its inverse `I - 11ᵀ/2N` before scaling by
/// `1/(A·L)`. Without noise the result is exactly `L_n/L`.
pub fn recover_empirical_measure(
    y: &BasebandSignal,
    users: usize,
    modem: &Modem,
) -> Result<EmpiricalMeasure> {
    if users == 0 {
        return Err(Error::invalid("user count must be positive"));
    }
    let scores = modem.project(y)?;
    let n = scores.len() as f64;
    let shift = scores.iter().sum::<f64>() / (2.0 * n);
    let scale = 1.0 / (modem.config().carrier_amplitude() * users as f64);
    Ok(EmpiricalMeasure::new(
        scores.into_iter().map(|c| (c - shift) * scale).collect(),
    ))
}

/// Variance of each entry of the recovered measure when the channel adds
/// complex noise of variance `noise_variance` (`N₀`).
pub fn empirical_noise_variance(
    noise_variance: f64,
    amplitude: f64,
    users: usize,
    n_levels: usize,
) -> f64 {
    let l = users as f64;
    0.5 * noise_variance * (1.0 - 0.5 / n_levels as f64) / (amplitude * amplitude * l * l)
}

fn gaussian_pmf_into(theta: f64, sigma: f64, out: &mut [f64]) {
    let inv = 1.0 / (2.0 * sigma * sigma);
    for (n, p) in out.iter_mut().enumerate() {
        let d = n as f64 - theta;
        *p = (-d * d * inv).exp();
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut()
            .for_each(|p| *p = (*p / total).max(PMF_FLOOR));
    } else {
        out.iter_mut().for_each(|p| *p = PMF_FLOOR);
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
}

/// Gaussian density sampled on `0..N`, normalised, floored at
/// [`PMF_FLOOR`] and renormalised.
pub fn discretize_gaussian(theta: f64, sigma: f64, n_levels: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !theta.is_finite() {
        return Err(Error::invalid(format!("theta must be finite, got {theta}")));
    }
    if n_levels == 0 {
        return Err(Error::invalid("n_levels must be positive"));
    }
    let mut p = vec![0.0; n_levels];
    gaussian_pmf_into(theta, sigma, &mut p);
    Ok(p)
}

/// Discretised-Gaussian family with known spread, evaluated on a grid of
/// candidate means. The pmf table is shared between clones.
#[derive(Debug, Clone)]
pub struct ParameterModel {
    n_levels: usize,
    known_std: f64,
    grid: Vec<f64>,
    step: f64,
    pmfs: Arc<Vec<f64>>,
    weight_floor: f64,
}

impl ParameterModel {
    /// Grid `θ_min, θ_min + δ, …` up to and including `θ_max` (within
    /// rounding).
    pub fn new(
        n_levels: usize,
        known_std: f64,
        theta_min: f64,
        theta_max: f64,
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if !(theta_min.is_finite() && theta_max.is_finite()) || theta_max < theta_min {
            return Err(Error::invalid(format!(
                "empty parameter grid [{theta_min}, {theta_max}]"
            )));
        }
        let count = ((theta_max - theta_min) / step + 1e-9).floor() as usize + 1;
        let grid: Vec<f64> = (0..count).map(|i| theta_min + i as f64 * step).collect();
        Self::from_grid(n_levels, known_std, grid, step)
    }

    /// `Θ = [0, N-1]` at [`DEFAULT_GRID_STEP`].
    pub fn full_range(n_levels: usize, known_std: f64) -> Result<Self> {
        Self::new(
            n_levels,
            known_std,
            0.0,
            n_levels.saturating_sub(1) as f64,
            DEFAULT_GRID_STEP,
        )
    }

    fn from_grid(n_levels: usize, known_std: f64, grid: Vec<f64>, step: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::invalid("empty parameter grid"));
        }
        if n_levels < 2 {
            return Err(Error::invalid(format!(
                "n_levels must be >= 2, got {n_levels}"
            )));
        }
        if !(known_std > 0.0 && known_std.is_finite()) {
            return Err(Error::invalid(format!(
                "known std must be positive, got {known_std}"
            )));
        }
        let mut pmfs = vec![0.0; grid.len() * n_levels];
        for (theta, row) in grid.iter().zip(pmfs.chunks_exact_mut(n_levels)) {
            gaussian_pmf_into(*theta, known_std, row);
        }
        Ok(Self {
            n_levels,
            known_std,
            grid,
            step,
            pmfs: Arc::new(pmfs),
            weight_floor: 0.0,
        })
    }

    /// Adds `λ` to every pmf entry in the objective's denominator.
    ///
    /// With `λ = 0` the objective is the asymptotic chi-square ML criterion.
    /// When the channel adds per-entry noise of variance `σ_r²` to `r`, the
    /// variance of entry `n` is `p(n)/L + σ_r²`; `λ = L·σ_r²` keeps noise in
    /// the pmf tails from dominating the fit.
    pub fn with_weight_floor(mut self, weight_floor: f64) -> Result<Self> {
        if !(weight_floor >= 0.0 && weight_floor.is_finite()) {
            return Err(Error::invalid(format!(
                "weight floor must be >= 0, got {weight_floor}"
            )));
        }
        self.weight_floor = weight_floor;
        Ok(self)
    }

    /// Weight floor `L·σ_r² + PSEUDO_COUNT/L` for `users` transmitters and
    /// per-entry channel noise variance `entry_variance`.
    pub fn with_channel_noise(self, users: usize, entry_variance: f64) -> Result<Self> {
        if users == 0 {
            return Err(Error::invalid("users must be >= 1"));
        }
        let l = users as f64;
        self.with_weight_floor(l * entry_variance + PSEUDO_COUNT / l)
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn known_std(&self) -> f64 {
        self.known_std
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn weight_floor(&self) -> f64 {
        self.weight_floor
    }

    /// `p_θ` for grid point `i`.
    pub fn pmf(&self, i: usize) -> &[f64] {
        &self.pmfs[i * self.n_levels..(i + 1) * self.n_levels]
    }

    /// `Σ_n (p_θ(n) - r(n))² / (p_θ(n) + λ)` at grid point `i`.
    pub fn objective(&self, i: usize, r: &[f64]) -> f64 {
        let floor = self.weight_floor;
        self.pmf(i)
            .iter()
            .zip(r)
            .map(|(&p, &x)| {
                let d = p - x;
                d * d / (p + floor)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlEstimate {
    pub theta: f64,
    pub grid_index: usize,
    /// Objective value at each grid point, aligned with
    /// [`ParameterModel::grid`].
    pub objective: Vec<f64>,
}

impl MlEstimate {
    pub fn min_objective(&self) -> f64 {
        self.objective[self.grid_index]
    }

    /// `theta,objective` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W, grid: &[f64]) -> io::Result<()> {
        write_index_value_csv(
            out,
            "theta",
            "objective",
            grid.iter().copied().zip(self.objective.iter().copied()),
        )
    }
}

/// Exhaustive grid search for the minimiser of the chi-square objective.
/// Ties resolve to the smaller `θ`.
pub fn ml_estimate(r: &EmpiricalMeasure, model: &ParameterModel) -> Result<MlEstimate> {
    if r.len() != model.n_levels {
        return Err(Error::LengthMismatch {
            expected: model.n_levels,
            actual: r.len(),
        });
    }
    let objective: Vec<f64> = (0..model.grid.len())
        .map(|i| model.objective(i, r.values()))
        .collect();
    let mut best = 0;
    for (i, &v) in objective.iter().enumerate().skip(1) {
        if v < objective[best] {
            best = i;
        }
    }
    Ok(MlEstimate {
        theta: model.grid[best],
        grid_index: best,
        objective,
    })
}

/// `KL(p ‖ q̃)` in nats, where `q̃` is `q` clipped at [`PMF_FLOOR`] and
/// renormalised.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::invalid("empty distribution"));
    }
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("p has negative or non-finite entries"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("p sums to {total}, not 1")));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("q has non-finite entries"));
    }
    let clipped: Vec<f64> = q.iter().map(|&v| v.max(PMF_FLOOR)).collect();
    let norm: f64 = clipped.iter().sum();
    Ok(p.iter()
        .zip(&clipped)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / (qi / norm)).ln())
        .sum::<f64>()
        .max(0.0))
}
