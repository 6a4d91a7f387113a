//! Seeded Monte Carlo sweeps comparing TBMA against TDMA.
//!
//! Every `(point, trial)` pair owns a random stream derived from the master
//! seed and the point's coordinates, so records are reproducible regardless
//! of execution order, worker count, or which other points are in the grid.
//! Both schemes at the same `(L, SNR, trial)` see the same `θ` and the same
//! sensor measurements; only the channel noise differs.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{run_tdma_round, Scheme};
use crate::channel::{
    db_to_linear, dbm_to_watts, ChannelRealization, PresetOptions, ScenarioKind, ScenarioPreset,
};
use crate::dctfm::{Modem, ModulationConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tbma::{
    discretize_gaussian, empirical_noise_variance, kl_divergence, ml_estimate,
    recover_empirical_measure, sample_measurements, superpose, EmpiricalMeasure, ParameterModel,
};

pub const CSV_HEADER: &str = "scheme,L,snr_db,theta_true,theta_hat,sq_err,kl,seed,trial";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    /// Per-user symbol SNR grid `A²|h|²/N₀` in dB; `inf` is a noiseless point.
    pub snr_db: Vec<f64>,
    /// Scenarios whose working symbol SNR (at `marker_ptx_dbm`) is appended
    /// to the SNR grid.
    pub scenarios: Vec<ScenarioKind>,
    pub users: Vec<usize>,
    pub n_levels: usize,
    /// Known observation spread `σ_X` in quantisation bins.
    pub sigma_x: f64,
    /// Lower bound of the uniform `θ` draw; defaults to `N/4`.
    pub theta_min: Option<f64>,
    /// Upper bound of the uniform `θ` draw; defaults to `3N/4`.
    pub theta_max: Option<f64>,
    /// Fixes `θ` for every trial instead of drawing it.
    pub theta_fixed: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub spreading_rate: f64,
    pub carrier_amplitude: f64,
    pub grid_step: f64,
    /// Adds the channel-noise weight floor to the TBMA estimator objective.
    pub noise_aware_weights: bool,
    pub marker_ptx_dbm: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Tbma, Scheme::Tdma],
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            scenarios: Vec::new(),
            users: vec![10, 100, 1000],
            n_levels: 256,
            sigma_x: 16.0,
            theta_min: None,
            theta_max: None,
            theta_fixed: None,
            trials: 200,
            seed: 1,
            spreading_rate: 0.5,
            carrier_amplitude: 1.0,
            grid_step: 0.1,
            noise_aware_weights: true,
            marker_ptx_dbm: 14.0,
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses a config file and applies `key=value` overrides on top.
    /// Values use TOML syntax; anything that does not parse is taken as a
    /// bare string.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let known = toml::Table::try_from(ExperimentConfig::default())
            .map_err(|e| Error::config("<defaults>", e.to_string()))?;
        for (key, raw) in overrides {
            let is_option = matches!(key.as_str(), "theta_min" | "theta_max" | "theta_fixed");
            if !known.contains_key(key) && !is_option {
                return Err(Error::config(key, "unknown key"));
            }
            table.insert(key.clone(), parse_override_value(raw));
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn theta_range(&self) -> (f64, f64) {
        let n = self.n_levels as f64;
        (
            self.theta_min.unwrap_or(n / 4.0),
            self.theta_max.unwrap_or(3.0 * n / 4.0),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "grid must be nonempty"));
        }
        if self.users.is_empty() {
            return Err(Error::config("users", "grid must be nonempty"));
        }
        if self.users.contains(&0) {
            return Err(Error::config("users", "user counts must be >= 1"));
        }
        if self.snr_db.is_empty() && self.scenarios.is_empty() {
            return Err(Error::config("snr_db", "grid must be nonempty"));
        }
        if self
            .snr_db
            .iter()
            .any(|s| s.is_nan() || *s == f64::NEG_INFINITY)
        {
            return Err(Error::config("snr_db", "values must be finite or +inf"));
        }
        if self.n_levels < 2 {
            return Err(Error::config("n_levels", "must be >= 2"));
        }
        if !(self.sigma_x > 0.0 && self.sigma_x.is_finite()) {
            return Err(Error::config("sigma_x", "must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::config("grid_step", "must be positive"));
        }
        let top = (self.n_levels - 1) as f64;
        let (lo, hi) = self.theta_range();
        if !(0.0 <= lo && lo <= hi && hi <= top) {
            return Err(Error::config(
                "theta_min",
                format!("theta range [{lo}, {hi}] must lie within [0, {top}]"),
            ));
        }
        if let Some(t) = self.theta_fixed {
            if !(0.0..=top).contains(&t) {
                return Err(Error::config(
                    "theta_fixed",
                    format!("{t} outside [0, {top}]"),
                ));
            }
        }
        ModulationConfig::new(
            self.n_levels,
            self.carrier_amplitude,
            1.0,
            self.spreading_rate,
        )
        .map_err(|e| Error::config("carrier_amplitude", e.to_string()))?;
        Ok(())
    }

    /// Working-SNR markers for every scenario at `marker_ptx_dbm`.
    pub fn markers(&self) -> Result<Vec<Marker>> {
        let opts = PresetOptions {
            tx_power_w: dbm_to_watts(self.marker_ptx_dbm),
            ..PresetOptions::default()
        };
        ScenarioKind::ALL
            .into_iter()
            .map(|kind| {
                let p = ScenarioPreset::new(kind, &opts);
                Ok(Marker {
                    scenario: kind,
                    link_snr_db: p.link_snr_db()?,
                    symbol_snr_db: p.symbol_snr_db(self.n_levels)?,
                })
            })
            .collect()
    }

    /// Explicit SNR grid followed by the requested scenario markers.
    pub fn snr_grid(&self) -> Result<Vec<f64>> {
        let mut grid = self.snr_db.clone();
        if !self.scenarios.is_empty() {
            let markers = self.markers()?;
            for kind in &self.scenarios {
                let m = markers
                    .iter()
                    .find(|m| m.scenario == *kind)
                    .expect("all kinds present");
                grid.push(m.symbol_snr_db);
            }
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Marker {
    pub scenario: ScenarioKind,
    pub link_snr_db: f64,
    pub symbol_snr_db: f64,
}

/// One cell of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub scheme: Scheme,
    pub users: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub scheme: Scheme,
    pub users: usize,
    pub snr_db: f64,
    pub theta_true: f64,
    pub theta_hat: f64,
    pub squared_error: f64,
    pub kl: f64,
    pub seed: u64,
    pub trial: usize,
}

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.users,
            self.snr_db,
            self.theta_true,
            self.theta_hat,
            self.squared_error,
            self.kl,
            self.seed,
            self.trial
        )
    }
}

/// Per-point statistics. `nmse = mse / σ_X²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub scheme: Scheme,
    pub users: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub mse: f64,
    pub mse_std_error: f64,
    pub nmse: f64,
    pub nmse_db: f64,
    pub mean_kl: f64,
    pub kl_std_error: f64,
}

fn mean_and_std_error(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub markers: Vec<Marker>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_records_csv(&self.records, out)
    }

    pub fn aggregate(&self, scheme: Scheme, users: usize, snr_db: f64) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| {
            a.scheme == scheme && a.users == users && a.snr_db.to_bits() == snr_db.to_bits()
        })
    }
}

pub fn write_records_csv<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// A validated configuration with its modem and estimator tables built.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    modem: Modem,
    model: ParameterModel,
    points: Vec<Point>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let modem_cfg = ModulationConfig::with_levels(cfg.n_levels)?
            .with_amplitude(cfg.carrier_amplitude)?
            .with_spreading_rate(cfg.spreading_rate)?;
        let model = ParameterModel::new(
            cfg.n_levels,
            cfg.sigma_x,
            0.0,
            (cfg.n_levels - 1) as f64,
            cfg.grid_step,
        )?;
        let snr_grid = cfg.snr_grid()?;
        let mut points = Vec::new();
        for &scheme in &cfg.schemes {
            for &users in &cfg.users {
                for &snr_db in &snr_grid {
                    points.push(Point {
                        scheme,
                        users,
                        snr_db,
                    });
                }
            }
        }
        Ok(Self {
            modem: Modem::new(modem_cfg),
            model,
            points,
            cfg,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Seed of the shared observation stream for `(L, SNR, trial)`.
    pub fn trial_seed(&self, point: &Point, trial: usize) -> u64 {
        derive_seed(&[
            self.cfg.seed,
            point.users as u64,
            point.snr_db.to_bits(),
            trial as u64,
        ])
    }

    pub fn run_trial(&self, point: &Point, trial: usize) -> Result<SweepRecord> {
        let cfg = &self.cfg;
        let n = cfg.n_levels;
        let seed = self.trial_seed(point, trial);
        let mut obs_rng = rng_from_seed(seed);
        let (lo, hi) = cfg.theta_range();
        let theta_true = match cfg.theta_fixed {
            Some(t) => t,
            None if hi > lo => obs_rng.random_range(lo..=hi),
            None => lo,
        };
        let measurements =
            sample_measurements(theta_true, cfg.sigma_x, point.users, n, &mut obs_rng)?;
        let truth = discretize_gaussian(theta_true, cfg.sigma_x, n)?;

        let amp = cfg.carrier_amplitude;
        let channel = ChannelRealization::from_symbol_snr(db_to_linear(point.snr_db), amp, 1.0)?;
        let mut ch_rng = rng_from_seed(derive_seed(&[seed, point.scheme as u64]));

        let (theta_hat, received) = match point.scheme {
            Scheme::Tbma => {
                let y = superpose(
                    &measurements,
                    None,
                    &self.modem,
                    channel.noise_variance,
                    &mut ch_rng,
                )?;
                let r = recover_empirical_measure(&y, point.users, &self.modem)?;
                let est = if cfg.noise_aware_weights {
                    let entry_var =
                        empirical_noise_variance(channel.noise_variance, amp, point.users, n);
                    let model = self
                        .model
                        .clone()
                        .with_channel_noise(point.users, entry_var)?;
                    ml_estimate(&r, &model)?
                } else {
                    ml_estimate(&r, &self.model)?
                };
                (est.theta, r)
            }
            Scheme::Tdma => {
                let round = run_tdma_round(&measurements, &channel, &self.modem, &mut ch_rng)?;
                let r = EmpiricalMeasure::from_measurements(&round.slot_results, n)?;
                (round.estimate, r)
            }
        };
        Ok(SweepRecord {
            scheme: point.scheme,
            users: point.users,
            snr_db: point.snr_db,
            theta_true,
            theta_hat,
            squared_error: (theta_hat - theta_true).powi(2),
            kl: kl_divergence(&truth, received.values())?,
            seed,
            trial,
        })
    }

    fn aggregate(&self, records: &[SweepRecord]) -> Vec<Aggregate> {
        let var = self.cfg.sigma_x * self.cfg.sigma_x;
        records
            .chunks(self.cfg.trials)
            .map(|chunk| {
                let (mse, mse_se) = mean_and_std_error(chunk.iter().map(|r| r.squared_error));
                let (kl, kl_se) = mean_and_std_error(chunk.iter().map(|r| r.kl));
                let nmse = mse / var;
                Aggregate {
                    scheme: chunk[0].scheme,
                    users: chunk[0].users,
                    snr_db: chunk[0].snr_db,
                    trials: chunk.len(),
                    mse,
                    mse_std_error: mse_se,
                    nmse,
                    nmse_db: 10.0 * nmse.log10(),
                    mean_kl: kl,
                    kl_std_error: kl_se,
                }
            })
            .collect()
    }

    /// Runs every `(point, trial)` pair. `workers = None` uses rayon's global
    /// pool. Records come back ordered by point, then trial.
    pub fn sweep(&self, workers: Option<usize>) -> Result<SweepOutput> {
        let trials = self.cfg.trials;
        let work = || -> Result<Vec<SweepRecord>> {
            (0..self.points.len() * trials)
                .into_par_iter()
                .map(|i| self.run_trial(&self.points[i / trials], i % trials))
                .collect()
        };
        let records = match workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?
                .install(work)?,
            None => work()?,
        };
        let aggregates = self.aggregate(&records);
        Ok(SweepOutput {
            records,
            aggregates,
        })
    }

    pub fn summary(&self, output: &SweepOutput) -> Result<Summary> {
        Ok(Summary {
            config: self.cfg.clone(),
            markers: self.cfg.markers()?,
            aggregates: output.aggregates.clone(),
        })
    }
}

/// Builds the experiment and runs a single trial.
pub fn run_trial(cfg: &ExperimentConfig, point: &Point, trial: usize) -> Result<SweepRecord> {
    Experiment::new(cfg.clone())?.run_trial(point, trial)
}

/// Builds the experiment and runs the full grid on the global pool.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    Experiment::new(cfg.clone())?.sweep(None)
}
