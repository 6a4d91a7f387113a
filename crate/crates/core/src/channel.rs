//! Satellite link budget and the AWGN channel.
//!
//! Links are line-of-sight only: free-space path loss plus a flat extra loss
//! for atmospheric absorption, polarisation and pointing. Channel phase is
//! assumed perfectly synchronised, so the gain `h` is a non-negative real.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dctfm::BasebandSignal;
use crate::error::{Error, Result};
use crate::Complex;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const REFERENCE_TEMPERATURE_K: f64 = 290.0;

pub const LEO_ALTITUDE_M: f64 = 600e3;
pub const GEO_ALTITUDE_M: f64 = 35_786e3;
pub const CARRIER_FREQUENCY_HZ: f64 = 915e6;
pub const CHANNEL_BANDWIDTH_HZ: f64 = 500e3;
pub const SATELLITE_ARRAY_GAIN_DB: f64 = 15.0;
pub const EXTRA_LOSSES_DB: f64 = 3.0;
pub const DEFAULT_ISL_LEO_DISTANCE_M: f64 = 1_000e3;
pub const DEFAULT_TX_POWER_DBM: f64 = 14.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Free-space path loss `20·log10(4πdf/c)` in dB.
pub fn free_space_path_loss(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(Error::invalid(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(Error::invalid(format!(
            "frequency must be positive, got {frequency_hz}"
        )));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance_m * frequency_hz / SPEED_OF_LIGHT).log10())
}

/// Thermal noise power `k_B·T₀·B` raised by a noise figure, in watts.
pub fn thermal_noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    BOLTZMANN * REFERENCE_TEMPERATURE_K * bandwidth_hz * db_to_linear(noise_figure_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_w: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub carrier_frequency_hz: f64,
    pub distance_m: f64,
    pub extra_losses_db: f64,
    pub noise_power_w: f64,
}

impl LinkBudget {
    fn validate(&self) -> Result<()> {
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(Error::invalid(format!(
                "tx power must be positive, got {}",
                self.tx_power_w
            )));
        }
        if !(self.noise_power_w > 0.0 && self.noise_power_w.is_finite()) {
            return Err(Error::invalid(format!(
                "noise power must be positive, got {}",
                self.noise_power_w
            )));
        }
        Ok(())
    }

    pub fn path_loss_db(&self) -> Result<f64> {
        free_space_path_loss(self.distance_m, self.carrier_frequency_hz)
    }

    /// Path loss plus extra losses, in dB.
    pub fn total_loss_db(&self) -> Result<f64> {
        Ok(self.path_loss_db()? + self.extra_losses_db)
    }

    /// Channel amplitude and noise implied by the budget:
    /// `h² = G_tx·G_rx/(a·L_extra)`, noise variance `σ²`.
    pub fn realization(&self) -> Result<ChannelRealization> {
        self.validate()?;
        let gain_db = self.tx_gain_db + self.rx_gain_db - self.total_loss_db()?;
        ChannelRealization::new(db_to_linear(gain_db).sqrt(), self.noise_power_w)
    }
}

/// Received SNR `γ = P_tx·G_tx·G_rx / (a·σ²)` in dB.
pub fn link_snr(lb: &LinkBudget) -> Result<f64> {
    lb.validate()?;
    Ok(linear_to_db(lb.tx_power_w) + lb.tx_gain_db + lb.rx_gain_db
        - lb.total_loss_db()?
        - linear_to_db(lb.noise_power_w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Ul,
    Dl,
    IslLeo,
    IslGeo,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Ul,
        ScenarioKind::Dl,
        ScenarioKind::IslLeo,
        ScenarioKind::IslGeo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Ul => "ul",
            ScenarioKind::Dl => "dl",
            ScenarioKind::IslLeo => "isl-leo",
            ScenarioKind::IslGeo => "isl-geo",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown scenario `{s}` (expected one of: ul, dl, isl-leo, isl-geo)"
                ))
            })
    }
}

/// Link parameters not fixed by the scenario presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetOptions {
    pub tx_power_w: f64,
    pub noise_figure_db: f64,
    pub isl_leo_distance_m: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            tx_power_w: dbm_to_watts(DEFAULT_TX_POWER_DBM),
            noise_figure_db: 0.0,
            isl_leo_distance_m: DEFAULT_ISL_LEO_DISTANCE_M,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioPreset {
    pub kind: ScenarioKind,
    pub bandwidth_hz: f64,
    pub budget: LinkBudget,
}

impl ScenarioPreset {
    pub fn new(kind: ScenarioKind, opts: &PresetOptions) -> Self {
        let array = SATELLITE_ARRAY_GAIN_DB;
        // Only satellites carry the array; ground terminals are 0 dBi.
        let (tx_gain_db, rx_gain_db, distance_m) = match kind {
            ScenarioKind::Ul => (0.0, array, LEO_ALTITUDE_M),
            ScenarioKind::Dl => (array, 0.0, LEO_ALTITUDE_M),
            ScenarioKind::IslLeo => (array, array, opts.isl_leo_distance_m),
            ScenarioKind::IslGeo => (array, array, GEO_ALTITUDE_M - LEO_ALTITUDE_M),
        };
        Self {
            kind,
            bandwidth_hz: CHANNEL_BANDWIDTH_HZ,
            budget: LinkBudget {
                tx_power_w: opts.tx_power_w,
                tx_gain_db,
                rx_gain_db,
                carrier_frequency_hz: CARRIER_FREQUENCY_HZ,
                distance_m,
                extra_losses_db: EXTRA_LOSSES_DB,
                noise_power_w: thermal_noise_power(CHANNEL_BANDWIDTH_HZ, opts.noise_figure_db),
            },
        }
    }

    pub fn link_snr_db(&self) -> Result<f64> {
        link_snr(&self.budget)
    }

    /// Per-symbol SNR `A²|h|²/N₀` of an `n_levels`-sample block, given that
    /// the per-sample transmit power is `A²/N`.
    pub fn symbol_snr_db(&self, n_levels: usize) -> Result<f64> {
        Ok(self.link_snr_db()? + linear_to_db(n_levels as f64))
    }
}

/// Preset with default options.
pub fn scenario_preset(kind: ScenarioKind) -> ScenarioPreset {
    ScenarioPreset::new(kind, &PresetOptions::default())
}

/// Large-scale gain and complex noise variance for one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    /// Amplitude gain `h >= 0`.
    pub gain: f64,
    /// Total complex noise variance `E|w|² = N₀`; each of I and Q carries
    /// half of it.
    pub noise_variance: f64,
}

impl ChannelRealization {
    pub fn new(gain: f64, noise_variance: f64) -> Result<Self> {
        if !(gain >= 0.0 && gain.is_finite()) {
            return Err(Error::invalid(format!(
                "channel gain must be >= 0, got {gain}"
            )));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::invalid(format!(
                "noise variance must be >= 0, got {noise_variance}"
            )));
        }
        Ok(Self {
            gain,
            noise_variance,
        })
    }

    pub fn ideal() -> Self {
        Self {
            gain: 1.0,
            noise_variance: 0.0,
        }
    }

    /// Channel with gain `h` whose per-symbol SNR `A²h²/N₀` equals
    /// `snr_linear`. An infinite SNR gives a noiseless channel.
    pub fn from_symbol_snr(snr_linear: f64, amplitude: f64, gain: f64) -> Result<Self> {
        if snr_linear.is_nan() || snr_linear <= 0.0 {
            return Err(Error::invalid(format!(
                "snr must be positive, got {snr_linear}"
            )));
        }
        let noise = if snr_linear.is_infinite() {
            0.0
        } else {
            amplitude * amplitude * gain * gain / snr_linear
        };
        Self::new(gain, noise)
    }

    pub fn from_symbol_snr_db(snr_db: f64, amplitude: f64, gain: f64) -> Result<Self> {
        Self::from_symbol_snr(db_to_linear(snr_db), amplitude, gain)
    }
}

/// Draws one circularly-symmetric complex Gaussian sample with `E|w|² = var`.
pub(crate) fn complex_noise<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(sd * re, sd * im)
}

/// `y[n] = h·z[n] + w[n]`.
pub fn apply_channel<R: Rng + ?Sized>(
    z: &BasebandSignal,
    ch: &ChannelRealization,
    rng: &mut R,
) -> BasebandSignal {
    let mut out = z.scaled(ch.gain);
    add_noise(&mut out, ch.noise_variance, rng);
    out
}

pub(crate) fn add_noise<R: Rng + ?Sized>(z: &mut BasebandSignal, variance: f64, rng: &mut R) {
    if variance > 0.0 {
        for s in z.samples.iter_mut() {
            *s += complex_noise(rng, variance);
        }
    }
}
