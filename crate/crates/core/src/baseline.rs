//! Orthogonal TDMA benchmark: one slot per user, per-slot detection, and the
//! sample mean of the detected symbols.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, ChannelRealization};
use crate::dctfm::{Measurement, Modem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Tbma,
    Tdma,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Tbma => "tbma",
            Scheme::Tdma => "tdma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tbma" => Ok(Scheme::Tbma),
            "tdma" => Ok(Scheme::Tdma),
            _ => Err(Error::invalid(format!(
                "unknown scheme `{s}` (expected tbma or tdma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdmaRound {
    pub slot_results: Vec<Measurement>,
    pub slots_used: usize,
    /// Sample mean of the detected symbols.
    pub estimate: f64,
}

/// Sends each measurement in its own slot through an independent noise
/// realisation of `ch` and averages the detections.
pub fn run_tdma_round<R: Rng + ?Sized>(
    measurements: &[Measurement],
    ch: &ChannelRealization,
    modem: &Modem,
    rng: &mut R,
) -> Result<TdmaRound> {
    if measurements.is_empty() {
        return Err(Error::invalid("need at least one user"));
    }
    let slot_results = measurements
        .iter()
        .map(|&m| {
            let y = apply_channel(&modem.transmit(m)?, ch, rng);
            Ok(modem.demodulate(&y)?.symbol)
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate =
        slot_results.iter().map(|m| m.index() as f64).sum::<f64>() / slot_results.len() as f64;
    Ok(TdmaRound {
        slots_used: slot_results.len(),
        slot_results,
        estimate,
    })
}

/// Channel uses needed to collect one round from `users` transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub time_slots: usize,
    /// Orthogonal resources (slots or tones) that may carry energy.
    pub occupied_resources: usize,
}

pub fn resource_report(scheme: Scheme, users: usize, n_levels: usize) -> Result<ResourceReport> {
    if users == 0 {
        return Err(Error::invalid("need at least one user"));
    }
    Ok(match scheme {
        Scheme::Tdma => ResourceReport {
            time_slots: users,
            occupied_resources: users,
        },
        Scheme::Tbma => ResourceReport {
            time_slots: 1,
            occupied_resources: users.min(n_levels),
        },
    })
}

/// Number of distinct tones actually excited by a TBMA round.
pub fn distinct_resources(measurements: &[Measurement]) -> usize {
    let mut idx: Vec<usize> = measurements.iter().map(|m| m.index()).collect();
    idx.sort_unstable();
    idx.dedup();
    idx.len()
}
