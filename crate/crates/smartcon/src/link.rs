//! NB-IoT link-configuration space and the parametric channel model.
//!
//! An NB-IoT transmission is configured by an MCS level (0..=12), a
//! repetition count drawn from the per-direction repetition set, and a
//! number of resource units (PRBs). This module defines those types, the
//! normalization of each quantity to [0, 1] used by the learning side, and
//! a logistic success-probability / transport-block model standing in for
//! the 3GPP tables and PHY-layer simulation.

use crate::error::{Error, Result};

pub const MCS_MIN: u8 = 0;
pub const MCS_MAX: u8 = 12;
pub const MCS_LEVELS: usize = 13;

const UL_REPETITIONS: [u32; 8] = [1, 2, 4, 8, 16, 32, 64, 128];
const DL_REPETITIONS: [u32; 12] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048];

/// Transmission direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Uplink,
    Downlink,
}

impl Direction {
    pub fn letter(self) -> char {
        match self {
            Direction::Uplink => 'U',
            Direction::Downlink => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'U' => Some(Direction::Uplink),
            'D' => Some(Direction::Downlink),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Direction::Uplink => "uplink",
            Direction::Downlink => "downlink",
        }
    }
}

/// The ordered set of legal repetition counts for one direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionSet {
    pub direction: Direction,
    values: Vec<u32>,
}

impl RepetitionSet {
    /// Standard uplink set {1, 2, ..., 128}.
    pub fn uplink() -> Self {
        RepetitionSet {
            direction: Direction::Uplink,
            values: UL_REPETITIONS.to_vec(),
        }
    }

    /// Standard downlink set {1, 2, ..., 2048}.
    pub fn downlink() -> Self {
        RepetitionSet {
            direction: Direction::Downlink,
            values: DL_REPETITIONS.to_vec(),
        }
    }

    pub fn standard(direction: Direction) -> Self {
        match direction {
            Direction::Uplink => Self::uplink(),
            Direction::Downlink => Self::downlink(),
        }
    }

    /// A custom set; values must be strictly increasing powers of two.
    pub fn custom(direction: Direction, values: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config {
                key: format!("{}_repetitions", direction.name()),
                reason: "repetition set is empty".into(),
            });
        }
        for w in values.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config {
                    key: format!("{}_repetitions", direction.name()),
                    reason: "repetition set must be strictly increasing".into(),
                });
            }
        }
        if let Some(&v) = values.iter().find(|v| !v.is_power_of_two()) {
            return Err(Error::Config {
                key: format!("{}_repetitions", direction.name()),
                reason: format!("{v} is not a power of two"),
            });
        }
        Ok(RepetitionSet { direction, values })
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> u32 {
        *self.values.last().expect("repetition set is never empty")
    }

    pub fn contains(&self, rep: u32) -> bool {
        self.values.binary_search(&rep).is_ok()
    }

    pub fn index_of(&self, rep: u32) -> Option<usize> {
        self.values.binary_search(&rep).ok()
    }
}

/// One MCS-Repetition-PRB configuration: a single arm of the bandit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkConfig {
    pub mcs: u8,
    pub repetitions: u32,
    pub prb_count: u32,
}

impl LinkConfig {
    pub fn new(mcs: u8, repetitions: u32, prb_count: u32) -> Self {
        LinkConfig {
            mcs,
            repetitions,
            prb_count,
        }
    }

    /// Check legality against a repetition set and the PRB maximum.
    pub fn validate(&self, set: &RepetitionSet, max_prb: u32) -> Result<()> {
        if self.mcs > MCS_MAX {
            return Err(Error::InvalidMcs(i64::from(self.mcs)));
        }
        if !set.contains(self.repetitions) {
            return Err(Error::InvalidRepetition(
                self.repetitions,
                set.direction.name(),
            ));
        }
        if self.prb_count < 1 || self.prb_count > max_prb {
            return Err(Error::InvalidPrb(self.prb_count, max_prb));
        }
        Ok(())
    }
}

/// Parametric channel and transport model.
///
/// The decode threshold for MCS level m is `t0_db + slope_db_per_mcs * m`;
/// delivery succeeds with logistic probability around that threshold.
/// `tbs_bits[m]` is the transport capacity in bits per PRB per subframe.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModelParams {
    pub t0_db: f64,
    pub slope_db_per_mcs: f64,
    pub steepness: f64,
    pub tbs_bits: [u32; MCS_LEVELS],
}

impl Default for ChannelModelParams {
    fn default() -> Self {
        let mut tbs_bits = [0u32; MCS_LEVELS];
        for (m, slot) in tbs_bits.iter_mut().enumerate() {
            *slot = 16 * (m as u32 + 1);
        }
        ChannelModelParams {
            t0_db: -2.0,
            slope_db_per_mcs: 1.8,
            steepness: 1.0,
            tbs_bits,
        }
    }
}

impl ChannelModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.steepness > 0.0) {
            return Err(Error::Config {
                key: "channel.steepness".into(),
                reason: format!("must be > 0, got {}", self.steepness),
            });
        }
        for w in self.tbs_bits.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config {
                    key: "channel.tbs_bits".into(),
                    reason: "must be strictly increasing in MCS".into(),
                });
            }
        }
        Ok(())
    }

    /// SNR threshold T(mcs) in dB.
    pub fn threshold_db(&self, mcs: u8) -> f64 {
        self.t0_db + self.slope_db_per_mcs * f64::from(mcs)
    }

    /// Highest MCS whose threshold is at or below `sinr_db`, floored at 0.
    pub fn best_feasible_mcs(&self, sinr_db: f64) -> u8 {
        (0..=MCS_MAX)
            .rev()
            .find(|&m| self.threshold_db(m) <= sinr_db)
            .unwrap_or(MCS_MIN)
    }
}

/// Map an MCS level onto [0, 1].
pub fn normalize_mcs(mcs: u8) -> Result<f64> {
    if mcs > MCS_MAX {
        return Err(Error::InvalidMcs(i64::from(mcs)));
    }
    Ok(f64::from(mcs) / f64::from(MCS_MAX))
}

/// Nearest legal MCS level for a normalized value.
pub fn denormalize_mcs(norm: f64) -> u8 {
    let level = (norm * f64::from(MCS_MAX)).round();
    level.clamp(0.0, f64::from(MCS_MAX)) as u8
}

/// Map a repetition count onto [0, 1] by its index in the set.
pub fn normalize_repetition(rep: u32, set: &RepetitionSet) -> Result<f64> {
    let idx = set
        .index_of(rep)
        .ok_or(Error::InvalidRepetition(rep, set.direction.name()))?;
    if set.len() == 1 {
        return Ok(0.0);
    }
    Ok(idx as f64 / (set.len() - 1) as f64)
}

/// Nearest repetition count for a normalized value; ties toward the lower
/// index.
pub fn denormalize_repetition(norm: f64, set: &RepetitionSet) -> u32 {
    if set.len() == 1 {
        return set.values[0];
    }
    let scale = (set.len() - 1) as f64;
    let mut best = 0usize;
    let mut best_dist = f64::INFINITY;
    for i in 0..set.len() {
        let dist = (norm - i as f64 / scale).abs();
        if dist < best_dist {
            best_dist = dist;
            best = i;
        }
    }
    set.values[best]
}

/// Map a PRB count in 1..=u onto [0, 1] as (p - 1) / (u - 1).
pub fn normalize_prb(prb: u32, max_prb: u32) -> Result<f64> {
    if prb < 1 || prb > max_prb {
        return Err(Error::InvalidPrb(prb, max_prb));
    }
    if max_prb == 1 {
        return Ok(0.0);
    }
    Ok(f64::from(prb - 1) / f64::from(max_prb - 1))
}

/// Nearest PRB count for a normalized value.
pub fn denormalize_prb(norm: f64, max_prb: u32) -> u32 {
    if max_prb == 1 {
        return 1;
    }
    let p = (norm * f64::from(max_prb - 1)).round() + 1.0;
    (p.clamp(1.0, f64::from(max_prb))) as u32
}

/// Effective SINR after ideal combining of `repetitions` copies.
pub fn effective_sinr(sinr_db: f64, repetitions: u32) -> f64 {
    debug_assert!(repetitions >= 1);
    sinr_db + 10.0 * f64::from(repetitions).log10()
}

/// Per-packet delivery probability at the given effective SINR and MCS.
pub fn success_probability(sinr_eff_db: f64, mcs: u8, params: &ChannelModelParams) -> f64 {
    let margin = sinr_eff_db - params.threshold_db(mcs);
    1.0 / (1.0 + (-params.steepness * margin).exp())
}

/// Subframes consumed to carry `packet_bits` under `cfg`.
pub fn subframes_needed(packet_bits: u32, cfg: &LinkConfig, params: &ChannelModelParams) -> u64 {
    debug_assert!(packet_bits > 0);
    let per_subframe = u64::from(params.tbs_bits[cfg.mcs as usize]) * u64::from(cfg.prb_count);
    u64::from(packet_bits).div_ceil(per_subframe) * u64::from(cfg.repetitions)
}
