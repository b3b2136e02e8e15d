//! Flat key = value configuration file driving the whole pipeline.
//!
//! Unknown keys and out-of-range values are rejected with the offending key
//! named. Missing keys fall back to the defaults below.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gan::GanConfig;
use crate::link::{ChannelModelParams, Direction, RepetitionSet, MCS_LEVELS};
use crate::mab::MabParams;
use crate::sim::SimConfig;

/// Link-space settings: PRB ceiling and the two repetition sets.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub max_prb: u32,
    pub ul_repetitions: RepetitionSet,
    pub dl_repetitions: RepetitionSet,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            max_prb: 6,
            ul_repetitions: RepetitionSet::uplink(),
            dl_repetitions: RepetitionSet::downlink(),
        }
    }
}

impl LinkParams {
    pub fn set(&self, direction: Direction) -> &RepetitionSet {
        match direction {
            Direction::Uplink => &self.ul_repetitions,
            Direction::Downlink => &self.dl_repetitions,
        }
    }
}

/// Retraining trigger settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrainParams {
    pub rho_ms: u64,
    pub correlation_threshold: f64,
    pub record_threshold: usize,
}

impl Default for RetrainParams {
    fn default() -> Self {
        RetrainParams {
            rho_ms: 60_000,
            correlation_threshold: 0.3,
            record_threshold: 100_000,
        }
    }
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub link: LinkParams,
    pub channel: ChannelModelParams,
    pub mab: MabParams,
    /// Idle subframes are recorded once per this many (alpha = 0 rows).
    pub idle_sample_rate: u64,
    pub gan: GanConfig,
    pub sim: SimConfig,
    pub threshold_margin_db: f64,
    pub retrain: RetrainParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            link: LinkParams::default(),
            channel: ChannelModelParams::default(),
            mab: MabParams::default(),
            idle_sample_rate: 10,
            gan: GanConfig::default(),
            sim: SimConfig::default(),
            threshold_margin_db: 3.0,
            retrain: RetrainParams::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.link.max_prb < 1 {
            return Err(Error::Config {
                key: "link.max_prb".into(),
                reason: "must be >= 1".into(),
            });
        }
        self.channel.validate()?;
        self.mab.validate()?;
        if self.idle_sample_rate == 0 {
            return Err(Error::Config {
                key: "mab.idle_sample_rate".into(),
                reason: "must be >= 1".into(),
            });
        }
        self.gan.validate()?;
        self.sim.validate()?;
        if !(self.threshold_margin_db >= 0.0) {
            return Err(Error::Config {
                key: "threshold.margin_db".into(),
                reason: "must be >= 0".into(),
            });
        }
        if self.retrain.rho_ms == 0 {
            return Err(Error::Config {
                key: "retrain.rho_ms".into(),
                reason: "must be >= 1".into(),
            });
        }
        if !self.retrain.correlation_threshold.is_finite() {
            return Err(Error::Config {
                key: "retrain.correlation_threshold".into(),
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

fn bad(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| bad(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(bad(key, format!("expected true/false, got `{value}`"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<u32>> {
    value
        .split(',')
        .map(|v| parse_num::<u32>(key, v.trim()))
        .collect()
}

fn apply(cfg: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "link.max_prb" => cfg.link.max_prb = parse_num(key, value)?,
        "link.ul_repetitions" => {
            cfg.link.ul_repetitions =
                RepetitionSet::custom(Direction::Uplink, parse_list(key, value)?)?
        }
        "link.dl_repetitions" => {
            cfg.link.dl_repetitions =
                RepetitionSet::custom(Direction::Downlink, parse_list(key, value)?)?
        }
        "channel.t0_db" => cfg.channel.t0_db = parse_num(key, value)?,
        "channel.slope_db_per_mcs" => cfg.channel.slope_db_per_mcs = parse_num(key, value)?,
        "channel.steepness" => cfg.channel.steepness = parse_num(key, value)?,
        "channel.tbs_bits" => {
            let list = parse_list(key, value)?;
            if list.len() != MCS_LEVELS {
                return Err(bad(key, format!("expected {MCS_LEVELS} entries")));
            }
            cfg.channel.tbs_bits.copy_from_slice(&list);
        }
        "mab.c" => cfg.mab.c = parse_num(key, value)?,
        "mab.d" => cfg.mab.d = parse_num(key, value)?,
        "mab.delta_db" => cfg.mab.delta_db = parse_num(key, value)?,
        "mab.t_d_ms" => cfg.mab.t_d_ms = parse_num(key, value)?,
        "mab.plr_floor" => cfg.mab.plr_floor = parse_num(key, value)?,
        "mab.table_cap" => cfg.mab.table_cap = parse_num(key, value)?,
        "mab.idle_sample_rate" => cfg.idle_sample_rate = parse_num(key, value)?,
        "gan.hidden" => cfg.gan.hidden = parse_num(key, value)?,
        "gan.mu" => cfg.gan.mu = parse_num(key, value)?,
        "gan.beta" => cfg.gan.beta = parse_num(key, value)?,
        "gan.learning_rate" => cfg.gan.learning_rate = parse_num(key, value)?,
        "gan.max_seq_len" => cfg.gan.max_seq_len = parse_num(key, value)?,
        "gan.ogata_window_s" => cfg.gan.ogata_window_s = parse_num(key, value)?,
        "sim.n_ues" => cfg.sim.n_ues = parse_num(key, value)?,
        "sim.duration_ms" => cfg.sim.duration_ms = parse_num(key, value)?,
        "sim.sinr_low_db" => cfg.sim.sinr_low_db = parse_num(key, value)?,
        "sim.sinr_high_db" => cfg.sim.sinr_high_db = parse_num(key, value)?,
        "sim.packet_bits" => cfg.sim.packet_bits = parse_num(key, value)?,
        "sim.arrival_rate_per_ue" => cfg.sim.arrival_rate_per_ue = parse_num(key, value)?,
        "sim.ul_fraction" => cfg.sim.ul_fraction = parse_num(key, value)?,
        "sim.sigma_step_db" => cfg.sim.sigma_step_db = parse_num(key, value)?,
        "sim.retransmit_once" => cfg.sim.retransmit_once = parse_bool(key, value)?,
        "sim.pf_horizon_sf" => cfg.sim.pf_horizon_sf = parse_num(key, value)?,
        "sim.seed" => cfg.sim.seed = parse_num(key, value)?,
        "threshold.margin_db" => cfg.threshold_margin_db = parse_num(key, value)?,
        "retrain.rho_ms" => cfg.retrain.rho_ms = parse_num(key, value)?,
        "retrain.correlation_threshold" => {
            cfg.retrain.correlation_threshold = parse_num(key, value)?
        }
        "retrain.record_threshold" => cfg.retrain.record_threshold = parse_num(key, value)?,
        _ => return Err(bad(key, "unknown key")),
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(line, "expected `key = value`"))?;
        apply(&mut cfg, key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = parse_config(
            "# sweep setup\n\
             sim.n_ues = 20\n\
             mab.c = 5   # exploration constant\n\
             channel.steepness = 2.0\n\
             sim.retransmit_once = true\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.n_ues, 20);
        assert_eq!(cfg.mab.c, 5);
        assert_eq!(cfg.channel.steepness, 2.0);
        assert!(cfg.sim.retransmit_once);
        // untouched keys keep defaults
        assert_eq!(cfg.gan.hidden, 32);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("sim.n_eus = 20\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sim.n_eus"), "{msg}");
    }

    #[test]
    fn out_of_range_value_is_named() {
        let err = parse_config("channel.steepness = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("channel.steepness"));
        let err = parse_config("gan.beta = 0\n").unwrap_err();
        assert!(err.to_string().contains("gan.beta"));
        let err = parse_config("sim.ul_fraction = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("sim.ul_fraction"));
        let err = parse_config("mab.d = 0\n").unwrap_err();
        assert!(err.to_string().contains("mab.d"));
    }

    #[test]
    fn repetition_sets_are_overridable_but_checked() {
        let cfg = parse_config("link.ul_repetitions = 1,2,4\n").unwrap();
        assert_eq!(cfg.link.ul_repetitions.values(), &[1, 2, 4]);
        assert!(parse_config("link.ul_repetitions = 1,3\n").is_err());
    }

    #[test]
    fn tbs_table_needs_thirteen_monotone_entries() {
        assert!(parse_config("channel.tbs_bits = 1,2,3\n").is_err());
        let increasing: Vec<String> = (1..=13).map(|i| (i * 10).to_string()).collect();
        assert!(parse_config(&format!("channel.tbs_bits = {}\n", increasing.join(","))).is_ok());
        let mut broken = increasing;
        broken[5] = "10".into();
        assert!(parse_config(&format!("channel.tbs_bits = {}\n", broken.join(","))).is_err());
    }
}
