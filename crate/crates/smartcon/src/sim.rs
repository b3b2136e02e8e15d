//! Subframe-resolution closed-loop evaluation: per-UE traffic and channel
//! walks, proportional-fair selection, transmission outcomes through the
//! link model, pluggable link-adaptation policies, and run metrics.
//!
//! One subframe is 1 ms; one transmission occupies the channel for its full
//! subframe cost (single carrier, one UE served at a time).

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::dataset::DatasetRecord;
use crate::error::{Error, Result};
use crate::gan::{generate_sequence, GenEvent};
use crate::link::{
    denormalize_mcs, denormalize_prb, denormalize_repetition, effective_sinr, normalize_mcs,
    normalize_prb, normalize_repetition, subframes_needed, success_probability, ChannelModelParams,
    Direction, LinkConfig, RepetitionSet,
};
use crate::mab::{ArmSpace, MabEngine};
use crate::retrain::should_retrain;
use crate::rng::{stream, stream_seed};

// ---------------------------------------------------------------------------
// Configuration and state types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_ues: u32,
    pub duration_ms: u64,
    pub sinr_low_db: f64,
    pub sinr_high_db: f64,
    pub packet_bits: u32,
    pub arrival_rate_per_ue: f64,
    pub ul_fraction: f64,
    pub sigma_step_db: f64,
    pub retransmit_once: bool,
    /// EWMA horizon of the proportional-fair average rate, in subframes.
    pub pf_horizon_sf: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_ues: 50,
            duration_ms: 10_000,
            sinr_low_db: 5.0,
            sinr_high_db: 25.0,
            packet_bits: 800,
            arrival_rate_per_ue: 2.0,
            ul_fraction: 0.5,
            sigma_step_db: 0.5,
            retransmit_once: false,
            pf_horizon_sf: 100,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Error::Config {
            key: key.into(),
            reason,
        };
        if self.n_ues < 1 {
            return Err(bad("sim.n_ues", "must be >= 1".into()));
        }
        if self.duration_ms < 1 {
            return Err(bad("sim.duration_ms", "must be >= 1".into()));
        }
        if !(self.sinr_low_db < self.sinr_high_db) {
            return Err(bad(
                "sim.sinr_low_db",
                format!(
                    "low {} must be below high {}",
                    self.sinr_low_db, self.sinr_high_db
                ),
            ));
        }
        if self.packet_bits == 0 {
            return Err(bad("sim.packet_bits", "must be >= 1".into()));
        }
        if !(0.0..=1000.0).contains(&self.arrival_rate_per_ue) {
            return Err(bad(
                "sim.arrival_rate_per_ue",
                "must lie in [0, 1000] packets/s".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.ul_fraction) {
            return Err(bad("sim.ul_fraction", "must lie in [0, 1]".into()));
        }
        if !(self.sigma_step_db >= 0.0) {
            return Err(bad("sim.sigma_step_db", "must be >= 0".into()));
        }
        if self.pf_horizon_sf < 1 {
            return Err(bad("sim.pf_horizon_sf", "must be >= 1".into()));
        }
        Ok(())
    }
}

const EWMA_FLOOR_BPS: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Packet {
    pub arrival_ms: u64,
    pub direction: Direction,
    pub attempts: u8,
}

#[derive(Debug, Clone)]
pub struct UeState {
    pub id: u32,
    pub queue: VecDeque<Packet>,
    pub ewma_bps: f64,
    pub sinr_db: f64,
}

/// Which policy drives link configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    StaticFifo,
    ThresholdLa,
    Mab,
    SmartCon,
}

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::StaticFifo => "static",
            PolicyKind::ThresholdLa => "threshold",
            PolicyKind::Mab => "mab",
            PolicyKind::SmartCon => "smartcon",
        }
    }
}

/// One link-adaptation decision, kept for policy analysis.
#[derive(Debug, Clone)]
pub struct Selection {
    pub t_ms: u64,
    pub sinr_db: f64,
    pub direction: Direction,
    pub config: LinkConfig,
}

// ---------------------------------------------------------------------------
// Stateless operations
// ---------------------------------------------------------------------------

/// Bounded random walk: one subframe step of the SINR.
pub fn channel_step<R: Rng>(sinr_db: f64, rng: &mut R, sigma_db: f64, low: f64, high: f64) -> f64 {
    if sigma_db == 0.0 {
        return sinr_db.clamp(low, high);
    }
    let step = Normal::new(0.0, sigma_db)
        .expect("sigma checked non-negative")
        .sample(rng);
    (sinr_db + step).clamp(low, high)
}

/// Proportional-fair pick: argmax of instantaneous rate over EWMA rate among
/// backlogged UEs; ties break toward the lowest id; `None` when every queue
/// is empty.
pub fn proportional_fair_select(ues: &[UeState], channel: &ChannelModelParams) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, ue) in ues.iter().enumerate() {
        if ue.queue.is_empty() {
            continue;
        }
        let mcs = channel.best_feasible_mcs(ue.sinr_db);
        let inst_bps = f64::from(channel.tbs_bits[mcs as usize]) * 1000.0;
        let metric = inst_bps / ue.ewma_bps.max(EWMA_FLOOR_BPS);
        match best {
            Some((_, m)) if metric <= m => {}
            _ => best = Some((i, metric)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxOutcome {
    pub delivered: bool,
    pub subframes: u64,
}

/// One transmission: consumes the subframe cost of `cfg` and succeeds with
/// the link model's delivery probability (repetitions folded into the
/// effective SINR).
pub fn transmit<R: Rng>(
    packet_bits: u32,
    cfg: &LinkConfig,
    sinr_db: f64,
    channel: &ChannelModelParams,
    rng: &mut R,
) -> TxOutcome {
    let subframes = subframes_needed(packet_bits, cfg, channel);
    let p = success_probability(effective_sinr(sinr_db, cfg.repetitions), cfg.mcs, channel);
    TxOutcome {
        delivered: rng.random::<f64>() < p,
        subframes,
    }
}

/// Threshold link adaptation: highest MCS whose threshold plus the margin
/// is at or below the SINR, one repetition; below coverage, MCS 0 with
/// repetitions doubled per 3 dB of shortfall (capped at the set maximum).
pub fn threshold_choice(
    sinr_db: f64,
    set: &RepetitionSet,
    channel: &ChannelModelParams,
    margin_db: f64,
    max_prb: u32,
) -> LinkConfig {
    let feasible = (0..=crate::link::MCS_MAX)
        .rev()
        .find(|&m| channel.threshold_db(m) + margin_db <= sinr_db);
    match feasible {
        Some(m) => LinkConfig::new(m, 1, max_prb),
        None => {
            let shortfall = channel.threshold_db(0) + margin_db - sinr_db;
            let doublings = (shortfall / 3.0).ceil().max(1.0) as u32;
            let target = 2u64.saturating_pow(doublings.min(31)) as u32;
            let rep = set
                .values()
                .iter()
                .copied()
                .find(|&v| v >= target)
                .unwrap_or_else(|| set.max());
            LinkConfig::new(0, rep, max_prb)
        }
    }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Empirical delay distribution with interpolated quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayCdf {
    sorted: Vec<f64>,
}

impl DelayCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        samples.sort_by(f64::total_cmp);
        Ok(DelayCdf { sorted: samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Linear-interpolation quantile, q in [0, 1].
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let n = self.sorted.len();
        if n == 1 {
            return self.sorted[0];
        }
        let pos = q * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.sorted[lo] + (self.sorted[hi] - self.sorted[lo]) * frac
    }
}

/// Mean absolute percentage error; zero actual values are excluded, and the
/// result is absent when nothing remains.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Option<f64> {
    assert_eq!(actual.len(), predicted.len(), "series lengths must match");
    let mut sum = 0.0;
    let mut n = 0usize;
    for (a, p) in actual.iter().zip(predicted) {
        if *a == 0.0 {
            continue;
        }
        sum += ((a - p) / a).abs();
        n += 1;
    }
    (n > 0).then(|| 100.0 * sum / n as f64)
}

/// Metrics of one closed-loop run.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub policy: &'static str,
    pub n_ues: u32,
    pub seed: u64,
    pub throughput_bps: f64,
    pub avg_plr: f64,
    pub avg_delay_ms: f64,
    pub delay_cdf: Option<DelayCdf>,
    pub consumed_subframes: u64,
    pub mape_avg: Option<f64>,
    pub generated: u64,
    pub delivered: u64,
    pub lost: u64,
    pub queued_at_end: u64,
    pub retrain_signals: u32,
}

pub const METRICS_CSV_HEADER: &str = "policy,n_ues,seed,throughput_bps,avg_plr,avg_delay_ms,p50_delay_ms,p95_delay_ms,consumed_subframes,mape_avg";

impl MetricsReport {
    pub fn csv_row(&self) -> String {
        let q = |q: f64| -> String {
            self.delay_cdf
                .as_ref()
                .map(|cdf| format!("{:.6}", cdf.quantile(q)))
                .unwrap_or_default()
        };
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
            self.policy,
            self.n_ues,
            self.seed,
            self.throughput_bps,
            self.avg_plr,
            self.avg_delay_ms,
            q(0.5),
            q(0.95),
            self.consumed_subframes,
            self.mape_avg.map(|m| format!("{m:.6}")).unwrap_or_default(),
        )
    }
}

pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

struct PendingObs {
    direction: Direction,
    arm: LinkConfig,
    sinr_db: f64,
    delivered: bool,
}

struct MabPolicy {
    ul: MabEngine,
    dl: MabEngine,
    pending: Vec<PendingObs>,
    rng: ChaCha8Rng,
}

impl MabPolicy {
    fn new(cfg: &RunConfig, seed: u64) -> Self {
        MabPolicy {
            ul: MabEngine::new(
                cfg.mab.clone(),
                ArmSpace::new(cfg.link.ul_repetitions.clone(), cfg.link.max_prb),
            ),
            dl: MabEngine::new(
                cfg.mab.clone(),
                ArmSpace::new(cfg.link.dl_repetitions.clone(), cfg.link.max_prb),
            ),
            pending: Vec::new(),
            rng: stream(seed, "mab", 0),
        }
    }

    fn engine(&mut self, direction: Direction) -> &mut MabEngine {
        match direction {
            Direction::Uplink => &mut self.ul,
            Direction::Downlink => &mut self.dl,
        }
    }

    fn choose(&mut self, sinr_db: f64, direction: Direction) -> LinkConfig {
        let engine = match direction {
            Direction::Uplink => &mut self.ul,
            Direction::Downlink => &mut self.dl,
        };
        engine
            .select(sinr_db, &mut self.rng)
            .expect("play index starts at 1")
    }

    /// Flush the window: one statistic-table entry per (direction, arm)
    /// group, carrying the group's loss fraction and mean SINR.
    fn flush(&mut self, t_ms: u64) {
        let pending = std::mem::take(&mut self.pending);
        let mut groups: Vec<(Direction, LinkConfig, f64, u32, u32)> = Vec::new();
        for obs in pending {
            match groups
                .iter_mut()
                .find(|(d, a, ..)| *d == obs.direction && *a == obs.arm)
            {
                Some((_, _, sinr_sum, total, lost)) => {
                    *sinr_sum += obs.sinr_db;
                    *total += 1;
                    *lost += u32::from(!obs.delivered);
                }
                None => groups.push((
                    obs.direction,
                    obs.arm,
                    obs.sinr_db,
                    1,
                    u32::from(!obs.delivered),
                )),
            }
        }
        for (dir, arm, sinr_sum, total, lost) in groups {
            let plr = f64::from(lost) / f64::from(total);
            let sinr = sinr_sum / f64::from(total);
            self.engine(dir).record(sinr, arm, plr, t_ms);
        }
    }
}

/// A prescription generated ahead of time for one subframe.
struct PredEvent {
    xi: f64,
    gamma: f64,
    m: f64,
    r: f64,
}

struct SmartConPolicy {
    preds: HashMap<u64, PredEvent>,
    /// Predicted-vs-actual pairs per quantity: prb, mcs, rep, xi.
    mape_pairs: [Vec<(f64, f64)>; 4],
}

impl SmartConPolicy {
    fn new(cfg: &RunConfig, model: &Checkpoint, seed: u64) -> Self {
        let mut rng = stream(seed, "gan", 0);
        let hash_seed = stream_seed(seed, "gan-hash", 0);
        let horizon_s = cfg.sim.duration_ms as f64 / 1000.0;
        let cap = (cfg.sim.duration_ms as usize).saturating_mul(2).max(1024);
        let events: Vec<GenEvent> = generate_sequence(
            &model.generator,
            horizon_s,
            &mut rng,
            hash_seed,
            cap,
            cfg.gan.ogata_window_s,
        );
        let mut preds = HashMap::new();
        for g in events {
            if g.event.alpha == 0.0 {
                continue;
            }
            let t_ms = (g.event.t_s * 1000.0).floor() as u64;
            preds.entry(t_ms).or_insert(PredEvent {
                xi: g.xi,
                gamma: g.event.gamma,
                m: g.event.m,
                r: g.event.r,
            });
        }
        SmartConPolicy {
            preds,
            mape_pairs: Default::default(),
        }
    }

    fn choose(
        &mut self,
        sinr_db: f64,
        direction: Direction,
        t_ms: u64,
        cfg: &RunConfig,
    ) -> Option<LinkConfig> {
        let pred = self.preds.remove(&t_ms)?;
        let set = cfg.link.set(direction);
        let choice = LinkConfig::new(
            denormalize_mcs(pred.m),
            denormalize_repetition(pred.r, set),
            denormalize_prb(pred.gamma, cfg.link.max_prb),
        );
        // reference adaptation at this instant, for the prediction error
        let reference = threshold_choice(
            sinr_db,
            set,
            &cfg.channel,
            cfg.threshold_margin_db,
            cfg.link.max_prb,
        );
        self.mape_pairs[0].push((f64::from(reference.prb_count), f64::from(choice.prb_count)));
        self.mape_pairs[1].push((f64::from(reference.mcs), f64::from(choice.mcs)));
        self.mape_pairs[2].push((
            f64::from(reference.repetitions),
            f64::from(choice.repetitions),
        ));
        self.mape_pairs[3].push((1.0, pred.xi));
        Some(choice)
    }

    /// Average MAPE over the four predicted quantities.
    fn mape_avg(&self) -> Option<f64> {
        let per_quantity: Vec<f64> = self
            .mape_pairs
            .iter()
            .filter_map(|pairs| {
                let actual: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
                let predicted: Vec<f64> = pairs.iter().map(|(_, p)| *p).collect();
                mape(&actual, &predicted)
            })
            .collect();
        if per_quantity.is_empty() {
            return None;
        }
        Some(per_quantity.iter().sum::<f64>() / per_quantity.len() as f64)
    }
}

enum Policy {
    Static,
    Threshold,
    Mab(MabPolicy),
    SmartCon(SmartConPolicy),
}

// ---------------------------------------------------------------------------
// The closed loop
// ---------------------------------------------------------------------------

/// Everything a run produces; `report` is the public summary.
pub struct SimOutcome {
    pub report: MetricsReport,
    pub selections: Vec<Selection>,
}

struct RetrainTracker {
    window_tx: u64,
    window_lost: u64,
    recent: Vec<f64>,
    signals: u32,
}

pub fn run_sim(
    kind: PolicyKind,
    cfg: &RunConfig,
    model: Option<&Checkpoint>,
    dataset_plr: Option<&[f64]>,
) -> Result<SimOutcome> {
    let (outcome, _) = run_internal(kind, cfg, model, dataset_plr, false)?;
    Ok(outcome)
}

/// Run one policy and return its metrics.
pub fn run_policy(
    kind: PolicyKind,
    cfg: &RunConfig,
    model: Option<&Checkpoint>,
    dataset_plr: Option<&[f64]>,
) -> Result<MetricsReport> {
    Ok(run_sim(kind, cfg, model, dataset_plr)?.report)
}

/// One bandit-driven episode emitting the training record stream.
pub fn run_recording_episode(cfg: &RunConfig, seed: u64) -> Result<Vec<DatasetRecord>> {
    let mut episode_cfg = cfg.clone();
    episode_cfg.sim.seed = seed;
    let (_, records) = run_internal(PolicyKind::Mab, &episode_cfg, None, None, true)?;
    Ok(records)
}

/// Generate the training dataset: `episodes` independent bandit episodes,
/// concatenated in order.
pub fn generate_dataset(cfg: &RunConfig, episodes: u32, seed: u64) -> Result<Vec<DatasetRecord>> {
    if episodes == 0 {
        return Err(Error::Config {
            key: "episodes".into(),
            reason: "must be >= 1".into(),
        });
    }
    let seeds: Vec<u64> = (0..episodes)
        .map(|e| stream_seed(seed, "episode", u64::from(e)))
        .collect();
    let per_episode = run_episodes(cfg, &seeds)?;
    Ok(per_episode.into_iter().flatten().collect())
}

#[cfg(feature = "parallel")]
fn run_episodes(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<Vec<DatasetRecord>>> {
    use rayon::prelude::*;
    seeds
        .par_iter()
        .map(|&s| run_recording_episode(cfg, s))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_episodes(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<Vec<DatasetRecord>>> {
    seeds
        .iter()
        .map(|&s| run_recording_episode(cfg, s))
        .collect()
}

/// Sequential episode generation, kept callable regardless of features for
/// the bench comparison.
pub fn generate_dataset_serial(
    cfg: &RunConfig,
    episodes: u32,
    seed: u64,
) -> Result<Vec<DatasetRecord>> {
    let mut out = Vec::new();
    for e in 0..episodes {
        out.extend(run_recording_episode(
            cfg,
            stream_seed(seed, "episode", u64::from(e)),
        )?);
    }
    Ok(out)
}

fn run_internal(
    kind: PolicyKind,
    cfg: &RunConfig,
    model: Option<&Checkpoint>,
    dataset_plr: Option<&[f64]>,
    record: bool,
) -> Result<(SimOutcome, Vec<DatasetRecord>)> {
    cfg.validate()?;
    let sim = &cfg.sim;
    let seed = sim.seed;

    let mut policy = match kind {
        PolicyKind::StaticFifo => Policy::Static,
        PolicyKind::ThresholdLa => Policy::Threshold,
        PolicyKind::Mab => Policy::Mab(MabPolicy::new(cfg, seed)),
        PolicyKind::SmartCon => {
            let model = model.ok_or_else(|| {
                Error::Cli("smartcon policy requires a trained model (--model)".into())
            })?;
            if model.hidden() != cfg.gan.hidden {
                return Err(Error::CheckpointDim(format!(
                    "checkpoint H={} but config gan.hidden={}",
                    model.hidden(),
                    cfg.gan.hidden
                )));
            }
            Policy::SmartCon(SmartConPolicy::new(cfg, model, seed))
        }
    };

    let mut channel_rngs: Vec<ChaCha8Rng> = (0..sim.n_ues)
        .map(|u| stream(seed, "channel", u64::from(u)))
        .collect();
    let mut traffic_rng = stream(seed, "traffic", 0);
    let mut phy_rng = stream(seed, "phy", 0);
    let mut retrain_rng = stream(seed, "retrain", 0);

    let mut ues: Vec<UeState> = (0..sim.n_ues)
        .map(|id| UeState {
            id,
            queue: VecDeque::new(),
            ewma_bps: EWMA_FLOOR_BPS,
            sinr_db: sim.sinr_low_db
                + (sim.sinr_high_db - sim.sinr_low_db) * channel_rngs[id as usize].random::<f64>(),
        })
        .collect();

    let arrival_p = sim.arrival_rate_per_ue / 1000.0;
    let ewma_w = 1.0 / f64::from(sim.pf_horizon_sf);

    let mut busy_until: u64 = 0;
    let mut serving: Option<(usize, f64)> = None;
    let mut generated = 0u64;
    let mut delivered = 0u64;
    let mut lost = 0u64;
    let mut delivered_bits = 0u64;
    let mut consumed_subframes = 0u64;
    let mut delays: Vec<f64> = Vec::new();
    let mut selections: Vec<Selection> = Vec::new();
    let mut records: Vec<DatasetRecord> = Vec::new();
    let mut idle_count = 0u64;
    let mut retrain = RetrainTracker {
        window_tx: 0,
        window_lost: 0,
        recent: Vec::new(),
        signals: 0,
    };

    for t in 0..sim.duration_ms {
        // channel walks
        for (ue, rng) in ues.iter_mut().zip(channel_rngs.iter_mut()) {
            ue.sinr_db = channel_step(
                ue.sinr_db,
                rng,
                sim.sigma_step_db,
                sim.sinr_low_db,
                sim.sinr_high_db,
            );
        }
        // arrivals
        if arrival_p > 0.0 {
            for ue in ues.iter_mut() {
                if traffic_rng.random::<f64>() < arrival_p {
                    let direction = if traffic_rng.random::<f64>() < sim.ul_fraction {
                        Direction::Uplink
                    } else {
                        Direction::Downlink
                    };
                    ue.queue.push_back(Packet {
                        arrival_ms: t,
                        direction,
                        attempts: 0,
                    });
                    generated += 1;
                }
            }
        }

        // scheduling
        if t >= busy_until {
            serving = None;
            match proportional_fair_select(&ues, &cfg.channel) {
                Some(i) => {
                    let pkt = ues[i].queue.pop_front().expect("selected UE is backlogged");
                    let sinr = ues[i].sinr_db;
                    let direction = pkt.direction;
                    let set = cfg.link.set(direction);
                    let arm = match &mut policy {
                        Policy::Static => LinkConfig::new(6, 1, 1),
                        Policy::Threshold => threshold_choice(
                            sinr,
                            set,
                            &cfg.channel,
                            cfg.threshold_margin_db,
                            cfg.link.max_prb,
                        ),
                        Policy::Mab(mab) => mab.choose(sinr, direction),
                        Policy::SmartCon(sc) => {
                            sc.choose(sinr, direction, t, cfg).unwrap_or_else(|| {
                                threshold_choice(
                                    sinr,
                                    set,
                                    &cfg.channel,
                                    cfg.threshold_margin_db,
                                    cfg.link.max_prb,
                                )
                            })
                        }
                    };
                    debug_assert!(arm.validate(set, cfg.link.max_prb).is_ok());

                    let outcome = transmit(sim.packet_bits, &arm, sinr, &cfg.channel, &mut phy_rng);
                    busy_until = t + outcome.subframes;
                    consumed_subframes += outcome.subframes;
                    serving = Some((i, f64::from(sim.packet_bits) / outcome.subframes as f64));

                    let delay_ms = (t - pkt.arrival_ms) as f64 + outcome.subframes as f64;
                    if outcome.delivered {
                        delivered += 1;
                        delivered_bits += u64::from(sim.packet_bits);
                        delays.push(delay_ms);
                    } else if sim.retransmit_once && pkt.attempts == 0 {
                        ues[i].queue.push_back(Packet { attempts: 1, ..pkt });
                    } else {
                        lost += 1;
                    }
                    retrain.window_tx += 1;
                    retrain.window_lost += u64::from(!outcome.delivered);

                    if let Policy::Mab(mab) = &mut policy {
                        mab.pending.push(PendingObs {
                            direction,
                            arm,
                            sinr_db: sinr,
                            delivered: outcome.delivered,
                        });
                    }
                    selections.push(Selection {
                        t_ms: t,
                        sinr_db: sinr,
                        direction,
                        config: arm,
                    });
                    if record {
                        records.push(DatasetRecord {
                            t_ms: t,
                            direction,
                            alpha: 1,
                            prb_norm: normalize_prb(arm.prb_count, cfg.link.max_prb)
                                .expect("arm validated"),
                            mcs_norm: normalize_mcs(arm.mcs).expect("arm validated"),
                            rep_norm: normalize_repetition(arm.repetitions, set)
                                .expect("arm validated"),
                            sinr_db: sinr,
                            plr: if outcome.delivered { 0.0 } else { 1.0 },
                        });
                    }
                }
                None => {
                    // idle subframe
                    idle_count += 1;
                    if record && idle_count.is_multiple_of(cfg.idle_sample_rate) {
                        let mean_sinr =
                            ues.iter().map(|u| u.sinr_db).sum::<f64>() / ues.len() as f64;
                        records.push(DatasetRecord {
                            t_ms: t,
                            direction: Direction::Uplink,
                            alpha: 0,
                            prb_norm: 0.0,
                            mcs_norm: 0.0,
                            rep_norm: 0.0,
                            sinr_db: mean_sinr,
                            plr: 0.0,
                        });
                    }
                }
            }
        }

        // proportional-fair averages
        for (i, ue) in ues.iter_mut().enumerate() {
            let inst_bps = match serving {
                Some((s, bits_per_sf)) if s == i && t < busy_until => bits_per_sf * 1000.0,
                _ => 0.0,
            };
            ue.ewma_bps = ((1.0 - ewma_w) * ue.ewma_bps + ewma_w * inst_bps).max(EWMA_FLOOR_BPS);
        }

        // bandit window boundary
        if let Policy::Mab(mab) = &mut policy {
            if (t + 1) % cfg.mab.t_d_ms == 0 {
                mab.flush(t);
            }
        }

        // retraining probe, per rho window
        if (t + 1) % cfg.mab.t_d_ms == 0 {
            let plr = if retrain.window_tx > 0 {
                retrain.window_lost as f64 / retrain.window_tx as f64
            } else {
                0.0
            };
            retrain.recent.push(plr);
            retrain.window_tx = 0;
            retrain.window_lost = 0;
        }
        if matches!(policy, Policy::SmartCon(_)) && (t + 1) % cfg.retrain.rho_ms == 0 {
            if let Some(plr_col) = dataset_plr {
                let window = (cfg.retrain.rho_ms / cfg.mab.t_d_ms).max(2) as usize;
                let recent_start = retrain.recent.len().saturating_sub(window);
                let recent = &retrain.recent[recent_start..];
                if plr_col.len() >= recent.len() && recent.len() >= 2 {
                    let start = retrain_rng.random_range(0..=plr_col.len() - recent.len());
                    let sample = &plr_col[start..start + recent.len()];
                    if should_retrain(recent, sample, cfg.retrain.correlation_threshold) {
                        retrain.signals += 1;
                    }
                }
            }
        }
    }

    let queued_at_end: u64 = ues.iter().map(|u| u.queue.len() as u64).sum();
    debug_assert_eq!(generated, delivered + lost + queued_at_end);

    let finished = delivered + lost;
    let avg_plr = if finished > 0 {
        lost as f64 / finished as f64
    } else {
        0.0
    };
    let avg_delay_ms = if delays.is_empty() {
        0.0
    } else {
        delays.iter().sum::<f64>() / delays.len() as f64
    };
    let delay_cdf = if delays.is_empty() {
        None
    } else {
        Some(DelayCdf::new(delays)?)
    };
    let mape_avg = match &policy {
        Policy::SmartCon(sc) => sc.mape_avg(),
        _ => None,
    };

    let report = MetricsReport {
        policy: kind.label(),
        n_ues: sim.n_ues,
        seed,
        throughput_bps: delivered_bits as f64 * 1000.0 / sim.duration_ms as f64,
        avg_plr,
        avg_delay_ms,
        delay_cdf,
        consumed_subframes,
        mape_avg,
        generated,
        delivered,
        lost,
        queued_at_end,
        retrain_signals: retrain.signals,
    };
    Ok((SimOutcome { report, selections }, records))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

fn sweep_run(
    kind: PolicyKind,
    cfg: &RunConfig,
    model: Option<&Checkpoint>,
    n_ues: u32,
    base_seed: u64,
) -> Result<MetricsReport> {
    let mut run_cfg = cfg.clone();
    run_cfg.sim.n_ues = n_ues;
    run_cfg.sim.seed = stream_seed(base_seed, "sweep", u64::from(n_ues));
    run_policy(kind, &run_cfg, model, None)
}

/// Evaluate one policy across UE counts; runs fan out in parallel when the
/// `parallel` feature is enabled.
pub fn run_sweep(
    kind: PolicyKind,
    cfg: &RunConfig,
    model: Option<&Checkpoint>,
    ue_counts: &[u32],
    base_seed: u64,
) -> Result<Vec<MetricsReport>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ue_counts
            .par_iter()
            .map(|&n| sweep_run(kind, cfg, model, n, base_seed))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sweep_serial(kind, cfg, model, ue_counts, base_seed)
    }
}

/// Sequential sweep, always available (bench baseline).
pub fn run_sweep_serial(
    kind: PolicyKind,
    cfg: &RunConfig,
    model: Option<&Checkpoint>,
    ue_counts: &[u32],
    base_seed: u64,
) -> Result<Vec<MetricsReport>> {
    ue_counts
        .iter()
        .map(|&n| sweep_run(kind, cfg, model, n, base_seed))
        .collect()
}
