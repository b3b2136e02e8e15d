//! Adversarial temporal point process.
//!
//! A generator RNN produces the conditional scheduling intensity and the
//! label triple (alpha, gamma, delta) per event; a discriminator RNN scores
//! sequences as real or generated; training alternates single-sequence SGD
//! steps on the two objectives; Ogata thinning samples future events from
//! the learned intensity.

mod discriminator;
mod generator;
mod grad;
pub mod linalg;
mod params;
mod sampling;
mod training;

pub use discriminator::discriminator_score;
pub use generator::{
    alpha_probability, gamma_from_noise, intensity, log_likelihood_seq, mcs_from_uniform,
    rep_from_uniform, sample_mcs_rep, sample_noise, step_hidden,
};
pub use grad::{
    check_gradients, discriminator_grads, gan_loss, likelihood_grads, sgd_step_discriminator,
    sgd_step_generator, GradCheckReport, TensorCheck,
};
pub use params::{DiscriminatorParams, GeneratorParams, EXP_CLAMP, GRAD_CLIP, LOG_FLOOR};
pub use sampling::{
    generate_sequence, predict_schedule, sample_next_event, GenEvent, GenState, Prediction,
    DEFAULT_OGATA_WINDOW_S,
};
pub use training::{train, TrainOptions, TrainReport};

use crate::error::{Error, Result};

/// One time-stamped scheduling label.
///
/// alpha = 0 forces gamma = 0 and delta = (0, 0); all normalized fields lie
/// in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t_ms: u64,
    pub alpha: u8,
    pub gamma: f64,
    /// (normalized MCS, normalized repetition).
    pub delta: (f64, f64),
}

impl EventRecord {
    pub fn validate(&self) -> Result<()> {
        if self.alpha > 1 {
            return Err(Error::Config {
                key: "alpha".into(),
                reason: format!("must be 0 or 1, got {}", self.alpha),
            });
        }
        let (m, r) = self.delta;
        for (name, v) in [("gamma", self.gamma), ("mcs_norm", m), ("rep_norm", r)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config {
                    key: name.into(),
                    reason: format!("must lie in [0, 1], got {v}"),
                });
            }
        }
        if self.alpha == 0 && (self.gamma != 0.0 || m != 0.0 || r != 0.0) {
            return Err(Error::Config {
                key: "alpha".into(),
                reason: "idle record carries nonzero gamma/delta".into(),
            });
        }
        Ok(())
    }
}

/// Strictly time-ordered event records with the derived counting process.
#[derive(Debug, Clone, Default)]
pub struct EventHistory {
    records: Vec<EventRecord>,
}

impl EventHistory {
    pub fn new() -> Self {
        EventHistory::default()
    }

    pub fn push(&mut self, record: EventRecord) -> Result<()> {
        record.validate()?;
        if let Some(last) = self.records.last() {
            if record.t_ms <= last.t_ms {
                return Err(Error::Config {
                    key: "t_ms".into(),
                    reason: format!(
                        "event times must strictly increase ({} after {})",
                        record.t_ms, last.t_ms
                    ),
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// N(t): number of events strictly before `t_ms`.
    pub fn count_before(&self, t_ms: u64) -> usize {
        self.records.partition_point(|r| r.t_ms < t_ms)
    }
}

/// Internal event form: seconds, float labels, and the noise value.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqEvent {
    pub t_s: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub m: f64,
    pub r: f64,
    pub eta: f64,
}

/// A training/evaluation sequence with its observation horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub events: Vec<SeqEvent>,
    pub horizon_s: f64,
}

/// Public likelihood entry point over record histories (milliseconds in,
/// seconds inside).
pub fn log_likelihood(
    history: &EventHistory,
    params: &GeneratorParams,
    horizon_ms: u64,
    eta: &[f64],
) -> Result<f64> {
    if let Some(last) = history.records().last() {
        if last.t_ms >= horizon_ms {
            return Err(Error::Config {
                key: "horizon_ms".into(),
                reason: "all event times must precede the horizon".into(),
            });
        }
    }
    if eta.len() != history.len() {
        return Err(Error::Config {
            key: "eta".into(),
            reason: "one noise value per event required".into(),
        });
    }
    let events = history
        .records()
        .iter()
        .zip(eta)
        .map(|(rec, &eta)| SeqEvent {
            t_s: rec.t_ms as f64 / 1000.0,
            alpha: f64::from(rec.alpha),
            gamma: rec.gamma,
            m: rec.delta.0,
            r: rec.delta.1,
            eta,
        })
        .collect();
    let seq = Sequence {
        events,
        horizon_s: horizon_ms as f64 / 1000.0,
    };
    Ok(log_likelihood_seq(&seq, params))
}

/// Hyper-parameters of the model and its training.
#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    pub hidden: usize,
    pub mu: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub max_seq_len: usize,
    pub ogata_window_s: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            hidden: 32,
            mu: 1.0,
            beta: 2.0,
            learning_rate: 1e-3,
            max_seq_len: 200,
            ogata_window_s: DEFAULT_OGATA_WINDOW_S,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::Config {
                key: "gan.hidden".into(),
                reason: "must be >= 1".into(),
            });
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Config {
                key: "gan.mu".into(),
                reason: format!("must be >= 0, got {}", self.mu),
            });
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config {
                key: "gan.beta".into(),
                reason: format!("must be > 0, got {}", self.beta),
            });
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config {
                key: "gan.learning_rate".into(),
                reason: "must be > 0".into(),
            });
        }
        if self.max_seq_len == 0 {
            return Err(Error::Config {
                key: "gan.max_seq_len".into(),
                reason: "must be >= 1".into(),
            });
        }
        if !(self.ogata_window_s > 0.0) {
            return Err(Error::Config {
                key: "gan.ogata_window_s".into(),
                reason: "must be > 0".into(),
            });
        }
        Ok(())
    }
}
