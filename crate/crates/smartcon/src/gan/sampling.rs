//! Ogata-thinning sampling of future scheduling events from a trained
//! generator, and the denormalized schedule prediction.

use rand::Rng;

use super::generator::{
    alpha_probability, exponent_base, gamma_from_noise, sample_mcs_rep, sample_noise, step_hidden,
};
use super::params::{GeneratorParams, EXP_CLAMP};
use super::SeqEvent;
use crate::link::{
    denormalize_mcs, denormalize_prb, denormalize_repetition, LinkConfig, RepetitionSet,
};

/// Width of the piecewise-constant bound windows (seconds).
pub const DEFAULT_OGATA_WINDOW_S: f64 = 1.0;

/// Rolling sampler state: time and hidden state of the last event.
#[derive(Debug, Clone)]
pub struct GenState {
    pub t_s: f64,
    pub h: Vec<f64>,
    pub event_index: u64,
    /// Seed mixed into the counter-hashed MCS/repetition draws.
    pub hash_seed: u64,
}

impl GenState {
    pub fn start(params: &GeneratorParams, hash_seed: u64) -> Self {
        GenState {
            t_s: 0.0,
            h: vec![0.0; params.hidden],
            event_index: 0,
            hash_seed,
        }
    }
}

/// One generated event plus its scheduling probability.
#[derive(Debug, Clone)]
pub struct GenEvent {
    pub event: SeqEvent,
    pub xi: f64,
}

/// Sample the next event after `state.t_s`, or `None` once the horizon is
/// reached (or the intensity bound underflows to zero).
///
/// Thinning runs over windows of fixed width; within a window the bound is
/// the intensity at the window end when c_g >= 0 (increasing) and at the
/// window start otherwise.
pub fn sample_next_event<R: Rng>(
    state: &mut GenState,
    params: &GeneratorParams,
    rng: &mut R,
    horizon_s: f64,
    window_s: f64,
) -> Option<GenEvent> {
    let (a, _) = exponent_base(&state.h, params);
    let c = params.c_g.value();
    let lam_at = |t: f64| -> f64 { (a + c * (t - state.t_s)).clamp(-EXP_CLAMP, EXP_CLAMP).exp() };
    // keep the bound within a factor e of the true intensity across the
    // window so the rejection rate stays bounded for steep exponents; the
    // floor keeps the window loop advancing (beyond it the exponent clamp
    // saturates the intensity, so the bound stays valid)
    let window_s = if c.abs() > 1.0 {
        window_s.min(1.0 / c.abs()).max(1e-9)
    } else {
        window_s
    };

    let mut win_lo = state.t_s;
    while win_lo < horizon_s {
        let win_hi = (win_lo + window_s).min(horizon_s);
        let lam_bar = if c >= 0.0 {
            lam_at(win_hi)
        } else {
            lam_at(win_lo)
        };
        if lam_bar < 1e-300 {
            return None;
        }
        let mut t = win_lo;
        loop {
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / lam_bar;
            if t > win_hi {
                break;
            }
            let accept: f64 = rng.random();
            if accept <= lam_at(t) / lam_bar {
                let eta = sample_noise(params.mu, rng);
                let xi = alpha_probability(&state.h, &params.w_alpha);
                let alpha = f64::from(rng.random::<f64>() < xi);
                let gamma = if alpha > 0.0 {
                    gamma_from_noise(eta)
                } else {
                    0.0
                };
                let (m, r) = sample_mcs_rep(
                    eta,
                    params.beta,
                    alpha as u8,
                    state.hash_seed,
                    state.event_index,
                );
                let event = SeqEvent {
                    t_s: t,
                    alpha,
                    gamma,
                    m,
                    r,
                    eta,
                };
                state.h = step_hidden(&state.h, &event, params);
                state.t_s = t;
                state.event_index += 1;
                return Some(GenEvent { event, xi });
            }
        }
        win_lo = win_hi;
    }
    None
}

/// Generate a whole event sequence on (t0, horizon], capped at `max_events`.
pub fn generate_sequence<R: Rng>(
    params: &GeneratorParams,
    horizon_s: f64,
    rng: &mut R,
    hash_seed: u64,
    max_events: usize,
    window_s: f64,
) -> Vec<GenEvent> {
    let mut state = GenState::start(params, hash_seed);
    let mut out = Vec::new();
    while out.len() < max_events {
        match sample_next_event(&mut state, params, rng, horizon_s, window_s) {
            Some(ev) => out.push(ev),
            None => break,
        }
    }
    out
}

/// One denormalized prediction row.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub t_ms: u64,
    /// Scheduling probability xi at the event.
    pub xi: f64,
    pub alpha: u8,
    pub prb_count: u32,
    pub config: LinkConfig,
}

/// Roll the trained generator forward from `t_now_ms` and denormalize each
/// event into a PRB count and the nearest legal (MCS, repetition) pair.
pub fn predict_schedule<R: Rng>(
    params: &GeneratorParams,
    t_now_ms: u64,
    horizon_ms: u64,
    set: &RepetitionSet,
    max_prb: u32,
    rng: &mut R,
    hash_seed: u64,
    window_s: f64,
) -> Vec<Prediction> {
    let span_s = (horizon_ms.saturating_sub(t_now_ms)) as f64 / 1000.0;
    let cap = (span_s * 10_000.0).min(1e6) as usize + 16;
    generate_sequence(params, span_s, rng, hash_seed, cap, window_s)
        .into_iter()
        .map(|g| {
            let ev = &g.event;
            Prediction {
                t_ms: t_now_ms + (ev.t_s * 1000.0).floor() as u64,
                xi: g.xi,
                alpha: ev.alpha as u8,
                prb_count: denormalize_prb(ev.gamma, max_prb),
                config: LinkConfig::new(
                    denormalize_mcs(ev.m),
                    denormalize_repetition(ev.r, set),
                    denormalize_prb(ev.gamma, max_prb),
                ),
            }
        })
        .collect()
}
