//! Generator forward path: input-layer random sources, the hidden
//! recurrence, the conditional intensity, and the sequence log-likelihood.
//!
//! Times are seconds inside the recurrence; the public record types carry
//! milliseconds and are rescaled on entry.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::linalg::{dot, sigmoid, Mat};
use super::params::{GeneratorParams, EXP_CLAMP};
use super::{SeqEvent, Sequence};
use crate::rng::hashed_unit;

/// Draw the noise prior eta ~ Poisson(mu).
pub fn sample_noise<R: Rng>(mu: f64, rng: &mut R) -> f64 {
    debug_assert!(mu >= 0.0);
    if mu == 0.0 {
        return 0.0;
    }
    let pois = Poisson::new(mu).expect("mu > 0 checked");
    pois.sample(rng)
}

/// Scheduling probability xi = sigma(w_alpha . h_prev).
pub fn alpha_probability(h_prev: &[f64], w_alpha: &Mat) -> f64 {
    sigmoid(dot(w_alpha.as_vec(), h_prev))
}

/// PRB source: standard normal density evaluated at the noise value.
pub fn gamma_from_noise(eta: f64) -> f64 {
    (-(eta * eta) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse CDF of the exponential(beta) truncated to [0, 1].
pub fn mcs_from_uniform(u: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    -(1.0 - u * (1.0 - (-beta).exp())).ln() / beta
}

/// Inverse CDF of the exponential(beta), clamped into [0, 1].
pub fn rep_from_uniform(u: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    (-(1.0 - u).ln() / beta).min(1.0)
}

/// Normalized (MCS, repetition) pair for one event.
///
/// When alpha = 0 the pair is deterministically (0, 0). Otherwise the two
/// uniforms are counter-hashed from (eta, event index, seed) so the noise
/// value drives the draw and replay is exact.
pub fn sample_mcs_rep(eta: f64, beta: f64, alpha: u8, seed: u64, event_index: u64) -> (f64, f64) {
    if alpha == 0 {
        return (0.0, 0.0);
    }
    let u_m = hashed_unit(&[eta.to_bits(), event_index, seed, 1]);
    let u_r = hashed_unit(&[eta.to_bits(), event_index, seed, 2]);
    (mcs_from_uniform(u_m, beta), rep_from_uniform(u_r, beta))
}

/// The W2 input vector (alpha*gamma, alpha*m, alpha*r) of one event.
#[inline]
pub(crate) fn w2_input(ev: &SeqEvent) -> [f64; 3] {
    [ev.alpha * ev.gamma, ev.alpha * ev.m, ev.alpha * ev.r]
}

/// The scalar W3 input (1 - alpha) * t * eta of one event.
#[inline]
pub(crate) fn w3_input(ev: &SeqEvent) -> f64 {
    (1.0 - ev.alpha) * ev.t_s * ev.eta
}

/// One step of the hidden recurrence (pre-activation, post-ReLU).
pub fn step_hidden_pre(h_prev: &[f64], ev: &SeqEvent, params: &GeneratorParams) -> Vec<f64> {
    let mut pre = params.w1.matvec(h_prev);
    let x = w2_input(ev);
    let wx = params.w2.matvec(&x);
    let s = w3_input(ev);
    for i in 0..params.hidden {
        pre[i] += wx[i] + params.w3.as_vec()[i] * s + params.b_h.as_vec()[i];
    }
    pre
}

/// h_l = ReLU(W1 h_{l-1} + W2 x_l + W3 s_l + b_h).
pub fn step_hidden(h_prev: &[f64], ev: &SeqEvent, params: &GeneratorParams) -> Vec<f64> {
    step_hidden_pre(h_prev, ev, params)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect()
}

/// Affine exponent base a = w_g . h + b_g, clamped to +-EXP_CLAMP.
pub(crate) fn exponent_base(h: &[f64], params: &GeneratorParams) -> (f64, bool) {
    let raw = dot(params.w_g.as_vec(), h) + params.b_g.value();
    let clamped = raw.clamp(-EXP_CLAMP, EXP_CLAMP);
    (clamped, raw != clamped)
}

/// Conditional intensity at `t_s` given the hidden state of the last event
/// at `t_last_s`.
pub fn intensity(t_s: f64, t_last_s: f64, h: &[f64], params: &GeneratorParams) -> f64 {
    debug_assert!(t_s >= t_last_s);
    let raw =
        dot(params.w_g.as_vec(), h) + params.c_g.value() * (t_s - t_last_s) + params.b_g.value();
    raw.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

/// Closed-form integral of exp(a + c t) over [0, dt].
pub(crate) fn segment_integral(a: f64, c: f64, dt: f64) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    if c.abs() < 1e-9 {
        return dt * a.exp();
    }
    let e1 = (a + c * dt).min(EXP_CLAMP);
    (e1.exp() - a.exp()) / c
}

/// Hidden-state trajectory over a sequence: (h_0..h_n, pre_1..pre_n).
pub(crate) fn hidden_trajectory(
    seq: &Sequence,
    params: &GeneratorParams,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut hs = Vec::with_capacity(seq.events.len() + 1);
    let mut pres = Vec::with_capacity(seq.events.len());
    hs.push(vec![0.0; params.hidden]);
    for ev in &seq.events {
        let pre = step_hidden_pre(hs.last().unwrap(), ev, params);
        let h: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        pres.push(pre);
        hs.push(h);
    }
    (hs, pres)
}

/// Sequence log-likelihood: sum of log-intensities at event times minus the
/// compensator integral over [0, horizon].
///
/// The compensator is piecewise closed-form because the intensity is
/// exponential-affine in t between events.
pub fn log_likelihood_seq(seq: &Sequence, params: &GeneratorParams) -> f64 {
    let (hs, _) = hidden_trajectory(seq, params);
    let n = seq.events.len();
    let c = params.c_g.value();

    let mut ll = 0.0;
    let mut t_prev = 0.0;
    for l in 0..n {
        let (a, _) = exponent_base(&hs[l], params);
        let t_l = seq.events[l].t_s;
        ll += (a + c * (t_l - t_prev)).clamp(-EXP_CLAMP, EXP_CLAMP);
        t_prev = t_l;
    }
    for l in 0..=n {
        let (a, _) = exponent_base(&hs[l], params);
        let start = if l == 0 { 0.0 } else { seq.events[l - 1].t_s };
        let end = if l == n {
            seq.horizon_s
        } else {
            seq.events[l].t_s
        };
        ll -= segment_integral(a, c, end - start);
    }
    ll
}
