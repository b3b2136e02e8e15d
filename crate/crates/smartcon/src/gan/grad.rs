//! Backpropagation through time for both networks, the adversarial
//! objectives, the SGD update, and the finite-difference gradient oracle
//! behind `check-grads`.
//!
//! Objectives, with the real and fake sequences held fixed:
//!   discriminator (ascent):  J_D = sum_real log D_l + sum_fake log(1 - D_l)
//!   generator (descent):     L_G = -log L(real | theta_G) + sum_fake log(1 - D_l)
//! The fake-sequence term does not depend on theta_G once the fake labels
//! are drawn, so the generator gradient is the negated likelihood gradient.

use rand::Rng;

use super::discriminator::{forward as disc_forward, w5_input};
use super::generator::{exponent_base, hidden_trajectory, log_likelihood_seq, w2_input, w3_input};
use super::linalg::Mat;
use super::params::{DiscriminatorParams, GeneratorParams, EXP_CLAMP, GRAD_CLIP, LOG_FLOOR};
use super::{SeqEvent, Sequence};
use crate::rng::stream;

/// d/dc of (exp(c*dt) - 1) / c * exp(a), split out of the compensator.
fn segment_dc(a: f64, c: f64, dt: f64) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    if c.abs() < 1e-9 {
        return a.exp() * dt * dt / 2.0;
    }
    let e1_raw = a + c * dt;
    let integral = ((e1_raw.min(EXP_CLAMP)).exp() - a.exp()) / c;
    if e1_raw > EXP_CLAMP {
        // end exponent saturated; only the 1/c factor still moves
        -integral / c
    } else {
        dt * e1_raw.exp() / c - integral / c
    }
}

/// d/da of the same segment integral (a pre-clamped).
fn segment_da(a: f64, c: f64, dt: f64) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    if c.abs() < 1e-9 {
        return dt * a.exp();
    }
    let e1_raw = a + c * dt;
    if e1_raw > EXP_CLAMP {
        -a.exp() / c
    } else {
        (e1_raw.exp() - a.exp()) / c
    }
}

/// Log-likelihood of `seq` and its gradient with respect to theta_G.
///
/// w_alpha only drives sampling, never the likelihood, so its gradient is
/// identically zero.
pub fn likelihood_grads(seq: &Sequence, params: &GeneratorParams) -> (f64, GeneratorParams) {
    let h = params.hidden;
    let n = seq.events.len();
    let (hs, pres) = hidden_trajectory(seq, params);
    let c = params.c_g.value();
    let mut grads = GeneratorParams::zeros(h, params.mu, params.beta);

    // exponent bases a_l and their clamp masks, l = 0..=n
    let bases: Vec<(f64, bool)> = hs.iter().map(|hl| exponent_base(hl, params)).collect();

    let mut loglik = 0.0;
    let mut g_cg = 0.0;
    // d loglik / d a_l before the clamp mask
    let mut ga = vec![0.0; n + 1];

    // event terms: log lambda(t_l) = a_{l-1} + c (t_l - t_{l-1})
    let mut t_prev = 0.0;
    for l in 0..n {
        let dt = seq.events[l].t_s - t_prev;
        let raw = bases[l].0 + c * dt;
        let clamped = raw.clamp(-EXP_CLAMP, EXP_CLAMP);
        loglik += clamped;
        if raw == clamped {
            ga[l] += 1.0;
            g_cg += dt;
        }
        t_prev = seq.events[l].t_s;
    }

    // compensator segments
    for l in 0..=n {
        let start = if l == 0 { 0.0 } else { seq.events[l - 1].t_s };
        let end = if l == n {
            seq.horizon_s
        } else {
            seq.events[l].t_s
        };
        let dt = end - start;
        let a = bases[l].0;
        loglik -= super::generator::segment_integral(a, c, dt);
        ga[l] -= segment_da(a, c, dt);
        g_cg -= segment_dc(a, c, dt);
    }
    grads.c_g = Mat::scalar(g_cg);

    // propagate ga into w_g, b_g and the hidden chain (clamped bases block)
    let w_g = params.w_g.as_vec().to_vec();
    let mut carry = vec![0.0; h]; // W1^T e_{l+1}
    for l in (0..=n).rev() {
        let eff = if bases[l].1 { 0.0 } else { ga[l] };
        if eff != 0.0 {
            for i in 0..h {
                grads.w_g.data[i] += eff * hs[l][i];
            }
            grads.b_g.data[0] += eff;
        }
        if l == 0 {
            break; // h_0 is constant
        }
        // dL/dh_l
        let mut dh = carry.clone();
        if eff != 0.0 {
            for i in 0..h {
                dh[i] += eff * w_g[i];
            }
        }
        // through the ReLU of step l
        let pre = &pres[l - 1];
        let e: Vec<f64> = dh
            .iter()
            .zip(pre)
            .map(|(&d, &p)| if p > 0.0 { d } else { 0.0 })
            .collect();
        let ev = &seq.events[l - 1];
        grads.w1.add_outer(&e, &hs[l - 1], 1.0);
        grads.w2.add_outer(&e, &w2_input(ev), 1.0);
        let s = w3_input(ev);
        for i in 0..h {
            grads.w3.data[i] += e[i] * s;
            grads.b_h.data[i] += e[i];
        }
        carry = params.w1.matvec_t(&e);
    }

    (loglik, grads)
}

/// Accumulate the discriminator-objective gradient over one sequence.
fn disc_grads_into(
    events: &[SeqEvent],
    real: bool,
    params: &DiscriminatorParams,
    grads: &mut DiscriminatorParams,
) -> f64 {
    let h = params.hidden;
    let trace = disc_forward(events, params);
    let n = events.len();

    let mut objective = 0.0;
    let mut dv = vec![0.0; n];
    for l in 0..n {
        let d = trace.ds[l];
        if real {
            let arg = d.max(LOG_FLOOR);
            objective += arg.ln();
            dv[l] = if d >= LOG_FLOOR { 1.0 - d } else { 0.0 };
        } else {
            let arg = (1.0 - d).max(LOG_FLOOR);
            objective += arg.ln();
            dv[l] = if 1.0 - d >= LOG_FLOOR { -d } else { 0.0 };
        }
    }

    let w_out = params.w_out.as_vec().to_vec();
    let mut carry = vec![0.0; h]; // W4^T psi_{l+1}
    for l in (1..=n).rev() {
        let phi = &trace.phis[l];
        for i in 0..h {
            grads.w_out.data[i] += dv[l - 1] * phi[i];
        }
        let mut dphi = carry.clone();
        for i in 0..h {
            dphi[i] += dv[l - 1] * w_out[i];
        }
        let psi: Vec<f64> = dphi
            .iter()
            .zip(phi)
            .map(|(&d, &p)| d * p * (1.0 - p))
            .collect();
        grads.w4.add_outer(&psi, &trace.phis[l - 1], 1.0);
        grads.w5.add_outer(&psi, &w5_input(&events[l - 1]), 1.0);
        for i in 0..h {
            grads.b_d.data[i] += psi[i];
        }
        carry = params.w4.matvec_t(&psi);
    }
    objective
}

/// Discriminator objective over (real, fake) and its ascent gradient.
pub fn discriminator_grads(
    real: &[SeqEvent],
    fake: &[SeqEvent],
    params: &DiscriminatorParams,
) -> (f64, DiscriminatorParams) {
    let mut grads = DiscriminatorParams::zeros(params.hidden);
    let mut objective = disc_grads_into(real, true, params, &mut grads);
    objective += disc_grads_into(fake, false, params, &mut grads);
    (objective, grads)
}

/// Both objective values for one (real, fake) pair.
pub fn gan_loss(
    real: &Sequence,
    fake: &[SeqEvent],
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
) -> (f64, f64) {
    let ll = log_likelihood_seq(real, gen);
    let d_real = disc_forward(&real.events, disc);
    let d_fake = disc_forward(fake, disc);
    let real_term: f64 = d_real.ds.iter().map(|d| d.max(LOG_FLOOR).ln()).sum();
    let fake_term: f64 = d_fake
        .ds
        .iter()
        .map(|d| (1.0 - d).max(LOG_FLOOR).ln())
        .sum();
    let generator_loss = -ll + fake_term;
    let discriminator_objective = real_term + fake_term;
    (generator_loss, discriminator_objective)
}

fn finite(mat: &Mat) -> bool {
    mat.data.iter().all(|v| v.is_finite())
}

fn apply_step(param: &mut Mat, grad: &Mat, lr: f64, sign: f64) {
    for (p, g) in param.data.iter_mut().zip(&grad.data) {
        *p += sign * lr * g.clamp(-GRAD_CLIP, GRAD_CLIP);
    }
}

/// Descent step on the generator loss. Returns false (no-op) on a
/// non-finite gradient.
pub fn sgd_step_generator(params: &mut GeneratorParams, grads: &GeneratorParams, lr: f64) -> bool {
    if !grads.tensors().iter().all(|(_, m)| finite(m)) {
        return false;
    }
    for ((_, p), (_, g)) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        apply_step(p, g, lr, -1.0);
    }
    true
}

/// Ascent step on the discriminator objective. Returns false on a
/// non-finite gradient.
pub fn sgd_step_discriminator(
    params: &mut DiscriminatorParams,
    grads: &DiscriminatorParams,
    lr: f64,
) -> bool {
    if !grads.tensors().iter().all(|(_, m)| finite(m)) {
        return false;
    }
    for ((_, p), (_, g)) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        apply_step(p, g, lr, 1.0);
    }
    true
}

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

const FD_EPS: f64 = 1e-5;

/// Worst relative error found for one tensor.
#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub seeds: u32,
    pub tensor_checks: Vec<TensorCheck>,
    pub max_rel_err: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

// The denominator floor sets the scale below which a gradient counts as
// zero: with loss values of order 10, the central difference itself only
// resolves ~1e-10, so comparing entries smaller than 1e-4 relatively would
// measure f64 cancellation noise, not the analytic gradient.
fn rel_err(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(1e-4)
}

fn random_sequence<R: Rng>(n: usize, mu: f64, beta: f64, rng: &mut R) -> Sequence {
    let mut t = 0.0;
    let events: Vec<SeqEvent> = (0..n)
        .map(|_| {
            t += 0.2 + 0.8 * rng.random::<f64>();
            let alpha = f64::from(rng.random::<f64>() < 0.5);
            let eta = crate::gan::generator::sample_noise(mu, rng);
            let gamma = alpha * crate::gan::generator::gamma_from_noise(eta);
            let m = alpha * rng.random::<f64>();
            let r = alpha * rng.random::<f64>();
            let _ = beta;
            SeqEvent {
                t_s: t,
                alpha,
                gamma,
                m,
                r,
                eta,
            }
        })
        .collect();
    Sequence {
        horizon_s: t + 0.5,
        events,
    }
}

/// Compare analytic BPTT gradients of both objectives against central
/// finite differences, over `seeds` random (params, sequences) draws.
pub fn check_gradients(
    base_seed: u64,
    seeds: u32,
    hidden: usize,
    events: usize,
) -> GradCheckReport {
    let mut worst: Vec<TensorCheck> = Vec::new();
    let mut record = |name: &str, err: f64| {
        if let Some(tc) = worst.iter_mut().find(|tc| tc.name == name) {
            if err > tc.max_rel_err {
                tc.max_rel_err = err;
            }
        } else {
            worst.push(TensorCheck {
                name: name.to_string(),
                max_rel_err: err,
            });
        }
    };

    for s in 0..seeds {
        let mut prng = stream(base_seed, "gradcheck-params", u64::from(s));
        let mut gen = GeneratorParams::init(hidden, 1.0, 2.0, &mut prng);
        // biases drawn too so no pre-activation sits exactly on the kink
        for v in gen.b_h.data.iter_mut().chain(gen.b_g.data.iter_mut()) {
            *v = prng.random::<f64>() * 0.2 - 0.1;
        }
        let mut disc = DiscriminatorParams::init(hidden, &mut prng);
        for v in disc.b_d.data.iter_mut() {
            *v = prng.random::<f64>() * 0.2 - 0.1;
        }

        let mut srng = stream(base_seed, "gradcheck-seq", u64::from(s));
        let real = random_sequence(events, gen.mu, gen.beta, &mut srng);
        let fake = random_sequence(events, gen.mu, gen.beta, &mut srng);

        // generator objective wrt theta_G
        let (_, ll_grads) = likelihood_grads(&real, &gen);
        let gen_names: Vec<&'static str> = gen.tensors().iter().map(|(n, _)| *n).collect();
        for name in gen_names {
            let len = gen
                .tensors()
                .iter()
                .find(|(n, _)| *n == name)
                .unwrap()
                .1
                .data
                .len();
            for k in 0..len {
                let analytic = -ll_grads
                    .tensors()
                    .iter()
                    .find(|(n, _)| *n == name)
                    .unwrap()
                    .1
                    .data[k];
                let probe = |delta: f64| -> f64 {
                    let mut g = gen.clone();
                    for (n, m) in g.tensors_mut() {
                        if n == name {
                            m.data[k] += delta;
                        }
                    }
                    gan_loss(&real, &fake.events, &g, &disc).0
                };
                let fd = (probe(FD_EPS) - probe(-FD_EPS)) / (2.0 * FD_EPS);
                record(name, rel_err(analytic, fd));
            }
        }

        // discriminator objective wrt theta_D
        let (_, d_grads) = discriminator_grads(&real.events, &fake.events, &disc);
        let disc_names: Vec<&'static str> = disc.tensors().iter().map(|(n, _)| *n).collect();
        for name in disc_names {
            let len = disc
                .tensors()
                .iter()
                .find(|(n, _)| *n == name)
                .unwrap()
                .1
                .data
                .len();
            for k in 0..len {
                let analytic = d_grads
                    .tensors()
                    .iter()
                    .find(|(n, _)| *n == name)
                    .unwrap()
                    .1
                    .data[k];
                let probe = |delta: f64| -> f64 {
                    let mut d = disc.clone();
                    for (n, m) in d.tensors_mut() {
                        if n == name {
                            m.data[k] += delta;
                        }
                    }
                    gan_loss(&real, &fake.events, &gen, &d).1
                };
                let fd = (probe(FD_EPS) - probe(-FD_EPS)) / (2.0 * FD_EPS);
                record(name, rel_err(analytic, fd));
            }
        }
    }

    let max_rel_err = worst.iter().map(|tc| tc.max_rel_err).fold(0.0f64, f64::max);
    GradCheckReport {
        seeds,
        tensor_checks: worst,
        max_rel_err,
    }
}
