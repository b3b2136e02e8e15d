//! Discriminator forward path: a sigmoid recurrence over label triples with
//! a scalar probability readout per step.

use super::linalg::{dot, sigmoid};
use super::params::DiscriminatorParams;
use super::SeqEvent;

/// The W5 input vector (alpha, alpha*gamma*m, alpha*gamma*r) of one step.
///
/// gamma and delta have no effect when alpha is zero; the whole vector
/// vanishes, which protects against noise in the input data.
#[inline]
pub(crate) fn w5_input(ev: &SeqEvent) -> [f64; 3] {
    [
        ev.alpha,
        ev.alpha * ev.gamma * ev.m,
        ev.alpha * ev.gamma * ev.r,
    ]
}

/// Forward caches for one scored sequence.
pub(crate) struct DiscTrace {
    /// phi_0..phi_n (phi_0 = 0).
    pub phis: Vec<Vec<f64>>,
    /// Per-step probabilities D_l = sigma(w_out . phi_l).
    pub ds: Vec<f64>,
}

pub(crate) fn forward(events: &[SeqEvent], params: &DiscriminatorParams) -> DiscTrace {
    let mut phis = Vec::with_capacity(events.len() + 1);
    phis.push(vec![0.0; params.hidden]);
    let mut ds = Vec::with_capacity(events.len());
    for ev in events {
        let mut q = params.w4.matvec(phis.last().unwrap());
        let z = w5_input(ev);
        let wz = params.w5.matvec(&z);
        for i in 0..params.hidden {
            q[i] = sigmoid(q[i] + wz[i] + params.b_d.as_vec()[i]);
        }
        ds.push(sigmoid(dot(params.w_out.as_vec(), &q)));
        phis.push(q);
    }
    DiscTrace { phis, ds }
}

/// Per-step probabilities that each step of the sequence is real.
pub fn discriminator_score(events: &[SeqEvent], params: &DiscriminatorParams) -> Vec<f64> {
    forward(events, params).ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gan::linalg::Mat;

    fn event(alpha: f64, gamma: f64, m: f64, r: f64) -> SeqEvent {
        SeqEvent {
            t_s: 0.0,
            alpha,
            gamma,
            m,
            r,
            eta: 0.0,
        }
    }

    #[test]
    fn zero_params_score_half() {
        let p = DiscriminatorParams::zeros(4);
        let ds = discriminator_score(&[event(1.0, 0.3, 0.5, 0.5)], &p);
        assert_eq!(ds, vec![0.5]);
    }

    /// Perturbing gamma/delta on an alpha = 0 step leaves the score bitwise
    /// unchanged.
    #[test]
    fn idle_steps_mask_their_labels() {
        let mut p = DiscriminatorParams::zeros(3);
        p.w4 = Mat::from_rows(3, 3, vec![0.1; 9]);
        p.w5 = Mat::from_rows(3, 3, vec![0.2, -0.3, 0.4, 0.1, 0.0, -0.2, 0.3, 0.2, 0.1]);
        p.w_out = Mat::from_rows(3, 1, vec![0.5, -0.5, 0.25]);
        let base = vec![event(1.0, 0.3, 0.4, 0.2), event(0.0, 0.0, 0.0, 0.0)];
        let perturbed = vec![event(1.0, 0.3, 0.4, 0.2), event(0.0, 0.9, 0.7, 0.3)];
        let a = discriminator_score(&base, &p);
        let b = discriminator_score(&perturbed, &p);
        assert_eq!(a, b);
    }

    /// Hand evaluation at H = 1: D = sigma(w_out * sigma(W5 . z)).
    #[test]
    fn single_unit_hand_trace() {
        let mut p = DiscriminatorParams::zeros(1);
        p.w5 = Mat::from_rows(1, 3, vec![1.0, 0.0, 0.0]);
        p.w_out = Mat::scalar(2.0);
        let ds = discriminator_score(&[event(1.0, 0.0, 0.0, 0.0)], &p);
        let expected = sigmoid(2.0 * sigmoid(1.0));
        assert!((ds[0] - expected).abs() < 1e-15);
        assert!((ds[0] - 0.8118).abs() < 1e-3);
    }

    #[test]
    fn scores_are_probabilities() {
        let mut rng = crate::rng::stream(17, "disc", 0);
        let p = DiscriminatorParams::init(6, &mut rng);
        use rand::Rng;
        let events: Vec<SeqEvent> = (0..40)
            .map(|_| {
                let alpha = f64::from(rng.random::<f64>() < 0.5);
                event(
                    alpha,
                    alpha * rng.random::<f64>() * 0.4,
                    alpha * rng.random::<f64>(),
                    alpha * rng.random::<f64>(),
                )
            })
            .collect();
        for d in discriminator_score(&events, &p) {
            assert!(d > 0.0 && d < 1.0);
        }
    }
}
