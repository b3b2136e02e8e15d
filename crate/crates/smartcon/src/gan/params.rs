//! Trainable parameter containers for the generator and discriminator.

use rand::Rng;

use super::linalg::Mat;

/// Exponent clamp for the intensity; keeps exp() finite in long rollouts.
pub const EXP_CLAMP: f64 = 50.0;
/// Floor applied to log arguments in the adversarial objective.
pub const LOG_FLOOR: f64 = 1e-12;
/// Elementwise gradient clip.
pub const GRAD_CLIP: f64 = 5.0;

/// Generator parameters: the recurrence (W1, W2, W3, b_h), the scheduling
/// gate (w_alpha), the intensity readout (w_g, c_g, b_g), and the
/// distribution constants mu (Poisson noise prior) and beta (exponential
/// shape for the MCS/repetition draws).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub hidden: usize,
    pub mu: f64,
    pub beta: f64,
    pub w1: Mat,      // H x H
    pub w2: Mat,      // H x 3, inputs (a*gamma, a*m, a*r)
    pub w3: Mat,      // H x 1
    pub b_h: Mat,     // H x 1
    pub w_alpha: Mat, // H x 1
    pub w_g: Mat,     // H x 1
    pub c_g: Mat,     // 1 x 1
    pub b_g: Mat,     // 1 x 1
}

/// Discriminator parameters: recurrence (W4, W5, b_d) plus the scalar
/// probability readout w_out.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub hidden: usize,
    pub w4: Mat,    // H x H
    pub w5: Mat,    // H x 3, inputs (a, a*g*m, a*g*r)
    pub b_d: Mat,   // H x 1
    pub w_out: Mat, // H x 1
}

fn uniform_mat<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    let data = (0..rows * cols)
        .map(|_| rng.random::<f64>() * 0.2 - 0.1)
        .collect();
    Mat::from_rows(rows, cols, data)
}

impl GeneratorParams {
    /// Weights ~ U(-0.1, 0.1), biases zero.
    pub fn init<R: Rng>(hidden: usize, mu: f64, beta: f64, rng: &mut R) -> Self {
        GeneratorParams {
            hidden,
            mu,
            beta,
            w1: uniform_mat(hidden, hidden, rng),
            w2: uniform_mat(hidden, 3, rng),
            w3: uniform_mat(hidden, 1, rng),
            b_h: Mat::zeros(hidden, 1),
            w_alpha: uniform_mat(hidden, 1, rng),
            w_g: uniform_mat(hidden, 1, rng),
            c_g: uniform_mat(1, 1, rng),
            b_g: Mat::scalar(0.0),
        }
    }

    pub fn zeros(hidden: usize, mu: f64, beta: f64) -> Self {
        GeneratorParams {
            hidden,
            mu,
            beta,
            w1: Mat::zeros(hidden, hidden),
            w2: Mat::zeros(hidden, 3),
            w3: Mat::zeros(hidden, 1),
            b_h: Mat::zeros(hidden, 1),
            w_alpha: Mat::zeros(hidden, 1),
            w_g: Mat::zeros(hidden, 1),
            c_g: Mat::scalar(0.0),
            b_g: Mat::scalar(0.0),
        }
    }

    pub fn tensors(&self) -> [(&'static str, &Mat); 8] {
        [
            ("W1", &self.w1),
            ("W2", &self.w2),
            ("W3", &self.w3),
            ("b_h", &self.b_h),
            ("w_alpha", &self.w_alpha),
            ("W_g", &self.w_g),
            ("c_g", &self.c_g),
            ("b_g", &self.b_g),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Mat); 8] {
        [
            ("W1", &mut self.w1),
            ("W2", &mut self.w2),
            ("W3", &mut self.w3),
            ("b_h", &mut self.b_h),
            ("w_alpha", &mut self.w_alpha),
            ("W_g", &mut self.w_g),
            ("c_g", &mut self.c_g),
            ("b_g", &mut self.b_g),
        ]
    }
}

impl DiscriminatorParams {
    pub fn init<R: Rng>(hidden: usize, rng: &mut R) -> Self {
        DiscriminatorParams {
            hidden,
            w4: uniform_mat(hidden, hidden, rng),
            w5: uniform_mat(hidden, 3, rng),
            b_d: Mat::zeros(hidden, 1),
            w_out: uniform_mat(hidden, 1, rng),
        }
    }

    pub fn zeros(hidden: usize) -> Self {
        DiscriminatorParams {
            hidden,
            w4: Mat::zeros(hidden, hidden),
            w5: Mat::zeros(hidden, 3),
            b_d: Mat::zeros(hidden, 1),
            w_out: Mat::zeros(hidden, 1),
        }
    }

    pub fn tensors(&self) -> [(&'static str, &Mat); 4] {
        [
            ("W4", &self.w4),
            ("W5", &self.w5),
            ("b_d", &self.b_d),
            ("w_out", &self.w_out),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Mat); 4] {
        [
            ("W4", &mut self.w4),
            ("W5", &mut self.w5),
            ("b_d", &mut self.b_d),
            ("w_out", &mut self.w_out),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn init_respects_ranges_and_zero_biases() {
        let mut rng = stream(11, "init", 0);
        let g = GeneratorParams::init(16, 1.0, 2.0, &mut rng);
        for v in &g.w1.data {
            assert!(v.abs() <= 0.1);
        }
        assert!(g.b_h.data.iter().all(|&v| v == 0.0));
        assert_eq!(g.b_g.value(), 0.0);
        let d = DiscriminatorParams::init(16, &mut rng);
        assert!(d.b_d.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = GeneratorParams::init(8, 1.0, 2.0, &mut stream(5, "init", 0));
        let b = GeneratorParams::init(8, 1.0, 2.0, &mut stream(5, "init", 0));
        assert_eq!(a, b);
    }
}
