//! Drift detection for the deployed model: low correlation between the
//! recent loss-rate window and a training-time sample signals retraining.

/// Pearson correlation coefficient; `None` when either series is shorter
/// than 2 or has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    // constant series carry no correlation signal
    if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// True when the recent PLR window no longer correlates with the training
/// sample (correlation below `threshold`). Zero variance is treated as no
/// evidence of drift.
pub fn should_retrain(recent: &[f64], training_sample: &[f64], threshold: f64) -> bool {
    match pearson(recent, training_sample) {
        Some(r) => r < threshold,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_never_retrain() {
        let x = vec![0.1, 0.4, 0.2, 0.3];
        assert!(!should_retrain(&x, &x, 0.3));
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negated_series_always_retrain() {
        let x = vec![0.1, 0.4, 0.2, 0.3];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!(should_retrain(&x, &y, 0.3));
    }

    /// Hand-computed example: r = 0.065 / sqrt(0.05 * 0.0875).
    #[test]
    fn near_linear_series_do_not_retrain() {
        let x = [0.1, 0.2, 0.3, 0.4];
        let y = [0.1, 0.2, 0.3, 0.5];
        let r = pearson(&x, &y).unwrap();
        assert!((r - 0.9827076298239907).abs() < 1e-12);
        assert!(!should_retrain(&x, &y, 0.3));
    }

    #[test]
    fn zero_variance_is_not_drift() {
        let flat = [0.2, 0.2, 0.2];
        let moving = [0.1, 0.5, 0.9];
        assert_eq!(pearson(&flat, &moving), None);
        assert!(!should_retrain(&flat, &moving, 0.3));
        assert!(!should_retrain(&moving, &flat, 0.3));
        assert!(!should_retrain(&[0.1], &[0.2], 0.3));
    }
}
