//! Small summary-statistics helpers for Monte Carlo reports.

use serde::Serialize;

/// Mean, sample standard deviation and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
}

impl Summary {
    /// Sums are taken in slice order, so results do not depend on how the
    /// samples were produced.
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { count, mean: f64::NAN, std_dev: f64::NAN, std_err: f64::NAN };
        }
        let mean = neumaier_sum(values.iter().copied()) / count as f64;
        let std_dev = if count > 1 {
            (neumaier_sum(values.iter().map(|v| (v - mean).powi(2))) / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { count, mean, std_dev, std_err: std_dev / (count as f64).sqrt() }
    }

    /// `|mean - target| <= k * std_err`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

/// Compensated summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_known_sample() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.std_err - s.std_dev / 2.0).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).std_dev, 0.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(neumaier_sum(v), 1.0);
    }

    #[test]
    fn wilson_brackets_proportion() {
        let (lo, hi) = wilson_interval(250, 1000);
        assert!(lo < 0.25 && 0.25 < hi);
        assert!(hi - lo < 0.06);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }
}
