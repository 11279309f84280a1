//! Binomial proportions and their normal-approximation intervals.

use serde::Serialize;

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// `successes` out of `trials` Bernoulli outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        debug_assert!(successes <= trials);
        Proportion { successes, trials }
    }

    /// Empirical frequency; 0 for no trials.
    pub fn mean(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.mean();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Half-width of the 99% Wald interval. Zero at frequencies 0 and 1.
    pub fn half_width(&self) -> f64 {
        Z_99 * self.std_error()
    }

    /// The 99% Wald interval clamped to `[0, 1]`.
    pub fn interval(&self) -> (f64, f64) {
        let (p, h) = (self.mean(), self.half_width());
        ((p - h).max(0.0), (p + h).min(1.0))
    }
}

/// Mean of paired differences `a_t - b_t` with `a_t, b_t` in `{0, 1}`, and
/// the 99% normal half-width of that mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairedDifference {
    pub trials: u64,
    pub a_only: u64,
    pub b_only: u64,
    pub mean: f64,
    pub half_width: f64,
}

impl PairedDifference {
    pub fn new(trials: u64, a_only: u64, b_only: u64) -> Self {
        if trials == 0 {
            return PairedDifference {
                trials,
                a_only,
                b_only,
                mean: 0.0,
                half_width: 0.0,
            };
        }
        let t = trials as f64;
        let mean = (a_only as f64 - b_only as f64) / t;
        let second = (a_only + b_only) as f64 / t;
        let var = (second - mean * mean).max(0.0);
        PairedDifference {
            trials,
            a_only,
            b_only,
            mean,
            half_width: Z_99 * (var / t).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_frequencies_have_zero_width() {
        assert_eq!(Proportion::new(10, 10).half_width(), 0.0);
        assert_eq!(Proportion::new(0, 10).interval(), (0.0, 0.0));
        assert_eq!(Proportion::new(0, 0).mean(), 0.0);
    }

    #[test]
    fn wald_width_at_one_half() {
        let p = Proportion::new(5_000, 10_000);
        assert!((p.half_width() - Z_99 * 0.005).abs() < 1e-15);
    }

    #[test]
    fn paired_difference() {
        let d = PairedDifference::new(100, 10, 4);
        assert!((d.mean - 0.06).abs() < 1e-15);
        // Var = E[D^2] - mean^2 = 0.14 - 0.0036.
        assert!((d.half_width - Z_99 * (0.1364f64 / 100.0).sqrt()).abs() < 1e-12);
        assert_eq!(PairedDifference::new(50, 0, 0).half_width, 0.0);
    }
}
