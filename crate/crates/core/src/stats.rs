//! Binomial proportion intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal quantile.
pub fn z_quantile(q: f64) -> f64 {
    Normal::standard().inverse_cdf(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

fn wilson_with_z(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // pin the closed ends so that 0 and 1 are reported exactly
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    Interval { lo, hi }
}

/// Two-sided Wilson score interval at the given confidence level.
pub fn wilson(successes: u64, trials: u64, confidence: f64) -> Interval {
    wilson_with_z(successes, trials, z_quantile(0.5 + confidence / 2.0))
}

/// One-sided Wilson upper bound at the given confidence level.
pub fn wilson_upper(successes: u64, trials: u64, confidence: f64) -> f64 {
    wilson_with_z(successes, trials, z_quantile(confidence)).hi
}

/// An estimated proportion with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub confidence: f64,
    pub ci: Interval,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64, confidence: f64) -> Self {
        Self {
            successes,
            trials,
            estimate: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            confidence,
            ci: wilson(successes, trials, confidence),
        }
    }

    pub fn se(&self) -> f64 {
        proportion_se(self.estimate, self.trials)
    }
}

/// Standard error of a proportion.
pub fn proportion_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((z_quantile(0.975) - 1.959964).abs() < 1e-5);
        assert!((z_quantile(0.995) - 2.575829).abs() < 1e-5);
    }

    #[test]
    fn wilson_known_value() {
        // 10 of 100 at 95%: (0.0552, 0.1744)
        let ci = wilson(10, 100, 0.95);
        assert!((ci.lo - 0.05523).abs() < 1e-4);
        assert!((ci.hi - 0.17437).abs() < 1e-4);
    }

    #[test]
    fn wilson_at_the_ends() {
        let zero = wilson(0, 1000, 0.99);
        assert_eq!(zero.lo, 0.0);
        assert!(zero.hi > 0.0 && zero.hi < 0.01);
        let all = wilson(50, 50, 0.99);
        assert_eq!(all.hi, 1.0);
        assert!(wilson_upper(0, 10_000, 0.99) < wilson(0, 10_000, 0.99).hi);
    }
}
