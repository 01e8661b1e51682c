//! Synthetic sample generators.
//!
//! All randomness comes from a ChaCha20 stream seeded with the 64-bit seed
//! (`seed_from_u64`), consumed one `u64` at a time. Uniforms are
//! `(⌊u / 2^12⌋ + 0.5) / 2^52`, which never hit 0 or 1. Gaussians use the
//! inverse normal CDF; `Beta(a, b)` draws with integer shapes use
//! `G_a / (G_a + G_b)` where `G_k = -Σ_{i<k} ln U_i`.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::error::CliError;

pub const GAUSS5_WEIGHTS: [f64; 5] = [0.6, 0.05, 0.15, 0.1, 0.1];
pub const GAUSS5_MEANS: [f64; 5] = [0.0, 4.0, 5.5, -3.5, -4.5];
pub const GAUSS5_SDS: [f64; 5] = [1.0, 0.5, 1.0, 0.25, 0.25];
pub const BETA_CONCAVE_WEIGHTS: [f64; 5] = [0.05, 0.3, 0.3, 0.3, 0.05];
pub const BETA_CONVEX_INCREASING_WEIGHTS: [f64; 5] = [0.05, 0.05, 0.1, 0.25, 0.55];
/// Half-normal draws at or above this value are discarded; the rest are divided by it.
pub const HALFNORMAL_CUTOFF: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Gauss5,
    BetaConcave,
    BetaConvexIncreasing,
    HalfNormal,
}

impl Profile {
    pub const ALL: [Profile; 4] =
        [Profile::Gauss5, Profile::BetaConcave, Profile::BetaConvexIncreasing, Profile::HalfNormal];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Gauss5 => "gauss5",
            Profile::BetaConcave => "beta_concave",
            Profile::BetaConvexIncreasing => "beta_convex_increasing",
            Profile::HalfNormal => "halfnormal",
        }
    }

    /// Cumulative distribution function of the profile's true law.
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Profile::Gauss5 => GAUSS5_WEIGHTS
                .iter()
                .zip(GAUSS5_MEANS.iter().zip(&GAUSS5_SDS))
                .map(|(w, (mu, sd))| w * Normal::new(*mu, *sd).expect("valid").cdf(x))
                .sum(),
            Profile::BetaConcave => bernstein_mixture_cdf(&BETA_CONCAVE_WEIGHTS, x),
            Profile::BetaConvexIncreasing => bernstein_mixture_cdf(&BETA_CONVEX_INCREASING_WEIGHTS, x),
            Profile::HalfNormal => {
                let z = Normal::new(0.0, 1.0).expect("valid");
                let t = (x.clamp(0.0, 1.0)) * HALFNORMAL_CUTOFF;
                (2.0 * z.cdf(t) - 1.0) / (2.0 * z.cdf(HALFNORMAL_CUTOFF) - 1.0)
            }
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Profile::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            CliError::usage(format!(
                "unknown profile {s:?}; expected one of gauss5, beta_concave, beta_convex_increasing, halfnormal"
            ))
        })
    }
}

fn bernstein_mixture_cdf(weights: &[f64], x: f64) -> f64 {
    let big_m = weights.len() as f64;
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let m = (i + 1) as f64;
            w * Beta::new(m, big_m - m + 1.0).expect("valid").cdf(x.clamp(0.0, 1.0))
        })
        .sum()
}

/// The uniform and derived variates used by [`sample`].
pub struct Stream {
    rng: ChaCha20Rng,
    normal: Normal,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha20Rng::seed_from_u64(seed), normal: Normal::new(0.0, 1.0).expect("valid") }
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    pub fn gaussian(&mut self) -> f64 {
        let u = self.uniform();
        self.normal.inverse_cdf(u)
    }

    /// `Gamma(k, 1)` for integer `k ≥ 1`.
    pub fn gamma_int(&mut self, k: u32) -> f64 {
        (0..k).map(|_| -self.uniform().ln()).sum()
    }

    pub fn beta_int(&mut self, a: u32, b: u32) -> f64 {
        let x = self.gamma_int(a);
        let y = self.gamma_int(b);
        x / (x + y)
    }

    /// Index drawn with probabilities `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        weights.len() - 1
    }
}

/// Draws `n` samples from `profile`.
pub fn sample(profile: Profile, n: usize, seed: u64) -> Vec<f64> {
    let mut s = Stream::new(seed);
    let bernstein = |s: &mut Stream, weights: &[f64]| {
        let big_m = weights.len() as u32;
        let m = s.categorical(weights) as u32 + 1;
        s.beta_int(m, big_m - m + 1)
    };
    (0..n)
        .map(|_| match profile {
            Profile::Gauss5 => {
                let c = s.categorical(&GAUSS5_WEIGHTS);
                GAUSS5_MEANS[c] + GAUSS5_SDS[c] * s.gaussian()
            }
            Profile::BetaConcave => bernstein(&mut s, &BETA_CONCAVE_WEIGHTS),
            Profile::BetaConvexIncreasing => bernstein(&mut s, &BETA_CONVEX_INCREASING_WEIGHTS),
            Profile::HalfNormal => loop {
                let z = s.gaussian().abs();
                if z < HALFNORMAL_CUTOFF {
                    break z / HALFNORMAL_CUTOFF;
                }
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniforms_stay_open() {
        let mut s = Stream::new(0);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
        let half_step = 0.5 / (1u64 << 52) as f64;
        let largest = ((1u64 << 52) - 1) as f64 / (1u64 << 52) as f64 + half_step;
        assert!(half_step > 0.0 && largest < 1.0);
    }

    #[test]
    fn same_seed_same_stream() {
        for p in Profile::ALL {
            assert_eq!(sample(p, 100, 42), sample(p, 100, 42));
            assert_ne!(sample(p, 100, 42), sample(p, 100, 43));
        }
    }

    #[test]
    fn cdfs_are_distribution_functions() {
        for p in [Profile::BetaConcave, Profile::BetaConvexIncreasing, Profile::HalfNormal] {
            assert!(p.cdf(0.0).abs() < 1e-15);
            assert!((p.cdf(1.0) - 1.0).abs() < 1e-12);
        }
        assert!((Profile::Gauss5.cdf(50.0) - 1.0).abs() < 1e-15);
        assert!(Profile::Gauss5.cdf(-50.0) < 1e-15);
    }

    #[test]
    fn beta_concave_mean() {
        // Beta(m, 6 - m) has mean m / 6
        let mean: f64 = BETA_CONCAVE_WEIGHTS.iter().enumerate().map(|(i, w)| w * (i + 1) as f64 / 6.0).sum();
        let second: f64 = BETA_CONCAVE_WEIGHTS
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let (a, b) = ((i + 1) as f64, (5 - i) as f64);
                w * a * (a + 1.0) / ((a + b) * (a + b + 1.0))
            })
            .sum();
        let n = 100_000;
        let xs = sample(Profile::BetaConcave, n, 11);
        let emp = xs.iter().sum::<f64>() / n as f64;
        let se = ((second - mean * mean) / n as f64).sqrt();
        assert!((emp - mean).abs() <= 3.0 * se, "{emp} vs {mean} (se {se})");
    }

    #[test]
    fn unknown_profile_is_usage_error() {
        assert!(matches!("gauss6".parse::<Profile>(), Err(CliError::Usage(_))));
        assert_eq!("halfnormal".parse::<Profile>().unwrap(), Profile::HalfNormal);
    }
}
