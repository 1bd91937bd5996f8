//! Planck-weight sampling of the emitted quantum's x = βħω.
//!
//! With G(x) = −ln(1 − e^{−x}) the unnormalised CDF on [x_min, x] is
//! G(x_min) − G(x), and G is its own inverse, so inversion is closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::planck_tail;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanckSampler {
    x_min: f64,
    x_max: f64,
    g_min: f64,
    g_max: f64,
}

impl PlanckSampler {
    pub fn new(x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
            return Err(Error::Domain(format!("sampling bounds need 0 < x_min < x_max < inf, got [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, g_min: planck_tail(x_min), g_max: planck_tail(x_max) })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// u = 0 gives x_max, u = 1 gives x_min.
    pub fn x_from_uniform(&self, u: f64) -> f64 {
        let g = self.g_max + u * (self.g_min - self.g_max);
        planck_tail(g).clamp(self.x_min, self.x_max)
    }

    /// Normalised CDF of the 1/(e^x − 1) density on [x_min, x_max].
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.x_min {
            0.0
        } else if x >= self.x_max {
            1.0
        } else {
            (self.g_min - planck_tail(x)) / (self.g_min - self.g_max)
        }
    }

    pub fn sample_x<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.x_from_uniform(rng.random::<f64>())
    }

    /// Energy ħω = x/β of one draw.
    pub fn sample_energy<R: Rng + ?Sized>(&self, beta: f64, rng: &mut R) -> Result<f64> {
        crate::error::require_positive("beta", beta)?;
        Ok(self.sample_x(rng) / beta)
    }
}

/// Deterministic generator for the stream `name` under `seed`. Distinct
/// names give independent ChaCha streams from the same key.
pub fn named_stream(seed: u64, name: &str) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Largest gap between the empirical CDF of `draws` and `cdf`. Sorts in place.
pub fn ks_statistic(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
