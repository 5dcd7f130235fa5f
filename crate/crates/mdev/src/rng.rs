//! Counter-addressable Gaussian noise for replicated simulations.
//!
//! Every standard-normal draw is a pure function of
//! `(seed, rep_index, step, coord)`, so replications can run in any order
//! (or in parallel) and still produce bit-identical trajectories. Each
//! index is folded into the state through a full splitmix64 avalanche
//! before the next one, and the normal variate is produced by Box-Muller
//! from two dedicated uniform lanes — an exact transform, not a CLT
//! approximation.

use std::f64::consts::PI;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn counter_hash(seed: u64, rep_index: u64, step: u64, coord: u64, lane: u64) -> u64 {
    let mut z = mix(seed ^ GAMMA);
    z = mix(z ^ rep_index.wrapping_mul(GAMMA).wrapping_add(1));
    z = mix(z ^ step.wrapping_mul(GAMMA).wrapping_add(2));
    z = mix(z ^ (coord.wrapping_mul(4).wrapping_add(lane)).wrapping_mul(GAMMA).wrapping_add(3));
    mix(z)
}

/// Uniform draw in (0, 1] from the top 53 bits; never returns 0, so
/// `ln(u)` below stays finite.
#[inline]
fn uniform_open(seed: u64, rep_index: u64, step: u64, coord: u64, lane: u64) -> f64 {
    let bits = counter_hash(seed, rep_index, step, coord, lane) >> 11;
    (bits as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
}

/// Deterministic standard-normal variate addressed by
/// `(seed, rep_index, step, coord)`.
#[inline]
pub fn noise_value(seed: u64, rep_index: u64, step: u64, coord: u64) -> f64 {
    let u1 = uniform_open(seed, rep_index, step, coord, 0);
    let u2 = uniform_open(seed, rep_index, step, coord, 1);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Deterministic uniform variate in (0, 1] on a lane disjoint from the
/// normal draws at the same indices.
#[inline]
pub fn uniform_value(seed: u64, rep_index: u64, step: u64, coord: u64) -> f64 {
    uniform_open(seed, rep_index, step, coord, 2)
}

/// Stream view over one replication's noise, used by the integrator.
#[derive(Debug, Clone, Copy)]
pub struct NoiseStream {
    seed: u64,
    rep_index: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, rep_index: u64) -> Self {
        Self { seed, rep_index }
    }

    #[inline]
    pub fn normal(&self, step: u64, coord: u64) -> f64 {
        noise_value(self.seed, self.rep_index, step, coord)
    }

    /// Fills `out` with the d-dimensional draw for one step.
    #[inline]
    pub fn fill_step(&self, step: u64, out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate() {
            *slot = self.normal(step, c as u64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::normal_tail;

    #[test]
    fn deterministic() {
        assert_eq!(noise_value(7, 3, 11, 0), noise_value(7, 3, 11, 0));
        assert_ne!(noise_value(7, 3, 11, 0), noise_value(7, 3, 12, 0));
        assert_ne!(noise_value(7, 3, 11, 0), noise_value(8, 3, 11, 0));
    }

    #[test]
    fn moments_of_a_million_draws() {
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for step in 0..n {
            let z = noise_value(42, 0, step, 0);
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn ks_against_standard_normal() {
        let n = 100_000usize;
        let mut draws: Vec<f64> = (0..n).map(|s| noise_value(1234, 5, s as u64, 0)).collect();
        draws.sort_by(|a, b| a.total_cmp(b));
        let mut ks = 0.0f64;
        for (i, x) in draws.iter().enumerate() {
            let cdf = 1.0 - normal_tail(*x);
            let hi = (i as f64 + 1.0) / n as f64 - cdf;
            let lo = cdf - i as f64 / n as f64;
            ks = ks.max(hi.abs()).max(lo.abs());
        }
        // 0.006 is the Kolmogorov critical value at n = 1e5, alpha ~ 1e-3.
        assert!(ks <= 0.006, "ks {ks}");
    }

    #[test]
    fn streams_are_uncorrelated() {
        let n = 50_000usize;
        let a: Vec<f64> = (0..n).map(|s| noise_value(9, 0, s as u64, 0)).collect();
        let b: Vec<f64> = (0..n).map(|s| noise_value(9, 1, s as u64, 0)).collect();
        let cross: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        assert!(cross.abs() <= 4.0 / (n as f64).sqrt(), "cross-corr {cross}");
        // Lag-1 autocorrelation of the concatenated streams.
        let concat: Vec<f64> = a.iter().chain(&b).copied().collect();
        let lag1: f64 = concat.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (2 * n - 1) as f64;
        assert!(lag1.abs() <= 4.0 / (2.0 * n as f64).sqrt(), "lag-1 {lag1}");
    }
}
