//! Seedable randomness plus the two skip distributions every sampler needs.
//!
//! [`RandomSource::geometric`] draws the gap to the next success in a run of
//! Bernoulli(`p`) trials. [`RandomSource::truncated_first`] draws the index of
//! the first success conditioned on at least one success among `nk` trials.
//! Both are single-uniform inverse-CDF draws.

use rand::{Rng, RngExt, SeedableRng};
use rand_pcg::Pcg64Mcg;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum RngError {
    #[error("success probability must lie in (0, 1], got {0}")]
    InvalidSuccessProbability(f64),
    #[error("conditioning probability must lie in (0, 1], got {0}")]
    InvalidConditioningProbability(f64),
    #[error("truncation length must be at least 1")]
    EmptyTruncation,
}

/// A seeded pseudo-random stream that also counts how many uniforms it
/// has handed out.
///
/// Not shareable between threads while in use; clone or seed a separate
/// source per thread instead.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: Pcg64Mcg,
    draws: u64,
}

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: Pcg64Mcg::seed_from_u64(seed),
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of primitive draws taken from this source so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform01(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * UNIT
    }

    /// Uniform on `(0, 1)`: a raw zero becomes the smallest positive double so
    /// that the logarithm stays finite.
    #[inline]
    fn open01(&mut self) -> f64 {
        let u = self.uniform01();
        if u == 0.0 {
            f64::from_bits(1)
        } else {
            u
        }
    }

    /// Uniform on `{0, ..., bound - 1}`.
    ///
    /// # Panics
    ///
    /// Panics if `bound` is zero.
    #[inline]
    pub fn uniform_int(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "uniform_int bound must be positive");
        self.draws += 1;
        self.rng.random_range(0..bound)
    }

    /// One draw from an arbitrary distribution, counted as a single draw.
    pub fn sample<T, D: rand_distr::Distribution<T>>(&mut self, dist: &D) -> T {
        self.draws += 1;
        dist.sample(&mut self.rng)
    }

    /// `true` with probability `p`. Certain and impossible events consume no
    /// randomness.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            self.uniform01() < p
        }
    }

    /// Index of the first success in Bernoulli(`p`) trials, starting at 1:
    /// `Pr[j = i] = (1 - p)^(i - 1) p`.
    pub fn geometric(&mut self, p: f64) -> Result<u64, RngError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(RngError::InvalidSuccessProbability(p));
        }
        Ok(self.geometric_with(log_complement(p)))
    }

    /// Geometric draw with `ln(1 - p)` precomputed. `-inf` means `p = 1`.
    #[inline]
    pub(crate) fn geometric_with(&mut self, ln_miss: f64) -> u64 {
        if ln_miss == f64::NEG_INFINITY {
            return 1;
        }
        // float-to-int casts saturate, so tiny `p` cannot wrap
        let skip = (self.open01().ln() / ln_miss).floor() as u64;
        skip.saturating_add(1)
    }

    /// First success among `nk` Bernoulli(`q`) trials conditioned on there
    /// being at least one: `Pr[j = i] = q (1 - q)^(i - 1) / p_group` for
    /// `1 <= i <= nk`, where `p_group = 1 - (1 - q)^nk`.
    pub fn truncated_first(&mut self, q: f64, p_group: f64, nk: u64) -> Result<u64, RngError> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(RngError::InvalidSuccessProbability(q));
        }
        if !(p_group > 0.0 && p_group <= 1.0) {
            return Err(RngError::InvalidConditioningProbability(p_group));
        }
        if nk == 0 {
            return Err(RngError::EmptyTruncation);
        }
        Ok(self.truncated_first_with(log_complement(q), p_group, nk))
    }

    #[inline]
    pub(crate) fn truncated_first_with(&mut self, ln_miss: f64, p_group: f64, nk: u64) -> u64 {
        if ln_miss == f64::NEG_INFINITY || nk == 1 {
            return 1;
        }
        let u = self.uniform01();
        let j = ((-u * p_group).ln_1p() / ln_miss).ceil();
        // boundary overshoot from rounding lands back inside [1, nk]
        (j as u64).clamp(1, nk)
    }
}

/// `ln(1 - p)`, evaluated without cancellation for small `p`.
#[inline]
pub(crate) fn log_complement(p: f64) -> f64 {
    if p >= 1.0 {
        f64::NEG_INFINITY
    } else {
        (-p).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::goodness_of_fit;

    #[test]
    fn uniform01_range_and_determinism() {
        let mut a = RandomSource::new(11);
        let mut b = RandomSource::new(11);
        for _ in 0..1000 {
            let x = a.uniform01();
            assert!((0.0..1.0).contains(&x));
            assert_eq!(x.to_bits(), b.uniform01().to_bits());
        }
        assert_eq!(a.draws(), 1000);
    }

    #[test]
    fn uniform01_mean() {
        let mut src = RandomSource::new(3);
        let n = 1_000_000;
        let mean = (0..n).map(|_| src.uniform01()).sum::<f64>() / n as f64;
        // sd of the mean is sqrt(1/12 / 1e6) ~ 2.9e-4
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn uniform_int_stays_in_range() {
        let mut src = RandomSource::new(5);
        let mut seen = [0u32; 7];
        for _ in 0..70_000 {
            seen[src.uniform_int(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 9_000));
    }

    #[test]
    fn geometric_rejects_bad_parameters() {
        let mut src = RandomSource::new(1);
        assert!(src.geometric(0.0).is_err());
        assert!(src.geometric(-0.1).is_err());
        assert!(src.geometric(1.5).is_err());
        assert!(src.geometric(f64::NAN).is_err());
    }

    #[test]
    fn geometric_certain_success() {
        let mut src = RandomSource::new(1);
        for _ in 0..100 {
            assert_eq!(src.geometric(1.0).unwrap(), 1);
        }
        assert_eq!(src.draws(), 0);
    }

    fn geometric_pmf(p: f64, i: u64) -> f64 {
        (1.0 - p).powi(i as i32 - 1) * p
    }

    fn geometric_fit(p: f64, seed: u64) -> f64 {
        let mut src = RandomSource::new(seed);
        let cells = 200usize;
        let mut observed = vec![0u64; cells + 1];
        for _ in 0..1_000_000 {
            let j = src.geometric(p).unwrap() as usize;
            observed[j.min(cells + 1) - 1] += 1;
        }
        let mut expected: Vec<f64> = (1..=cells as u64).map(|i| geometric_pmf(p, i)).collect();
        let head: f64 = expected.iter().sum();
        expected.push(1.0 - head);
        goodness_of_fit(&observed, &expected).p_value
    }

    #[test]
    fn geometric_half_pmf_and_mean() {
        let mut src = RandomSource::new(99);
        let n = 1_000_000;
        let mut counts = [0u64; 4];
        let mut total = 0u64;
        for _ in 0..n {
            let j = src.geometric(0.5).unwrap();
            total += j;
            counts[(j.min(4) - 1) as usize] += 1;
        }
        let freq = |c: u64| c as f64 / n as f64;
        assert!((freq(counts[0]) - 0.5).abs() < 0.0025);
        assert!((freq(counts[1]) - 0.25).abs() < 0.0025);
        assert!((freq(counts[2]) - 0.125).abs() < 0.0025);
        // variance (1 - p) / p^2 = 2, sd of mean ~ 1.4e-3
        let mean = total as f64 / n as f64;
        assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn geometric_matches_pmf_across_parameters() {
        for (i, p) in [0.9, 0.5, 0.1, 0.01].into_iter().enumerate() {
            let pv = geometric_fit(p, 1000 + i as u64);
            assert!(pv > 0.001, "p = {p}: chi-square p-value {pv}");
        }
    }

    fn truncated_pmf(q: f64, nk: u64) -> Vec<f64> {
        let pg = 1.0 - (1.0 - q).powi(nk as i32);
        (1..=nk).map(|i| q * (1.0 - q).powi(i as i32 - 1) / pg).collect()
    }

    #[test]
    fn truncated_pmf_oracle_values() {
        let pmf = truncated_pmf(0.5, 2);
        assert!((pmf[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((pmf[1] - 1.0 / 3.0).abs() < 1e-15);
        let pmf = truncated_pmf(0.25, 3);
        assert!((pmf[0] - 0.25 / 0.578125).abs() < 1e-15);
        assert!((pmf[0] - 0.432).abs() < 1e-3);
        assert!((pmf[1] - 0.324).abs() < 1e-3);
        assert!((pmf[2] - 0.243).abs() < 1e-3);
        for (q, nk) in [(0.5, 1), (0.5, 7), (0.25, 3), (0.01, 50), (1e-4, 1000)] {
            let s: f64 = truncated_pmf(q, nk).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "q = {q}, nk = {nk}: sum {s}");
        }
    }

    #[test]
    fn truncated_first_certain_candidate() {
        let mut src = RandomSource::new(2);
        for nk in [1, 2, 100] {
            assert_eq!(src.truncated_first(1.0, 1.0, nk).unwrap(), 1);
        }
    }

    #[test]
    fn truncated_first_rejects_bad_parameters() {
        let mut src = RandomSource::new(2);
        assert!(src.truncated_first(0.0, 0.5, 3).is_err());
        assert!(src.truncated_first(0.5, 0.0, 3).is_err());
        assert!(src.truncated_first(0.5, 1.2, 3).is_err());
        assert!(src.truncated_first(0.5, 0.75, 0).is_err());
    }

    #[test]
    fn truncated_first_matches_pmf() {
        for (seed, (q, nk)) in [(0.5f64, 2u64), (0.25, 3), (0.1, 12)].into_iter().enumerate() {
            let pg = 1.0 - (1.0 - q).powi(nk as i32);
            let mut src = RandomSource::new(seed as u64 + 40);
            let mut observed = vec![0u64; nk as usize];
            for _ in 0..1_000_000 {
                observed[src.truncated_first(q, pg, nk).unwrap() as usize - 1] += 1;
            }
            let fit = goodness_of_fit(&observed, &truncated_pmf(q, nk));
            assert!(fit.p_value > 0.001, "q = {q}, nk = {nk}: {fit:?}");
        }
    }

    #[test]
    fn truncated_first_never_leaves_support() {
        let mut src = RandomSource::new(8);
        let grid = [1.0, 0.5, 0.25, 1e-3, 1e-7, 2f64.powi(-40)];
        for &q in &grid {
            for nk in [1u64, 2, 3, 17, 1000, 1 << 20] {
                let pg = -((nk as f64) * log_complement(q)).exp_m1();
                let pg = if q >= 1.0 { 1.0 } else { pg };
                for _ in 0..(1_000_000 / (grid.len() * 6)) {
                    let j = src.truncated_first(q, pg, nk).unwrap();
                    assert!((1..=nk).contains(&j));
                }
            }
        }
    }
}
