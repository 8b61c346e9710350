use std::fmt;
use std::str::FromStr;

use rand_distr::{Exp, LogNormal, Normal};

use super::HarnessError;
use crate::rng::RandomSource;

/// Largest vector [`exact_subset_probs`] will enumerate.
pub const MAX_ENUMERATION: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// Mean 0, variance 10.
    Normal,
    /// `|X|` for `X` normal with variance 10.
    HalfNormal,
    /// Rate 1.
    Exponential,
    /// `exp(X)`, `X` normal with mean 0 and variance `ln 2`.
    LogNormal,
}

impl Distribution {
    pub const ALL: [Distribution; 4] = [
        Distribution::Normal,
        Distribution::HalfNormal,
        Distribution::Exponential,
        Distribution::LogNormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Distribution::Normal => "normal",
            Distribution::HalfNormal => "half_normal",
            Distribution::Exponential => "exponential",
            Distribution::LogNormal => "log_normal",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distribution {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownDistribution(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub dist: Distribution,
    pub n: usize,
    pub mu: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(dist: Distribution, n: usize, mu: f64, seed: u64) -> Self {
        Self { dist, n, mu, seed }
    }
}

/// Compensated sum.
pub(crate) fn fsum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn raw_values(spec: &WorkloadSpec) -> Vec<f64> {
    let mut src = RandomSource::new(spec.seed);
    let n = spec.n;
    let sd = 10f64.sqrt();
    match spec.dist {
        Distribution::Normal => {
            let d = Normal::new(0.0, sd).unwrap();
            (0..n).map(|_| src.sample(&d)).collect()
        }
        Distribution::HalfNormal => {
            let d = Normal::new(0.0, sd).unwrap();
            (0..n).map(|_| src.sample::<f64, _>(&d).abs()).collect()
        }
        Distribution::Exponential => {
            let d = Exp::new(1.0).unwrap();
            (0..n).map(|_| src.sample(&d)).collect()
        }
        Distribution::LogNormal => {
            let d = LogNormal::new(0.0, std::f64::consts::LN_2.sqrt()).unwrap();
            (0..n).map(|_| src.sample(&d)).collect()
        }
    }
}

/// Probabilities shaped like `spec.dist`, each in `[0, 1]`, summing to
/// `spec.mu` within `1e-9`.
///
/// The raw draws are shifted to start at 0, scaled to span `[0, 1]` and
/// scaled again to the target mass. Values pushed above 1 are clipped and the
/// clipped mass is spread over the rest in proportion to their values.
pub fn gen_workload(spec: &WorkloadSpec) -> Result<Vec<f64>, HarnessError> {
    let (n, mu) = (spec.n, spec.mu);
    if n == 0 {
        return Err(HarnessError::InvalidSpec("n must be at least 1".into()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(HarnessError::InvalidSpec(format!("target mass must be positive, got {mu}")));
    }
    if mu > n as f64 {
        return Err(HarnessError::InfeasibleMass { n, mu });
    }
    if n == 1 {
        return Ok(vec![mu.min(1.0)]);
    }
    let mut v = raw_values(spec);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range <= 0.0 || !range.is_finite() {
        return Ok(vec![mu / n as f64; n]);
    }
    for x in &mut v {
        *x = (*x - lo) / range;
    }
    let scale = mu / fsum(v.iter().copied());
    for x in &mut v {
        *x *= scale;
    }
    for _ in 0..64 {
        let saturated = v.iter().filter(|&&x| x >= 1.0).count();
        let free = fsum(v.iter().copied().filter(|&x| x < 1.0));
        let over = v.iter().any(|&x| x > 1.0);
        let target = mu - saturated as f64;
        if !over && (fsum(v.iter().copied()) - mu).abs() <= 1e-9 {
            return Ok(v);
        }
        if free <= 0.0 || target <= 0.0 {
            return Err(HarnessError::Redistribution);
        }
        let factor = target / free;
        for x in &mut v {
            *x = if *x >= 1.0 { 1.0 } else { *x * factor };
        }
    }
    Err(HarnessError::Redistribution)
}

/// Product-law probability of every subset, indexed by mask (bit `i` for
/// element `i`).
pub fn exact_subset_probs(probs: &[f64]) -> Result<Vec<f64>, HarnessError> {
    let n = probs.len();
    if n > MAX_ENUMERATION {
        return Err(HarnessError::TooManyElements(n));
    }
    let mut law = vec![1.0f64];
    for &p in probs {
        let mut next = Vec::with_capacity(law.len() * 2);
        next.extend(law.iter().map(|&w| w * (1.0 - p)));
        next.extend(law.iter().map(|&w| w * p));
        law = next;
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_element() {
        for dist in Distribution::ALL {
            assert_eq!(gen_workload(&WorkloadSpec::new(dist, 1, 0.3, 1)).unwrap(), vec![0.3]);
        }
        assert!(gen_workload(&WorkloadSpec::new(Distribution::Normal, 1, 2.0, 1)).is_err());
    }

    #[test]
    fn exponential_desk_scale() {
        let spec = WorkloadSpec::new(Distribution::Exponential, 100_000, 100.0, 9);
        let v = gen_workload(&spec).unwrap();
        assert_eq!(v.len(), 100_000);
        assert!(v.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!((fsum(v.iter().copied()) - 100.0).abs() <= 1e-9);
    }

    #[test]
    fn deterministic() {
        let spec = WorkloadSpec::new(Distribution::LogNormal, 1000, 5.0, 3);
        assert_eq!(gen_workload(&spec).unwrap(), gen_workload(&spec).unwrap());
    }

    #[test]
    fn clipping_redistributes() {
        // mass near n forces most values to 1
        let spec = WorkloadSpec::new(Distribution::HalfNormal, 1000, 600.0, 4);
        let v = gen_workload(&spec).unwrap();
        assert!(v.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(v.contains(&1.0));
        assert!((fsum(v.iter().copied()) - 600.0).abs() <= 1e-9);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            gen_workload(&WorkloadSpec::new(Distribution::Normal, 10, 11.0, 0)),
            Err(HarnessError::InfeasibleMass { .. })
        ));
        assert!(gen_workload(&WorkloadSpec::new(Distribution::Normal, 0, 1.0, 0)).is_err());
        assert!(gen_workload(&WorkloadSpec::new(Distribution::Normal, 10, 0.0, 0)).is_err());
    }

    #[test]
    fn distribution_names_round_trip() {
        for d in Distribution::ALL {
            assert_eq!(d.to_string().parse::<Distribution>().unwrap(), d);
        }
        assert!("uniform".parse::<Distribution>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn workload_in_domain(
            d in 0usize..4,
            n in 2usize..2000,
            frac in 0.0001f64..0.5,
            seed in any::<u64>(),
        ) {
            let mu = (n as f64 * frac).max(1e-3);
            let v = gen_workload(&WorkloadSpec::new(Distribution::ALL[d], n, mu, seed)).unwrap();
            prop_assert!(v.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((fsum(v.iter().copied()) - mu).abs() <= 1e-9);
        }
    }

    #[test]
    fn exact_law_examples() {
        assert_eq!(exact_subset_probs(&[0.5]).unwrap(), vec![0.5, 0.5]);
        let law = exact_subset_probs(&[0.3, 0.7]).unwrap();
        for (got, want) in law.iter().zip([0.21, 0.09, 0.49, 0.21]) {
            assert!((got - want).abs() < 1e-15);
        }
        let law = exact_subset_probs(&[0.1, 0.25, 0.5, 0.9, 0.33, 0.0, 1.0]).unwrap();
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(exact_subset_probs(&[0.5; 17]).is_err());
    }
}
