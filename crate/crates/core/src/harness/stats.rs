//! Chi-square tests used to validate samplers against exact laws.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Cells whose expected count falls below this are merged with neighbours.
pub const MIN_EXPECTED: f64 = 5.0;

/// Significance used throughout the test suites.
pub const SIGNIFICANCE: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }

    fn from_statistic(statistic: f64, dof: usize) -> Self {
        let p_value = if !statistic.is_finite() {
            0.0
        } else if dof == 0 {
            1.0
        } else {
            ChiSquared::new(dof as f64)
                .map(|d| d.sf(statistic))
                .unwrap_or(0.0)
        };
        Self {
            statistic,
            dof,
            p_value,
        }
    }
}

/// Groups consecutive cells until each group's expected count reaches
/// [`MIN_EXPECTED`]; a short tail joins the last full group.
fn merge_plan(expected: &[f64]) -> Vec<usize> {
    let mut plan = vec![0; expected.len()];
    let mut group = 0;
    let mut acc = 0.0;
    let mut open = false;
    for (i, &e) in expected.iter().enumerate() {
        plan[i] = group;
        acc += e;
        open = true;
        if acc >= MIN_EXPECTED {
            group += 1;
            acc = 0.0;
            open = false;
        }
    }
    if open && group > 0 {
        for g in plan.iter_mut().filter(|g| **g == group) {
            *g = group - 1;
        }
    }
    plan
}

/// Pearson goodness-of-fit of `observed` counts against cell probabilities.
///
/// An outcome observed where the law assigns probability zero yields
/// `p_value = 0`.
pub fn goodness_of_fit(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len(), "cell count mismatch");
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    if observed.iter().zip(probs).any(|(&o, &p)| p <= 0.0 && o > 0) {
        return ChiSquare::from_statistic(f64::INFINITY, 0);
    }
    let cells: Vec<(u64, f64)> = observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| (o, p * n))
        .collect();
    let expected: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let plan = merge_plan(&expected);
    let groups = plan.last().map_or(0, |g| g + 1);
    let mut merged = vec![(0u64, 0.0f64); groups];
    for (&(o, e), &g) in cells.iter().zip(&plan) {
        merged[g].0 += o;
        merged[g].1 += e;
    }
    let statistic = merged
        .iter()
        .map(|&(o, e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    ChiSquare::from_statistic(statistic, groups.saturating_sub(1))
}

/// Two-sample chi-square test of homogeneity over shared cells.
pub fn two_sample(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len(), "cell count mismatch");
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let total = (na + nb) as f64;
    let cells: Vec<(u64, u64)> = a
        .iter()
        .zip(b)
        .filter(|(&x, &y)| x + y > 0)
        .map(|(&x, &y)| (x, y))
        .collect();
    // merge on the smaller of the two expected counts
    let share = na.min(nb) as f64 / total;
    let expected: Vec<f64> = cells.iter().map(|&(x, y)| (x + y) as f64 * share).collect();
    let plan = merge_plan(&expected);
    let groups = plan.last().map_or(0, |g| g + 1);
    let mut merged = vec![(0u64, 0u64); groups];
    for (&(x, y), &g) in cells.iter().zip(&plan) {
        merged[g].0 += x;
        merged[g].1 += y;
    }
    let fa = na as f64 / total;
    let fb = nb as f64 / total;
    let statistic = merged
        .iter()
        .map(|&(x, y)| {
            let row = (x + y) as f64;
            let (ea, eb) = (row * fa, row * fb);
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    ChiSquare::from_statistic(statistic, groups.saturating_sub(1))
}

/// Five-sigma half-width of a binomial proportion estimate.
pub fn binomial_envelope(p: f64, trials: u64) -> f64 {
    5.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
