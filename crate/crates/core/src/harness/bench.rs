use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rustc_hash::FxHashMap;

use super::record::BenchRecord;
use super::workload::{gen_workload, WorkloadSpec};
use super::HarnessError;
use crate::baselines::{HybridSampler, NaiveSampler};
use crate::groups::ElementId;
use crate::odss::{BasicSampler, OdssConfig, OdssSampler};
use crate::rng::RandomSource;
use crate::sampler::SubsetSampler;
use crate::table::RowRepr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    Hybrid,
    Odss,
    Basic,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Naive, Method::Hybrid, Method::Odss, Method::Basic];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Hybrid => "hybrid",
            Method::Odss => "odss",
            Method::Basic => "basic",
        }
    }

    pub fn supports_updates(self) -> bool {
        self != Method::Basic
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownMethod(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchOptions {
    pub row_repr: RowRepr,
    /// Timed batches; the median and the mean over all of them are reported.
    pub batches: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            row_repr: RowRepr::Cdf,
            batches: 5,
        }
    }
}

/// A sampler of the given kind over `elements`, with room for `capacity`.
pub fn make_sampler(
    method: Method,
    elements: &[(ElementId, f64)],
    capacity: usize,
    seed: u64,
    row_repr: RowRepr,
) -> Result<Box<dyn SubsetSampler + Send>, HarnessError> {
    let it = elements.iter().copied();
    Ok(match method {
        Method::Naive => Box::new(NaiveSampler::from_elements(it, seed)?),
        Method::Hybrid => Box::new(HybridSampler::from_elements(it, seed)?),
        Method::Basic => Box::new(BasicSampler::new(elements, seed)?),
        Method::Odss => {
            let config = OdssConfig {
                capacity: capacity.max(elements.len()),
                row_repr,
                ..OdssConfig::default()
            };
            Box::new(OdssSampler::build(it, config, seed)?)
        }
    })
}

fn indexed(probs: &[f64]) -> Vec<(ElementId, f64)> {
    probs.iter().enumerate().map(|(i, &p)| (i as ElementId, p)).collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Per-query wall time (mean and median over batches) and random draws.
pub fn bench_query(
    method: Method,
    spec: &WorkloadSpec,
    repeats: usize,
    opts: &BenchOptions,
) -> Result<Vec<BenchRecord>, HarnessError> {
    let probs = gen_workload(spec)?;
    let mut sampler = make_sampler(method, &indexed(&probs), probs.len(), spec.seed, opts.row_repr)?;
    let repeats = repeats.max(1);
    let batches = opts.batches.max(1);
    let mut out = Vec::new();
    let mut per_batch = Vec::with_capacity(batches);
    let mut total_size = 0usize;
    let draws_before = sampler.rng_draws();
    for _ in 0..batches {
        let start = Instant::now();
        for _ in 0..repeats {
            out.clear();
            sampler.query_into(&mut out);
            total_size += out.len();
        }
        per_batch.push(start.elapsed().as_nanos() as f64 / repeats as f64);
    }
    let queries = (repeats * batches) as f64;
    let draws = (sampler.rng_draws() - draws_before) as f64 / queries;
    let mean = per_batch.iter().sum::<f64>() / batches as f64;
    let record = |metric: &str, value: f64| BenchRecord::new(method.as_str(), spec.n, spec.mu, metric, value, spec.seed);
    Ok(vec![
        record("query_ns", mean),
        record("query_ns_median", median(per_batch)),
        record("rng_draws", draws),
        record("output_size", total_size as f64 / queries),
    ])
}

/// A precomputed update workload: fresh ids with probabilities drawn
/// uniformly from the base workload, then deletions of uniformly chosen
/// live ids.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdatePlan {
    pub inserts: Vec<(ElementId, f64)>,
    pub deletes: Vec<ElementId>,
}

impl UpdatePlan {
    pub fn new(base: &[f64], first_id: ElementId, live: &[ElementId], ops: usize, src: &mut RandomSource) -> Self {
        let inserts: Vec<_> = (0..ops)
            .map(|i| {
                let p = base[src.uniform_int(base.len() as u64) as usize];
                (first_id + i as ElementId, p)
            })
            .collect();
        let mut pool: Vec<ElementId> = live.to_vec();
        pool.extend(inserts.iter().map(|e| e.0));
        let deletes = (0..ops.min(pool.len()))
            .map(|_| {
                let i = src.uniform_int(pool.len() as u64) as usize;
                pool.swap_remove(i)
            })
            .collect();
        Self { inserts, deletes }
    }

    pub fn apply(&self, sampler: &mut dyn SubsetSampler) -> Result<(), HarnessError> {
        for &(id, p) in &self.inserts {
            sampler.insert(id, p)?;
        }
        for &id in &self.deletes {
            sampler.delete(id)?;
        }
        Ok(())
    }
}

/// Per-operation wall time of `ops` insertions followed by `ops`
/// deletions, repeated over batches on the evolving element set.
pub fn bench_update(
    method: Method,
    spec: &WorkloadSpec,
    ops: usize,
    opts: &BenchOptions,
) -> Result<Vec<BenchRecord>, HarnessError> {
    if !method.supports_updates() {
        return Err(crate::sampler::SamplerError::Unsupported("basic").into());
    }
    let probs = gen_workload(spec)?;
    let batches = opts.batches.max(1);
    let ops = ops.max(1);
    let mut sampler = make_sampler(method, &indexed(&probs), probs.len() + ops, spec.seed, opts.row_repr)?;
    let mut src = RandomSource::new(spec.seed ^ 0x5eed);
    let mut live: Vec<ElementId> = (0..probs.len() as ElementId).collect();
    let mut next = probs.len() as ElementId;
    let mut per_batch = Vec::with_capacity(batches);
    for _ in 0..batches {
        let plan = UpdatePlan::new(&probs, next, &live, ops, &mut src);
        next += ops as ElementId;
        let start = Instant::now();
        plan.apply(sampler.as_mut())?;
        let elapsed = start.elapsed().as_nanos() as f64;
        per_batch.push(elapsed / (plan.inserts.len() + plan.deletes.len()) as f64);
        live.extend(plan.inserts.iter().map(|e| e.0));
        let gone: rustc_hash::FxHashSet<_> = plan.deletes.iter().copied().collect();
        live.retain(|id| !gone.contains(id));
    }
    let mean = per_batch.iter().sum::<f64>() / batches as f64;
    let record = |metric: &str, value: f64| BenchRecord::new(method.as_str(), spec.n, spec.mu, metric, value, spec.seed);
    Ok(vec![record("update_ns", mean), record("update_ns_median", median(per_batch))])
}

/// `max |hits / repeats - p|` over the live elements in `truth`.
pub fn empirical_error(sampler: &mut dyn SubsetSampler, truth: &FxHashMap<ElementId, f64>, repeats: u64) -> f64 {
    let mut hits: FxHashMap<ElementId, u64> = FxHashMap::default();
    let mut out = Vec::new();
    for _ in 0..repeats {
        out.clear();
        sampler.query_into(&mut out);
        for &id in &out {
            *hits.entry(id).or_default() += 1;
        }
    }
    max_error(&hits, truth, repeats)
}

fn max_error(hits: &FxHashMap<ElementId, u64>, truth: &FxHashMap<ElementId, f64>, repeats: u64) -> f64 {
    let mut worst = 0.0f64;
    for (id, &p) in truth {
        let h = hits.get(id).copied().unwrap_or(0);
        worst = worst.max((h as f64 / repeats as f64 - p).abs());
    }
    // anything returned that is not live counts in full
    for (id, &h) in hits {
        if !truth.contains_key(id) {
            worst = worst.max(h as f64 / repeats as f64);
        }
    }
    worst
}

/// Builds a sampler over the workload, runs `updates` insertions then
/// `updates` deletions, and queries. Returns the maximum absolute error at
/// each cumulative repeat count in `checkpoints` (ascending).
pub fn error_protocol(
    method: Method,
    spec: &WorkloadSpec,
    updates: usize,
    checkpoints: &[u64],
    row_repr: RowRepr,
) -> Result<Vec<f64>, HarnessError> {
    let probs = gen_workload(spec)?;
    let elements = indexed(&probs);
    let mut sampler = make_sampler(method, &elements, probs.len() + updates, spec.seed, row_repr)?;
    let mut truth: FxHashMap<ElementId, f64> = elements.iter().copied().collect();
    if updates > 0 {
        let mut src = RandomSource::new(spec.seed ^ 0xe770);
        let live: Vec<ElementId> = (0..probs.len() as ElementId).collect();
        let plan = UpdatePlan::new(&probs, probs.len() as ElementId, &live, updates, &mut src);
        plan.apply(sampler.as_mut())?;
        truth.extend(plan.inserts.iter().copied());
        for id in &plan.deletes {
            truth.remove(id);
        }
    }
    let mut hits: FxHashMap<ElementId, u64> = FxHashMap::default();
    let mut out = Vec::new();
    let mut done = 0u64;
    let mut errors = Vec::with_capacity(checkpoints.len());
    for &target in checkpoints {
        while done < target {
            out.clear();
            sampler.query_into(&mut out);
            for &id in &out {
                *hits.entry(id).or_default() += 1;
            }
            done += 1;
        }
        errors.push(max_error(&hits, &truth, done.max(1)));
    }
    Ok(errors)
}
