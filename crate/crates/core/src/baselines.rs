//! Reference samplers: per-element coin flips, geometric skipping for a
//! common probability, and the two-set hybrid of both.

use rustc_hash::FxHashMap;

use crate::groups::ElementId;
use crate::rng::{log_complement, RandomSource};
use crate::sampler::{check_prob, SamplerError, SubsetSampler};

/// One coin per entry. Returns 0-based indices in increasing order.
pub fn naive_query(probs: &[f64], src: &mut RandomSource) -> Vec<usize> {
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| src.bernoulli(p))
        .map(|(i, _)| i)
        .collect()
}

/// Each of `0..n` independently with probability `p`, by geometric skips.
pub fn geoss_query(n: usize, p: f64, src: &mut RandomSource) -> Vec<usize> {
    let mut out = Vec::new();
    if p <= 0.0 || n == 0 {
        return out;
    }
    let ln_miss = log_complement(p);
    let mut i = 0u64;
    loop {
        i = i.saturating_add(src.geometric_with(ln_miss));
        if i > n as u64 {
            return out;
        }
        out.push(i as usize - 1);
    }
}

/// Dense id/probability arrays with swap-remove deletion.
#[derive(Clone, Debug)]
struct Entries {
    ids: Vec<ElementId>,
    probs: Vec<f64>,
    index: FxHashMap<ElementId, usize>,
}

impl Entries {
    fn new() -> Self {
        Self {
            ids: Vec::new(),
            probs: Vec::new(),
            index: FxHashMap::default(),
        }
    }

    fn insert(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        check_prob(p)?;
        if self.index.contains_key(&id) {
            return Err(SamplerError::Duplicate(id));
        }
        self.index.insert(id, self.ids.len());
        self.ids.push(id);
        self.probs.push(p);
        Ok(())
    }

    fn delete(&mut self, id: ElementId) -> Result<(), SamplerError> {
        let at = self.index.remove(&id).ok_or(SamplerError::Unknown(id))?;
        self.ids.swap_remove(at);
        self.probs.swap_remove(at);
        if let Some(&moved) = self.ids.get(at) {
            self.index.insert(moved, at);
        }
        Ok(())
    }

    fn modify(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        check_prob(p)?;
        let at = *self.index.get(&id).ok_or(SamplerError::Unknown(id))?;
        self.probs[at] = p;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NaiveSampler {
    entries: Entries,
    src: RandomSource,
}

impl NaiveSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            entries: Entries::new(),
            src: RandomSource::new(seed),
        }
    }

    pub fn from_elements(
        elements: impl IntoIterator<Item = (ElementId, f64)>,
        seed: u64,
    ) -> Result<Self, SamplerError> {
        let mut s = Self::new(seed);
        for (id, p) in elements {
            s.entries.insert(id, p)?;
        }
        Ok(s)
    }
}

impl SubsetSampler for NaiveSampler {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn len(&self) -> usize {
        self.entries.ids.len()
    }

    fn insert(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        self.entries.insert(id, p)
    }

    fn delete(&mut self, id: ElementId) -> Result<(), SamplerError> {
        self.entries.delete(id)
    }

    fn modify(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        self.entries.modify(id, p)
    }

    fn query_into(&mut self, out: &mut Vec<ElementId>) {
        let e = &self.entries;
        for (&id, &p) in e.ids.iter().zip(&e.probs) {
            if self.src.bernoulli(p) {
                out.push(id);
            }
        }
    }

    fn rng_draws(&self) -> u64 {
        self.src.draws()
    }
}

/// Elements at or below `sqrt(mean p)` go through one geometric pass at that
/// threshold with rejection; the rest are flipped individually. Any update
/// recomputes the split from scratch.
#[derive(Clone, Debug)]
pub struct HybridSampler {
    entries: Entries,
    threshold: f64,
    ln_miss: f64,
    low: Vec<(ElementId, f64)>,
    high: Vec<(ElementId, f64)>,
    src: RandomSource,
}

impl HybridSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            entries: Entries::new(),
            threshold: 0.0,
            ln_miss: 0.0,
            low: Vec::new(),
            high: Vec::new(),
            src: RandomSource::new(seed),
        }
    }

    pub fn from_elements(
        elements: impl IntoIterator<Item = (ElementId, f64)>,
        seed: u64,
    ) -> Result<Self, SamplerError> {
        let mut s = Self::new(seed);
        for (id, p) in elements {
            s.entries.insert(id, p)?;
        }
        s.rebuild();
        Ok(s)
    }

    /// `sqrt(mean p)`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Ids sampled by geometric skipping.
    pub fn low_set(&self) -> Vec<ElementId> {
        self.low.iter().map(|e| e.0).collect()
    }

    /// Ids flipped one by one.
    pub fn high_set(&self) -> Vec<ElementId> {
        self.high.iter().map(|e| e.0).collect()
    }

    fn rebuild(&mut self) {
        let e = &self.entries;
        let n = e.ids.len();
        let mean = if n == 0 {
            0.0
        } else {
            e.probs.iter().sum::<f64>() / n as f64
        };
        self.threshold = mean.sqrt();
        self.ln_miss = log_complement(self.threshold);
        self.low.clear();
        self.high.clear();
        for (&id, &p) in e.ids.iter().zip(&e.probs) {
            if p <= self.threshold {
                self.low.push((id, p));
            } else {
                self.high.push((id, p));
            }
        }
    }
}

impl SubsetSampler for HybridSampler {
    fn name(&self) -> &'static str {
        "hybrid"
    }

    fn len(&self) -> usize {
        self.entries.ids.len()
    }

    fn insert(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        self.entries.insert(id, p)?;
        self.rebuild();
        Ok(())
    }

    fn delete(&mut self, id: ElementId) -> Result<(), SamplerError> {
        self.entries.delete(id)?;
        self.rebuild();
        Ok(())
    }

    fn modify(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        self.entries.modify(id, p)?;
        self.rebuild();
        Ok(())
    }

    fn query_into(&mut self, out: &mut Vec<ElementId>) {
        let t = self.threshold;
        if t > 0.0 {
            let n = self.low.len() as u64;
            let mut i = 0u64;
            loop {
                i = i.saturating_add(self.src.geometric_with(self.ln_miss));
                if i > n {
                    break;
                }
                let (id, p) = self.low[i as usize - 1];
                if self.src.bernoulli(p / t) {
                    out.push(id);
                }
            }
        }
        for &(id, p) in &self.high {
            if self.src.bernoulli(p) {
                out.push(id);
            }
        }
    }

    fn rng_draws(&self) -> u64 {
        self.src.draws()
    }
}
