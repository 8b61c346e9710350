//! The assembled samplers.
//!
//! [`OdssSampler`] stacks two [`GroupedLevel`]s and a [`TableSampler`]:
//! level-1 element `k` stands for a non-empty level-0 group `k` and carries
//! that group's success probability; level-2 element `i` stands for level-1
//! group `i + 1`.
//! Capacities are fixed at construction, so the group counts of all three
//! levels never change while the sampler is live.
//!
//! [`BasicSampler`] is the query-only variant with an arbitrary number of
//! grouping levels and per-group coin flips on top.

use crate::groups::{group_count, ElementId, ElementSlot, GroupedLevel};
use crate::rng::RandomSource;
use crate::sampler::{check_prob, SamplerError, SubsetSampler};
use crate::table::{RowIndex, RowRepr, TableSampler, DEFAULT_CACHE_ROWS, DEFAULT_DENSE_BUDGET};

/// Upper bound on [`Counters::slot_writes`] for any single update.
pub const MAX_SLOT_WRITES: u64 = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdssConfig {
    pub capacity: usize,
    pub row_repr: RowRepr,
    pub dense_budget: u64,
    pub row_cache_rows: usize,
    /// Rebuild at twice the capacity when an insert would overflow, instead
    /// of failing with [`SamplerError::CapacityExceeded`].
    pub auto_grow: bool,
}

impl OdssConfig {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            capacity,
            ..Self::default()
        }
    }
}

impl Default for OdssConfig {
    fn default() -> Self {
        Self {
            capacity: 1024,
            row_repr: RowRepr::default(),
            dense_budget: DEFAULT_DENSE_BUDGET,
            row_cache_rows: DEFAULT_CACHE_ROWS,
            auto_grow: true,
        }
    }
}

/// Tallies for the most recent operation.
///
/// `slot_writes` counts stores into group slot arrays and level-2
/// probability entries; position-index bookkeeping is not counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub rng_draws: u64,
    pub candidates_generated: u64,
    pub acceptances: u64,
    pub groups_visited: u64,
    pub slot_writes: u64,
}

#[derive(Debug)]
pub struct OdssSampler {
    config: OdssConfig,
    level0: GroupedLevel,
    level1: GroupedLevel,
    table: TableSampler,
    src: RandomSource,
    counters: Counters,
    picked2: Vec<usize>,
    picked1: Vec<ElementId>,
}

impl OdssSampler {
    pub fn new(config: OdssConfig, seed: u64) -> Result<Self, SamplerError> {
        Self::build(std::iter::empty(), config, seed)
    }

    /// Bulk construction in `O(n)`.
    pub fn build(
        elements: impl IntoIterator<Item = (ElementId, f64)>,
        config: OdssConfig,
        seed: u64,
    ) -> Result<Self, SamplerError> {
        let mut config = config;
        config.capacity = config.capacity.max(1);
        let mut level0 = GroupedLevel::with_capacity(config.capacity);
        for (id, prob) in elements {
            check_prob(prob)?;
            if level0.len() == config.capacity {
                if !config.auto_grow {
                    return Err(SamplerError::CapacityExceeded(config.capacity));
                }
                config.capacity *= 2;
                level0 = regroup(&level0, config.capacity);
            }
            level0.insert(ElementSlot { id, prob }).map_err(|e| match e {
                crate::groups::GroupError::DuplicateElement(id) => SamplerError::Duplicate(id),
                e => e.into(),
            })?;
        }
        Self::assemble(level0, config, RandomSource::new(seed))
    }

    fn assemble(level0: GroupedLevel, config: OdssConfig, src: RandomSource) -> Result<Self, SamplerError> {
        let k0 = level0.group_count();
        let mut level1 = GroupedLevel::with_capacity(k0);
        for k in (1..=k0).filter(|&k| !level0.group(k).is_empty()) {
            level1.insert(ElementSlot {
                id: k as ElementId,
                prob: level0.success(k),
            })?;
        }
        let probs = (1..=level1.group_count()).map(|j| level1.success(j)).collect();
        let table = TableSampler::new(probs, config.row_repr, config.dense_budget, config.row_cache_rows)?;
        Ok(Self {
            config,
            level0,
            level1,
            table,
            src,
            counters: Counters::default(),
            picked2: Vec::new(),
            picked1: Vec::new(),
        })
    }

    pub fn config(&self) -> &OdssConfig {
        &self.config
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn level0(&self) -> &GroupedLevel {
        &self.level0
    }

    pub fn level1(&self) -> &GroupedLevel {
        &self.level1
    }

    pub fn table(&self) -> &TableSampler {
        &self.table
    }

    /// Group counts `(K0, K1, m)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.level0.group_count(), self.level1.group_count(), self.table.m())
    }

    pub fn row_index(&self) -> RowIndex {
        self.table.row_index()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.level0.contains(id)
    }

    pub fn prob(&self, id: ElementId) -> Option<f64> {
        self.level0.prob(id)
    }

    pub fn elements(&self) -> impl Iterator<Item = (ElementId, f64)> + '_ {
        self.level0.iter().map(|s| (s.id, s.prob))
    }

    pub fn last_counters(&self) -> Counters {
        self.counters
    }

    pub fn source(&self) -> &RandomSource {
        &self.src
    }

    pub fn mass(&self) -> f64 {
        self.level0.mass()
    }

    /// Probability mass stored at level 0, 1 or 2.
    pub fn level_mass(&self, level: usize) -> Result<f64, SamplerError> {
        match level {
            0 => Ok(self.level0.mass()),
            1 => Ok(self.level1.mass()),
            2 => Ok(self.table.mass()),
            _ => Err(SamplerError::LevelOutOfRange(level)),
        }
    }

    /// Draws a sample with an external source, appending ids to `out`.
    pub fn query_with(&mut self, src: &mut RandomSource, out: &mut Vec<ElementId>) {
        let before = src.draws();
        let mut c = Counters::default();
        let mut picked2 = std::mem::take(&mut self.picked2);
        let mut picked1 = std::mem::take(&mut self.picked1);
        picked2.clear();
        picked1.clear();

        let mask = self.table.sample_into(src, &mut picked2);
        c.candidates_generated += u64::from(mask.len());
        c.acceptances += picked2.len() as u64;
        for &i in &picked2 {
            c.groups_visited += 1;
            let at = picked1.len();
            c.candidates_generated += self.level1.group(i + 1).sample_into(src, &mut picked1);
            c.acceptances += (picked1.len() - at) as u64;
        }
        let start = out.len();
        for &k in &picked1 {
            c.groups_visited += 1;
            c.candidates_generated += self.level0.group(k as usize).sample_into(src, out);
        }
        c.acceptances += (out.len() - start) as u64;
        c.rng_draws = src.draws() - before;

        self.picked2 = picked2;
        self.picked1 = picked1;
        self.counters = c;
    }

    /// Re-derives level 1 and level 2 for level-0 group `k`. Returns slot
    /// writes. Only non-empty level-0 groups have a level-1 element.
    fn propagate(&mut self, k: usize) -> Result<u64, SamplerError> {
        let pg = self.level0.success(k);
        let id = k as ElementId;
        let (from, to, writes) = match (self.level1.contains(id), pg > 0.0) {
            (true, true) => {
                let moved = self.level1.set_prob(id, pg)?;
                if moved.slot_writes == 0 {
                    return Ok(0);
                }
                (moved.from, moved.to, u64::from(moved.slot_writes))
            }
            (false, true) => {
                let to = self.level1.insert(ElementSlot { id, prob: pg })?;
                (to, to, 1)
            }
            (true, false) => {
                let removal = self.level1.remove(id)?;
                (removal.group, removal.group, u64::from(removal.relocated.is_some()))
            }
            (false, false) => return Ok(0),
        };
        let mut writes = writes + self.refresh_top(from)?;
        if to != from {
            writes += self.refresh_top(to)?;
        }
        Ok(writes)
    }

    fn refresh_top(&mut self, j: usize) -> Result<u64, SamplerError> {
        let pg = self.level1.success(j);
        if self.table.probs()[j - 1].to_bits() == pg.to_bits() {
            return Ok(0);
        }
        self.table.set_prob(j - 1, pg)?;
        Ok(1)
    }

    fn grow(&mut self) -> Result<(), SamplerError> {
        if !self.config.auto_grow {
            return Err(SamplerError::CapacityExceeded(self.config.capacity));
        }
        let mut config = self.config;
        config.capacity *= 2;
        let level0 = regroup(&self.level0, config.capacity);
        let src = self.src.clone();
        *self = Self::assemble(level0, config, src)?;
        Ok(())
    }

    /// Rebuilds every level from the live elements, keeping capacity and
    /// random stream.
    pub fn rebuild(&mut self) -> Result<(), SamplerError> {
        let level0 = regroup(&self.level0, self.config.capacity);
        let src = self.src.clone();
        *self = Self::assemble(level0, self.config, src)?;
        Ok(())
    }

    /// Cross-level consistency, table index and the level-mass bound.
    pub fn verify(&self) -> Result<(), String> {
        self.level0.verify()?;
        self.level1.verify()?;
        self.table.verify()?;
        let k0 = self.level0.group_count();
        let occupied = (1..=k0).filter(|&k| !self.level0.group(k).is_empty()).count();
        if self.level1.len() != occupied {
            return Err(format!("level 1 holds {} elements for {occupied} occupied groups", self.level1.len()));
        }
        for k in 1..=k0 {
            let stored = self.level1.prob(k as ElementId).unwrap_or(0.0);
            if (stored - self.level0.success(k)).abs() > 1e-12 {
                return Err(format!("level-1 element {k}: {stored} vs {}", self.level0.success(k)));
            }
        }
        let k1 = self.level1.group_count();
        if self.table.m() != k1 {
            return Err(format!("table has {} elements for {k1} groups", self.table.m()));
        }
        for j in 1..=k1 {
            let stored = self.table.probs()[j - 1];
            if (stored - self.level1.success(j)).abs() > 1e-12 {
                return Err(format!("level-2 element {j}: {stored} vs {}", self.level1.success(j)));
            }
        }
        self.check_mass_bound(self.mass())
    }

    /// `mass(level) <= 2^level mu + 2^level - 1` for levels 1 and 2, given the
    /// level-0 mass `mu`. Costs `O(log n)`.
    pub fn check_mass_bound(&self, mu: f64) -> Result<(), String> {
        for level in 1..=2 {
            let got = self.level_mass(level).map_err(|e| e.to_string())?;
            let scale = f64::from(1u32 << level);
            let bound = scale * mu + scale - 1.0;
            if got > bound + 1e-9 * (1.0 + bound) {
                return Err(format!("level {level} mass {got} exceeds {bound}"));
            }
        }
        Ok(())
    }
}

/// Same elements, regrouped for a new capacity.
fn regroup(level: &GroupedLevel, capacity: usize) -> GroupedLevel {
    let mut fresh = GroupedLevel::with_capacity(capacity);
    for &slot in level.iter() {
        fresh.insert(slot).expect("ids are unique and probabilities valid");
    }
    fresh
}

impl SubsetSampler for OdssSampler {
    fn name(&self) -> &'static str {
        "odss"
    }

    fn len(&self) -> usize {
        self.level0.len()
    }

    fn insert(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        check_prob(p)?;
        if self.level0.contains(id) {
            return Err(SamplerError::Duplicate(id));
        }
        if self.level0.len() >= self.config.capacity {
            self.grow()?;
        }
        let k = self.level0.insert(ElementSlot { id, prob: p })?;
        let writes = 1 + self.propagate(k)?;
        self.counters = Counters {
            slot_writes: writes,
            ..Counters::default()
        };
        Ok(())
    }

    fn delete(&mut self, id: ElementId) -> Result<(), SamplerError> {
        let removal = self.level0.remove(id).map_err(|_| SamplerError::Unknown(id))?;
        let writes = u64::from(removal.relocated.is_some()) + self.propagate(removal.group)?;
        self.counters = Counters {
            slot_writes: writes,
            ..Counters::default()
        };
        Ok(())
    }

    fn modify(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError> {
        check_prob(p)?;
        self.delete(id)?;
        let first = self.counters.slot_writes;
        self.insert(id, p)?;
        self.counters.slot_writes += first;
        Ok(())
    }

    fn query_into(&mut self, out: &mut Vec<ElementId>) {
        let mut src = std::mem::replace(&mut self.src, RandomSource::new(0));
        self.query_with(&mut src, out);
        self.src = src;
    }

    fn rng_draws(&self) -> u64 {
        self.src.draws()
    }
}

impl PartialEq for OdssSampler {
    /// Structural equality of the three levels; caches and streams are
    /// ignored.
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.level0 == other.level0
            && self.level1 == other.level1
            && self.table.probs() == other.table.probs()
            && self.table.digits() == other.table.digits()
            && self.table.row_index() == other.table.row_index()
    }
}

/// Iterated base-2 logarithm: applications of `log2` until the value is at
/// most 1.
pub fn log_star(n: f64) -> usize {
    let mut x = n;
    let mut count = 0;
    while x > 1.0 {
        x = x.log2();
        count += 1;
    }
    count
}

/// Query-only sampler with `L` grouping levels and a coin flip per top-level
/// group.
#[derive(Clone, Debug)]
pub struct BasicSampler {
    levels: Vec<GroupedLevel>,
    src: RandomSource,
}

impl BasicSampler {
    /// Uses `L = max(1, log* n)`.
    pub fn new(elements: &[(ElementId, f64)], seed: u64) -> Result<Self, SamplerError> {
        let levels = log_star(elements.len() as f64).max(1);
        Self::with_levels(elements, levels, seed)
    }

    pub fn with_levels(elements: &[(ElementId, f64)], levels: usize, seed: u64) -> Result<Self, SamplerError> {
        if levels == 0 {
            return Err(SamplerError::LevelOutOfRange(0));
        }
        let mut base = GroupedLevel::with_capacity(elements.len());
        for &(id, prob) in elements {
            check_prob(prob)?;
            base.insert(ElementSlot { id, prob })?;
        }
        let mut stack = vec![base];
        while stack.len() < levels {
            let below = stack.last().unwrap();
            let count = below.group_count();
            let mut next = GroupedLevel::with_capacity(count);
            for k in 1..=count {
                next.insert(ElementSlot {
                    id: k as ElementId,
                    prob: below.success(k),
                })?;
            }
            stack.push(next);
        }
        Ok(Self {
            levels: stack,
            src: RandomSource::new(seed),
        })
    }

    pub fn levels(&self) -> &[GroupedLevel] {
        &self.levels
    }

    pub fn query_into(&mut self, out: &mut Vec<ElementId>) {
        let top = self.levels.last().unwrap();
        let mut current: Vec<ElementId> = (1..=top.group_count())
            .filter(|&k| self.src.bernoulli(top.success(k)))
            .map(|k| k as ElementId)
            .collect();
        for level in self.levels.iter().rev() {
            let mut next = Vec::new();
            for &k in &current {
                level.group(k as usize).sample_into(&mut self.src, &mut next);
            }
            current = next;
        }
        out.extend(current);
    }
}

impl SubsetSampler for BasicSampler {
    fn name(&self) -> &'static str {
        "basic"
    }

    fn len(&self) -> usize {
        self.levels[0].len()
    }

    fn insert(&mut self, _: ElementId, _: f64) -> Result<(), SamplerError> {
        Err(SamplerError::Unsupported("basic"))
    }

    fn delete(&mut self, _: ElementId) -> Result<(), SamplerError> {
        Err(SamplerError::Unsupported("basic"))
    }

    fn modify(&mut self, _: ElementId, _: f64) -> Result<(), SamplerError> {
        Err(SamplerError::Unsupported("basic"))
    }

    fn query_into(&mut self, out: &mut Vec<ElementId>) {
        BasicSampler::query_into(self, out);
    }

    fn rng_draws(&self) -> u64 {
        self.src.draws()
    }
}

/// Level-1 capacity and table size for a level-0 capacity.
pub fn shape_for(capacity: usize) -> (usize, usize, usize) {
    let k0 = group_count(capacity);
    let k1 = group_count(k0);
    (k0, k1, k1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::exact_subset_probs;
    use crate::harness::stats::{binomial_envelope, goodness_of_fit, two_sample, SIGNIFICANCE};

    fn odss(probs: &[f64], capacity: usize, seed: u64) -> OdssSampler {
        OdssSampler::build(
            probs.iter().enumerate().map(|(i, &p)| (i as u64, p)),
            OdssConfig::with_capacity(capacity),
            seed,
        )
        .unwrap()
    }

    fn mask(ids: &[ElementId]) -> usize {
        ids.iter().fold(0, |m, &i| m | 1 << i)
    }

    #[test]
    fn shapes() {
        let s = OdssSampler::new(OdssConfig::with_capacity(8), 0).unwrap();
        assert_eq!(s.shape(), (4, 3, 3));
        assert_eq!(s.level_mass(0).unwrap(), 0.0);
        assert_eq!(s.level_mass(1).unwrap(), 0.0);
        assert_eq!(s.level_mass(2).unwrap(), 0.0);
        assert!(s.level_mass(3).is_err());
        assert_eq!(shape_for(1_000_000), (21, 6, 6));
        assert_eq!(shape_for(10_000_000), (25, 6, 6));
    }

    // x1..x7 with probabilities chosen so the ranges split as
    // {x1, x4, x6}, {x7}, {x2}, {x3, x5}
    const SEVEN: [f64; 7] = [0.9, 0.2, 0.1, 0.6, 0.05, 0.75, 0.4];

    fn seven() -> OdssSampler {
        OdssSampler::build(
            SEVEN.iter().enumerate().map(|(i, &p)| (i as u64 + 1, p)),
            OdssConfig::with_capacity(8),
            1,
        )
        .unwrap()
    }

    fn members(level: &GroupedLevel, k: usize) -> Vec<ElementId> {
        let mut ids: Vec<_> = level.group(k).slots().iter().map(|s| s.id).collect();
        ids.sort();
        ids
    }

    #[test]
    fn seven_element_partition() {
        let s = seven();
        let l0 = s.level0();
        assert_eq!(members(l0, 1), vec![1, 4, 6]);
        assert_eq!(members(l0, 2), vec![7]);
        assert_eq!(members(l0, 3), vec![2]);
        assert_eq!(members(l0, 4), vec![3, 5]);
        assert_eq!(members(s.level1(), 2), vec![2]);
        s.verify().unwrap();
    }

    #[test]
    fn seven_element_insert() {
        let mut s = seven();
        let before = s.row_index();
        s.insert(8, 0.3).unwrap();
        assert_eq!(members(s.level0(), 2), vec![7, 8]);
        assert!((s.level0().success(2) - 0.75).abs() < 1e-15);
        assert_eq!(members(s.level1(), 1), vec![1, 2]);
        assert!(s.level1().group(2).is_empty());
        assert_ne!(s.row_index(), before);
        assert!(s.last_counters().slot_writes <= MAX_SLOT_WRITES);
        s.verify().unwrap();
    }

    #[test]
    fn insert_delete_round_trip() {
        let mut s = seven();
        let reference = seven();
        s.insert(8, 0.3).unwrap();
        s.delete(8).unwrap();
        assert_eq!(s, reference);
    }

    #[test]
    fn update_errors() {
        let mut s = seven();
        assert_eq!(s.insert(1, 0.5), Err(SamplerError::Duplicate(1)));
        assert_eq!(s.delete(42), Err(SamplerError::Unknown(42)));
        assert_eq!(s.modify(42, 0.5), Err(SamplerError::Unknown(42)));
        assert_eq!(s.insert(9, -0.5), Err(SamplerError::InvalidProbability(-0.5)));
        let mut config = OdssConfig::with_capacity(2);
        config.auto_grow = false;
        let mut fixed = OdssSampler::new(config, 0).unwrap();
        fixed.insert(1, 0.5).unwrap();
        fixed.insert(2, 0.5).unwrap();
        assert_eq!(fixed.insert(3, 0.5), Err(SamplerError::CapacityExceeded(2)));
        assert!(OdssSampler::build([(1, 0.5), (1, 0.2)], OdssConfig::default(), 0).is_err());
    }

    #[test]
    fn auto_grow_doubles_capacity() {
        let mut s = OdssSampler::new(OdssConfig::with_capacity(2), 0).unwrap();
        for id in 0..5 {
            s.insert(id, 0.5).unwrap();
        }
        assert_eq!(s.capacity(), 8);
        assert_eq!(s.shape().0, 4);
        s.verify().unwrap();
    }

    #[test]
    fn all_certain() {
        let mut s = odss(&[1.0; 20], 32, 3);
        for _ in 0..100 {
            let mut got = s.query();
            got.sort();
            assert_eq!(got, (0..20).collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_sampler_returns_nothing() {
        let mut s = OdssSampler::new(OdssConfig::with_capacity(100), 3).unwrap();
        assert!(s.query().is_empty());
    }

    #[test]
    fn product_law_n4() {
        let probs = [0.1, 0.4, 0.7, 0.95];
        let law = exact_subset_probs(&probs).unwrap();
        let mut s = odss(&probs, 4, 10);
        let mut counts = vec![0u64; 16];
        let mut out = Vec::new();
        for _ in 0..2_000_000 {
            out.clear();
            s.query_into(&mut out);
            counts[mask(&out)] += 1;
        }
        let fit = goodness_of_fit(&counts, &law);
        assert!(fit.passes(SIGNIFICANCE), "{fit:?}");
    }

    #[test]
    fn small_instances_are_unbiased() {
        let mut gen = RandomSource::new(2024);
        for case in 0..100u64 {
            let n = 1 + gen.uniform_int(5) as usize;
            let probs: Vec<f64> = (0..n)
                .map(|_| match gen.uniform_int(4) {
                    0 => gen.uniform01().powi(6),
                    1 => 1.0,
                    _ => gen.uniform01(),
                })
                .collect();
            let mut s = odss(&probs, n, case);
            let full = case % 20 == 0;
            let reps = if full { 1_000_000 } else { 20_000 };
            let mut counts = vec![0u64; 1 << n];
            let mut out = Vec::new();
            for _ in 0..reps {
                out.clear();
                s.query_into(&mut out);
                counts[mask(&out)] += 1;
            }
            if full {
                let fit = goodness_of_fit(&counts, &exact_subset_probs(&probs).unwrap());
                assert!(fit.passes(SIGNIFICANCE), "{probs:?}: {fit:?}");
            }
            for (i, &p) in probs.iter().enumerate() {
                let hits: u64 = counts.iter().enumerate().filter(|(m, _)| m >> i & 1 == 1).map(|(_, c)| c).sum();
                let rate = hits as f64 / reps as f64;
                assert!((rate - p).abs() <= binomial_envelope(p, reps).max(1e-12), "{probs:?}: {i} at {rate}");
            }
        }
    }

    #[test]
    fn mean_output_size() {
        let n = 100_000;
        let probs = vec![1.0 / n as f64; n];
        let mut s = odss(&probs, n, 4);
        let reps = 100_000;
        let mut out = Vec::new();
        let mut total = 0;
        for _ in 0..reps {
            out.clear();
            s.query_into(&mut out);
            total += out.len();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn mass_bound_example() {
        let n = 10_000;
        let probs = vec![0.01; n];
        let s = odss(&probs, n, 0);
        assert!((s.mass() - 100.0).abs() < 1e-9);
        assert!(s.level_mass(2).unwrap() <= 403.0);
        s.verify().unwrap();
    }

    fn fuzz_ops(s: &mut OdssSampler, live: &mut Vec<u64>, next: &mut u64, steps: usize, src: &mut RandomSource) {
        for _ in 0..steps {
            let choice = src.uniform_int(3);
            let p = match src.uniform_int(4) {
                0 => src.uniform01().powi(8),
                1 => 0.0,
                _ => src.uniform01(),
            };
            if choice == 0 || live.is_empty() {
                s.insert(*next, p).unwrap();
                live.push(*next);
                *next += 1;
            } else if choice == 1 {
                let i = src.uniform_int(live.len() as u64) as usize;
                s.delete(live.swap_remove(i)).unwrap();
            } else {
                let i = src.uniform_int(live.len() as u64) as usize;
                s.modify(live[i], p).unwrap();
            }
            assert!(s.last_counters().slot_writes <= MAX_SLOT_WRITES);
        }
    }

    #[test]
    fn updates_match_rebuild() {
        let mut src = RandomSource::new(31);
        let mut s = OdssSampler::new(OdssConfig::with_capacity(4096), 0).unwrap();
        let (mut live, mut next) = (Vec::new(), 0);
        for _ in 0..20 {
            fuzz_ops(&mut s, &mut live, &mut next, 500, &mut src);
            s.verify().unwrap();
        }
        let mut fresh = OdssSampler::build(s.elements().collect::<Vec<_>>(), *s.config(), 0).unwrap();
        fresh.verify().unwrap();
        for k in 1..=s.shape().0 {
            assert_eq!(s.level0().group(k).len(), fresh.level0().group(k).len());
        }
        for j in 1..=s.shape().1 {
            assert_eq!(s.level1().group(j).len(), fresh.level1().group(j).len());
            assert!((s.level1().success(j) - fresh.level1().success(j)).abs() <= 1e-12);
        }
        assert_eq!(s.table().digits(), fresh.table().digits());
        assert_eq!(s.row_index(), fresh.row_index());
        s.rebuild().unwrap();
        fresh.rebuild().unwrap();
        assert_eq!(s.row_index(), fresh.row_index());
    }

    #[test]
    fn query_counters_are_consistent() {
        let probs: Vec<f64> = (0..1000).map(|i| (i % 17) as f64 / 400.0).collect();
        let mut s = odss(&probs, 1000, 8);
        let mut out = Vec::new();
        for _ in 0..1000 {
            let before = s.rng_draws();
            out.clear();
            s.query_into(&mut out);
            let c = s.last_counters();
            assert_eq!(c.rng_draws, s.rng_draws() - before);
            assert!(c.acceptances >= out.len() as u64);
            assert!(c.candidates_generated >= c.acceptances);
        }
    }

    #[test]
    fn log_star_values() {
        assert_eq!(log_star(1.0), 0);
        assert_eq!(log_star(2.0), 1);
        assert_eq!(log_star(4.0), 2);
        assert_eq!(log_star(16.0), 3);
        assert_eq!(log_star(1e6), 5);
    }

    fn basic_law(probs: &[f64], levels: usize, seed: u64) -> Vec<u64> {
        let elems: Vec<_> = probs.iter().enumerate().map(|(i, &p)| (i as u64, p)).collect();
        let mut s = BasicSampler::with_levels(&elems, levels, seed).unwrap();
        let mut counts = vec![0u64; 1 << probs.len()];
        let mut out = Vec::new();
        for _ in 0..1_000_000 {
            out.clear();
            s.query_into(&mut out);
            counts[mask(&out)] += 1;
        }
        counts
    }

    #[test]
    fn basic_matches_product_law() {
        for (levels, probs) in [(1, [0.3, 0.05, 0.8, 0.5]), (2, [0.1, 0.4, 0.7, 0.95])] {
            let counts = basic_law(&probs, levels, 60 + levels as u64);
            let fit = goodness_of_fit(&counts, &exact_subset_probs(&probs).unwrap());
            assert!(fit.passes(SIGNIFICANCE), "L = {levels}: {fit:?}");
        }
    }

    #[test]
    fn basic_certain_and_unsupported() {
        let elems: Vec<_> = (0..10).map(|i| (i, 1.0)).collect();
        let mut s = BasicSampler::new(&elems, 1).unwrap();
        let mut got = SubsetSampler::query(&mut s);
        got.sort();
        assert_eq!(got, (0..10).collect::<Vec<_>>());
        assert_eq!(s.insert(11, 0.5), Err(SamplerError::Unsupported("basic")));
        assert!(BasicSampler::with_levels(&elems, 0, 1).is_err());
    }

    #[test]
    fn basic_and_odss_agree() {
        let probs = [0.2, 0.6, 0.03, 0.45, 0.9];
        let a = basic_law(&probs, 2, 70);
        let mut s = odss(&probs, 5, 71);
        let mut b = vec![0u64; 32];
        let mut out = Vec::new();
        for _ in 0..1_000_000 {
            out.clear();
            s.query_into(&mut out);
            b[mask(&out)] += 1;
        }
        let fit = two_sample(&a, &b);
        assert!(fit.passes(SIGNIFICANCE), "{fit:?}");
    }
}
