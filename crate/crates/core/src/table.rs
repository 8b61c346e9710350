//! Lookup-row sampling for a handful of elements.
//!
//! With `m` elements, each probability is rounded up to a multiple of `1/m`
//! and stored as a digit `d_i in 1..=m`. For a fixed digit vector the law of
//! the candidate subset `B` is `w(B) / m^m` with
//! `w(B) = prod_{i in B} d_i * prod_{i not in B} (m - d_i)`, an integer. A row
//! lists every subset `w(B)` times, so a uniform column picks a subset with
//! exactly that law; each candidate is then kept with `p_i / (d_i / m)`.
//!
//! The row for the current digits is addressed by
//! `A = sum_i (d_i - 1) m^i` (0-based `i`), which changes by
//! `(d_new - d_old) m^i` when one digit moves.

use std::num::NonZeroUsize;

use lru::LruCache;
use thiserror::Error;

use crate::rng::RandomSource;

/// Largest `m` with `m^m` representable in a `u64`.
pub const MAX_ELEMENTS: usize = 15;

/// Default cap on dense row length.
pub const DEFAULT_DENSE_BUDGET: u64 = 1 << 20;

pub const DEFAULT_CACHE_ROWS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("{0} elements: the table needs 1..={MAX_ELEMENTS}")]
    UnsupportedSize(usize),
    #[error("digit {digit} at position {position} is outside 1..={m}")]
    InvalidDigit { position: usize, digit: u32, m: usize },
    #[error("row index {0} is out of range")]
    IndexOutOfRange(i128),
    #[error("dense row of {len} entries exceeds the budget of {budget}")]
    DenseBudgetExceeded { len: u64, budget: u64 },
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("element {index} is outside 0..{m}")]
    ElementOutOfRange { index: usize, m: usize },
}

/// Quantized probabilities: `d_i = max(1, ceil(m p_i))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitVector {
    digits: Vec<u32>,
}

impl DigitVector {
    pub fn new(digits: Vec<u32>) -> Result<Self, TableError> {
        let m = digits.len();
        if m == 0 || m > MAX_ELEMENTS {
            return Err(TableError::UnsupportedSize(m));
        }
        if let Some((position, &digit)) = digits
            .iter()
            .enumerate()
            .find(|(_, &d)| d == 0 || d as usize > m)
        {
            return Err(TableError::InvalidDigit { position, digit, m });
        }
        Ok(Self { digits })
    }

    pub fn m(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowIndex(pub u64);

/// Bit `i` set iff element `i` is in the subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask(pub u32);

impl SubsetMask {
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in increasing order, peeled off lowest bit first.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            (rest != 0).then(|| {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                i
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RowRepr {
    /// `m^m` explicit entries, one uniform column pick.
    Dense,
    /// `2^m` running weight totals, binary search on a uniform integer.
    #[default]
    Cdf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LookupRow {
    Dense(Vec<SubsetMask>),
    Cdf(Vec<u64>),
}

impl LookupRow {
    /// Running totals `W(B)`, recovered from either representation.
    pub fn cumulative(&self, m: usize) -> Vec<u64> {
        match self {
            LookupRow::Cdf(w) => w.clone(),
            LookupRow::Dense(entries) => {
                let mut w = vec![0u64; 1 << m];
                for e in entries {
                    w[e.0 as usize] += 1;
                }
                let mut acc = 0;
                for x in &mut w {
                    acc += *x;
                    *x = acc;
                }
                w
            }
        }
    }
}

/// `m^m` as a `u64`.
pub fn row_width(m: usize) -> u64 {
    (m as u64).pow(m as u32)
}

pub fn digit_of(p: f64, m: usize) -> u32 {
    let scaled = m as f64 * p;
    let mut d = scaled.ceil().max(1.0) as u32;
    // keep d / m >= p even if the product rounded down
    if (d as usize) < m && (d as f64) < scaled {
        d += 1;
    }
    d.min(m as u32)
}

pub fn digits_from_probs(probs: &[f64]) -> Result<DigitVector, TableError> {
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(TableError::InvalidProbability(p));
    }
    let m = probs.len();
    DigitVector::new(probs.iter().map(|&p| digit_of(p, m)).collect())
}

pub fn row_index(d: &DigitVector) -> RowIndex {
    let m = d.m() as u64;
    let mut a = 0u64;
    for &digit in d.digits.iter().rev() {
        a = a * m + u64::from(digit - 1);
    }
    RowIndex(a)
}

/// Row index after digit `position` moves from `old` to `new`.
pub fn adjust_index(
    a: RowIndex,
    m: usize,
    position: usize,
    old: u32,
    new: u32,
) -> Result<RowIndex, TableError> {
    let place = i128::from((m as u64).pow(position as u32));
    let next = i128::from(a.0) + (i128::from(new) - i128::from(old)) * place;
    if next < 0 || next >= i128::from(row_width(m)) {
        return Err(TableError::IndexOutOfRange(next));
    }
    Ok(RowIndex(next as u64))
}

/// `w(B)` for every mask `B`, in ascending mask order.
pub fn subset_weights(d: &DigitVector) -> Vec<u64> {
    let m = d.m();
    (0u32..1 << m)
        .map(|mask| {
            d.digits
                .iter()
                .enumerate()
                .map(|(i, &di)| {
                    if mask >> i & 1 == 1 {
                        u64::from(di)
                    } else {
                        m as u64 - u64::from(di)
                    }
                })
                .product()
        })
        .collect()
}

pub fn build_row(d: &DigitVector, repr: RowRepr, dense_budget: u64) -> Result<LookupRow, TableError> {
    let weights = subset_weights(d);
    match repr {
        RowRepr::Cdf => {
            let mut acc = 0;
            Ok(LookupRow::Cdf(
                weights
                    .into_iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect(),
            ))
        }
        RowRepr::Dense => {
            let len = row_width(d.m());
            if len > dense_budget {
                return Err(TableError::DenseBudgetExceeded {
                    len,
                    budget: dense_budget,
                });
            }
            let mut entries = Vec::with_capacity(len as usize);
            for (mask, w) in weights.into_iter().enumerate() {
                entries.extend(std::iter::repeat_n(SubsetMask(mask as u32), w as usize));
            }
            Ok(LookupRow::Dense(entries))
        }
    }
}

/// Draws a candidate subset from a row of width `m^m`.
pub fn row_sample(row: &LookupRow, m: usize, src: &mut RandomSource) -> SubsetMask {
    let r = src.uniform_int(row_width(m));
    match row {
        LookupRow::Dense(entries) => entries[r as usize],
        LookupRow::Cdf(w) => SubsetMask(w.partition_point(|&acc| acc <= r) as u32),
    }
}

/// Every row for `m` elements, indexed by row index. Grows as `m^(2m)`:
/// only sensible for very small `m`.
pub fn full_table(m: usize, repr: RowRepr) -> Result<Vec<LookupRow>, TableError> {
    if m == 0 || m > 4 {
        return Err(TableError::UnsupportedSize(m));
    }
    (0..row_width(m))
        .map(|a| {
            let mut rest = a;
            let digits = (0..m)
                .map(|_| {
                    let d = (rest % m as u64) as u32 + 1;
                    rest /= m as u64;
                    d
                })
                .collect();
            build_row(&DigitVector::new(digits)?, repr, u64::MAX)
        })
        .collect()
}

/// Lazily built rows keyed by row index, least recently used evicted first.
pub struct RowCache {
    rows: LruCache<u64, LookupRow>,
    repr: RowRepr,
    builds: u64,
}

impl RowCache {
    pub fn new(capacity: usize, repr: RowRepr) -> Self {
        Self {
            rows: LruCache::new(NonZeroUsize::new(capacity.max(1)).unwrap()),
            repr,
            builds: 0,
        }
    }

    pub fn repr(&self) -> RowRepr {
        self.repr
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows built so far, including rebuilds after eviction.
    pub fn builds(&self) -> u64 {
        self.builds
    }

    pub fn peek(&self, a: RowIndex) -> Option<&LookupRow> {
        self.rows.peek(&a.0)
    }

    /// The row for `a`, building it on a miss. The dense budget is checked
    /// when the owning sampler is created.
    pub fn fetch(&mut self, a: RowIndex, d: &DigitVector) -> &LookupRow {
        let repr = self.repr;
        let builds = &mut self.builds;
        self.rows.get_or_insert(a.0, || {
            *builds += 1;
            build_row(d, repr, u64::MAX).expect("digit vector validated on entry")
        })
    }
}

impl std::fmt::Debug for RowCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RowCache")
            .field("rows", &self.rows.len())
            .field("capacity", &self.rows.cap())
            .field("repr", &self.repr)
            .finish()
    }
}

/// Subset sampler over `m` elements backed by lookup rows, with O(1)
/// probability changes.
#[derive(Debug)]
pub struct TableSampler {
    probs: Vec<f64>,
    digits: DigitVector,
    index: RowIndex,
    cache: RowCache,
}

impl TableSampler {
    pub fn new(probs: Vec<f64>, repr: RowRepr, dense_budget: u64, cache_rows: usize) -> Result<Self, TableError> {
        let digits = digits_from_probs(&probs)?;
        let m = digits.m();
        if repr == RowRepr::Dense && row_width(m) > dense_budget {
            return Err(TableError::DenseBudgetExceeded {
                len: row_width(m),
                budget: dense_budget,
            });
        }
        let index = row_index(&digits);
        Ok(Self {
            probs,
            digits,
            index,
            cache: RowCache::new(cache_rows, repr),
        })
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn digits(&self) -> &DigitVector {
        &self.digits
    }

    pub fn row_index(&self) -> RowIndex {
        self.index
    }

    pub fn cache(&self) -> &RowCache {
        &self.cache
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sets element `i`'s probability; returns whether its digit moved.
    pub fn set_prob(&mut self, i: usize, p: f64) -> Result<bool, TableError> {
        let m = self.m();
        if i >= m {
            return Err(TableError::ElementOutOfRange { index: i, m });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(TableError::InvalidProbability(p));
        }
        self.probs[i] = p;
        let old = self.digits.digits[i];
        let new = digit_of(p, m);
        if old == new {
            return Ok(false);
        }
        self.index = adjust_index(self.index, m, i, old, new)?;
        self.digits.digits[i] = new;
        Ok(true)
    }

    /// Draws the candidate mask from the current row, then thins each
    /// candidate down to its exact probability. Returns the candidate mask.
    pub fn sample_into(&mut self, src: &mut RandomSource, sink: &mut Vec<usize>) -> SubsetMask {
        let m = self.m();
        let row = self.cache.fetch(self.index, &self.digits);
        let mask = row_sample(row, m, src);
        for i in mask.iter() {
            let p = self.probs[i];
            let scaled = p * m as f64;
            let d = f64::from(self.digits.digits[i]);
            let keep = if scaled >= d {
                true
            } else if p <= 0.0 {
                false
            } else {
                src.uniform01() * d < scaled
            };
            if keep {
                sink.push(i);
            }
        }
        mask
    }

    pub fn query(&mut self, src: &mut RandomSource) -> Vec<usize> {
        let mut out = Vec::new();
        self.sample_into(src, &mut out);
        out
    }

    pub fn verify(&self) -> Result<(), String> {
        let fresh = digits_from_probs(&self.probs).map_err(|e| e.to_string())?;
        if fresh != self.digits {
            return Err(format!("digits {:?} vs fresh {:?}", self.digits, fresh));
        }
        if row_index(&fresh) != self.index {
            return Err(format!("row index {:?} vs fresh {:?}", self.index, row_index(&fresh)));
        }
        Ok(())
    }
}
