//! Probability-range buckets with O(1) membership maintenance.
//!
//! A [`GroupedLevel`] with `K` groups puts an element of probability `p` into
//! group `k` when `2^-k < p <= 2^-(k-1)`, and everything at or below
//! `2^-(K-1)` into group `K`. Each group keeps its slots in a flat array; a
//! side index maps every element to `(group, position)` so that deletion is a
//! swap with the last slot.
//!
//! Inside a group every element is first proposed as a *candidate* at the
//! group's upper bound `q_k = 2^-(k-1)` and then kept with probability
//! `p / q_k`. The group's success probability, the chance of at least one
//! candidate, is `1 - (1 - q_k)^|G_k|` and depends only on the group size.

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::rng::{log_complement, RandomSource};

pub type ElementId = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("element {0} is already present")]
    DuplicateElement(ElementId),
    #[error("element {0} is not present")]
    UnknownElement(ElementId),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("group {group} is outside 1..={count}")]
    GroupOutOfRange { group: usize, count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementSlot {
    pub id: ElementId,
    pub prob: f64,
}

/// Where an element lives: 1-based group number and 0-based slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    pub group: u32,
    pub pos: u32,
}

/// `ceil(log2(n))` for `n >= 1`.
pub fn ceil_log2(n: usize) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    usize::BITS - (n - 1).leading_zeros()
}

/// Number of groups for a level holding at most `capacity` elements.
pub fn group_count(capacity: usize) -> usize {
    ceil_log2(capacity.max(1)) as usize + 1
}

/// Group of probability `p` among `count` groups.
///
/// Reads the binary exponent directly so exact powers of two land on the
/// closed upper end of their interval (`2^-k` goes to group `k + 1`).
pub fn group_index_of(p: f64, count: usize) -> Result<usize, GroupError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GroupError::InvalidProbability(p));
    }
    if p == 0.0 || !p.is_normal() {
        return Ok(count);
    }
    let bits = p.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mantissa = bits & ((1u64 << 52) - 1);
    let k = if mantissa == 0 { 1 - exponent } else { -exponent };
    Ok((k as usize).min(count))
}

/// Candidate bound `2^-(k-1)` of group `k`.
pub fn group_bound(k: usize) -> f64 {
    2f64.powi(1 - k as i32)
}

/// `1 - (1 - 2^-(k-1))^size`, evaluated as `-expm1(size * ln1p(-q))`.
pub fn group_success_prob(k: usize, size: usize) -> f64 {
    if size == 0 {
        return 0.0;
    }
    let q = group_bound(k);
    if q >= 1.0 {
        return 1.0;
    }
    -(size as f64 * log_complement(q)).exp_m1()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    k: usize,
    bound: f64,
    ln_miss: f64,
    success: f64,
    slots: Vec<ElementSlot>,
}

impl Group {
    fn new(k: usize) -> Self {
        let bound = group_bound(k);
        Self {
            k,
            bound,
            ln_miss: log_complement(bound),
            success: 0.0,
            slots: Vec::new(),
        }
    }

    pub fn number(&self) -> usize {
        self.k
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn success(&self) -> f64 {
        self.success
    }

    pub fn slots(&self) -> &[ElementSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.slots.iter().map(|s| s.prob).sum()
    }

    fn refresh(&mut self) {
        self.success = group_success_prob(self.k, self.slots.len());
    }

    /// Candidate walk for a group known to hold at least one candidate.
    /// Accepted ids are appended to `sink`; returns the candidate count.
    #[inline]
    pub(crate) fn sample_into(&self, src: &mut RandomSource, sink: &mut Vec<ElementId>) -> u64 {
        let n = self.slots.len() as u64;
        debug_assert!(n > 0);
        let mut candidates = 0;
        let mut h = 0u64;
        let mut r = src.truncated_first_with(self.ln_miss, self.success, n);
        while r <= n - h {
            h += r;
            candidates += 1;
            let slot = self.slots[(h - 1) as usize];
            let keep = if slot.prob >= self.bound {
                true
            } else if slot.prob <= 0.0 {
                false
            } else {
                src.uniform01() * self.bound < slot.prob
            };
            if keep {
                sink.push(slot.id);
            }
            if h == n {
                // any further skip is >= 1 and would leave the group
                break;
            }
            r = src.geometric_with(self.ln_miss);
        }
        candidates
    }
}

/// Result of removing an element: the slot, its group and the id that was
/// moved into the hole, if any.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Removal {
    pub slot: ElementSlot,
    pub group: usize,
    pub relocated: Option<ElementId>,
}

/// Result of changing an element's probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reassignment {
    pub from: usize,
    pub to: usize,
    pub slot_writes: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupedLevel {
    capacity: usize,
    groups: Vec<Group>,
    index: FxHashMap<ElementId, Position>,
}

impl GroupedLevel {
    /// An empty level sized for `capacity` elements; the group count is
    /// fixed from here on.
    pub fn with_capacity(capacity: usize) -> Self {
        let count = group_count(capacity);
        Self {
            capacity,
            groups: (1..=count).map(Group::new).collect(),
            index: FxHashMap::default(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn position(&self, id: ElementId) -> Option<Position> {
        self.index.get(&id).copied()
    }

    pub fn prob(&self, id: ElementId) -> Option<f64> {
        self.position(id).map(|at| self.slot_at(at).prob)
    }

    /// Group `k`, 1-based.
    pub fn group(&self, k: usize) -> &Group {
        &self.groups[k - 1]
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn success(&self, k: usize) -> f64 {
        self.groups[k - 1].success
    }

    pub fn mass(&self) -> f64 {
        self.groups.iter().map(Group::mass).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ElementSlot> {
        self.groups.iter().flat_map(|g| g.slots.iter())
    }

    fn slot_at(&self, at: Position) -> &ElementSlot {
        &self.groups[at.group as usize - 1].slots[at.pos as usize]
    }

    /// Appends `slot` to its group. Returns the group number.
    pub fn insert(&mut self, slot: ElementSlot) -> Result<usize, GroupError> {
        let k = group_index_of(slot.prob, self.groups.len())?;
        if self.index.contains_key(&slot.id) {
            return Err(GroupError::DuplicateElement(slot.id));
        }
        let group = &mut self.groups[k - 1];
        let pos = group.slots.len() as u32;
        group.slots.push(slot);
        group.refresh();
        self.index.insert(
            slot.id,
            Position {
                group: k as u32,
                pos,
            },
        );
        Ok(k)
    }

    /// Swap-with-last removal.
    pub fn remove(&mut self, id: ElementId) -> Result<Removal, GroupError> {
        let at = self
            .index
            .remove(&id)
            .ok_or(GroupError::UnknownElement(id))?;
        let k = at.group as usize;
        let group = &mut self.groups[k - 1];
        let slot = group.slots.swap_remove(at.pos as usize);
        let relocated = group.slots.get(at.pos as usize).map(|moved| moved.id);
        group.refresh();
        if let Some(moved) = relocated {
            self.index.insert(moved, at);
        }
        Ok(Removal {
            slot,
            group: k,
            relocated,
        })
    }

    /// Changes an element's probability, moving it between groups when its
    /// range changes. An unchanged value costs no writes.
    pub fn set_prob(&mut self, id: ElementId, prob: f64) -> Result<Reassignment, GroupError> {
        let to = group_index_of(prob, self.groups.len())?;
        let at = *self.index.get(&id).ok_or(GroupError::UnknownElement(id))?;
        let from = at.group as usize;
        if from == to {
            let slot = &mut self.groups[from - 1].slots[at.pos as usize];
            let slot_writes = u32::from(slot.prob.to_bits() != prob.to_bits());
            slot.prob = prob;
            return Ok(Reassignment {
                from,
                to,
                slot_writes,
            });
        }
        let removal = self.remove(id)?;
        self.insert(ElementSlot { id, prob })?;
        Ok(Reassignment {
            from,
            to,
            slot_writes: 1 + u32::from(removal.relocated.is_some()),
        })
    }

    /// Algorithm for sampling inside group `k` given that it holds a
    /// candidate. Returns the number of candidates examined.
    pub fn sample_within_group(
        &self,
        k: usize,
        src: &mut RandomSource,
        sink: &mut Vec<ElementId>,
    ) -> Result<u64, GroupError> {
        if k == 0 || k > self.groups.len() {
            return Err(GroupError::GroupOutOfRange {
                group: k,
                count: self.groups.len(),
            });
        }
        let group = &self.groups[k - 1];
        if group.is_empty() {
            return Err(GroupError::EmptyGroup(k));
        }
        Ok(group.sample_into(src, sink))
    }

    /// Checks range membership, index round-trips and stored success
    /// probabilities against a fresh evaluation.
    pub fn verify(&self) -> Result<(), String> {
        let count = self.groups.len();
        let mut live = 0;
        for group in &self.groups {
            let k = group.k;
            let upper = group_bound(k);
            let lower = if k == count { 0.0 } else { upper / 2.0 };
            for (pos, slot) in group.slots.iter().enumerate() {
                let in_range = if k == count {
                    slot.prob >= 0.0 && slot.prob <= upper
                } else {
                    slot.prob > lower && slot.prob <= upper
                };
                if !in_range {
                    return Err(format!("element {} with p = {} sits in group {k}", slot.id, slot.prob));
                }
                let expect = Position {
                    group: k as u32,
                    pos: pos as u32,
                };
                if self.index.get(&slot.id) != Some(&expect) {
                    return Err(format!("index of element {} does not round-trip", slot.id));
                }
            }
            let fresh = group_success_prob(k, group.len());
            if (fresh - group.success).abs() > 1e-12 {
                return Err(format!("group {k}: stored success {} vs {fresh}", group.success));
            }
            live += group.len();
        }
        if live != self.index.len() {
            return Err(format!("{live} slots but {} indexed elements", self.index.len()));
        }
        Ok(())
    }
}
