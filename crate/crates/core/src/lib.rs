//! Dynamic subset sampling.
//!
//! Given `n` independent events, each with its own probability, a subset
//! sampler draws the set of events that occur. [`OdssSampler`] does this in
//! expected `O(1 + mu)` time, where `mu` is the sum of the probabilities, and
//! supports `O(1)` insertion, deletion and probability modification.
//!
//! The structure has three levels:
//!
//! - level 0 buckets elements by probability range `(2^-k, 2^-k+1]`,
//! - level 1 treats each level-0 bucket as an element whose probability is the
//!   chance that the bucket yields at least one candidate, and buckets those,
//! - level 2 is a handful of elements small enough for a precomputed lookup
//!   row over all of their subsets.
//!
//! A query walks top-down: one table draw, then geometric skipping with
//! rejection inside every bucket that was hit.
//!
//! Besides the sampler itself the crate carries the reference samplers used
//! for comparison ([`baselines`]), workload generation and statistical
//! checks ([`harness`]) and a dynamic graph layer for possible worlds and
//! reverse-reachable sets ([`graph`]).

pub mod baselines;
pub mod graph;
pub mod groups;
pub mod harness;
pub mod odss;
pub mod rng;
pub mod sampler;
pub mod table;

pub use baselines::{geoss_query, naive_query, HybridSampler, NaiveSampler};
pub use graph::{DynamicGraph, GraphError, Scaling};
pub use groups::{ElementId, ElementSlot, GroupedLevel};
pub use odss::{BasicSampler, Counters, OdssConfig, OdssSampler};
pub use rng::RandomSource;
pub use sampler::{SamplerError, SubsetSampler};
pub use table::{RowRepr, TableSampler};
