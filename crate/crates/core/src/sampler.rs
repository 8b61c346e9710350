use thiserror::Error;

use crate::groups::{ElementId, GroupError};
use crate::table::TableError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("element {0} is already present")]
    Duplicate(ElementId),
    #[error("element {0} is not present")]
    Unknown(ElementId),
    #[error("capacity {0} exceeded")]
    CapacityExceeded(usize),
    #[error("{0} does not support updates")]
    Unsupported(&'static str),
    #[error("level {0} does not exist")]
    LevelOutOfRange(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Table(#[from] TableError),
}

pub(crate) fn check_prob(p: f64) -> Result<(), SamplerError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SamplerError::InvalidProbability(p))
    }
}

/// Common face of every sampler the harness drives.
pub trait SubsetSampler {
    fn name(&self) -> &'static str;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError>;

    fn delete(&mut self, id: ElementId) -> Result<(), SamplerError>;

    fn modify(&mut self, id: ElementId, p: f64) -> Result<(), SamplerError>;

    /// Appends one sample to `out`; ids come in no particular order.
    fn query_into(&mut self, out: &mut Vec<ElementId>);

    fn query(&mut self) -> Vec<ElementId> {
        let mut out = Vec::new();
        self.query_into(&mut out);
        out
    }

    /// Uniform draws taken from the sampler's own source so far.
    fn rng_draws(&self) -> u64;
}
