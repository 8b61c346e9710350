//! Workloads, oracles, error measurement and benchmark drivers.

mod bench;
mod record;
pub mod stats;
mod workload;

use thiserror::Error;

use crate::sampler::SamplerError;

pub use bench::{
    bench_query, bench_update, empirical_error, error_protocol, make_sampler, BenchOptions, Method,
    UpdatePlan,
};
pub use record::{format_g6, read_csv, write_csv, BenchRecord, CSV_HEADER};
pub use workload::{exact_subset_probs, gen_workload, Distribution, WorkloadSpec, MAX_ENUMERATION};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("target mass {mu} is infeasible for {n} elements")]
    InfeasibleMass { n: usize, mu: f64 },
    #[error("invalid workload: {0}")]
    InvalidSpec(String),
    #[error("could not place the clipped mass after 64 rounds")]
    Redistribution,
    #[error("{0} elements is too many to enumerate (limit {MAX_ENUMERATION})")]
    TooManyElements(usize),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("unknown distribution {0:?}")]
    UnknownDistribution(String),
    #[error("malformed record: {0}")]
    Record(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
