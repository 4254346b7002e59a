//! Inference of mesoscale group structure and optimal maturity-layer
//! granularity in layered, directed, weighted interbank multigraphs.
//!
//! The toolkit models each monthly interbank lending network (ILN) as a
//! layered multigraph, one layer per loan maturity class. A microcanonical
//! degree-corrected stochastic block model with log-normal edge weights is
//! fitted per layer under a shared node partition, and the description
//! length (in bits) of the whole layered model selects both the number of
//! bank groups and the optimal granularity (OG): the partition of maturity
//! layers into bins that compresses the data most.
//!
//! Modules:
//! - [`net`]: layered multigraph data model, loan ingestion and layer algebra
//! - [`io`]: CSV loan records and the versioned JSON graph store
//! - [`stats`]: descriptive network statistics (densities, degrees, clustering, ...)
//! - [`sbm`]: exact description-length terms for a single layer
//! - [`layered`]: shared-partition multilayer DL, bin-set priors, extension term
//! - [`infer`]: agglomerative + MCMC search for the MAP partition and the OG
//! - [`timeseries`]: month-by-month pipeline and downstream analyses
//! - [`synth`]: seeded generators for planted-structure instances

pub mod comb;
pub mod infer;
pub mod io;
pub mod layered;
pub mod net;
pub mod sbm;
pub mod stats;
pub mod synth;
pub mod timeseries;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("record {row}: {reason}")]
    BadRecord { row: u64, reason: String },
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("layer index {0} out of range")]
    BadLayer(usize),
    #[error("bin set is not a partition of the layers: {0}")]
    BadBinSet(String),
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
