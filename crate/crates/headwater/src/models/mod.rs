//! Synthetic instances plus the cost models the index is judged against.
//!
//! Two reference designs bracket the indexed approach. The baseline
//! stores nothing beyond raw catchments and dissolves the whole upstream
//! set per query; the processed model precomputes every watershed and
//! answers queries by lookup. [`compare_models`] runs both next to the
//! index for a list of grouping bases and lays the counts out as one
//! report, in an aligned table and a `model,metric,value` file.

mod metrics;
mod reference;
mod synth;

pub use metrics::{
    compare_models, AvgPair, CountPair, LrgRow, MetricsReport, ModelCosts, ReductionSet,
};
pub use reference::{baseline_query, processed_build, ProcessedModel};
pub use synth::{generate, generate_tree, SyntheticSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a {width}x{height} grid cannot hold {n} catchments")]
    GridTooSmall { width: u32, height: u32, n: u64 },
    #[error("at least one grouping base is required")]
    NoBases,
    #[error(transparent)]
    Index(#[from] crate::lrg::LrgError),
    #[error(transparent)]
    Query(#[from] crate::sw::QueryError),
}
