//! Spatiotemporal indexing, the dataset algebra behind `a & b` style joins,
//! and geo-samplers that cut datasets into fixed-size patches.

mod dataset;
mod rtree;
mod sampler;

pub use dataset::{GeoDataset, Sample, Source};
pub use rtree::{build_index, IndexEntry, SpatioTemporalIndex, LEAF_CAPACITY};
pub use sampler::{grid_axis_count, grid_samples, random_samples};

use thiserror::Error;

use crate::geo::CrsId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("CrsMismatch: {left} vs {right}")]
    CrsMismatch { left: CrsId, right: CrsId },
    #[error("EmptyIntersection: datasets do not overlap in {0}")]
    EmptyIntersection(&'static str),
    #[error("EmptyDataset: a dataset needs at least one tile or record")]
    EmptyDataset,
    #[error("ZeroResolution: resolution must be positive, got {0}")]
    ZeroResolution(f64),
    #[error("PatchTooLarge: {size} CRS units does not fit in {extent}")]
    PatchTooLarge { size: f64, extent: f64 },
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}
