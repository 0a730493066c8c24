//! Embedding numerics: dequantization, similarity, exact and IVF top-k
//! retrieval, and k-nearest-neighbor label mapping.
//!
//! All rankings share one total order: better score first, then ascending
//! id. Results therefore never depend on corpus order or worker count.

mod ivf;
mod knn;
mod pixel;
mod quant;
mod search;
mod vector;

pub use ivf::{build_ivf, search_ivf, IvfIndex, MAX_LLOYD_ITERATIONS};
pub use knn::knn_classify;
pub use pixel::pixel_vector_at;
pub use quant::{dequantize, dequantize_values, RawSample};
pub use search::{topk_search, Corpus, Hit, Metric};
pub use vector::{cosine_similarity, l2_distance, EmbeddingVector, LabeledVector};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("DimensionMismatch: expected {expected} dimensions, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ZeroVector: cosine similarity is undefined for a zero-norm vector")]
    ZeroVector,
    #[error("InvalidVector: {0}")]
    InvalidVector(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("TooFewVectors: cannot build {nlist} lists from {n} vectors")]
    TooFewVectors { nlist: usize, n: usize },
    #[error("OutOfBounds: ({x}, {y}) is outside the tile footprint")]
    OutOfBounds { x: f64, y: f64 },
}
