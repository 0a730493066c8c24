//! Unified access to pre-computed Earth-embedding products.
//!
//! - [`geo`]: boxes, time intervals, geotransforms, Web Mercator, orientation.
//! - [`registry`]: the built-in product atlas and its provenance records.
//! - [`formats`]: GeoTIFF, patch-table and raw-grid ingestion; the `ETS` store.
//! - [`index`]: STR R-tree, dataset intersection/union, grid and random samplers.
//! - [`embed`]: dequantization, cosine/L2 top-k, IVF search, kNN mapping.
//! - [`cli`]: the `geodex` command line.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod embed;
pub mod formats;
pub mod geo;
pub mod index;
pub mod registry;

mod error;

pub use error::Error;
