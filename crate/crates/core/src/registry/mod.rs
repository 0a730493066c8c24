//! Built-in atlas of the published Earth-embedding products and the
//! provenance of the models and data behind each of them.
//!
//! The tables are fixed at compile time. User-supplied products are described
//! by ingestion metadata instead and never enter this registry.

mod atlas;
mod provenance;

pub use atlas::{
    builtin_products, coverage_check, find_products, product, Coverage, FloatType, ProductFilter, ProductKind,
    ProductRecord, SpatialExtent, SpatialResolution, TemporalResolution,
};
pub use provenance::{openness_report, provenance, OpennessReport, ProvenanceRecord, Terms};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("UnknownProduct: {0:?}")]
    UnknownProduct(String),
}
