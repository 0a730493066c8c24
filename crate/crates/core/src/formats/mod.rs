//! Ingestion of the three distribution shapes embedding products ship in
//! (GeoTIFF rasters, line-delimited patch tables, bare tensor dumps with a
//! JSON sidecar) and the canonical `ETS` tile store.

mod geotiff;
mod patch;
mod rawgrid;
mod store;
mod tile;

pub use geotiff::parse_geotiff;
pub use patch::{parse_patch_table, write_patch_table, PatchRecord, METERS_PER_DEGREE};
pub use rawgrid::{parse_raw_grid, RawGridSidecar};
pub use store::{decode_store, encode_store, read_store, write_store, STORE_HEADER_LEN, STORE_MAGIC, STORE_VERSION};
pub use tile::{Dtype, QuantScheme, RasterTile, TileHeader, MAX_PRODUCT_NAME_LEN};

use thiserror::Error;

use crate::geo::GeoError;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("BadMagic: unrecognized file signature")]
    BadMagic,
    #[error("UnsupportedVersion: store version {0}")]
    UnsupportedVersion(u16),
    #[error("ChecksumMismatch: payload CRC-32 {found:08x}, header says {expected:08x}")]
    ChecksumMismatch { expected: u32, found: u32 },
    #[error("TruncatedFile: {0}")]
    TruncatedFile(String),
    #[error("UnsupportedCompression: TIFF compression {0}")]
    UnsupportedCompression(u16),
    #[error("MissingGeoKeys: {0}")]
    MissingGeoKeys(String),
    #[error("UnsupportedLayout: {0}")]
    UnsupportedLayout(String),
    #[error("Malformed: {0}")]
    Malformed(String),
    #[error("MalformedLine: line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("EmbeddingLengthMismatch: line {line}: expected {expected} values, found {found}")]
    EmbeddingLengthMismatch { line: usize, expected: usize, found: usize },
    #[error("BadTimestamp: line {line}: {value:?}")]
    BadTimestamp { line: usize, value: String },
    #[error("SizeMismatch: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: u64, found: u64 },
    #[error("MissingField: {0}")]
    MissingField(String),
    #[error("UnknownDtype: {0:?}")]
    UnknownDtype(String),
    #[error("InvalidTile: {0}")]
    InvalidTile(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn truncated(what: impl Into<String>) -> FormatError {
    FormatError::TruncatedFile(what.into())
}
