use thiserror::Error;

use crate::embed::EmbedError;
use crate::formats::FormatError;
use crate::geo::GeoError;
use crate::index::IndexError;
use crate::registry::RegistryError;

/// Any error the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}
