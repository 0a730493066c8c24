//! Geometric and temporal primitives: boxes, time intervals, affine
//! geotransforms, CRS identifiers and raster orientation.
//!
//! Every type here is an immutable value. Boxes and intervals are closed-open,
//! so two boxes that only share an edge do not intersect.

mod bbox;
mod crs;
mod orientation;
pub(crate) mod time;
mod transform;

pub use bbox::BoundingBox;
pub use crs::{project_3857_to_4326, project_4326_to_3857, CrsId, EARTH_RADIUS_M, MAX_MERCATOR_LAT};
pub use orientation::normalize_orientation;
pub use time::TimeInterval;
pub use transform::GeoTransform;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("InvalidBox: [{minx}, {miny}, {maxx}, {maxy}] (antimeridian wrapping and inverted boxes are rejected)")]
    InvalidBox { minx: f64, miny: f64, maxx: f64, maxy: f64 },
    #[error("InvalidInterval: start {start} is after end {end}")]
    InvalidInterval { start: i64, end: i64 },
    #[error("SingularTransform: determinant {0:e} is too close to zero")]
    SingularTransform(f64),
    #[error("InvalidCrs: EPSG code must be positive")]
    InvalidCrs,
    #[error("LatitudeOutOfRange: {0} (Web Mercator is limited to |lat| <= {MAX_MERCATOR_LAT})")]
    LatitudeOutOfRange(f64),
    #[error("LongitudeOutOfRange: {0}")]
    LongitudeOutOfRange(f64),
    #[error("UnsupportedRotation: transform has non-zero rotation terms (b = {b}, d = {d})")]
    UnsupportedRotation { b: f64, d: f64 },
}
