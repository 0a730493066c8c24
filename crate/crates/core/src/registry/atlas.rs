use std::fmt;
use std::sync::LazyLock;

use serde::Serialize;

use super::RegistryError;
use crate::formats::{Dtype, QuantScheme, METERS_PER_DEGREE};
use crate::geo::{BoundingBox, TimeInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductKind {
    /// Coordinate encoders; no distributed products exist.
    Location,
    /// One vector per image chip, served as a patch table.
    Patch,
    /// One vector per pixel, served as a raster.
    Pixel,
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProductKind::Location => "Location",
            ProductKind::Patch => "Patch",
            ProductKind::Pixel => "Pixel",
        })
    }
}

impl std::str::FromStr for ProductKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "location" => Ok(ProductKind::Location),
            "patch" => Ok(ProductKind::Patch),
            "pixel" => Ok(ProductKind::Pixel),
            _ => Err(format!("unknown product kind {s:?} (expected location, patch or pixel)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpatialExtent {
    Global,
    /// Nominally global but with gaps whose footprint is not published.
    GlobalSparse,
    /// `bbox` is a coarse EPSG:4326 envelope of the named region.
    Region { name: &'static str, bbox: BoundingBox },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "unit", content = "value", rename_all = "snake_case")]
pub enum SpatialResolution {
    Meters(f64),
    Degrees(f64),
    MetersRange(f64, f64),
}

impl SpatialResolution {
    /// Conservative size in meters: coarse end of ranges, degrees at the equator.
    pub fn as_meters(&self) -> f64 {
        match *self {
            SpatialResolution::Meters(m) => m,
            SpatialResolution::MetersRange(_, hi) => hi,
            SpatialResolution::Degrees(d) => d * METERS_PER_DEGREE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalResolution {
    /// Derived from a single mosaic.
    Snapshot,
    /// Derived from an annual time series.
    Annual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FloatType {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductRecord {
    pub name: &'static str,
    pub kind: ProductKind,
    pub spatial_extent: SpatialExtent,
    pub spatial_resolution: SpatialResolution,
    pub temporal_extent: TimeInterval,
    pub temporal_sparse: bool,
    pub temporal_resolution: TemporalResolution,
    pub dimensions: u16,
    pub storage_dtype: Dtype,
    /// Float type the stored integers are meant to be dequantized into.
    pub analysis_dtype: Option<FloatType>,
    pub dequant: QuantScheme,
    pub license: &'static str,
}

/// Approximate EPSG:4326 envelope of Togo.
const TOGO: BoundingBox = BoundingBox { minx: -0.2, miny: 5.9, maxx: 1.9, maxy: 11.2 };

const I8_SYMMETRIC: QuantScheme = QuantScheme::Affine { scale: 1.0 / 127.0, zero_point: 0.0 };
const U16_UNIT: QuantScheme = QuantScheme::Affine { scale: 1.0 / 65535.0, zero_point: 0.0 };

static PRODUCTS: LazyLock<Vec<ProductRecord>> = LazyLock::new(|| {
    use ProductKind::*;
    use SpatialResolution::*;
    use TemporalResolution::*;
    vec![
        ProductRecord {
            name: "Clay Embeddings",
            kind: Patch,
            spatial_extent: SpatialExtent::GlobalSparse,
            spatial_resolution: Meters(5120.0),
            temporal_extent: TimeInterval::years(2018, 2023),
            temporal_sparse: true,
            temporal_resolution: Snapshot,
            dimensions: 768,
            storage_dtype: Dtype::F32,
            analysis_dtype: None,
            dequant: QuantScheme::Identity,
            license: "ODC-By-1.0",
        },
        ProductRecord {
            name: "Major TOM Embeddings",
            kind: Patch,
            spatial_extent: SpatialExtent::Global,
            spatial_resolution: MetersRange(2140.0, 3560.0),
            temporal_extent: TimeInterval::years(2015, 2024),
            temporal_sparse: true,
            temporal_resolution: Snapshot,
            dimensions: 2048,
            storage_dtype: Dtype::F32,
            analysis_dtype: None,
            dequant: QuantScheme::Identity,
            license: "CC-BY-SA-4.0",
        },
        ProductRecord {
            name: "Earth Index Embeddings",
            kind: Patch,
            spatial_extent: SpatialExtent::Global,
            spatial_resolution: Meters(320.0),
            temporal_extent: TimeInterval::year(2024),
            temporal_sparse: false,
            temporal_resolution: Snapshot,
            dimensions: 384,
            storage_dtype: Dtype::F32,
            analysis_dtype: None,
            dequant: QuantScheme::Identity,
            license: "CC-BY-4.0",
        },
        ProductRecord {
            name: "Copernicus-Embed",
            kind: Patch,
            spatial_extent: SpatialExtent::Global,
            spatial_resolution: Degrees(0.25),
            temporal_extent: TimeInterval::year(2021),
            temporal_sparse: false,
            temporal_resolution: Annual,
            dimensions: 768,
            storage_dtype: Dtype::F32,
            analysis_dtype: None,
            dequant: QuantScheme::Identity,
            license: "CC-BY-4.0",
        },
        ProductRecord {
            name: "Presto Embeddings",
            kind: Pixel,
            spatial_extent: SpatialExtent::Region { name: "Togo", bbox: TOGO },
            spatial_resolution: Meters(10.0),
            temporal_extent: TimeInterval::years(2019, 2020),
            temporal_sparse: false,
            temporal_resolution: Annual,
            dimensions: 128,
            storage_dtype: Dtype::U16,
            analysis_dtype: None,
            dequant: U16_UNIT,
            license: "CC-BY-4.0",
        },
        ProductRecord {
            name: "Tessera Embeddings",
            kind: Pixel,
            spatial_extent: SpatialExtent::GlobalSparse,
            spatial_resolution: Meters(10.0),
            temporal_extent: TimeInterval::years(2017, 2025),
            temporal_sparse: true,
            temporal_resolution: Annual,
            dimensions: 128,
            storage_dtype: Dtype::I8,
            analysis_dtype: Some(FloatType::F32),
            dequant: I8_SYMMETRIC,
            license: "CC-BY-4.0",
        },
        ProductRecord {
            name: "Google Satellite Embedding",
            kind: Pixel,
            spatial_extent: SpatialExtent::Global,
            spatial_resolution: Meters(10.0),
            temporal_extent: TimeInterval::years(2017, 2024),
            temporal_sparse: false,
            temporal_resolution: Annual,
            dimensions: 64,
            storage_dtype: Dtype::I8,
            analysis_dtype: Some(FloatType::F64),
            dequant: I8_SYMMETRIC,
            license: "CC-BY-4.0",
        },
    ]
});

/// The seven published products, in atlas order.
pub fn builtin_products() -> &'static [ProductRecord] {
    &PRODUCTS
}

/// Exact-name lookup.
pub fn product(name: &str) -> Option<&'static ProductRecord> {
    PRODUCTS.iter().find(|p| p.name == name)
}

pub(crate) fn require(name: &str) -> Result<&'static ProductRecord, RegistryError> {
    product(name).ok_or_else(|| RegistryError::UnknownProduct(name.to_string()))
}

impl ProductRecord {
    pub fn is_global(&self) -> bool {
        matches!(self.spatial_extent, SpatialExtent::Global | SpatialExtent::GlobalSparse)
    }

    pub fn is_sparse(&self) -> bool {
        self.temporal_sparse || matches!(self.spatial_extent, SpatialExtent::GlobalSparse)
    }

    /// Calendar years covered, inclusive.
    pub fn years(&self) -> (i32, i32) {
        self.temporal_extent.year_span().expect("registry extents are non-empty")
    }

    /// The nine atlas columns rendered as printed: product, kind, spatial
    /// extent and resolution, temporal extent and resolution, dimensions,
    /// dtype, license. A `*` marks sparse coverage.
    pub fn table_row(&self) -> [String; 9] {
        let extent = match &self.spatial_extent {
            SpatialExtent::Global => "Global".to_string(),
            SpatialExtent::GlobalSparse => "Global*".to_string(),
            SpatialExtent::Region { name, .. } => name.to_string(),
        };
        let resolution = match self.spatial_resolution {
            SpatialResolution::Meters(m) if m >= 1000.0 => format!("{} km", m / 1000.0),
            SpatialResolution::Meters(m) => format!("{m} m"),
            SpatialResolution::MetersRange(lo, hi) => format!("{}–{} km", lo / 1000.0, hi / 1000.0),
            SpatialResolution::Degrees(d) => format!("{d}°"),
        };
        let (first, last) = self.years();
        let mut years = if first == last { first.to_string() } else { format!("{first}–{last}") };
        if self.temporal_sparse {
            years.push('*');
        }
        let temporal = match self.temporal_resolution {
            TemporalResolution::Snapshot => "Snapshot",
            TemporalResolution::Annual => "Annual",
        };
        let dtype = match self.analysis_dtype {
            None => self.storage_dtype.name().to_string(),
            Some(FloatType::F32) => format!("{} → float32", self.storage_dtype.name()),
            Some(FloatType::F64) => format!("{} → float64", self.storage_dtype.name()),
        };
        [
            self.name.to_string(),
            self.kind.to_string(),
            extent,
            resolution,
            years,
            temporal.to_string(),
            self.dimensions.to_string(),
            dtype,
            self.license.to_string(),
        ]
    }
}

/// Query over the atlas; `None` fields match everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProductFilter {
    pub kind: Option<ProductKind>,
    /// Keep products whose temporal extent reaches this year or later.
    pub min_year: Option<i32>,
    /// Keep products whose temporal extent starts at or before this year.
    pub max_year: Option<i32>,
    pub license_prefix: Option<String>,
    /// Resolution ceiling in meters, see [`SpatialResolution::as_meters`].
    pub max_resolution_m: Option<f64>,
    /// Keep products with nominally global extent (sparse or not).
    pub global_only: bool,
}

impl ProductFilter {
    pub fn matches(&self, p: &ProductRecord) -> bool {
        let (first, last) = p.years();
        self.kind.is_none_or(|k| p.kind == k)
            && self.min_year.is_none_or(|y| last >= y)
            && self.max_year.is_none_or(|y| first <= y)
            && self.license_prefix.as_deref().is_none_or(|pre| p.license.starts_with(pre))
            && self.max_resolution_m.is_none_or(|m| p.spatial_resolution.as_meters() <= m)
            && (!self.global_only || p.is_global())
    }
}

pub fn find_products(filter: &ProductFilter) -> Vec<&'static ProductRecord> {
    PRODUCTS.iter().filter(|p| filter.matches(p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Full,
    Partial,
    None,
    /// The product's sparse coverage makes the answer indeterminate.
    UnknownSparse,
}

/// Whether `product_name` can serve the EPSG:4326 box over `time`.
///
/// Only non-sparse global products can answer `Full`. Regional extents are
/// approximate envelopes, so a query inside one is `Partial`.
pub fn coverage_check(product_name: &str, bbox: &BoundingBox, time: &TimeInterval) -> Result<Coverage, RegistryError> {
    let p = require(product_name)?;
    if !p.temporal_extent.intersects(time) || bbox.is_empty() {
        return Ok(Coverage::None);
    }
    if let SpatialExtent::Region { bbox: region, .. } = &p.spatial_extent {
        if !region.intersects(bbox) {
            return Ok(Coverage::None);
        }
    }
    if p.is_sparse() {
        return Ok(Coverage::UnknownSparse);
    }
    let full = matches!(p.spatial_extent, SpatialExtent::Global) && p.temporal_extent.contains(time);
    Ok(if full { Coverage::Full } else { Coverage::Partial })
}
