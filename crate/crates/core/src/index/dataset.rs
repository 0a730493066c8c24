use std::sync::Arc;

use super::{IndexEntry, IndexError, SpatioTemporalIndex};
use crate::embed::{pixel_vector_at, EmbeddingVector};
use crate::formats::{PatchRecord, RasterTile};
use crate::geo::{BoundingBox, CrsId, TimeInterval};

/// What a dataset is built from.
#[derive(Debug)]
pub enum Source {
    Raster { tiles: Vec<RasterTile>, index: SpatioTemporalIndex },
    Patch { records: Vec<PatchRecord>, index: SpatioTemporalIndex },
    /// Samples pair up the two sides over their common extent.
    Intersection(GeoDataset, GeoDataset),
    /// Requests go to the left side when it overlaps them, else the right.
    Union(GeoDataset, GeoDataset),
}

#[derive(Debug)]
struct Inner {
    source: Source,
    bounds: BoundingBox,
    time: TimeInterval,
    crs: CrsId,
    resolution: Option<f64>,
}

/// Queryable, cheaply clonable collection of raster tiles or patch records.
#[derive(Debug, Clone)]
pub struct GeoDataset(Arc<Inner>);

/// Result of querying a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample<'a> {
    Tiles(Vec<&'a RasterTile>),
    Patches(Vec<&'a PatchRecord>),
    /// Left and right halves of an intersection, in operand order.
    Pair(Box<Sample<'a>>, Box<Sample<'a>>),
}

impl Sample<'_> {
    pub fn is_empty(&self) -> bool {
        match self {
            Sample::Tiles(t) => t.is_empty(),
            Sample::Patches(p) => p.is_empty(),
            Sample::Pair(l, r) => l.is_empty() && r.is_empty(),
        }
    }
}

fn finer(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn same_crs(a: &GeoDataset, b: &GeoDataset) -> Result<CrsId, IndexError> {
    if a.crs() != b.crs() {
        return Err(IndexError::CrsMismatch { left: a.crs(), right: b.crs() });
    }
    Ok(a.crs())
}

/// Degenerate-free box around a single point, for closed-open point lookups.
fn point_box(x: f64, y: f64) -> BoundingBox {
    BoundingBox { minx: x, miny: y, maxx: x.next_up(), maxy: y.next_up() }
}

impl GeoDataset {
    /// Raster-backed dataset. All tiles must share one CRS; resolution is the finest tile's.
    pub fn from_tiles(tiles: Vec<RasterTile>) -> Result<Self, IndexError> {
        let first = tiles.first().ok_or(IndexError::EmptyDataset)?;
        let crs = first.crs();
        if let Some(t) = tiles.iter().find(|t| t.crs() != crs) {
            return Err(IndexError::CrsMismatch { left: crs, right: t.crs() });
        }
        let resolution = tiles.iter().map(|t| t.transform().resolution()).fold(f64::INFINITY, f64::min);
        let index = SpatioTemporalIndex::build(
            tiles.iter().enumerate().map(|(i, t)| IndexEntry { id: i as u64, bbox: t.footprint(), time: t.time() }),
        );
        let (bounds, time) = index.bounds();
        Ok(Self(Arc::new(Inner { source: Source::Raster { tiles, index }, bounds, time, crs, resolution: Some(resolution) })))
    }

    /// Patch-backed dataset in EPSG:4326.
    pub fn from_patches(records: Vec<PatchRecord>) -> Result<Self, IndexError> {
        if records.is_empty() {
            return Err(IndexError::EmptyDataset);
        }
        let index = SpatioTemporalIndex::build(
            records.iter().enumerate().map(|(i, r)| IndexEntry { id: i as u64, bbox: r.footprint, time: r.time }),
        );
        let (bounds, time) = index.bounds();
        Ok(Self(Arc::new(Inner {
            source: Source::Patch { records, index },
            bounds,
            time,
            crs: CrsId::WGS84,
            resolution: None,
        })))
    }

    /// Spatiotemporal intersection. Bounds and time are component-wise
    /// intersections; raster resolution is the finer of the two.
    pub fn intersect(&self, other: &GeoDataset) -> Result<Self, IndexError> {
        let crs = same_crs(self, other)?;
        let bounds = self.bounds().intersection(&other.bounds());
        if bounds.is_empty() {
            return Err(IndexError::EmptyIntersection("space"));
        }
        let time = self.time_bounds().intersection(&other.time_bounds());
        if time.is_empty() {
            return Err(IndexError::EmptyIntersection("time"));
        }
        Ok(Self(Arc::new(Inner {
            source: Source::Intersection(self.clone(), other.clone()),
            bounds,
            time,
            crs,
            resolution: finer(self.resolution(), other.resolution()),
        })))
    }

    /// Union with left precedence where the operands overlap.
    pub fn union(&self, other: &GeoDataset) -> Result<Self, IndexError> {
        let crs = same_crs(self, other)?;
        Ok(Self(Arc::new(Inner {
            source: Source::Union(self.clone(), other.clone()),
            bounds: self.bounds().envelope(&other.bounds()),
            time: self.time_bounds().envelope(&other.time_bounds()),
            crs,
            resolution: finer(self.resolution(), other.resolution()),
        })))
    }

    pub fn source(&self) -> &Source {
        &self.0.source
    }

    pub fn bounds(&self) -> BoundingBox {
        self.0.bounds
    }

    pub fn time_bounds(&self) -> TimeInterval {
        self.0.time
    }

    pub fn crs(&self) -> CrsId {
        self.0.crs
    }

    /// CRS units per pixel; `None` when nothing raster-backed is involved.
    pub fn resolution(&self) -> Option<f64> {
        self.0.resolution
    }

    fn covers(&self, bbox: &BoundingBox, time: &TimeInterval) -> bool {
        self.bounds().intersects(bbox) && self.time_bounds().intersects(time)
    }

    /// Everything intersecting `bbox × time`, clipped to this dataset's extent.
    pub fn query(&self, bbox: &BoundingBox, time: &TimeInterval) -> Sample<'_> {
        match &self.0.source {
            Source::Raster { tiles, index } => {
                Sample::Tiles(index.query(bbox, time).into_iter().map(|i| &tiles[i as usize]).collect())
            }
            Source::Patch { records, index } => {
                Sample::Patches(index.query(bbox, time).into_iter().map(|i| &records[i as usize]).collect())
            }
            Source::Intersection(l, r) => {
                let bbox = bbox.intersection(&self.bounds());
                let time = time.intersection(&self.time_bounds());
                Sample::Pair(Box::new(l.query(&bbox, &time)), Box::new(r.query(&bbox, &time)))
            }
            Source::Union(l, r) => {
                if l.covers(bbox, time) {
                    l.query(bbox, time)
                } else {
                    r.query(bbox, time)
                }
            }
        }
    }

    /// Dequantized embedding at a world point from the first matching tile
    /// (raster-backed datasets and unions of them). Intersections answer
    /// from their left operand; use [`GeoDataset::pair_at`] for both sides.
    pub fn vector_at(&self, x: f64, y: f64, time: &TimeInterval) -> Option<EmbeddingVector> {
        let point = point_box(x, y);
        match &self.0.source {
            Source::Raster { tiles, index } => index
                .query(&point, time)
                .into_iter()
                .find_map(|i| pixel_vector_at(&tiles[i as usize], x, y).ok()),
            Source::Patch { .. } => None,
            Source::Intersection(l, _) => {
                if self.covers(&point, time) {
                    l.vector_at(x, y, time)
                } else {
                    None
                }
            }
            Source::Union(l, r) => {
                if l.covers(&point, time) {
                    l.vector_at(x, y, time)
                } else {
                    r.vector_at(x, y, time)
                }
            }
        }
    }

    /// Both operands' vectors at a point inside an intersection.
    pub fn pair_at(&self, x: f64, y: f64, time: &TimeInterval) -> Option<(EmbeddingVector, EmbeddingVector)> {
        match &self.0.source {
            Source::Intersection(l, r) if self.covers(&point_box(x, y), time) => {
                let t = time.intersection(&self.time_bounds());
                Some((l.vector_at(x, y, &t)?, r.vector_at(x, y, &t)?))
            }
            _ => None,
        }
    }
}
