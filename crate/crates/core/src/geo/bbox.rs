use serde::{Deserialize, Serialize};

use super::GeoError;

/// Axis-aligned box in CRS units. Closed-open on both axes: `[minx, maxx) × [miny, maxy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub minx: f64,
    pub miny: f64,
    pub maxx: f64,
    pub maxy: f64,
}

impl BoundingBox {
    /// The empty box. Intersecting anything with it yields `EMPTY`.
    pub const EMPTY: BoundingBox = BoundingBox {
        minx: f64::INFINITY,
        miny: f64::INFINITY,
        maxx: f64::NEG_INFINITY,
        maxy: f64::NEG_INFINITY,
    };

    /// Builds a box, rejecting inverted axes (no antimeridian wrapping) and
    /// non-finite coordinates. Zero-width or zero-height input collapses to
    /// [`BoundingBox::EMPTY`].
    pub fn new(minx: f64, miny: f64, maxx: f64, maxy: f64) -> Result<Self, GeoError> {
        let finite = minx.is_finite() && miny.is_finite() && maxx.is_finite() && maxy.is_finite();
        if !finite || minx > maxx || miny > maxy {
            return Err(GeoError::InvalidBox { minx, miny, maxx, maxy });
        }
        if minx == maxx || miny == maxy {
            return Ok(Self::EMPTY);
        }
        Ok(Self { minx, miny, maxx, maxy })
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self, GeoError> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.minx, self.miny, self.maxx, self.maxy]
    }

    pub fn is_empty(&self) -> bool {
        !(self.minx < self.maxx && self.miny < self.maxy)
    }

    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.maxx - self.minx
        }
    }

    pub fn height(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.maxy - self.miny
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.minx + self.maxx), 0.5 * (self.miny + self.maxy))
    }

    /// Largest box contained in both operands. Boxes sharing only an edge give `EMPTY`.
    pub fn intersection(&self, other: &BoundingBox) -> BoundingBox {
        let b = BoundingBox {
            minx: self.minx.max(other.minx),
            miny: self.miny.max(other.miny),
            maxx: self.maxx.min(other.maxx),
            maxy: self.maxy.min(other.maxy),
        };
        if b.is_empty() {
            Self::EMPTY
        } else {
            b
        }
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.minx.max(other.minx) < self.maxx.min(other.maxx)
            && self.miny.max(other.miny) < self.maxy.min(other.maxy)
    }

    /// Smallest box containing both operands; `EMPTY` is the identity.
    pub fn envelope(&self, other: &BoundingBox) -> BoundingBox {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        BoundingBox {
            minx: self.minx.min(other.minx),
            miny: self.miny.min(other.miny),
            maxx: self.maxx.max(other.maxx),
            maxy: self.maxy.max(other.maxy),
        }
    }

    /// `true` when `other` lies entirely inside `self`. The empty box is inside everything.
    pub fn contains(&self, other: &BoundingBox) -> bool {
        if other.is_empty() {
            return true;
        }
        !self.is_empty()
            && self.minx <= other.minx
            && self.miny <= other.miny
            && other.maxx <= self.maxx
            && other.maxy <= self.maxy
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.minx <= x && x < self.maxx && self.miny <= y && y < self.maxy
    }
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self::EMPTY
    }
}
