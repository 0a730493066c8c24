use serde::{Deserialize, Serialize};

use super::{BoundingBox, GeoError};

const SINGULAR_EPS: f64 = 1e-12;

/// Affine map from pixel space to world space:
/// `x = a·col + b·row + c`, `y = d·col + e·row + f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl GeoTransform {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self, GeoError> {
        let t = Self { a, b, c, d, e, f };
        let det = t.determinant();
        if !det.is_finite() || det.abs() < SINGULAR_EPS {
            return Err(GeoError::SingularTransform(det));
        }
        Ok(t)
    }

    /// North-up grid with square-or-not pixels and origin at the top-left corner.
    pub fn north_up(origin_x: f64, origin_y: f64, pixel_width: f64, pixel_height: f64) -> Result<Self, GeoError> {
        Self::new(pixel_width, 0.0, origin_x, 0.0, -pixel_height, origin_y)
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self, GeoError> {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.b == 0.0 && self.d == 0.0
    }

    pub fn pixel_to_world(&self, row: f64, col: f64) -> (f64, f64) {
        (
            self.a * col + self.b * row + self.c,
            self.d * col + self.e * row + self.f,
        )
    }

    /// Exact inverse of [`GeoTransform::pixel_to_world`], returning `(row, col)`.
    pub fn world_to_pixel(&self, x: f64, y: f64) -> Result<(f64, f64), GeoError> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < SINGULAR_EPS {
            return Err(GeoError::SingularTransform(det));
        }
        let dx = x - self.c;
        let dy = y - self.f;
        let col = (self.e * dx - self.b * dy) / det;
        let row = (-self.d * dx + self.a * dy) / det;
        Ok((row, col))
    }

    /// World-space envelope of a `width × height` pixel grid.
    pub fn footprint(&self, width: u32, height: u32) -> BoundingBox {
        let (w, h) = (f64::from(width), f64::from(height));
        let corners = [
            self.pixel_to_world(0.0, 0.0),
            self.pixel_to_world(0.0, w),
            self.pixel_to_world(h, 0.0),
            self.pixel_to_world(h, w),
        ];
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for (x, y) in corners {
            bb[0] = bb[0].min(x);
            bb[1] = bb[1].min(y);
            bb[2] = bb[2].max(x);
            bb[3] = bb[3].max(y);
        }
        BoundingBox::from_array(bb).unwrap_or(BoundingBox::EMPTY)
    }

    /// Ground size of one pixel along the coarser axis, in CRS units.
    pub fn resolution(&self) -> f64 {
        let sx = self.a.hypot(self.d);
        let sy = self.b.hypot(self.e);
        sx.min(sy)
    }
}
