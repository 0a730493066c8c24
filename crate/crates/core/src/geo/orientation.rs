use super::{GeoError, GeoTransform};
use crate::formats::RasterTile;

/// Returns a north-up copy of `tile` (`e < 0`).
///
/// South-up grids (`e > 0`) get their rows reversed and the origin moved to
/// the opposite edge, so every world coordinate still maps to the same
/// embedding. North-up input is returned as-is.
pub fn normalize_orientation(tile: RasterTile) -> Result<RasterTile, GeoError> {
    let t = *tile.transform();
    if !t.is_axis_aligned() {
        return Err(GeoError::UnsupportedRotation { b: t.b, d: t.d });
    }
    // also rejects e == 0
    GeoTransform::from_array(t.to_array())?;
    if t.e < 0.0 {
        return Ok(tile);
    }

    let height = tile.height() as usize;
    let row_len = tile.data().len() / height;
    let mut flipped = Vec::with_capacity(tile.data().len());
    for row in tile.data().chunks_exact(row_len).rev() {
        flipped.extend_from_slice(row);
    }
    let north_up = GeoTransform {
        e: -t.e,
        f: t.f + t.e * tile.height() as f64,
        ..t
    };
    Ok(tile.replace_grid(north_up, flipped))
}
