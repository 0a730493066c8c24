use super::{dequantize_values, EmbedError, EmbeddingVector};
use crate::formats::RasterTile;

/// Dequantized embedding of the pixel containing world point `(x, y)`.
pub fn pixel_vector_at(tile: &RasterTile, x: f64, y: f64) -> Result<EmbeddingVector, EmbedError> {
    let out = || EmbedError::OutOfBounds { x, y };
    let (row, col) = tile.transform().world_to_pixel(x, y).map_err(|_| out())?;
    let (row, col) = (row.floor(), col.floor());
    if !(row >= 0.0 && col >= 0.0 && row < f64::from(tile.height()) && col < f64::from(tile.width())) {
        return Err(out());
    }
    let raw = tile.raw_pixel(row as u32, col as u32).ok_or_else(out)?;
    dequantize_values(&raw, &tile.quant())
}
