use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::IndexError;
use crate::geo::BoundingBox;

/// Extent in pixels, snapped to an integer when within rounding noise of one.
fn extent_pixels(extent: f64, resolution: f64) -> f64 {
    let px = extent / resolution;
    let r = px.round();
    if (px - r).abs() <= 1e-9 * px.max(1.0) {
        r
    } else {
        px
    }
}

fn check(bounds: &BoundingBox, resolution: f64, size_px: u32) -> Result<(), IndexError> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(IndexError::ZeroResolution(resolution));
    }
    if size_px == 0 {
        return Err(IndexError::InvalidArgument("patch size must be at least 1 pixel".into()));
    }
    if bounds.is_empty() {
        return Err(IndexError::InvalidArgument("sampling bounds are empty".into()));
    }
    Ok(())
}

/// Number of patch positions along one axis.
///
/// One when the extent fits in a single patch, otherwise
/// `⌈(extent_px − size_px) / stride_px⌉ + 1`.
pub fn grid_axis_count(extent: f64, resolution: f64, size_px: u32, stride_px: u32) -> usize {
    let px = extent_pixels(extent, resolution);
    let size = f64::from(size_px);
    if px <= size {
        1
    } else {
        ((px - size) / f64::from(stride_px)).ceil() as usize + 1
    }
}

fn axis_positions(min: f64, max: f64, resolution: f64, size_px: u32, stride_px: u32) -> Vec<f64> {
    let count = grid_axis_count(max - min, resolution, size_px, stride_px);
    if count == 1 {
        return vec![min];
    }
    let step = f64::from(stride_px) * resolution;
    let mut out: Vec<f64> = (0..count - 1).map(|k| min + k as f64 * step).collect();
    // last patch is pulled back so its far edge sits on the bounds
    out.push(max - f64::from(size_px) * resolution);
    out
}

/// Regular grid of `size_px × size_px` patches covering `bounds`, row-major
/// with y outer. The last patch on each axis is clamped to the far edge
/// instead of padding past it.
pub fn grid_samples(
    bounds: &BoundingBox,
    resolution: f64,
    size_px: u32,
    stride_px: u32,
) -> Result<Vec<BoundingBox>, IndexError> {
    check(bounds, resolution, size_px)?;
    if stride_px == 0 {
        return Err(IndexError::InvalidArgument("stride must be at least 1 pixel".into()));
    }
    let side = f64::from(size_px) * resolution;
    let xs = axis_positions(bounds.minx, bounds.maxx, resolution, size_px, stride_px);
    let ys = axis_positions(bounds.miny, bounds.maxy, resolution, size_px, stride_px);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            out.push(BoundingBox { minx: x, miny: y, maxx: x + side, maxy: y + side });
        }
    }
    Ok(out)
}

fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n` patches with origins drawn uniformly from a splitmix64 stream seeded
/// with `seed` (x then y per patch). Identical seeds give identical output.
pub fn random_samples(
    bounds: &BoundingBox,
    resolution: f64,
    size_px: u32,
    n: u32,
    seed: u64,
) -> Result<Vec<BoundingBox>, IndexError> {
    check(bounds, resolution, size_px)?;
    let side = f64::from(size_px) * resolution;
    for extent in [bounds.width(), bounds.height()] {
        if side > extent {
            return Err(IndexError::PatchTooLarge { size: side, extent });
        }
    }
    let mut rng = SplitMix64::from_seed(seed.to_le_bytes());
    let (free_x, free_y) = (bounds.width() - side, bounds.height() - side);
    Ok((0..n)
        .map(|_| {
            let x = bounds.minx + unit(&mut rng) * free_x;
            let y = bounds.miny + unit(&mut rng) * free_y;
            BoundingBox { minx: x, miny: y, maxx: x + side, maxy: y + side }
        })
        .collect())
}
