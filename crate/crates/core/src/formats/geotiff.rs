//! Minimal GeoTIFF reader: classic TIFF, first IFD, chunky samples, strips or
//! tiles, no compression or deflate.

use std::collections::BTreeMap;
use std::io::Read;

use flate2::read::ZlibDecoder;

use super::{truncated, Dtype, FormatError, QuantScheme, RasterTile, TileHeader};
use crate::geo::{CrsId, GeoTransform, TimeInterval};

const IMAGE_WIDTH: u16 = 256;
const IMAGE_LENGTH: u16 = 257;
const BITS_PER_SAMPLE: u16 = 258;
const COMPRESSION: u16 = 259;
const STRIP_OFFSETS: u16 = 273;
const SAMPLES_PER_PIXEL: u16 = 277;
const ROWS_PER_STRIP: u16 = 278;
const STRIP_BYTE_COUNTS: u16 = 279;
const PLANAR_CONFIGURATION: u16 = 284;
const PREDICTOR: u16 = 317;
const TILE_WIDTH: u16 = 322;
const TILE_LENGTH: u16 = 323;
const TILE_OFFSETS: u16 = 324;
const TILE_BYTE_COUNTS: u16 = 325;
const SAMPLE_FORMAT: u16 = 339;
const MODEL_PIXEL_SCALE: u16 = 33550;
const MODEL_TIEPOINT: u16 = 33922;
const GEO_KEY_DIRECTORY: u16 = 34735;

const GEOGRAPHIC_TYPE_KEY: u16 = 2048;
const PROJECTED_CS_TYPE_KEY: u16 = 3072;

#[derive(Clone, Copy)]
enum ByteOrder {
    Little,
    Big,
}

struct Cursor<'a> {
    buf: &'a [u8],
    order: ByteOrder,
}

impl<'a> Cursor<'a> {
    fn bytes(&self, at: usize, len: usize) -> Result<&'a [u8], FormatError> {
        let end = at.checked_add(len).ok_or_else(|| truncated("offset overflow"))?;
        self.buf
            .get(at..end)
            .ok_or_else(|| truncated(format!("read of {len} bytes at {at} past end of {}-byte file", self.buf.len())))
    }

    fn u16(&self, at: usize) -> Result<u16, FormatError> {
        let b: [u8; 2] = self.bytes(at, 2)?.try_into().unwrap();
        Ok(match self.order {
            ByteOrder::Little => u16::from_le_bytes(b),
            ByteOrder::Big => u16::from_be_bytes(b),
        })
    }

    fn u32(&self, at: usize) -> Result<u32, FormatError> {
        let b: [u8; 4] = self.bytes(at, 4)?.try_into().unwrap();
        Ok(match self.order {
            ByteOrder::Little => u32::from_le_bytes(b),
            ByteOrder::Big => u32::from_be_bytes(b),
        })
    }

    fn u64(&self, at: usize) -> Result<u64, FormatError> {
        let b: [u8; 8] = self.bytes(at, 8)?.try_into().unwrap();
        Ok(match self.order {
            ByteOrder::Little => u64::from_le_bytes(b),
            ByteOrder::Big => u64::from_be_bytes(b),
        })
    }
}

/// One IFD entry with its value bytes resolved (inline or by offset).
struct Entry<'a> {
    field_type: u16,
    count: usize,
    data: &'a [u8],
}

fn type_size(field_type: u16) -> Option<usize> {
    match field_type {
        1 | 2 | 6 | 7 => Some(1),
        3 | 8 => Some(2),
        4 | 9 | 11 => Some(4),
        5 | 10 | 12 => Some(8),
        _ => None,
    }
}

impl Entry<'_> {
    fn ints(&self, cur: &Cursor<'_>) -> Result<Vec<u64>, FormatError> {
        let sub = Cursor { buf: self.data, order: cur.order };
        (0..self.count)
            .map(|i| match self.field_type {
                1 | 7 => Ok(u64::from(self.data[i])),
                3 => sub.u16(2 * i).map(u64::from),
                4 => sub.u32(4 * i).map(u64::from),
                t => Err(FormatError::Malformed(format!("expected an integer field, got TIFF type {t}"))),
            })
            .collect()
    }

    fn doubles(&self, cur: &Cursor<'_>) -> Result<Vec<f64>, FormatError> {
        if self.field_type != 12 {
            return Err(FormatError::Malformed(format!("expected DOUBLE values, got TIFF type {}", self.field_type)));
        }
        let sub = Cursor { buf: self.data, order: cur.order };
        (0..self.count).map(|i| sub.u64(8 * i).map(f64::from_bits)).collect()
    }
}

struct Ifd<'a> {
    entries: BTreeMap<u16, Entry<'a>>,
}

impl<'a> Ifd<'a> {
    fn read(cur: &Cursor<'a>, offset: usize) -> Result<Self, FormatError> {
        let n = cur.u16(offset)? as usize;
        let mut entries = BTreeMap::new();
        for i in 0..n {
            let at = offset + 2 + 12 * i;
            let tag = cur.u16(at)?;
            let field_type = cur.u16(at + 2)?;
            let count = cur.u32(at + 4)? as usize;
            // unknown field types are skippable per TIFF 6.0
            let Some(size) = type_size(field_type) else { continue };
            let len = size
                .checked_mul(count)
                .ok_or_else(|| FormatError::Malformed(format!("tag {tag} count overflows")))?;
            let data = if len <= 4 {
                cur.bytes(at + 8, len)?
            } else {
                cur.bytes(cur.u32(at + 8)? as usize, len)?
            };
            entries.insert(tag, Entry { field_type, count, data });
        }
        Ok(Self { entries })
    }

    fn ints(&self, cur: &Cursor<'_>, tag: u16) -> Result<Option<Vec<u64>>, FormatError> {
        self.entries.get(&tag).map(|e| e.ints(cur)).transpose()
    }

    fn required_ints(&self, cur: &Cursor<'_>, tag: u16, name: &str) -> Result<Vec<u64>, FormatError> {
        match self.ints(cur, tag)? {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(FormatError::Malformed(format!("missing required tag {name} ({tag})"))),
        }
    }

    fn scalar(&self, cur: &Cursor<'_>, tag: u16, name: &str) -> Result<u64, FormatError> {
        Ok(self.required_ints(cur, tag, name)?[0])
    }

    fn optional_scalar(&self, cur: &Cursor<'_>, tag: u16, default: u64) -> Result<u64, FormatError> {
        Ok(self.ints(cur, tag)?.and_then(|v| v.first().copied()).unwrap_or(default))
    }
}

/// Layout of the compressed chunks making up the image.
struct Chunking {
    chunk_width: usize,
    chunk_height: usize,
    across: usize,
    offsets: Vec<u64>,
    byte_counts: Vec<u64>,
    /// Strips may be short at the bottom; tiles are always full-size.
    tiled: bool,
}

/// Parses a GeoTIFF into a [`RasterTile`] in the file's CRS.
///
/// The returned tile carries no product name, covers all time, and uses the
/// identity quantization; callers attach those from product metadata. The
/// transform keeps the file's orientation, see
/// [`normalize_orientation`](crate::geo::normalize_orientation).
pub fn parse_geotiff(bytes: &[u8]) -> Result<RasterTile, FormatError> {
    let order = match bytes.get(..2) {
        Some(b"II") => ByteOrder::Little,
        Some(b"MM") => ByteOrder::Big,
        Some(_) => return Err(FormatError::BadMagic),
        None => return Err(truncated("missing TIFF byte-order mark")),
    };
    let cur = Cursor { buf: bytes, order };
    match cur.u16(2)? {
        42 => {}
        43 => return Err(FormatError::UnsupportedLayout("BigTIFF is not supported".into())),
        _ => return Err(FormatError::BadMagic),
    }
    let ifd = Ifd::read(&cur, cur.u32(4)? as usize)?;

    let width = ifd.scalar(&cur, IMAGE_WIDTH, "ImageWidth")?;
    let height = ifd.scalar(&cur, IMAGE_LENGTH, "ImageLength")?;
    let spp = ifd.optional_scalar(&cur, SAMPLES_PER_PIXEL, 1)?;
    if width == 0 || height == 0 || spp == 0 || width > u64::from(u32::MAX) || height > u64::from(u32::MAX) {
        return Err(FormatError::Malformed(format!("bad image shape {width}×{height}×{spp}")));
    }
    let dims = u16::try_from(spp)
        .map_err(|_| FormatError::UnsupportedLayout(format!("{spp} samples per pixel")))?;

    let compression = ifd.optional_scalar(&cur, COMPRESSION, 1)?;
    if compression != 1 && compression != 8 {
        return Err(FormatError::UnsupportedCompression(compression as u16));
    }
    if ifd.optional_scalar(&cur, PLANAR_CONFIGURATION, 1)? != 1 {
        return Err(FormatError::UnsupportedLayout("planar configuration 2 (separate planes)".into()));
    }
    let predictor = ifd.optional_scalar(&cur, PREDICTOR, 1)?;
    if predictor != 1 {
        return Err(FormatError::UnsupportedLayout(format!("predictor {predictor}")));
    }
    let dtype = sample_dtype(&ifd, &cur)?;

    let chunking = chunking(&ifd, &cur, width as usize, height as usize)?;
    let crs = geokey_crs(&ifd, &cur)?;
    let transform = model_transform(&ifd, &cur)?;

    let data = assemble(&cur, &chunking, width as usize, height as usize, dims as usize, dtype, compression == 8)?;
    let header = TileHeader {
        width: width as u32,
        height: height as u32,
        dims,
        dtype,
        transform,
        crs,
        time: TimeInterval::ALWAYS,
        quant: QuantScheme::Identity,
        product: String::new(),
    };
    RasterTile::new(header, data)
}

fn sample_dtype(ifd: &Ifd<'_>, cur: &Cursor<'_>) -> Result<Dtype, FormatError> {
    let bits = ifd.required_ints(cur, BITS_PER_SAMPLE, "BitsPerSample")?;
    let formats = ifd.ints(cur, SAMPLE_FORMAT)?.unwrap_or_else(|| vec![1]);
    if bits.iter().any(|&b| b != bits[0]) || formats.iter().any(|&f| f != formats[0]) {
        return Err(FormatError::UnsupportedLayout("mixed sample types across channels".into()));
    }
    match (bits[0], formats[0]) {
        (8, 2) => Ok(Dtype::I8),
        (16, 1) => Ok(Dtype::U16),
        (32, 3) => Ok(Dtype::F32),
        (b, f) => Err(FormatError::UnsupportedLayout(format!("{b}-bit samples with SampleFormat {f}"))),
    }
}

fn chunking(ifd: &Ifd<'_>, cur: &Cursor<'_>, width: usize, height: usize) -> Result<Chunking, FormatError> {
    let c = if ifd.entries.contains_key(&TILE_OFFSETS) {
        let tw = ifd.scalar(cur, TILE_WIDTH, "TileWidth")? as usize;
        let th = ifd.scalar(cur, TILE_LENGTH, "TileLength")? as usize;
        if tw == 0 || th == 0 {
            return Err(FormatError::Malformed("zero tile size".into()));
        }
        Chunking {
            chunk_width: tw,
            chunk_height: th,
            across: width.div_ceil(tw),
            offsets: ifd.required_ints(cur, TILE_OFFSETS, "TileOffsets")?,
            byte_counts: ifd.required_ints(cur, TILE_BYTE_COUNTS, "TileByteCounts")?,
            tiled: true,
        }
    } else {
        let rps = ifd.optional_scalar(cur, ROWS_PER_STRIP, u64::from(u32::MAX))?;
        let rps = (rps as usize).clamp(1, height);
        Chunking {
            chunk_width: width,
            chunk_height: rps,
            across: 1,
            offsets: ifd.required_ints(cur, STRIP_OFFSETS, "StripOffsets")?,
            byte_counts: ifd.required_ints(cur, STRIP_BYTE_COUNTS, "StripByteCounts")?,
            tiled: false,
        }
    };
    let needed = c.across * height.div_ceil(c.chunk_height);
    if c.offsets.len() < needed || c.byte_counts.len() < needed {
        return Err(FormatError::Malformed(format!(
            "{} chunk offsets / {} byte counts for {needed} chunks",
            c.offsets.len(),
            c.byte_counts.len()
        )));
    }
    Ok(c)
}

fn geokey_crs(ifd: &Ifd<'_>, cur: &Cursor<'_>) -> Result<CrsId, FormatError> {
    let keys = ifd
        .ints(cur, GEO_KEY_DIRECTORY)?
        .ok_or_else(|| FormatError::MissingGeoKeys("no GeoKeyDirectory tag".into()))?;
    if keys.len() < 4 {
        return Err(FormatError::MissingGeoKeys("GeoKeyDirectory header is incomplete".into()));
    }
    let n = keys[3] as usize;
    let mut geographic = None;
    let mut projected = None;
    for key in keys[4..].chunks_exact(4).take(n) {
        // location 0: value stored inline in the directory
        if key[1] != 0 {
            continue;
        }
        match key[0] as u16 {
            GEOGRAPHIC_TYPE_KEY => geographic = Some(key[3]),
            PROJECTED_CS_TYPE_KEY => projected = Some(key[3]),
            _ => {}
        }
    }
    let code = projected
        .or(geographic)
        .ok_or_else(|| FormatError::MissingGeoKeys("no GeographicType (2048) or ProjectedCSType (3072) key".into()))?;
    CrsId::new(code as u32).map_err(|_| FormatError::MissingGeoKeys("CRS GeoKey has code 0".into()))
}

fn model_transform(ifd: &Ifd<'_>, cur: &Cursor<'_>) -> Result<GeoTransform, FormatError> {
    let scale = ifd
        .entries
        .get(&MODEL_PIXEL_SCALE)
        .ok_or_else(|| FormatError::MissingGeoKeys("no ModelPixelScale tag".into()))?
        .doubles(cur)?;
    let tie = ifd
        .entries
        .get(&MODEL_TIEPOINT)
        .ok_or_else(|| FormatError::MissingGeoKeys("no ModelTiepoint tag".into()))?
        .doubles(cur)?;
    if scale.len() < 2 || tie.len() < 6 {
        return Err(FormatError::MissingGeoKeys("ModelPixelScale/ModelTiepoint too short".into()));
    }
    let (sx, sy) = (scale[0], scale[1]);
    let (i, j, x, y) = (tie[0], tie[1], tie[3], tie[4]);
    Ok(GeoTransform::new(sx, 0.0, x - i * sx, 0.0, -sy, y + j * sy)?)
}

/// Upper bound on deflate's expansion of its input.
const MAX_DEFLATE_RATIO: usize = 1032;

fn assemble(
    cur: &Cursor<'_>,
    c: &Chunking,
    width: usize,
    height: usize,
    dims: usize,
    dtype: Dtype,
    deflate: bool,
) -> Result<Vec<u8>, FormatError> {
    let sample = dtype.size();
    let pixel = dims * sample;
    let out_len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(pixel))
        .ok_or_else(|| FormatError::Malformed("image size overflows".into()))?;
    let down = height.div_ceil(c.chunk_height);
    let full_row = c
        .chunk_width
        .checked_mul(pixel)
        .filter(|row| row.checked_mul(c.chunk_height).is_some())
        .ok_or_else(|| FormatError::Malformed("chunk size overflows".into()))?;

    // Every chunk must lie in the file and be able to hold its rows before the
    // output is allocated, so a forged header cannot demand a huge buffer.
    for idx in 0..down * c.across {
        let rows_here = if c.tiled { c.chunk_height } else { c.chunk_height.min(height - (idx / c.across) * c.chunk_height) };
        let expected = rows_here * full_row;
        let stored = cur.bytes(c.offsets[idx] as usize, c.byte_counts[idx] as usize)?.len();
        let capacity = if deflate { stored.saturating_mul(MAX_DEFLATE_RATIO) } else { stored };
        if capacity < expected {
            return Err(truncated(format!("chunk {idx} holds {stored} bytes, expected {expected}")));
        }
    }

    let mut out = vec![0u8; out_len];

    for cy in 0..down {
        for cx in 0..c.across {
            let idx = cy * c.across + cx;
            let rows_here = if c.tiled { c.chunk_height } else { c.chunk_height.min(height - cy * c.chunk_height) };
            let expected = rows_here * full_row;
            let raw = cur.bytes(c.offsets[idx] as usize, c.byte_counts[idx] as usize)?;
            let decoded;
            let chunk: &[u8] = if deflate {
                let mut buf = Vec::new();
                ZlibDecoder::new(raw)
                    .take(expected as u64)
                    .read_to_end(&mut buf)
                    .map_err(|e| match e.kind() {
                        std::io::ErrorKind::UnexpectedEof => truncated(format!("deflate chunk {idx} ends early")),
                        _ => FormatError::Malformed(format!("deflate chunk {idx}: {e}")),
                    })?;
                decoded = buf;
                &decoded
            } else {
                raw
            };
            if chunk.len() < expected {
                return Err(truncated(format!("chunk {idx} holds {} bytes, expected {expected}", chunk.len())));
            }

            let x0 = cx * c.chunk_width;
            let y0 = cy * c.chunk_height;
            let cols = c.chunk_width.min(width - x0);
            let rows = rows_here.min(height - y0);
            for r in 0..rows {
                let src = &chunk[r * full_row..r * full_row + cols * pixel];
                let dst_at = ((y0 + r) * width + x0) * pixel;
                let dst = &mut out[dst_at..dst_at + cols * pixel];
                dst.copy_from_slice(src);
                if matches!(cur.order, ByteOrder::Big) && sample > 1 {
                    dst.chunks_exact_mut(sample).for_each(<[u8]>::reverse);
                }
            }
        }
    }
    Ok(out)
}
