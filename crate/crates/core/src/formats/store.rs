//! `ETS` canonical tile store: fixed 136-byte little-endian header, raw
//! pixel-interleaved payload, CRC-32 (IEEE) trailer over the payload.
//!
//! ```text
//!   0  magic "ETS1"        64  quant scale f64
//!   4  version u16 = 1     72  quant zero_point f64
//!   6  flags u16 = 0       80  t_start i64
//!   8  epsg u32            88  t_end i64
//!  12  dims u16            96  height u32
//!  14  dtype u8           100  width u32
//!  15  quant u8           104  product name, 32 bytes, NUL padded
//!  16  transform 6×f64    136  payload … then CRC-32 u32
//! ```

use std::io::{Read, Write};

use super::{truncated, Dtype, FormatError, QuantScheme, RasterTile, TileHeader, MAX_PRODUCT_NAME_LEN};
use crate::geo::{CrsId, GeoTransform, TimeInterval};

pub const STORE_MAGIC: &[u8; 4] = b"ETS1";
pub const STORE_VERSION: u16 = 1;
pub const STORE_HEADER_LEN: usize = 136;

pub fn encode_store(tile: &RasterTile) -> Vec<u8> {
    let h = tile.header();
    let mut out = Vec::with_capacity(STORE_HEADER_LEN + tile.data().len() + 4);
    out.extend_from_slice(STORE_MAGIC);
    out.extend_from_slice(&STORE_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&h.crs.epsg().to_le_bytes());
    out.extend_from_slice(&h.dims.to_le_bytes());
    out.push(h.dtype.code());
    let (qcode, scale, zero_point) = match h.quant {
        QuantScheme::Identity => (0u8, 1.0f64, 0.0f64),
        QuantScheme::Affine { scale, zero_point } => (1u8, scale, zero_point),
    };
    out.push(qcode);
    for c in h.transform.to_array() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&scale.to_le_bytes());
    out.extend_from_slice(&zero_point.to_le_bytes());
    out.extend_from_slice(&h.time.start.to_le_bytes());
    out.extend_from_slice(&h.time.end.to_le_bytes());
    out.extend_from_slice(&h.height.to_le_bytes());
    out.extend_from_slice(&h.width.to_le_bytes());
    let mut name = [0u8; MAX_PRODUCT_NAME_LEN];
    name[..h.product.len()].copy_from_slice(h.product.as_bytes());
    out.extend_from_slice(&name);
    debug_assert_eq!(out.len(), STORE_HEADER_LEN);
    out.extend_from_slice(tile.data());
    out.extend_from_slice(&crc32fast::hash(tile.data()).to_le_bytes());
    out
}

pub fn write_store<W: Write>(tile: &RasterTile, mut sink: W) -> Result<(), FormatError> {
    sink.write_all(&encode_store(tile))?;
    sink.flush()?;
    Ok(())
}

pub fn read_store<R: Read>(mut source: R) -> Result<RasterTile, FormatError> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    decode_store(&buf)
}

fn le<const N: usize>(buf: &[u8], at: usize) -> [u8; N] {
    buf[at..at + N].try_into().expect("header slice")
}

pub fn decode_store(buf: &[u8]) -> Result<RasterTile, FormatError> {
    if buf.len() < 4 {
        return Err(truncated(format!("{} bytes, need a {STORE_HEADER_LEN}-byte header", buf.len())));
    }
    if &buf[..4] != STORE_MAGIC {
        return Err(FormatError::BadMagic);
    }
    if buf.len() < STORE_HEADER_LEN {
        return Err(truncated(format!("{} bytes, need a {STORE_HEADER_LEN}-byte header", buf.len())));
    }
    let version = u16::from_le_bytes(le(buf, 4));
    if version != STORE_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let flags = u16::from_le_bytes(le(buf, 6));
    if flags != 0 {
        return Err(FormatError::Malformed(format!("unknown store flags {flags:#06x}")));
    }
    let epsg = u32::from_le_bytes(le(buf, 8));
    let dims = u16::from_le_bytes(le(buf, 12));
    let dtype = Dtype::from_code(buf[14]).ok_or_else(|| FormatError::UnknownDtype(format!("code {}", buf[14])))?;
    let f64_at = |at: usize| f64::from_le_bytes(le(buf, at));
    let mut coeffs = [0.0; 6];
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c = f64_at(16 + 8 * i);
    }
    let quant = match buf[15] {
        // identity is written as scale 1, zero point 0; anything else would not round-trip
        0 if f64_at(64).to_bits() == 1f64.to_bits() && f64_at(72).to_bits() == 0 => QuantScheme::Identity,
        0 => return Err(FormatError::Malformed("identity quantization with non-default parameters".into())),
        1 => QuantScheme::Affine { scale: f64_at(64), zero_point: f64_at(72) },
        q => return Err(FormatError::Malformed(format!("unknown quantization code {q}"))),
    };
    let time = TimeInterval {
        start: i64::from_le_bytes(le(buf, 80)),
        end: i64::from_le_bytes(le(buf, 88)),
    };
    let height = u32::from_le_bytes(le(buf, 96));
    let width = u32::from_le_bytes(le(buf, 100));
    let name = &buf[104..136];
    let name_len = name.iter().position(|&b| b == 0).unwrap_or(MAX_PRODUCT_NAME_LEN);
    if name[name_len..].iter().any(|&b| b != 0) {
        return Err(FormatError::Malformed("product name has bytes after its NUL terminator".into()));
    }
    let product = std::str::from_utf8(&name[..name_len])
        .map_err(|_| FormatError::Malformed("product name is not UTF-8".into()))?
        .to_string();

    let header = TileHeader {
        width,
        height,
        dims,
        dtype,
        transform: GeoTransform { a: coeffs[0], b: coeffs[1], c: coeffs[2], d: coeffs[3], e: coeffs[4], f: coeffs[5] },
        crs: CrsId::new(epsg)?,
        time,
        quant,
        product,
    };
    let payload_len = header
        .payload_len()
        .filter(|n| n.checked_add(STORE_HEADER_LEN + 4).is_some())
        .ok_or_else(|| FormatError::Malformed("declared payload size overflows".into()))?;
    let end = STORE_HEADER_LEN + payload_len;
    if buf.len() < end + 4 {
        return Err(truncated(format!("{} bytes, header declares {}", buf.len(), end + 4)));
    }
    if buf.len() > end + 4 {
        return Err(FormatError::Malformed(format!("{} trailing bytes after checksum", buf.len() - end - 4)));
    }
    let payload = &buf[STORE_HEADER_LEN..end];
    let expected = u32::from_le_bytes(le(buf, end));
    let found = crc32fast::hash(payload);
    if expected != found {
        return Err(FormatError::ChecksumMismatch { expected, found });
    }
    RasterTile::new(header, payload.to_vec())
}
