use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::geo::{BoundingBox, CrsId, GeoTransform, TimeInterval};

/// Longest product name the store header can hold.
pub const MAX_PRODUCT_NAME_LEN: usize = 32;

/// Storage type of one embedding channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    I8,
    U16,
    F32,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::I8 => 1,
            Dtype::U16 => 2,
            Dtype::F32 => 4,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Dtype::I8 => 1,
            Dtype::U16 => 2,
            Dtype::F32 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::I8),
            2 => Some(Dtype::U16),
            3 => Some(Dtype::F32),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::I8 => "int8",
            Dtype::U16 => "uint16",
            Dtype::F32 => "float32",
        }
    }

    /// Decodes one little-endian sample.
    pub(crate) fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Dtype::I8 => f64::from(b[0] as i8),
            Dtype::U16 => f64::from(u16::from_le_bytes([b[0], b[1]])),
            Dtype::F32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dtype {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "i8" | "int8" => Ok(Dtype::I8),
            "u16" | "uint16" => Ok(Dtype::U16),
            "f32" | "float32" => Ok(Dtype::F32),
            _ => Err(FormatError::UnknownDtype(s.to_string())),
        }
    }
}

/// Integer-to-float mapping applied when reading stored embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuantScheme {
    #[default]
    Identity,
    /// `value = scale · (raw − zero_point)`
    Affine { scale: f64, zero_point: f64 },
}

impl QuantScheme {
    pub fn affine(scale: f64, zero_point: f64) -> Result<Self, FormatError> {
        if !(scale > 0.0) || !scale.is_finite() || !zero_point.is_finite() {
            return Err(FormatError::InvalidTile(format!("quantization scale must be finite and > 0, got {scale}")));
        }
        Ok(QuantScheme::Affine { scale, zero_point })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, QuantScheme::Identity)
    }

    pub(crate) fn validate(&self) -> Result<(), FormatError> {
        match *self {
            QuantScheme::Identity => Ok(()),
            QuantScheme::Affine { scale, zero_point } => Self::affine(scale, zero_point).map(|_| ()),
        }
    }
}

/// Everything about a raster tile except its payload.
#[derive(Debug, Clone, PartialEq)]
pub struct TileHeader {
    pub width: u32,
    pub height: u32,
    /// Embedding channels per pixel.
    pub dims: u16,
    pub dtype: Dtype,
    pub transform: GeoTransform,
    pub crs: CrsId,
    pub time: TimeInterval,
    pub quant: QuantScheme,
    pub product: String,
}

impl TileHeader {
    pub fn payload_len(&self) -> Option<usize> {
        (self.width as usize)
            .checked_mul(self.height as usize)?
            .checked_mul(self.dims as usize)?
            .checked_mul(self.dtype.size())
    }

    pub fn footprint(&self) -> BoundingBox {
        self.transform.footprint(self.width, self.height)
    }
}

/// Georeferenced `height × width × dims` embedding grid.
///
/// The payload is row-major and pixel-interleaved: all channels of one pixel
/// are contiguous. Samples are stored little-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterTile {
    header: TileHeader,
    data: Vec<u8>,
}

impl RasterTile {
    pub fn new(header: TileHeader, data: Vec<u8>) -> Result<Self, FormatError> {
        if header.width == 0 || header.height == 0 || header.dims == 0 {
            return Err(FormatError::InvalidTile("width, height and dims must be positive".into()));
        }
        let expected = header
            .payload_len()
            .ok_or_else(|| FormatError::InvalidTile("payload size overflows".into()))?;
        if data.len() != expected {
            return Err(FormatError::SizeMismatch { expected: expected as u64, found: data.len() as u64 });
        }
        GeoTransform::from_array(header.transform.to_array())?;
        if header.time.is_empty() {
            return Err(FormatError::InvalidTile("time interval is empty".into()));
        }
        header.quant.validate()?;
        validate_product_name(&header.product)?;
        Ok(Self { header, data })
    }

    /// Builds an `F32` tile from native floats.
    pub fn from_f32(mut header: TileHeader, values: &[f32]) -> Result<Self, FormatError> {
        header.dtype = Dtype::F32;
        let data = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self::new(header, data)
    }

    pub fn header(&self) -> &TileHeader {
        &self.header
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_parts(self) -> (TileHeader, Vec<u8>) {
        (self.header, self.data)
    }

    pub fn width(&self) -> u32 {
        self.header.width
    }

    pub fn height(&self) -> u32 {
        self.header.height
    }

    pub fn dims(&self) -> u16 {
        self.header.dims
    }

    pub fn dtype(&self) -> Dtype {
        self.header.dtype
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.header.transform
    }

    pub fn crs(&self) -> CrsId {
        self.header.crs
    }

    pub fn time(&self) -> TimeInterval {
        self.header.time
    }

    pub fn quant(&self) -> QuantScheme {
        self.header.quant
    }

    pub fn product(&self) -> &str {
        &self.header.product
    }

    pub fn footprint(&self) -> BoundingBox {
        self.header.footprint()
    }

    fn pixel_stride(&self) -> usize {
        self.header.dims as usize * self.header.dtype.size()
    }

    /// Raw little-endian bytes of one pixel, or `None` outside the grid.
    pub fn pixel_bytes(&self, row: u32, col: u32) -> Option<&[u8]> {
        if row >= self.header.height || col >= self.header.width {
            return None;
        }
        let stride = self.pixel_stride();
        let start = (row as usize * self.header.width as usize + col as usize) * stride;
        Some(&self.data[start..start + stride])
    }

    /// Stored (not dequantized) channel values of one pixel, widened to `f64`.
    pub fn raw_pixel(&self, row: u32, col: u32) -> Option<Vec<f64>> {
        let bytes = self.pixel_bytes(row, col)?;
        let size = self.header.dtype.size();
        Some(bytes.chunks_exact(size).map(|c| self.header.dtype.decode_le(c)).collect())
    }

    pub fn with_product(mut self, product: impl Into<String>) -> Result<Self, FormatError> {
        let product = product.into();
        validate_product_name(&product)?;
        self.header.product = product;
        Ok(self)
    }

    pub fn with_time(mut self, time: TimeInterval) -> Result<Self, FormatError> {
        if time.is_empty() {
            return Err(FormatError::InvalidTile("time interval is empty".into()));
        }
        self.header.time = time;
        Ok(self)
    }

    pub fn with_quant(mut self, quant: QuantScheme) -> Result<Self, FormatError> {
        quant.validate()?;
        self.header.quant = quant;
        Ok(self)
    }

    /// Replaces the transform and payload together; used by orientation fixes.
    pub(crate) fn replace_grid(&self, transform: GeoTransform, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        let mut header = self.header.clone();
        header.transform = transform;
        Self { header, data }
    }
}

fn validate_product_name(name: &str) -> Result<(), FormatError> {
    if name.len() > MAX_PRODUCT_NAME_LEN {
        return Err(FormatError::InvalidTile(format!(
            "product name {name:?} exceeds {MAX_PRODUCT_NAME_LEN} bytes"
        )));
    }
    if name.contains('\0') {
        return Err(FormatError::InvalidTile("product name contains NUL".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(w: u32, h: u32, dims: u16, dtype: Dtype) -> TileHeader {
        TileHeader {
            width: w,
            height: h,
            dims,
            dtype,
            transform: GeoTransform::north_up(0.0, 0.0, 1.0, 1.0).unwrap(),
            crs: CrsId::WEB_MERCATOR,
            time: TimeInterval::ALWAYS,
            quant: QuantScheme::Identity,
            product: "test".into(),
        }
    }

    #[test]
    fn payload_length_is_checked() {
        let err = RasterTile::new(header(2, 2, 3, Dtype::U16), vec![0; 23]).unwrap_err();
        assert!(matches!(err, FormatError::SizeMismatch { expected: 24, found: 23 }));
        assert!(RasterTile::new(header(2, 2, 3, Dtype::U16), vec![0; 24]).is_ok());
    }

    #[test]
    fn pixel_access_is_interleaved() {
        let t = RasterTile::from_f32(header(2, 1, 2, Dtype::F32), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.raw_pixel(0, 1).unwrap(), vec![3.0, 4.0]);
        assert!(t.raw_pixel(1, 0).is_none());
    }

    #[test]
    fn product_name_limit() {
        let mut h = header(1, 1, 1, Dtype::I8);
        h.product = "x".repeat(33);
        assert!(RasterTile::new(h, vec![0]).is_err());
    }

    #[test]
    fn dtype_names() {
        assert_eq!("int8".parse::<Dtype>().unwrap(), Dtype::I8);
        assert_eq!("F32".parse::<Dtype>().unwrap(), Dtype::F32);
        assert!(matches!("f64".parse::<Dtype>(), Err(FormatError::UnknownDtype(_))));
        for d in [Dtype::I8, Dtype::U16, Dtype::F32] {
            assert_eq!(Dtype::from_code(d.code()), Some(d));
        }
    }

    #[test]
    fn quant_scale_must_be_positive() {
        assert!(QuantScheme::affine(0.0, 0.0).is_err());
        assert!(QuantScheme::affine(-1.0, 0.0).is_err());
        assert!(QuantScheme::affine(1.0 / 127.0, 0.0).is_ok());
    }
}
