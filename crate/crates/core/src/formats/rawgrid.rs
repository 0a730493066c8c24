use serde_json::{Map, Value};

use super::{Dtype, FormatError, QuantScheme, RasterTile, TileHeader};
use crate::geo::time::parse_timestamp;
use crate::geo::{CrsId, GeoTransform, TimeInterval};

/// Georeferencing for a bare tensor dump (`.npy`/`.pt`-style payloads with no
/// embedded metadata).
#[derive(Debug, Clone, PartialEq)]
pub struct RawGridSidecar {
    pub width: u32,
    pub height: u32,
    pub dims: u16,
    pub dtype: Dtype,
    pub big_endian: bool,
    pub transform: GeoTransform,
    pub crs: CrsId,
    pub time: TimeInterval,
    pub quant: Option<QuantScheme>,
    pub product: Option<String>,
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value, FormatError> {
    obj.get(name).filter(|v| !v.is_null()).ok_or_else(|| FormatError::MissingField(name.to_string()))
}

fn bad(name: &str, why: &str) -> FormatError {
    FormatError::Malformed(format!("sidecar field {name:?} {why}"))
}

fn uint(obj: &Map<String, Value>, name: &str) -> Result<u64, FormatError> {
    field(obj, name)?.as_u64().ok_or_else(|| bad(name, "must be a non-negative integer"))
}

fn instant(obj: &Map<String, Value>, name: &str) -> Result<i64, FormatError> {
    let v = field(obj, name)?;
    if let Some(n) = v.as_i64() {
        return Ok(n);
    }
    v.as_str().and_then(parse_timestamp).ok_or_else(|| bad(name, "must be epoch seconds or an RFC 3339 timestamp"))
}

impl RawGridSidecar {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let value: Value = serde_json::from_str(text).map_err(|e| FormatError::Malformed(format!("sidecar: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, FormatError> {
        let obj = value.as_object().ok_or_else(|| FormatError::Malformed("sidecar must be a JSON object".into()))?;

        let width = u32::try_from(uint(obj, "width")?).map_err(|_| bad("width", "is too large"))?;
        let height = u32::try_from(uint(obj, "height")?).map_err(|_| bad("height", "is too large"))?;
        let dims = u16::try_from(uint(obj, "dims")?).map_err(|_| bad("dims", "is too large"))?;
        let dtype: Dtype = field(obj, "dtype")?
            .as_str()
            .ok_or_else(|| FormatError::UnknownDtype(obj["dtype"].to_string()))?
            .parse()?;
        let big_endian = match field(obj, "byte_order")?.as_str().map(str::to_ascii_lowercase).as_deref() {
            Some("little" | "le" | "<") => false,
            Some("big" | "be" | ">") => true,
            _ => return Err(bad("byte_order", "must be \"little\" or \"big\"")),
        };
        let coeffs: Vec<f64> = field(obj, "transform")?
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_default();
        let coeffs: [f64; 6] = coeffs.try_into().map_err(|_| bad("transform", "must hold 6 numbers a,b,c,d,e,f"))?;
        let transform = GeoTransform::from_array(coeffs)?;
        let epsg = u32::try_from(uint(obj, "epsg")?).map_err(|_| bad("epsg", "is too large"))?;
        let crs = CrsId::new(epsg)?;
        let time = TimeInterval::new(instant(obj, "t_start")?, instant(obj, "t_end")?)?;
        if time.is_empty() {
            return Err(bad("t_end", "must be after t_start"));
        }

        let quant = match obj.get("quant").filter(|v| !v.is_null()) {
            None => None,
            Some(q) => {
                let q = q.as_object().ok_or_else(|| bad("quant", "must be an object"))?;
                let scale = field(q, "scale")?.as_f64().ok_or_else(|| bad("quant.scale", "must be a number"))?;
                let zero_point = q.get("zero_point").and_then(Value::as_f64).unwrap_or(0.0);
                Some(QuantScheme::affine(scale, zero_point)?)
            }
        };
        let product = obj.get("product").and_then(Value::as_str).map(str::to_string);

        Ok(Self { width, height, dims, dtype, big_endian, transform, crs, time, quant, product })
    }
}

/// Wraps a metadata-free binary grid (row-major, pixel-interleaved) into a
/// georeferenced tile using its sidecar.
pub fn parse_raw_grid(data: &[u8], sidecar: &RawGridSidecar) -> Result<RasterTile, FormatError> {
    let header = TileHeader {
        width: sidecar.width,
        height: sidecar.height,
        dims: sidecar.dims,
        dtype: sidecar.dtype,
        transform: sidecar.transform,
        crs: sidecar.crs,
        time: sidecar.time,
        quant: sidecar.quant.unwrap_or_default(),
        product: sidecar.product.clone().unwrap_or_default(),
    };
    let expected = header
        .payload_len()
        .ok_or_else(|| FormatError::Malformed("declared grid size overflows".into()))?;
    if data.len() != expected {
        return Err(FormatError::SizeMismatch { expected: expected as u64, found: data.len() as u64 });
    }
    let mut payload = data.to_vec();
    let size = header.dtype.size();
    if sidecar.big_endian && size > 1 {
        payload.chunks_exact_mut(size).for_each(<[u8]>::reverse);
    }
    RasterTile::new(header, payload)
}
