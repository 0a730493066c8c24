use std::io::{BufRead, Write};

use chrono::{DateTime, SecondsFormat};
use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::geo::time::parse_timestamp;
use crate::geo::{BoundingBox, TimeInterval};
use crate::registry;

/// Meters per degree of latitude (and of longitude at the equator) on the
/// sphere used for patch footprints.
pub const METERS_PER_DEGREE: f64 = 111_320.0;

/// One patch-level embedding with its EPSG:4326 footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub id: u64,
    pub footprint: BoundingBox,
    pub time: TimeInterval,
    pub product: String,
    pub embedding: Vec<f32>,
}

#[derive(Deserialize)]
struct Line {
    id: Option<u64>,
    lon: Option<f64>,
    lat: Option<f64>,
    size_m: Option<f64>,
    bbox: Option<[f64; 4]>,
    t_start: String,
    t_end: String,
    product: String,
    embedding: Vec<f32>,
}

#[derive(Serialize)]
struct OutLine<'a> {
    id: u64,
    bbox: [f64; 4],
    t_start: String,
    t_end: String,
    product: &'a str,
    embedding: &'a [f32],
}

/// Reads a line-delimited JSON patch table. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn parse_patch_table<R: BufRead>(reader: R) -> Result<Vec<PatchRecord>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let next_id = out.len() as u64;
        out.push(parse_line(&line, line_no, next_id)?);
    }
    Ok(out)
}

fn malformed(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::MalformedLine { line, reason: reason.into() }
}

fn parse_line(text: &str, line: usize, next_id: u64) -> Result<PatchRecord, FormatError> {
    let raw: Line = serde_json::from_str(text).map_err(|e| malformed(line, e.to_string()))?;

    let footprint = match (raw.bbox, raw.lon, raw.lat, raw.size_m) {
        (Some(b), _, _, _) => BoundingBox::from_array(b).map_err(|e| malformed(line, e.to_string()))?,
        (None, Some(lon), Some(lat), Some(size)) => centered_footprint(lon, lat, size).ok_or_else(|| {
            malformed(line, format!("cannot build a {size} m footprint at ({lon}, {lat})"))
        })?,
        _ => return Err(malformed(line, "needs either bbox or lon, lat and size_m")),
    };
    if footprint.is_empty() {
        return Err(malformed(line, "footprint is empty"));
    }

    let stamp = |s: &str| parse_timestamp(s).ok_or_else(|| FormatError::BadTimestamp { line, value: s.to_string() });
    let (start, end) = (stamp(&raw.t_start)?, stamp(&raw.t_end)?);
    if start >= end {
        return Err(malformed(line, "t_start must precede t_end"));
    }

    if raw.embedding.is_empty() {
        return Err(malformed(line, "embedding is empty"));
    }
    if raw.embedding.iter().any(|v| !v.is_finite()) {
        return Err(malformed(line, "embedding has non-finite values"));
    }
    if let Some(p) = registry::product(&raw.product) {
        let expected = usize::from(p.dimensions);
        if raw.embedding.len() != expected {
            return Err(FormatError::EmbeddingLengthMismatch { line, expected, found: raw.embedding.len() });
        }
    }

    Ok(PatchRecord {
        id: raw.id.unwrap_or(next_id),
        footprint,
        time: TimeInterval { start, end },
        product: raw.product,
        embedding: raw.embedding,
    })
}

/// `size_m × size_m` square centered on `(lon, lat)`, converted to degrees on
/// the sphere at that latitude.
fn centered_footprint(lon: f64, lat: f64, size_m: f64) -> Option<BoundingBox> {
    if !(size_m > 0.0) || !(lat.abs() < 90.0) || !lon.is_finite() {
        return None;
    }
    let dlat = size_m / METERS_PER_DEGREE;
    let dlon = size_m / (METERS_PER_DEGREE * lat.to_radians().cos());
    BoundingBox::new(lon - dlon / 2.0, lat - dlat / 2.0, lon + dlon / 2.0, lat + dlat / 2.0).ok()
}

fn format_timestamp(t: i64) -> String {
    DateTime::from_timestamp(t, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.to_string())
}

/// Writes records in the explicit-`bbox` form of the line schema, one object per line.
pub fn write_patch_table<W: Write>(records: &[PatchRecord], mut sink: W) -> Result<(), FormatError> {
    for r in records {
        let line = OutLine {
            id: r.id,
            bbox: r.footprint.to_array(),
            t_start: format_timestamp(r.time.start),
            t_end: format_timestamp(r.time.end),
            product: &r.product,
            embedding: &r.embedding,
        };
        serde_json::to_writer(&mut sink, &line).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
