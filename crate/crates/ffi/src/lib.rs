//! C ABI over `geodex`.
//!
//! Handles (`GeodexTile`, `GeodexIndex`, `GeodexCorpus`) are opaque and owned
//! by the caller once returned; release each with its `_free` function.
//! Every fallible call returns a [`GeodexStatus`]; on failure the message is
//! available from [`geodex_last_error`] until the next failing call on the
//! same thread. Output arrays follow a two-call pattern: when `cap` is too
//! small the call returns `GEODEX_STATUS_BUFFER_TOO_SMALL` and writes the
//! required length to `len_out`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use geodex::embed::{pixel_vector_at, topk_search, Corpus, EmbeddingVector, Metric};
use geodex::formats::{decode_store, parse_geotiff, read_store, write_store, QuantScheme, RasterTile};
use geodex::geo::{normalize_orientation, BoundingBox, GeoTransform, TimeInterval};
use geodex::index::{build_index, grid_samples, IndexEntry, SpatioTemporalIndex};
use geodex::{geo, registry, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Geo = 10,
    Format = 11,
    Registry = 12,
    Index = 13,
    Embed = 14,
    Io = 15,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodexMetric {
    Cosine = 0,
    L2 = 1,
}

/// Decoded raster tile.
pub struct GeodexTile(RasterTile);

/// Static spatiotemporal R-tree.
pub struct GeodexIndex(SpatioTemporalIndex);

/// Dense vector collection for exact top-k search.
pub struct GeodexCorpus(Corpus);

/// Plain-data view of a tile header.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GeodexTileInfo {
    pub width: u32,
    pub height: u32,
    pub dims: u16,
    /// 1 = int8, 2 = uint16, 3 = float32.
    pub dtype: u8,
    /// `a, b, c, d, e, f` with `x = a·col + b·row + c`, `y = d·col + e·row + f`.
    pub transform: [f64; 6],
    pub epsg: u32,
    pub t_start: i64,
    pub t_end: i64,
    pub bbox: [f64; 4],
    /// False for identity dequantization, in which case scale and zero point are 1 and 0.
    pub quant_affine: bool,
    pub quant_scale: f64,
    pub quant_zero_point: f64,
}

struct Failure(GeodexStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Geo(_) => GeodexStatus::Geo,
            Error::Format(_) => GeodexStatus::Format,
            Error::Registry(_) => GeodexStatus::Registry,
            Error::Index(_) => GeodexStatus::Index,
            Error::Embed(_) => GeodexStatus::Embed,
            Error::Io(_) => GeodexStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! lib_failure {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
lib_failure!(
    geodex::geo::GeoError,
    geodex::formats::FormatError,
    geodex::registry::RegistryError,
    geodex::index::IndexError,
    geodex::embed::EmbedError,
    std::io::Error
);

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GeodexStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(GeodexStatus::NullPointer, format!("{what} is null"))
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GeodexStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GeodexStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            GeodexStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// `len == 0` accepts a null pointer.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map(str::to_owned).map_err(|_| invalid("path is not valid UTF-8"))
}

/// Copies `values` into a caller buffer of `cap` elements.
unsafe fn emit<T: Copy>(values: &[T], out: *mut T, cap: usize, len_out: *mut usize) -> Result<(), Failure> {
    *out_ref(len_out, "len_out")? = values.len();
    if values.len() > cap {
        return Err(Failure(GeodexStatus::BufferTooSmall, format!("need room for {} values, got {cap}", values.len())));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn geodex_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn geodex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_read_store(path: *const c_char, out: *mut *mut GeodexTile) -> GeodexStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let path = path_arg(path)?;
        let tile = read_store(BufReader::new(File::open(&path)?))?;
        *out = boxed(GeodexTile(tile));
        Ok(())
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_decode_store(bytes: *const u8, len: usize, out: *mut *mut GeodexTile) -> GeodexStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let tile = decode_store(input(bytes, len, "bytes")?)?;
        *out = boxed(GeodexTile(tile));
        Ok(())
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_parse_geotiff(bytes: *const u8, len: usize, out: *mut *mut GeodexTile) -> GeodexStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let tile = parse_geotiff(input(bytes, len, "bytes")?)?;
        *out = boxed(GeodexTile(tile));
        Ok(())
    })
}

/// # Safety
/// `tile` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_write_store(tile: *const GeodexTile, path: *const c_char) -> GeodexStatus {
    guard(|| {
        let tile = deref(tile, "tile")?;
        let path = path_arg(path)?;
        let mut w = BufWriter::new(File::create(&path)?);
        write_store(&tile.0, &mut w)?;
        w.flush()?;
        Ok(())
    })
}

/// North-up copy of `tile` in a new handle.
///
/// # Safety
/// `tile` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_normalize_orientation(tile: *const GeodexTile, out: *mut *mut GeodexTile) -> GeodexStatus {
    guard(|| {
        let tile = deref(tile, "tile")?;
        let out = out_ref(out, "out")?;
        *out = boxed(GeodexTile(normalize_orientation(tile.0.clone())?));
        Ok(())
    })
}

/// # Safety
/// `tile` must be a live handle; `info` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_info(tile: *const GeodexTile, info: *mut GeodexTileInfo) -> GeodexStatus {
    guard(|| {
        let t = &deref(tile, "tile")?.0;
        let info = out_ref(info, "info")?;
        let (quant_affine, quant_scale, quant_zero_point) = match t.quant() {
            QuantScheme::Identity => (false, 1.0, 0.0),
            QuantScheme::Affine { scale, zero_point } => (true, scale, zero_point),
        };
        *info = GeodexTileInfo {
            width: t.width(),
            height: t.height(),
            dims: t.dims(),
            dtype: t.dtype().code(),
            transform: t.transform().to_array(),
            epsg: t.crs().epsg(),
            t_start: t.time().start,
            t_end: t.time().end,
            bbox: t.footprint().to_array(),
            quant_affine,
            quant_scale,
            quant_zero_point,
        };
        Ok(())
    })
}

/// Dequantized embedding of the pixel containing world point `(x, y)`.
///
/// # Safety
/// `tile` must be a live handle; `out` must have room for `cap` floats.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_pixel_vector(
    tile: *const GeodexTile,
    x: f64,
    y: f64,
    out: *mut f32,
    cap: usize,
    len_out: *mut usize,
) -> GeodexStatus {
    guard(|| {
        let tile = deref(tile, "tile")?;
        let v = pixel_vector_at(&tile.0, x, y)?;
        emit(v.as_slice(), out, cap, len_out)
    })
}

/// # Safety
/// `tile` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn geodex_tile_free(tile: *mut GeodexTile) {
    if !tile.is_null() {
        drop(Box::from_raw(tile));
    }
}

/// # Safety
/// `transform` must point to 6 doubles; `x` and `y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_pixel_to_world(transform: *const f64, row: f64, col: f64, x: *mut f64, y: *mut f64) -> GeodexStatus {
    guard(|| {
        let t = GeoTransform::from_array(input(transform, 6, "transform")?.try_into().expect("six values"))?;
        let (wx, wy) = t.pixel_to_world(row, col);
        *out_ref(x, "x")? = wx;
        *out_ref(y, "y")? = wy;
        Ok(())
    })
}

/// # Safety
/// `transform` must point to 6 doubles; `row` and `col` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_world_to_pixel(transform: *const f64, x: f64, y: f64, row: *mut f64, col: *mut f64) -> GeodexStatus {
    guard(|| {
        let t = GeoTransform::from_array(input(transform, 6, "transform")?.try_into().expect("six values"))?;
        let (r, c) = t.world_to_pixel(x, y)?;
        *out_ref(row, "row")? = r;
        *out_ref(col, "col")? = c;
        Ok(())
    })
}

/// # Safety
/// `x` and `y` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_project_4326_to_3857(lon: f64, lat: f64, x: *mut f64, y: *mut f64) -> GeodexStatus {
    guard(|| {
        let (px, py) = geo::project_4326_to_3857(lon, lat)?;
        *out_ref(x, "x")? = px;
        *out_ref(y, "y")? = py;
        Ok(())
    })
}

/// # Safety
/// `lon` and `lat` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_project_3857_to_4326(x: f64, y: f64, lon: *mut f64, lat: *mut f64) -> GeodexStatus {
    guard(|| {
        let (a, b) = geo::project_3857_to_4326(x, y);
        *out_ref(lon, "lon")? = a;
        *out_ref(lat, "lat")? = b;
        Ok(())
    })
}

/// Builds an index over `n` entries: `bboxes` holds `4n` doubles
/// (`minx, miny, maxx, maxy`), `times` holds `2n` `[start, end)` pairs.
///
/// # Safety
/// Arrays must hold `n` ids, `4n` doubles and `2n` times; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_index_build(
    ids: *const u64,
    bboxes: *const f64,
    times: *const i64,
    n: usize,
    out: *mut *mut GeodexIndex,
) -> GeodexStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let len4 = n.checked_mul(4).ok_or_else(|| invalid("n is too large"))?;
        let ids = input(ids, n, "ids")?;
        let bboxes = input(bboxes, len4, "bboxes")?;
        let times = input(times, 2 * n, "times")?;
        let mut entries = Vec::with_capacity(n);
        for i in 0..n {
            let b = &bboxes[4 * i..4 * i + 4];
            entries.push(IndexEntry {
                id: ids[i],
                bbox: BoundingBox::new(b[0], b[1], b[2], b[3])?,
                time: TimeInterval::new(times[2 * i], times[2 * i + 1])?,
            });
        }
        *out = boxed(GeodexIndex(build_index(entries)));
        Ok(())
    })
}

/// Ids of entries intersecting the query, ascending.
///
/// # Safety
/// `index` must be a live handle, `bbox` 4 doubles, `out` room for `cap` ids.
#[no_mangle]
pub unsafe extern "C" fn geodex_index_query(
    index: *const GeodexIndex,
    bbox: *const f64,
    t_start: i64,
    t_end: i64,
    out: *mut u64,
    cap: usize,
    len_out: *mut usize,
) -> GeodexStatus {
    guard(|| {
        let index = deref(index, "index")?;
        let b = input(bbox, 4, "bbox")?;
        let bbox = BoundingBox::new(b[0], b[1], b[2], b[3])?;
        let time = TimeInterval::new(t_start, t_end)?;
        emit(&index.0.query(&bbox, &time), out, cap, len_out)
    })
}

/// # Safety
/// `index` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn geodex_index_free(index: *mut GeodexIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn geodex_corpus_new(dims: usize, out: *mut *mut GeodexCorpus) -> GeodexStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if dims == 0 {
            return Err(invalid("dims must be positive"));
        }
        *out = boxed(GeodexCorpus(Corpus::new(dims)));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be a live handle; `vector` must hold `dims` floats.
#[no_mangle]
pub unsafe extern "C" fn geodex_corpus_push(corpus: *mut GeodexCorpus, id: u64, vector: *const f32, dims: usize) -> GeodexStatus {
    guard(|| {
        let corpus = out_ref(corpus, "corpus")?;
        corpus.0.push(id, input(vector, dims, "vector")?)?;
        Ok(())
    })
}

/// Number of stored vectors; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geodex_corpus_len(corpus: *const GeodexCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// Exact top-k. Cosine scores are similarities (best first), L2 scores are
/// distances (smallest first). Writes `min(k, len)` results.
///
/// # Safety
/// `corpus` must be a live handle; `query` must hold `dims` floats;
/// `ids_out` and `scores_out` must have room for `k` values.
#[no_mangle]
pub unsafe extern "C" fn geodex_corpus_topk(
    corpus: *const GeodexCorpus,
    query: *const f32,
    dims: usize,
    k: usize,
    metric: GeodexMetric,
    ids_out: *mut u64,
    scores_out: *mut f64,
    len_out: *mut usize,
) -> GeodexStatus {
    guard(|| {
        let corpus = deref(corpus, "corpus")?;
        let query = EmbeddingVector::new(input(query, dims, "query")?.to_vec())?;
        let metric = match metric {
            GeodexMetric::Cosine => Metric::Cosine,
            GeodexMetric::L2 => Metric::L2,
        };
        let hits = topk_search(&query, &corpus.0, k, metric)?;
        let ids: Vec<u64> = hits.iter().map(|h| h.id).collect();
        let scores: Vec<f64> = hits.iter().map(|h| h.score).collect();
        emit(&ids, ids_out, k, len_out)?;
        emit(&scores, scores_out, k, len_out)
    })
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn geodex_corpus_free(corpus: *mut GeodexCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Grid patches over `bounds`, row-major from the lower-left corner, as
/// `4 × count` doubles. `cap` counts doubles.
///
/// # Safety
/// `bounds` must hold 4 doubles; `out` room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn geodex_grid_samples(
    bounds: *const f64,
    resolution: f64,
    size_px: u32,
    stride_px: u32,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> GeodexStatus {
    guard(|| {
        let b = input(bounds, 4, "bounds")?;
        let bounds = BoundingBox::new(b[0], b[1], b[2], b[3])?;
        let flat: Vec<f64> = grid_samples(&bounds, resolution, size_px, stride_px)?.iter().flat_map(|p| p.to_array()).collect();
        emit(&flat, out, cap, len_out)
    })
}

/// Built-in product table as a JSON array. Free with [`geodex_string_free`].
#[no_mangle]
pub extern "C" fn geodex_products_json() -> *mut c_char {
    let text = serde_json::to_string(registry::builtin_products()).unwrap_or_else(|_| "[]".into());
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn geodex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
