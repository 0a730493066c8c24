//! Shared test helpers: an independent GeoTIFF writer, random tiles and
//! small synthetic datasets.
#![allow(dead_code)]

use std::io::Write;

use flate2::write::ZlibEncoder;
use flate2::Compression;
use geodex::formats::{Dtype, QuantScheme, RasterTile, TileHeader};
use geodex::geo::{CrsId, GeoTransform, TimeInterval};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub enum Layout {
    Strips { rows_per_strip: u32 },
    Tiles { width: u32, height: u32 },
}

/// Everything the oracle writer needs. `samples` holds little-endian sample
/// bytes, row-major and pixel-interleaved.
#[derive(Debug, Clone)]
pub struct TiffSpec {
    pub width: u32,
    pub height: u32,
    pub spp: u16,
    pub dtype: Dtype,
    pub big_endian: bool,
    pub layout: Layout,
    pub deflate: bool,
    pub pixel_scale: (f64, f64),
    /// raster (i, j) anchored at model (x, y)
    pub tiepoint: (f64, f64, f64, f64),
    pub geographic: Option<u16>,
    pub projected: Option<u16>,
    pub samples: Vec<u8>,
}

impl TiffSpec {
    pub fn expected_transform(&self) -> [f64; 6] {
        let (sx, sy) = self.pixel_scale;
        let (i, j, x, y) = self.tiepoint;
        [sx, 0.0, x - i * sx, 0.0, -sy, y + j * sy]
    }

    pub fn expected_epsg(&self) -> Option<u32> {
        self.projected.or(self.geographic).map(u32::from)
    }
}

enum Value {
    Short(Vec<u16>),
    Long(Vec<u32>),
    Double(Vec<f64>),
}

struct Writer {
    big: bool,
    buf: Vec<u8>,
}

impl Writer {
    fn u16(&mut self, v: u16) {
        self.buf.extend(if self.big { v.to_be_bytes() } else { v.to_le_bytes() });
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend(if self.big { v.to_be_bytes() } else { v.to_le_bytes() });
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend(if self.big { v.to_be_bytes() } else { v.to_le_bytes() });
    }
    fn pad(&mut self) {
        if self.buf.len() % 2 == 1 {
            self.buf.push(0);
        }
    }
}

fn encode(value: &Value, big: bool) -> (u16, u32, Vec<u8>) {
    let mut w = Writer { big, buf: Vec::new() };
    let (ty, n) = match value {
        Value::Short(v) => {
            v.iter().for_each(|&x| w.u16(x));
            (3, v.len())
        }
        Value::Long(v) => {
            v.iter().for_each(|&x| w.u32(x));
            (4, v.len())
        }
        Value::Double(v) => {
            v.iter().for_each(|&x| w.f64(x));
            (12, v.len())
        }
    };
    (ty, n as u32, w.buf)
}

/// Writes a classic TIFF with a single IFD. Edge tiles are padded with 0xCD bytes.
pub fn write_tiff(spec: &TiffSpec) -> Vec<u8> {
    let size = spec.dtype.size();
    let px = size * usize::from(spec.spp);
    let (w, h) = (spec.width as usize, spec.height as usize);
    let pixel = |r: usize, c: usize| -> Vec<u8> {
        if r >= h || c >= w {
            return vec![0xCD; px];
        }
        let at = (r * w + c) * px;
        let mut p = spec.samples[at..at + px].to_vec();
        if spec.big_endian {
            p.chunks_exact_mut(size).for_each(|s| s.reverse());
        }
        p
    };
    let mut chunks: Vec<Vec<u8>> = Vec::new();
    match spec.layout {
        Layout::Strips { rows_per_strip } => {
            let rps = rows_per_strip as usize;
            for y0 in (0..h).step_by(rps) {
                let mut c = Vec::new();
                for r in y0..(y0 + rps).min(h) {
                    for col in 0..w {
                        c.extend(pixel(r, col));
                    }
                }
                chunks.push(c);
            }
        }
        Layout::Tiles { width: tw, height: th } => {
            let (tw, th) = (tw as usize, th as usize);
            for ty in (0..h).step_by(th) {
                for tx in (0..w).step_by(tw) {
                    let mut c = Vec::new();
                    for r in 0..th {
                        for col in 0..tw {
                            c.extend(pixel(ty + r, tx + col));
                        }
                    }
                    chunks.push(c);
                }
            }
        }
    }
    if spec.deflate {
        chunks = chunks
            .into_iter()
            .map(|c| {
                let mut e = ZlibEncoder::new(Vec::new(), Compression::default());
                e.write_all(&c).unwrap();
                e.finish().unwrap()
            })
            .collect();
    }

    let mut out = Writer { big: spec.big_endian, buf: Vec::new() };
    out.buf.extend(if spec.big_endian { b"MM" } else { b"II" });
    out.u16(42);
    out.u32(0);
    let mut offsets = Vec::new();
    for c in &chunks {
        offsets.push(out.buf.len() as u32);
        out.buf.extend(c);
        out.pad();
    }
    let counts: Vec<u32> = chunks.iter().map(|c| c.len() as u32).collect();

    let (bits, format) = match spec.dtype {
        Dtype::I8 => (8, 2),
        Dtype::U16 => (16, 1),
        Dtype::F32 => (32, 3),
    };
    let spp = usize::from(spec.spp);
    let mut tags: Vec<(u16, Value)> = vec![
        (256, Value::Long(vec![spec.width])),
        (257, Value::Long(vec![spec.height])),
        (258, Value::Short(vec![bits; spp])),
        (259, Value::Short(vec![if spec.deflate { 8 } else { 1 }])),
        (262, Value::Short(vec![1])),
        (277, Value::Short(vec![spec.spp])),
        (284, Value::Short(vec![1])),
        (339, Value::Short(vec![format; spp])),
    ];
    match spec.layout {
        Layout::Strips { rows_per_strip } => {
            tags.push((273, Value::Long(offsets)));
            tags.push((278, Value::Long(vec![rows_per_strip])));
            tags.push((279, Value::Long(counts)));
        }
        Layout::Tiles { width, height } => {
            tags.push((322, Value::Long(vec![width])));
            tags.push((323, Value::Long(vec![height])));
            tags.push((324, Value::Long(offsets)));
            tags.push((325, Value::Long(counts)));
        }
    }
    let (sx, sy) = spec.pixel_scale;
    let (i, j, x, y) = spec.tiepoint;
    tags.push((33550, Value::Double(vec![sx, sy, 0.0])));
    tags.push((33922, Value::Double(vec![i, j, 0.0, x, y, 0.0])));
    let mut keys = Vec::new();
    if let Some(g) = spec.geographic {
        keys.extend([2048, 0, 1, g]);
    }
    if let Some(p) = spec.projected {
        keys.extend([3072, 0, 1, p]);
    }
    if !keys.is_empty() {
        let mut dir = vec![1, 1, 0, (keys.len() / 4) as u16];
        dir.extend(keys);
        tags.push((34735, Value::Short(dir)));
    }
    tags.sort_by_key(|t| t.0);

    let ifd_at = out.buf.len() as u32;
    let ifd_len = 2 + 12 * tags.len() + 4;
    let mut extra = Vec::new();
    let mut ifd = Writer { big: spec.big_endian, buf: Vec::new() };
    ifd.u16(tags.len() as u16);
    for (tag, value) in &tags {
        let (ty, n, bytes) = encode(value, spec.big_endian);
        ifd.u16(*tag);
        ifd.u16(ty);
        ifd.u32(n);
        if bytes.len() <= 4 {
            let mut inline = bytes.clone();
            inline.resize(4, 0);
            ifd.buf.extend(inline);
        } else {
            ifd.u32(ifd_at + ifd_len as u32 + extra.len() as u32);
            extra.extend(&bytes);
            if extra.len() % 2 == 1 {
                extra.push(0);
            }
        }
    }
    ifd.u32(0);
    out.buf.extend(ifd.buf);
    out.buf.extend(extra);
    let at = if spec.big_endian { ifd_at.to_be_bytes() } else { ifd_at.to_le_bytes() };
    out.buf[4..8].copy_from_slice(&at);
    out.buf
}

pub fn random_dtype(rng: &mut StdRng) -> Dtype {
    [Dtype::I8, Dtype::U16, Dtype::F32][rng.gen_range(0..3)]
}

/// Random little-endian samples; f32 values are finite.
pub fn random_samples(rng: &mut StdRng, dtype: Dtype, count: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(count * dtype.size());
    for _ in 0..count {
        match dtype {
            Dtype::I8 => out.push(rng.gen::<u8>()),
            Dtype::U16 => out.extend(rng.gen::<u16>().to_le_bytes()),
            Dtype::F32 => out.extend(rng.gen_range(-1e6f32..1e6).to_le_bytes()),
        }
    }
    out
}

pub fn random_tiff(rng: &mut StdRng) -> TiffSpec {
    let width = rng.gen_range(1..70);
    let height = rng.gen_range(1..70);
    let spp = rng.gen_range(1..5);
    let dtype = random_dtype(rng);
    let layout = if rng.gen_bool(0.5) {
        Layout::Strips { rows_per_strip: rng.gen_range(1..=height + 3) }
    } else {
        Layout::Tiles { width: 16 * rng.gen_range(1..4), height: 16 * rng.gen_range(1..4) }
    };
    let (geographic, projected) = match rng.gen_range(0..3) {
        0 => (Some(4326), None),
        1 => (None, Some(rng.gen_range(32601..32661))),
        _ => (Some(4326), Some(3857)),
    };
    TiffSpec {
        width,
        height,
        spp,
        dtype,
        big_endian: rng.gen_bool(0.5),
        layout,
        deflate: rng.gen_bool(0.5),
        pixel_scale: (rng.gen_range(0.01..100.0), rng.gen_range(0.01..100.0)),
        tiepoint: (
            rng.gen_range(0.0..4.0f64).floor(),
            rng.gen_range(0.0..4.0f64).floor(),
            rng.gen_range(-1e6..1e6),
            rng.gen_range(-1e6..1e6),
        ),
        geographic,
        projected,
        samples: random_samples(rng, dtype, (width * height) as usize * usize::from(spp)),
    }
}

/// Random valid tile covering every dtype, quantization and orientation.
pub fn random_tile(rng: &mut StdRng) -> RasterTile {
    let width = rng.gen_range(1..40);
    let height = rng.gen_range(1..40);
    let dims = rng.gen_range(1..9);
    let dtype = random_dtype(rng);
    let sign = if rng.gen_bool(0.8) { -1.0 } else { 1.0 };
    let transform = GeoTransform::new(
        rng.gen_range(0.1..100.0),
        0.0,
        rng.gen_range(-1e6..1e6),
        0.0,
        sign * rng.gen_range(0.1..100.0),
        rng.gen_range(-1e6..1e6),
    )
    .unwrap();
    let start = rng.gen_range(-2_000_000_000i64..2_000_000_000);
    let quant = if rng.gen_bool(0.5) {
        QuantScheme::Identity
    } else {
        QuantScheme::affine(rng.gen_range(1e-6..10.0), rng.gen_range(-100.0..100.0)).unwrap()
    };
    let product: String = (0..rng.gen_range(0..=32)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
    let header = TileHeader {
        width,
        height,
        dims,
        dtype,
        transform,
        crs: CrsId::new(rng.gen_range(1..100_000)).unwrap(),
        time: TimeInterval::new(start, start + rng.gen_range(1..1_000_000_000)).unwrap(),
        quant,
        product,
    };
    let data = random_samples(rng, dtype, (width * height) as usize * usize::from(dims));
    RasterTile::new(header, data).unwrap()
}

/// North-up f32 tile whose every pixel is `vector_of(row, col)`.
#[allow(clippy::too_many_arguments)]
pub fn f32_tile(
    origin: (f64, f64),
    res: f64,
    width: u32,
    height: u32,
    dims: u16,
    crs: u32,
    time: TimeInterval,
    mut vector_of: impl FnMut(u32, u32) -> Vec<f32>,
) -> RasterTile {
    let header = TileHeader {
        width,
        height,
        dims,
        dtype: Dtype::F32,
        transform: GeoTransform::north_up(origin.0, origin.1, res, res).unwrap(),
        crs: CrsId::new(crs).unwrap(),
        time,
        quant: QuantScheme::Identity,
        product: String::new(),
    };
    let mut values = Vec::with_capacity((width * height) as usize * usize::from(dims));
    for r in 0..height {
        for c in 0..width {
            let v = vector_of(r, c);
            assert_eq!(v.len(), usize::from(dims));
            values.extend(v);
        }
    }
    RasterTile::from_f32(header, &values).unwrap()
}

/// One-band u16 label raster, 0 = unlabeled.
pub fn label_tile(
    origin: (f64, f64),
    res: f64,
    width: u32,
    height: u32,
    crs: u32,
    time: TimeInterval,
    mut label_of: impl FnMut(u32, u32) -> u16,
) -> RasterTile {
    let header = TileHeader {
        width,
        height,
        dims: 1,
        dtype: Dtype::U16,
        transform: GeoTransform::north_up(origin.0, origin.1, res, res).unwrap(),
        crs: CrsId::new(crs).unwrap(),
        time,
        quant: QuantScheme::Identity,
        product: String::new(),
    };
    let mut data = Vec::with_capacity((width * height) as usize * 2);
    for r in 0..height {
        for c in 0..width {
            data.extend(label_of(r, c).to_le_bytes());
        }
    }
    RasterTile::new(header, data).unwrap()
}

/// Standard normal draw via Box–Muller.
pub fn gaussian(rng: &mut StdRng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
