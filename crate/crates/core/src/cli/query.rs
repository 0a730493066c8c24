use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::store::{dataset_patches, dataset_tiles, EntryKind, Store};
use super::{json_line, num, CliError, ExportArgs, MapArgs, SampleArgs, SearchArgs};
use crate::embed::{
    build_ivf, dequantize_values, knn_classify, search_ivf, topk_search, Corpus, EmbedError, EmbeddingVector, Hit,
    LabeledVector,
};
use crate::formats::{write_store, Dtype, QuantScheme, RasterTile, TileHeader};
use crate::geo::{project_3857_to_4326, project_4326_to_3857, BoundingBox, CrsId, GeoTransform, TimeInterval};
use crate::index::{grid_samples, random_samples, GeoDataset, IndexError};

fn open_all(stores: &[std::path::PathBuf]) -> Result<GeoDataset, CliError> {
    let (first, rest) = stores.split_first().ok_or_else(|| CliError::Usage("--store is required".into()))?;
    let mut ds = Store::open(first)?.dataset;
    for s in rest {
        ds = ds.intersect(&Store::open(s)?.dataset)?;
    }
    Ok(ds)
}

fn bbox_csv(b: &BoundingBox) -> String {
    format!("{},{},{},{}", num(b.minx), num(b.miny), num(b.maxx), num(b.maxy))
}

pub(super) fn sample(args: &SampleArgs, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let ds = open_all(&args.store)?;
    let mut bounds = ds.bounds();
    if let Some(b) = args.bbox {
        bounds = bounds.intersection(&BoundingBox::from_array(b)?);
        if bounds.is_empty() {
            return Err(IndexError::EmptyIntersection("space").into());
        }
    }
    let res = args
        .res
        .or(ds.resolution())
        .ok_or_else(|| CliError::Usage("--res is required when no raster store is involved".into()))?;
    let patches = match args.random {
        Some(n) => random_samples(&bounds, res, args.size, n, args.seed)?,
        None => grid_samples(&bounds, res, args.size, args.stride.unwrap_or(args.size))?,
    };
    for b in &patches {
        if json {
            json_line(out, &json!({ "bbox": b.to_array() }))?;
        } else {
            writeln!(out, "{}", bbox_csv(b))?;
        }
    }
    Ok(())
}

/// Searchable items of a store: patch records if it has any, else every pixel.
struct Items {
    corpus: Corpus,
    footprints: Vec<BoundingBox>,
    pixels: bool,
}

fn pixel_footprint(t: &GeoTransform, row: u32, col: u32) -> BoundingBox {
    let (x0, y0) = t.pixel_to_world(f64::from(row), f64::from(col));
    let (x1, y1) = t.pixel_to_world(f64::from(row + 1), f64::from(col + 1));
    BoundingBox { minx: x0.min(x1), miny: y0.min(y1), maxx: x0.max(x1), maxy: y0.max(y1) }
}

fn tile_vector(tile: &RasterTile, row: u32, col: u32) -> Result<EmbeddingVector, EmbedError> {
    let raw = tile.raw_pixel(row, col).ok_or(EmbedError::OutOfBounds { x: f64::from(col), y: f64::from(row) })?;
    dequantize_values(&raw, &tile.quant())
}

fn collect_items(ds: &GeoDataset, time: &TimeInterval) -> Result<Items, CliError> {
    let patches: Vec<_> = dataset_patches(ds).into_iter().filter(|r| r.time.intersects(time)).collect();
    if let Some(first) = patches.first() {
        let mut corpus = Corpus::new(first.embedding.len());
        for r in &patches {
            corpus.push(r.id, &r.embedding)?;
        }
        let footprints = patches.iter().map(|r| r.footprint).collect();
        return Ok(Items { corpus, footprints, pixels: false });
    }
    // Pixel ids count every pixel of every tile, so they do not depend on the time filter.
    let mut corpus: Option<Corpus> = None;
    let mut footprints = Vec::new();
    let mut next_id = 0u64;
    for tile in dataset_tiles(ds) {
        let count = u64::from(tile.width()) * u64::from(tile.height());
        if tile.time().intersects(time) {
            let c = corpus.get_or_insert_with(|| Corpus::new(usize::from(tile.dims())));
            for row in 0..tile.height() {
                for col in 0..tile.width() {
                    let id = next_id + u64::from(row) * u64::from(tile.width()) + u64::from(col);
                    c.push(id, tile_vector(tile, row, col)?.as_slice())?;
                    footprints.push(pixel_footprint(tile.transform(), row, col));
                }
            }
        }
        next_id += count;
    }
    let corpus = corpus.ok_or(IndexError::EmptyIntersection("time"))?;
    Ok(Items { corpus, footprints, pixels: true })
}

fn to_store_crs(lon: f64, lat: f64, crs: CrsId) -> Result<(f64, f64), CliError> {
    match crs {
        CrsId::WGS84 => Ok((lon, lat)),
        CrsId::WEB_MERCATOR => Ok(project_4326_to_3857(lon, lat)?),
        other => Err(IndexError::CrsMismatch { left: CrsId::WGS84, right: other }.into()),
    }
}

fn to_wgs84(b: &BoundingBox, crs: CrsId) -> Result<BoundingBox, CliError> {
    match crs {
        CrsId::WGS84 => Ok(*b),
        CrsId::WEB_MERCATOR => {
            let (x0, y0) = project_3857_to_4326(b.minx, b.miny);
            let (x1, y1) = project_3857_to_4326(b.maxx, b.maxy);
            Ok(BoundingBox { minx: x0, miny: y0, maxx: x1, maxy: y1 })
        }
        other => Err(IndexError::CrsMismatch { left: other, right: CrsId::WGS84 }.into()),
    }
}

/// Nearest footprint center; ties go to the smaller id, then the earlier item.
fn nearest_item(items: &Items, x: f64, y: f64) -> usize {
    (0..items.corpus.len())
        .min_by(|&i, &j| {
            let d = |k: usize| {
                let (cx, cy) = items.footprints[k].center();
                (cx - x).powi(2) + (cy - y).powi(2)
            };
            d(i).total_cmp(&d(j)).then(items.corpus.id(i).cmp(&items.corpus.id(j))).then(i.cmp(&j))
        })
        .unwrap_or(0)
}

fn resolve_query(args: &SearchArgs, ds: &GeoDataset, items: &Items, time: &TimeInterval) -> Result<EmbeddingVector, CliError> {
    if let Some(path) = &args.query_file {
        let text = fs::read_to_string(path).map_err(|e| CliError::in_file(path, e))?;
        let values: Vec<f32> = serde_json::from_str(&text).map_err(|e| {
            CliError::in_file(path, crate::formats::FormatError::Malformed(format!("query vector: {e}")))
        })?;
        return EmbeddingVector::new(values).map_err(|e| CliError::in_file(path, e));
    }
    if let Some(id) = args.query_id {
        let i = (0..items.corpus.len())
            .find(|&i| items.corpus.id(i) == id)
            .ok_or_else(|| CliError::Usage(format!("no stored item has id {id}")))?;
        return Ok(EmbeddingVector::new(items.corpus.vector(i).to_vec())?);
    }
    let (x, y) = match (args.query_lon, args.query_lat, args.query_x, args.query_y) {
        (Some(lon), Some(lat), _, _) => to_store_crs(lon, lat, ds.crs())?,
        (_, _, Some(x), Some(y)) => (x, y),
        _ => return Err(CliError::Usage("a query is required".into())),
    };
    if items.pixels {
        ds.vector_at(x, y, time).ok_or_else(|| EmbedError::OutOfBounds { x, y }.into())
    } else {
        Ok(EmbeddingVector::new(items.corpus.vector(nearest_item(items, x, y)).to_vec())?)
    }
}

fn feature(b: &BoundingBox, properties: Value) -> Value {
    let ring = [[b.minx, b.miny], [b.maxx, b.miny], [b.maxx, b.maxy], [b.minx, b.maxy], [b.minx, b.miny]];
    json!({
        "type": "Feature",
        "geometry": { "type": "Polygon", "coordinates": [ring] },
        "properties": properties,
    })
}

fn write_collection(out: &mut dyn Write, features: Vec<Value>) -> Result<(), CliError> {
    json_line(out, &json!({ "type": "FeatureCollection", "features": features }))
}

pub(super) fn search(args: &SearchArgs, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let store = Store::open(&args.store)?;
    let ds = &store.dataset;
    let time = args.time.interval()?.unwrap_or(TimeInterval::ALWAYS);
    let items = collect_items(ds, &time)?;
    let query = resolve_query(args, ds, &items, &time)?;

    // Hits carry ids only; map each back to the first item with that id.
    let mut index_of = std::collections::HashMap::new();
    for i in (0..items.corpus.len()).rev() {
        index_of.insert(items.corpus.id(i), i);
    }
    let Items { corpus, footprints, .. } = items;
    let hits: Vec<Hit> = match args.ivf {
        Some((nlist, nprobe)) => {
            let index = build_ivf(corpus, nlist, args.seed)?;
            search_ivf(&index, &query, args.k, nprobe, args.metric)?
        }
        None => topk_search(&query, &corpus, args.k, args.metric)?,
    };
    let bbox_of = |h: &Hit| footprints[index_of[&h.id]];

    if args.export.is_some() {
        let features = hits
            .iter()
            .enumerate()
            .map(|(r, h)| Ok(feature(&to_wgs84(&bbox_of(h), ds.crs())?, json!({ "rank": r + 1, "id": h.id, "score": h.score }))))
            .collect::<Result<Vec<_>, CliError>>()?;
        return write_collection(out, features);
    }
    for (r, h) in hits.iter().enumerate() {
        let b = bbox_of(h);
        if json {
            json_line(out, &json!({ "rank": r + 1, "id": h.id, "score": h.score, "bbox": b.to_array() }))?;
        } else {
            writeln!(out, "{},{},{},{}", r + 1, h.id, num(h.score), bbox_csv(&b))?;
        }
    }
    Ok(())
}

/// Pixel count along one axis; extents within 1e-9 of a whole number snap to it.
fn axis_pixels(extent: f64, res: f64) -> u32 {
    let px = extent / res;
    let snapped = px.round();
    let n = if (px - snapped).abs() <= 1e-9 * snapped.max(1.0) { snapped } else { px.ceil() };
    n.max(1.0) as u32
}

struct LabelGrid {
    origin_x: f64,
    origin_y: f64,
    res: f64,
    width: u32,
    height: u32,
}

impl LabelGrid {
    fn center(&self, row: u32, col: u32) -> (f64, f64) {
        (self.origin_x + (f64::from(col) + 0.5) * self.res, self.origin_y - (f64::from(row) + 0.5) * self.res)
    }
}

fn label_at(labels: &GeoDataset, x: f64, y: f64, time: &TimeInterval) -> Result<Option<u32>, CliError> {
    let Some(v) = labels.vector_at(x, y, time) else { return Ok(None) };
    let value = f64::from(v.as_slice()[0]).round();
    if value <= 0.0 {
        return Ok(None);
    }
    if value > f64::from(u16::MAX) {
        return Err(CliError::Usage(format!("label {value} does not fit the u16 output raster")));
    }
    Ok(Some(value as u32))
}

#[derive(serde::Serialize)]
struct MapSummary {
    patches: usize,
    training_pixels: usize,
    classified_pixels: usize,
}

pub(super) fn map(args: &MapArgs, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let emb = Store::open(&args.embeddings)?.dataset;
    let labels = Store::open(&args.labels)?.dataset;
    let both = emb.intersect(&labels)?;
    let res = both.resolution().ok_or_else(|| CliError::Usage("map needs raster stores".into()))?;
    let time = both.time_bounds();
    let b = both.bounds();
    let grid = LabelGrid { origin_x: b.minx, origin_y: b.maxy, res, width: axis_pixels(b.width(), res), height: axis_pixels(b.height(), res) };
    let size = args.size.min(grid.width).min(grid.height);
    let patches = grid_samples(&b, res, size, size)?;

    // Visit pixels patch by patch; a pixel belongs to the first patch containing its center.
    let mut order = Vec::new();
    let mut seen = vec![false; grid.width as usize * grid.height as usize];
    for p in &patches {
        let c0 = (((p.minx - b.minx) / res).floor() as u32).saturating_sub(1);
        let r0 = (((b.maxy - p.maxy) / res).floor() as u32).saturating_sub(1);
        for row in r0..(r0 + size + 2).min(grid.height) {
            for col in c0..(c0 + size + 2).min(grid.width) {
                let k = row as usize * grid.width as usize + col as usize;
                let (x, y) = grid.center(row, col);
                if !seen[k] && p.contains_point(x, y) && b.contains_point(x, y) {
                    seen[k] = true;
                    order.push((row, col));
                }
            }
        }
    }

    let mut train = Vec::new();
    let mut queries = Vec::new();
    let mut targets = Vec::new();
    for &(row, col) in &order {
        let (x, y) = grid.center(row, col);
        let Some(v) = emb.vector_at(x, y, &time) else { continue };
        if let Some(label) = label_at(&labels, x, y, &time)? {
            let id = u64::from(row) * u64::from(grid.width) + u64::from(col);
            train.push(LabeledVector { id, label, vector: v.clone() });
        }
        queries.push(v);
        targets.push((row, col));
    }
    let training_pixels = train.len();
    if train.len() > args.max_train && args.max_train > 0 {
        let n = train.len();
        let keep = args.max_train;
        train = (0..keep).map(|i| train[i * n / keep].clone()).collect();
    }
    let predicted = knn_classify(&queries, &train, args.k, args.metric)?;

    let mut raster = vec![0u16; grid.width as usize * grid.height as usize];
    for (&(row, col), &label) in targets.iter().zip(&predicted) {
        raster[row as usize * grid.width as usize + col as usize] = label as u16;
    }
    let header = TileHeader {
        width: grid.width,
        height: grid.height,
        dims: 1,
        dtype: Dtype::U16,
        transform: GeoTransform::north_up(grid.origin_x, grid.origin_y, res, res)?,
        crs: both.crs(),
        time,
        quant: QuantScheme::Identity,
        product: String::new(),
    };
    let tile = RasterTile::new(header, raster.iter().flat_map(|v| v.to_le_bytes()).collect())?;
    write_output(&args.out, &tile)?;

    let summary = MapSummary { patches: patches.len(), training_pixels, classified_pixels: predicted.len() };
    if json {
        json_line(out, &summary)?;
    } else {
        writeln!(out, "patches,{}", summary.patches)?;
        writeln!(out, "training_pixels,{}", summary.training_pixels)?;
        writeln!(out, "classified_pixels,{}", summary.classified_pixels)?;
    }
    Ok(())
}

fn write_output(path: &Path, tile: &RasterTile) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    let written = fs::File::create(&tmp)
        .map_err(|e| CliError::in_file(&tmp, e))
        .and_then(|f| {
            let mut w = BufWriter::new(f);
            write_store(tile, &mut w).map_err(|e| CliError::in_file(&tmp, e))?;
            w.flush().map_err(|e| CliError::in_file(&tmp, e))
        })
        .and_then(|()| fs::rename(&tmp, path).map_err(|e| CliError::in_file(path, e)));
    if written.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    written
}

fn time_props(t: &TimeInterval) -> Value {
    json!({ "t_start": t.start, "t_end": t.end })
}

pub(super) fn export(args: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let store = Store::open(&args.store)?;
    let mut features = Vec::new();
    if args.patches {
        for r in dataset_patches(&store.dataset) {
            let mut props = time_props(&r.time);
            props["id"] = json!(r.id);
            props["product"] = json!(r.product);
            features.push(feature(&r.footprint, props));
        }
    } else {
        for e in &store.manifest.entries {
            let crs = CrsId::new(e.epsg)?;
            let bbox = to_wgs84(&BoundingBox::from_array(e.bbox)?, crs)?;
            let mut props = time_props(&TimeInterval { start: e.time[0], end: e.time[1] });
            props["file"] = json!(e.file);
            props["product"] = json!(e.product);
            props["kind"] = json!(match e.kind {
                EntryKind::Raster => "raster",
                EntryKind::Patches => "patches",
            });
            features.push(feature(&bbox, props));
        }
    }
    write_collection(out, features)
}
