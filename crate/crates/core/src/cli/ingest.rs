use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::store::{check_unique_ids, read_patches, EntryKind, ManifestEntry, StoreManifest};
use super::{csv_field, json_line, subcommand_usage, CliError, IngestArgs, InputKind};
use crate::formats::{
    encode_store, parse_geotiff, parse_raw_grid, write_patch_table, Dtype, FormatError, PatchRecord, QuantScheme,
    RasterTile, RawGridSidecar,
};
use crate::geo::{normalize_orientation, TimeInterval};
use crate::registry;

enum Normalized {
    Raster(RasterTile),
    Patches(Vec<PatchRecord>),
}

struct Prepared {
    input: PathBuf,
    file: String,
    entry: ManifestEntry,
    bytes: Vec<u8>,
}

struct Options<'a> {
    kind: Option<InputKind>,
    sidecar: Option<&'a Path>,
    product: Option<&'a str>,
    time: Option<TimeInterval>,
    quant: Option<QuantScheme>,
}

fn infer_kind(path: &Path) -> Option<InputKind> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "tif" | "tiff" => Some(InputKind::Geotiff),
        "jsonl" | "ndjson" | "geojsonl" => Some(InputKind::PatchTable),
        "bin" | "raw" | "npy" | "pt" => Some(InputKind::RawGrid),
        _ => None,
    }
}

fn sidecar_for(input: &Path, explicit: Option<&Path>) -> Result<RawGridSidecar, CliError> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let mut p = input.as_os_str().to_owned();
            p.push(".json");
            let p = PathBuf::from(p);
            if !p.exists() {
                return Err(CliError::in_file(input, FormatError::MissingField("sidecar".into())));
            }
            p
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::in_file(&path, e))?;
    RawGridSidecar::from_json(&text).map_err(|e| CliError::in_file(&path, e))
}

/// Orientation, product, time and dequantization for an ingested raster.
fn finish_raster(tile: RasterTile, opts: &Options) -> Result<RasterTile, FormatError> {
    let mut tile = normalize_orientation(tile)?;
    if let Some(p) = opts.product {
        tile = tile.with_product(p)?;
    }
    if let Some(t) = opts.time {
        tile = tile.with_time(t)?;
    }
    let known = registry::product(tile.product());
    if let Some(p) = known {
        if p.dimensions != tile.dims() {
            return Err(FormatError::InvalidTile(format!(
                "{} has {} dimensions, the raster has {}",
                p.name,
                p.dimensions,
                tile.dims()
            )));
        }
    }
    let quant = match (opts.quant, known) {
        (Some(q), _) => Some(q),
        (None, Some(p)) if tile.quant().is_identity() && tile.dtype() != Dtype::F32 && p.storage_dtype == tile.dtype() => {
            Some(p.dequant)
        }
        _ => None,
    };
    match quant {
        Some(q) => tile.with_quant(q),
        None => Ok(tile),
    }
}

fn finish_patches(mut records: Vec<PatchRecord>, opts: &Options) -> Result<Vec<PatchRecord>, FormatError> {
    if records.is_empty() {
        return Err(FormatError::Malformed("patch table has no records".into()));
    }
    for (i, r) in records.iter_mut().enumerate() {
        if let Some(p) = opts.product {
            r.product = p.to_string();
            if let Some(known) = registry::product(p) {
                let expected = usize::from(known.dimensions);
                if r.embedding.len() != expected {
                    return Err(FormatError::EmbeddingLengthMismatch { line: i + 1, expected, found: r.embedding.len() });
                }
            }
        }
        if let Some(t) = opts.time {
            r.time = t;
        }
    }
    Ok(records)
}

fn load(input: &Path, opts: &Options) -> Result<Normalized, CliError> {
    let at = |e: FormatError| CliError::in_file(input, e);
    let kind = opts.kind.or_else(|| infer_kind(input)).ok_or_else(|| {
        CliError::Usage(format!("{}: cannot infer the input format, pass --kind", input.display()))
    })?;
    match kind {
        InputKind::Geotiff => {
            let bytes = fs::read(input).map_err(|e| CliError::in_file(input, e))?;
            let tile = parse_geotiff(&bytes).map_err(at)?;
            Ok(Normalized::Raster(finish_raster(tile, opts).map_err(at)?))
        }
        InputKind::RawGrid => {
            let sidecar = sidecar_for(input, opts.sidecar)?;
            let bytes = fs::read(input).map_err(|e| CliError::in_file(input, e))?;
            let tile = parse_raw_grid(&bytes, &sidecar).map_err(at)?;
            Ok(Normalized::Raster(finish_raster(tile, opts).map_err(at)?))
        }
        InputKind::PatchTable => {
            let records = read_patches(input)?;
            Ok(Normalized::Patches(finish_patches(records, opts).map_err(at)?))
        }
    }
}

fn prepare(input: &Path, opts: &Options) -> Result<Prepared, CliError> {
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Usage(format!("{}: file name is not valid UTF-8", input.display())))?;
    let (file, entry, bytes) = match load(input, opts)? {
        Normalized::Raster(tile) => {
            let file = format!("{stem}.ets");
            let entry = ManifestEntry::for_tile(file.clone(), &tile);
            (file, entry, encode_store(&tile))
        }
        Normalized::Patches(records) => {
            let file = format!("{stem}.jsonl");
            let entry = ManifestEntry::for_patches(file.clone(), &records);
            let mut bytes = Vec::new();
            write_patch_table(&records, &mut bytes).map_err(|e| CliError::in_file(input, e))?;
            (file, entry, bytes)
        }
    };
    Ok(Prepared { input: input.to_path_buf(), file, entry, bytes })
}

/// Patch ids must stay unique across the whole store.
fn check_patch_ids(manifest: &StoreManifest, batch: &[Prepared]) -> Result<(), CliError> {
    let replaced: HashSet<&str> = batch.iter().map(|p| p.file.as_str()).collect();
    let mut seen = HashSet::new();
    for e in &manifest.entries {
        if e.kind == EntryKind::Patches && !replaced.contains(e.file.as_str()) {
            let path = manifest.dir.join(&e.file);
            check_unique_ids(&mut seen, &read_patches(&path)?, &path)?;
        }
    }
    for p in batch.iter().filter(|p| p.entry.kind == EntryKind::Patches) {
        let records = crate::formats::parse_patch_table(&p.bytes[..]).map_err(|e| CliError::in_file(&p.input, e))?;
        check_unique_ids(&mut seen, &records, &p.input)?;
    }
    Ok(())
}

fn tmp_path(dir: &Path, file: &str) -> PathBuf {
    dir.join(format!(".{file}.partial"))
}

fn write_all(dir: &Path, batch: &[Prepared]) -> Result<(), CliError> {
    for p in batch {
        let tmp = tmp_path(dir, &p.file);
        let written = fs::File::create(&tmp).and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(&p.bytes)?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()
        });
        written.map_err(|e| CliError::in_file(&tmp, e))?;
    }
    for p in batch {
        let target = dir.join(&p.file);
        fs::rename(tmp_path(dir, &p.file), &target).map_err(|e| CliError::in_file(&target, e))?;
    }
    Ok(())
}

pub(super) fn run(args: &IngestArgs, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if args.inputs.is_empty() {
        return Err(CliError::Usage(format!("no input files\n\n{}", subcommand_usage("ingest"))));
    }
    if args.sidecar.is_some() && args.inputs.len() > 1 {
        return Err(CliError::Usage("--sidecar applies to a single input; use <input>.json sidecars for several".into()));
    }
    let quant = match (args.scale, args.zero_point) {
        (Some(s), Some(z)) => Some(QuantScheme::affine(s, z)?),
        _ => None,
    };
    let opts = Options {
        kind: args.kind,
        sidecar: args.sidecar.as_deref(),
        product: args.product.as_deref(),
        time: args.time.interval()?,
        quant,
    };

    // Parallel parse; results keep input order so the first failing input is reported.
    let batch = args.inputs.par_iter().map(|p| prepare(p, &opts)).collect::<Result<Vec<_>, _>>()?;
    let mut names = HashSet::new();
    for p in &batch {
        if !names.insert(p.file.as_str()) {
            return Err(CliError::Usage(format!("{}: another input also maps to store file {}", p.input.display(), p.file)));
        }
    }

    fs::create_dir_all(&args.out).map_err(|e| CliError::in_file(&args.out, e))?;
    let mut manifest = StoreManifest::load_or_empty(&args.out)?;
    check_patch_ids(&manifest, &batch)?;
    if let Err(e) = write_all(&args.out, &batch) {
        for p in &batch {
            let _ = fs::remove_file(tmp_path(&args.out, &p.file));
        }
        return Err(e);
    }
    for p in &batch {
        manifest.upsert(p.entry.clone());
    }
    manifest.save()?;

    for p in &batch {
        if json {
            json_line(out, &p.entry)?;
        } else {
            let kind = match p.entry.kind {
                EntryKind::Raster => "raster",
                EntryKind::Patches => "patches",
            };
            writeln!(out, "{},{},{}", csv_field(&p.file), kind, csv_field(&p.entry.product))?;
        }
    }
    Ok(())
}
