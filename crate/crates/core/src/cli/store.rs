use std::collections::HashSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::formats::{parse_patch_table, read_store, FormatError, PatchRecord, RasterTile};
use crate::geo::{BoundingBox, CrsId, TimeInterval};
use crate::index::{GeoDataset, Source};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    /// `.ets` raster tile.
    Raster,
    /// `.jsonl` patch table.
    Patches,
}

/// One store file with its cached extent, so listing a store never re-reads headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub product: String,
    pub kind: EntryKind,
    pub bbox: [f64; 4],
    /// `[start, end)` in epoch seconds.
    pub time: [i64; 2],
    pub epsg: u32,
}

impl ManifestEntry {
    pub fn for_tile(file: String, tile: &RasterTile) -> Self {
        let t = tile.time();
        ManifestEntry {
            file,
            product: tile.product().to_string(),
            kind: EntryKind::Raster,
            bbox: tile.footprint().to_array(),
            time: [t.start, t.end],
            epsg: tile.crs().epsg(),
        }
    }

    /// Product is left empty when the table mixes products.
    pub fn for_patches(file: String, records: &[PatchRecord]) -> Self {
        let bbox = records.iter().fold(BoundingBox::EMPTY, |b, r| b.envelope(&r.footprint));
        let time = records.iter().fold(TimeInterval::EMPTY, |t, r| t.envelope(&r.time));
        let product = match records.first() {
            Some(first) if records.iter().all(|r| r.product == first.product) => first.product.clone(),
            _ => String::new(),
        };
        ManifestEntry {
            file,
            product,
            kind: EntryKind::Patches,
            bbox: bbox.to_array(),
            time: [time.start, time.end],
            epsg: CrsId::WGS84.epsg(),
        }
    }
}

/// `manifest.json` of a store directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    #[serde(skip)]
    pub dir: PathBuf,
    pub format_version: u16,
    pub entries: Vec<ManifestEntry>,
}

fn bad_manifest(dir: &Path, why: impl std::fmt::Display) -> CliError {
    CliError::in_file(dir.join(MANIFEST_FILE), FormatError::Malformed(format!("manifest: {why}")))
}

impl StoreManifest {
    pub fn empty(dir: &Path) -> Self {
        StoreManifest { dir: dir.to_path_buf(), format_version: MANIFEST_VERSION, entries: Vec::new() }
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::in_file(&path, e))?;
        let mut m: StoreManifest = serde_json::from_str(&text).map_err(|e| bad_manifest(dir, e))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(CliError::in_file(&path, FormatError::UnsupportedVersion(m.format_version)));
        }
        m.dir = dir.to_path_buf();
        Ok(m)
    }

    /// Existing manifest, or an empty one when the directory has none yet.
    pub fn load_or_empty(dir: &Path) -> Result<Self, CliError> {
        if dir.join(MANIFEST_FILE).exists() {
            Self::load(dir)
        } else {
            Ok(Self::empty(dir))
        }
    }

    /// Replaces the entry with the same file name, else appends.
    pub fn upsert(&mut self, entry: ManifestEntry) {
        match self.entries.iter_mut().find(|e| e.file == entry.file) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    /// Atomically replaces `manifest.json`.
    pub fn save(&self) -> Result<(), CliError> {
        let path = self.dir.join(MANIFEST_FILE);
        let tmp = self.dir.join(format!("{MANIFEST_FILE}.tmp"));
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        fs::write(&tmp, text).map_err(|e| CliError::in_file(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::in_file(&path, e))
    }
}

pub(crate) fn read_tile(path: &Path) -> Result<RasterTile, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::in_file(path, e))?;
    read_store(BufReader::new(f)).map_err(|e| CliError::in_file(path, e))
}

pub(crate) fn read_patches(path: &Path) -> Result<Vec<PatchRecord>, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::in_file(path, e))?;
    parse_patch_table(BufReader::new(f)).map_err(|e| CliError::in_file(path, e))
}

/// Fails on the first patch id already present in `seen`.
pub(crate) fn check_unique_ids(seen: &mut HashSet<u64>, records: &[PatchRecord], file: &Path) -> Result<(), CliError> {
    for r in records {
        if !seen.insert(r.id) {
            return Err(CliError::in_file(file, FormatError::Malformed(format!("patch id {} is not unique in the store", r.id))));
        }
    }
    Ok(())
}

/// A store directory loaded into memory.
#[derive(Debug, Clone)]
pub struct Store {
    pub manifest: StoreManifest,
    pub dataset: GeoDataset,
}

impl Store {
    /// Reads every listed file and checks it against its manifest entry.
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        let manifest = StoreManifest::load(dir)?;
        if manifest.entries.is_empty() {
            return Err(bad_manifest(dir, "store has no entries"));
        }
        let mut tiles = Vec::new();
        let mut patches = Vec::new();
        let mut ids = HashSet::new();
        for entry in &manifest.entries {
            let path = dir.join(&entry.file);
            let actual = match entry.kind {
                EntryKind::Raster => {
                    let tile = read_tile(&path)?;
                    let e = ManifestEntry::for_tile(entry.file.clone(), &tile);
                    tiles.push(tile);
                    e
                }
                EntryKind::Patches => {
                    let records = read_patches(&path)?;
                    check_unique_ids(&mut ids, &records, &path)?;
                    let e = ManifestEntry::for_patches(entry.file.clone(), &records);
                    patches.extend(records);
                    e
                }
            };
            if actual.bbox != entry.bbox || actual.time != entry.time || actual.epsg != entry.epsg {
                return Err(bad_manifest(dir, format!("entry {} disagrees with the file", entry.file)));
            }
        }
        let dataset = match (tiles.is_empty(), patches.is_empty()) {
            (false, true) => GeoDataset::from_tiles(tiles)?,
            (true, false) => GeoDataset::from_patches(patches)?,
            _ => GeoDataset::from_tiles(tiles)?.union(&GeoDataset::from_patches(patches)?)?,
        };
        Ok(Store { manifest, dataset })
    }
}

/// Raster tiles reachable from a dataset, in construction order.
pub(crate) fn dataset_tiles(ds: &GeoDataset) -> Vec<&RasterTile> {
    match ds.source() {
        Source::Raster { tiles, .. } => tiles.iter().collect(),
        Source::Patch { .. } => Vec::new(),
        Source::Intersection(l, r) | Source::Union(l, r) => {
            let mut v = dataset_tiles(l);
            v.extend(dataset_tiles(r));
            v
        }
    }
}

/// Patch records reachable from a dataset, in construction order.
pub(crate) fn dataset_patches(ds: &GeoDataset) -> Vec<&PatchRecord> {
    match ds.source() {
        Source::Raster { .. } => Vec::new(),
        Source::Patch { records, .. } => records.iter().collect(),
        Source::Intersection(l, r) | Source::Union(l, r) => {
            let mut v = dataset_patches(l);
            v.extend(dataset_patches(r));
            v
        }
    }
}
