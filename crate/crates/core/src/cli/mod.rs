//! The `geodex` command line: `products`, `ingest`, `sample`, `search`, `map`, `export`.
//!
//! Machine-readable output only: CSV lines without a header, or one JSON
//! object per line with `--json`. Exit code 0 on success, 2 on user or
//! input errors, 1 on internal failures.

mod ingest;
mod products;
mod query;
mod store;

use std::ffi::OsString;
use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use store::{EntryKind, ManifestEntry, Store, StoreManifest, MANIFEST_FILE, MANIFEST_VERSION};

use crate::embed::{EmbedError, Metric};
use crate::formats::FormatError;
use crate::geo::time::parse_timestamp;
use crate::geo::{GeoError, TimeInterval};
use crate::index::IndexError;
use crate::registry::{ProductKind, RegistryError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USER: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{file}: {source}")]
    InFile { file: String, source: crate::Error },
    #[error(transparent)]
    Lib(#[from] crate::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_USER,
        }
    }

    pub(crate) fn in_file(file: impl AsRef<Path>, source: impl Into<crate::Error>) -> Self {
        CliError::InFile { file: file.as_ref().display().to_string(), source: source.into() }
    }
}

macro_rules! lib_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Lib(e.into())
            }
        }
    )*};
}
lib_error!(GeoError, FormatError, RegistryError, IndexError, EmbedError, io::Error);

#[derive(Debug, Parser)]
#[command(name = "geodex", version, about = "Query, sample and search pre-computed Earth-embedding products")]
pub struct Cli {
    /// Print one JSON object per line instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for ingestion and search [default: all cores].
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<NonZeroUsize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List built-in products, or one product's provenance.
    Products(ProductsArgs),
    /// Normalize GeoTIFFs, patch tables or raw grids into a store directory.
    Ingest(IngestArgs),
    /// Cut a store (or the intersection of several) into fixed-size patches.
    Sample(SampleArgs),
    /// Top-k similarity search over a store.
    Search(SearchArgs),
    /// kNN land-cover mapping from an embedding store and a label store.
    Map(MapArgs),
    /// GeoJSON view of a store's contents.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Location,
    Patch,
    Pixel,
}

impl From<KindArg> for ProductKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Location => ProductKind::Location,
            KindArg::Patch => ProductKind::Patch,
            KindArg::Pixel => ProductKind::Pixel,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProductsArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Products covering this year.
    #[arg(long, conflicts_with_all = ["min_year", "max_year"])]
    pub year: Option<i32>,
    #[arg(long)]
    pub min_year: Option<i32>,
    #[arg(long)]
    pub max_year: Option<i32>,
    /// License prefix, e.g. `CC-BY`.
    #[arg(long)]
    pub license: Option<String>,
    /// Coarsest acceptable resolution in meters.
    #[arg(long, value_name = "METERS")]
    pub max_resolution: Option<f64>,
    /// Only nominally global products.
    #[arg(long)]
    pub global: bool,
    /// Print the provenance rows and openness of one product instead.
    #[arg(long, value_name = "PRODUCT", conflicts_with_all = ["kind", "year", "min_year", "max_year", "license", "max_resolution", "global"])]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Geotiff,
    PatchTable,
    RawGrid,
}

/// Time window as a single year or an explicit `[start, end)`.
#[derive(Debug, Clone, Default, Args)]
pub struct TimeArgs {
    #[arg(long, conflicts_with_all = ["t_start", "t_end"])]
    pub year: Option<i32>,
    /// Epoch seconds or RFC 3339.
    #[arg(long, requires = "t_end")]
    pub t_start: Option<String>,
    /// Epoch seconds or RFC 3339, exclusive.
    #[arg(long, requires = "t_start")]
    pub t_end: Option<String>,
}

fn instant(s: &str) -> Result<i64, CliError> {
    s.parse::<i64>()
        .ok()
        .or_else(|| parse_timestamp(s))
        .ok_or_else(|| CliError::Usage(format!("invalid time {s:?}: expected epoch seconds or RFC 3339")))
}

impl TimeArgs {
    pub fn interval(&self) -> Result<Option<TimeInterval>, CliError> {
        if let Some(y) = self.year {
            return Ok(Some(TimeInterval::year(y)));
        }
        match (&self.t_start, &self.t_end) {
            (Some(s), Some(e)) => Ok(Some(TimeInterval::new(instant(s)?, instant(e)?)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Files to ingest.
    pub inputs: Vec<PathBuf>,
    /// Input format [default: from the file extension].
    #[arg(long, value_enum)]
    pub kind: Option<InputKind>,
    /// Raw-grid georeferencing JSON [default: `<input>.json`].
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Product name to stamp on rasters (and patch records).
    #[arg(long)]
    pub product: Option<String>,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Affine dequantization scale, overriding sidecar and registry defaults.
    #[arg(long, requires = "zero_point")]
    pub scale: Option<f64>,
    #[arg(long, requires = "scale", allow_negative_numbers = true)]
    pub zero_point: Option<f64>,
    /// Store directory.
    #[arg(long, env = "GEODEX_STORE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Store directory; repeat to sample the intersection of several stores.
    #[arg(long, env = "GEODEX_STORE", required = true)]
    pub store: Vec<PathBuf>,
    /// Patch side in pixels.
    #[arg(long, default_value_t = 256)]
    pub size: u32,
    /// Grid step in pixels [default: --size].
    #[arg(long)]
    pub stride: Option<u32>,
    /// Draw this many random patches instead of a grid.
    #[arg(long, value_name = "N")]
    pub random: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CRS units per pixel [default: the finest raster resolution].
    #[arg(long)]
    pub res: Option<f64>,
    /// Restrict to `minx,miny,maxx,maxy` in the store CRS.
    #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
    pub bbox: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Geojson,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("query").required(true).args(["query_lon", "query_x", "query_file", "query_id"]))]
pub struct SearchArgs {
    #[arg(long, env = "GEODEX_STORE")]
    pub store: PathBuf,
    /// Query with the embedding at this WGS84 location.
    #[arg(long, requires = "query_lat", allow_negative_numbers = true)]
    pub query_lon: Option<f64>,
    #[arg(long, requires = "query_lon", allow_negative_numbers = true)]
    pub query_lat: Option<f64>,
    /// Query with the embedding at this point in the store CRS.
    #[arg(long, requires = "query_y", allow_negative_numbers = true)]
    pub query_x: Option<f64>,
    #[arg(long, requires = "query_x", allow_negative_numbers = true)]
    pub query_y: Option<f64>,
    /// JSON array of floats.
    #[arg(long)]
    pub query_file: Option<PathBuf>,
    /// Query with a stored patch (or pixel) by id.
    #[arg(long)]
    pub query_id: Option<u64>,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "cosine", value_parser = parse_metric)]
    pub metric: Metric,
    /// Approximate search with an IVF index, as `NLIST,NPROBE`.
    #[arg(long, value_parser = parse_ivf)]
    pub ivf: Option<(usize, usize)>,
    /// k-means seed for --ivf.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Print a GeoJSON FeatureCollection instead of CSV.
    #[arg(long, value_enum)]
    pub export: Option<ExportFormat>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Pixel-embedding store.
    #[arg(long, env = "GEODEX_STORE")]
    pub embeddings: PathBuf,
    /// Label store: one-band integer raster, 0 = unlabeled.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value = "cosine", value_parser = parse_metric)]
    pub metric: Metric,
    /// Patch side in pixels.
    #[arg(long, default_value_t = 256)]
    pub size: u32,
    /// Keep at most this many training pixels, evenly spaced.
    #[arg(long, default_value_t = 10_000)]
    pub max_train: usize,
    /// Output label raster (`.ets`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, env = "GEODEX_STORE")]
    pub store: PathBuf,
    /// One feature per patch record rather than per store file.
    #[arg(long)]
    pub patches: bool,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse::<Metric>().map_err(|e| e.to_string())
}

fn parse_bbox(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 4]>::try_from(v).map_err(|_| "expected minx,miny,maxx,maxy".to_string())
}

fn parse_ivf(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NLIST,NPROBE")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

/// Shortest round-trip decimal form, so output is byte-stable.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn json_line(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub(crate) fn subcommand_usage(name: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(name) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let json = cli.json;
    match cli.command {
        Command::Products(a) => products::run(&a, json, out),
        Command::Ingest(a) => ingest::run(&a, json, out),
        Command::Sample(a) => query::sample(&a, json, out),
        Command::Search(a) => query::search(&a, json, out),
        Command::Map(a) => query::map(&a, json, out),
        Command::Export(a) => query::export(&a, out),
    }
}

/// Parses `args` (including the program name) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            let rendered = e.render().to_string();
            return if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                let _ = out.write_all(rendered.as_bytes());
                EXIT_OK
            } else {
                let _ = err.write_all(rendered.as_bytes());
                EXIT_USER
            };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        pool = pool.num_threads(n.get());
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INTERNAL;
        }
    };
    // Commands render into a buffer: the pool needs `Send` and a failed
    // command must not leave half its output on stdout.
    let mut buf = Vec::new();
    let result = catch_unwind(AssertUnwindSafe(|| pool.install(|| dispatch(cli, &mut buf))))
        .unwrap_or_else(|_| Err(CliError::Internal("command panicked".into())));
    match result {
        Ok(()) => match out.write_all(&buf).and_then(|()| out.flush()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: Io: {e}");
                EXIT_USER
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
