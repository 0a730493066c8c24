//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
//! its runtime; the process exits non-zero if any criterion fails.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use geodex::embed::{build_ivf, knn_classify, search_ivf, topk_search, Corpus, EmbeddingVector, Hit, LabeledVector, Metric};
use geodex::formats::{
    decode_store, encode_store, parse_geotiff, parse_patch_table, parse_raw_grid, read_store, write_patch_table,
    write_store, RawGridSidecar,
};
use geodex::geo::{normalize_orientation, project_3857_to_4326, project_4326_to_3857, BoundingBox, GeoTransform, TimeInterval};
use geodex::index::{build_index, grid_samples, GeoDataset, IndexEntry, Source};
use geodex::registry::{builtin_products, provenance, Terms};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use support::{f32_tile, gaussian, label_tile, random_tiff, random_tile, rng, write_tiff};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        // NaN comparisons land in the else branch and fail
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("registry fidelity", Some(Duration::from_secs(1)), registry_fidelity),
        ("index equals brute force", Some(Duration::from_secs(30)), index_equivalence),
        ("retrieval exactness", Some(Duration::from_secs(60)), retrieval_exactness),
        ("patch search workflow", None, patch_search_workflow),
        ("pixel mapping workflow", None, pixel_mapping_workflow),
        ("format round trips", None, format_round_trips),
        ("geometry numerics", None, geometry_numerics),
        ("sampler coverage", None, sampler_coverage),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {status} {name} ({:.2}s) {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}

fn fixture_rows(name: &str) -> Vec<Vec<String>> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split('\t').map(str::to_owned).collect())
        .collect()
}

fn registry_fidelity() -> Outcome {
    let golden = fixture_rows("table1.tsv");
    let products = builtin_products();
    ensure!(products.len() == 7 && golden.len() == 7, "expected 7 products, got {} / {}", products.len(), golden.len());
    for (p, g) in products.iter().zip(&golden) {
        ensure!(g.len() == 9, "golden row for {} has {} columns", p.name, g.len());
        ensure!(p.table_row().to_vec() == *g, "{}: {:?} != {:?}", p.name, p.table_row(), g);
    }

    let golden = fixture_rows("table2.tsv");
    let records: Vec<_> = products.iter().flat_map(|p| provenance(p.name).unwrap()).collect();
    ensure!(records.len() == golden.len(), "{} provenance rows, golden has {}", records.len(), golden.len());
    for (r, g) in records.iter().zip(&golden) {
        let got = [
            r.product.to_string(),
            r.architecture.to_string(),
            r.training_method.to_string(),
            r.training_data.join("; "),
            r.inference_data.join("; "),
            r.code_license.to_string(),
            r.weights_license.to_string(),
            r.data_licenses.join("; "),
        ];
        ensure!(got.to_vec() == *g, "{} / {}: {got:?} != {g:?}", r.product, r.architecture);
    }

    let one = |name: &str| provenance(name).unwrap()[0];
    ensure!(one("Tessera Embeddings").weights_license == Terms::ClosedSource, "Tessera weights");
    let mmearth = provenance("Major TOM Embeddings").unwrap().into_iter().find(|r| r.training_data.contains(&"MMEarth"));
    ensure!(mmearth.is_some_and(|r| r.weights_license.is_restricted()), "MMEarth weights");
    let google = one("Google Satellite Embedding");
    ensure!(
        google.code_license == Terms::ClosedSource && google.weights_license == Terms::ClosedSource,
        "Google code and weights"
    );
    Ok(format!("{} products, {} provenance rows", products.len(), records.len()))
}

/// Independent closed-open overlap test.
fn overlaps(a: &IndexEntry, bbox: &BoundingBox, time: &TimeInterval) -> bool {
    a.bbox.minx < bbox.maxx
        && bbox.minx < a.bbox.maxx
        && a.bbox.miny < bbox.maxy
        && bbox.miny < a.bbox.maxy
        && a.time.start < time.end
        && time.start < a.time.end
}

fn random_box(rng: &mut StdRng, max_side: f64) -> BoundingBox {
    // integer corners make shared edges common, which exercises the closed-open rule
    let x = rng.gen_range(0..1000) as f64;
    let y = rng.gen_range(0..1000) as f64;
    let w = rng.gen_range(1.0..max_side).round();
    let h = rng.gen_range(1.0..max_side).round();
    BoundingBox::new(x, y, x + w, y + h).unwrap()
}

fn random_interval(rng: &mut StdRng) -> TimeInterval {
    let start = rng.gen_range(0..100);
    TimeInterval::new(start, start + rng.gen_range(1..30)).unwrap()
}

fn index_equivalence() -> Outcome {
    let mut rng = rng(2);
    let entries: Vec<IndexEntry> = (0..10_000)
        .map(|id| IndexEntry { id, bbox: random_box(&mut rng, 40.0), time: random_interval(&mut rng) })
        .collect();
    let mut shuffled = entries.clone();
    shuffled.shuffle(&mut rng);
    let index = build_index(shuffled);
    let mut total = 0usize;
    for q in 0..10_000 {
        let bbox = random_box(&mut rng, 120.0);
        let time = random_interval(&mut rng);
        let expected: Vec<u64> = entries.iter().filter(|e| overlaps(e, &bbox, &time)).map(|e| e.id).collect();
        let got = index.query(&bbox, &time);
        ensure!(got == expected, "query {q} {bbox:?} {time:?}: {} hits, brute force {}", got.len(), expected.len());
        total += got.len();
    }
    Ok(format!("10000 queries, {total} hits"))
}

/// Full-sort reference ranking, computed without the library's scoring code.
fn oracle_topk(query: &[f32], corpus: &[(u64, Vec<f32>)], k: usize, metric: Metric) -> Vec<Hit> {
    let dot = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum::<f64>();
    let qn = dot(query, query).sqrt();
    let mut scored: Vec<Hit> = corpus
        .iter()
        .map(|(id, v)| {
            let score = match metric {
                Metric::Cosine => {
                    let vn = dot(v, v).sqrt();
                    if vn == 0.0 {
                        0.0
                    } else {
                        (dot(query, v) / (qn * vn)).clamp(-1.0, 1.0)
                    }
                }
                Metric::L2 => query
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            };
            Hit { id: *id, score }
        })
        .collect();
    scored.sort_by(|a, b| {
        let s = match metric {
            Metric::Cosine => b.score.total_cmp(&a.score),
            Metric::L2 => a.score.total_cmp(&b.score),
        };
        s.then(a.id.cmp(&b.id))
    });
    scored.truncate(k);
    scored
}

fn to_corpus(items: &[(u64, Vec<f32>)], dims: usize) -> Corpus {
    let mut c = Corpus::new(dims);
    for (id, v) in items {
        c.push(*id, v).unwrap();
    }
    c
}

fn retrieval_exactness() -> Outcome {
    let mut rng = rng(3);
    for case in 0..1000 {
        let dims = rng.gen_range(1..24);
        let n = rng.gen_range(1..300);
        // small integer values give many exact ties and duplicates
        let coarse = rng.gen_bool(0.3);
        let mut ids: Vec<u64> = (0..n as u64).map(|i| i * 3 + 1).collect();
        ids.shuffle(&mut rng);
        let items: Vec<(u64, Vec<f32>)> = ids
            .into_iter()
            .map(|id| {
                let v = (0..dims)
                    .map(|_| if coarse { rng.gen_range(-2i8..=2) as f32 } else { rng.gen_range(-1.0f32..1.0) })
                    .collect();
                (id, v)
            })
            .collect();
        let corpus = to_corpus(&items, dims);
        let metric = if rng.gen_bool(0.5) { Metric::Cosine } else { Metric::L2 };
        let k = rng.gen_range(1..=n + 5);
        let mut q: Vec<f32> = items[rng.gen_range(0..n)].1.clone();
        if rng.gen_bool(0.5) || q.iter().all(|&v| v == 0.0) {
            q = (0..dims).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        }
        let query = EmbeddingVector::new(q.clone()).unwrap();
        let got = topk_search(&query, &corpus, k, metric).map_err(|e| format!("case {case}: {e}"))?;
        let expected = oracle_topk(&q, &items, k, metric);
        ensure!(got == expected, "case {case}: topk differs from full sort");

        let nlist = rng.gen_range(1..=n.min(16));
        let ivf = build_ivf(corpus, nlist, case).map_err(|e| format!("case {case}: {e}"))?;
        let approx = search_ivf(&ivf, &query, k, nlist, metric).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(approx == got, "case {case}: ivf with nprobe = nlist differs from topk");
    }

    // two well separated clusters
    let dims = 32;
    let centers: Vec<Vec<f32>> =
        (0..2).map(|_| (0..dims).map(|_| rng.gen_range(-5.0f32..5.0)).collect()).collect();
    let point = |rng: &mut StdRng, c: &[f32]| -> Vec<f32> { c.iter().map(|&m| m + gaussian(rng) as f32).collect() };
    let items: Vec<(u64, Vec<f32>)> =
        (0..10_000u64).map(|id| (id, point(&mut rng, &centers[(id % 2) as usize]))).collect();
    let corpus = to_corpus(&items, dims);
    let nlist = 32;
    let ivf = build_ivf(corpus.clone(), nlist, 7).map_err(|e| e.to_string())?;
    let queries = 200;
    let mut found = 0;
    for i in 0..queries {
        let q = EmbeddingVector::new(point(&mut rng, &centers[i % 2])).unwrap();
        let exact = topk_search(&q, &corpus, 10, Metric::L2).unwrap();
        let approx = search_ivf(&ivf, &q, 10, nlist / 2, Metric::L2).unwrap();
        found += approx.iter().filter(|h| exact.iter().any(|e| e.id == h.id)).count();
    }
    let recall = found as f64 / (queries * 10) as f64;
    ensure!(recall >= 0.9, "recall@10 at nprobe = nlist/2 is {recall:.3}");
    Ok(format!("1000 corpora exact, recall@10 {recall:.3}"))
}

fn patch_search_workflow() -> Outcome {
    const SIZE_M: f64 = 640.0;
    let mut rng = rng(4);
    let mut text = String::new();
    let mut planted = Vec::new();
    for i in 0..2000u64 {
        let lon: f64 = rng.gen_range(-179.0..179.0);
        let lat: f64 = rng.gen_range(-70.0..70.0);
        let v: Vec<f32> = (0..384).map(|_| gaussian(&mut rng) as f32).collect();
        text.push_str(
            &serde_json::json!({
                "id": 50_000 + i, "lon": lon, "lat": lat, "size_m": SIZE_M,
                "t_start": "2024-01-01T00:00:00Z", "t_end": "2025-01-01T00:00:00Z",
                "product": "Earth Index Embeddings", "embedding": v,
            })
            .to_string(),
        );
        text.push('\n');
        planted.push((lon, lat, v));
    }
    let records = parse_patch_table(text.as_bytes()).map_err(|e| e.to_string())?;
    let dataset = GeoDataset::from_patches(records).map_err(|e| e.to_string())?;
    let Source::Patch { records, .. } = dataset.source() else {
        return Err("patch table did not load as a patch dataset".into());
    };
    let corpus = Corpus::from_patches(records).map_err(|e| e.to_string())?;

    for pick in [0usize, 777, 1999] {
        let (lon, lat, v) = &planted[pick];
        let hits = topk_search(&EmbeddingVector::new(v.clone()).unwrap(), &corpus, 5, Metric::Cosine).unwrap();
        let id = 50_000 + pick as u64;
        ensure!(hits[0].id == id, "rank-1 hit is {} instead of {id}", hits[0].id);
        ensure!((hits[0].score - 1.0).abs() <= 1e-9, "rank-1 cosine {}", hits[0].score);
        let record = records.iter().find(|r| r.id == id).unwrap();
        // footprint oracle: SIZE_M square on the sphere
        let dlat = SIZE_M / 111_320.0;
        let dlon = dlat / lat.to_radians().cos();
        let expected = [lon - dlon / 2.0, lat - dlat / 2.0, lon + dlon / 2.0, lat + dlat / 2.0];
        for (a, b) in record.footprint.to_array().iter().zip(expected) {
            ensure!((a - b).abs() <= 1e-9, "footprint {:?} != {expected:?}", record.footprint);
        }
    }

    // the same flow through the command line
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let table = dir.path().join("earth_index.jsonl");
    std::fs::write(&table, &text).unwrap();
    let store = dir.path().join("store");
    let run = |args: &[&std::ffi::OsStr]| Command::new(env!("CARGO_BIN_EXE_geodex")).args(args).env_remove("GEODEX_STORE").output().unwrap();
    let out = run(&["ingest".as_ref(), table.as_os_str(), "--out".as_ref(), store.as_os_str()]);
    ensure!(out.status.success(), "ingest failed: {}", String::from_utf8_lossy(&out.stderr));
    let query_file = dir.path().join("q.json");
    std::fs::write(&query_file, serde_json::to_string(&planted[321].2).unwrap()).unwrap();
    let out = run(&[
        "search".as_ref(),
        "--store".as_ref(),
        store.as_os_str(),
        "--query-file".as_ref(),
        query_file.as_os_str(),
        "-k".as_ref(),
        "3".as_ref(),
    ]);
    ensure!(out.status.success(), "search failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let first: Vec<&str> = stdout.lines().next().unwrap_or_default().split(',').collect();
    ensure!(first.len() == 7 && first[0] == "1" && first[1] == "50321", "unexpected first row {first:?}");
    let score: f64 = first[2].parse().unwrap();
    ensure!((score - 1.0).abs() <= 1e-9, "cli rank-1 cosine {score}");
    let bbox: Vec<f64> = first[3..].iter().map(|v| v.parse().unwrap()).collect();
    let record = records.iter().find(|r| r.id == 50_321).unwrap();
    ensure!(bbox == record.footprint.to_array(), "cli bbox {bbox:?} != {:?}", record.footprint);
    Ok("library and cli rank-1 exact".into())
}

fn pixel_mapping_workflow() -> Outcome {
    let mut rng = rng(5);
    let year = TimeInterval::year(2023);
    let dims = 16;
    let centers: Vec<Vec<f32>> = vec![vec![1.5; dims], vec![-1.5; dims]];
    // planted classes: a diagonal split of the scene
    let class_of = |x: f64, y: f64| -> u16 { if x + y < 10_000.0 { 1 } else { 2 } };

    // embeddings: 700 × 600 px at 10 m with origin (0, 6000)
    let emb_origin = (0.0, 6000.0);
    let emb = f32_tile(emb_origin, 10.0, 700, 600, dims as u16, 32633, year, |r, c| {
        let (x, y) = (emb_origin.0 + (c as f64 + 0.5) * 10.0, emb_origin.1 - (r as f64 + 0.5) * 10.0);
        let center = &centers[usize::from(class_of(x, y)) - 1];
        center.iter().map(|&m| m + gaussian(&mut rng) as f32).collect()
    });
    // labels cover a shifted window; roughly 3% of pixels are labeled
    let lab_origin = (1000.0, 6500.0);
    let mut labeled = Vec::new();
    let labels = label_tile(lab_origin, 10.0, 700, 600, 32633, TimeInterval::years(2022, 2024), |r, c| {
        let (x, y) = (lab_origin.0 + (c as f64 + 0.5) * 10.0, lab_origin.1 - (r as f64 + 0.5) * 10.0);
        if (r * 7 + c * 13) % 31 == 0 {
            labeled.push((x, y));
            class_of(x, y)
        } else {
            0
        }
    });

    let emb = GeoDataset::from_tiles(vec![emb]).map_err(|e| e.to_string())?;
    let labels = GeoDataset::from_tiles(vec![labels]).map_err(|e| e.to_string())?;
    let joint = emb.intersect(&labels).map_err(|e| e.to_string())?;
    let bounds = joint.bounds();
    ensure!(bounds.to_array() == [1000.0, 500.0, 7000.0, 6000.0], "intersection bounds {:?}", bounds);
    let res = joint.resolution().unwrap();

    // closed form per axis: 1 when it fits, else ceil((E - s) / t) + 1
    let per_axis = |extent_px: usize, s: usize, t: usize| if extent_px <= s { 1 } else { (extent_px - s).div_ceil(t) + 1 };
    for (size, stride) in [(256u32, 256u32), (256, 128), (100, 30)] {
        let patches = grid_samples(&bounds, res, size, stride).map_err(|e| e.to_string())?;
        let expected = per_axis(600, size as usize, stride as usize) * per_axis(550, size as usize, stride as usize);
        ensure!(patches.len() == expected, "size {size} stride {stride}: {} patches, closed form {expected}", patches.len());
    }

    let patches = grid_samples(&bounds, res, 256, 256).map_err(|e| e.to_string())?;
    let t = joint.time_bounds();
    let mut train = Vec::new();
    for &(x, y) in &labeled {
        if !bounds.contains_point(x, y) {
            continue;
        }
        let (v, label) = joint.pair_at(x, y, &t).ok_or("no pair at a labeled pixel")?;
        train.push(LabeledVector { id: train.len() as u64, label: label.as_slice()[0] as u32, vector: v });
    }
    // held out: unlabeled pixel centers inside the sampled patches
    let mut queries = Vec::new();
    let mut truth = Vec::new();
    for patch in patches.iter().step_by(2) {
        for _ in 0..200 {
            let x = (rng.gen_range(patch.minx..patch.maxx) / 10.0).floor() * 10.0 + 5.0;
            let y = (rng.gen_range(patch.miny..patch.maxy) / 10.0).floor() * 10.0 + 5.0;
            let (v, label) = joint.pair_at(x, y, &t).ok_or("no pair inside a patch")?;
            if label.as_slice()[0] != 0.0 {
                continue;
            }
            queries.push(v);
            truth.push(u32::from(class_of(x, y)));
        }
    }
    let predicted = knn_classify(&queries, &train, 5, Metric::L2).map_err(|e| e.to_string())?;
    let correct = predicted.iter().zip(&truth).filter(|(p, t)| p == t).count();
    let accuracy = correct as f64 / truth.len() as f64;
    ensure!(accuracy >= 0.95, "accuracy {accuracy:.4} on {} held-out pixels", truth.len());
    Ok(format!("{} patches, {} train, accuracy {accuracy:.4} on {}", patches.len(), train.len(), truth.len()))
}

fn mutate(rng: &mut StdRng, bytes: &[u8]) -> Vec<u8> {
    let mut out = bytes.to_vec();
    match rng.gen_range(0..5) {
        0 => out.truncate(rng.gen_range(0..=bytes.len())),
        1 => {
            for _ in 0..rng.gen_range(1..=8) {
                if !out.is_empty() {
                    let i = rng.gen_range(0..out.len());
                    out[i] ^= 1 << rng.gen_range(0..8);
                }
            }
        }
        2 => {
            for _ in 0..rng.gen_range(1..=4) {
                if !out.is_empty() {
                    let i = rng.gen_range(0..out.len());
                    out[i] = *[0u8, 0xFF, 0x7F, 0x80, rng.gen()].choose(rng).unwrap();
                }
            }
        }
        3 => {
            let i = rng.gen_range(0..=out.len());
            let n = rng.gen_range(1..16);
            out.splice(i..i, (0..n).map(|_| rng.gen::<u8>()));
        }
        _ => {
            // overwrite an aligned 4-byte word: hits lengths, offsets and counts
            if out.len() >= 4 {
                let i = rng.gen_range(0..out.len() / 4) * 4;
                let v: u32 = *[0, 1, u32::MAX, 0x7FFF_FFFF, rng.gen()].choose(rng).unwrap();
                out[i..i + 4].copy_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

fn format_round_trips() -> Outcome {
    let mut rng = rng(6);
    for case in 0..100 {
        let tile = random_tile(&mut rng);
        let mut buf = Vec::new();
        write_store(&tile, &mut buf).map_err(|e| e.to_string())?;
        let back = read_store(&buf[..]).map_err(|e| format!("tile {case}: {e}"))?;
        ensure!(back == tile, "tile {case} changed in the round trip");
        ensure!(encode_store(&back) == buf, "tile {case} re-encodes differently");
    }
    let mut tiffs = Vec::new();
    for case in 0..100 {
        let spec = random_tiff(&mut rng);
        let bytes = write_tiff(&spec);
        let tile = parse_geotiff(&bytes).map_err(|e| format!("tiff {case}: {e}"))?;
        ensure!(
            (tile.width(), tile.height(), tile.dims(), tile.dtype()) == (spec.width, spec.height, spec.spp, spec.dtype),
            "tiff {case}: shape or dtype differs"
        );
        ensure!(tile.transform().to_array() == spec.expected_transform(), "tiff {case}: transform differs");
        ensure!(tile.data() == &spec.samples[..], "tiff {case}: samples differ");
        tiffs.push(bytes);
    }

    let stores: Vec<Vec<u8>> = (0..20).map(|_| encode_store(&random_tile(&mut rng))).collect();
    let sidecar = br#"{"width":3,"height":2,"dims":2,"dtype":"uint16","byte_order":"big","transform":[10,0,0,0,-10,20],"epsg":3857,"t_start":"2024-01-01T00:00:00Z","t_end":"2025-01-01T00:00:00Z","quant":{"scale":0.5,"zero_point":1}}"#;
    let mut table = Vec::new();
    write_patch_table(&parse_patch_table(
        &br#"{"id":1,"lon":3,"lat":4,"size_m":100,"t_start":"2024-01-01T00:00:00Z","t_end":"2025-01-01T00:00:00Z","product":"p","embedding":[1,2,3]}"#[..],
    )
    .unwrap(), &mut table)
    .unwrap();

    let previous_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut crashes = Vec::new();
    let (mut rejected, mut accepted) = (0usize, 0usize);
    for i in 0..10_000 {
        let kind = i % 4;
        let base: &[u8] = match kind {
            0 => &stores[i % stores.len()],
            1 => &tiffs[i % tiffs.len()],
            2 => sidecar,
            _ => &table,
        };
        let input = mutate(&mut rng, base);
        let result = catch_unwind(AssertUnwindSafe(|| match kind {
            0 => decode_store(&input).is_ok(),
            1 => parse_geotiff(&input).is_ok(),
            2 => std::str::from_utf8(&input)
                .ok()
                .and_then(|s| RawGridSidecar::from_json(s).ok())
                .is_some_and(|sc| parse_raw_grid(&[0u8; 24], &sc).is_ok()),
            _ => parse_patch_table(&input[..]).is_ok(),
        }));
        match result {
            Ok(true) => accepted += 1,
            Ok(false) => rejected += 1,
            Err(_) => crashes.push(i),
        }
    }
    std::panic::set_hook(previous_hook);
    ensure!(crashes.is_empty(), "{} mutations crashed, first at {:?}", crashes.len(), crashes.first());
    Ok(format!("200 round trips, 10000 mutations: {rejected} typed errors, {accepted} still valid, 0 crashes"))
}

fn geometry_numerics() -> Outcome {
    let mut worst = 0.0f64;
    for lat in -85..=85 {
        for lon in -180..=180 {
            let (x, y) = project_4326_to_3857(f64::from(lon), f64::from(lat)).map_err(|e| e.to_string())?;
            let (lon2, lat2) = project_3857_to_4326(x, y);
            worst = worst.max((lon2 - f64::from(lon)).abs()).max((lat2 - f64::from(lat)).abs());
        }
    }
    ensure!(worst < 1e-9, "mercator round trip error {worst:e} degrees");

    let mut rng = rng(7);
    let mut checked = 0;
    while checked < 1000 {
        let (w, h, dims) = (rng.gen_range(1..20u32), rng.gen_range(1..20u32), rng.gen_range(1..4u16));
        let res = rng.gen_range(0.5..50.0);
        let origin = (rng.gen_range(-1e5..1e5), rng.gen_range(-1e5..1e5));
        let north = f32_tile(origin, res, w, h, dims, 32633, TimeInterval::year(2020), |_, _| {
            (0..dims).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
        });
        // the same grid stored south-up: rows reversed, origin at the bottom edge
        let t = north.transform().to_array();
        let south_t = GeoTransform::from_array([t[0], t[1], t[2], t[3], -t[4], t[5] + t[4] * f64::from(h)]).unwrap();
        let row_len = north.data().len() / h as usize;
        let flipped: Vec<u8> = north.data().chunks_exact(row_len).rev().flatten().copied().collect();
        let mut header = north.header().clone();
        header.transform = south_t;
        let south = geodex::formats::RasterTile::new(header, flipped).unwrap();

        let normalized = normalize_orientation(south.clone()).map_err(|e| e.to_string())?;
        let again = normalize_orientation(normalized.clone()).map_err(|e| e.to_string())?;
        ensure!(again == normalized, "normalization is not idempotent");
        ensure!(normalized.transform().to_array()[4] < 0.0, "normalized tile is not north-up");
        for _ in 0..10 {
            let fx = rng.gen_range(0.01..0.99);
            let fy = rng.gen_range(0.01..0.99);
            let x = origin.0 + (rng.gen_range(0..w) as f64 + fx) * res;
            let y = origin.1 - (rng.gen_range(0..h) as f64 + fy) * res;
            let before = geodex::embed::pixel_vector_at(&south, x, y).map_err(|e| e.to_string())?;
            let after = geodex::embed::pixel_vector_at(&normalized, x, y).map_err(|e| e.to_string())?;
            let truth = geodex::embed::pixel_vector_at(&north, x, y).map_err(|e| e.to_string())?;
            ensure!(before == after && after == truth, "value at ({x}, {y}) changed");
            checked += 1;
        }
    }
    Ok(format!("mercator max error {worst:.1e} deg, {checked} orientation points"))
}

fn sampler_coverage() -> Outcome {
    let mut rng = rng(8);
    let per_axis = |extent_px: f64, s: u32, t: u32| -> usize {
        let s = f64::from(s);
        if extent_px <= s {
            1
        } else {
            ((extent_px - s) / f64::from(t)).ceil() as usize + 1
        }
    };
    let instances = 300;
    for case in 0..instances {
        let res = *[1.0, 2.5, 10.0, 30.0, 0.3].choose(&mut rng).unwrap();
        let size = rng.gen_range(1..300u32);
        let stride = rng.gen_range(1..=size);
        // whole-pixel extents most of the time, fractional ones otherwise
        let px = |rng: &mut StdRng| -> f64 {
            let n = rng.gen_range(1..2000) as f64;
            if rng.gen_bool(0.7) {
                n
            } else {
                n + rng.gen_range(0.1..0.9)
            }
        };
        let (wx, wy) = (px(&mut rng), px(&mut rng));
        let (x0, y0) = (rng.gen_range(-1e4..1e4f64).round() * res, rng.gen_range(-1e4..1e4f64).round() * res);
        let bounds = BoundingBox::new(x0, y0, x0 + wx * res, y0 + wy * res).unwrap();
        let patches = grid_samples(&bounds, res, size, stride).map_err(|e| format!("case {case}: {e}"))?;
        let expected = per_axis(wx, size, stride) * per_axis(wy, size, stride);
        ensure!(patches.len() == expected, "case {case}: {} patches, closed form {expected}", patches.len());
        // sorted by miny, only patches starting within one patch height below y can contain it
        let mut by_y = patches.clone();
        by_y.sort_by(|a, b| a.miny.total_cmp(&b.miny));
        let tallest = by_y.iter().map(|p| p.height()).fold(0.0, f64::max);
        for _ in 0..1000 {
            let x = rng.gen_range(bounds.minx..bounds.maxx);
            let y = rng.gen_range(bounds.miny..bounds.maxy);
            let lo = by_y.partition_point(|p| p.miny < y - tallest);
            let hi = by_y.partition_point(|p| p.miny <= y);
            ensure!(by_y[lo..hi].iter().any(|p| p.contains_point(x, y)), "case {case}: ({x}, {y}) is not covered");
        }
    }
    Ok(format!("{instances} instances, {} point checks", instances * 1000))
}
