use geodex::registry::{builtin_products, find_products, openness_report, provenance, ProductFilter, ProductKind, Terms};

fn rows(name: &str) -> Vec<Vec<String>> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split('\t').map(str::to_owned).collect())
        .collect()
}

#[test]
fn product_table_matches_golden() {
    let golden = rows("table1.tsv");
    let products = builtin_products();
    assert_eq!(products.len(), golden.len());
    for (p, g) in products.iter().zip(&golden) {
        assert_eq!(p.table_row().to_vec(), *g);
    }
}

#[test]
fn provenance_matches_golden() {
    let golden = rows("table2.tsv");
    let all: Vec<_> = builtin_products().iter().flat_map(|p| provenance(p.name).unwrap()).collect();
    assert_eq!(all.len(), golden.len());
    for (r, g) in all.iter().zip(&golden) {
        let got = vec![
            r.product.to_string(),
            r.architecture.to_string(),
            r.training_method.to_string(),
            r.training_data.join("; "),
            r.inference_data.join("; "),
            r.code_license.to_string(),
            r.weights_license.to_string(),
            r.data_licenses.join("; "),
        ];
        assert_eq!(got, *g);
    }
}

#[test]
fn closed_and_noncommercial_highlights() {
    let restricted: Vec<(String, &str)> = builtin_products()
        .iter()
        .flat_map(|p| provenance(p.name).unwrap())
        .flat_map(|r| {
            [("code", r.code_license), ("weights", r.weights_license)]
                .into_iter()
                .filter(|(_, t)| t.is_restricted())
                .map(move |(f, _)| (format!("{} / {}", r.product, r.architecture), f))
        })
        .collect();
    assert_eq!(
        restricted,
        [
            ("Major TOM Embeddings / ConvNeXt v2".to_string(), "weights"),
            ("Tessera Embeddings / Tessera".to_string(), "weights"),
            ("Google Satellite Embedding / AlphaEarth Foundations".to_string(), "code"),
            ("Google Satellite Embedding / AlphaEarth Foundations".to_string(), "weights"),
        ]
    );
    assert_eq!(provenance("Tessera Embeddings").unwrap()[0].weights_license, Terms::ClosedSource);
    assert!(openness_report("Earth Index Embeddings").unwrap().fully_open);
}

#[test]
fn kinds_partition_the_table() {
    let names = |k| {
        find_products(&ProductFilter { kind: Some(k), ..Default::default() }).iter().map(|p| p.name).collect::<Vec<_>>()
    };
    assert_eq!(names(ProductKind::Patch), ["Clay Embeddings", "Major TOM Embeddings", "Earth Index Embeddings", "Copernicus-Embed"]);
    assert_eq!(names(ProductKind::Pixel), ["Presto Embeddings", "Tessera Embeddings", "Google Satellite Embedding"]);
    assert!(names(ProductKind::Location).is_empty());
}

#[test]
fn non_float_storage_carries_dequantization() {
    for p in builtin_products() {
        assert_eq!(p.storage_dtype != geodex::formats::Dtype::F32, !p.dequant.is_identity(), "{}", p.name);
    }
}
