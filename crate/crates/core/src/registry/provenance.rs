use std::fmt;

use serde::{Serialize, Serializer};

use super::atlas::require;
use super::RegistryError;

/// A license, or the absence of a public release.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terms {
    Licensed(&'static str),
    ClosedSource,
}

impl Terms {
    /// Closed or non-commercial terms block calling a model open source.
    pub fn is_restricted(&self) -> bool {
        match self {
            Terms::ClosedSource => true,
            Terms::Licensed(l) => l.contains("-NC"),
        }
    }
}

impl fmt::Display for Terms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terms::Licensed(l) => f.write_str(l),
            Terms::ClosedSource => f.write_str("ClosedSource"),
        }
    }
}

impl Serialize for Terms {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// How one set of embeddings was produced: model, pre-training, data and the
/// licenses covering each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvenanceRecord {
    pub product: &'static str,
    pub architecture: &'static str,
    pub training_method: &'static str,
    pub training_data: &'static [&'static str],
    pub inference_data: &'static [&'static str],
    pub code_license: Terms,
    pub weights_license: Terms,
    pub data_licenses: &'static [&'static str],
}

use Terms::{ClosedSource, Licensed};

const APACHE: Terms = Licensed("Apache-2.0");
const CC_BY: Terms = Licensed("CC-BY-4.0");
const MIT: Terms = Licensed("MIT");

#[allow(clippy::too_many_arguments)]
const fn row(
    product: &'static str,
    architecture: &'static str,
    training_method: &'static str,
    training_data: &'static [&'static str],
    inference_data: &'static [&'static str],
    code_license: Terms,
    weights_license: Terms,
    data_licenses: &'static [&'static str],
) -> ProvenanceRecord {
    ProvenanceRecord {
        product,
        architecture,
        training_method,
        training_data,
        inference_data,
        code_license,
        weights_license,
        data_licenses,
    }
}

const MAJOR_TOM: &str = "Major TOM Embeddings";
const S2: &[&str] = &["Sentinel 2"];
const S2_RGB: &[&str] = &["Sentinel 2 (RGB)"];
const CC_BY_SA: &[&str] = &["CC-BY-SA-4.0"];

static PROVENANCE: [ProvenanceRecord; 13] = [
    row(
        "Clay Embeddings",
        "Clay",
        "MAE",
        &["Landsat 8/9", "NAIP", "MODIS", "Sentinel 2", "LINZ"],
        S2,
        APACHE,
        APACHE,
        &["public domain", "Copern. T&C", "CC-BY-4.0"],
    ),
    row(MAJOR_TOM, "ResNet-50", "DINO", S2, S2, APACHE, CC_BY, CC_BY_SA),
    row(MAJOR_TOM, "ResNet-50", "MoCo v2", &["Sentinel 1"], &["Sentinel 1"], APACHE, CC_BY, CC_BY_SA),
    row(MAJOR_TOM, "DINOv2-B", "DINOv2", S2_RGB, S2_RGB, APACHE, APACHE, CC_BY_SA),
    row(MAJOR_TOM, "ViT-SO400M", "SigLIP", &["WebLI"], S2_RGB, APACHE, APACHE, CC_BY_SA),
    row(MAJOR_TOM, "ResNet-50", "DeCUR", &["Sentinel 1/2"], S2, APACHE, APACHE, CC_BY_SA),
    row(MAJOR_TOM, "ResNet-50", "DeCUR", &["Sentinel 1/2"], S2, APACHE, APACHE, CC_BY_SA),
    row(MAJOR_TOM, "ConvNeXt v2", "MP-MAE", &["MMEarth"], S2, MIT, Licensed("CC-BY-NC-4.0"), CC_BY_SA),
    row("Earth Index Embeddings", "DINOv2-S", "SoftCon", S2, S2, APACHE, CC_BY, &["CC-BY-4.0"]),
    row(
        "Copernicus-Embed",
        "Copernicus-FM",
        "MAE, Distillation",
        &["Sentinel 1/2/3/5P", "Copernicus DEM"],
        &["Sentinel 1/2/3/5P", "Copernicus DEM"],
        APACHE,
        CC_BY,
        &["CC-BY-4.0"],
    ),
    row(
        "Presto Embeddings",
        "Presto",
        "MAE",
        &["Sentinel 1/2", "ERA5", "Dynamic World"],
        &["Sentinel 1/2", "ERA5", "SRTM"],
        MIT,
        MIT,
        &["Copern. T&C", "CC-BY-4.0"],
    ),
    row(
        "Tessera Embeddings",
        "Tessera",
        "Barlow Twins",
        &["Sentinel 1/2"],
        &["Sentinel 1/2"],
        MIT,
        ClosedSource,
        &["CC-BY-4.0"],
    ),
    row(
        "Google Satellite Embedding",
        "AlphaEarth Foundations",
        "Contrastive, MAE, Distillation",
        &[
            "Sentinel",
            "Copern. DEM",
            "ERA5",
            "Landsat",
            "GEDI",
            "GRACE",
            "NLCD",
            "ALOS PALSAR ScanSAR",
            "Wikipedia articles",
            "GBIF",
        ],
        &["Sentinel 1/2", "Landsat 8/9"],
        ClosedSource,
        ClosedSource,
        &["Copern. T&C", "public domain", "JAXA ToS", "CC-BY-SA-4.0", "CC-BY-4.0"],
    ),
];

/// Every provenance row for a product, in published order.
pub fn provenance(product_name: &str) -> Result<Vec<&'static ProvenanceRecord>, RegistryError> {
    let p = require(product_name)?;
    Ok(PROVENANCE.iter().filter(|r| r.product == p.name).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpennessReport {
    pub fully_open: bool,
    /// One entry per closed or non-commercial code/weights license, e.g.
    /// `"weights CC-BY-NC-4.0 (ConvNeXt v2 row)"`.
    pub blockers: Vec<String>,
}

pub fn openness_report(product_name: &str) -> Result<OpennessReport, RegistryError> {
    let rows = provenance(product_name)?;
    let multi = rows.len() > 1;
    let mut blockers = Vec::new();
    for r in &rows {
        for (field, terms) in [("code", r.code_license), ("weights", r.weights_license)] {
            if terms.is_restricted() {
                let mut b = format!("{field} {terms}");
                if multi {
                    b.push_str(&format!(" ({} row)", r.architecture));
                }
                blockers.push(b);
            }
        }
    }
    Ok(OpennessReport { fully_open: blockers.is_empty(), blockers })
}
