use std::io::Write;

use super::{csv_field, json_line, CliError, ProductsArgs};
use crate::registry::{find_products, openness_report, provenance, ProductFilter};

pub(super) fn run(args: &ProductsArgs, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(name) = &args.provenance {
        return print_provenance(name, json, out);
    }
    let filter = ProductFilter {
        kind: args.kind.map(Into::into),
        min_year: args.year.or(args.min_year),
        max_year: args.year.or(args.max_year),
        license_prefix: args.license.clone(),
        max_resolution_m: args.max_resolution,
        global_only: args.global,
    };
    for p in find_products(&filter) {
        if json {
            json_line(out, p)?;
        } else {
            let cells: Vec<String> = p.table_row().iter().map(|c| csv_field(c)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

fn print_provenance(name: &str, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let rows = provenance(name)?;
    let report = openness_report(name)?;
    if json {
        for r in &rows {
            json_line(out, r)?;
        }
        return json_line(out, &report);
    }
    for r in &rows {
        writeln!(out, "product: {}", r.product)?;
        writeln!(out, "architecture: {}", r.architecture)?;
        writeln!(out, "training: {}", r.training_method)?;
        writeln!(out, "training_data: {}", r.training_data.join("; "))?;
        writeln!(out, "inference_data: {}", r.inference_data.join("; "))?;
        writeln!(out, "code: {}", r.code_license)?;
        writeln!(out, "weights: {}", r.weights_license)?;
        writeln!(out, "data: {}", r.data_licenses.join("; "))?;
        writeln!(out)?;
    }
    writeln!(out, "fully_open: {}", report.fully_open)?;
    writeln!(out, "blockers: {}", report.blockers.join("; "))?;
    Ok(())
}
