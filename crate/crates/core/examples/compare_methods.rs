//! Kernelized synergies against per-object PCA and an appended-correction
//! basis on the synthetic benchmark, as CSV and SVG.
//!
//!     cargo run --release --example compare_methods [-- OUT_DIR]

use kinsyn::demos::{benchmark_dataset, DatasetSpec};
use kinsyn::evaluation::compare::{report_csv, report_svg};
use kinsyn::evaluation::{compare_methods, CompareOptions, Method};
use kinsyn::hand::HandModel;

fn main() -> kinsyn::Result<()> {
    let hand = HandModel::default_model();
    let data = benchmark_dataset(&hand.nominal(), &DatasetSpec::default(), 0);
    let reports = compare_methods(&data, &Method::ALL, &[2, 3, 4, 5, 6], &CompareOptions::default())?;
    print!("{}", report_csv(&reports));
    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::Path::new(&dir);
        kinsyn::io::write_text(dir.join("report.csv"), &report_csv(&reports))?;
        kinsyn::io::write_text(dir.join("report.svg"), &report_svg(&reports))?;
    }
    Ok(())
}
