//! Renders the roofline for the bundled case fixture to an SVG file and
//! prints the CSV dataset.
//!
//! cargo run --example roofline_svg -- [threads] [out.svg]

use vecscope::collector::load_measurements;
use vecscope::machine::MachineModel;
use vecscope::metrics::analyze_all;
use vecscope::roofline::{render_csv, render_svg, roofline_dataset, RooflineConfig};

const CASES: &str = include_str!("../tests/fixtures/suite_cases.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let threads: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let out = args.next().unwrap_or_else(|| "roofline.svg".into());

    let model = MachineModel::grace();
    let records = load_measurements(CASES)?;
    let analyses: Vec<_> = analyze_all(&records, &model)
        .into_iter()
        .filter_map(|g| g.result.ok())
        .filter(|a| a.threads == threads)
        .collect();

    let config = RooflineConfig::new(model, 64, threads)?;
    let dataset = roofline_dataset(&config, &analyses, true)?;
    print!("{}", render_csv(&dataset));
    std::fs::write(&out, render_svg(&dataset))?;
    eprintln!("wrote {out}");
    Ok(())
}
