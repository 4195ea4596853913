//! Classifies the bundled 13-application case set at 1 and 72 threads and
//! prints the class grid, then shows the effect of a stricter r_llc cut.

use vecscope::classifier::{classify_groups, ClassifierConfig, RllcThreshold};
use vecscope::collector::load_measurements;
use vecscope::machine::MachineModel;
use vecscope::metrics::analyze_all;

const CASES: &str = include_str!("../tests/fixtures/suite_cases.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = MachineModel::grace();
    let groups = analyze_all(&load_measurements(CASES)?, &model);

    let table = classify_groups(&groups, &model, &ClassifierConfig::default());
    print!("{}", table.to_grid());

    for c in table.classified().filter(|c| !c.warnings.is_empty()) {
        println!("{}@{}: {}", c.kernel_name, c.threads, c.warnings.join("; "));
    }

    let strict = ClassifierConfig {
        rllc_threshold: RllcThreshold::Fixed(0.1),
        ..ClassifierConfig::default()
    };
    let other = classify_groups(&groups, &model, &strict);
    println!("\nwith r_llc cut 0.1:");
    for (a, b) in table.classified().zip(other.classified()) {
        if a.label != b.label {
            println!("  {}@{}: {} -> {}", a.kernel_name, a.threads, a.label, b.label);
        }
    }
    Ok(())
}
