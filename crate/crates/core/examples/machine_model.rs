//! Prints the built-in machine model, its bandwidth curve and the ridge
//! points it implies for each element width.
//!
//! cargo run --example machine_model [-- path/to/machine.json]

use vecscope::machine::MachineModel;
use vecscope::metrics::vectorization_bound;
use vecscope::roofline::RooflineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = match std::env::args().nth(1) {
        Some(path) => MachineModel::resolve(&path)?,
        None => MachineModel::grace(),
    };
    println!("{}", model.to_json());
    println!("bandwidth saturates at {:.1} threads", model.saturation_threads());

    println!("\nthreads  GB/s    scalar GFLOP/s");
    for t in [1, 2, 4, 8, 9, 16, 32, model.max_threads] {
        println!(
            "{t:>7}  {:>6.1}  {:>8.2}",
            model.bandwidth_at(t)?,
            model.peak_scalar_flops(t)?
        );
    }

    println!("\nelen  VB   IRR@1   IRV@1   IRR@max IRV@max");
    for elen in [16, 32, 64] {
        let one = RooflineConfig::new(model.clone(), elen, 1)?;
        let max = RooflineConfig::new(model.clone(), elen, model.max_threads)?;
        println!(
            "{elen:>4}  {:<3}  {:<6.3}  {:<6.3}  {:<7.3} {:.3}",
            vectorization_bound(model.vlen_bits, elen)?,
            one.inflection_scalar(),
            one.inflection_vector(),
            max.inflection_scalar(),
            max.inflection_vector()
        );
    }
    Ok(())
}
