//! Shows how the ridge points move with thread count and how a fixed
//! intensity changes region once bandwidth saturates.

use vecscope::machine::MachineModel;
use vecscope::metrics::Intensity;
use vecscope::roofline::RooflineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = MachineModel::grace();
    let ai = Intensity::Finite(1.5);
    println!("threads  IRR     IRV      region@1.5");
    for t in [1, 2, 4, 8, 16, 36, 72] {
        let cfg = RooflineConfig::new(model.clone(), 64, t)?;
        println!(
            "{t:>7}  {:<6.3}  {:<7.3}  {}",
            cfg.inflection_scalar(),
            cfg.inflection_vector(),
            cfg.region(ai).as_str()
        );
    }
    Ok(())
}
