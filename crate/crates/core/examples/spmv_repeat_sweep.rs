//! Sweeps the SpMV repeat factor and shows how intensity, the modeled
//! counters and the resulting class move with it.
//!
//! Each point is measured through the synthetic backend, which scripts the
//! counters from the kernel's cost model while the real kernel runs.

use vecscope::classifier::{classify_groups, ClassifierConfig};
use vecscope::collector::{BackendSelector, RoiSession, Variant};
use vecscope::machine::{EventSet, MachineModel};
use vecscope::metrics::analyze_all;
use vecscope::workloads::{
    run_instrumented, spmv_model_ai, KernelSpec, MatrixPattern, MatrixSource, SpmvParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = MachineModel::grace();
    let matrix = MatrixSource::Generated {
        n: 2000,
        pattern: MatrixPattern::Random { density: 0.01, seed: 42 },
    };

    let mut records = Vec::new();
    for repeat in [1, 2, 5, 10, 20, 40] {
        let spec = KernelSpec::Spmv {
            matrix: matrix.clone(),
            params: SpmvParams { repeat, ..SpmvParams::default() },
        };
        let mut kernel = spec.prepare()?;
        for variant in Variant::ALL {
            let script = kernel.profile(variant, &model)?.script();
            let mut session =
                RoiSession::configure(EventSet::standard(), BackendSelector::Synthetic(script))?;
            records.push(run_instrumented(&mut kernel, variant, &mut session)?.record);
        }
        println!("repeat {repeat:>2}: model AI {:.3} FLOP/B", spmv_model_ai(repeat, 64));
    }

    let groups = analyze_all(&records, &model);
    let table = classify_groups(&groups, &model, &ClassifierConfig::default());
    println!();
    print!("{}", table.to_text());
    Ok(())
}
