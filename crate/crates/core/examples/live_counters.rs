//! Reads real PMU counters around a STREAM triad. Needs an aarch64 Linux
//! host with perf events enabled; elsewhere it reports why and exits.

use vecscope::collector::{live_available, BackendSelector, LiveOptions, RoiSession, Variant};
use vecscope::machine::{EventSet, MachineModel};
use vecscope::metrics::analyze_all;
use vecscope::workloads::{run_instrumented, KernelSpec, StreamOp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if let Err(e) = live_available() {
        eprintln!("live counters unavailable: {e}");
        return Ok(());
    }
    let spec = KernelSpec::Stream { n: 1 << 24, elen_bits: 64, op: StreamOp::Triad, threads: 1 };
    let mut kernel = spec.prepare()?;
    let mut session = RoiSession::configure(
        EventSet::standard(),
        BackendSelector::Live(LiveOptions::default()),
    )?;
    let run = run_instrumented(&mut kernel, Variant::Baseline, &mut session)?;
    for (name, v) in &run.record.counters {
        println!("{name:<20} {v}");
    }
    println!("wall time {} ns", run.record.wall_time_ns);

    let model = MachineModel::grace();
    if let Some(Ok(a)) = analyze_all(&[run.record], &model).into_iter().next().map(|g| g.result) {
        println!("ai_est {:?}  r_llc {:?}", a.ai_est_flop_per_byte, a.r_llc);
    }
    Ok(())
}
