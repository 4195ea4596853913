//! Brackets a region of interest with start/stop calls and reads the
//! accumulated counters back as a measurement record.
//!
//! Uses the synthetic backend so it runs anywhere. Pass `live` as the first
//! argument to use hardware counters on an Arm host.

use vecscope::collector::{
    configure_measure, to_document, BackendSelector, LiveOptions, RecordMeta, SyntheticScript,
    Variant,
};
use vecscope::machine::events;

fn work(n: usize) -> f64 {
    (0..n).map(|i| (i as f64).sqrt()).sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let backend = if std::env::args().nth(1).as_deref() == Some("live") {
        BackendSelector::Live(LiveOptions::default())
    } else {
        BackendSelector::Synthetic(SyntheticScript::from_pairs(
            &[("INST_RETIRED", 4_000), ("CPU_CYCLES", 2_500), ("VFP_SPEC", 1_000)],
            250_000,
        ))
    };
    let set = [
        events::by_name("INST_RETIRED").unwrap(),
        events::by_name("CPU_CYCLES").unwrap(),
        events::by_name("VFP_SPEC").unwrap(),
    ];
    let mut session = configure_measure(&set, backend)?.with_meta(RecordMeta {
        kernel_name: "sqrt_sum".into(),
        variant: Variant::Baseline,
        repetitions: 3,
        ..RecordMeta::default()
    });

    let mut acc = 0.0;
    for window in 0..3 {
        // Setup outside the ROI is not counted.
        let n = 1000 * (window + 1);
        session.start_measure()?;
        acc += work(n);
        session.stop_measure()?;
        let w = session.last_window().unwrap();
        println!("window {window}: {:?} in {} ns", w.counters, w.wall_time_ns);
    }
    let record = session.read_results()?;
    print!("{}", to_document(&[record]));
    eprintln!("checksum {acc:.3}");
    Ok(())
}
