//! Runs STREAM copy and triad at each supported element width, checks the
//! checksum against the closed form, and prints the vector bound per width.

use vecscope::machine::MachineModel;
use vecscope::metrics::vectorization_bound;
use vecscope::workloads::{stream_kernel, StreamOp, WorkloadError};

fn expected(n: usize, op: StreamOp) -> f64 {
    (0..n)
        .map(|i| match op {
            StreamOp::Copy => (i % 8 + 1) as f64,
            StreamOp::Triad => (i % 5 + 1) as f64 + 3.0 * (i % 3 + 1) as f64,
        })
        .sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = MachineModel::grace();
    let n = 1 << 16;
    for elen in [64, 32, 16] {
        let vb = vectorization_bound(model.vlen_bits, elen)?;
        for op in [StreamOp::Copy, StreamOp::Triad] {
            match stream_kernel(n, elen, op) {
                Ok(r) => {
                    let ok = r.checksum == expected(n, op);
                    println!(
                        "fp{elen:<2} {:<5} VB {vb:<2} {:>8} bytes  checksum {} {}",
                        op.as_str(),
                        r.bytes,
                        r.checksum,
                        if ok { "ok" } else { "MISMATCH" }
                    );
                }
                Err(WorkloadError::Unsupported(why)) => {
                    println!("fp{elen:<2} {:<5} skipped: {why}", op.as_str());
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}
