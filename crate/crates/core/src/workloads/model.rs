//! First-order counter model for the calibration kernels.
//!
//! Scalar code issues one instruction per load, store and FP operation plus
//! loop overhead. Vector code divides the per-element work by the number of
//! lanes. Advanced SIMD has no gather, so SpMV stays scalar under it. Misses
//! count streamed read bytes in whole cache lines (the dense `x` vector is
//! assumed LLC resident). Wall time is the slowest of compute, memory and
//! issue limits from the machine model.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{CsrMatrix, Element, SpmvParams, StreamOp, WorkloadError};
use crate::collector::{SyntheticScript, Variant};
use crate::machine::events::{CPU_CYCLES, INST_RETIRED, LL_CACHE_MISS_RD, MEM_ACCESS_RD, STALL_BACKEND, VFP_SPEC};
use crate::machine::MachineModel;

/// FP operations per stored nonzero: one multiply and one add per repetition.
pub fn spmv_fp_ops_per_nonzero(repeat: u32) -> u64 {
    2 * u64::from(repeat)
}

/// Streamed bytes per nonzero: the value plus a 32-bit column index.
pub fn spmv_bytes_per_nonzero(elen_bits: u32) -> u64 {
    u64::from(elen_bits) / 8 + 4
}

/// Asymptotic FLOP/byte of the SpMV kernel for long rows.
pub fn spmv_model_ai(repeat: u32, elen_bits: u32) -> f64 {
    spmv_fp_ops_per_nonzero(repeat) as f64 / spmv_bytes_per_nonzero(elen_bits) as f64
}

/// Predicted counts for one kernel invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelProfile {
    pub fp_ops: u64,
    pub bytes: u64,
    pub instructions: u64,
    pub vfp_spec: u64,
    pub llc_read_misses: u64,
    pub mem_access_rd: u64,
    pub cycles: u64,
    pub stall_backend: u64,
    pub wall_time_ns: u64,
}

/// Lanes the variant actually uses for this kernel.
fn lanes(model: &MachineModel, elen_bits: u32, variant: Variant, gathers: bool) -> Result<u64, WorkloadError> {
    let vlen = match variant {
        Variant::Baseline => return Ok(1),
        Variant::Asimd if gathers => return Ok(1),
        Variant::Asimd => 128,
        Variant::Sve => model.vlen_bits,
    };
    if elen_bits == 0 || elen_bits > vlen {
        return Err(WorkloadError::InvalidArgument(format!(
            "{elen_bits}-bit elements do not fit a {vlen}-bit vector"
        )));
    }
    Ok(u64::from(vlen / elen_bits))
}

struct Raw {
    fp_ops: u64,
    bytes: u64,
    read_bytes: u64,
    instructions: u64,
    vfp_spec: u64,
    mem_access_rd: u64,
    lanes: u64,
}

fn finish(raw: Raw, model: &MachineModel, threads: u32) -> Result<KernelProfile, WorkloadError> {
    let invalid = |e: crate::machine::MachineError| WorkloadError::InvalidArgument(e.to_string());
    let peak = model.peak_scalar_flops(threads).map_err(invalid)?;
    let bandwidth = model.bandwidth_at(threads).map_err(invalid)?;
    let t = f64::from(threads);
    let freq_hz = model.freq_mhz * 1e6;
    let compute_s = raw.fp_ops as f64 / (peak * 1e9 * raw.lanes as f64);
    let memory_s = raw.bytes as f64 / (bandwidth * 1e9);
    let issue_s = raw.instructions as f64 / (freq_hz * t * f64::from(model.fpu_pipelines));
    let wall_s = compute_s.max(memory_s).max(issue_s);
    let cycles = ((wall_s * freq_hz * t).round() as u64).max(1);
    let line = u64::from(model.cache_line_bytes);
    let misses = match raw.read_bytes {
        0 => 0,
        b => (b / line).max(1),
    };
    Ok(KernelProfile {
        fp_ops: raw.fp_ops,
        bytes: raw.bytes,
        instructions: raw.instructions,
        vfp_spec: raw.vfp_spec,
        llc_read_misses: misses,
        mem_access_rd: raw.mem_access_rd.max(misses),
        cycles,
        stall_backend: cycles.saturating_sub(raw.instructions / u64::from(model.fpu_pipelines)),
        wall_time_ns: ((wall_s * 1e9).round() as u64).max(1),
    })
}

impl KernelProfile {
    pub fn spmv<T: Element>(
        a: &CsrMatrix<T>,
        params: SpmvParams,
        variant: Variant,
        model: &MachineModel,
    ) -> Result<Self, WorkloadError> {
        params.validate()?;
        let lanes = lanes(model, params.elen_bits, variant, true)?;
        let repeat = u64::from(params.repeat);
        let eb = u64::from(params.elen_bits) / 8;
        let (nnz, rows, cols) = (a.nnz() as u64, a.n_rows() as u64, a.n_cols() as u64);
        // Vector iterations: each row is strip-mined separately.
        let iters: u64 = a
            .row_ptr()
            .windows(2)
            .map(|w| (w[1] - w[0]) as u64)
            .map(|len| len.div_ceil(lanes))
            .sum();
        let row_overhead = if lanes > 1 { 8 } else { 6 };
        let raw = Raw {
            fp_ops: spmv_fp_ops_per_nonzero(params.repeat) * nnz,
            read_bytes: nnz * spmv_bytes_per_nonzero(params.elen_bits) + rows * 8 + cols * eb,
            bytes: nnz * spmv_bytes_per_nonzero(params.elen_bits) + rows * (8 + eb) + cols * eb,
            instructions: iters * (4 * repeat + 2) + rows * row_overhead,
            vfp_spec: iters * 2 * repeat,
            mem_access_rd: iters * 3 * repeat + rows,
            lanes,
        };
        finish(raw, model, params.threads)
    }

    pub fn stream(
        n: usize,
        elen_bits: u32,
        op: StreamOp,
        threads: u32,
        variant: Variant,
        model: &MachineModel,
    ) -> Result<Self, WorkloadError> {
        let lanes = lanes(model, elen_bits, variant, false)?;
        let n = n as u64;
        let eb = u64::from(elen_bits) / 8;
        let iters = n.div_ceil(lanes);
        let (flops_per, body) = match op {
            StreamOp::Copy => (0, 4),
            StreamOp::Triad => (2, 6),
        };
        let raw = Raw {
            fp_ops: flops_per * n,
            bytes: op.arrays() * n * eb,
            read_bytes: (op.arrays() - 1) * n * eb,
            instructions: iters * body + 8,
            vfp_spec: iters * flops_per,
            mem_access_rd: iters * (op.arrays() - 1),
            lanes,
        };
        finish(raw, model, threads)
    }

    /// Counts under the standard six-event group.
    pub fn counters(&self) -> BTreeMap<String, u64> {
        [
            (INST_RETIRED, self.instructions),
            (LL_CACHE_MISS_RD, self.llc_read_misses),
            (MEM_ACCESS_RD, self.mem_access_rd),
            (STALL_BACKEND, self.stall_backend),
            (CPU_CYCLES, self.cycles),
            (VFP_SPEC, self.vfp_spec),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Single-window script replaying this profile per unit of work.
    pub fn script(&self) -> SyntheticScript {
        SyntheticScript::constant(self.counters(), self.wall_time_ns)
    }
}
