//! Calibration kernels: CSR SpMV with a compute-repeat knob, STREAM copy and
//! triad, a seeded sparse matrix generator and an analytic cost model used to
//! script the synthetic backend.

mod csr;
mod instrument;
mod model;
mod mtx;
mod spmv;
mod stream;

use std::ops::{Add, Mul};

use thiserror::Error;

use crate::collector::CollectorError;

pub use csr::{generate_matrix, CsrMatrix, MatrixPattern};
pub use instrument::{run_instrumented, InstrumentedRun, KernelSpec, MatrixSource, PreparedKernel};
pub use model::{spmv_model_ai, spmv_fp_ops_per_nonzero, KernelProfile};
pub use mtx::{read_matrix_market, read_matrix_market_file, write_matrix_market};
pub use spmv::{dense_oracle, spmv_kernel, SpmvParams};
pub use stream::{stream_kernel, StreamArrays, StreamOp, StreamResult};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid CSR matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix market line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cannot allocate {0}")]
    Resource(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Collector(#[from] CollectorError),
}

/// Floating-point element usable by the kernels.
pub trait Element:
    Copy + Default + Send + Sync + PartialEq + Add<Output = Self> + Mul<Output = Self> + 'static
{
    const BITS: u32;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Element for f64 {
    const BITS: u32 = 64;
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Element for f32 {
    const BITS: u32 = 32;
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

#[cfg(feature = "fp16")]
impl Element for half::f16 {
    const BITS: u32 = 16;
    fn from_f64(v: f64) -> Self {
        half::f16::from_f64(v)
    }
    fn to_f64(self) -> f64 {
        half::f16::to_f64(self)
    }
}

/// Whether this build carries half-precision kernels.
pub const FP16_SUPPORTED: bool = cfg!(feature = "fp16");

/// Splits `0..len` into at most `parts` contiguous, near-equal ranges.
pub(crate) fn partition(len: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.clamp(1, len.max(1));
    let base = len / parts;
    let extra = len % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let end = start + base + usize::from(p < extra);
        out.push(start..end);
        start = end;
    }
    out
}
