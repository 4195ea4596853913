use std::path::PathBuf;

use super::stream::{AnyStream, DEFAULT_SCALAR};
use super::{
    generate_matrix, read_matrix_market_file, spmv_kernel, CsrMatrix, KernelProfile, MatrixPattern,
    SpmvParams, StreamOp, WorkloadError,
};
use crate::collector::{BackendKind, MeasurementRecord, RecordMeta, RoiSession, Variant};
use crate::machine::MachineModel;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Generated { n: usize, pattern: MatrixPattern },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Spmv { matrix: MatrixSource, params: SpmvParams },
    Stream { n: usize, elen_bits: u32, op: StreamOp, threads: u32 },
}

impl KernelSpec {
    /// Name stamped on records: `spmv_r{repeat}` or `stream_{op}`.
    pub fn name(&self) -> String {
        match self {
            KernelSpec::Spmv { params, .. } => format!("spmv_r{}", params.repeat),
            KernelSpec::Stream { op, .. } => format!("stream_{op}"),
        }
    }

    pub fn elen_bits(&self) -> u32 {
        match self {
            KernelSpec::Spmv { params, .. } => params.elen_bits,
            KernelSpec::Stream { elen_bits, .. } => *elen_bits,
        }
    }

    pub fn threads(&self) -> u32 {
        match self {
            KernelSpec::Spmv { params, .. } => params.threads,
            KernelSpec::Stream { threads, .. } => *threads,
        }
    }

    pub fn with_threads(&self, threads: u32) -> Self {
        let mut s = self.clone();
        match &mut s {
            KernelSpec::Spmv { params, .. } => params.threads = threads,
            KernelSpec::Stream { threads: t, .. } => *t = threads,
        }
        s
    }

    /// Allocates and initializes the kernel's data.
    pub fn prepare(&self) -> Result<PreparedKernel, WorkloadError> {
        let data = match self {
            KernelSpec::Spmv { matrix, params } => {
                params.validate()?;
                let a = match matrix {
                    MatrixSource::Generated { n, pattern } => generate_matrix(*n, *pattern)?,
                    MatrixSource::File(p) => read_matrix_market_file(p)?,
                };
                let x: Vec<f64> = (0..a.n_cols()).map(|j| 0.5 + (j % 7) as f64 * 0.125).collect();
                match params.elen_bits {
                    64 => Data::Spmv64 { a, x },
                    _ => Data::Spmv32 {
                        a: a.convert(),
                        x: x.iter().map(|v| *v as f32).collect(),
                    },
                }
            }
            KernelSpec::Stream { n, elen_bits, threads, .. } => {
                if *threads == 0 {
                    return Err(WorkloadError::InvalidArgument("threads must be >= 1".into()));
                }
                Data::Stream(AnyStream::new(*n, *elen_bits, DEFAULT_SCALAR)?)
            }
        };
        Ok(PreparedKernel {
            spec: self.clone(),
            data,
        })
    }
}

enum Data {
    Spmv64 { a: CsrMatrix<f64>, x: Vec<f64> },
    Spmv32 { a: CsrMatrix<f32>, x: Vec<f32> },
    Stream(AnyStream),
}

/// A kernel with its inputs already built, ready to run inside an ROI.
pub struct PreparedKernel {
    spec: KernelSpec,
    data: Data,
}

impl PreparedKernel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn name(&self) -> String {
        self.spec.name()
    }

    /// Runs the kernel once and returns the sum of its output.
    pub fn run_once(&mut self) -> Result<f64, WorkloadError> {
        match (&mut self.data, &self.spec) {
            (Data::Spmv64 { a, x }, KernelSpec::Spmv { params, .. }) => {
                Ok(spmv_kernel(a, x, *params)?.iter().sum())
            }
            (Data::Spmv32 { a, x }, KernelSpec::Spmv { params, .. }) => {
                Ok(spmv_kernel(a, x, *params)?.iter().map(|v| f64::from(*v)).sum())
            }
            (Data::Stream(s), KernelSpec::Stream { op, threads, .. }) => Ok(s.run(*op, *threads)),
            _ => unreachable!("data built from spec"),
        }
    }

    /// Modelled counts of one invocation under `variant`.
    pub fn profile(&self, variant: Variant, model: &MachineModel) -> Result<KernelProfile, WorkloadError> {
        match (&self.data, &self.spec) {
            (Data::Spmv64 { a, .. }, KernelSpec::Spmv { params, .. }) => {
                KernelProfile::spmv(a, *params, variant, model)
            }
            (Data::Spmv32 { a, .. }, KernelSpec::Spmv { params, .. }) => {
                KernelProfile::spmv(a, *params, variant, model)
            }
            (Data::Stream(s), KernelSpec::Stream { elen_bits, op, threads, .. }) => {
                KernelProfile::stream(s.len(), *elen_bits, *op, *threads, variant, model)
            }
            _ => unreachable!("data built from spec"),
        }
    }

    pub fn meta(&self, variant: Variant, repetitions: u64) -> RecordMeta {
        RecordMeta {
            kernel_name: self.name(),
            variant,
            threads: self.spec.threads(),
            elen_bits: self.spec.elen_bits(),
            repetitions,
        }
    }

    /// One start/stop window covering `inner_reps` invocations.
    ///
    /// Under the synthetic backend time is simulated: the kernel runs once
    /// for its checksum and the scripted counts are scaled by `inner_reps`.
    pub fn measure_window(&mut self, session: &mut RoiSession, inner_reps: u64) -> Result<f64, WorkloadError> {
        let runs = match session.backend_kind() {
            BackendKind::Synthetic => 1,
            _ => inner_reps.max(1),
        };
        session.start_measure()?;
        let mut checksum = 0.0;
        for _ in 0..runs {
            checksum = self.run_once()?;
        }
        session.mark_work(inner_reps.max(1));
        session.stop_measure()?;
        Ok(checksum)
    }
}

impl AnyStream {
    pub(crate) fn len(&self) -> usize {
        match self {
            AnyStream::F64(s) => s.len(),
            AnyStream::F32(s) => s.len(),
            #[cfg(feature = "fp16")]
            AnyStream::F16(s) => s.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentedRun {
    pub record: MeasurementRecord,
    pub checksum: f64,
}

/// Runs `kernel` once inside the session's ROI and returns its record.
/// Data preparation happens before the call and is not counted.
pub fn run_instrumented(
    kernel: &mut PreparedKernel,
    variant: Variant,
    session: &mut RoiSession,
) -> Result<InstrumentedRun, WorkloadError> {
    session.set_meta(kernel.meta(variant, 1));
    let checksum = kernel.measure_window(session, 1)?;
    let record = session.read_results()?;
    Ok(InstrumentedRun { record, checksum })
}
