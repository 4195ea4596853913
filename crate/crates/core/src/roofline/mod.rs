//! Roofline model with a vector-aware compute roof.
//!
//! The scalar roof is the non-vectorized peak; the vector roof scales it by
//! the vectorization bound `vlen / elen`. Their ridge points split the
//! intensity axis into three regions:
//!
//! * `memory_bound`: `ai < AI_IRR`
//! * `transition`: `AI_IRR <= ai < AI_IRV`, compute-bound for the scalar code
//!   but memory-bound once vectorized
//! * `compute_bound`: `ai >= AI_IRV`

pub mod plot;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{MachineError, MachineModel};
use crate::metrics::{self, Intensity, KernelAnalysis, MetricsError};

pub use plot::{render_csv, render_svg};

#[derive(Debug, Error)]
pub enum RooflineError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    MemoryBound,
    Transition,
    ComputeBound,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::MemoryBound => "memory_bound",
            Region::Transition => "transition",
            Region::ComputeBound => "compute_bound",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Machine plus the element width and thread count the roofs are drawn for.
#[derive(Debug, Clone, PartialEq)]
pub struct RooflineConfig {
    model: MachineModel,
    elen_bits: u32,
    threads: u32,
}

impl RooflineConfig {
    pub fn new(model: MachineModel, elen_bits: u32, threads: u32) -> Result<Self, RooflineError> {
        model.validate()?;
        model.check_threads(threads)?;
        metrics::vectorization_bound(model.vlen_bits, elen_bits)?;
        Ok(Self {
            model,
            elen_bits,
            threads,
        })
    }

    /// Config matching an analysis' element width and thread count.
    pub fn for_analysis(model: &MachineModel, analysis: &KernelAnalysis) -> Result<Self, RooflineError> {
        Self::new(model.clone(), analysis.elen_bits, analysis.threads)
    }

    pub fn with_elen(&self, elen_bits: u32) -> Result<Self, RooflineError> {
        Self::new(self.model.clone(), elen_bits, self.threads)
    }

    pub fn model(&self) -> &MachineModel {
        &self.model
    }

    pub fn elen_bits(&self) -> u32 {
        self.elen_bits
    }

    pub fn threads(&self) -> u32 {
        self.threads
    }

    pub fn vb(&self) -> f64 {
        f64::from(self.model.vlen_bits) / f64::from(self.elen_bits)
    }

    /// Scalar peak in GFLOP/s at the configured thread count.
    pub fn peak_scalar(&self) -> f64 {
        self.model
            .peak_scalar_flops(self.threads)
            .expect("threads validated at construction")
    }

    pub fn peak_vector(&self) -> f64 {
        self.vb() * self.peak_scalar()
    }

    /// GB/s at the configured thread count.
    pub fn bandwidth(&self) -> f64 {
        self.model
            .bandwidth_at(self.threads)
            .expect("threads validated at construction")
    }

    /// Scalar ridge point `AI_IRR`, FLOP/byte.
    pub fn inflection_scalar(&self) -> f64 {
        self.peak_scalar() / self.bandwidth()
    }

    /// Vector ridge point `AI_IRV = AI_IRR * vlen / elen`.
    pub fn inflection_vector(&self) -> f64 {
        self.inflection_scalar() * self.vb()
    }

    pub fn region(&self, ai: Intensity) -> Region {
        match ai {
            Intensity::Unbounded => Region::ComputeBound,
            Intensity::Finite(v) if v < self.inflection_scalar() => Region::MemoryBound,
            Intensity::Finite(v) if v < self.inflection_vector() => Region::Transition,
            Intensity::Finite(_) => Region::ComputeBound,
        }
    }

    /// Attainable GFLOP/s under both roofs. Negative intensities count as 0.
    pub fn attainable(&self, ai: Intensity) -> Attainable {
        let region = self.region(ai);
        match ai {
            Intensity::Unbounded => Attainable {
                scalar: self.peak_scalar(),
                vector: self.peak_vector(),
                region,
            },
            Intensity::Finite(v) => {
                let mem = v.max(0.0) * self.bandwidth();
                Attainable {
                    scalar: mem.min(self.peak_scalar()),
                    vector: mem.min(self.peak_vector()),
                    region,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attainable {
    pub scalar: f64,
    pub vector: f64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RooflinePoint {
    pub kernel_name: String,
    pub threads: u32,
    pub ai: Intensity,
    pub attainable_scalar: f64,
    pub attainable_vector: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    RoofScalar,
    RoofVector,
    InflectionScalar,
    InflectionVector,
    Kernel,
}

impl Series {
    pub fn as_str(self) -> &'static str {
        match self {
            Series::RoofScalar => "roof_scalar",
            Series::RoofVector => "roof_vector",
            Series::InflectionScalar => "inflection_scalar",
            Series::InflectionVector => "inflection_vector",
            Series::Kernel => "kernel",
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRow {
    pub series: Series,
    pub ai_flop_per_byte: f64,
    pub gflops: f64,
    pub label: String,
}

/// Plot-ready roofline: both roof polylines, both ridge markers and one
/// point per kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RooflineDataset {
    pub elen_bits: u32,
    pub threads: u32,
    pub normalized: bool,
    /// Factor applied to every throughput value (1 when not normalized).
    pub scale: f64,
    pub ai_irr: f64,
    pub ai_irv: f64,
    pub ai_range: (f64, f64),
    pub rows: Vec<DatasetRow>,
    pub points: Vec<RooflinePoint>,
}

impl RooflineDataset {
    pub fn series(&self, series: Series) -> impl Iterator<Item = &DatasetRow> {
        self.rows.iter().filter(move |r| r.series == series)
    }
}

const DEFAULT_AI_RANGE: (f64, f64) = (1.0 / 64.0, 256.0);

/// Builds the plot dataset. With `normalize`, throughput is divided by the
/// scalar peak so the scalar plateau sits at 1.0.
///
/// Kernel points are evaluated at the configured thread count, against roofs
/// for the kernel's own element width.
pub fn roofline_dataset(
    config: &RooflineConfig,
    analyses: &[KernelAnalysis],
    normalize: bool,
) -> Result<RooflineDataset, RooflineError> {
    let scale = if normalize {
        1.0 / config.peak_scalar()
    } else {
        1.0
    };
    let irr = config.inflection_scalar();
    let irv = config.inflection_vector();

    let mut points = Vec::with_capacity(analyses.len());
    for a in analyses {
        let own = config.with_elen(a.elen_bits)?;
        // Kernels without a measured intensity are placed at zero.
        let ai = a.ai_est_flop_per_byte.unwrap_or(Intensity::Finite(0.0));
        let att = own.attainable(ai);
        points.push(RooflinePoint {
            kernel_name: a.kernel_name.clone(),
            threads: a.threads,
            ai,
            attainable_scalar: att.scalar,
            attainable_vector: att.vector,
            region: att.region,
        });
    }

    let (mut lo, mut hi) = DEFAULT_AI_RANGE;
    let finite = points
        .iter()
        .filter_map(|p| p.ai.finite())
        .filter(|v| *v > 0.0)
        .chain([irr, irv]);
    for v in finite {
        while lo > v / 2.0 {
            lo /= 2.0;
        }
        while hi < v * 2.0 {
            hi *= 2.0;
        }
    }

    let bw = config.bandwidth();
    let (ps, pv) = (config.peak_scalar(), config.peak_vector());
    let row = |series, ai: f64, gflops: f64, label: &str| DatasetRow {
        series,
        ai_flop_per_byte: ai,
        gflops: gflops * scale,
        label: label.to_string(),
    };
    let mut rows = vec![
        row(Series::RoofScalar, lo, lo * bw, "memory"),
        row(Series::RoofScalar, irr, ps, "AI_IRR"),
        row(Series::RoofScalar, hi, ps, "scalar_peak"),
        row(Series::RoofVector, lo, lo * bw, "memory"),
        row(Series::RoofVector, irv, pv, "AI_IRV"),
        row(Series::RoofVector, hi, pv, "vector_peak"),
        row(Series::InflectionScalar, irr, lo * bw, "AI_IRR"),
        row(Series::InflectionScalar, irr, ps, "AI_IRR"),
        row(Series::InflectionVector, irv, lo * bw, "AI_IRV"),
        row(Series::InflectionVector, irv, pv, "AI_IRV"),
    ];
    for p in &points {
        let x = match p.ai {
            Intensity::Finite(v) => v,
            Intensity::Unbounded => hi,
        };
        let label = format!("{}@{}t {}", p.kernel_name, p.threads, p.region);
        rows.push(row(Series::Kernel, x, p.attainable_vector, &label));
    }

    Ok(RooflineDataset {
        elen_bits: config.elen_bits,
        threads: config.threads,
        normalized: normalize,
        scale,
        ai_irr: irr,
        ai_irv: irv,
        ai_range: (lo, hi),
        rows,
        points,
    })
}
