//! Platform description and PMU event registry.

pub mod events;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use events::{EventSet, PmuEvent, MAX_GROUP_EVENTS};

#[derive(Debug, Error)]
pub enum MachineError {
    #[error("invalid machine model: {0}")]
    Invalid(String),
    #[error("malformed machine model document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read machine model {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("thread count {threads} outside 1..={max}")]
    ThreadsOutOfRange { threads: u32, max: u32 },
    #[error("unknown PMU event `{0}`")]
    UnknownEvent(String),
    #[error("an event set needs at least one event")]
    EmptyEventSet,
    #[error(
        "{requested} events requested but at most {limit} counters can be collected simultaneously"
    )]
    TooManyEvents { requested: usize, limit: usize },
    #[error("event `{0}` listed twice")]
    DuplicateEvent(String),
}

fn default_flops_per_pipeline_cycle() -> u32 {
    2
}

/// Static description of a CPU + memory system.
///
/// All derived rates are per configured thread count; see [`bandwidth_at`]
/// and [`peak_scalar_flops`].
///
/// [`bandwidth_at`]: MachineModel::bandwidth_at
/// [`peak_scalar_flops`]: MachineModel::peak_scalar_flops
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineModel {
    pub name: String,
    /// Vector register length in bits, a positive multiple of 128.
    pub vlen_bits: u32,
    pub freq_mhz: f64,
    pub fpu_pipelines: u32,
    /// 2 when a fused multiply-add counts as two FP ops.
    #[serde(default = "default_flops_per_pipeline_cycle")]
    pub flops_per_pipeline_cycle: u32,
    /// Sustained single-thread bandwidth, GB/s.
    pub bw_single_gbs: f64,
    /// Sustained bandwidth once saturated, GB/s.
    pub bw_peak_gbs: f64,
    pub max_threads: u32,
    pub cache_line_bytes: u32,
    pub llc_bytes: u64,
}

impl MachineModel {
    /// Nvidia Grace (72 Neoverse V2 cores, 128-bit SVE).
    pub fn grace() -> Self {
        Self {
            name: "grace".into(),
            vlen_bits: 128,
            freq_mhz: 3447.0,
            fpu_pipelines: 4,
            flops_per_pipeline_cycle: 2,
            bw_single_gbs: 30.0,
            bw_peak_gbs: 250.0,
            max_threads: 72,
            cache_line_bytes: 64,
            llc_bytes: 117 * 1024 * 1024,
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "grace" => Some(Self::grace()),
            _ => None,
        }
    }

    /// Parses a JSON document, or returns the built-in profile for `"grace"`.
    pub fn load(source: &str) -> Result<Self, MachineError> {
        if let Some(m) = Self::builtin(source.trim()) {
            return Ok(m);
        }
        let model: Self = serde_json::from_str(source)?;
        model.validate()?;
        Ok(model)
    }

    /// `name_or_path` is either a built-in profile name or a JSON file.
    pub fn resolve(name_or_path: &str) -> Result<Self, MachineError> {
        if let Some(m) = Self::builtin(name_or_path) {
            return Ok(m);
        }
        let path = Path::new(name_or_path);
        let text = std::fs::read_to_string(path).map_err(|source| MachineError::Io {
            path: name_or_path.to_string(),
            source,
        })?;
        Self::load(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine model serializes")
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let bad = |msg: String| Err(MachineError::Invalid(msg));
        if self.vlen_bits < 128 || !self.vlen_bits.is_multiple_of(128) {
            return bad(format!(
                "vlen_bits = {} is not a positive multiple of 128",
                self.vlen_bits
            ));
        }
        for (field, v) in [
            ("freq_mhz", self.freq_mhz),
            ("bw_single_gbs", self.bw_single_gbs),
            ("bw_peak_gbs", self.bw_peak_gbs),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{field} must be finite and > 0, got {v}"));
            }
        }
        for (field, v) in [
            ("fpu_pipelines", self.fpu_pipelines),
            ("flops_per_pipeline_cycle", self.flops_per_pipeline_cycle),
            ("max_threads", self.max_threads),
            ("cache_line_bytes", self.cache_line_bytes),
        ] {
            if v == 0 {
                return bad(format!("{field} must be > 0"));
            }
        }
        if self.llc_bytes == 0 {
            return bad("llc_bytes must be > 0".into());
        }
        if self.bw_single_gbs > self.bw_peak_gbs {
            return bad(format!(
                "bw_single_gbs ({}) exceeds bw_peak_gbs ({})",
                self.bw_single_gbs, self.bw_peak_gbs
            ));
        }
        Ok(())
    }

    pub fn check_threads(&self, threads: u32) -> Result<(), MachineError> {
        if threads == 0 || threads > self.max_threads {
            return Err(MachineError::ThreadsOutOfRange {
                threads,
                max: self.max_threads,
            });
        }
        Ok(())
    }

    /// Sustained bandwidth in GB/s: linear in threads until it saturates.
    pub fn bandwidth_at(&self, threads: u32) -> Result<f64, MachineError> {
        self.check_threads(threads)?;
        Ok((f64::from(threads) * self.bw_single_gbs).min(self.bw_peak_gbs))
    }

    /// Non-vectorized peak in GFLOP/s for `threads` cores.
    pub fn peak_scalar_flops(&self, threads: u32) -> Result<f64, MachineError> {
        self.check_threads(threads)?;
        Ok(self.freq_mhz / 1000.0
            * f64::from(self.fpu_pipelines)
            * f64::from(self.flops_per_pipeline_cycle)
            * f64::from(threads))
    }

    /// Thread count at which the bandwidth curve reaches its plateau.
    pub fn saturation_threads(&self) -> f64 {
        self.bw_peak_gbs / self.bw_single_gbs
    }
}
