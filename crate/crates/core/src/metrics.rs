//! Vectorization metrics derived from measurement records.
//!
//! Everything here is a pure function of counter values. Counts from runs
//! with different numbers of in-ROI repetitions are normalized per
//! repetition before they are compared.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::collector::{MeasurementRecord, Variant};
use crate::machine::events::{INST_RETIRED, LL_CACHE_MISS_RD, MEM_ACCESS_RD, VFP_SPEC};
use crate::machine::MachineModel;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("element width {elen_bits} bits does not fit a {vlen_bits}-bit vector")]
    ElementWiderThanVector { vlen_bits: u32, elen_bits: u32 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("inconsistent counters: {0}")]
    DataQuality(String),
    #[error("no scalar reference: kernel `{kernel}` at {threads} thread(s) has no baseline record")]
    MissingBaseline { kernel: String, threads: u32 },
    #[error("records for `{kernel}` disagree on elen_bits ({a} vs {b})")]
    MixedElementWidth { kernel: String, a: u32, b: u32 },
    #[error("records mix kernels or thread counts: {0}")]
    MixedGroup(String),
    #[error("duplicate {variant} record for `{kernel}` at {threads} thread(s)")]
    DuplicateVariant {
        kernel: String,
        threads: u32,
        variant: Variant,
    },
    #[error("no records to analyze")]
    Empty,
}

/// Arithmetic intensity in FLOP/byte, or unbounded when no memory traffic
/// was observed at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intensity {
    Finite(f64),
    Unbounded,
}

impl Intensity {
    pub fn finite(self) -> Option<f64> {
        match self {
            Intensity::Finite(v) => Some(v),
            Intensity::Unbounded => None,
        }
    }

    /// True when `self >= threshold`; an unbounded intensity exceeds everything.
    pub fn at_least(self, threshold: f64) -> bool {
        match self {
            Intensity::Finite(v) => v >= threshold,
            Intensity::Unbounded => true,
        }
    }
}

impl fmt::Display for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intensity::Finite(v) => write!(f, "{v}"),
            Intensity::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Intensity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Intensity::Finite(v) => s.serialize_f64(*v),
            Intensity::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Intensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() && v >= 0.0 => Ok(Intensity::Finite(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!(
                "arithmetic intensity must be finite and >= 0, got {v}"
            ))),
            Raw::Text(t) if t == "unbounded" => Ok(Intensity::Unbounded),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"unbounded\", got {t:?}"
            ))),
        }
    }
}

/// Upper bound on per-instruction data parallelism: `vlen / elen`.
pub fn vectorization_bound(vlen_bits: u32, elen_bits: u32) -> Result<f64, MetricsError> {
    if vlen_bits == 0 {
        return Err(MetricsError::NonPositive("vlen_bits"));
    }
    if elen_bits == 0 {
        return Err(MetricsError::NonPositive("elen_bits"));
    }
    if elen_bits > vlen_bits {
        return Err(MetricsError::ElementWiderThanVector {
            vlen_bits,
            elen_bits,
        });
    }
    Ok(f64::from(vlen_bits) / f64::from(elen_bits))
}

/// Retired instructions of the scalar build over the vectorized build.
pub fn instruction_reduction(ins_nonvec: f64, ins_vec: f64) -> Result<f64, MetricsError> {
    positive("ins_nonvec", ins_nonvec)?;
    positive("ins_vec", ins_vec)?;
    Ok(ins_nonvec / ins_vec)
}

pub fn speedup(time_nonvec_ns: f64, time_vec_ns: f64) -> Result<f64, MetricsError> {
    positive("time_nonvec_ns", time_nonvec_ns)?;
    positive("time_vec_ns", time_vec_ns)?;
    Ok(time_nonvec_ns / time_vec_ns)
}

/// FP ops per byte, counting one cache line of traffic per LLC read miss.
pub fn estimated_ai(fp_ops: u64, llc_read_misses: u64, cache_line_bytes: u32) -> Intensity {
    if llc_read_misses == 0 {
        return Intensity::Unbounded;
    }
    Intensity::Finite(fp_ops as f64 / (llc_read_misses as f64 * f64::from(cache_line_bytes)))
}

pub fn llc_miss_ratio(llc_read_misses: u64, mem_access_rd: u64) -> Result<f64, MetricsError> {
    if mem_access_rd == 0 {
        return Err(MetricsError::DataQuality(
            "MEM_ACCESS_RD is zero, the miss ratio is undefined".into(),
        ));
    }
    if llc_read_misses > mem_access_rd {
        return Err(MetricsError::DataQuality(format!(
            "LL_CACHE_MISS_RD ({llc_read_misses}) exceeds MEM_ACCESS_RD ({mem_access_rd})"
        )));
    }
    Ok(llc_read_misses as f64 / mem_access_rd as f64)
}

fn positive(what: &'static str, v: f64) -> Result<(), MetricsError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(MetricsError::NonPositive(what))
    }
}

/// Derived metrics for one kernel at one thread count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelAnalysis {
    pub kernel_name: String,
    pub threads: u32,
    pub elen_bits: u32,
    pub vb: f64,
    pub r_ins_reduction_sve: Option<f64>,
    pub r_ins_reduction_asimd: Option<f64>,
    pub speedup_sve: Option<f64>,
    pub speedup_asimd: Option<f64>,
    /// From the baseline record's VFP_SPEC and LL_CACHE_MISS_RD.
    pub ai_est_flop_per_byte: Option<Intensity>,
    /// From the baseline record's LL_CACHE_MISS_RD and MEM_ACCESS_RD.
    pub r_llc: Option<f64>,
}

fn per_rep(r: &MeasurementRecord, counter: &str) -> Option<f64> {
    r.counter(counter).map(|v| v as f64 / r.repetitions as f64)
}

fn time_per_rep(r: &MeasurementRecord) -> f64 {
    r.wall_time_ns as f64 / r.repetitions as f64
}

/// Combines the baseline and optional ASIMD/SVE records of one kernel at one
/// thread count into a [`KernelAnalysis`].
pub fn analyze(records: &[&MeasurementRecord], model: &MachineModel) -> Result<KernelAnalysis, MetricsError> {
    let first = records.first().ok_or(MetricsError::Empty)?;
    let (kernel, threads) = (&first.kernel_name, first.threads);
    let mut by_variant: [Option<&MeasurementRecord>; 3] = [None; 3];
    for r in records {
        if &r.kernel_name != kernel || r.threads != threads {
            return Err(MetricsError::MixedGroup(format!(
                "`{}`@{} vs `{}`@{}",
                kernel, threads, r.kernel_name, r.threads
            )));
        }
        if r.elen_bits != first.elen_bits {
            return Err(MetricsError::MixedElementWidth {
                kernel: kernel.clone(),
                a: first.elen_bits,
                b: r.elen_bits,
            });
        }
        let slot = &mut by_variant[r.variant as usize];
        if slot.is_some() {
            return Err(MetricsError::DuplicateVariant {
                kernel: kernel.clone(),
                threads,
                variant: r.variant,
            });
        }
        *slot = Some(r);
    }
    let [baseline, asimd, sve] = by_variant;
    let base = baseline.ok_or_else(|| MetricsError::MissingBaseline {
        kernel: kernel.clone(),
        threads,
    })?;

    let base_ins = per_rep(base, INST_RETIRED).ok_or(MetricsError::DataQuality(
        "baseline record lacks INST_RETIRED".into(),
    ))?;
    let reduction = |vec: Option<&MeasurementRecord>| -> Result<Option<f64>, MetricsError> {
        vec.map(|v| {
            let ins = per_rep(v, INST_RETIRED).ok_or(MetricsError::DataQuality(format!(
                "{} record lacks INST_RETIRED",
                v.variant
            )))?;
            instruction_reduction(base_ins, ins)
        })
        .transpose()
    };
    let accel = |vec: Option<&MeasurementRecord>| -> Result<Option<f64>, MetricsError> {
        vec.map(|v| speedup(time_per_rep(base), time_per_rep(v))).transpose()
    };

    let misses = base.counter(LL_CACHE_MISS_RD);
    let ai = match (base.counter(VFP_SPEC), misses) {
        (Some(fp), Some(m)) => Some(estimated_ai(fp, m, model.cache_line_bytes)),
        _ => None,
    };
    let r_llc = match (misses, base.counter(MEM_ACCESS_RD)) {
        (Some(m), Some(a)) => Some(llc_miss_ratio(m, a)?),
        _ => None,
    };

    Ok(KernelAnalysis {
        kernel_name: kernel.clone(),
        threads,
        elen_bits: first.elen_bits,
        vb: vectorization_bound(model.vlen_bits, first.elen_bits)?,
        r_ins_reduction_sve: reduction(sve)?,
        r_ins_reduction_asimd: reduction(asimd)?,
        speedup_sve: accel(sve)?,
        speedup_asimd: accel(asimd)?,
        ai_est_flop_per_byte: ai,
        r_llc,
    })
}

/// Outcome of analyzing one (kernel, threads) group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub kernel_name: String,
    pub threads: u32,
    pub result: Result<KernelAnalysis, MetricsError>,
}

/// Groups records by (kernel, threads) in order of first appearance and
/// analyzes each group independently.
pub fn analyze_all(records: &[MeasurementRecord], model: &MachineModel) -> Vec<GroupResult> {
    let mut groups: Vec<((&str, u32), Vec<&MeasurementRecord>)> = Vec::new();
    for r in records {
        let key = (r.kernel_name.as_str(), r.threads);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((kernel, threads), members)| GroupResult {
            kernel_name: kernel.to_string(),
            threads,
            result: analyze(&members, model),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::events::CPU_CYCLES;

    fn rec(variant: Variant, ins: u64, time: u64, extra: &[(&str, u64)]) -> MeasurementRecord {
        let mut counters: std::collections::BTreeMap<String, u64> =
            [(INST_RETIRED.into(), ins), (CPU_CYCLES.into(), ins)].into();
        counters.extend(extra.iter().map(|(k, v)| (k.to_string(), *v)));
        MeasurementRecord {
            kernel_name: "spmv".into(),
            variant,
            threads: 1,
            elen_bits: 64,
            repetitions: 1,
            wall_time_ns: time,
            counters,
        }
    }

    #[test]
    fn vb_values() {
        assert_eq!(vectorization_bound(128, 64).unwrap(), 2.0);
        assert_eq!(vectorization_bound(128, 32).unwrap(), 4.0);
        assert_eq!(vectorization_bound(128, 16).unwrap(), 8.0);
        assert_eq!(vectorization_bound(128, 128).unwrap(), 1.0);
        assert!(matches!(
            vectorization_bound(128, 256),
            Err(MetricsError::ElementWiderThanVector { .. })
        ));
        assert!(vectorization_bound(128, 0).is_err());
    }

    #[test]
    fn reduction_values() {
        assert_eq!(instruction_reduction(5e8, 5e8).unwrap(), 1.0);
        assert!((instruction_reduction(1.99e9, 1.0e9).unwrap() - 1.99).abs() < 1e-12);
        assert!((instruction_reduction(7.1e9, 1.0e9).unwrap() - 7.1).abs() < 1e-12);
        assert_eq!(
            instruction_reduction(1.0, 0.0),
            Err(MetricsError::NonPositive("ins_vec"))
        );
    }

    #[test]
    fn speedup_values() {
        assert_eq!(speedup(7.0, 7.0).unwrap(), 1.0);
        assert!((speedup(3.2e9, 1.0e9).unwrap() - 3.2).abs() < 1e-12);
        assert_eq!(speedup(1.0e9, 2.0e9).unwrap(), 0.5);
        assert!(speedup(1.0, 0.0).is_err());
    }

    #[test]
    fn ai_values() {
        assert_eq!(estimated_ai(64, 1, 64), Intensity::Finite(1.0));
        assert_eq!(estimated_ai(0, 17, 64), Intensity::Finite(0.0));
        assert_eq!(estimated_ai(1280, 1, 64), Intensity::Finite(20.0));
        assert_eq!(estimated_ai(10, 0, 64), Intensity::Unbounded);
    }

    #[test]
    fn llc_ratio_values() {
        assert_eq!(llc_miss_ratio(1, 8).unwrap(), 0.125);
        assert_eq!(llc_miss_ratio(0, 9).unwrap(), 0.0);
        assert_eq!(llc_miss_ratio(9, 9).unwrap(), 1.0);
        assert!(matches!(llc_miss_ratio(10, 9), Err(MetricsError::DataQuality(_))));
        assert!(llc_miss_ratio(0, 0).is_err());
    }

    #[test]
    fn intensity_json() {
        let v = serde_json::to_string(&[Intensity::Finite(1.5), Intensity::Unbounded]).unwrap();
        assert_eq!(v, r#"[1.5,"unbounded"]"#);
        let back: Vec<Intensity> = serde_json::from_str(&v).unwrap();
        assert_eq!(back, [Intensity::Finite(1.5), Intensity::Unbounded]);
        assert!(serde_json::from_str::<Intensity>("\"lots\"").is_err());
        assert!(serde_json::from_str::<Intensity>("-1").is_err());
    }

    #[test]
    fn analyze_baseline_and_sve() {
        let m = MachineModel::grace();
        let b = rec(
            Variant::Baseline,
            1990,
            1000,
            &[(VFP_SPEC, 640), (LL_CACHE_MISS_RD, 10), (MEM_ACCESS_RD, 80)],
        );
        let s = rec(Variant::Sve, 1000, 1000, &[]);
        let a = analyze(&[&b, &s], &m).unwrap();
        assert_eq!(a.vb, 2.0);
        assert!((a.r_ins_reduction_sve.unwrap() - 1.99).abs() < 1e-12);
        assert_eq!(a.speedup_sve, Some(1.0));
        assert_eq!(a.r_ins_reduction_asimd, None);
        assert_eq!(a.ai_est_flop_per_byte, Some(Intensity::Finite(1.0)));
        assert_eq!(a.r_llc, Some(0.125));
    }

    #[test]
    fn analyze_normalizes_per_repetition() {
        let m = MachineModel::grace();
        let b = rec(Variant::Baseline, 2000, 4000, &[]);
        let mut s = rec(Variant::Sve, 4000, 4000, &[]);
        s.repetitions = 4;
        let a = analyze(&[&b, &s], &m).unwrap();
        assert_eq!(a.r_ins_reduction_sve, Some(2.0));
        assert_eq!(a.speedup_sve, Some(4.0));
    }

    #[test]
    fn analyze_baseline_only() {
        let a = analyze(&[&rec(Variant::Baseline, 10, 10, &[])], &MachineModel::grace()).unwrap();
        assert_eq!(a.r_ins_reduction_sve, None);
        assert_eq!(a.speedup_sve, None);
        assert_eq!(a.ai_est_flop_per_byte, None);
        assert_eq!(a.r_llc, None);
    }

    #[test]
    fn analyze_errors() {
        let m = MachineModel::grace();
        let s = rec(Variant::Sve, 10, 10, &[]);
        assert!(matches!(
            analyze(&[&s], &m),
            Err(MetricsError::MissingBaseline { .. })
        ));
        let b = rec(Variant::Baseline, 10, 10, &[]);
        let mut s32 = s.clone();
        s32.elen_bits = 32;
        assert!(matches!(
            analyze(&[&b, &s32], &m),
            Err(MetricsError::MixedElementWidth { .. })
        ));
        assert!(matches!(
            analyze(&[&b, &b], &m),
            Err(MetricsError::DuplicateVariant { .. })
        ));
        let inverted = rec(
            Variant::Baseline,
            10,
            10,
            &[(LL_CACHE_MISS_RD, 9), (MEM_ACCESS_RD, 3)],
        );
        assert!(matches!(
            analyze(&[&inverted], &m),
            Err(MetricsError::DataQuality(_))
        ));
        assert_eq!(analyze(&[], &m), Err(MetricsError::Empty));
    }

    #[test]
    fn analyze_all_groups_in_order() {
        let m = MachineModel::grace();
        let mut recs = vec![
            rec(Variant::Baseline, 10, 10, &[]),
            rec(Variant::Sve, 5, 10, &[]),
        ];
        let mut other = rec(Variant::Sve, 5, 10, &[]);
        other.kernel_name = "orphan".into();
        recs.insert(1, other);
        let out = analyze_all(&recs, &m);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].kernel_name, "spmv");
        assert_eq!(out[0].result.as_ref().unwrap().r_ins_reduction_sve, Some(2.0));
        assert!(out[1].result.is_err());
    }
}
