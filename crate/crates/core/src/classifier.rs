//! Decision tree assigning each kernel one of four performance classes.
//!
//! 1. `r_ins_reduction_sve < reduction_threshold` → not vectorized.
//! 2. estimated AI at or above the scalar ridge `AI_IRR` → speedup. When the
//!    intensity is still below the vector ridge `AI_IRV` the result carries a
//!    "vectorization-shifted memory bound" warning.
//! 3. otherwise memory bound: an LLC read-miss ratio at or below the ideal
//!    streaming ratio (`elen_bytes / cache_line`) means bandwidth bound,
//!    above it latency bound.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::MachineModel;
use crate::metrics::{GroupResult, Intensity, KernelAnalysis};
use crate::roofline::{RooflineConfig, RooflineError};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("analysis of `{kernel}` lacks `{field}`")]
    MissingField { kernel: String, field: &'static str },
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
    #[error("roofline config ({config_elen}-bit, {config_threads} threads) does not match analysis ({elen}-bit, {threads} threads)")]
    ConfigMismatch {
        config_elen: u32,
        config_threads: u32,
        elen: u32,
        threads: u32,
    },
    #[error(transparent)]
    Roofline(#[from] RooflineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerfClass {
    NotVectorized,
    BandwidthBound,
    LatencyBound,
    Speedup,
}

impl PerfClass {
    pub const ALL: [PerfClass; 4] = [
        PerfClass::NotVectorized,
        PerfClass::BandwidthBound,
        PerfClass::LatencyBound,
        PerfClass::Speedup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerfClass::NotVectorized => "NotVectorized",
            PerfClass::BandwidthBound => "BandwidthBound",
            PerfClass::LatencyBound => "LatencyBound",
            PerfClass::Speedup => "Speedup",
        }
    }

    pub fn is_memory_bound(self) -> bool {
        matches!(self, PerfClass::BandwidthBound | PerfClass::LatencyBound)
    }
}

impl fmt::Display for PerfClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class numbers printed for each label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap {
    pub not_vectorized: u8,
    pub bandwidth_bound: u8,
    pub latency_bound: u8,
    pub speedup: u8,
}

impl Default for ClassMap {
    fn default() -> Self {
        Self {
            not_vectorized: 1,
            bandwidth_bound: 2,
            latency_bound: 3,
            speedup: 4,
        }
    }
}

impl ClassMap {
    pub fn number(&self, class: PerfClass) -> u8 {
        match class {
            PerfClass::NotVectorized => self.not_vectorized,
            PerfClass::BandwidthBound => self.bandwidth_bound,
            PerfClass::LatencyBound => self.latency_bound,
            PerfClass::Speedup => self.speedup,
        }
    }

    fn validate(&self) -> Result<(), ClassifyError> {
        let set: BTreeSet<u8> = PerfClass::ALL.iter().map(|c| self.number(*c)).collect();
        if set != (1..=4).collect() {
            return Err(ClassifyError::InvalidConfig(
                "class numbers must be a permutation of 1..=4".into(),
            ));
        }
        Ok(())
    }
}

/// Where the LLC miss-ratio cut comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RllcThreshold {
    /// `elen_bytes / cache_line_bytes`, one miss per line of streamed data.
    Ideal,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub reduction_threshold: f64,
    pub rllc_threshold: RllcThreshold,
    pub use_vector_inflection_warning: bool,
    pub class_map: ClassMap,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            reduction_threshold: 1.2,
            rllc_threshold: RllcThreshold::Ideal,
            use_vector_inflection_warning: true,
            class_map: ClassMap::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.reduction_threshold.is_finite() && self.reduction_threshold > 1.0) {
            return Err(ClassifyError::InvalidConfig(format!(
                "reduction_threshold must be > 1, got {}",
                self.reduction_threshold
            )));
        }
        if let RllcThreshold::Fixed(t) = self.rllc_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(ClassifyError::InvalidConfig(format!(
                    "rllc_threshold must lie in (0, 1), got {t}"
                )));
            }
        }
        self.class_map.validate()
    }

    pub fn rllc_for(&self, elen_bits: u32, cache_line_bytes: u32) -> f64 {
        match self.rllc_threshold {
            RllcThreshold::Ideal => f64::from(elen_bits) / 8.0 / f64::from(cache_line_bytes),
            RllcThreshold::Fixed(t) => t,
        }
    }
}

/// Quantities compared on the path the decision tree took.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub r_ins_reduction: f64,
    pub reduction_threshold: f64,
    pub ai_est: Option<Intensity>,
    pub ai_irr: Option<f64>,
    pub ai_irv: Option<f64>,
    pub r_llc: Option<f64>,
    pub rllc_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kernel_name: String,
    pub threads: u32,
    pub label: PerfClass,
    pub class_number: u8,
    pub evidence: Evidence,
    pub warnings: Vec<String>,
}

pub const SHIFTED_WARNING: &str = "vectorization-shifted memory bound";

fn need<T>(v: Option<T>, kernel: &str, field: &'static str) -> Result<T, ClassifyError> {
    v.ok_or_else(|| ClassifyError::MissingField {
        kernel: kernel.to_string(),
        field,
    })
}

/// Runs the decision tree for one analysis. `config` must describe the
/// analysis' own element width and thread count.
pub fn classify(
    analysis: &KernelAnalysis,
    config: &RooflineConfig,
    cconfig: &ClassifierConfig,
) -> Result<Classification, ClassifyError> {
    cconfig.validate()?;
    if config.elen_bits() != analysis.elen_bits || config.threads() != analysis.threads {
        return Err(ClassifyError::ConfigMismatch {
            config_elen: config.elen_bits(),
            config_threads: config.threads(),
            elen: analysis.elen_bits,
            threads: analysis.threads,
        });
    }
    let kernel = analysis.kernel_name.as_str();
    let r = need(analysis.r_ins_reduction_sve, kernel, "r_ins_reduction_sve")?;
    let ai = need(analysis.ai_est_flop_per_byte, kernel, "ai_est_flop_per_byte")?;

    let mut evidence = Evidence {
        r_ins_reduction: r,
        reduction_threshold: cconfig.reduction_threshold,
        ai_est: None,
        ai_irr: None,
        ai_irv: None,
        r_llc: None,
        rllc_threshold: None,
    };
    let mut warnings = Vec::new();

    let label = if r < cconfig.reduction_threshold {
        PerfClass::NotVectorized
    } else {
        let irr = config.inflection_scalar();
        evidence.ai_est = Some(ai);
        evidence.ai_irr = Some(irr);
        if ai.at_least(irr) {
            if cconfig.use_vector_inflection_warning {
                let irv = config.inflection_vector();
                evidence.ai_irv = Some(irv);
                if !ai.at_least(irv) {
                    warnings.push(format!("{SHIFTED_WARNING}: ai {ai} < AI_IRV {irv:.4}"));
                }
            }
            PerfClass::Speedup
        } else {
            let r_llc = need(analysis.r_llc, kernel, "r_llc")?;
            let cut = cconfig.rllc_for(analysis.elen_bits, config.model().cache_line_bytes);
            evidence.r_llc = Some(r_llc);
            evidence.rllc_threshold = Some(cut);
            if r_llc <= cut {
                PerfClass::BandwidthBound
            } else {
                PerfClass::LatencyBound
            }
        }
    };

    Ok(Classification {
        kernel_name: analysis.kernel_name.clone(),
        threads: analysis.threads,
        label,
        class_number: cconfig.class_map.number(label),
        evidence,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub kernel_name: String,
    pub threads: u32,
    #[serde(flatten)]
    pub outcome: RowOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOutcome {
    Classified(Classification),
    Error(String),
}

impl TableRow {
    pub fn classification(&self) -> Option<&Classification> {
        match &self.outcome {
            RowOutcome::Classified(c) => Some(c),
            RowOutcome::Error(_) => None,
        }
    }
}

/// Classifications in input order; per-item failures are kept as rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationTable {
    pub rows: Vec<TableRow>,
}

fn classify_one(a: &KernelAnalysis, model: &MachineModel, cconfig: &ClassifierConfig) -> TableRow {
    let outcome = RooflineConfig::for_analysis(model, a)
        .map_err(ClassifyError::from)
        .and_then(|cfg| classify(a, &cfg, cconfig));
    TableRow {
        kernel_name: a.kernel_name.clone(),
        threads: a.threads,
        outcome: match outcome {
            Ok(c) => RowOutcome::Classified(c),
            Err(e) => RowOutcome::Error(e.to_string()),
        },
    }
}

pub fn classify_suite(
    analyses: &[KernelAnalysis],
    model: &MachineModel,
    cconfig: &ClassifierConfig,
) -> ClassificationTable {
    ClassificationTable {
        rows: analyses.iter().map(|a| classify_one(a, model, cconfig)).collect(),
    }
}

/// Like [`classify_suite`] but also carries forward analysis failures.
pub fn classify_groups(
    groups: &[GroupResult],
    model: &MachineModel,
    cconfig: &ClassifierConfig,
) -> ClassificationTable {
    let rows = groups
        .iter()
        .map(|g| match &g.result {
            Ok(a) => classify_one(a, model, cconfig),
            Err(e) => TableRow {
                kernel_name: g.kernel_name.clone(),
                threads: g.threads,
                outcome: RowOutcome::Error(e.to_string()),
            },
        })
        .collect();
    ClassificationTable { rows }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ClassificationTable {
    pub fn classified(&self) -> impl Iterator<Item = &Classification> {
        self.rows.iter().filter_map(TableRow::classification)
    }

    pub fn errors(&self) -> impl Iterator<Item = (&TableRow, &str)> {
        self.rows.iter().filter_map(|r| match &r.outcome {
            RowOutcome::Error(e) => Some((r, e.as_str())),
            RowOutcome::Classified(_) => None,
        })
    }

    pub fn lookup(&self, kernel: &str, threads: u32) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.kernel_name == kernel && r.threads == threads)
    }

    /// CSV with columns `kernel, threads, class_number, label, r_ins_reduction,
    /// ai_est, ai_irr, ai_irv, r_llc, warnings`. Values not compared on the
    /// taken path are left empty; failed rows carry label `error`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "kernel",
            "threads",
            "class_number",
            "label",
            "r_ins_reduction",
            "ai_est",
            "ai_irr",
            "ai_irv",
            "r_llc",
            "warnings",
        ])
        .expect("in-memory csv");
        for row in &self.rows {
            let fields: [String; 10] = match &row.outcome {
                RowOutcome::Classified(c) => [
                    row.kernel_name.clone(),
                    row.threads.to_string(),
                    c.class_number.to_string(),
                    c.label.to_string(),
                    c.evidence.r_ins_reduction.to_string(),
                    c.evidence.ai_est.map(|a| a.to_string()).unwrap_or_default(),
                    opt(c.evidence.ai_irr),
                    opt(c.evidence.ai_irv),
                    opt(c.evidence.r_llc),
                    c.warnings.join("; "),
                ],
                RowOutcome::Error(e) => [
                    row.kernel_name.clone(),
                    row.threads.to_string(),
                    String::new(),
                    "error".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.clone(),
                ],
            };
            w.write_record(&fields).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    /// Kernel × thread-count grid of class numbers.
    pub fn to_grid(&self) -> String {
        let mut kernels: Vec<&str> = Vec::new();
        let mut threads: Vec<u32> = Vec::new();
        for r in &self.rows {
            if !kernels.contains(&r.kernel_name.as_str()) {
                kernels.push(&r.kernel_name);
            }
            if !threads.contains(&r.threads) {
                threads.push(r.threads);
            }
        }
        threads.sort_unstable();
        let mut header = vec!["SN".to_string(), "Application".to_string()];
        header.extend(threads.iter().map(|t| format!("{t}-thread Case")));
        let mut body = Vec::new();
        for (i, k) in kernels.iter().enumerate() {
            let mut line = vec![(i + 1).to_string(), k.to_string()];
            for t in &threads {
                line.push(match self.lookup(k, *t).map(|r| &r.outcome) {
                    Some(RowOutcome::Classified(c)) => format!("Class {}", c.class_number),
                    Some(RowOutcome::Error(_)) => "error".into(),
                    None => "-".into(),
                });
            }
            body.push(line);
        }
        align(&header, &body)
    }

    /// Detailed aligned table followed by the grid view.
    pub fn to_text(&self) -> String {
        let header: Vec<String> = [
            "kernel", "threads", "class", "label", "r_ins", "ai_est", "ai_irr", "ai_irv", "r_llc",
            "warnings",
        ]
        .map(String::from)
        .to_vec();
        let f3 = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| match &row.outcome {
                RowOutcome::Classified(c) => vec![
                    row.kernel_name.clone(),
                    row.threads.to_string(),
                    c.class_number.to_string(),
                    c.label.to_string(),
                    format!("{:.3}", c.evidence.r_ins_reduction),
                    match c.evidence.ai_est {
                        Some(Intensity::Finite(v)) => format!("{v:.3}"),
                        Some(Intensity::Unbounded) => "unbounded".into(),
                        None => "-".into(),
                    },
                    f3(c.evidence.ai_irr),
                    f3(c.evidence.ai_irv),
                    f3(c.evidence.r_llc),
                    c.warnings.join("; "),
                ],
                RowOutcome::Error(e) => {
                    let mut v = vec![row.kernel_name.clone(), row.threads.to_string()];
                    v.extend(["-", "error", "-", "-", "-", "-", "-"].map(String::from));
                    v.push(e.clone());
                    v
                }
            })
            .collect();
        let mut out = align(&header, &body);
        if !self.rows.is_empty() {
            out.push('\n');
            out.push_str(&self.to_grid());
        }
        out
    }
}

fn align(header: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for line in body {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for line in std::iter::once(header).chain(body.iter().map(Vec::as_slice)) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analysis(r: Option<f64>, ai: Option<Intensity>, r_llc: Option<f64>, threads: u32) -> KernelAnalysis {
        KernelAnalysis {
            kernel_name: "k".into(),
            threads,
            elen_bits: 64,
            vb: 2.0,
            r_ins_reduction_sve: r,
            r_ins_reduction_asimd: None,
            speedup_sve: None,
            speedup_asimd: None,
            ai_est_flop_per_byte: ai,
            r_llc,
        }
    }

    fn run(a: &KernelAnalysis) -> Classification {
        let cfg = RooflineConfig::for_analysis(&MachineModel::grace(), a).unwrap();
        classify(a, &cfg, &ClassifierConfig::default()).unwrap()
    }

    #[test]
    fn fft_like_not_vectorized() {
        let c = run(&analysis(Some(1.02), Some(Intensity::Finite(5.0)), Some(0.5), 1));
        assert_eq!((c.label, c.class_number), (PerfClass::NotVectorized, 1));
        assert_eq!(c.evidence.ai_irr, None);
    }

    #[test]
    fn stream_like_bandwidth_bound() {
        let c = run(&analysis(Some(1.8), Some(Intensity::Finite(0.0)), Some(0.125), 1));
        assert_eq!((c.label, c.class_number), (PerfClass::BandwidthBound, 2));
        assert_eq!(c.evidence.rllc_threshold, Some(0.125));
    }

    #[test]
    fn spmv_like_latency_bound() {
        let c = run(&analysis(Some(1.99), Some(Intensity::Finite(0.2)), Some(0.9), 1));
        assert_eq!((c.label, c.class_number), (PerfClass::LatencyBound, 3));
    }

    #[test]
    fn compute_bound_speedup_and_thread_shift() {
        let c = run(&analysis(Some(1.8), Some(Intensity::Finite(20.0)), Some(0.01), 1));
        assert_eq!((c.label, c.class_number), (PerfClass::Speedup, 4));
        assert!(c.warnings.is_empty());

        let qc = |t| run(&analysis(Some(1.8), Some(Intensity::Finite(4.0)), Some(0.1), t));
        assert_eq!(qc(1).label, PerfClass::Speedup);
        assert_eq!(qc(72).label, PerfClass::BandwidthBound);
        assert_eq!(qc(72).class_number, 2);
    }

    #[test]
    fn transition_region_warns() {
        let c = run(&analysis(Some(1.8), Some(Intensity::Finite(1.5)), None, 1));
        assert_eq!(c.label, PerfClass::Speedup);
        assert_eq!(c.warnings.len(), 1);
        assert!(c.warnings[0].starts_with(SHIFTED_WARNING));

        let a = analysis(Some(1.8), Some(Intensity::Finite(1.5)), None, 1);
        let cfg = RooflineConfig::for_analysis(&MachineModel::grace(), &a).unwrap();
        let quiet = ClassifierConfig {
            use_vector_inflection_warning: false,
            ..Default::default()
        };
        assert!(classify(&a, &cfg, &quiet).unwrap().warnings.is_empty());
    }

    #[test]
    fn unbounded_is_speedup() {
        let c = run(&analysis(Some(1.5), Some(Intensity::Unbounded), None, 72));
        assert_eq!(c.label, PerfClass::Speedup);
    }

    #[test]
    fn missing_fields_named() {
        let a = analysis(None, Some(Intensity::Finite(1.0)), None, 1);
        let cfg = RooflineConfig::for_analysis(&MachineModel::grace(), &a).unwrap();
        let err = classify(&a, &cfg, &ClassifierConfig::default()).unwrap_err();
        assert!(err.to_string().contains("r_ins_reduction_sve"));

        let a = analysis(Some(1.5), Some(Intensity::Finite(0.1)), None, 1);
        let err = classify(&a, &cfg, &ClassifierConfig::default()).unwrap_err();
        assert!(err.to_string().contains("r_llc"));
    }

    #[test]
    fn mismatched_config_rejected() {
        let a = analysis(Some(1.5), Some(Intensity::Finite(0.1)), Some(0.1), 1);
        let cfg = RooflineConfig::new(MachineModel::grace(), 32, 1).unwrap();
        assert!(matches!(
            classify(&a, &cfg, &ClassifierConfig::default()),
            Err(ClassifyError::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = ClassifierConfig::default();
        assert!(c.validate().is_ok());
        c.reduction_threshold = 1.0;
        assert!(c.validate().is_err());
        c = ClassifierConfig {
            rllc_threshold: RllcThreshold::Fixed(1.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = ClassifierConfig::default();
        c.class_map.speedup = 1;
        assert!(c.validate().is_err());
        assert_eq!(ClassifierConfig::default().rllc_for(64, 64), 0.125);
        assert_eq!(ClassifierConfig::default().rllc_for(32, 64), 0.0625);
    }

    #[test]
    fn custom_class_map() {
        let a = analysis(Some(1.99), Some(Intensity::Finite(0.2)), Some(0.9), 1);
        let cfg = RooflineConfig::for_analysis(&MachineModel::grace(), &a).unwrap();
        let swapped = ClassifierConfig {
            class_map: ClassMap {
                bandwidth_bound: 3,
                latency_bound: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(classify(&a, &cfg, &swapped).unwrap().class_number, 2);
    }

    #[test]
    fn suite_keeps_errors_in_order() {
        let good = analysis(Some(1.8), Some(Intensity::Finite(0.0)), Some(0.1), 1);
        let mut bad = analysis(None, None, None, 1);
        bad.kernel_name = "bad".into();
        let t = classify_suite(
            &[good.clone(), bad, good],
            &MachineModel::grace(),
            &ClassifierConfig::default(),
        );
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.classified().count(), 2);
        assert_eq!(t.errors().count(), 1);
        assert_eq!(t.rows[1].kernel_name, "bad");
        let csv = t.to_csv();
        assert!(csv.starts_with(
            "kernel,threads,class_number,label,r_ins_reduction,ai_est,ai_irr,ai_irv,r_llc,warnings\n"
        ));
        assert!(csv.contains("bad,1,,error"));
        assert!(classify_suite(&[], &MachineModel::grace(), &ClassifierConfig::default())
            .rows
            .is_empty());
    }

    #[test]
    fn grid_layout() {
        let a1 = analysis(Some(1.8), Some(Intensity::Finite(4.0)), Some(0.1), 1);
        let a72 = analysis(Some(1.8), Some(Intensity::Finite(4.0)), Some(0.1), 72);
        let t = classify_suite(&[a1, a72], &MachineModel::grace(), &ClassifierConfig::default());
        let grid = t.to_grid();
        let lines: Vec<&str> = grid.lines().collect();
        assert!(lines[0].contains("1-thread Case") && lines[0].contains("72-thread Case"));
        assert!(lines[1].contains("Class 4") && lines[1].contains("Class 2"));
    }
}
