use serde::{Deserialize, Serialize};

use super::CliError;
use crate::classifier::{classify, ClassificationTable, ClassifierConfig, RowOutcome, TableRow};
use crate::collector::load_measurements;
use crate::machine::{events, MachineModel};
use crate::metrics::{analyze_all, KernelAnalysis};
use crate::roofline::RooflineConfig;

/// One element of an analysis document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnalysisEntry {
    Analysis(KernelAnalysis),
    Failed(FailedAnalysis),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailedAnalysis {
    pub kernel_name: String,
    pub threads: u32,
    pub error: String,
}

impl AnalysisEntry {
    pub fn into_analysis(self) -> Option<KernelAnalysis> {
        match self {
            AnalysisEntry::Analysis(a) => Some(a),
            AnalysisEntry::Failed(_) => None,
        }
    }

    fn key(&self) -> (&str, u32) {
        match self {
            AnalysisEntry::Analysis(a) => (&a.kernel_name, a.threads),
            AnalysisEntry::Failed(f) => (&f.kernel_name, f.threads),
        }
    }
}

/// Accepts either a measurement document (records carry `variant`) or an
/// analysis document, and returns analyses in document order.
pub fn load_analysis_input(text: &str, model: &MachineModel) -> Result<Vec<AnalysisEntry>, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid JSON: {e}")))?;
    let items = value
        .as_array()
        .ok_or_else(|| CliError::Input("expected a JSON array".into()))?;
    let is_measurements = items.iter().any(|v| v.get("variant").is_some());
    if is_measurements {
        let records = load_measurements(text)?;
        return Ok(analyze_all(&records, model)
            .into_iter()
            .map(|g| match g.result {
                Ok(a) => AnalysisEntry::Analysis(a),
                Err(e) => AnalysisEntry::Failed(FailedAnalysis {
                    kernel_name: g.kernel_name,
                    threads: g.threads,
                    error: e.to_string(),
                }),
            })
            .collect());
    }
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v.clone())
                .map_err(|e| CliError::Input(format!("analysis {i}: {e}")))
        })
        .collect()
}

pub fn analyses_document(entries: &[AnalysisEntry]) -> String {
    let mut s = serde_json::to_string_pretty(entries).expect("analyses serialize");
    s.push('\n');
    s
}

const ANALYSIS_COLUMNS: [&str; 10] = [
    "kernel",
    "threads",
    "elen_bits",
    "vb",
    "r_ins_reduction_sve",
    "r_ins_reduction_asimd",
    "speedup_sve",
    "speedup_asimd",
    "ai_est",
    "r_llc",
];

fn analysis_cells(e: &AnalysisEntry, fmt: impl Fn(f64) -> String) -> Vec<String> {
    let o = |v: Option<f64>| v.map(&fmt).unwrap_or_default();
    match e {
        AnalysisEntry::Analysis(a) => vec![
            a.kernel_name.clone(),
            a.threads.to_string(),
            a.elen_bits.to_string(),
            fmt(a.vb),
            o(a.r_ins_reduction_sve),
            o(a.r_ins_reduction_asimd),
            o(a.speedup_sve),
            o(a.speedup_asimd),
            a.ai_est_flop_per_byte
                .map(|ai| match ai.finite() {
                    Some(v) => fmt(v),
                    None => ai.to_string(),
                })
                .unwrap_or_default(),
            o(a.r_llc),
        ],
        AnalysisEntry::Failed(FailedAnalysis { kernel_name, threads, error }) => {
            let mut v = vec![kernel_name.clone(), threads.to_string()];
            v.resize(ANALYSIS_COLUMNS.len() - 1, String::new());
            v.push(format!("error: {error}"));
            v
        }
    }
}

pub fn analysis_csv(entries: &[AnalysisEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ANALYSIS_COLUMNS).expect("in-memory csv");
    for e in entries {
        w.write_record(analysis_cells(e, |v| v.to_string())).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub fn analysis_text(entries: &[AnalysisEntry]) -> String {
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let mut cells = analysis_cells(e, |v| format!("{v:.3}"));
            for c in &mut cells {
                if c.is_empty() {
                    *c = "-".into();
                }
            }
            cells
        })
        .collect();
    let header: Vec<String> = ANALYSIS_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for r in std::iter::once(&header).chain(&rows) {
        let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Classifies every successful analysis; failed ones become error rows.
pub fn classify_entries(
    entries: &[AnalysisEntry],
    model: &MachineModel,
    cconfig: &ClassifierConfig,
) -> ClassificationTable {
    let rows = entries
        .iter()
        .map(|e| {
            let (kernel, threads) = e.key();
            let outcome = match e {
                AnalysisEntry::Analysis(a) => RooflineConfig::for_analysis(model, a)
                    .map_err(|e| e.to_string())
                    .and_then(|cfg| classify(a, &cfg, cconfig).map_err(|e| e.to_string())),
                AnalysisEntry::Failed(f) => Err(f.error.clone()),
            };
            TableRow {
                kernel_name: kernel.to_string(),
                threads,
                outcome: match outcome {
                    Ok(c) => RowOutcome::Classified(c),
                    Err(e) => RowOutcome::Error(e),
                },
            }
        })
        .collect();
    ClassificationTable { rows }
}

pub fn events_text() -> String {
    let mut out = String::new();
    for e in events::registry() {
        let flag = if e.reliable { "" } else { "  [unreliable]" };
        let hex = format!("{:#x}", e.hexcode);
        out.push_str(&format!("{hex:<8}{:<20}{}{flag}\n", e.name, e.description));
        if !e.note.is_empty() {
            out.push_str(&format!("        note: {}\n", e.note));
        }
    }
    out
}

pub fn events_csv() -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["hexcode", "name", "description", "reliable", "note"])
        .expect("in-memory csv");
    for e in events::registry() {
        w.write_record([
            format!("{:#x}", e.hexcode),
            e.name.to_string(),
            e.description.to_string(),
            e.reliable.to_string(),
            e.note.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}
