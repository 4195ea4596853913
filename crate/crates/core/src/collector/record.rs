//! Measurement records and the JSON measurement document.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CollectorError;
use crate::machine::events::{CPU_CYCLES, INST_RETIRED};

/// Build flavour of the measured binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Scalar-only build, vectorization disabled.
    Baseline,
    /// Fixed 128-bit Advanced SIMD (NEON).
    Asimd,
    /// Scalable Vector Extension.
    Sve,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Baseline, Variant::Asimd, Variant::Sve];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Asimd => "asimd",
            Variant::Sve => "sve",
        }
    }

    pub fn is_vectorized(self) -> bool {
        self != Variant::Baseline
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" | "scalar" => Ok(Variant::Baseline),
            "asimd" | "neon" | "simd" => Ok(Variant::Asimd),
            "sve" => Ok(Variant::Sve),
            other => Err(format!("unknown variant `{other}` (baseline|asimd|sve)")),
        }
    }
}

pub const ELEMENT_WIDTHS: [u32; 3] = [16, 32, 64];

/// Counter values and wall time for one (kernel, variant, thread-count) run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementRecord {
    pub kernel_name: String,
    pub variant: Variant,
    pub threads: u32,
    /// Dominant element width of the kernel, bits.
    pub elen_bits: u32,
    /// Kernel invocations inside the region of interest.
    pub repetitions: u64,
    pub wall_time_ns: u64,
    pub counters: BTreeMap<String, u64>,
}

impl MeasurementRecord {
    pub fn counter(&self, name: &str) -> Option<u64> {
        self.counters.get(name).copied()
    }

    /// Checks field invariants, naming the first offending field.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.kernel_name.trim().is_empty() {
            return Err(("kernel_name", "must not be empty".into()));
        }
        if self.threads == 0 {
            return Err(("threads", "must be >= 1".into()));
        }
        if !ELEMENT_WIDTHS.contains(&self.elen_bits) {
            return Err((
                "elen_bits",
                format!("{} is not one of 16, 32, 64", self.elen_bits),
            ));
        }
        if self.repetitions == 0 {
            return Err(("repetitions", "must be >= 1".into()));
        }
        if self.wall_time_ns == 0 {
            return Err(("wall_time_ns", "must be > 0".into()));
        }
        for required in [INST_RETIRED, CPU_CYCLES] {
            if !self.counters.contains_key(required) {
                return Err(("counters", format!("missing required counter {required}")));
            }
        }
        Ok(())
    }
}

/// Parses and validates a measurement document (a JSON array of records).
pub fn load_measurements(source: &str) -> Result<Vec<MeasurementRecord>, CollectorError> {
    let doc: serde_json::Value = serde_json::from_str(source).map_err(|e| CollectorError::Schema {
        index: None,
        field: "document".into(),
        message: e.to_string(),
    })?;
    let items = doc.as_array().ok_or_else(|| CollectorError::Schema {
        index: None,
        field: "document".into(),
        message: "top level must be an array of records".into(),
    })?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let record: MeasurementRecord =
                serde_json::from_value(item.clone()).map_err(|e| CollectorError::Schema {
                    index: Some(index),
                    field: offending_field(&e.to_string()),
                    message: e.to_string(),
                })?;
            record
                .validate()
                .map_err(|(field, message)| CollectorError::Schema {
                    index: Some(index),
                    field: field.into(),
                    message,
                })?;
            Ok(record)
        })
        .collect()
}

pub fn load_measurements_file(path: &std::path::Path) -> Result<Vec<MeasurementRecord>, CollectorError> {
    let text = std::fs::read_to_string(path).map_err(|source| CollectorError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_measurements(&text)
}

pub fn to_document(records: &[MeasurementRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

// serde_json names the field in backticks for missing/unknown fields.
fn offending_field(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("record").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MeasurementRecord {
        MeasurementRecord {
            kernel_name: "spmv".into(),
            variant: Variant::Sve,
            threads: 1,
            elen_bits: 64,
            repetitions: 3,
            wall_time_ns: 1_000,
            counters: [(INST_RETIRED.to_string(), 10), (CPU_CYCLES.to_string(), 20)]
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn empty_document_is_empty() {
        assert!(load_measurements("[]").unwrap().is_empty());
    }

    #[test]
    fn one_record_round_trips() {
        let doc = to_document(&[sample()]);
        assert_eq!(load_measurements(&doc).unwrap(), vec![sample()]);
    }

    #[test]
    fn zero_wall_time_rejected_with_index() {
        let mut bad = sample();
        bad.wall_time_ns = 0;
        let doc = to_document(&[sample(), bad]);
        match load_measurements(&doc) {
            Err(CollectorError::Schema { index: Some(1), field, .. }) => {
                assert_eq!(field, "wall_time_ns")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_inst_retired_rejected() {
        let mut bad = sample();
        bad.counters.remove(INST_RETIRED);
        match load_measurements(&to_document(&[bad])) {
            Err(CollectorError::Schema { field, message, .. }) => {
                assert_eq!(field, "counters");
                assert!(message.contains(INST_RETIRED));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_field() {
        let doc = r#"[{"kernel_name":"k","variant":"sve","threads":1,"elen_bits":64,
            "repetitions":1,"counters":{"INST_RETIRED":1,"CPU_CYCLES":1}}]"#;
        match load_measurements(doc) {
            Err(CollectorError::Schema { index: Some(0), field, .. }) => {
                assert_eq!(field, "wall_time_ns")
            }
            other => panic!("{other:?}"),
        }
        let doc = doc.replace("\"sve\"", "\"avx\"");
        assert!(load_measurements(&doc).is_err());
        assert!(load_measurements("{}").is_err());
    }

    #[test]
    fn bad_element_width() {
        let mut bad = sample();
        bad.elen_bits = 8;
        assert_eq!(bad.validate().unwrap_err().0, "elen_bits");
    }
}
