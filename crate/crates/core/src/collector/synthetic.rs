//! Deterministic scripted backend and the replay backend.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BackendKind, CollectorError, CounterBackend, MeasurementRecord};
use crate::machine::EventSet;

/// Counter increments and wall time for one start/stop window, per unit of
/// work (see [`RoiSession::mark_work`](super::RoiSession::mark_work)).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedWindow {
    pub counters: BTreeMap<String, u64>,
    pub wall_time_ns: u64,
}

/// Windows are consumed in order and cycle once exhausted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScript {
    pub windows: Vec<ScriptedWindow>,
}

impl SyntheticScript {
    pub fn constant(counters: BTreeMap<String, u64>, wall_time_ns: u64) -> Self {
        Self {
            windows: vec![ScriptedWindow {
                counters,
                wall_time_ns,
            }],
        }
    }

    pub fn from_pairs(pairs: &[(&str, u64)], wall_time_ns: u64) -> Self {
        Self::constant(
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            wall_time_ns,
        )
    }

    pub fn validate(&self) -> Result<(), CollectorError> {
        if self.windows.is_empty() {
            return Err(CollectorError::Script("script has no windows".into()));
        }
        if let Some(i) = self.windows.iter().position(|w| w.wall_time_ns == 0) {
            return Err(CollectorError::Script(format!(
                "window {i} has zero wall time"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CollectorError> {
        let script: Self = serde_json::from_str(text).map_err(|e| CollectorError::Script(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }
}

pub(crate) struct SyntheticBackend {
    names: Vec<&'static str>,
    script: SyntheticScript,
    next_window: usize,
    totals: Vec<u64>,
    units: Option<u64>,
    closed_time_ns: Option<u64>,
}

impl SyntheticBackend {
    pub(crate) fn new(events: &EventSet, script: SyntheticScript) -> Result<Self, CollectorError> {
        script.validate()?;
        Ok(Self {
            names: events.names().collect(),
            totals: vec![0; events.len()],
            script,
            next_window: 0,
            units: None,
            closed_time_ns: None,
        })
    }
}

impl CounterBackend for SyntheticBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Synthetic
    }

    fn enable(&mut self) -> Result<(), CollectorError> {
        self.units = None;
        Ok(())
    }

    fn disable(&mut self) -> Result<(), CollectorError> {
        let window = &self.script.windows[self.next_window % self.script.windows.len()];
        self.next_window += 1;
        let units = self.units.take().unwrap_or(1);
        for (total, name) in self.totals.iter_mut().zip(&self.names) {
            let inc = window.counters.get(*name).copied().unwrap_or(0);
            *total = total.saturating_add(inc.saturating_mul(units));
        }
        self.closed_time_ns = Some(window.wall_time_ns.saturating_mul(units));
        Ok(())
    }

    fn read(&mut self) -> Result<Vec<u64>, CollectorError> {
        Ok(self.totals.clone())
    }

    fn window_time_ns(&mut self) -> Option<u64> {
        self.closed_time_ns.take()
    }

    fn note_work(&mut self, units: u64) {
        *self.units.get_or_insert(0) += units;
    }
}

/// Serves one previously captured record.
pub(crate) struct ReplayBackend {
    record: MeasurementRecord,
    counts: Vec<u64>,
    time_pending: bool,
}

impl ReplayBackend {
    pub(crate) fn new(events: &EventSet, record: MeasurementRecord) -> Self {
        let counts = events.names().map(|n| record.counter(n).unwrap_or(0)).collect();
        Self {
            record,
            counts,
            time_pending: true,
        }
    }
}

impl CounterBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn enable(&mut self) -> Result<(), CollectorError> {
        Ok(())
    }

    fn disable(&mut self) -> Result<(), CollectorError> {
        Ok(())
    }

    fn read(&mut self) -> Result<Vec<u64>, CollectorError> {
        Ok(self.counts.clone())
    }

    fn window_time_ns(&mut self) -> Option<u64> {
        if std::mem::take(&mut self.time_pending) {
            Some(self.record.wall_time_ns)
        } else {
            Some(0)
        }
    }

    fn replayed_record(&mut self) -> Option<MeasurementRecord> {
        Some(self.record.clone())
    }
}
