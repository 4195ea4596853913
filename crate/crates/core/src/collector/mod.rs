//! Region-of-interest counter collection.
//!
//! A [`RoiSession`] follows `configured → counting ⇄ paused → stopped`.
//! Repeated start/stop pairs resume counting rather than resetting, so the
//! final record holds the sum over all windows. Three backends are provided:
//! hardware counters through `perf_event_open` (Linux only), replay of a
//! captured [`MeasurementRecord`], and a scripted synthetic backend that makes
//! every downstream stage testable without a PMU.

#[cfg(target_os = "linux")]
mod live;
mod record;
mod synthetic;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::machine::{EventSet, MachineError, PmuEvent};

pub use record::{
    load_measurements, load_measurements_file, to_document, MeasurementRecord, Variant,
    ELEMENT_WIDTHS,
};
pub use synthetic::{ScriptedWindow, SyntheticScript};

#[derive(Debug, Error)]
pub enum CollectorError {
    #[error(transparent)]
    Events(#[from] MachineError),
    #[error("permission denied: {0}")]
    Permission(String),
    #[error("hardware counters unavailable: {0}")]
    Capability(String),
    #[error("counter backend failure: {0}")]
    Backend(String),
    #[error("cannot {op} while session is {state}")]
    State { op: &'static str, state: SessionState },
    #[error("{}field `{field}`: {message}", record_prefix(.index))]
    Schema {
        index: Option<usize>,
        field: String,
        message: String,
    },
    #[error("invalid synthetic script: {0}")]
    Script(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn record_prefix(index: &Option<usize>) -> String {
    index.map(|i| format!("record {i}: ")).unwrap_or_default()
}

impl CollectorError {
    /// True when the failure means the live backend cannot be used on this host.
    pub fn is_backend_unavailable(&self) -> bool {
        matches!(self, Self::Permission(_) | Self::Capability(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Configured,
    Counting,
    Paused,
    Stopped,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionState::Configured => "configured",
            SessionState::Counting => "counting",
            SessionState::Paused => "paused",
            SessionState::Stopped => "stopped",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Live,
    Replay,
    Synthetic,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Live => "live",
            BackendKind::Replay => "replay",
            BackendKind::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiveOptions {
    /// Count threads spawned after the session is configured.
    pub inherit: bool,
    pub exclude_kernel: bool,
    /// Open the raw Arm hexcodes even on a non-Arm host. Only useful for
    /// exercising the syscall path; the counts are meaningless there.
    pub allow_foreign_arch: bool,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            inherit: true,
            exclude_kernel: true,
            allow_foreign_arch: false,
        }
    }
}

pub enum BackendSelector {
    Live(LiveOptions),
    Replay(MeasurementRecord),
    Synthetic(SyntheticScript),
}

/// Source of cumulative counter values for one event group.
pub trait CounterBackend: Send {
    fn kind(&self) -> BackendKind;
    fn enable(&mut self) -> Result<(), CollectorError>;
    fn disable(&mut self) -> Result<(), CollectorError>;
    /// Cumulative counts since configuration, in event-set order.
    fn read(&mut self) -> Result<Vec<u64>, CollectorError>;
    /// Duration of the window just closed, for backends that script time.
    fn window_time_ns(&mut self) -> Option<u64> {
        None
    }
    fn note_work(&mut self, _units: u64) {}
    /// A full record to hand back verbatim from `read_results`.
    fn replayed_record(&mut self) -> Option<MeasurementRecord> {
        None
    }
}

/// Metadata stamped onto records produced by a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordMeta {
    pub kernel_name: String,
    pub variant: Variant,
    pub threads: u32,
    pub elen_bits: u32,
    pub repetitions: u64,
}

impl Default for RecordMeta {
    fn default() -> Self {
        Self {
            kernel_name: "roi".into(),
            variant: Variant::Baseline,
            threads: 1,
            elen_bits: 64,
            repetitions: 1,
        }
    }
}

/// Counter deltas and duration of one start/stop window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowReading {
    pub counters: BTreeMap<String, u64>,
    pub wall_time_ns: u64,
}

pub struct RoiSession {
    events: EventSet,
    backend: Box<dyn CounterBackend>,
    state: SessionState,
    accumulated: Vec<u64>,
    wall_time_ns: u64,
    window_start: Option<Instant>,
    last_window: Option<WindowReading>,
    meta: RecordMeta,
}

/// Configures and initializes counters for `events` on the chosen backend.
pub fn configure_measure(
    events: &[&'static PmuEvent],
    backend: BackendSelector,
) -> Result<RoiSession, CollectorError> {
    RoiSession::configure(EventSet::new(events.to_vec())?, backend)
}

/// Probes whether the live backend can open the standard event group here.
pub fn live_available() -> Result<(), CollectorError> {
    RoiSession::configure(EventSet::standard(), BackendSelector::Live(LiveOptions::default()))
        .map(drop)
}

impl RoiSession {
    pub fn configure(events: EventSet, backend: BackendSelector) -> Result<Self, CollectorError> {
        let backend: Box<dyn CounterBackend> = match backend {
            BackendSelector::Synthetic(script) => {
                Box::new(synthetic::SyntheticBackend::new(&events, script)?)
            }
            BackendSelector::Replay(record) => {
                Box::new(synthetic::ReplayBackend::new(&events, record))
            }
            #[cfg(target_os = "linux")]
            BackendSelector::Live(opts) => Box::new(live::LiveBackend::open(&events, &opts)?),
            #[cfg(not(target_os = "linux"))]
            BackendSelector::Live(_) => {
                return Err(CollectorError::Capability(
                    "perf_event_open is only available on Linux".into(),
                ))
            }
        };
        Ok(Self::with_backend(events, backend))
    }

    pub fn with_backend(events: EventSet, backend: Box<dyn CounterBackend>) -> Self {
        Self {
            accumulated: vec![0; events.len()],
            events,
            backend,
            state: SessionState::Configured,
            wall_time_ns: 0,
            window_start: None,
            last_window: None,
            meta: RecordMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: RecordMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn set_meta(&mut self, meta: RecordMeta) {
        self.meta = meta;
    }

    pub fn meta(&self) -> &RecordMeta {
        &self.meta
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }

    pub fn events(&self) -> &EventSet {
        &self.events
    }

    pub fn wall_time_ns(&self) -> u64 {
        self.wall_time_ns
    }

    /// Accumulated counts over every closed window.
    pub fn accumulated(&self) -> BTreeMap<String, u64> {
        self.events
            .names()
            .map(str::to_string)
            .zip(self.accumulated.iter().copied())
            .collect()
    }

    pub fn last_window(&self) -> Option<&WindowReading> {
        self.last_window.as_ref()
    }

    /// Enables (or resumes) counting.
    pub fn start_measure(&mut self) -> Result<(), CollectorError> {
        match self.state {
            SessionState::Configured | SessionState::Paused => {}
            state => return Err(CollectorError::State { op: "start", state }),
        }
        self.backend.enable()?;
        self.window_start = Some(Instant::now());
        self.state = SessionState::Counting;
        Ok(())
    }

    /// Disables (pauses) counting; counts are kept for the next window.
    pub fn stop_measure(&mut self) -> Result<(), CollectorError> {
        if self.state != SessionState::Counting {
            return Err(CollectorError::State {
                op: "stop",
                state: self.state,
            });
        }
        self.backend.disable()?;
        let measured = self
            .window_start
            .take()
            .map_or(0, |t| t.elapsed().as_nanos() as u64);
        let elapsed = self.backend.window_time_ns().unwrap_or(measured);
        let now = self.backend.read()?;
        let counters = self
            .events
            .names()
            .zip(now.iter().zip(&self.accumulated))
            .map(|(name, (new, old))| (name.to_string(), new.saturating_sub(*old)))
            .collect();
        // Counters never run backwards within a session.
        for (acc, new) in self.accumulated.iter_mut().zip(now) {
            *acc = (*acc).max(new);
        }
        self.wall_time_ns = self.wall_time_ns.saturating_add(elapsed);
        self.last_window = Some(WindowReading {
            counters,
            wall_time_ns: elapsed,
        });
        self.state = SessionState::Paused;
        Ok(())
    }

    /// Tells scripted backends how many kernel invocations ran in the
    /// current window. Hardware backends ignore it.
    pub fn mark_work(&mut self, units: u64) {
        if self.state == SessionState::Counting {
            self.backend.note_work(units);
        }
    }

    /// Finalizes the session and returns the accumulated counts.
    ///
    /// Requires at least one completed start/stop window; the session is
    /// `stopped` afterwards and cannot be restarted.
    pub fn read_counts(&mut self) -> Result<WindowReading, CollectorError> {
        match self.state {
            SessionState::Paused | SessionState::Stopped => {}
            state => return Err(CollectorError::State { op: "read results", state }),
        }
        self.state = SessionState::Stopped;
        Ok(WindowReading {
            counters: self.accumulated(),
            wall_time_ns: self.wall_time_ns.max(1),
        })
    }

    /// Like [`read_counts`](Self::read_counts) but packaged as a validated
    /// [`MeasurementRecord`]; a replay backend returns its record verbatim.
    pub fn read_results(&mut self) -> Result<MeasurementRecord, CollectorError> {
        let counts = self.read_counts()?;
        if let Some(record) = self.backend.replayed_record() {
            return Ok(record);
        }
        let record = MeasurementRecord {
            kernel_name: self.meta.kernel_name.clone(),
            variant: self.meta.variant,
            threads: self.meta.threads,
            elen_bits: self.meta.elen_bits,
            repetitions: self.meta.repetitions,
            wall_time_ns: counts.wall_time_ns,
            counters: counts.counters,
        };
        record
            .validate()
            .map_err(|(field, message)| CollectorError::Schema {
                index: None,
                field: field.into(),
                message,
            })?;
        Ok(record)
    }
}
