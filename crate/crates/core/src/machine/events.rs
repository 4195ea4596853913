//! Registry of ARM PMU raw events and bounded event groups.
//!
//! Hexcodes are ARMv8/ARMv9 PMU common-event numbers as programmed through
//! `PERF_TYPE_RAW`. Events that were found to be noisy or semantically
//! misleading stay registered with `reliable = false` so that callers can be
//! warned instead of silently failing a lookup.

use std::fmt;

use serde::Serialize;

use super::MachineError;

/// Hardware limit on simultaneously scheduled counters on Neoverse V2.
pub const MAX_GROUP_EVENTS: usize = 6;

/// One raw PMU event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PmuEvent {
    pub hexcode: u64,
    pub name: &'static str,
    pub description: &'static str,
    pub reliable: bool,
    /// Why the event should (not) be trusted.
    pub note: &'static str,
}

impl fmt::Display for PmuEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:#x})", self.name, self.hexcode)
    }
}

pub const INST_RETIRED: &str = "INST_RETIRED";
pub const LL_CACHE_MISS_RD: &str = "LL_CACHE_MISS_RD";
pub const MEM_ACCESS_RD: &str = "MEM_ACCESS_RD";
pub const STALL_BACKEND: &str = "STALL_BACKEND";
pub const CPU_CYCLES: &str = "CPU_CYCLES";
pub const VFP_SPEC: &str = "VFP_SPEC";

static REGISTRY: &[PmuEvent] = &[
    PmuEvent {
        hexcode: 0x08,
        name: INST_RETIRED,
        description: "Instruction architecturally executed",
        reliable: true,
        note: "retired count, unaffected by speculation",
    },
    PmuEvent {
        hexcode: 0x37,
        name: LL_CACHE_MISS_RD,
        description: "Last level cache read miss",
        reliable: true,
        note: "excludes prefetch traffic counted by memory accesses",
    },
    PmuEvent {
        hexcode: 0x66,
        name: MEM_ACCESS_RD,
        description: "Data memory access, read (load)",
        reliable: true,
        note: "",
    },
    PmuEvent {
        hexcode: 0x24,
        name: STALL_BACKEND,
        description: "Cycles with no operation issued due to backend stall",
        reliable: true,
        note: "",
    },
    PmuEvent {
        hexcode: 0x11,
        name: CPU_CYCLES,
        description: "Cycles",
        reliable: true,
        note: "",
    },
    PmuEvent {
        hexcode: 0x75,
        name: VFP_SPEC,
        description: "Floating-point operation speculatively executed",
        reliable: true,
        note: "one scalar FP instruction counts as one FP op",
    },
    PmuEvent {
        hexcode: 0x4005,
        name: "STALL_BACKEND_MEM",
        description: "Backend stall cycles due to memory resources",
        reliable: false,
        note: "high run-to-run variance; slot-based accounting blurs the stall cause",
    },
    PmuEvent {
        hexcode: 0x400B,
        name: "L3D_CACHE_LMISS_RD",
        description: "L3 cache long-latency read miss",
        reliable: false,
        note: "always identical to plain L3 read misses on Neoverse V2",
    },
    PmuEvent {
        hexcode: 0x8006,
        name: "SVE_INST_SPEC",
        description: "SVE instruction speculatively executed",
        reliable: false,
        note: "counts predicated SVE instructions only; unpredicated ones such as ADD z1, z2, z3 are missed",
    },
];

/// Every registered event, standard set first.
pub fn registry() -> &'static [PmuEvent] {
    REGISTRY
}

pub fn by_name(name: &str) -> Option<&'static PmuEvent> {
    REGISTRY.iter().find(|e| e.name.eq_ignore_ascii_case(name))
}

pub fn by_hexcode(hexcode: u64) -> Option<&'static PmuEvent> {
    REGISTRY.iter().find(|e| e.hexcode == hexcode)
}

/// Resolve `NAME` or a `0x..` hexcode.
pub fn lookup(spec: &str) -> Result<&'static PmuEvent, MachineError> {
    let spec = spec.trim();
    let found = match spec.strip_prefix("0x").or_else(|| spec.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok().and_then(by_hexcode),
        None => by_name(spec),
    };
    found.ok_or_else(|| MachineError::UnknownEvent(spec.to_string()))
}

/// An ordered group of 1..=6 distinct events scheduled together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSet {
    events: Vec<&'static PmuEvent>,
}

impl EventSet {
    pub fn new(events: Vec<&'static PmuEvent>) -> Result<Self, MachineError> {
        if events.is_empty() {
            return Err(MachineError::EmptyEventSet);
        }
        if events.len() > MAX_GROUP_EVENTS {
            return Err(MachineError::TooManyEvents {
                requested: events.len(),
                limit: MAX_GROUP_EVENTS,
            });
        }
        for (i, e) in events.iter().enumerate() {
            if events[..i].iter().any(|o| o.hexcode == e.hexcode) {
                return Err(MachineError::DuplicateEvent(e.name.to_string()));
            }
        }
        Ok(Self { events })
    }

    /// Builds a set from names or hexcodes.
    pub fn from_specs<S: AsRef<str>>(specs: &[S]) -> Result<Self, MachineError> {
        let events = specs
            .iter()
            .map(|s| lookup(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(events)
    }

    /// The six-event profiling set used for every metric in this crate.
    pub fn standard() -> Self {
        Self {
            events: REGISTRY[..MAX_GROUP_EVENTS].iter().collect(),
        }
    }

    pub fn events(&self) -> &[&'static PmuEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.events.iter().map(|e| e.name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.events.iter().any(|e| e.name == name)
    }

    /// Events in the set flagged as unreliable.
    pub fn unreliable(&self) -> Vec<&'static PmuEvent> {
        self.events.iter().copied().filter(|e| !e.reliable).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_events_resolve_to_table_names() {
        let expected = [
            (0x8, "INST_RETIRED"),
            (0x37, "LL_CACHE_MISS_RD"),
            (0x66, "MEM_ACCESS_RD"),
            (0x24, "STALL_BACKEND"),
            (0x11, "CPU_CYCLES"),
            (0x75, "VFP_SPEC"),
        ];
        for (hex, name) in expected {
            let e = by_hexcode(hex).unwrap();
            assert_eq!(e.name, name);
            assert!(e.reliable);
        }
        let std: Vec<_> = EventSet::standard().names().collect();
        assert_eq!(std, expected.map(|(_, n)| n));
    }

    #[test]
    fn hexcodes_unique() {
        for (i, e) in REGISTRY.iter().enumerate() {
            assert!(REGISTRY[i + 1..].iter().all(|o| o.hexcode != e.hexcode));
        }
    }

    #[test]
    fn unreliable_events_flagged() {
        for name in ["STALL_BACKEND_MEM", "L3D_CACHE_LMISS_RD", "SVE_INST_SPEC"] {
            assert!(!by_name(name).unwrap().reliable, "{name}");
        }
        let set = EventSet::from_specs(&["INST_RETIRED", "sve_inst_spec"]).unwrap();
        assert_eq!(set.unreliable().len(), 1);
    }

    #[test]
    fn lookup_by_hex_and_name() {
        assert_eq!(lookup("0x75").unwrap().name, VFP_SPEC);
        assert_eq!(lookup("cpu_cycles").unwrap().hexcode, 0x11);
        assert!(matches!(lookup("0xdead"), Err(MachineError::UnknownEvent(_))));
    }

    #[test]
    fn set_bounds() {
        assert!(matches!(EventSet::new(vec![]), Err(MachineError::EmptyEventSet)));
        let seven: Vec<_> = REGISTRY.iter().take(7).collect();
        match EventSet::new(seven) {
            Err(MachineError::TooManyEvents { requested: 7, limit: 6 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            EventSet::from_specs(&["INST_RETIRED", "0x8"]),
            Err(MachineError::DuplicateEvent(_))
        ));
    }
}
