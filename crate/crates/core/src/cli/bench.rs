use std::collections::BTreeMap;

use clap::ValueEnum;

use super::{read, BackendArg, BenchArgs, Cli, CliError};
use crate::collector::{
    load_measurements, BackendSelector, LiveOptions, MeasurementRecord, RoiSession, SyntheticScript, Variant,
    WindowReading,
};
use crate::machine::{EventSet, MachineModel};
use crate::workloads::{KernelSpec, MatrixPattern, MatrixSource, PreparedKernel, SpmvParams, StreamOp};

pub const MIN_WINDOWS: u32 = 5;
pub const MAX_REL_STDDEV: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    Spmv,
    Stream,
}

#[derive(Debug, Clone)]
pub enum BenchBackend {
    /// Scripted counters; `None` derives a script from the cost model.
    Synthetic(Option<SyntheticScript>),
    Live(LiveOptions),
    Replay(Vec<MeasurementRecord>),
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub kernel: KernelSpec,
    pub threads: Vec<u32>,
    pub variants: Vec<Variant>,
    pub windows: u32,
    pub min_roi_ns: u64,
    pub events: EventSet,
    pub backend: BenchBackend,
}

impl BenchPlan {
    pub fn from_args(args: &BenchArgs, cli: &Cli) -> Result<Self, CliError> {
        let kernel = match args.kernel {
            KernelChoice::Spmv => KernelSpec::Spmv {
                matrix: match &args.matrix {
                    Some(p) => MatrixSource::File(p.clone()),
                    None => MatrixSource::Generated {
                        n: args.n.unwrap_or(2048),
                        pattern: MatrixPattern::Random {
                            density: args.density,
                            seed: args.seed,
                        },
                    },
                },
                params: SpmvParams {
                    repeat: args.repeat,
                    elen_bits: args.elen,
                    threads: 1,
                },
            },
            KernelChoice::Stream => KernelSpec::Stream {
                n: args.n.unwrap_or(1 << 20),
                elen_bits: args.elen,
                op: args.op,
                threads: 1,
            },
        };
        let events = if args.events.is_empty() {
            EventSet::standard()
        } else {
            EventSet::from_specs(&args.events).map_err(super::input)?
        };
        let backend = match cli.backend {
            BackendArg::Synthetic => BenchBackend::Synthetic(match &args.script {
                Some(p) => Some(SyntheticScript::from_json(&read(p)?)?),
                None => None,
            }),
            BackendArg::Live => BenchBackend::Live(LiveOptions::default()),
            BackendArg::Replay => {
                let path = args
                    .replay
                    .as_ref()
                    .ok_or_else(|| CliError::Input("--backend replay needs --replay <file>".into()))?;
                BenchBackend::Replay(load_measurements(&read(path)?)?)
            }
        };
        let plan = Self {
            kernel,
            threads: cli.threads.clone(),
            variants: args.variants.clone(),
            windows: args.windows,
            min_roi_ns: args.min_roi_ms.saturating_mul(1_000_000),
            events,
            backend,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.windows < MIN_WINDOWS {
            return Err(CliError::Input(format!(
                "--windows must be at least {MIN_WINDOWS}, got {}",
                self.windows
            )));
        }
        if self.variants.is_empty() {
            return Err(CliError::Input("no variants selected".into()));
        }
        if self.threads.is_empty() {
            return Err(CliError::Input("no thread counts selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub records: Vec<MeasurementRecord>,
    pub warnings: Vec<String>,
    pub summary: Vec<String>,
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        v[m - 1] / 2 + v[m] / 2 + (v[m - 1] % 2 + v[m] % 2) / 2
    }
}

fn rel_stddev(v: &[u64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().map(|x| *x as f64).sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = v.iter().map(|x| (*x as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

fn session(
    plan: &BenchPlan,
    kernel: &PreparedKernel,
    variant: Variant,
    model: &MachineModel,
) -> Result<RoiSession, CliError> {
    let selector = match &plan.backend {
        BenchBackend::Synthetic(Some(s)) => BackendSelector::Synthetic(s.clone()),
        BenchBackend::Synthetic(None) => BackendSelector::Synthetic(kernel.profile(variant, model)?.script()),
        BenchBackend::Live(o) => BackendSelector::Live(*o),
        BenchBackend::Replay(_) => unreachable!("replay handled separately"),
    };
    Ok(RoiSession::configure(plan.events.clone(), selector)?)
}

/// Grows the inner repetition count until one window lasts `min_roi_ns`.
fn calibrate(
    plan: &BenchPlan,
    kernel: &mut PreparedKernel,
    variant: Variant,
    model: &MachineModel,
) -> Result<u64, CliError> {
    let mut inner: u64 = 1;
    for _ in 0..64 {
        let mut s = session(plan, kernel, variant, model)?;
        kernel.measure_window(&mut s, inner)?;
        let t = s.last_window().map_or(0, |w| w.wall_time_ns).max(1);
        if t >= plan.min_roi_ns {
            return Ok(inner);
        }
        let factor = (plan.min_roi_ns as f64 * 1.1 / t as f64).ceil().max(2.0);
        inner = inner.saturating_mul(factor as u64);
    }
    Err(CliError::Input("could not reach the minimum ROI duration".into()))
}

fn bench_one(
    plan: &BenchPlan,
    kernel: &mut PreparedKernel,
    variant: Variant,
    model: &MachineModel,
    out: &mut BenchOutcome,
) -> Result<(), CliError> {
    let inner = calibrate(plan, kernel, variant, model)?;
    let mut s = session(plan, kernel, variant, model)?;
    let meta = kernel.meta(variant, inner);
    s.set_meta(meta.clone());

    let mut windows: Vec<WindowReading> = Vec::new();
    let mut checksums = Vec::new();
    for _ in 0..plan.windows {
        checksums.push(kernel.measure_window(&mut s, inner)?);
        windows.push(s.last_window().expect("window just closed").clone());
    }
    s.read_counts()?;

    let tag = format!("{} {} {}t", meta.kernel_name, variant, meta.threads);
    let times: Vec<u64> = windows.iter().map(|w| w.wall_time_ns).collect();
    let mut series: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for w in &windows {
        for (k, v) in &w.counters {
            series.entry(k.clone()).or_default().push(*v);
        }
    }
    for (name, values) in std::iter::once(("wall_time_ns", &times)).chain(series.iter().map(|(k, v)| (k.as_str(), v))) {
        let rsd = rel_stddev(values);
        if rsd > MAX_REL_STDDEV {
            out.warnings.push(format!(
                "{tag}: relative std dev of {name} is {:.1}% (> {:.0}%)",
                rsd * 100.0,
                MAX_REL_STDDEV * 100.0
            ));
        }
    }
    if checksums.windows(2).any(|w| w[0].to_bits() != w[1].to_bits()) {
        out.warnings.push(format!("{tag}: checksum differs between windows"));
    }

    let record = MeasurementRecord {
        kernel_name: meta.kernel_name,
        variant,
        threads: meta.threads,
        elen_bits: meta.elen_bits,
        repetitions: inner,
        wall_time_ns: median(times),
        counters: series.into_iter().map(|(k, v)| (k, median(v))).collect(),
    };
    record
        .validate()
        .map_err(|(field, msg)| CliError::Input(format!("{tag}: field `{field}`: {msg}")))?;
    out.summary.push(format!(
        "{tag}: {} windows x {inner} reps, median ROI {:.3} ms, checksum {}",
        plan.windows,
        record.wall_time_ns as f64 / 1e6,
        checksums[0]
    ));
    out.records.push(record);
    Ok(())
}

/// Runs every (threads, variant) combination of the plan.
///
/// Each combination is calibrated so a window lasts at least
/// `min_roi_ns`, then measured over `windows` windows; the record holds
/// per-window medians.
pub fn bench(plan: &BenchPlan, model: &MachineModel) -> Result<BenchOutcome, CliError> {
    plan.validate()?;
    let mut out = BenchOutcome::default();
    if let BenchBackend::Replay(records) = &plan.backend {
        for rec in records {
            let mut s = RoiSession::configure(plan.events.clone(), BackendSelector::Replay(rec.clone()))?;
            s.start_measure()?;
            s.stop_measure()?;
            out.records.push(s.read_results()?);
        }
        out.summary.push(format!("replayed {} records", out.records.len()));
        return Ok(out);
    }
    for &t in &plan.threads {
        let mut kernel = plan.kernel.with_threads(t).prepare()?;
        for &variant in &plan.variants {
            bench_one(plan, &mut kernel, variant, model, &mut out)?;
        }
    }
    Ok(out)
}

impl KernelChoice {
    pub fn default_op() -> StreamOp {
        StreamOp::Copy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::events::{CPU_CYCLES, INST_RETIRED};
    use crate::workloads::MatrixPattern;

    fn plan(backend: BenchBackend, min_roi_ns: u64) -> BenchPlan {
        BenchPlan {
            kernel: KernelSpec::Spmv {
                matrix: MatrixSource::Generated {
                    n: 64,
                    pattern: MatrixPattern::Random { density: 0.1, seed: 1 },
                },
                params: SpmvParams::default(),
            },
            threads: vec![1],
            variants: vec![Variant::Baseline, Variant::Sve],
            windows: 5,
            min_roi_ns,
            events: EventSet::standard(),
            backend,
        }
    }

    #[test]
    fn medians() {
        assert_eq!(median(vec![3, 1, 2]), 2);
        assert_eq!(median(vec![4, 1, 2, 3]), 2);
        assert_eq!(median(vec![u64::MAX, u64::MAX]), u64::MAX);
        assert_eq!(rel_stddev(&[5, 5, 5]), 0.0);
    }

    #[test]
    fn auto_scales_to_min_roi() {
        let script = SyntheticScript::from_pairs(&[(INST_RETIRED, 10), (CPU_CYCLES, 10)], 1_000);
        let out = bench(&plan(BenchBackend::Synthetic(Some(script)), 100_000_000), &MachineModel::grace()).unwrap();
        assert_eq!(out.records.len(), 2);
        for r in &out.records {
            assert!(r.wall_time_ns >= 100_000_000);
            assert!(r.repetitions >= 100_000);
            assert_eq!(r.counter(INST_RETIRED), Some(10 * r.repetitions));
        }
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn noisy_script_warns() {
        let w = |t| crate::collector::ScriptedWindow {
            counters: [(INST_RETIRED.to_string(), 100), (CPU_CYCLES.to_string(), 100)].into(),
            wall_time_ns: t,
        };
        // Pilot consumes the first window; measured windows see 90/110 alternating.
        let script = SyntheticScript {
            windows: vec![w(200), w(90), w(110)],
        };
        let out = bench(&plan(BenchBackend::Synthetic(Some(script)), 1), &MachineModel::grace()).unwrap();
        assert!(out.warnings.iter().any(|w| w.contains("wall_time_ns")), "{:?}", out.warnings);
    }

    #[test]
    fn too_few_windows() {
        let mut p = plan(BenchBackend::Synthetic(None), 1);
        p.windows = 4;
        assert!(bench(&p, &MachineModel::grace()).is_err());
    }
}
