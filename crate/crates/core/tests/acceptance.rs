//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vecscope::classifier::{classify, ClassifierConfig, PerfClass, RllcThreshold};
use vecscope::cli::{self, classify_entries, load_analysis_input, Cli};
use vecscope::collector::{
    self, configure_measure, BackendSelector, CollectorError, RoiSession, ScriptedWindow, SessionState,
    SyntheticScript,
};
use vecscope::machine::events::{self, CPU_CYCLES, INST_RETIRED, VFP_SPEC};
use vecscope::machine::{EventSet, MachineModel};
use vecscope::metrics::{vectorization_bound, Intensity, KernelAnalysis};
use vecscope::roofline::{Region, RooflineConfig};
use vecscope::workloads::{
    dense_oracle, generate_matrix, spmv_kernel, spmv_model_ai, CsrMatrix, MatrixPattern, SpmvParams,
};

type Outcome = Result<Option<String>, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

// Negated so that NaN comparisons fail.
macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !($cond) {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn c1_vectorization_bounds() -> Outcome {
    for (elen, want) in [(64, 2.0), (32, 4.0), (16, 8.0)] {
        let got = vectorization_bound(128, elen).map_err(|e| e.to_string())?;
        ensure!(got == want, "VB(128,{elen}) = {got}, want {want}");
    }
    Ok(None)
}

fn c2_inflection_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1000 {
        let max_threads = rng.random_range(1..=256);
        let bw1 = rng.random_range(1.0..100.0);
        let model = MachineModel {
            name: format!("cfg{i}"),
            vlen_bits: 128 << rng.random_range(0..5),
            freq_mhz: rng.random_range(500.0..5000.0),
            fpu_pipelines: rng.random_range(1..8),
            flops_per_pipeline_cycle: rng.random_range(1..4),
            bw_single_gbs: bw1,
            bw_peak_gbs: bw1 * rng.random_range(1.0..20.0),
            max_threads,
            cache_line_bytes: 64,
            llc_bytes: 1 << 25,
        };
        let elen = [16, 32, 64][rng.random_range(0..3)];
        let threads = rng.random_range(1..=max_threads);
        let cfg = RooflineConfig::new(model, elen, threads).map_err(|e| e.to_string())?;
        let expect = cfg.vb() * cfg.inflection_scalar();
        let got = cfg.inflection_vector();
        let ulps = (got.to_bits() as i64 - expect.to_bits() as i64).unsigned_abs();
        ensure!(ulps <= 1, "config {i}: AI_IRV {got} vs VB*AI_IRR {expect} ({ulps} ulp)");
    }
    Ok(Some("1000 configs".into()))
}

fn suite_entries() -> Result<Vec<cli::AnalysisEntry>, String> {
    let text = std::fs::read_to_string(fixture("suite_cases.json")).map_err(|e| e.to_string())?;
    load_analysis_input(&text, &MachineModel::grace()).map_err(|e| e.to_string())
}

fn c3_reference_suite() -> Outcome {
    #[derive(serde::Deserialize)]
    struct Expected {
        kernel_name: String,
        threads: u32,
        class_number: u8,
    }
    let entries = suite_entries()?;
    ensure!(entries.len() == 26, "{} analyses, want 26", entries.len());
    let table = classify_entries(&entries, &MachineModel::grace(), &ClassifierConfig::default());
    let expected: Vec<Expected> = serde_json::from_str(
        &std::fs::read_to_string(fixture("suite_expected.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure!(expected.len() == 26, "expected file has {} rows", expected.len());
    let mut mismatches = Vec::new();
    for e in &expected {
        let got = table
            .lookup(&e.kernel_name, e.threads)
            .and_then(|r| r.classification())
            .map(|c| c.class_number);
        if got != Some(e.class_number) {
            mismatches.push(format!("{}@{}t: got {got:?}, want {}", e.kernel_name, e.threads, e.class_number));
        }
    }
    ensure!(mismatches.is_empty(), "{}", mismatches.join("; "));
    Ok(Some("26/26 cells match".into()))
}

fn c4_roofline_regions() -> Outcome {
    let g = MachineModel::grace();
    let fp64 = RooflineConfig::new(g.clone(), 64, 1).map_err(|e| e.to_string())?;
    let fixture_ai = |name: &str| -> Result<Intensity, String> {
        suite_entries()?
            .into_iter()
            .filter_map(cli::AnalysisEntry::into_analysis)
            .find(|a| a.kernel_name == name && a.threads == 1)
            .and_then(|a| a.ai_est_flop_per_byte)
            .ok_or_else(|| format!("{name} missing from fixture"))
    };
    let stream = fixture_ai("STREAM")?;
    ensure!(stream == Intensity::Finite(0.0), "STREAM ai {stream}");
    ensure!(fp64.region(stream) == Region::MemoryBound, "STREAM not memory bound");
    let spmv = fixture_ai("SPMV")?;
    ensure!(fp64.region(spmv) == Region::MemoryBound, "SpMV fixture ({spmv}) not memory bound");

    let r1 = spmv_model_ai(1, 64);
    ensure!(fp64.region(Intensity::Finite(r1)) == Region::MemoryBound, "repeat=1 model ai {r1} not memory bound");
    let r20 = spmv_model_ai(20, 64);
    ensure!(
        fp64.region(Intensity::Finite(r20)) == Region::ComputeBound,
        "repeat=20 model ai {r20} not compute bound"
    );
    ensure!(
        fp64.region(Intensity::Finite(20.0)) == Region::ComputeBound,
        "ai=20 not compute bound"
    );
    let ratio = fp64.peak_vector() / fp64.peak_scalar();
    ensure!(ratio == 2.0, "FP64 vector/scalar roof ratio {ratio}");
    let fp32 = fp64.with_elen(32).map_err(|e| e.to_string())?;
    let ratio32 = fp32.peak_vector() / fp32.peak_scalar();
    ensure!(ratio32 == 4.0, "FP32 roof ratio {ratio32}");
    Ok(Some(format!("repeat=1 ai {r1:.3}, repeat=20 ai {r20:.3}, roof ratio 2")))
}

fn c5_spmv_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases = 0;
    for seed in 0..120u64 {
        let n = rng.random_range(1..=64);
        let density = rng.random_range(0.02..1.0);
        let a = generate_matrix(n, MatrixPattern::Random { density, seed }).map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for elen in [32, 64] {
            for repeat in [1, 3, 20] {
                let (y, tol, xr): (Vec<f64>, f64, Vec<f64>) = if elen == 64 {
                    let p = SpmvParams { repeat, elen_bits: 64, threads: 1 };
                    (spmv_kernel(&a, &x, p).map_err(|e| e.to_string())?, 1e-12, x.clone())
                } else {
                    let a32: CsrMatrix<f32> = a.convert();
                    let x32: Vec<f32> = x.iter().map(|v| *v as f32).collect();
                    let p = SpmvParams { repeat, elen_bits: 32, threads: 1 };
                    let y = spmv_kernel(&a32, &x32, p).map_err(|e| e.to_string())?;
                    (y.iter().map(|v| f64::from(*v)).collect(), 1e-5, x32.iter().map(|v| f64::from(*v)).collect())
                };
                let dense = if elen == 64 { a.to_dense() } else { a.convert::<f32>().to_dense() };
                let want = dense_oracle(&dense, &xr, repeat);
                for i in 0..n {
                    // Relative to the magnitude of the summed terms.
                    let mag = f64::from(repeat) * dense[i].iter().zip(&xr).map(|(v, w)| (v * w).abs()).sum::<f64>();
                    let err = (y[i] - want[i]).abs();
                    ensure!(
                        err <= tol * mag,
                        "seed {seed} n {n} elen {elen} repeat {repeat} row {i}: err {err:e} vs scale {mag:e}"
                    );
                }
                cases += 1;
            }
        }
    }
    Ok(Some(format!("{cases} (matrix, elen, repeat) cases")))
}

fn c6_classifier_properties() -> Outcome {
    let g = MachineModel::grace();
    let cc = ClassifierConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let run = |a: &KernelAnalysis| -> Result<PerfClass, String> {
        let cfg = RooflineConfig::for_analysis(&g, a).map_err(|e| e.to_string())?;
        classify(a, &cfg, &cc).map(|c| c.label).map_err(|e| e.to_string())
    };
    for i in 0..10_000 {
        let elen = if rng.random_bool(0.5) { 64 } else { 32 };
        let threads = rng.random_range(1..=72);
        let ai = if rng.random_bool(0.05) {
            Intensity::Unbounded
        } else {
            Intensity::Finite(rng.random_range(0.0..64.0))
        };
        let a = KernelAnalysis {
            kernel_name: format!("k{i}"),
            threads,
            elen_bits: elen,
            vb: f64::from(128 / elen),
            r_ins_reduction_sve: Some(rng.random_range(0.2..5.0)),
            r_ins_reduction_asimd: None,
            speedup_sve: None,
            speedup_asimd: None,
            ai_est_flop_per_byte: Some(ai),
            r_llc: Some(rng.random_range(0.0..1.0)),
        };
        let first = run(&a).map_err(|e| format!("totality, case {i}: {e}"))?;
        ensure!(first == run(&a)?, "determinism, case {i}");

        let mut higher = a.clone();
        higher.r_ins_reduction_sve = a.r_ins_reduction_sve.map(|r| r + rng.random_range(0.0..5.0));
        if first != PerfClass::NotVectorized {
            ensure!(run(&higher)? != PerfClass::NotVectorized, "monotone branch 1, case {i}");
        }

        let cut = cc.rllc_for(elen, 64);
        let (mut at, mut above) = (a.clone(), a.clone());
        at.r_llc = Some(cut);
        above.r_llc = Some(cut * (1.0 + 1e-9));
        let (l_at, l_above) = (run(&at)?, run(&above)?);
        if first.is_memory_bound() {
            ensure!(
                l_at == PerfClass::BandwidthBound && l_above == PerfClass::LatencyBound,
                "r_llc flip, case {i}: {l_at} / {l_above}"
            );
        } else {
            ensure!(l_at == first && l_above == first, "r_llc changed a non-memory label, case {i}");
        }
    }
    // A fixed cut moves the same boundary.
    let fixed = ClassifierConfig { rllc_threshold: RllcThreshold::Fixed(0.5), ..Default::default() };
    ensure!(fixed.validate().is_ok(), "fixed threshold rejected");
    Ok(Some("10000 analyses".into()))
}

fn c7_collector_state_machine() -> Outcome {
    let seven: Vec<_> = events::registry().iter().take(7).collect();
    match configure_measure(&seven, BackendSelector::Synthetic(SyntheticScript::from_pairs(&[], 1))) {
        Err(CollectorError::Events(e)) if e.to_string().contains("at most 6") => {}
        Err(e) => return Err(format!("7 events: unexpected error {e}")),
        Ok(_) => return Err("7 events accepted".into()),
    }

    let w = |i, c, t| ScriptedWindow {
        counters: [(INST_RETIRED.to_string(), i), (CPU_CYCLES.to_string(), c), (VFP_SPEC.to_string(), 3)].into(),
        wall_time_ns: t,
    };
    let script = SyntheticScript { windows: vec![w(100, 10, 5), w(7, 70, 9)] };
    let mut s = RoiSession::configure(EventSet::standard(), BackendSelector::Synthetic(script))
        .map_err(|e| e.to_string())?;
    ensure!(s.stop_measure().is_err(), "stop accepted before start");
    ensure!(s.read_results().is_err(), "read accepted before start");
    s.start_measure().map_err(|e| e.to_string())?;
    ensure!(s.start_measure().is_err(), "double start accepted");
    ensure!(s.read_results().is_err(), "read accepted while counting");
    s.stop_measure().map_err(|e| e.to_string())?;
    ensure!(s.stop_measure().is_err(), "double stop accepted");
    for _ in 0..2 {
        s.start_measure().map_err(|e| e.to_string())?;
        s.stop_measure().map_err(|e| e.to_string())?;
    }
    let rec = s.read_results().map_err(|e| e.to_string())?;
    ensure!(s.state() == SessionState::Stopped, "not stopped after read");
    ensure!(s.start_measure().is_err(), "restart after stop accepted");
    ensure!(rec.counter(INST_RETIRED) == Some(207), "INST_RETIRED {:?}", rec.counter(INST_RETIRED));
    ensure!(rec.counter(CPU_CYCLES) == Some(90), "CPU_CYCLES {:?}", rec.counter(CPU_CYCLES));
    ensure!(rec.counter(VFP_SPEC) == Some(9), "VFP_SPEC {:?}", rec.counter(VFP_SPEC));
    ensure!(rec.wall_time_ns == 19, "wall time {}", rec.wall_time_ns);
    Ok(None)
}

fn pipeline(dir: &Path) -> Result<Vec<Vec<u8>>, String> {
    let p = |name: &str| dir.join(name).display().to_string();
    let steps: [Vec<String>; 4] = [
        vec!["bench".into(), "-q".into(), "--threads".into(), "1,72".into(), "--out".into(), p("m.json")],
        vec!["analyze".into(), p("m.json"), "--format".into(), "csv".into(), "--out".into(), p("a.csv")],
        vec!["classify".into(), p("m.json"), "--format".into(), "csv".into(), "--out".into(), p("c.csv")],
        vec![
            "roofline".into(),
            p("m.json"),
            "--format".into(),
            "csv".into(),
            "--svg".into(),
            p("r.svg"),
            "--out".into(),
            p("r.csv"),
        ],
    ];
    for args in steps {
        let cli = Cli::try_parse_from(std::iter::once("vecscope".to_string()).chain(args.clone()))
            .map_err(|e| e.to_string())?;
        cli::run(&cli).map_err(|e| format!("{args:?}: {e}"))?;
    }
    ["m.json", "a.csv", "c.csv", "r.csv", "r.svg"]
        .iter()
        .map(|f| std::fs::read(dir.join(f)).map_err(|e| e.to_string()))
        .collect()
}

fn c8_pipeline_determinism() -> Outcome {
    let (d1, d2) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let first = pipeline(d1.path())?;
    let second = pipeline(d2.path())?;
    for (i, (a, b)) in first.iter().zip(&second).enumerate() {
        ensure!(a == b, "output {i} differs between runs");
        ensure!(!a.is_empty(), "output {i} empty");
    }
    let classes = String::from_utf8_lossy(&first[2]).lines().count() - 1;
    ensure!(classes == 2, "expected 2 classified rows, got {classes}");
    Ok(Some("bench, analyze, classify, roofline outputs byte-identical".into()))
}

#[cfg(target_arch = "aarch64")]
fn c9_live() -> Outcome {
    use vecscope::collector::{LiveOptions, MeasurementRecord};
    use vecscope::workloads::{run_instrumented, KernelSpec, MatrixSource};

    if let Err(e) = collector::live_available() {
        return Ok(Some(format!("SKIP: {e}")));
    }
    let live = || {
        RoiSession::configure(EventSet::standard(), BackendSelector::Live(LiveOptions::default()))
            .map_err(|e| e.to_string())
    };
    let count = |iters: u64| -> Result<f64, String> {
        let mut s = live()?;
        s.start_measure().map_err(|e| e.to_string())?;
        let mut acc = 0u64;
        for i in 0..iters {
            acc = std::hint::black_box(acc.wrapping_add(i));
        }
        s.stop_measure().map_err(|e| e.to_string())?;
        let r = s.read_counts().map_err(|e| e.to_string())?;
        Ok(r.counters[INST_RETIRED] as f64)
    };
    let (small, large) = (count(10_000_000)?, count(40_000_000)?);
    let ratio = large / small;
    ensure!((ratio - 4.0).abs() <= 0.2, "INST_RETIRED scaling {ratio:.3}, want 4 within 5%");

    let vfp = |repeat: u32| -> Result<f64, String> {
        let spec = KernelSpec::Spmv {
            matrix: MatrixSource::Generated { n: 2048, pattern: MatrixPattern::Random { density: 0.01, seed: 42 } },
            params: SpmvParams { repeat, ..Default::default() },
        };
        let mut k = spec.prepare().map_err(|e| e.to_string())?;
        let mut s = live()?;
        let run = run_instrumented(&mut k, collector::Variant::Baseline, &mut s).map_err(|e| e.to_string())?;
        let rec: MeasurementRecord = run.record;
        Ok(rec.counter(VFP_SPEC).unwrap_or(0) as f64)
    };
    let r = vfp(20)? / vfp(1)?;
    ensure!((r - 20.0).abs() <= 2.0, "VFP_SPEC ratio {r:.2}, want 20 within 10%");
    Ok(Some(format!("INST_RETIRED x{ratio:.3}, VFP_SPEC x{r:.2}")))
}

#[cfg(not(target_arch = "aarch64"))]
fn c9_live() -> Outcome {
    let why = collector::live_available()
        .err()
        .map_or_else(|| "non-Arm host".to_string(), |e| e.to_string());
    Ok(Some(format!("SKIP: {why}")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 vectorization bounds", Duration::from_secs(1), c1_vectorization_bounds),
        ("2 inflection identity", Duration::from_secs(1), c2_inflection_identity),
        ("3 reference suite classes", Duration::from_secs(1), c3_reference_suite),
        ("4 roofline regions", Duration::from_secs(1), c4_roofline_regions),
        ("5 SpMV oracle equivalence", Duration::from_secs(10), c5_spmv_oracle),
        ("6 classifier properties", Duration::from_secs(5), c6_classifier_properties),
        ("7 collector state machine", Duration::from_secs(1), c7_collector_state_machine),
        ("8 pipeline determinism", Duration::from_secs(5), c8_pipeline_determinism),
        ("9 live counters", Duration::from_secs(60), c9_live),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let t = Instant::now();
        let outcome = f();
        let took = t.elapsed();
        let outcome = match outcome {
            Ok(_) if took > budget => Err(format!("took {took:?}, budget {budget:?}")),
            o => o,
        };
        match outcome {
            Ok(Some(note)) if note.starts_with("SKIP") => println!("SKIP  criterion {name}: {}", &note[6..]),
            Ok(note) => println!(
                "PASS  criterion {name} ({:.0} ms){}",
                took.as_secs_f64() * 1e3,
                note.map(|n| format!(": {n}")).unwrap_or_default()
            ),
            Err(e) => {
                failed += 1;
                println!("FAIL  criterion {name}: {e}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
