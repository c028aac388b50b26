use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use svsim_core::bench::{self, CsvRow, ScalingConfig};
use svsim_core::engine::{bitstring, Engine, SampleResult};
use svsim_core::memory::ScriptedTrace;
use svsim_core::noise::{correct_outcome_probability, DEFAULT_QUBIT_CAP};
use svsim_core::optimize::{DEFAULT_FUSE_WIDTH, MAX_FUSE_WIDTH};
use svsim_core::pipeline::{
    host_feasible, run_pipeline, EngineChoice, MemoryMode, PipelineError, PrecisionChoice, RunOptions,
};
use svsim_core::precision::DEFAULT_PRECISION_TOLERANCE;
use svsim_core::qasm::{self, SourceFormat};
use svsim_core::selector::{select, BenchmarkConfig, SelectionCache};
use svsim_core::{run_circuit, Circuit, EngineRegistry, Precision};

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "svsim", version, about = "State-vector quantum circuit simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Engine name, or `auto` to benchmark and pick.
    #[arg(long, global = true, default_value = "auto")]
    engine: String,
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Auto)]
    precision: PrecisionArg,
    /// Error budget for choosing single precision.
    #[arg(long, global = true, default_value_t = DEFAULT_PRECISION_TOLERANCE)]
    precision_tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_FUSE_WIDTH)]
    fuse_width: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// CSV of `t_seconds,available_bytes` simulating the primary engine's memory.
    #[arg(long, global = true)]
    memory_trace: Option<PathBuf>,
    /// Safety margin, e.g. `512MiB` or `1GiB`.
    #[arg(long, global = true, default_value = "512MiB", value_parser = parse_bytes)]
    memory_reserve: u64,
    /// Seconds the fallback trigger extrapolates ahead.
    #[arg(long, global = true, default_value_t = 1.0)]
    memory_horizon: f64,
    /// Skip the host memory check.
    #[arg(long, global = true)]
    no_memory_check: bool,
    /// Gate pairs per engine benchmark.
    #[arg(long, global = true, default_value_t = BenchmarkConfig::default().bench_gate_pairs)]
    bench_gates: usize,
    #[arg(long, global = true, default_value_t = BenchmarkConfig::default().max_bench_qubits)]
    bench_max_qubits: usize,
    /// Selection cache lifetime in seconds.
    #[arg(long, global = true, default_value_t = BenchmarkConfig::default().cache_ttl.as_secs_f64())]
    cache_ttl: f64,
    /// Zero every timing field so output is reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PrecisionArg {
    Auto,
    Single,
    Double,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum InputFormat {
    Qasm,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a circuit and print a JSON run report.
    Run {
        circuit: PathBuf,
        #[arg(long)]
        no_fuse: bool,
        #[arg(long, default_value_t = 0)]
        shots: u64,
        /// Overrides detection from the file extension.
        #[arg(long, value_enum)]
        input_format: Option<InputFormat>,
        /// Write final amplitudes as JSON `[[re, im], ...]`.
        #[arg(long)]
        state_out: Option<PathBuf>,
        /// Skip the comparison against the reference engine.
        #[arg(long)]
        no_reference: bool,
    },
    /// Median run time per width and engine on random single-qubit circuits.
    BenchScaling {
        #[arg(long, value_delimiter = ',', default_value = "10,12,14")]
        qubits: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        gates_per_qubit: usize,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        /// Engines to time; all registered engines by default.
        #[arg(long, value_delimiter = ',')]
        engines: Vec<String>,
    },
    /// Depth and time before and after fusion.
    BenchFusion {
        /// Circuit files; the built-in suite is used when none are given.
        circuits: Vec<PathBuf>,
        /// Width of the built-in suite.
        #[arg(long, default_value_t = 20)]
        qubits: usize,
    },
    /// Output-distribution fidelity and TVD under depolarizing noise.
    NoiseCompare {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        widths: Vec<usize>,
        #[arg(long = "p", value_delimiter = ',', default_value = "0,0.01")]
        p: Vec<f64>,
        #[arg(long, default_value_t = 4096)]
        shots: u64,
        #[arg(long, default_value_t = DEFAULT_QUBIT_CAP)]
        qubit_cap: usize,
    },
    /// Fraction of measured shots inside the ideal support.
    AnalyzeCounts {
        /// JSON `{"bitstring": count, ...}` or `{"shots": N, "counts": {...}}`.
        counts: PathBuf,
        /// Comma-separated ideal bitstrings.
        #[arg(long, value_delimiter = ',', required_unless_present = "ideal", conflicts_with = "ideal")]
        support: Vec<String>,
        /// Circuit whose nonzero-probability outcomes form the support.
        #[arg(long)]
        ideal: Option<PathBuf>,
    },
    /// Benchmark the engines on a circuit and report the choice.
    SelectEngine { circuit: PathBuf },
}

fn parse_bytes(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num.parse().map_err(|_| format!("bad size `{s}`"))?;
    let scale = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1u64,
        "k" | "kib" => 1 << 10,
        "m" | "mib" => 1 << 20,
        "g" | "gib" => 1 << 30,
        "t" | "tib" => 1 << 40,
        "kb" => 1_000,
        "mb" => 1_000_000,
        "gb" => 1_000_000_000,
        _ => return Err(format!("unknown unit in `{s}`")),
    };
    Ok((value * scale as f64) as u64)
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Parse(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Parse(_) => EXIT_PARSE,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Parse(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if let PipelineError::Invalid(_) = e {
            Failure::Parse(e.to_string())
        } else if e.is_infeasible() {
            Failure::Infeasible(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_circuit(path: &Path, format: Option<InputFormat>) -> Result<Circuit, Failure> {
    let text = read(path)?;
    let format = match format {
        Some(InputFormat::Qasm) => SourceFormat::Qasm2,
        Some(InputFormat::Json) => SourceFormat::Json,
        None => SourceFormat::from_path(path),
    };
    let mut circuit = qasm::parse(&text, format).map_err(|errors| {
        Failure::Parse(
            errors
                .iter()
                .map(|e| format!("{}:{e}", path.display()))
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })?;
    if circuit.name.is_empty() {
        circuit.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(circuit)
}

fn emit(global: &Global, text: &str) -> Result<(), Failure> {
    match &global.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table<R: CsvRow + serde::Serialize>(global: &Global, mut rows: Vec<R>) -> Result<(), Failure> {
    if global.no_timing {
        rows.iter_mut().for_each(CsvRow::zero_timing);
    }
    let text = match global.format {
        Format::Csv => bench::to_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    emit(global, &text)
}

fn bench_config(global: &Global) -> Result<BenchmarkConfig, Failure> {
    if !(global.cache_ttl >= 0.0 && global.cache_ttl.is_finite()) {
        return Err(Failure::Usage(format!("--cache-ttl must be a non-negative number, got {}", global.cache_ttl)));
    }
    Ok(BenchmarkConfig {
        bench_gate_pairs: global.bench_gates.max(1),
        max_bench_qubits: global.bench_max_qubits.max(1),
        cache_ttl: Duration::from_secs_f64(global.cache_ttl),
        ..BenchmarkConfig::default()
    })
}

fn run_options(global: &Global) -> Result<RunOptions, Failure> {
    let memory = match &global.memory_trace {
        Some(path) => MemoryMode::Scripted(
            ScriptedTrace::from_file(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        ),
        None if global.no_memory_check => MemoryMode::Off,
        None => MemoryMode::Host,
    };
    Ok(RunOptions {
        fuse_width: global.fuse_width,
        precision: match global.precision {
            PrecisionArg::Auto => PrecisionChoice::Auto,
            PrecisionArg::Single => PrecisionChoice::Fixed(Precision::Single),
            PrecisionArg::Double => PrecisionChoice::Fixed(Precision::Double),
        },
        precision_tol: global.precision_tol,
        engine: match global.engine.as_str() {
            "auto" => EngineChoice::Auto,
            name => EngineChoice::Named(name.to_string()),
        },
        bench: bench_config(global)?,
        seed: global.seed,
        memory,
        memory_reserve: global.memory_reserve,
        memory_horizon: global.memory_horizon,
        ..RunOptions::default()
    })
}

fn fixed_precision(global: &Global) -> Precision {
    match global.precision {
        PrecisionArg::Single => Precision::Single,
        _ => Precision::Double,
    }
}

fn cmd_run(
    global: &Global,
    path: &Path,
    no_fuse: bool,
    shots: u64,
    input_format: Option<InputFormat>,
    state_out: Option<&Path>,
    no_reference: bool,
) -> Result<(), Failure> {
    let t = Instant::now();
    let circuit = load_circuit(path, input_format)?;
    let parse_s = t.elapsed().as_secs_f64();
    let mut options = run_options(global)?;
    options.fuse = !no_fuse;
    options.shots = shots;
    if no_reference {
        options.compare_reference = Some(false);
    }
    let registry = EngineRegistry::standard();
    let cache = SelectionCache::new(options.bench.cache_ttl);
    let out = run_pipeline(&circuit, &registry, &options, &cache)?;
    let mut report = out.report;
    report.wall_seconds.parse = parse_s;
    if global.no_timing {
        report.zero_timing();
    }
    for e in &report.fallback_events {
        eprintln!("{}", e.to_json_line());
    }
    if let Some(p) = state_out {
        let amps: Vec<[f64; 2]> = out.state.to_double().iter().map(|z| [z.re, z.im]).collect();
        let text = serde_json::to_string(&amps).expect("amplitudes serialize");
        fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    }
    emit(global, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))
}

fn cmd_bench_scaling(
    global: &Global,
    qubits: Vec<usize>,
    gates_per_qubit: usize,
    repetitions: usize,
    engines: &[String],
) -> Result<(), Failure> {
    let registry = EngineRegistry::standard();
    let selected: Vec<std::sync::Arc<dyn Engine>> = if engines.is_empty() {
        registry.engines().to_vec()
    } else {
        engines
            .iter()
            .map(|name| registry.get(name).map_err(|e| Failure::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let config = ScalingConfig {
        qubits,
        gates_per_qubit,
        repetitions,
        seed: global.seed,
        precision: fixed_precision(global),
    };
    let check = |n: usize| -> Result<(), String> {
        if global.no_memory_check {
            Ok(())
        } else {
            host_feasible(n, config.precision, global.memory_reserve)
        }
    };
    let (rows, skipped) = bench::bench_scaling(&config, &selected, &check).map_err(|e| Failure::Usage(e.to_string()))?;
    for s in &skipped {
        eprintln!("skipping n = {}: {}", s.n, s.reason);
    }
    table(global, rows)
}

fn cmd_bench_fusion(global: &Global, files: &[PathBuf], qubits: usize) -> Result<(), Failure> {
    let circuits = if files.is_empty() {
        bench::fusion_suite(qubits, global.seed)
    } else {
        files.iter().map(|f| load_circuit(f, None)).collect::<Result<_, _>>()?
    };
    let engine = match global.engine.as_str() {
        "auto" => EngineRegistry::standard().get("parallel"),
        name => EngineRegistry::standard().get(name),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let rows = bench::bench_fusion(&circuits, engine.as_ref(), global.fuse_width).map_err(|e| Failure::Usage(e.to_string()))?;
    table(global, rows)
}

fn cmd_noise_compare(global: &Global, widths: &[usize], ps: &[f64], shots: u64, cap: usize) -> Result<(), Failure> {
    let rows = bench::noise_compare(widths, ps, shots, global.seed, cap).map_err(|e| match e {
        svsim_core::noise::NoiseError::TooManyQubits { .. } => Failure::Infeasible(e.to_string()),
        other => Failure::Usage(other.to_string()),
    })?;
    table(global, rows)
}

/// Accepts a bare `{"bitstring": count}` map or a `{"shots", "counts"}`
/// object; the latter may list only some outcomes.
fn parse_counts(text: &str) -> Result<SampleResult, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let counts_value = match value.get("counts") {
        Some(c) => c.clone(),
        None => value.clone(),
    };
    let counts: std::collections::BTreeMap<String, u64> =
        serde_json::from_value(counts_value).map_err(|e| format!("counts: {e}"))?;
    if let Some(bad) = counts.keys().find(|k| k.is_empty() || !k.chars().all(|c| c == '0' || c == '1')) {
        return Err(format!("`{bad}` is not a bitstring"));
    }
    let total: u64 = counts.values().sum();
    let shots = match value.get("shots") {
        Some(s) => s.as_u64().ok_or("shots must be a non-negative integer")?,
        None => total,
    };
    // Shots beyond the listed counts are outcomes the source did not itemise.
    if shots < total {
        return Err(format!("shots = {shots} but counts sum to {total}"));
    }
    if shots == 0 {
        return Err("no shots recorded".into());
    }
    Ok(SampleResult { shots, counts })
}

fn cmd_analyze_counts(global: &Global, path: &Path, support: Vec<String>, ideal: Option<&Path>) -> Result<(), Failure> {
    let counts = parse_counts(&read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let support = match ideal {
        Some(p) => {
            let c = load_circuit(p, None)?;
            let state = run_circuit(&svsim_core::engine::ReferenceEngine::new(), &c, Precision::Double)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            state
                .probabilities()
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 1e-12)
                .map(|(k, _)| bitstring(k, c.num_qubits))
                .collect()
        }
        None => support,
    };
    let p = correct_outcome_probability(&counts, &support).map_err(|e| Failure::Usage(e.to_string()))?;
    let text = match global.format {
        Format::Csv => format!("{p:.3}\n"),
        Format::Json => {
            json!({"shots": counts.shots, "support": support, "p_correct": (p * 1000.0).round() / 1000.0}).to_string() + "\n"
        }
    };
    emit(global, &text)
}

fn cmd_select_engine(global: &Global, path: &Path) -> Result<(), Failure> {
    let circuit = load_circuit(path, None)?;
    let options = run_options(global)?;
    let precision = match options.precision {
        PrecisionChoice::Fixed(p) => p,
        PrecisionChoice::Auto => {
            svsim_core::precision::select_precision(circuit.num_qubits, circuit.len(), options.precision_tol).chosen
        }
    };
    let registry = EngineRegistry::standard();
    let cache = SelectionCache::new(options.bench.cache_ttl);
    let mut selection = select(&circuit, registry.engines(), precision, &options.bench, &cache)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if global.no_timing {
        selection.benchmark_time = 0.0;
        for p in &mut selection.profiles {
            p.throughput = 0.0;
            p.init_overhead = 0.0;
            p.measured_at = 0.0;
        }
    }
    let text = match global.format {
        Format::Json => serde_json::to_string_pretty(&selection).expect("selection serializes") + "\n",
        Format::Csv => {
            let mut s = String::from("engine,throughput_gates_per_s,init_overhead_s,projected_s,chosen\n");
            for p in &selection.profiles {
                s.push_str(&format!(
                    "{},{:.6e},{:.6e},{:.6e},{}\n",
                    p.engine,
                    p.throughput,
                    p.init_overhead,
                    p.projected_time(circuit.len()),
                    p.engine == selection.engine
                ));
            }
            if selection.profiles.is_empty() {
                s.push_str(&format!("{},,,,true\n", selection.engine));
            }
            s
        }
    };
    emit(global, &text)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if !(1..=MAX_FUSE_WIDTH).contains(&g.fuse_width) {
        return Err(Failure::Usage(format!("--fuse-width must be between 1 and {MAX_FUSE_WIDTH}")));
    }
    if !(g.precision_tol > 0.0) {
        return Err(Failure::Usage("--precision-tol must be positive".into()));
    }
    match cli.command {
        Command::Run {
            circuit,
            no_fuse,
            shots,
            input_format,
            state_out,
            no_reference,
        } => cmd_run(g, &circuit, no_fuse, shots, input_format, state_out.as_deref(), no_reference),
        Command::BenchScaling {
            qubits,
            gates_per_qubit,
            repetitions,
            engines,
        } => cmd_bench_scaling(g, qubits, gates_per_qubit, repetitions, &engines),
        Command::BenchFusion { circuits, qubits } => cmd_bench_fusion(g, &circuits, qubits),
        Command::NoiseCompare {
            widths,
            p,
            shots,
            qubit_cap,
        } => cmd_noise_compare(g, &widths, &p, shots, qubit_cap),
        Command::AnalyzeCounts { counts, support, ideal } => cmd_analyze_counts(g, &counts, support, ideal.as_deref()),
        Command::SelectEngine { circuit } => cmd_select_engine(g, &circuit),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
