//! Benchmark tables: engine scaling, fusion impact, noise comparison.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::circuit::{Circuit, Precision};
use crate::engine::{run_circuit, sample_distribution, state_fidelity, Engine, EngineError, ReferenceEngine};
use crate::generators;
use crate::noise::{counts_distribution, evolve_noisy_with_cap, metrics, state_distribution, NoiseError};
use crate::optimize::fuse;

/// Anything with a fixed CSV layout.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
    /// Zeroes wall-clock columns for reproducible output.
    fn zero_timing(&mut self) {}
}

pub fn to_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = R::HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.fields().join(","));
        out.push('\n');
    }
    out
}

fn seconds(s: f64) -> String {
    format!("{s:.6e}")
}

fn unit(x: f64) -> String {
    format!("{x:.6}")
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub gates: usize,
    pub engine: String,
    pub median_s: f64,
    pub fidelity_vs_reference: f64,
    /// Generator seed of the circuit measured.
    pub seed: u64,
}

impl CsvRow for ScalingRow {
    const HEADER: &'static [&'static str] = &["n", "gates", "engine", "median_s", "fidelity_vs_reference", "seed"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.gates.to_string(),
            self.engine.clone(),
            seconds(self.median_s),
            unit(self.fidelity_vs_reference),
            self.seed.to_string(),
        ]
    }

    fn zero_timing(&mut self) {
        self.median_s = 0.0;
    }
}

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub qubits: Vec<usize>,
    pub gates_per_qubit: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            qubits: vec![10, 12, 14],
            gates_per_qubit: 10,
            repetitions: 3,
            seed: 0,
            precision: Precision::Double,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub n: usize,
    pub reason: String,
}

/// Per-width circuit seed derived from the run seed.
pub fn scaling_seed(seed: u64, n: usize) -> u64 {
    seed ^ n as u64
}

/// Median run time per (n, engine) on seeded Haar-random single-qubit
/// circuits of `gates_per_qubit * n` gates. `feasible` can veto a width
/// (for example against host memory); vetoed widths are reported in the
/// second return value instead of producing rows.
pub fn bench_scaling(
    config: &ScalingConfig,
    engines: &[Arc<dyn Engine>],
    feasible: &dyn Fn(usize) -> Result<(), String>,
) -> Result<(Vec<ScalingRow>, Vec<Skipped>), EngineError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let reference = ReferenceEngine::new();
    for &n in &config.qubits {
        if let Err(reason) = feasible(n) {
            skipped.push(Skipped { n, reason });
            continue;
        }
        let seed = scaling_seed(config.seed, n);
        let circuit = generators::random_su2_circuit(n, config.gates_per_qubit * n, seed);
        let expected = run_circuit(&reference, &circuit, config.precision)?;
        for engine in engines {
            let mut times = Vec::with_capacity(config.repetitions);
            let mut last = None;
            for _ in 0..config.repetitions.max(1) {
                let t = Instant::now();
                let state = run_circuit(engine.as_ref(), &circuit, config.precision)?;
                times.push(t.elapsed().as_secs_f64());
                last = Some(state);
            }
            let fidelity = state_fidelity(&expected, last.as_ref().expect("at least one repetition"))?;
            rows.push(ScalingRow {
                n,
                gates: circuit.len(),
                engine: engine.name(),
                median_s: median(times),
                fidelity_vs_reference: fidelity,
                seed,
            });
        }
    }
    Ok((rows, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionRow {
    pub circuit: String,
    pub original_gates: usize,
    pub fused_gates: usize,
    pub original_depth: usize,
    pub fused_depth: usize,
    pub reduction_percent: f64,
    /// Simulation of the original circuit.
    pub time_s: f64,
    /// Simulation of the fused circuit, excluding the pass itself.
    pub fused_time_s: f64,
    pub fusion_pass_s: f64,
}

impl CsvRow for FusionRow {
    const HEADER: &'static [&'static str] = &[
        "circuit",
        "original_depth",
        "fused_depth",
        "reduction_percent",
        "time_s",
        "fused_time_s",
        "fusion_pass_s",
        "original_gates",
        "fused_gates",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.circuit.clone(),
            self.original_depth.to_string(),
            self.fused_depth.to_string(),
            format!("{:.2}", self.reduction_percent),
            seconds(self.time_s),
            seconds(self.fused_time_s),
            seconds(self.fusion_pass_s),
            self.original_gates.to_string(),
            self.fused_gates.to_string(),
        ]
    }

    fn zero_timing(&mut self) {
        self.time_s = 0.0;
        self.fused_time_s = 0.0;
        self.fusion_pass_s = 0.0;
    }
}

/// Largest width the fusion table simulates; wider circuits report depth
/// only (time columns 0).
pub const FUSION_SIMULATION_LIMIT: usize = 22;

/// The built-in fusion suite: QFT-n, random-n with `20 n` gates and an
/// `n`-qubit ansatz with `n / 2` layers.
pub fn fusion_suite(n: usize, seed: u64) -> Vec<Circuit> {
    vec![
        generators::qft(n),
        generators::random_circuit(n, 20 * n, seed),
        generators::ansatz(n, (n / 2).max(1), seed),
    ]
}

pub fn bench_fusion(circuits: &[Circuit], engine: &dyn Engine, width: usize) -> Result<Vec<FusionRow>, EngineError> {
    let mut rows = Vec::new();
    for c in circuits {
        let (fused, report) = fuse(c, width);
        let (mut time_s, mut fused_time_s) = (0.0, 0.0);
        if c.num_qubits <= FUSION_SIMULATION_LIMIT {
            let t = Instant::now();
            run_circuit(engine, c, Precision::Double)?;
            time_s = t.elapsed().as_secs_f64();
            let t = Instant::now();
            run_circuit(engine, &fused, Precision::Double)?;
            fused_time_s = t.elapsed().as_secs_f64();
        }
        rows.push(FusionRow {
            circuit: if c.name.is_empty() { "circuit".into() } else { c.name.clone() },
            original_gates: report.original_gate_count,
            fused_gates: report.fused_gate_count,
            original_depth: report.original_depth,
            fused_depth: report.fused_depth,
            reduction_percent: report.reduction_percent,
            time_s,
            fused_time_s,
            fusion_pass_s: report.fusion_pass_time,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub circuit: String,
    pub qubits: usize,
    pub p: f64,
    pub shots: u64,
    pub fidelity_exact: f64,
    pub tvd_exact: f64,
    pub fidelity_sampled: f64,
    pub tvd_sampled: f64,
}

impl CsvRow for NoiseRow {
    const HEADER: &'static [&'static str] = &[
        "circuit",
        "qubits",
        "p",
        "shots",
        "fidelity_exact",
        "tvd_exact",
        "fidelity_sampled",
        "tvd_sampled",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.circuit.clone(),
            self.qubits.to_string(),
            self.p.to_string(),
            self.shots.to_string(),
            unit(self.fidelity_exact),
            unit(self.tvd_exact),
            unit(self.fidelity_sampled),
            unit(self.tvd_sampled),
        ]
    }
}

/// Bell (width 2) or GHZ-k.
pub fn noise_circuit(width: usize) -> Circuit {
    if width == 2 {
        generators::bell()
    } else {
        generators::ghz(width)
    }
}

/// Classical fidelity and TVD of the noisy output against the ideal one,
/// exactly from the density-matrix diagonal and from `shots` samples of it.
pub fn noise_compare(widths: &[usize], ps: &[f64], shots: u64, seed: u64, cap: usize) -> Result<Vec<NoiseRow>, NoiseError> {
    let mut rows = Vec::new();
    for &w in widths {
        let circuit = noise_circuit(w);
        let ideal_state = run_circuit(&ReferenceEngine::new(), &circuit, Precision::Double)
            .map_err(|e| NoiseError::InvalidCircuit(e.to_string()))?;
        let ideal = state_distribution(&ideal_state);
        for &p in ps {
            let rho = evolve_noisy_with_cap(&circuit, p, cap)?;
            let exact = metrics(&ideal, &rho.measure_distribution())?;
            let (fidelity_sampled, tvd_sampled) = if shots > 0 {
                let counts = sample_distribution(&rho.probabilities(), w, shots, seed);
                let m = metrics(&ideal, &counts_distribution(&counts)?)?;
                (m.classical_fidelity, m.tvd)
            } else {
                (f64::NAN, f64::NAN)
            };
            rows.push(NoiseRow {
                circuit: circuit.name.clone(),
                qubits: w,
                p,
                shots,
                fidelity_exact: exact.classical_fidelity,
                tvd_exact: exact.tvd,
                fidelity_sampled,
                tvd_sampled,
            });
        }
    }
    Ok(rows)
}

/// Plain-text rendering of a table for terminals.
pub fn to_text<R: CsvRow>(rows: &[R]) -> String {
    let mut cells: Vec<Vec<String>> = vec![R::HEADER.iter().map(|s| s.to_string()).collect()];
    cells.extend(rows.iter().map(|r| r.fields()));
    let widths: Vec<usize> = (0..R::HEADER.len())
        .map(|i| cells.iter().map(|row| row[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}
