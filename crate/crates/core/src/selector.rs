//! Empirical engine selection.
//!
//! Each available engine runs a short H/CNOT workload at a capped qubit
//! count. The measured throughput `tau` and allocation overhead `delta` give
//! a projected time `g / tau + delta` for the real circuit, and the engine
//! with the smallest projection wins. Winners are cached per (benchmark
//! width, precision, engine set).

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, GateOp, Precision};
use crate::engine::{Engine, EngineError, EngineId, REFERENCE};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    /// H/CNOT pairs per benchmark run.
    pub bench_gate_pairs: usize,
    pub max_bench_qubits: usize,
    /// Soft target for total profiling time; exceeding it is only logged.
    pub overhead_budget: Duration,
    pub cache_ttl: Duration,
    /// Runs per engine; the median is used.
    pub repetitions: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            bench_gate_pairs: 64,
            max_bench_qubits: 20,
            overhead_budget: Duration::from_millis(100),
            cache_ttl: Duration::from_secs(300),
            repetitions: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineProfile {
    pub engine: String,
    /// Gates per second at the benchmark width.
    pub throughput: f64,
    /// State allocation time, seconds.
    pub init_overhead: f64,
    /// Seconds since the Unix epoch.
    pub measured_at: f64,
}

impl EngineProfile {
    /// `g / tau + delta`.
    pub fn projected_time(&self, gate_count: usize) -> f64 {
        gate_count as f64 / self.throughput + self.init_overhead
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub engine: String,
    pub profiles: Vec<EngineProfile>,
    pub from_cache: bool,
    pub bench_qubits: usize,
    /// Wall time spent benchmarking in this call, seconds.
    pub benchmark_time: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("no engines to select from")]
    NoEngines,
    #[error("every engine failed its benchmark and no reference engine is available")]
    NoUsableEngine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidationReason {
    /// Drop entries whose engine-set fingerprint differs from `current`.
    EngineSetChanged { current: u64 },
    TtlExpired,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    bench_qubits: usize,
    precision: Precision,
    fingerprint: u64,
}

#[derive(Debug, Clone)]
struct CacheEntry {
    engine: String,
    profiles: Vec<EngineProfile>,
    stored: Instant,
}

#[derive(Debug)]
pub struct SelectionCache {
    ttl: Duration,
    entries: RwLock<HashMap<CacheKey, CacheEntry>>,
    benchmarks: AtomicU64,
    serial: Mutex<()>,
}

impl SelectionCache {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            entries: RwLock::new(HashMap::new()),
            benchmarks: AtomicU64::new(0),
            serial: Mutex::new(()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Engine benchmark runs performed through this cache so far.
    pub fn benchmark_count(&self) -> u64 {
        self.benchmarks.load(Ordering::Relaxed)
    }

    fn lookup(&self, key: &CacheKey) -> Option<CacheEntry> {
        let entries = self.entries.read().unwrap();
        entries.get(key).filter(|e| e.stored.elapsed() < self.ttl).cloned()
    }

    pub fn invalidate(&self, reason: InvalidationReason) {
        let mut entries = self.entries.write().unwrap();
        match reason {
            InvalidationReason::Manual => entries.clear(),
            InvalidationReason::TtlExpired => entries.retain(|_, e| e.stored.elapsed() < self.ttl),
            InvalidationReason::EngineSetChanged { current } => entries.retain(|k, _| k.fingerprint == current),
        }
    }
}

impl Default for SelectionCache {
    fn default() -> Self {
        Self::new(BenchmarkConfig::default().cache_ttl)
    }
}

/// Order-independent hash of the engine names.
pub fn engine_set_fingerprint(names: &[String]) -> u64 {
    let mut sorted: Vec<&String> = names.iter().collect();
    sorted.sort();
    let mut h = DefaultHasher::new();
    sorted.hash(&mut h);
    h.finish()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// The benchmark workload: `pairs` repetitions of H on `j mod n` then
/// CNOT on `(j mod n, j+1 mod n)`. On one qubit only the H gates remain.
pub fn benchmark_workload(num_qubits: usize, pairs: usize) -> Vec<GateOp> {
    let mut ops = Vec::with_capacity(2 * pairs);
    for j in 0..pairs {
        let q = j % num_qubits;
        ops.push(GateOp::h(q));
        if num_qubits > 1 {
            ops.push(GateOp::cnot(q, (j + 1) % num_qubits));
        }
    }
    ops
}

/// Measures one engine; any engine error aborts its profile.
pub fn profile_engine(
    engine: &dyn Engine,
    num_qubits: usize,
    precision: Precision,
    config: &BenchmarkConfig,
) -> Result<EngineProfile, EngineError> {
    let workload = benchmark_workload(num_qubits, config.bench_gate_pairs.max(1));
    let reps = config.repetitions.max(1);
    let mut alloc = Vec::with_capacity(reps);
    let mut run = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        let mut state = engine.init_state(num_qubits, precision)?;
        alloc.push(t0.elapsed().as_secs_f64());
        let t1 = Instant::now();
        let outcome = workload.iter().try_for_each(|op| engine.apply_gate(&mut state, op));
        engine.synchronize();
        run.push(t1.elapsed().as_secs_f64());
        engine.release(state);
        outcome?;
    }
    let elapsed = median(&mut run).max(1e-9);
    Ok(EngineProfile {
        engine: engine.name(),
        throughput: workload.len() as f64 / elapsed,
        init_overhead: median(&mut alloc),
        measured_at: unix_now(),
    })
}

fn argmin(profiles: &[EngineProfile], gate_count: usize) -> Option<&EngineProfile> {
    profiles.iter().min_by(|a, b| {
        a.projected_time(gate_count)
            .total_cmp(&b.projected_time(gate_count))
            .then_with(|| a.engine.cmp(&b.engine))
    })
}

/// Picks the engine with the smallest projected time for `circuit`.
///
/// Engines that are unavailable or fail their benchmark are skipped. If none
/// succeeds, the reference engine is returned when present.
pub fn select(
    circuit: &Circuit,
    engines: &[Arc<dyn Engine>],
    precision: Precision,
    config: &BenchmarkConfig,
    cache: &SelectionCache,
) -> Result<Selection, SelectError> {
    if engines.is_empty() {
        return Err(SelectError::NoEngines);
    }
    let _serial = cache.serial.lock().unwrap_or_else(|p| p.into_inner());
    let available: Vec<&Arc<dyn Engine>> = engines.iter().filter(|e| e.is_available()).collect();
    let names: Vec<String> = available.iter().map(|e| e.name()).collect();
    let bench_qubits = circuit.num_qubits.min(config.max_bench_qubits).max(1);
    let key = CacheKey {
        bench_qubits,
        precision,
        fingerprint: engine_set_fingerprint(&names),
    };
    if let Some(hit) = cache.lookup(&key) {
        return Ok(Selection {
            engine: hit.engine,
            profiles: hit.profiles,
            from_cache: true,
            bench_qubits,
            benchmark_time: 0.0,
        });
    }

    let start = Instant::now();
    let mut profiles = Vec::new();
    if available.len() == 1 {
        // Nothing to compare against.
        log::debug!("single available engine {}, skipping benchmark", names[0]);
    } else {
        for engine in &available {
            cache.benchmarks.fetch_add(1, Ordering::Relaxed);
            match profile_engine(engine.as_ref(), bench_qubits, precision, config) {
                Ok(p) => profiles.push(p),
                Err(e) => log::warn!("engine {} skipped: {e}", engine.name()),
            }
        }
    }
    let benchmark_time = start.elapsed().as_secs_f64();
    if benchmark_time > config.overhead_budget.as_secs_f64() {
        log::info!(
            "engine profiling took {:.1} ms, over the {:.0} ms budget",
            benchmark_time * 1e3,
            config.overhead_budget.as_secs_f64() * 1e3
        );
    }

    let chosen = if available.len() == 1 {
        names[0].clone()
    } else if let Some(best) = argmin(&profiles, circuit.gates.len()) {
        best.engine.clone()
    } else if engines.iter().any(|e| e.name() == REFERENCE) {
        REFERENCE.to_string()
    } else {
        return Err(SelectError::NoUsableEngine);
    };

    cache.entries.write().unwrap().insert(
        key,
        CacheEntry {
            engine: chosen.clone(),
            profiles: profiles.clone(),
            stored: Instant::now(),
        },
    );
    Ok(Selection {
        engine: chosen,
        profiles,
        from_cache: false,
        bench_qubits,
        benchmark_time,
    })
}

/// Convenience for callers holding only ids.
pub fn engine_ids(engines: &[Arc<dyn Engine>]) -> Vec<EngineId> {
    engines.iter().map(|e| e.id()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ParallelEngine, ReferenceEngine, StateVector};
    use std::sync::atomic::AtomicI64;
    use std::thread::sleep;

    struct Stub {
        name: &'static str,
        per_gate: Duration,
        fail: bool,
        live: AtomicI64,
    }

    impl Stub {
        fn new(name: &'static str, per_gate_ms: u64) -> Arc<Self> {
            Arc::new(Self {
                name,
                per_gate: Duration::from_millis(per_gate_ms),
                fail: false,
                live: AtomicI64::new(0),
            })
        }
    }

    impl Engine for Stub {
        fn id(&self) -> EngineId {
            EngineId::new(self.name)
        }

        fn init_state(&self, n: usize, p: Precision) -> Result<StateVector, EngineError> {
            if self.fail {
                return Err(EngineError::AllocationFailed { requested: 1 });
            }
            self.live.fetch_add(1, Ordering::SeqCst);
            crate::engine::allocate_state(n, p, None)
        }

        fn apply_gate(&self, _: &mut StateVector, _: &GateOp) -> Result<(), EngineError> {
            sleep(self.per_gate);
            Ok(())
        }

        fn release(&self, state: StateVector) {
            self.live.fetch_sub(1, Ordering::SeqCst);
            drop(state);
        }
    }

    fn quick() -> BenchmarkConfig {
        BenchmarkConfig {
            bench_gate_pairs: 2,
            repetitions: 1,
            ..BenchmarkConfig::default()
        }
    }

    fn circuit(n: usize, g: usize) -> Circuit {
        let mut c = Circuit::new(n);
        for _ in 0..g {
            c.push(GateOp::h(0));
        }
        c
    }

    #[test]
    fn faster_stub_wins_in_every_order() {
        let fast = Stub::new("fast", 1);
        let slow = Stub::new("slow", 10);
        let orders: [Vec<Arc<dyn Engine>>; 2] = [
            vec![fast.clone(), slow.clone()],
            vec![slow.clone(), fast.clone()],
        ];
        for engines in orders {
            let cache = SelectionCache::default();
            let s = select(&circuit(3, 10), &engines, Precision::Double, &quick(), &cache).unwrap();
            assert_eq!(s.engine, "fast");
            assert_eq!(s.profiles.len(), 2);
        }
        assert_eq!(fast.live.load(Ordering::SeqCst), 0);
        assert_eq!(slow.live.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn single_engine_needs_no_benchmark() {
        let cache = SelectionCache::default();
        let engines: Vec<Arc<dyn Engine>> = vec![Arc::new(ReferenceEngine::new())];
        let s = select(&circuit(4, 3), &engines, Precision::Double, &quick(), &cache).unwrap();
        assert_eq!(s.engine, REFERENCE);
        assert_eq!(cache.benchmark_count(), 0);
    }

    #[test]
    fn cache_hit_skips_benchmarks() {
        let cache = SelectionCache::default();
        let engines: Vec<Arc<dyn Engine>> = vec![Arc::new(ReferenceEngine::new()), Arc::new(ParallelEngine::new())];
        let c = circuit(6, 5);
        let first = select(&c, &engines, Precision::Double, &quick(), &cache).unwrap();
        let count = cache.benchmark_count();
        assert_eq!(count, 2);
        let second = select(&c, &engines, Precision::Double, &quick(), &cache).unwrap();
        assert!(second.from_cache);
        assert_eq!(second.engine, first.engine);
        assert_eq!(cache.benchmark_count(), count);
    }

    #[test]
    fn failing_engine_is_skipped() {
        let broken = Arc::new(Stub {
            name: "broken",
            per_gate: Duration::ZERO,
            fail: true,
            live: AtomicI64::new(0),
        });
        let engines: Vec<Arc<dyn Engine>> = vec![broken, Arc::new(ReferenceEngine::new())];
        let s = select(&circuit(3, 3), &engines, Precision::Double, &quick(), &SelectionCache::default()).unwrap();
        assert_eq!(s.engine, REFERENCE);
        assert_eq!(s.profiles.len(), 1);
    }

    #[test]
    fn invalidation() {
        let cache = SelectionCache::default();
        let engines: Vec<Arc<dyn Engine>> = vec![Arc::new(ReferenceEngine::new()), Arc::new(ParallelEngine::new())];
        select(&circuit(3, 2), &engines, Precision::Double, &quick(), &cache).unwrap();
        assert_eq!(cache.len(), 1);
        cache.invalidate(InvalidationReason::TtlExpired);
        assert_eq!(cache.len(), 1);
        let current = engine_set_fingerprint(&["reference".to_string()]);
        cache.invalidate(InvalidationReason::EngineSetChanged { current });
        assert!(cache.is_empty());
        select(&circuit(3, 2), &engines, Precision::Double, &quick(), &cache).unwrap();
        cache.invalidate(InvalidationReason::Manual);
        assert!(cache.is_empty());
    }

    #[test]
    fn expired_entries_are_not_served() {
        let cache = SelectionCache::new(Duration::ZERO);
        let engines: Vec<Arc<dyn Engine>> = vec![Arc::new(ReferenceEngine::new()), Arc::new(ParallelEngine::new())];
        select(&circuit(3, 2), &engines, Precision::Double, &quick(), &cache).unwrap();
        let s = select(&circuit(3, 2), &engines, Precision::Double, &quick(), &cache).unwrap();
        assert!(!s.from_cache);
        assert_eq!(cache.benchmark_count(), 4);
    }

    #[test]
    fn workload_shape() {
        let w = benchmark_workload(3, 4);
        assert_eq!(w.len(), 8);
        assert_eq!(w[5].targets, vec![2, 0]);
        assert_eq!(benchmark_workload(1, 4).len(), 4);
    }

    #[test]
    fn projection_prefers_low_overhead_for_short_circuits() {
        let a = EngineProfile { engine: "a".into(), throughput: 1000.0, init_overhead: 0.0, measured_at: 0.0 };
        let b = EngineProfile { engine: "b".into(), throughput: 10_000.0, init_overhead: 0.05, measured_at: 0.0 };
        let ps = [a, b];
        assert_eq!(argmin(&ps, 10).unwrap().engine, "a");
        assert_eq!(argmin(&ps, 1000).unwrap().engine, "b");
    }
}
