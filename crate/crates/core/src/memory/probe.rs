//! Available-memory readings and the trend trigger.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::model::MemoryModelParams;

pub const WINDOW_CAPACITY: usize = 16;
pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    /// Seconds on the source's own clock.
    pub t: f64,
    /// Raw available bytes, before the reserve is subtracted.
    pub available: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("reading at t={got} precedes the previous one at t={last}")]
    NonMonotone { last: f64, got: f64 },
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error("cannot read trace: {0}")]
    Io(String),
}

/// Most recent readings, oldest first.
#[derive(Debug, Clone)]
pub struct MemoryWindow {
    capacity: usize,
    readings: VecDeque<Reading>,
}

impl Default for MemoryWindow {
    fn default() -> Self {
        Self::new(WINDOW_CAPACITY)
    }
}

impl MemoryWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            readings: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn push(&mut self, r: Reading) -> Result<(), ProbeError> {
        if let Some(last) = self.readings.back() {
            if r.t < last.t {
                return Err(ProbeError::NonMonotone { last: last.t, got: r.t });
            }
        }
        if self.readings.len() == self.capacity {
            self.readings.pop_front();
        }
        self.readings.push_back(r);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn latest(&self) -> Option<Reading> {
        self.readings.back().copied()
    }

    pub fn readings(&self) -> impl Iterator<Item = &Reading> {
        self.readings.iter()
    }

    /// Least-squares slope of available bytes over time, bytes per second.
    /// `None` with fewer than two readings or no time spread.
    pub fn slope(&self) -> Option<f64> {
        let n = self.readings.len();
        if n < 2 {
            return None;
        }
        let nf = n as f64;
        let t_mean = self.readings.iter().map(|r| r.t).sum::<f64>() / nf;
        let a_mean = self.readings.iter().map(|r| r.available as f64).sum::<f64>() / nf;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for r in &self.readings {
            let dt = r.t - t_mean;
            sxy += dt * (r.available as f64 - a_mean);
            sxx += dt * dt;
        }
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// Fires when the extrapolated availability `horizon` seconds ahead drops
/// below the reserve. With a single reading (or no time spread) the latest
/// value is compared directly; an empty window never fires.
pub fn should_fallback(window: &MemoryWindow, params: &MemoryModelParams, horizon: f64) -> bool {
    let Some(latest) = window.latest() else {
        return false;
    };
    let reserve = params.reserve_bytes as f64;
    let now = latest.available as f64;
    match window.slope() {
        Some(slope) => now + slope * horizon < reserve,
        None => now < reserve,
    }
}

pub trait MemorySource: Send {
    /// Next reading, or `None` if memory cannot be queried.
    fn read(&mut self) -> Option<Reading>;
}

/// Replays `t_seconds,available_bytes` lines, one per read. Once exhausted the
/// last value repeats with the clock advancing by the final step.
#[derive(Debug, Clone)]
pub struct ScriptedTrace {
    readings: Vec<Reading>,
    next: usize,
    step: f64,
    last: Option<Reading>,
}

impl ScriptedTrace {
    pub fn new(readings: Vec<Reading>) -> Self {
        let step = match readings.as_slice() {
            [.., a, b] if b.t > a.t => b.t - a.t,
            _ => DEFAULT_POLL_INTERVAL.as_secs_f64(),
        };
        Self {
            readings,
            next: 0,
            step,
            last: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ProbeError> {
        let mut readings: Vec<Reading> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| ProbeError::Trace {
                line: i + 1,
                message: message.to_string(),
            };
            let (t, a) = line.split_once(',').ok_or_else(|| err("expected `t_seconds,available_bytes`"))?;
            let t: f64 = match t.trim().parse() {
                Ok(t) => t,
                // A header row is allowed on the first line.
                Err(_) if readings.is_empty() && i == 0 => continue,
                Err(_) => return Err(err("bad timestamp")),
            };
            let available: u64 = a.trim().parse().map_err(|_| err("bad byte count"))?;
            if !t.is_finite() {
                return Err(err("bad timestamp"));
            }
            if let Some(prev) = readings.last() {
                if t < prev.t {
                    return Err(err("timestamps must not decrease"));
                }
            }
            readings.push(Reading { t, available });
        }
        if readings.is_empty() {
            return Err(ProbeError::Trace {
                line: 0,
                message: "trace has no readings".into(),
            });
        }
        Ok(Self::new(readings))
    }

    pub fn from_file(path: &Path) -> Result<Self, ProbeError> {
        let text = fs::read_to_string(path).map_err(|e| ProbeError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

impl MemorySource for ScriptedTrace {
    fn read(&mut self) -> Option<Reading> {
        let r = match self.readings.get(self.next) {
            Some(&r) => {
                self.next += 1;
                r
            }
            None => {
                let last = self.last.or_else(|| self.readings.last().copied())?;
                Reading {
                    t: last.t + self.step,
                    available: last.available,
                }
            }
        };
        self.last = Some(r);
        Some(r)
    }
}

/// Host memory from `MemAvailable` in `/proc/meminfo`.
#[derive(Debug)]
pub struct HostMemory {
    start: Instant,
}

impl HostMemory {
    pub fn new() -> Self {
        Self { start: Instant::now() }
    }
}

impl Default for HostMemory {
    fn default() -> Self {
        Self::new()
    }
}

pub fn parse_meminfo(text: &str) -> Option<u64> {
    let line = text.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kib: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    kib.checked_mul(1024)
}

impl MemorySource for HostMemory {
    fn read(&mut self) -> Option<Reading> {
        let text = fs::read_to_string("/proc/meminfo").ok()?;
        Some(Reading {
            t: self.start.elapsed().as_secs_f64(),
            available: parse_meminfo(&text)?,
        })
    }
}

/// A memory source plus its window of readings.
///
/// In the default synchronous mode the executor takes one reading per
/// checkpoint, which keeps scripted traces deterministic. [`MemoryProbe::spawn`]
/// instead polls from a background thread every `poll_interval`.
#[derive(Clone)]
pub struct MemoryProbe {
    source: Arc<Mutex<Box<dyn MemorySource>>>,
    window: Arc<Mutex<MemoryWindow>>,
    poll_interval: Duration,
    background: Arc<AtomicBool>,
}

impl std::fmt::Debug for MemoryProbe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MemoryProbe")
            .field("window", &self.window.lock().unwrap())
            .field("poll_interval", &self.poll_interval)
            .finish()
    }
}

impl MemoryProbe {
    pub fn new(source: Box<dyn MemorySource>) -> Self {
        Self {
            source: Arc::new(Mutex::new(source)),
            window: Arc::new(Mutex::new(MemoryWindow::default())),
            poll_interval: DEFAULT_POLL_INTERVAL,
            background: Arc::new(AtomicBool::new(false)),
        }
    }

    pub fn scripted(trace: ScriptedTrace) -> Self {
        Self::new(Box::new(trace))
    }

    pub fn host() -> Self {
        Self::new(Box::new(HostMemory::new()))
    }

    pub fn with_poll_interval(mut self, interval: Duration) -> Self {
        self.poll_interval = interval;
        self
    }

    pub fn poll_interval(&self) -> Duration {
        self.poll_interval
    }

    /// Takes one reading into the window. Out-of-order readings are dropped.
    pub fn poll(&self) -> Option<Reading> {
        let r = self.source.lock().unwrap().read()?;
        match self.window.lock().unwrap().push(r) {
            Ok(()) => Some(r),
            Err(e) => {
                log::warn!("memory probe: {e}");
                None
            }
        }
    }

    /// Called by the executor between gates; polls unless a background
    /// thread is doing so.
    pub fn checkpoint(&self) {
        if !self.background.load(Ordering::Acquire) {
            self.poll();
        }
    }

    pub fn window(&self) -> MemoryWindow {
        self.window.lock().unwrap().clone()
    }

    /// Starts background polling until the returned monitor is dropped.
    pub fn spawn(&self) -> PollingMonitor {
        self.background.store(true, Ordering::Release);
        let stop = Arc::new(AtomicBool::new(false));
        let probe = self.clone();
        let flag = stop.clone();
        let handle = std::thread::spawn(move || {
            while !flag.load(Ordering::Acquire) {
                probe.poll();
                std::thread::sleep(probe.poll_interval);
            }
        });
        PollingMonitor {
            stop,
            background: self.background.clone(),
            handle: Some(handle),
        }
    }
}

pub struct PollingMonitor {
    stop: Arc<AtomicBool>,
    background: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl Drop for PollingMonitor {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Release);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        self.background.store(false, Ordering::Release);
    }
}
