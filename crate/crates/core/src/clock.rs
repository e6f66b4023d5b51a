//! Elapsed-time measurement for time-budgeted runs.
//!
//! Runs that execute side by side on a thread pool measure their own thread's
//! CPU time so that a busy neighbour does not eat into their budget.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    /// Wall-clock time since the run started.
    #[default]
    Wall,
    /// CPU time consumed by the calling thread since the run started.
    ThreadCpu,
}

#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    kind: ClockKind,
    wall: Instant,
    cpu: Duration,
}

impl Stopwatch {
    pub fn start(kind: ClockKind) -> Self {
        let cpu = match kind {
            ClockKind::ThreadCpu => thread_cpu_time(),
            ClockKind::Wall => Duration::ZERO,
        };
        Self { kind, wall: Instant::now(), cpu }
    }

    pub fn elapsed(&self) -> Duration {
        match self.kind {
            ClockKind::Wall => self.wall.elapsed(),
            ClockKind::ThreadCpu => thread_cpu_time().saturating_sub(self.cpu),
        }
    }
}

#[cfg(unix)]
fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

// No portable per-thread CPU clock; fall back to a process-wide monotonic one.
#[cfg(not(unix))]
fn thread_cpu_time() -> Duration {
    use std::sync::OnceLock;
    static EPOCH: OnceLock<Instant> = OnceLock::new();
    EPOCH.get_or_init(Instant::now).elapsed()
}

/// Milliseconds as a float, for reports.
pub fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
