//! Time source abstraction so retry backoff and throttling are testable
//! without real sleeps.

use std::sync::Mutex;
use std::time::Duration;

pub trait Clock: Send + Sync {
    /// Milliseconds since an arbitrary epoch (Unix epoch for the system clock).
    fn now_ms(&self) -> u64;
    fn sleep(&self, d: Duration);
}

/// Wall clock backed by `std::time`.
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Manual clock for tests and deterministic mock runs. Sleeping advances the
/// clock instantly and records the requested duration.
pub struct MockClock {
    state: Mutex<MockState>,
}

struct MockState {
    now_ms: u64,
    sleeps: Vec<Duration>,
}

impl MockClock {
    pub fn new(start_ms: u64) -> Self {
        Self {
            state: Mutex::new(MockState {
                now_ms: start_ms,
                sleeps: Vec::new(),
            }),
        }
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().unwrap().sleeps.clone()
    }

    pub fn advance(&self, d: Duration) {
        self.state.lock().unwrap().now_ms += d.as_millis() as u64;
    }
}

impl Clock for MockClock {
    fn now_ms(&self) -> u64 {
        self.state.lock().unwrap().now_ms
    }

    fn sleep(&self, d: Duration) {
        let mut s = self.state.lock().unwrap();
        s.sleeps.push(d);
        s.now_ms += d.as_millis() as u64;
    }
}
