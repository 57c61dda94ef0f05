//! Sliding-window rate limiter, one window per provider.

use std::collections::VecDeque;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::clock::Clock;

/// Requests-per-second cap for one provider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    pub requests_per_second: u32,
}

pub(crate) struct SlidingWindow {
    capacity: u32,
    window_ms: u64,
    dispatches: VecDeque<u64>,
}

impl SlidingWindow {
    pub fn new(limit: RateLimit) -> Self {
        Self {
            capacity: limit.requests_per_second.max(1),
            window_ms: 1000,
            dispatches: VecDeque::new(),
        }
    }

    /// Blocks (via the clock) until a dispatch slot is free, then claims it.
    pub fn acquire(&mut self, clock: &dyn Clock) {
        loop {
            let now = clock.now_ms();
            while let Some(&t) = self.dispatches.front() {
                if now.saturating_sub(t) >= self.window_ms {
                    self.dispatches.pop_front();
                } else {
                    break;
                }
            }
            if (self.dispatches.len() as u32) < self.capacity {
                self.dispatches.push_back(now);
                return;
            }
            let earliest = *self.dispatches.front().unwrap();
            let wait = earliest + self.window_ms - now;
            clock.sleep(Duration::from_millis(wait.max(1)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::clock::MockClock;

    #[test]
    fn rate_never_exceeded_in_any_window() {
        let clock = MockClock::new(0);
        let mut w = SlidingWindow::new(RateLimit {
            requests_per_second: 2,
        });
        let mut times = Vec::new();
        for _ in 0..30 {
            w.acquire(&clock);
            times.push(clock.now_ms());
        }
        // No window of any alignment may hold more than 2 dispatches per second;
        // check every 10s window start offered by the dispatch times themselves.
        for &start in &times {
            let in_window = times
                .iter()
                .filter(|&&t| t >= start && t < start + 10_000)
                .count();
            assert!(in_window <= 20, "{in_window} dispatches in a 10s window");
        }
    }
}
