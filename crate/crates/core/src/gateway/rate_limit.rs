//! Sliding-window request limiter.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::clock::Clock;

pub const MINUTE: Duration = Duration::from_secs(60);

/// Grants at most `limit` acquisitions inside any window of length `window`.
///
/// The grant log is kept under one lock and waiters sleep while holding it,
/// so grants are issued strictly in order.
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    clock: Arc<dyn Clock>,
    grants: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn per_minute(limit: u32, clock: Arc<dyn Clock>) -> Self {
        Self::new(limit as usize, MINUTE, clock)
    }

    pub fn new(limit: usize, window: Duration, clock: Arc<dyn Clock>) -> Self {
        Self {
            limit: limit.max(1),
            window,
            clock,
            grants: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until a request may be sent; returns the grant time.
    pub fn acquire(&self) -> Duration {
        let mut grants = self.grants.lock().expect("rate limiter poisoned");
        loop {
            let now = self.clock.now();
            while grants.front().is_some_and(|&t| now >= t + self.window) {
                grants.pop_front();
            }
            if grants.len() < self.limit {
                grants.push_back(now);
                return now;
            }
            let oldest = *grants.front().expect("non-empty when at limit");
            self.clock.sleep(oldest + self.window - now);
        }
    }
}

/// Largest number of timestamps falling in any half-open window `[t, t + window)`.
pub fn max_in_any_window(times: &[Duration], window: Duration) -> usize {
    let mut sorted = times.to_vec();
    sorted.sort();
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..sorted.len() {
        while sorted[hi] >= sorted[lo] + window {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::clock::ManualClock;

    #[test]
    fn never_more_than_limit_per_window() {
        let clock = Arc::new(ManualClock::new());
        let limiter = RateLimiter::per_minute(5, clock.clone());
        let times: Vec<Duration> = (0..23).map(|_| limiter.acquire()).collect();
        assert_eq!(max_in_any_window(&times, MINUTE), 5);
        // 23 grants at 5/minute need four full windows of waiting.
        assert_eq!(*times.last().unwrap(), Duration::from_secs(240));
    }

    #[test]
    fn idle_time_frees_capacity() {
        let clock = Arc::new(ManualClock::new());
        let limiter = RateLimiter::per_minute(2, clock.clone());
        limiter.acquire();
        limiter.acquire();
        clock.advance(Duration::from_secs(61));
        assert_eq!(limiter.acquire(), Duration::from_secs(61));
    }

    #[test]
    fn window_counting() {
        let s = Duration::from_secs;
        assert_eq!(max_in_any_window(&[s(0), s(59), s(60), s(61)], MINUTE), 3);
        assert_eq!(max_in_any_window(&[], MINUTE), 0);
    }
}
