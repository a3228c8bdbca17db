use std::collections::VecDeque;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Sliding-window limiter: at most `limit` permits are handed out in any
/// window of length `window`.
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    issued: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(limit: u32) -> Self {
        RateLimiter::new(limit.max(1) as usize, Duration::from_secs(60))
    }

    pub fn new(limit: usize, window: Duration) -> Self {
        RateLimiter {
            limit: limit.max(1),
            window,
            issued: Mutex::new(VecDeque::with_capacity(limit.min(4096))),
        }
    }

    /// Blocks until a permit is available, then records its issue time.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut issued = self.issued.lock().expect("limiter lock");
                let now = Instant::now();
                while issued.front().is_some_and(|t| now.duration_since(*t) >= self.window) {
                    issued.pop_front();
                }
                if issued.len() < self.limit {
                    issued.push_back(now);
                    return;
                }
                self.window - now.duration_since(*issued.front().expect("non-empty"))
            };
            thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn never_exceeds_limit_in_any_window() {
        let window = Duration::from_millis(150);
        let limiter = Arc::new(RateLimiter::new(5, window));
        let stamps = Arc::new(Mutex::new(Vec::new()));
        thread::scope(|s| {
            for _ in 0..4 {
                let limiter = Arc::clone(&limiter);
                let stamps = Arc::clone(&stamps);
                s.spawn(move || {
                    for _ in 0..4 {
                        limiter.acquire();
                        stamps.lock().unwrap().push(Instant::now());
                    }
                });
            }
        });
        let mut stamps = stamps.lock().unwrap().clone();
        stamps.sort();
        assert_eq!(stamps.len(), 16);
        for (i, t) in stamps.iter().enumerate() {
            let in_window = stamps[i..].iter().take_while(|u| u.duration_since(*t) < window).count();
            // small slack for the gap between acquire() and the timestamp
            assert!(in_window <= 6, "{in_window} permits within one window");
        }
        // 16 permits at 5 per window need at least three full windows
        assert!(stamps[15].duration_since(stamps[0]) >= window * 3 - Duration::from_millis(5));
    }
}
