use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Monotonic time source. Tests use [`ManualClock`] so pacing can be
/// checked without waiting.
pub trait Clock: Send + Sync {
    /// Time elapsed since the clock's origin.
    fn now(&self) -> Duration;
    /// Blocks (or advances virtual time) until `now() >= deadline`.
    fn sleep_until(&self, deadline: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep_until(&self, deadline: Duration) {
        let now = self.now();
        if deadline > now {
            std::thread::sleep(deadline - now);
        }
    }
}

/// Virtual clock: sleeping jumps straight to the deadline.
#[derive(Debug, Default)]
pub struct ManualClock {
    nanos: AtomicU64,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, by: Duration) {
        self.nanos.fetch_add(by.as_nanos() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.nanos.load(Ordering::SeqCst))
    }

    fn sleep_until(&self, deadline: Duration) {
        self.nanos.fetch_max(deadline.as_nanos() as u64, Ordering::SeqCst);
    }
}

/// Shared request pacer. The k-th request (counting from 1) is released no
/// earlier than `k / rate` seconds after the limiter was created, so `n`
/// requests at `rate` per second take at least `n / rate` seconds.
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Duration>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for RateLimiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RateLimiter").field("interval", &self.interval).finish()
    }
}

impl RateLimiter {
    pub fn new(per_second: f64) -> Self {
        Self::with_clock(per_second, Arc::new(SystemClock::default()))
    }

    /// `per_second <= 0` or non-finite disables pacing.
    pub fn with_clock(per_second: f64, clock: Arc<dyn Clock>) -> Self {
        let interval = if per_second.is_finite() && per_second > 0.0 {
            Duration::from_secs_f64(1.0 / per_second)
        } else {
            Duration::ZERO
        };
        let start = clock.now();
        Self { interval, next_slot: Mutex::new(start + interval), clock }
    }

    pub fn unlimited() -> Self {
        Self::new(0.0)
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Reserves the next slot and waits for it.
    pub fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let slot = {
            let mut next = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let slot = (*next).max(self.clock.now());
            *next = slot + self.interval;
            slot
        };
        self.clock.sleep_until(slot);
    }
}
