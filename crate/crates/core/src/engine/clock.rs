//! Engine time source. Wall time in production, a manually advanced
//! virtual clock for scripts and tests.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

/// Shared virtual time in milliseconds. Clones observe the same time.
#[derive(Debug, Clone, Default)]
pub struct VirtualClock(Arc<AtomicU64>);

impl VirtualClock {
    pub fn starting_at(ms: u64) -> VirtualClock {
        VirtualClock(Arc::new(AtomicU64::new(ms)))
    }

    pub fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }

    /// Moves time forward; never backwards.
    pub fn advance_to(&self, ms: u64) {
        self.0.fetch_max(ms, Ordering::SeqCst);
    }
}

#[derive(Debug, Clone, Default)]
pub enum Clock {
    #[default]
    Wall,
    Virtual(VirtualClock),
}

impl Clock {
    pub fn virtual_at(ms: u64) -> Clock {
        Clock::Virtual(VirtualClock::starting_at(ms))
    }

    pub fn now_ms(&self) -> u64 {
        match self {
            Clock::Wall => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            Clock::Virtual(v) => v.now_ms(),
        }
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, Clock::Virtual(_))
    }

    pub(crate) fn advance_to(&self, ms: u64) {
        if let Clock::Virtual(v) = self {
            v.advance_to(ms);
        }
    }
}
