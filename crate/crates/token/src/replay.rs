//! Bounded, time-windowed set of seen proof identifiers.

use std::collections::{HashMap, VecDeque};

use parking_lot::Mutex;

pub const DEFAULT_REPLAY_WINDOW_SECS: i64 = 300;
pub const DEFAULT_REPLAY_CAPACITY: usize = 65_536;

type Key = (String, String);

#[derive(Debug)]
pub struct ReplayCache {
    window: i64,
    capacity: usize,
    inner: Mutex<Inner>,
}

#[derive(Debug, Default)]
struct Inner {
    seen: HashMap<Key, i64>,
    order: VecDeque<(Key, i64)>,
}

impl Default for ReplayCache {
    fn default() -> Self {
        Self::new(DEFAULT_REPLAY_WINDOW_SECS, DEFAULT_REPLAY_CAPACITY)
    }
}

impl ReplayCache {
    pub fn new(window: i64, capacity: usize) -> Self {
        assert!(capacity > 0, "replay cache capacity must be positive");
        Self {
            window,
            capacity,
            inner: Mutex::new(Inner::default()),
        }
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    /// Records `(scope, jti)` and returns true, or returns false if it was
    /// already seen within the window. Atomic: of two concurrent calls with
    /// the same key at most one returns true.
    pub fn check_and_insert(&self, scope: &str, jti: &str, now: i64) -> bool {
        let mut inner = self.inner.lock();
        inner.evict_expired(now, self.window);
        let key = (scope.to_string(), jti.to_string());
        if let Some(&at) = inner.seen.get(&key) {
            if now - at < self.window {
                return false;
            }
        }
        inner.seen.insert(key.clone(), now);
        inner.order.push_back((key, now));
        while inner.seen.len() > self.capacity {
            inner.pop_oldest();
        }
        true
    }

    pub fn contains(&self, scope: &str, jti: &str, now: i64) -> bool {
        let inner = self.inner.lock();
        inner
            .seen
            .get(&(scope.to_string(), jti.to_string()))
            .is_some_and(|&at| now - at < self.window)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Inner {
    fn evict_expired(&mut self, now: i64, window: i64) {
        while let Some((_, at)) = self.order.front() {
            if now - *at < window {
                break;
            }
            self.pop_oldest();
        }
    }

    fn pop_oldest(&mut self) {
        if let Some((key, at)) = self.order.pop_front() {
            // a re-inserted key leaves a stale order entry behind
            if self.seen.get(&key) == Some(&at) {
                self.seen.remove(&key);
            }
        }
    }
}
