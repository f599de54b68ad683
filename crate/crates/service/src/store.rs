//! In-memory session table with idle eviction.
//!
//! Each session sits behind its own `RwLock`, so edits to one session never
//! block another. The table lock is held only long enough to clone an `Arc`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::RngCore;
use tokio::sync::{OwnedRwLockReadGuard, OwnedRwLockWriteGuard, RwLock};

use crate::config::BusyMode;
use crate::error::ServiceError;
use crate::session::Session;

struct Slot {
    session: Arc<RwLock<Session>>,
    last_used: Mutex<Instant>,
}

impl Slot {
    fn touch(&self) {
        *self.last_used.lock().unwrap() = Instant::now();
    }
}

pub struct SessionStore {
    slots: Mutex<HashMap<String, Arc<Slot>>>,
    ttl: Duration,
    busy_mode: BusyMode,
}

/// 128 random bits, hex encoded (URL-safe).
pub fn new_session_id() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl SessionStore {
    pub fn new(ttl: Duration, busy_mode: BusyMode) -> Self {
        Self {
            slots: Mutex::new(HashMap::new()),
            ttl,
            busy_mode,
        }
    }

    pub fn insert(&self, session: Session) {
        let id = session.id().to_owned();
        let slot = Arc::new(Slot {
            session: Arc::new(RwLock::new(session)),
            last_used: Mutex::new(Instant::now()),
        });
        self.slots.lock().unwrap().insert(id, slot);
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        let slot = self
            .slots
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or(ServiceError::NotFound)?;
        slot.touch();
        Ok(slot)
    }

    pub async fn read(&self, id: &str) -> Result<OwnedRwLockReadGuard<Session>, ServiceError> {
        let slot = self.slot(id)?;
        Ok(Arc::clone(&slot.session).read_owned().await)
    }

    /// Exclusive access for a mutation, honoring the configured [`BusyMode`].
    pub async fn write(&self, id: &str) -> Result<OwnedRwLockWriteGuard<Session>, ServiceError> {
        let slot = self.slot(id)?;
        let lock = Arc::clone(&slot.session);
        match self.busy_mode {
            BusyMode::Wait => Ok(lock.write_owned().await),
            BusyMode::Reject => lock.try_write_owned().map_err(|_| ServiceError::Busy),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: &str) -> bool {
        self.slots.lock().unwrap().contains_key(id)
    }

    /// Drops sessions idle for longer than the TTL as of `now`. Returns how
    /// many were removed.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut slots = self.slots.lock().unwrap();
        let before = slots.len();
        slots.retain(|_, slot| now.saturating_duration_since(*slot.last_used.lock().unwrap()) <= self.ttl);
        before - slots.len()
    }

    /// Runs [`evict_idle`](Self::evict_idle) periodically until the store is dropped.
    pub fn spawn_evictor(self: &Arc<Self>, every: Duration) -> tokio::task::JoinHandle<()> {
        let weak = Arc::downgrade(self);
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(every);
            loop {
                tick.tick().await;
                let Some(store) = weak.upgrade() else { break };
                let n = store.evict_idle(Instant::now());
                if n > 0 {
                    tracing::info!(evicted = n, "dropped idle sessions");
                }
            }
        })
    }
}
