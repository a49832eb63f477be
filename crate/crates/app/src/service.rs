//! Session service over the append-only store. Every accepted change is
//! logged before it becomes visible, so in-memory state can always be
//! rebuilt by replaying the log.
//!
//! Operations on one session are serialized by that session's lock; the
//! store has its own lock, so distinct sessions only contend on the append.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scalecal_core::dataset::{RecordError, RespondentRecord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{
    default_items, Answer, Item, Phase, Question, SessionError, SessionState, SubmitError,
};
use crate::store::{Event, Store, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Submit(#[from] SubmitError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("session {id}: {source}")]
    Record { id: String, source: RecordError },
    #[error("log replay failed for session {id}: {reason}")]
    Replay { id: String, reason: String },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default)]
    pub items: Option<Vec<Item>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub seed: u64,
    /// Pair names in presentation order.
    pub pair_order: Vec<[String; 2]>,
    pub created_at_ms: u64,
    pub completed_at_ms: u64,
    pub orientation_swapped: bool,
    pub categories_reversed: bool,
}

/// Completed sessions only, in creation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub records: Vec<RespondentRecord>,
    pub sessions: Vec<SessionMeta>,
}

#[derive(Debug, Clone)]
struct Tracked {
    state: SessionState,
    created_at_ms: u64,
    completed_at_ms: Option<u64>,
}

#[derive(Debug, Default)]
struct Registry {
    order: Vec<String>,
    sessions: HashMap<String, Arc<Mutex<Tracked>>>,
}

#[derive(Debug)]
pub struct Service {
    seed: u64,
    store: Mutex<Store>,
    registry: RwLock<Registry>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Service {
    /// Opens (or creates) the log at `path` and replays it.
    pub fn open(path: impl AsRef<Path>, seed: u64) -> Result<Service, ServiceError> {
        let (store, recovery) = Store::open(path)?;
        let mut registry = Registry::default();
        for event in recovery.events {
            match event {
                Event::SessionCreated {
                    session_id,
                    items,
                    seed,
                    at_ms,
                } => {
                    let state =
                        SessionState::create(session_id.clone(), items, seed).map_err(|e| {
                            ServiceError::Replay {
                                id: session_id.clone(),
                                reason: e.to_string(),
                            }
                        })?;
                    registry.order.push(session_id.clone());
                    let tracked = Tracked {
                        state,
                        created_at_ms: at_ms,
                        completed_at_ms: None,
                    };
                    registry
                        .sessions
                        .insert(session_id, Arc::new(Mutex::new(tracked)));
                }
                Event::AnswerAccepted {
                    session_id,
                    answer,
                    at_ms,
                } => {
                    let entry =
                        registry
                            .sessions
                            .get(&session_id)
                            .ok_or_else(|| ServiceError::Replay {
                                id: session_id.clone(),
                                reason: "answer for a session that was never created".into(),
                            })?;
                    let mut tracked = lock(entry);
                    tracked.state =
                        tracked
                            .state
                            .submit(&answer)
                            .map_err(|e| ServiceError::Replay {
                                id: session_id.clone(),
                                reason: e.to_string(),
                            })?;
                    if tracked.state.is_done() {
                        tracked.completed_at_ms = Some(at_ms);
                    }
                }
            }
        }
        Ok(Service {
            seed,
            store: Mutex::new(store),
            registry: RwLock::new(registry),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Tracked>>, ServiceError> {
        let registry = self.registry.read().unwrap_or_else(|e| e.into_inner());
        registry
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create_session(&self, config: CreateSession) -> Result<String, ServiceError> {
        let mut registry = self.registry.write().unwrap_or_else(|e| e.into_inner());
        let mut counter = registry.order.len() as u64;
        let (session_id, derived_seed) = loop {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(counter);
            let id = format!("{:016x}", rng.next_u64());
            if !registry.sessions.contains_key(&id) {
                break (id, rng.next_u64());
            }
            counter += 1;
        };
        let seed = config.seed.unwrap_or(derived_seed);
        let items = config.items.unwrap_or_else(default_items);
        let state = SessionState::create(session_id.clone(), items.clone(), seed)?;
        let at_ms = now_ms();
        lock(&self.store).append(&Event::SessionCreated {
            session_id: session_id.clone(),
            items,
            seed,
            at_ms,
        })?;
        registry.order.push(session_id.clone());
        let tracked = Tracked {
            state,
            created_at_ms: at_ms,
            completed_at_ms: None,
        };
        registry
            .sessions
            .insert(session_id.clone(), Arc::new(Mutex::new(tracked)));
        Ok(session_id)
    }

    pub fn state(&self, id: &str) -> Result<SessionState, ServiceError> {
        let entry = self.session(id)?;
        let tracked = lock(&entry);
        Ok(tracked.state.clone())
    }

    pub fn next_question(&self, id: &str) -> Result<Question, ServiceError> {
        let entry = self.session(id)?;
        let tracked = lock(&entry);
        Ok(tracked.state.next_question()?)
    }

    /// Validates, logs and applies `answer`; returns the new phase. A
    /// rejected answer or a failed append leaves the session unchanged.
    pub fn submit_answer(&self, id: &str, answer: Answer) -> Result<Phase, ServiceError> {
        let entry = self.session(id)?;
        let mut tracked = lock(&entry);
        let next = tracked.state.submit(&answer)?;
        let at_ms = now_ms();
        lock(&self.store).append(&Event::AnswerAccepted {
            session_id: id.to_string(),
            answer,
            at_ms,
        })?;
        tracked.state = next;
        if tracked.state.is_done() {
            tracked.completed_at_ms = Some(at_ms);
        }
        Ok(tracked.state.phase)
    }

    pub fn export(&self) -> Result<ExportBundle, ServiceError> {
        let entries: Vec<Arc<Mutex<Tracked>>> = {
            let registry = self.registry.read().unwrap_or_else(|e| e.into_inner());
            registry
                .order
                .iter()
                .map(|id| Arc::clone(&registry.sessions[id]))
                .collect()
        };
        let mut bundle = ExportBundle {
            records: Vec::new(),
            sessions: Vec::new(),
        };
        for entry in entries {
            let tracked = lock(&entry).clone();
            let Some(record) = tracked.state.to_record() else {
                continue;
            };
            let id = tracked.state.session_id.clone();
            let record = record.map_err(|source| ServiceError::Record {
                id: id.clone(),
                source,
            })?;
            let name = |i: usize| tracked.state.items[i].name.clone();
            bundle.sessions.push(SessionMeta {
                session_id: id,
                seed: tracked.state.seed,
                pair_order: tracked
                    .state
                    .pair_order
                    .iter()
                    .map(|&(a, b)| [name(a), name(b)])
                    .collect(),
                created_at_ms: tracked.created_at_ms,
                completed_at_ms: tracked.completed_at_ms.unwrap_or(tracked.created_at_ms),
                orientation_swapped: true,
                categories_reversed: true,
            });
            bundle.records.push(record);
        }
        Ok(bundle)
    }

    pub fn session_count(&self) -> usize {
        self.registry
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .order
            .len()
    }
}
