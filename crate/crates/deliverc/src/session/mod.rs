//! The gameplay loop: sessions, task issue, submissions and progress, kept
//! as an append-only event log.

pub mod analytics;
pub mod events;
pub mod store;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use deliverc_core::task::LEVEL_COUNT;
use deliverc_core::interp::Diagnostic;
use deliverc_core::TaskSpec;
use serde::{Deserialize, Serialize};

use crate::bank::TaskBank;
use crate::gateway::feedback::Feedback;
use crate::gateway::{self, guard, Gateway, GatewayError, GenerateRequest, TaskOrigin, Translation};
use crate::grading::{self, AttemptResult};
use events::{AttemptEvent, Event, ReplayError, SessionRecord, Sessions};
use store::{EventStore, StoreError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServiceConfig {
    pub max_level: u8,
    pub llm_translation: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { max_level: LEVEL_COUNT, llm_translation: false }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("student id must be 1 to 64 printable characters")]
    InvalidStudent,
    #[error("the session has no active task")]
    NoActiveTask,
    #[error("the session has finished every level")]
    Finished,
    #[error("storage unavailable: {0}")]
    StorageUnavailable(String),
    #[error("level {0} has no task pool")]
    MissingPool(u8),
    #[error("event log does not replay: {0}")]
    Replay(#[from] ReplayError),
}

impl From<StoreError> for SessionError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Unavailable(m) => SessionError::StorageUnavailable(m),
            corrupt => SessionError::StorageUnavailable(corrupt.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Started {
    pub record: SessionRecord,
    /// Bearer token for this process's lifetime.
    pub token: String,
    pub resumed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IssuedTask {
    pub task: TaskSpec,
    pub degraded: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubmitOutcome {
    pub result: AttemptResult,
    pub feedback: Feedback,
    /// Commands to animate, in wire format.
    pub trace: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    /// How the end state differs from the task's, on a mismatch.
    pub differences: Vec<String>,
    pub translation: Option<Translation>,
    pub record: SessionRecord,
    /// False when the attempt is only buffered because storage is down.
    pub persisted: bool,
}

type Clock = Box<dyn Fn() -> String + Send + Sync>;
type IdSource = Box<dyn Fn() -> String + Send + Sync>;

pub struct SessionService {
    gateway: Gateway,
    bank: TaskBank,
    store: Box<dyn EventStore>,
    config: ServiceConfig,
    sessions: Mutex<Sessions>,
    /// Events applied in memory but not yet written.
    pending: Mutex<Vec<Event>>,
    op_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    tokens: Mutex<HashMap<String, String>>,
    clock: Clock,
    new_session_id: IdSource,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

pub fn utc_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl SessionService {
    /// Rebuilds every session from the store's log.
    pub fn open(
        gateway: Gateway,
        bank: TaskBank,
        store: Box<dyn EventStore>,
        config: ServiceConfig,
    ) -> Result<Self, SessionError> {
        let sessions = Sessions::replay(&store.load()?)?;
        Ok(SessionService {
            gateway,
            bank,
            store,
            config,
            sessions: Mutex::new(sessions),
            pending: Mutex::new(Vec::new()),
            op_locks: Mutex::new(HashMap::new()),
            tokens: Mutex::new(HashMap::new()),
            clock: Box::new(utc_now),
            new_session_id: Box::new(|| uuid::Uuid::new_v4().to_string()),
        })
    }

    pub fn with_clock(mut self, clock: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    /// Replaces the random session id generator.
    pub fn with_session_ids(mut self, ids: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.new_session_id = Box::new(ids);
        self
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn config(&self) -> ServiceConfig {
        self.config
    }

    fn op_lock(&self, key: &str) -> Arc<Mutex<()>> {
        lock(&self.op_locks).entry(key.to_string()).or_default().clone()
    }

    /// Applies `event` in memory and writes it with any buffered events. When
    /// `buffer` is false a write failure undoes nothing because the event is
    /// only applied after it is stored.
    fn commit(&self, event: Event, buffer: bool) -> Result<bool, SessionError> {
        let mut pending = lock(&self.pending);
        let mut batch = pending.clone();
        batch.push(event.clone());
        match self.store.append(&batch) {
            Ok(()) => {
                pending.clear();
                let mut sessions = lock(&self.sessions);
                sessions.apply(&event)?;
                if let Err(e) = self.store.write_snapshot(&sessions.snapshot()) {
                    log::warn!("snapshot not written: {e}");
                }
                Ok(true)
            }
            Err(e) if buffer => {
                log::warn!("event buffered, {e}");
                lock(&self.sessions).apply(&event)?;
                pending.push(event);
                Ok(false)
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Retries writing buffered events.
    pub fn flush(&self) -> Result<(), SessionError> {
        let mut pending = lock(&self.pending);
        if pending.is_empty() {
            return Ok(());
        }
        self.store.append(&pending)?;
        pending.clear();
        if let Err(e) = self.store.write_snapshot(&lock(&self.sessions).snapshot()) {
            log::warn!("snapshot not written: {e}");
        }
        Ok(())
    }

    pub fn pending_events(&self) -> usize {
        lock(&self.pending).len()
    }

    pub fn start_or_resume(&self, student_id: &str) -> Result<Started, SessionError> {
        let student_id = student_id.trim();
        if student_id.is_empty() || student_id.chars().count() > 64 || student_id.chars().any(char::is_control) {
            return Err(SessionError::InvalidStudent);
        }
        let guard = self.op_lock(&format!("student:{student_id}"));
        let _held = lock(&guard);
        let existing = lock(&self.sessions).by_student(student_id).cloned();
        let (record, resumed) = match existing {
            Some(r) => (r, true),
            None => {
                let session_id = (self.new_session_id)();
                let event = Event::SessionStarted {
                    timestamp: (self.clock)(),
                    session_id: session_id.clone(),
                    student_id: student_id.to_string(),
                    max_level: self.config.max_level,
                };
                self.commit(event, false)?;
                (self.record(&session_id)?, false)
            }
        };
        let token = uuid::Uuid::new_v4().simple().to_string();
        lock(&self.tokens).insert(token.clone(), record.session_id.clone());
        Ok(Started { record, token, resumed })
    }

    /// The session a bearer token belongs to.
    pub fn session_for_token(&self, token: &str) -> Option<String> {
        lock(&self.tokens).get(token).cloned()
    }

    pub fn record(&self, session_id: &str) -> Result<SessionRecord, SessionError> {
        lock(&self.sessions).get(session_id).cloned().ok_or_else(|| SessionError::UnknownSession(session_id.into()))
    }

    pub fn issue_task(&self, session_id: &str) -> Result<IssuedTask, SessionError> {
        let guard = self.op_lock(session_id);
        let _held = lock(&guard);
        self.issue_locked(session_id)
    }

    fn issue_locked(&self, session_id: &str) -> Result<IssuedTask, SessionError> {
        let record = self.record(session_id)?;
        if record.finished {
            return Err(SessionError::Finished);
        }
        if let Some(task) = record.current_task {
            return Ok(IssuedTask { task, degraded: record.degraded });
        }
        let (level, ordinal) = (record.level, record.task_ordinal);
        let pool = self.bank.load_pool(level).map_err(|_| SessionError::MissingPool(level))?;
        let seed = gateway::seed_for(session_id, level, ordinal);
        let request = GenerateRequest { level, ordinal, exemplars: pool, history: &record.history, fallback_seed: seed };
        let (task, origin) = match self.gateway.generate_task(&request) {
            Ok(g) => (g.task, g.origin),
            Err(e) => {
                if let GatewayError::ProviderUnavailable(p) = &e {
                    log::warn!("provider unavailable ({p}), serving an exemplar");
                }
                let mut task = gateway::pick_exemplar(pool, &record.history, ordinal, seed)
                    .cloned()
                    .ok_or(SessionError::MissingPool(level))?;
                task.ordinal = ordinal;
                (task, TaskOrigin::ExemplarFallback)
            }
        };
        let event = Event::TaskIssued {
            timestamp: (self.clock)(),
            session_id: session_id.to_string(),
            level,
            ordinal,
            origin,
            task: task.clone(),
        };
        self.commit(event, true)?;
        Ok(IssuedTask { task, degraded: origin != TaskOrigin::Generated })
    }

    /// Grades a submission against the current task, records the attempt and,
    /// on a pass, advances and primes the next task.
    pub fn submit(&self, session_id: &str, source: &str) -> Result<SubmitOutcome, SessionError> {
        let guard = self.op_lock(session_id);
        let _held = lock(&guard);
        let record = self.record(session_id)?;
        if record.finished {
            return Err(SessionError::Finished);
        }
        let task = record.current_task.ok_or(SessionError::NoActiveTask)?;
        let guarded = guard::guard_input(source);
        let local = grading::grade(&task, source);
        let feedback = self.gateway.evaluate_code(&task, &guarded, &local);
        let translation = match (&local.trace, self.config.llm_translation) {
            (Some(trace), true) if !trace.is_empty() => Some(self.gateway.translate_code(&guarded, trace)),
            _ => None,
        };
        let trace = local.trace_text();
        let event = Event::Attempt(AttemptEvent {
            timestamp: (self.clock)(),
            session_id: session_id.to_string(),
            level: record.level,
            ordinal: record.task_ordinal,
            source_text: source.to_string(),
            result: local.result,
            trace_text: trace.clone(),
        });
        let mut persisted = self.commit(event, true)?;
        if local.passed() && !self.record(session_id)?.finished {
            match self.issue_locked(session_id) {
                Ok(_) => persisted &= self.pending_events() == 0,
                Err(e) => log::warn!("next task not primed: {e}"),
            }
        }
        Ok(SubmitOutcome {
            result: local.result,
            feedback,
            trace,
            diagnostics: local.diagnostics,
            differences: local.differences,
            translation,
            record: self.record(session_id)?,
            persisted,
        })
    }

    /// Snapshot of every session as the service currently holds it.
    pub fn snapshot(&self) -> String {
        lock(&self.sessions).snapshot()
    }

    pub fn events(&self) -> Result<Vec<Event>, SessionError> {
        let mut events = self.store.load()?;
        events.extend(lock(&self.pending).iter().cloned());
        Ok(events)
    }

    pub fn analytics_export(&self) -> Result<String, SessionError> {
        Ok(analytics::export(&self.events()?))
    }
}
