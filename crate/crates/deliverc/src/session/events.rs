//! Session events and the fold that turns them into session records.

use std::collections::BTreeMap;

use deliverc_core::task::TASKS_PER_LEVEL;
use deliverc_core::TaskSpec;
use serde::{Deserialize, Serialize};

use crate::gateway::TaskOrigin;
use crate::grading::AttemptResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskRef {
    pub level: u8,
    pub ordinal: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttemptEvent {
    pub timestamp: String,
    pub session_id: String,
    pub level: u8,
    pub ordinal: u8,
    pub source_text: String,
    pub result: AttemptResult,
    pub trace_text: Option<String>,
}

/// One line of the event log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    #[serde(rename_all = "camelCase")]
    SessionStarted { timestamp: String, session_id: String, student_id: String, max_level: u8 },
    #[serde(rename_all = "camelCase")]
    TaskIssued { timestamp: String, session_id: String, level: u8, ordinal: u8, origin: TaskOrigin, task: TaskSpec },
    Attempt(AttemptEvent),
}

impl Event {
    pub fn session_id(&self) -> &str {
        match self {
            Event::SessionStarted { session_id, .. } | Event::TaskIssued { session_id, .. } => session_id,
            Event::Attempt(a) => &a.session_id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionRecord {
    pub session_id: String,
    pub student_id: String,
    pub level: u8,
    pub task_ordinal: u8,
    pub completed_count: u32,
    pub mistake_count: u32,
    pub last_completed: Option<TaskRef>,
    pub current_task: Option<TaskSpec>,
    /// The current task was served from the pool because generation failed.
    pub degraded: bool,
    pub finished: bool,
    pub max_level: u8,
    /// Prompt texts of completed tasks, oldest first.
    pub history: Vec<String>,
}

impl SessionRecord {
    fn new(session_id: &str, student_id: &str, max_level: u8) -> Self {
        SessionRecord {
            session_id: session_id.into(),
            student_id: student_id.into(),
            level: 1,
            task_ordinal: 1,
            completed_count: 0,
            mistake_count: 0,
            last_completed: None,
            current_task: None,
            degraded: false,
            finished: false,
            max_level,
            history: Vec::new(),
        }
    }

    pub fn position(&self) -> TaskRef {
        TaskRef { level: self.level, ordinal: self.task_ordinal }
    }

    fn advance(&mut self) {
        if self.task_ordinal < TASKS_PER_LEVEL {
            self.task_ordinal += 1;
        } else if self.level < self.max_level {
            self.level += 1;
            self.task_ordinal = 1;
        } else {
            self.finished = true;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("event {index}: session {session} is started twice")]
    DuplicateSession { index: usize, session: String },
    #[error("event {index}: unknown session {session}")]
    UnknownSession { index: usize, session: String },
    #[error("event {index}: {reason}")]
    Inconsistent { index: usize, reason: String },
}

/// Every session's record, as folded from the event log.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sessions {
    records: BTreeMap<String, SessionRecord>,
    applied: usize,
}

impl Sessions {
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a Event>) -> Result<Self, ReplayError> {
        let mut s = Sessions::default();
        for e in events {
            s.apply(e)?;
        }
        Ok(s)
    }

    /// Folds one event in. The state is unchanged when the event does not fit.
    pub fn apply(&mut self, event: &Event) -> Result<(), ReplayError> {
        let index = self.applied;
        let unknown = || ReplayError::UnknownSession { index, session: event.session_id().into() };
        match event {
            Event::SessionStarted { session_id, student_id, max_level, .. } => {
                if self.records.contains_key(session_id) {
                    return Err(ReplayError::DuplicateSession { index, session: session_id.clone() });
                }
                self.records.insert(session_id.clone(), SessionRecord::new(session_id, student_id, *max_level));
            }
            Event::TaskIssued { session_id, level, ordinal, origin, task, .. } => {
                let r = self.records.get_mut(session_id).ok_or_else(unknown)?;
                if r.finished || r.position() != (TaskRef { level: *level, ordinal: *ordinal }) {
                    return Err(ReplayError::Inconsistent {
                        index,
                        reason: format!("task issued for {level}.{ordinal} but the session is at {}.{}", r.level, r.task_ordinal),
                    });
                }
                r.current_task = Some(task.clone());
                r.degraded = *origin != TaskOrigin::Generated;
            }
            Event::Attempt(a) => {
                let r = self.records.get_mut(&a.session_id).ok_or_else(unknown)?;
                if r.finished || r.current_task.is_none() || r.position() != (TaskRef { level: a.level, ordinal: a.ordinal }) {
                    return Err(ReplayError::Inconsistent { index, reason: "attempt without a matching open task".into() });
                }
                if a.result.is_pass() {
                    let task = r.current_task.take().expect("checked above");
                    r.history.push(task.prompt_text);
                    r.completed_count += 1;
                    r.last_completed = Some(r.position());
                    r.degraded = false;
                    r.advance();
                } else {
                    r.mistake_count += 1;
                }
            }
        }
        self.applied += 1;
        Ok(())
    }

    pub fn get(&self, session_id: &str) -> Option<&SessionRecord> {
        self.records.get(session_id)
    }

    pub fn by_student(&self, student_id: &str) -> Option<&SessionRecord> {
        self.records.values().find(|r| r.student_id == student_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &SessionRecord> {
        self.records.values()
    }

    /// Pretty JSON of every record keyed by session id, with a trailing
    /// newline. Equal states give byte-identical snapshots.
    pub fn snapshot(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.records).expect("records serialize");
        text.push('\n');
        text
    }
}
