//! Event persistence: an append-only JSON-lines log plus a snapshot file.

use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use super::events::Event;

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage unavailable: {0}")]
    Unavailable(String),
    #[error("event log line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

impl From<io::Error> for StoreError {
    fn from(e: io::Error) -> Self {
        StoreError::Unavailable(e.to_string())
    }
}

pub trait EventStore: Send + Sync {
    fn load(&self) -> Result<Vec<Event>, StoreError>;
    /// Appends events in order, one record per line.
    fn append(&self, events: &[Event]) -> Result<(), StoreError>;
    fn write_snapshot(&self, text: &str) -> Result<(), StoreError>;
}

pub fn encode(event: &Event) -> String {
    serde_json::to_string(event).expect("events serialize")
}

pub fn decode_log(reader: impl BufRead) -> Result<Vec<Event>, StoreError> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt { line: i + 1, reason: e.to_string() })?;
        events.push(event);
    }
    Ok(events)
}

pub fn read_log(path: &Path) -> Result<Vec<Event>, StoreError> {
    match fs::File::open(path) {
        Ok(f) => decode_log(BufReader::new(f)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

/// Keeps `events.jsonl` and `snapshot.json` in a directory.
pub struct FileStore {
    dir: PathBuf,
}

impl FileStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(FileStore { dir })
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join(LOG_FILE)
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.dir.join(SNAPSHOT_FILE)
    }
}

impl EventStore for FileStore {
    fn load(&self) -> Result<Vec<Event>, StoreError> {
        read_log(&self.log_path())
    }

    fn append(&self, events: &[Event]) -> Result<(), StoreError> {
        let mut file = OpenOptions::new().create(true).append(true).open(self.log_path())?;
        for e in events {
            let mut line = encode(e);
            line.push('\n');
            file.write_all(line.as_bytes())?;
        }
        file.flush()?;
        Ok(())
    }

    fn write_snapshot(&self, text: &str) -> Result<(), StoreError> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.snapshot_path())?;
        Ok(())
    }
}

/// In-memory store whose availability can be switched off, for tests.
#[derive(Default)]
pub struct MemoryStore {
    lines: Mutex<Vec<String>>,
    snapshot: Mutex<Option<String>>,
    down: AtomicBool,
}

impl MemoryStore {
    pub fn set_available(&self, up: bool) {
        self.down.store(!up, Ordering::SeqCst);
    }

    pub fn lines(&self) -> Vec<String> {
        self.lines.lock().unwrap().clone()
    }

    pub fn snapshot(&self) -> Option<String> {
        self.snapshot.lock().unwrap().clone()
    }

    fn check(&self) -> Result<(), StoreError> {
        if self.down.load(Ordering::SeqCst) {
            return Err(StoreError::Unavailable("memory store switched off".into()));
        }
        Ok(())
    }
}

impl EventStore for MemoryStore {
    fn load(&self) -> Result<Vec<Event>, StoreError> {
        self.check()?;
        let text = self.lines.lock().unwrap().join("\n");
        decode_log(text.as_bytes())
    }

    fn append(&self, events: &[Event]) -> Result<(), StoreError> {
        self.check()?;
        self.lines.lock().unwrap().extend(events.iter().map(encode));
        Ok(())
    }

    fn write_snapshot(&self, text: &str) -> Result<(), StoreError> {
        self.check()?;
        *self.snapshot.lock().unwrap() = Some(text.to_string());
        Ok(())
    }
}

impl<T: EventStore + ?Sized> EventStore for std::sync::Arc<T> {
    fn load(&self) -> Result<Vec<Event>, StoreError> {
        (**self).load()
    }

    fn append(&self, events: &[Event]) -> Result<(), StoreError> {
        (**self).append(events)
    }

    fn write_snapshot(&self, text: &str) -> Result<(), StoreError> {
        (**self).write_snapshot(text)
    }
}
