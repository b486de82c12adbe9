//! The curated per-level task pools, read from `tasks/level<N>.txt`.

use std::collections::BTreeMap;
use std::path::Path;
use std::{fs, io};

use deliverc_core::task::{self, PoolError, TaskSpec, LEVEL_COUNT};

const EMBEDDED: [&str; LEVEL_COUNT as usize] = [
    include_str!("../../../tasks/level1.txt"),
    include_str!("../../../tasks/level2.txt"),
    include_str!("../../../tasks/level3.txt"),
    include_str!("../../../tasks/level4.txt"),
    include_str!("../../../tasks/level5.txt"),
];

#[derive(Debug, thiserror::Error)]
pub enum BankError {
    #[error("level {level}: {source}")]
    Pool { level: u8, source: PoolError },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Loaded pools, immutable after construction.
#[derive(Clone, Debug)]
pub struct TaskBank {
    pools: BTreeMap<u8, Vec<TaskSpec>>,
}

impl TaskBank {
    pub fn embedded() -> Result<Self, BankError> {
        Self::from_texts((1..=LEVEL_COUNT).map(|l| (l, EMBEDDED[l as usize - 1].to_string())))
    }

    /// Reads `level1.txt` to `level5.txt` from `dir`. A missing file leaves
    /// that level without a pool.
    pub fn from_dir(dir: &Path) -> Result<Self, BankError> {
        let mut texts = Vec::new();
        for level in 1..=LEVEL_COUNT {
            let path = dir.join(format!("level{level}.txt"));
            match fs::read_to_string(&path) {
                Ok(text) => texts.push((level, text)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(source) => return Err(BankError::Io { path: path.display().to_string(), source }),
            }
        }
        Self::from_texts(texts)
    }

    pub fn from_texts(texts: impl IntoIterator<Item = (u8, String)>) -> Result<Self, BankError> {
        let mut pools = BTreeMap::new();
        for (level, text) in texts {
            let pool = task::parse_pool(level, &text).map_err(|source| BankError::Pool { level, source })?;
            pools.insert(level, pool);
        }
        Ok(TaskBank { pools })
    }

    pub fn load_pool(&self, level: u8) -> Result<&[TaskSpec], PoolError> {
        match self.pools.get(&level) {
            Some(p) if !p.is_empty() => Ok(p),
            _ => Err(PoolError::MissingPool(level)),
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = u8> + '_ {
        self.pools.keys().copied()
    }
}
