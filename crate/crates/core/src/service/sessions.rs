use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use uuid::Uuid;

use crate::corpus::Level;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub seed_text: String,
    pub generated_words: Vec<String>,
    pub full_text: String,
    pub timestamp: DateTime<Utc>,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: Uuid,
    pub created_at: DateTime<Utc>,
    pub level: Level,
    pub turns: Vec<Turn>,
}

/// Sessions in memory, mirrored to `<dir>/<uuid>.json` when a data
/// directory is configured. Appends to one session are serialized by that
/// session's lock.
#[derive(Debug, Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<SessionRecord>>>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) `dir` and loads every session file in it.
    /// Unreadable files are skipped with a warning.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            match fs::read(&path).map_err(crate::Error::from).and_then(|b| Ok(serde_json::from_slice::<SessionRecord>(&b)?)) {
                Ok(rec) => {
                    sessions.insert(rec.session_id, Arc::new(Mutex::new(rec)));
                }
                Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping unreadable session file"),
            }
        }
        tracing::info!(count = sessions.len(), dir = %dir.display(), "sessions loaded");
        Ok(SessionStore {
            dir: Some(dir.to_path_buf()),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, level: Level) -> Result<SessionRecord> {
        let rec = SessionRecord {
            session_id: Uuid::new_v4(),
            created_at: Utc::now(),
            level,
            turns: Vec::new(),
        };
        self.persist(&rec)?;
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(rec.session_id, Arc::new(Mutex::new(rec.clone())));
        Ok(rec)
    }

    fn handle(&self, id: &Uuid) -> Option<Arc<Mutex<SessionRecord>>> {
        self.sessions.read().expect("session map poisoned").get(id).cloned()
    }

    pub async fn get(&self, id: &Uuid) -> Option<SessionRecord> {
        match self.handle(id) {
            Some(h) => Some(h.lock().await.clone()),
            None => None,
        }
    }

    pub fn contains(&self, id: &Uuid) -> bool {
        self.sessions.read().expect("session map poisoned").contains_key(id)
    }

    /// Appends `turn` and rewrites the session file. Returns `None` for an
    /// unknown id.
    pub async fn append(&self, id: &Uuid, turn: Turn) -> Result<Option<usize>> {
        let Some(handle) = self.handle(id) else { return Ok(None) };
        let mut rec = handle.lock().await;
        rec.turns.push(turn);
        if let Err(e) = self.persist(&rec) {
            rec.turns.pop();
            return Err(e);
        }
        Ok(Some(rec.turns.len()))
    }

    fn persist(&self, rec: &SessionRecord) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(format!("{}.json", rec.session_id));
        let tmp = dir.join(format!("{}.json.tmp", rec.session_id));
        fs::write(&tmp, serde_json::to_vec_pretty(rec)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}
