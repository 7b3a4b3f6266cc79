//! Sessions on disk, one `{id}.json` document each.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::session::{SessionError, TrialSession};

/// Environment variable naming the default store directory.
pub const STORE_ENV: &str = "WEDESIGN_STORE";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no trial with id {0}")]
    NotFound(String),
    #[error("invalid trial id {0:?}")]
    InvalidId(String),
    #[error("revision conflict: expected {expected}, stored {actual}")]
    RevisionConflict { expected: u64, actual: u64 },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("stored session is unreadable: {0}")]
    Format(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct FileStore {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl FileStore {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    /// The directory from `WEDESIGN_STORE`, or `./trials`.
    pub fn default_dir() -> PathBuf {
        std::env::var_os(STORE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("trials"))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    /// Loads a session and checks that its audit log reproduces its state.
    pub fn load(&self, id: &str) -> Result<TrialSession, StoreError> {
        match read_session_file(&self.path(id)?) {
            Err(StoreError::Io(e)) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound(id.to_string())),
            other => other,
        }
    }

    fn write(&self, session: &TrialSession) -> Result<(), StoreError> {
        write_session_file(&self.path(&session.id)?, session)
    }

    pub fn create(&self, session: &TrialSession) -> Result<(), StoreError> {
        if self.path(&session.id)?.exists() {
            return Err(StoreError::RevisionConflict { expected: 0, actual: session.revision });
        }
        self.write(session)
    }

    /// Replaces the stored session if its revision is still `expected`.
    pub fn save(&self, session: &TrialSession, expected: u64) -> Result<(), StoreError> {
        let stored = self.load(&session.id)?;
        if stored.revision != expected {
            return Err(StoreError::RevisionConflict { expected, actual: stored.revision });
        }
        self.write(session)
    }
}

/// Reads a session document and checks it against its audit log.
pub fn read_session_file(path: &Path) -> Result<TrialSession, StoreError> {
    let text = fs::read_to_string(path)?;
    let session: TrialSession = serde_json::from_str(&text)?;
    session.verify()?;
    Ok(session)
}

/// Writes a session document, replacing `path` atomically.
pub fn write_session_file(path: &Path, session: &TrialSession) -> Result<(), StoreError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    serde_json::to_writer_pretty(&mut tmp, session)?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
