//! Isolated run directories, curated parent archives and checkpoints.
//!
//! Layout under a run's output root:
//!
//! ```text
//! <root>/
//!   events.jsonl          event log, one JSON record per line
//!   checkpoint.json       last complete checkpoint (atomic temp + rename)
//!   workspaces/<seed-id>/ one fresh directory per child run
//!   archives/<seed-id>/   immutable archive of each verified run
//! ```
//!
//! A child workspace holds `data/` (link or copy), `Previous Experiments/parent_<i>/`
//! (curated parent archives), an optional `Jumpstart/` folder and `seed.json`.
//! An archive holds `manifest.json`, `outcome.json`, `experiments/`, `solution/`
//! and `logs/`.

mod archive;
mod checkpoint;
mod curate;
mod materialize;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::operator::Operator;

pub use archive::{archive_run, load_archive, ArchiveManifest};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
pub use curate::{curate_parent_archive, execute_plan, CopyPlan, CurationRules, Excluded, PlannedCopy};
pub use materialize::{materialize_seed, DataMode, DataSource, SeedManifest, Workspace};

/// Folder that exposes parent archives inside a child workspace.
pub const PREVIOUS_EXPERIMENTS_DIR: &str = "Previous Experiments";
pub const JUMPSTART_DIR: &str = "Jumpstart";
pub const DATA_DIR: &str = "data";
pub const SEED_MANIFEST_FILE: &str = "seed.json";
pub const ARCHIVE_MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0} already exists; run directories are never reused")]
    Exists(PathBuf),
    #[error("parent archive `{id}` not found at {path}")]
    MissingParent { id: String, path: PathBuf },
    #[error("archive rejected: {0}")]
    Rejected(String),
    #[error("workspace {0} was already archived")]
    AlreadyArchived(PathBuf),
    #[error("{path}: malformed manifest: {detail}")]
    Manifest { path: PathBuf, detail: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io { path: path.to_path_buf(), source }
}

/// Lineage metadata carried by an archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub operator: Operator,
    pub iteration: u32,
    pub slot: usize,
    pub parent_ids: Vec<String>,
}

/// Handle to an immutable archived run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRef {
    pub id: String,
    pub path: PathBuf,
    pub score: f64,
    pub meta: ArchiveMeta,
}

impl ArchiveRef {
    pub fn is_resolvable(&self) -> bool {
        self.path.join(ARCHIVE_MANIFEST_FILE).is_file()
    }
}

/// Output root of one run.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    /// Create a fresh store. Fails if `root` already holds a run.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, WorkspaceError> {
        let store = RunStore { root: root.into() };
        if store.events_path().exists() || store.checkpoint_path().exists() {
            return Err(WorkspaceError::Exists(store.root.clone()));
        }
        for dir in [store.root.clone(), store.workspaces_dir(), store.archives_dir()] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(store)
    }

    pub fn open(root: impl Into<PathBuf>) -> Self {
        RunStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn events_path(&self) -> PathBuf {
        self.root.join("events.jsonl")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.root.join(checkpoint::CHECKPOINT_FILE)
    }

    pub fn workspaces_dir(&self) -> PathBuf {
        self.root.join("workspaces")
    }

    pub fn archives_dir(&self) -> PathBuf {
        self.root.join("archives")
    }

    pub fn workspace_dir(&self, seed_id: &str) -> PathBuf {
        self.workspaces_dir().join(seed_id)
    }

    pub fn archive_dir(&self, seed_id: &str) -> PathBuf {
        self.archives_dir().join(seed_id)
    }

    /// All archives currently registered, keyed by id.
    pub fn archives(&self) -> Result<BTreeMap<String, ArchiveRef>, WorkspaceError> {
        let dir = self.archives_dir();
        let mut out = BTreeMap::new();
        if !dir.exists() {
            return Ok(out);
        }
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if entry.path().join(ARCHIVE_MANIFEST_FILE).is_file() {
                let archive = load_archive(&entry.path())?;
                out.insert(archive.id.clone(), archive);
            }
        }
        Ok(out)
    }
}

/// Remove a directory tree that may contain read-only archive files.
pub(crate) fn remove_tree(path: &Path) -> Result<(), WorkspaceError> {
    if !path.exists() {
        return Ok(());
    }
    fs::remove_dir_all(path).map_err(io_err(path))
}
