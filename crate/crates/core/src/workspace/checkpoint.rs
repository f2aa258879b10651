use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{ElitePool, StopReason, StoppingState};
use crate::hedge::HedgeState;

use super::SCHEMA_VERSION;

pub(super) const CHECKPOINT_FILE: &str = "checkpoint.json";
const TEMP_SUFFIX: &str = ".tmp";

/// Engine state at an iteration barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    /// Last completed iteration (0 before the first).
    pub iteration: u32,
    pub pool: ElitePool,
    pub hedge: HedgeState,
    pub stopping: StoppingState,
    /// Every random stream is derived from this seed and the iteration.
    pub master_seed: u64,
    /// Byte length of the event log when this checkpoint was taken.
    pub event_offset: u64,
    pub finished: Option<StopReason>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt checkpoint {path}: field `{field}`: {detail}")]
    Corrupt { path: PathBuf, field: String, detail: String },
    #[error("checkpoint {path} has schema version {found}, expected {SCHEMA_VERSION}")]
    Version { path: PathBuf, found: u32 },
}

/// Write `state` atomically into `store` (temp file, fsync, rename).
pub fn save_checkpoint(state: &Checkpoint, store: &Path) -> Result<(), CheckpointError> {
    let final_path = store.join(CHECKPOINT_FILE);
    let temp_path = store.join(format!("{CHECKPOINT_FILE}{TEMP_SUFFIX}"));
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CheckpointError::Io { path, source }
    };
    let body = serde_json::to_vec_pretty(state).expect("checkpoint serializes");
    let mut file = File::create(&temp_path).map_err(io(&temp_path))?;
    file.write_all(&body).map_err(io(&temp_path))?;
    file.sync_all().map_err(io(&temp_path))?;
    drop(file);
    fs::rename(&temp_path, &final_path).map_err(io(&final_path))?;
    Ok(())
}

/// Load the last complete checkpoint. `Ok(None)` means none was ever written;
/// a stray temp file from an interrupted save is ignored.
pub fn load_checkpoint(store: &Path) -> Result<Option<Checkpoint>, CheckpointError> {
    let path = store.join(CHECKPOINT_FILE);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(source) => return Err(CheckpointError::Io { path, source }),
    };
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let state: Checkpoint = serde_path_to_error::deserialize(de).map_err(|e| CheckpointError::Corrupt {
        path: path.clone(),
        field: e.path().to_string(),
        detail: e.inner().to_string(),
    })?;
    if state.schema_version != SCHEMA_VERSION {
        return Err(CheckpointError::Version { path, found: state.schema_version });
    }
    state.hedge.validate().map_err(|e| CheckpointError::Corrupt {
        path: path.clone(),
        field: "hedge".into(),
        detail: e.to_string(),
    })?;
    Ok(Some(state))
}
