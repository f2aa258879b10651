use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::engine::{AgentSeed, ContextParams};
use crate::operator::Operator;

use super::{
    curate_parent_archive, execute_plan, io_err, CurationRules, WorkspaceError, DATA_DIR, JUMPSTART_DIR,
    PREVIOUS_EXPERIMENTS_DIR, SCHEMA_VERSION, SEED_MANIFEST_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataMode {
    Copy,
    #[default]
    Link,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: PathBuf,
    #[serde(default)]
    pub mode: DataMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestParent {
    pub id: String,
    pub score: f64,
    /// Location relative to the workspace root.
    pub dir: String,
}

/// `seed.json`: what the child run was launched with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub schema_version: u32,
    pub seed_id: String,
    pub iteration: u32,
    pub slot: usize,
    pub operator: Operator,
    pub parents: Vec<ManifestParent>,
    pub context: ContextParams,
}

impl SeedManifest {
    pub fn read(path: &Path) -> Result<Self, WorkspaceError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text)
            .map_err(|e| WorkspaceError::Manifest { path: path.to_path_buf(), detail: e.to_string() })
    }
}

/// A materialized child workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub root: PathBuf,
    pub manifest_path: PathBuf,
    pub data_path: Option<PathBuf>,
}

pub fn parent_dir_name(index: usize) -> String {
    format!("{PREVIOUS_EXPERIMENTS_DIR}/parent_{index}")
}

/// Create a fresh workspace for `seed` at `dest`.
///
/// `dest` must not exist. Parents land under `Previous Experiments/parent_<i>`
/// in seed order, each a curated copy of its archive.
pub fn materialize_seed(
    seed: &AgentSeed,
    dest: &Path,
    data: Option<&DataSource>,
    rules: &CurationRules,
    jumpstart: Option<&Path>,
) -> Result<Workspace, WorkspaceError> {
    for parent in &seed.parents {
        if !parent.is_resolvable() {
            return Err(WorkspaceError::MissingParent { id: parent.id.clone(), path: parent.path.clone() });
        }
    }
    if let Some(up) = dest.parent() {
        fs::create_dir_all(up).map_err(io_err(up))?;
    }
    match fs::create_dir(dest) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
            return Err(WorkspaceError::Exists(dest.to_path_buf()))
        }
        Err(e) => return Err(io_err(dest)(e)),
    }

    let data_path = match data {
        Some(src) => Some(provision_data(src, &dest.join(DATA_DIR))?),
        None => None,
    };

    let mut parents = Vec::with_capacity(seed.parents.len());
    for (i, parent) in seed.parents.iter().enumerate() {
        let rel = parent_dir_name(i);
        let plan = curate_parent_archive(&parent.path, rules)?;
        for w in &plan.warnings {
            log::warn!("curating {}: {w}", parent.id);
        }
        execute_plan(&plan, &dest.join(&rel))?;
        parents.push(ManifestParent { id: parent.id.clone(), score: parent.score, dir: rel });
    }

    if seed.operator == Operator::Jumpstart {
        if let Some(refs) = jumpstart {
            let plan = curate_parent_archive(refs, rules)?;
            execute_plan(&plan, &dest.join(JUMPSTART_DIR))?;
        }
    }

    let manifest = SeedManifest {
        schema_version: SCHEMA_VERSION,
        seed_id: seed.id.clone(),
        iteration: seed.iteration,
        slot: seed.slot,
        operator: seed.operator,
        parents,
        context: seed.context.clone(),
    };
    let manifest_path = dest.join(SEED_MANIFEST_FILE);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, body).map_err(io_err(&manifest_path))?;

    Ok(Workspace { root: dest.to_path_buf(), manifest_path, data_path })
}

fn provision_data(src: &DataSource, dest: &Path) -> Result<PathBuf, WorkspaceError> {
    let source = &src.path;
    fs::metadata(source).map_err(io_err(source))?;
    match src.mode {
        #[cfg(unix)]
        DataMode::Link => {
            let abs = fs::canonicalize(source).map_err(io_err(source))?;
            std::os::unix::fs::symlink(&abs, dest).map_err(io_err(dest))?;
        }
        #[cfg(not(unix))]
        DataMode::Link => copy_tree(source, dest)?,
        DataMode::Copy => copy_tree(source, dest)?,
    }
    Ok(dest.to_path_buf())
}

fn copy_tree(source: &Path, dest: &Path) -> Result<(), WorkspaceError> {
    if source.is_file() {
        fs::create_dir_all(dest).map_err(io_err(dest))?;
        let name = source.file_name().expect("file has a name");
        fs::copy(source, dest.join(name)).map_err(io_err(source))?;
        return Ok(());
    }
    for entry in WalkDir::new(source).sort_by_file_name() {
        let entry = entry.map_err(|e| WorkspaceError::Rejected(e.to_string()))?;
        let rel = entry.path().strip_prefix(source).expect("under source");
        let target = dest.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&target).map_err(io_err(&target))?;
        } else {
            fs::copy(entry.path(), &target).map_err(io_err(entry.path()))?;
        }
    }
    Ok(())
}
