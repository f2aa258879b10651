use std::fs::{self, OpenOptions};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::executor::{ExperimentRecord, RunOutcome};

use super::{
    curate_parent_archive, execute_plan, io_err, ArchiveMeta, ArchiveRef, CurationRules, WorkspaceError,
    ARCHIVE_MANIFEST_FILE, DATA_DIR, JUMPSTART_DIR, SCHEMA_VERSION, SEED_MANIFEST_FILE,
};

const ARCHIVED_MARKER: &str = ".archived";

/// `manifest.json` of an archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveManifest {
    pub schema_version: u32,
    pub id: String,
    pub score: f64,
    #[serde(flatten)]
    pub meta: ArchiveMeta,
    pub experiments: Vec<ExperimentRecord>,
}

/// Archive a verified run's workspace into `dest`.
///
/// The workspace is marked so a second call fails; archived files are made
/// read-only. Inherited folders, data and the archive marker are not copied
/// into `solution/`.
pub fn archive_run(
    workspace: &Path,
    outcome: &RunOutcome,
    id: &str,
    meta: ArchiveMeta,
    dest: &Path,
) -> Result<ArchiveRef, WorkspaceError> {
    let score = match outcome.score {
        Some(s) if outcome.verified && s.is_finite() && !outcome.experiments.is_empty() => s,
        _ => return Err(WorkspaceError::Rejected(format!("outcome for {id} is not verified"))),
    };

    let marker = workspace.join(ARCHIVED_MARKER);
    match OpenOptions::new().write(true).create_new(true).open(&marker) {
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
            return Err(WorkspaceError::AlreadyArchived(workspace.to_path_buf()))
        }
        Err(e) => return Err(io_err(&marker)(e)),
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

    let mut rules = CurationRules::default();
    rules.excluded_dir_names.extend([DATA_DIR, JUMPSTART_DIR, "logs"].map(String::from));
    rules.excluded_globs.extend([ARCHIVED_MARKER, SEED_MANIFEST_FILE].map(String::from));
    let plan = curate_parent_archive(workspace, &rules)?;
    execute_plan(&plan, &dest.join("solution"))?;

    let logs = workspace.join("logs");
    if logs.is_dir() {
        execute_plan(&curate_parent_archive(&logs, &CurationRules::default())?, &dest.join("logs"))?;
    } else {
        fs::create_dir_all(dest.join("logs")).map_err(io_err(dest))?;
    }
    let seed_manifest = workspace.join(SEED_MANIFEST_FILE);
    if seed_manifest.is_file() {
        fs::copy(&seed_manifest, dest.join(SEED_MANIFEST_FILE)).map_err(io_err(&seed_manifest))?;
    }

    let exp_dir = dest.join("experiments");
    fs::create_dir_all(&exp_dir).map_err(io_err(&exp_dir))?;
    for (i, exp) in outcome.experiments.iter().enumerate() {
        let path = exp_dir.join(format!("{i:03}_{}.json", sanitize(&exp.run_name)));
        write_json(&path, exp)?;
    }
    write_json(&dest.join("outcome.json"), outcome)?;

    let manifest = ArchiveManifest {
        schema_version: SCHEMA_VERSION,
        id: id.to_string(),
        score,
        meta: meta.clone(),
        experiments: outcome.experiments.clone(),
    };
    write_json(&dest.join(ARCHIVE_MANIFEST_FILE), &manifest)?;
    seal(dest)?;

    Ok(ArchiveRef { id: id.to_string(), path: dest.to_path_buf(), score, meta })
}

pub fn load_archive(path: &Path) -> Result<ArchiveRef, WorkspaceError> {
    let file = path.join(ARCHIVE_MANIFEST_FILE);
    let text = fs::read_to_string(&file).map_err(io_err(&file))?;
    let manifest: ArchiveManifest =
        serde_json::from_str(&text).map_err(|e| WorkspaceError::Manifest { path: file.clone(), detail: e.to_string() })?;
    Ok(ArchiveRef { id: manifest.id, path: path.to_path_buf(), score: manifest.score, meta: manifest.meta })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), WorkspaceError> {
    let body = serde_json::to_string_pretty(value).expect("archive records serialize");
    fs::write(path, body).map_err(io_err(path))
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn seal(dir: &Path) -> Result<(), WorkspaceError> {
    for entry in walkdir::WalkDir::new(dir) {
        let entry = entry.map_err(|e| WorkspaceError::Rejected(e.to_string()))?;
        if entry.file_type().is_file() {
            let mut perms = entry.metadata().map_err(|e| WorkspaceError::Rejected(e.to_string()))?.permissions();
            perms.set_readonly(true);
            fs::set_permissions(entry.path(), perms).map_err(io_err(entry.path()))?;
        }
    }
    Ok(())
}
