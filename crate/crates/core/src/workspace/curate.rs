use std::fs;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{io_err, WorkspaceError, PREVIOUS_EXPERIMENTS_DIR};

/// Filters applied when copying a parent archive into a child workspace.
///
/// [`PREVIOUS_EXPERIMENTS_DIR`] is always excluded, whether or not it is
/// listed, so inheritance never nests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationRules {
    pub excluded_dir_names: Vec<String>,
    pub max_file_bytes: u64,
    /// Globs matched against paths relative to the archive root.
    pub excluded_globs: Vec<String>,
}

impl Default for CurationRules {
    fn default() -> Self {
        CurationRules {
            excluded_dir_names: vec![
                PREVIOUS_EXPERIMENTS_DIR.to_string(),
                "__pycache__".to_string(),
                ".git".to_string(),
                ".venv".to_string(),
            ],
            max_file_bytes: 64 * 1024 * 1024,
            excluded_globs: ["*.pkl", "*.joblib", "*.npy", "*.npz", "*.pt", "*.ckpt", "*.h5", "**/checkpoints/**"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl CurationRules {
    fn excludes_dir(&self, name: &str) -> bool {
        name == PREVIOUS_EXPERIMENTS_DIR || self.excluded_dir_names.iter().any(|n| n == name)
    }

    fn glob_set(&self) -> Result<GlobSet, WorkspaceError> {
        let mut builder = GlobSetBuilder::new();
        for g in &self.excluded_globs {
            let glob = Glob::new(g).map_err(|e| WorkspaceError::Rejected(format!("bad glob `{g}`: {e}")))?;
            builder.add(glob);
        }
        builder.build().map_err(|e| WorkspaceError::Rejected(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedCopy {
    pub source: PathBuf,
    /// Destination relative to the copy root.
    pub dest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Excluded {
    Directory(PathBuf),
    Glob(PathBuf),
    TooLarge { path: PathBuf, bytes: u64 },
    NotRegular(PathBuf),
}

/// Pure description of a curated copy: what would be copied and what was left out.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CopyPlan {
    pub entries: Vec<PlannedCopy>,
    pub excluded: Vec<Excluded>,
    pub warnings: Vec<String>,
}

/// Build a sorted copy plan for `source` without touching the filesystem.
pub fn curate_parent_archive(source: &Path, rules: &CurationRules) -> Result<CopyPlan, WorkspaceError> {
    fs::metadata(source).map_err(io_err(source))?;
    let globs = rules.glob_set()?;
    let mut plan = CopyPlan::default();

    let mut walker = WalkDir::new(source).follow_links(false).sort_by_file_name().into_iter();
    while let Some(entry) = walker.next() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                plan.warnings.push(e.to_string());
                continue;
            }
        };
        if entry.depth() == 0 {
            continue;
        }
        let rel = entry.path().strip_prefix(source).expect("walk stays under source").to_path_buf();
        let ft = entry.file_type();
        if ft.is_dir() {
            if rules.excludes_dir(&entry.file_name().to_string_lossy()) {
                plan.excluded.push(Excluded::Directory(rel));
                walker.skip_current_dir();
            }
            continue;
        }
        if globs.is_match(&rel) {
            plan.excluded.push(Excluded::Glob(rel));
            continue;
        }
        if !ft.is_file() {
            plan.excluded.push(Excluded::NotRegular(rel));
            continue;
        }
        match entry.metadata() {
            Ok(md) if md.len() > rules.max_file_bytes => {
                plan.excluded.push(Excluded::TooLarge { path: rel, bytes: md.len() });
            }
            Ok(_) => plan.entries.push(PlannedCopy { source: entry.path().to_path_buf(), dest: rel }),
            Err(e) => plan.warnings.push(format!("{}: {e}", rel.display())),
        }
    }
    Ok(plan)
}

/// Copy every planned file under `dest_root`, creating directories as needed.
pub fn execute_plan(plan: &CopyPlan, dest_root: &Path) -> Result<u64, WorkspaceError> {
    fs::create_dir_all(dest_root).map_err(io_err(dest_root))?;
    let mut bytes = 0;
    for item in &plan.entries {
        let dest = dest_root.join(&item.dest);
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        bytes += fs::copy(&item.source, &dest).map_err(io_err(&item.source))?;
        // Archive files are read-only; the copy in a child workspace is not.
        let mut perms = fs::metadata(&dest).map_err(io_err(&dest))?.permissions();
        #[allow(clippy::permissions_set_readonly_false)]
        perms.set_readonly(false);
        fs::set_permissions(&dest, perms).map_err(io_err(&dest))?;
    }
    Ok(bytes)
}
