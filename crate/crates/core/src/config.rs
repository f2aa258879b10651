//! Run configuration.
//!
//! Values are layered: built-in defaults, then a TOML file, then `GA_*`
//! environment variables, then command-line flags. The result is written to
//! the output root as `config.toml`, which is also what `resume` reads back.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::EngineConfig;
use crate::executor::{Executor, ExternalExecutor, SimModelParams, SimulatedExecutor};
use crate::hedge::HedgeConfig;
use crate::metric::MetricDirection;
use crate::operator::Operator;
use crate::workspace::{CurationRules, DataMode, DataSource};

/// Name of the effective-config dump inside the output root.
pub const EFFECTIVE_CONFIG_FILE: &str = "config.toml";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("environment variable {key}={value:?}: {detail}")]
    Env { key: String, value: String, detail: String },
    #[error("{field}: {detail}")]
    Invalid { field: String, detail: String },
}

fn invalid(field: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), detail: detail.into() }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExecutorKind {
    #[default]
    Simulated,
    External,
}

impl FromStr for ExecutorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "simulated" => Ok(Self::Simulated),
            "external" => Ok(Self::External),
            _ => Err(format!("unknown executor {s:?}, expected simulated or external")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutorConfig {
    pub kind: ExecutorKind,
    /// Agent command for the external executor.
    pub command: Vec<String>,
    pub timeout_secs: u64,
    pub env_passthrough: Vec<String>,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig {
            kind: ExecutorKind::Simulated,
            command: Vec::new(),
            timeout_secs: 30 * 60,
            env_passthrough: vec!["PATH".into(), "HOME".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub population: usize,
    pub max_iterations: u32,
    pub patience: u32,
    pub convergence_threshold: f64,
    pub workers: usize,
    pub continue_min_parents: u32,
    pub continue_max_parents: u32,
    pub num_training_runs: u32,
    pub higher_is_better: bool,
    pub seed: u64,
    pub output_root: PathBuf,
    pub data_path: Option<PathBuf>,
    /// Link the dataset into each workspace instead of copying it.
    pub mount_data: bool,
    pub jumpstart_dir: Option<PathBuf>,
    pub hedge: HedgeConfig,
    pub curation: CurationRules,
    pub executor: ExecutorConfig,
    /// Simulator calibration. Its `direction` is replaced by `higher_is_better`.
    pub simulator: SimModelParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            population: 5,
            max_iterations: 30,
            patience: 5,
            convergence_threshold: 0.0,
            workers: 3,
            continue_min_parents: 1,
            continue_max_parents: 1,
            num_training_runs: 5,
            higher_is_better: true,
            seed: 0,
            output_root: PathBuf::from("runs/latest"),
            data_path: None,
            mount_data: false,
            jumpstart_dir: None,
            hedge: HedgeConfig::default(),
            curation: CurationRules::default(),
            executor: ExecutorConfig::default(),
            simulator: SimModelParams::default(),
        }
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn parse_command(s: &str) -> Result<Vec<String>, String> {
    if s.trim_start().starts_with('[') {
        serde_json::from_str(s).map_err(|e| e.to_string())
    } else {
        Ok(s.split_whitespace().map(String::from).collect())
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e: T::Err| e.to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), detail: e.to_string() })?;
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            detail: format!("{}: {}", e.path(), e.inner().message()),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path)
    }

    /// Apply `GA_*` overrides (and `NUM_TRAINING_RUNS`) read through `get`.
    /// Per-operator keys are `GA_PROB_<OP>`, `GA_FLOOR_<OP>` and
    /// `GA_CEILING_<OP>`, e.g. `GA_PROB_JUMPSTART`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn set<T>(
            get: &dyn Fn(&str) -> Option<String>,
            key: &str,
            parse: impl Fn(&str) -> Result<T, String>,
            slot: &mut T,
        ) -> Result<(), ConfigError> {
            if let Some(value) = get(key) {
                *slot = parse(&value).map_err(|detail| ConfigError::Env { key: key.into(), value, detail })?;
            }
            Ok(())
        }
        let get: &dyn Fn(&str) -> Option<String> = &get;
        set(get, "GA_POPULATION", parse_num, &mut self.population)?;
        set(get, "GA_MAX_ITERATIONS", parse_num, &mut self.max_iterations)?;
        set(get, "GA_PATIENCE", parse_num, &mut self.patience)?;
        set(get, "GA_CONVERGENCE_THRESHOLD", parse_num, &mut self.convergence_threshold)?;
        set(get, "GA_WORKERS", parse_num, &mut self.workers)?;
        set(get, "GA_CONTINUE_MIN_PARENTS", parse_num, &mut self.continue_min_parents)?;
        set(get, "GA_CONTINUE_MAX_PARENTS", parse_num, &mut self.continue_max_parents)?;
        set(get, "NUM_TRAINING_RUNS", parse_num, &mut self.num_training_runs)?;
        set(get, "GA_HIGHER_IS_BETTER", parse_bool, &mut self.higher_is_better)?;
        set(get, "GA_SEED", parse_num, &mut self.seed)?;
        set(get, "GA_OUTPUT_ROOT", |s| Ok(PathBuf::from(s)), &mut self.output_root)?;
        set(get, "GA_DATA_PATH", |s| Ok(Some(PathBuf::from(s))), &mut self.data_path)?;
        set(get, "GA_MOUNT_DATA", parse_bool, &mut self.mount_data)?;
        set(get, "GA_JUMPSTART_DIR", |s| Ok(Some(PathBuf::from(s))), &mut self.jumpstart_dir)?;
        set(get, "GA_ETA", parse_num, &mut self.hedge.eta)?;
        set(get, "GA_KAPPA", parse_num, &mut self.hedge.kappa)?;
        set(get, "GA_EXECUTOR", |s| s.parse(), &mut self.executor.kind)?;
        set(get, "GA_EXECUTOR_COMMAND", parse_command, &mut self.executor.command)?;
        set(get, "GA_EXECUTOR_TIMEOUT_SECS", parse_num, &mut self.executor.timeout_secs)?;
        for op in Operator::ALL {
            let suffix = op.name().to_ascii_uppercase();
            for (prefix, map) in [
                ("GA_PROB_", &mut self.hedge.base_probs),
                ("GA_FLOOR_", &mut self.hedge.floors),
                ("GA_CEILING_", &mut self.hedge.ceilings),
            ] {
                let key = format!("{prefix}{suffix}");
                if let Some(value) = get(&key) {
                    let v = parse_num(&value).map_err(|detail| ConfigError::Env { key, value, detail })?;
                    map.insert(op, v);
                }
            }
        }
        Ok(())
    }

    /// Defaults, then `file` if given, then the process environment.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn direction(&self) -> MetricDirection {
        MetricDirection { higher_is_better: self.higher_is_better }
    }

    pub fn simulator_params(&self) -> SimModelParams {
        SimModelParams { direction: self.direction(), ..self.simulator.clone() }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            population: self.population,
            hedge: self.hedge.clone(),
            max_iterations: self.max_iterations,
            patience: self.patience,
            threshold: self.convergence_threshold,
            workers: self.workers,
            continue_min_parents: self.continue_min_parents,
            continue_max_parents: self.continue_max_parents,
            num_training_runs: self.num_training_runs,
            direction: self.direction(),
            data: self.data_path.as_ref().map(|path| DataSource {
                path: path.clone(),
                mode: if self.mount_data { DataMode::Link } else { DataMode::Copy },
            }),
            curation: self.curation.clone(),
            jumpstart_dir: self.jumpstart_dir.clone(),
            master_seed: self.seed,
        }
    }

    /// Check every field, naming the first offending one.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, v: u64| if v == 0 { Err(invalid(field, "must be at least 1")) } else { Ok(()) };
        positive("population", self.population as u64)?;
        positive("max_iterations", self.max_iterations as u64)?;
        positive("patience", self.patience as u64)?;
        positive("workers", self.workers as u64)?;
        positive("continue_min_parents", self.continue_min_parents as u64)?;
        if self.continue_max_parents < self.continue_min_parents {
            return Err(invalid("continue_max_parents", "must be at least continue_min_parents"));
        }
        if !self.convergence_threshold.is_finite() {
            return Err(invalid("convergence_threshold", "must be finite"));
        }
        self.hedge.validate().map_err(|e| invalid("hedge", e.to_string()))?;
        if self.population == 1 && self.hedge.is_active(Operator::Merge) {
            return Err(invalid("hedge.base_probs.Merge", "Merge needs a population of at least 2"));
        }
        match self.executor.kind {
            ExecutorKind::Simulated => {
                self.simulator_params().validate().map_err(|e| invalid("simulator", e))?;
            }
            ExecutorKind::External => {
                if self.executor.command.is_empty() {
                    return Err(invalid("executor.command", "required for the external executor"));
                }
                if self.executor.timeout_secs == 0 {
                    return Err(invalid("executor.timeout_secs", "must be at least 1"));
                }
                match &self.data_path {
                    None => return Err(invalid("data_path", "required for the external executor")),
                    Some(p) if !p.exists() => {
                        return Err(invalid("data_path", format!("{} does not exist", p.display())))
                    }
                    Some(_) => {}
                }
            }
        }
        if let Some(dir) = &self.jumpstart_dir {
            if !dir.is_dir() {
                return Err(invalid("jumpstart_dir", format!("{} is not a directory", dir.display())));
            }
        }
        self.engine_config().validate().map_err(|e| invalid("engine", e.to_string()))
    }

    pub fn build_executor(&self) -> Box<dyn Executor> {
        match self.executor.kind {
            ExecutorKind::Simulated => Box::new(SimulatedExecutor::new(self.simulator_params())),
            ExecutorKind::External => {
                let mut ex = ExternalExecutor::new(self.executor.command.clone(), self.direction());
                ex.timeout = Duration::from_secs(self.executor.timeout_secs);
                ex.env_passthrough = self.executor.env_passthrough.clone();
                Box::new(ex)
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// Write the effective config into the output root.
    pub fn dump(&self, root: &Path) -> Result<PathBuf, ConfigError> {
        let path = root.join(EFFECTIVE_CONFIG_FILE);
        std::fs::create_dir_all(root).map_err(|source| ConfigError::Io { path: root.to_path_buf(), source })?;
        std::fs::write(&path, self.to_toml()).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults_match_reference_configuration() {
        let c = RunConfig::default();
        assert_eq!((c.population, c.workers, c.max_iterations, c.patience), (5, 3, 30, 5));
        assert_eq!(c.convergence_threshold, 0.0);
        assert_eq!((c.continue_min_parents, c.continue_max_parents, c.num_training_runs), (1, 1, 5));
        assert!(!c.mount_data);
        assert_eq!(c.hedge.eta, 0.15);
        assert_eq!(c.hedge.kappa, 4.0);
        assert_eq!(c.hedge.base_probs[&Operator::Jumpstart], 0.0);
        assert_eq!(c.hedge.ceilings[&Operator::Merge], 0.30);
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig { data_path: Some("/data".into()), seed: 42, ..RunConfig::default() };
        let back = RunConfig::from_toml_str(&c.to_toml(), Path::new("x.toml")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml_str("population = 3\n[hedge]\neta = 0.3\n", Path::new("x.toml")).unwrap();
        assert_eq!(c.population, 3);
        assert_eq!(c.hedge.eta, 0.3);
        assert_eq!(c.hedge.kappa, 4.0);
        assert_eq!(c.workers, 3);
    }

    #[test]
    fn unknown_and_mistyped_fields_are_named() {
        let e = RunConfig::from_toml_str("populaton = 3\n", Path::new("x.toml")).unwrap_err();
        assert!(e.to_string().contains("populaton"), "{e}");
        let e = RunConfig::from_toml_str("[hedge]\neta = \"fast\"\n", Path::new("x.toml")).unwrap_err();
        assert!(e.to_string().contains("hedge.eta"), "{e}");
    }

    #[test]
    fn env_overrides_file() {
        let mut c = RunConfig::from_toml_str("population = 3\n", Path::new("x.toml")).unwrap();
        c.apply_env(env(&[
            ("GA_POPULATION", "7"),
            ("GA_MOUNT_DATA", "False"),
            ("GA_PROB_JUMPSTART", "0.2"),
            ("GA_EXECUTOR_COMMAND", "python agent.py {workspace}"),
        ]))
        .unwrap();
        assert_eq!(c.population, 7);
        assert!(!c.mount_data);
        assert_eq!(c.hedge.base_probs[&Operator::Jumpstart], 0.2);
        assert_eq!(c.executor.command, vec!["python", "agent.py", "{workspace}"]);
    }

    #[test]
    fn bad_env_value_names_the_key() {
        let mut c = RunConfig::default();
        let e = c.apply_env(env(&[("GA_WORKERS", "many")])).unwrap_err();
        assert!(e.to_string().contains("GA_WORKERS"), "{e}");
    }

    #[test]
    fn external_executor_requires_data_path() {
        let c = RunConfig {
            executor: ExecutorConfig { kind: ExecutorKind::External, command: vec!["true".into()], ..Default::default() },
            ..RunConfig::default()
        };
        match c.validate() {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "data_path"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mount_flag_selects_data_mode() {
        let mut c = RunConfig { data_path: Some("/d".into()), ..RunConfig::default() };
        assert_eq!(c.engine_config().data.unwrap().mode, DataMode::Copy);
        c.mount_data = true;
        assert_eq!(c.engine_config().data.unwrap().mode, DataMode::Link);
    }
}
