//! Run configuration: a flat TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mfv_core::forecast_data::{study_time_points, Purpose, TimePointMeta, TypeLabel};
use mfv_core::render::DEFAULT_HISTORY_WEEKS;
use mfv_core::sampling::{DEFAULT_N_DRAWS, DEFAULT_N_LEVELS, DEFAULT_TARGET_K};

use crate::CliError;

pub const SEED_ENV: &str = "MFV_SEED";

/// One `[[time_points]]` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimePointEntry {
    pub id: String,
    #[serde(default = "study")]
    pub purpose: Purpose,
    pub reference_date: NaiveDate,
    /// Expected forecast count after filtering; checked on load when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default = "no_label")]
    pub type_label: TypeLabel,
}

fn study() -> Purpose {
    Purpose::Study
}

fn no_label() -> TypeLabel {
    TypeLabel::None
}

impl TimePointEntry {
    pub fn meta(&self, count: usize) -> TimePointMeta {
        TimePointMeta {
            id: self.id.clone(),
            purpose: self.purpose,
            date_of_forecast: self.reference_date,
            count,
            type_label: self.type_label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub forecast_csv: Option<PathBuf>,
    pub truth_csv: Option<PathBuf>,
    pub reference_date: Option<NaiveDate>,
    pub horizon: usize,
    pub target_k: usize,
    pub k_range: [usize; 2],
    pub seed: Option<u64>,
    pub n_draws: usize,
    pub excluded_prefixes: Vec<String>,
    pub out_dir: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub frequency_epsilon: Option<f64>,
    pub history_weeks: usize,
    pub n_levels: usize,
    pub time_points: Vec<TimePointEntry>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            forecast_csv: None,
            truth_csv: None,
            reference_date: None,
            horizon: 4,
            target_k: DEFAULT_TARGET_K,
            k_range: [6, 9],
            seed: None,
            n_draws: DEFAULT_N_DRAWS,
            excluded_prefixes: vec!["COVIDhub".into()],
            out_dir: None,
            epsilon: None,
            frequency_epsilon: None,
            history_weeks: DEFAULT_HISTORY_WEEKS,
            n_levels: DEFAULT_N_LEVELS,
            time_points: Vec::new(),
        }
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub forecast_csv: Option<PathBuf>,
    pub truth_csv: Option<PathBuf>,
    pub reference_date: Option<NaiveDate>,
    pub horizon: Option<usize>,
    pub target_k: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub n_draws: Option<usize>,
    pub out: Option<PathBuf>,
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

impl RunConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                CliError::Data(format!("config file not found: {}", path.display()))
            }
            _ => CliError::Io(format!("{}: {e}", path.display())),
        })?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let base = absolute(path.parent().unwrap_or(Path::new(".")));
        for p in [&mut cfg.forecast_csv, &mut cfg.truth_csv, &mut cfg.out_dir]
            .into_iter()
            .flatten()
        {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    /// Applies flags, then the seed fallback chain flag > file > `MFV_SEED` > 0.
    pub fn resolve(mut self, o: Overrides, env_seed: Option<&str>) -> Result<RunConfig, CliError> {
        let env_seed = env_seed
            .map(|s| {
                s.trim().parse::<u64>().map_err(|_| {
                    CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))
                })
            })
            .transpose()?;
        if let Some(p) = o.forecast_csv {
            self.forecast_csv = Some(p);
        }
        if let Some(p) = o.truth_csv {
            self.truth_csv = Some(p);
        }
        if let Some(p) = o.out {
            self.out_dir = Some(p);
        }
        for p in [
            &mut self.forecast_csv,
            &mut self.truth_csv,
            &mut self.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            *p = absolute(p);
        }
        self.reference_date = o.reference_date.or(self.reference_date);
        self.horizon = o.horizon.unwrap_or(self.horizon);
        self.target_k = o.target_k.unwrap_or(self.target_k);
        self.epsilon = o.epsilon.or(self.epsilon);
        self.n_draws = o.n_draws.unwrap_or(self.n_draws);
        self.seed = Some(o.seed.or(self.seed).or(env_seed).unwrap_or(0));
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), CliError> {
        let [lo, hi] = self.k_range;
        if self.horizon == 0 {
            return Err(CliError::Usage("horizon must be at least 1".into()));
        }
        if lo == 0 || lo > hi || !(lo..=hi).contains(&self.target_k) {
            return Err(CliError::Usage(format!(
                "target_k {} must lie within k_range [{lo}, {hi}] (minimum at least 1)",
                self.target_k
            )));
        }
        if self.n_draws == 0 {
            return Err(CliError::Usage("n_draws must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(CliError::Usage(format!(
                    "epsilon must be finite and non-negative, got {e}"
                )));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the effective configuration as printed by `--print-config`.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Configured time points, or the built-in six when none are listed.
    pub fn time_points(&self) -> Vec<TimePointEntry> {
        if !self.time_points.is_empty() {
            return self.time_points.clone();
        }
        study_time_points()
            .into_iter()
            .map(|m| TimePointEntry {
                id: m.id,
                purpose: m.purpose,
                reference_date: m.date_of_forecast,
                count: None,
                type_label: m.type_label,
            })
            .collect()
    }
}
