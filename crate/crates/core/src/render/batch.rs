use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{render_chart, ChartArtifacts, ChartSpec, Design, Palette, DEFAULT_HISTORY_WEEKS};
use crate::error::{Error, Result};
use crate::forecast_data::{ForecastRepository, Purpose, TimePointMeta};
use crate::sampling::{horizon_sample, progressive_bundle, HorizonSampleParams, DEFAULT_N_LEVELS};
use crate::summary_stats::{ci95, mean_trajectory, step_profiles};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct TimePoint {
    pub meta: TimePointMeta,
    pub repo: ForecastRepository,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSettings {
    pub sampling: HorizonSampleParams,
    /// Epsilon of the frequency-mapped progressive design. Falls back to
    /// the horizon-sampling epsilon when unset.
    pub frequency_epsilon: Option<f64>,
    pub history_weeks: usize,
    pub n_levels: usize,
    pub grid_points: usize,
    pub palette: Palette,
    pub config_hash: Option<String>,
}

impl BatchSettings {
    pub fn new(sampling: HorizonSampleParams) -> Self {
        BatchSettings {
            sampling,
            frequency_epsilon: None,
            history_weeks: DEFAULT_HISTORY_WEEKS,
            n_levels: DEFAULT_N_LEVELS,
            grid_points: 128,
            palette: Palette::default(),
            config_hash: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// File name relative to the output directory.
    pub path: String,
    pub time_point: String,
    pub design: Design,
    pub truth_variant: bool,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    pub palette: Palette,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Renders every design for every time point, plus a truth variant of
/// each design for study time points, and writes `manifest.json`.
pub fn render_batch(
    time_points: &[TimePoint],
    out_dir: &Path,
    settings: &BatchSettings,
) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();

    for tp in time_points {
        let id = &tp.meta.id;
        let ctx = |what: &str, e: Error| Error::Render {
            context: format!("{id}/{what}"),
            source: Box::new(e),
        };
        let repo = &tp.repo;
        let sample =
            horizon_sample(repo, &settings.sampling).map_err(|e| ctx("horizon sample", e))?;
        let base =
            progressive_bundle(repo, sample.epsilon).map_err(|e| ctx("progressive bundle", e))?;
        let freq_eps = settings.frequency_epsilon.unwrap_or(sample.epsilon);
        let frequency =
            progressive_bundle(repo, freq_eps).map_err(|e| ctx("progressive bundle", e))?;
        let mean = mean_trajectory(repo).map_err(|e| ctx("mean", e))?;
        let band = ci95(repo).map_err(|e| ctx("band", e))?;
        let densities =
            step_profiles(repo, settings.grid_points).map_err(|e| ctx("densities", e))?;

        let variants: &[bool] = match tp.meta.purpose {
            Purpose::Study => &[false, true],
            Purpose::Tutorial => &[false],
        };
        for design in Design::ALL {
            let artifacts = ChartArtifacts {
                horizon_sample: Some(&sample),
                bundle: Some(if design == Design::ProgressiveFrequency {
                    &frequency
                } else {
                    &base
                }),
                band: Some(&band),
                densities: Some(&densities),
                mean: Some(&mean),
            };
            let (epsilon, seed) = match design {
                Design::HorizonMfv => (Some(sample.epsilon), Some(sample.seed)),
                Design::ProgressiveBase => (Some(base.epsilon), None),
                Design::ProgressiveFrequency => (Some(frequency.epsilon), None),
                _ => (None, None),
            };
            for &truth in variants {
                let spec = ChartSpec {
                    history_weeks: settings.history_weeks,
                    n_levels: settings.n_levels,
                    palette: settings.palette.clone(),
                    ..ChartSpec::new(design).with_truth(truth)
                };
                let name = if truth {
                    format!("{id}_{design}_truth.svg")
                } else {
                    format!("{id}_{design}.svg")
                };
                let doc = render_chart(repo, &artifacts, &spec).map_err(|e| ctx(&name, e))?;
                let path = out_dir.join(&name);
                fs::write(&path, doc.text).map_err(|e| Error::io(&path, e))?;
                files.push(ManifestEntry {
                    path: name,
                    time_point: id.clone(),
                    design,
                    truth_variant: truth,
                    epsilon,
                    seed,
                });
            }
        }
    }

    let manifest = Manifest {
        files,
        palette: settings.palette.clone(),
        config_hash: settings.config_hash.clone(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
