//! Cluster-based sampling of forecast repositories and SVG rendering of
//! multiple-forecast visualizations.
//!
//! The pipeline: load a repository ([`forecast_data`]), cluster the
//! forecast values with one-dimensional DBSCAN ([`clustering`]), pick
//! representatives or bundle clusters into a trend graph ([`sampling`]),
//! and render one of eight chart designs ([`render`]). [`metrics`] scores
//! strategies against the full repository.

pub mod clustering;
pub mod error;
pub mod forecast_data;
pub mod metrics;
pub mod render;
pub mod sampling;
pub mod summary_stats;
pub mod synthetic;

pub use clustering::{dbscan_1d, find_epsilon, Cluster, Clustering, CountRange};
pub use error::{Error, ErrorCategory, Result};
pub use forecast_data::{
    filter_models, load_repository, ForecastRepository, ForecastSeries, TimePointMeta, TruthSeries,
};
pub use metrics::{truth_coverage, wasserstein_1d, FidelityReport, Strategy};
pub use render::{render_batch, render_chart, ChartArtifacts, ChartSpec, Design, SvgDocument};
pub use sampling::{
    count_crossings, frequency_levels, horizon_sample, progressive_bundle, HorizonSample,
    HorizonSampleParams, ProgressiveBundle,
};
pub use summary_stats::{ci95, kde_profile, mean_trajectory, BandSeries, DensityProfile};
