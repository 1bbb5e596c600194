//! Deterministic SVG stimuli for the eight chart designs.
//!
//! Every chart shares one layout: black history line, a dashed vertical
//! rule at the forecast date, a light-blue band over the horizon step and
//! design-specific forecast marks. Coordinates are written with two
//! decimals so identical inputs give byte-identical documents.

mod axes;
mod batch;

use std::fmt::Write as _;
use std::str::FromStr;

use chrono::Days;
use serde::{Deserialize, Serialize};

pub use axes::{Axes, PlotArea};
pub use batch::{render_batch, BatchSettings, Manifest, ManifestEntry, TimePoint, MANIFEST_FILE};

use crate::error::{Error, Result};
use crate::forecast_data::ForecastRepository;
use crate::sampling::{frequency_levels, HorizonSample, ProgressiveBundle};
use crate::summary_stats::{BandSeries, DensityProfile};

pub const DEFAULT_WIDTH: u32 = 1290;
pub const DEFAULT_HEIGHT: u32 = 600;
pub const MARGIN_LEFT: f64 = 90.0;
pub const MARGIN_RIGHT: f64 = 40.0;
pub const MARGIN_TOP: f64 = 40.0;
pub const MARGIN_BOTTOM: f64 = 40.0;
pub const DEFAULT_HISTORY_WEEKS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    MeanOnly,
    Ci,
    Violin,
    Density,
    Mfv,
    HorizonMfv,
    ProgressiveBase,
    ProgressiveFrequency,
}

impl Design {
    pub const ALL: [Design; 8] = [
        Design::MeanOnly,
        Design::Ci,
        Design::Violin,
        Design::Density,
        Design::Mfv,
        Design::HorizonMfv,
        Design::ProgressiveBase,
        Design::ProgressiveFrequency,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Design::MeanOnly => "mean_only",
            Design::Ci => "ci",
            Design::Violin => "violin",
            Design::Density => "density",
            Design::Mfv => "mfv",
            Design::HorizonMfv => "horizon_mfv",
            Design::ProgressiveBase => "progressive_base",
            Design::ProgressiveFrequency => "progressive_frequency",
        }
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Design::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown design `{s}`")))
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub history: String,
    pub forecast: String,
    pub forecast_opacity: f64,
    pub truth: String,
    pub horizon_band: String,
    pub horizon_band_opacity: f64,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            history: "#000000".into(),
            forecast: "#808080".into(),
            forecast_opacity: 0.5,
            truth: "#D62728".into(),
            horizon_band: "#D6EAF8".into(),
            horizon_band_opacity: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub design: Design,
    pub width_px: u32,
    pub height_px: u32,
    pub show_truth: bool,
    pub history_weeks: usize,
    /// Gray levels of the frequency-mapped design.
    pub n_levels: usize,
    pub palette: Palette,
}

impl ChartSpec {
    pub fn new(design: Design) -> Self {
        ChartSpec {
            design,
            width_px: DEFAULT_WIDTH,
            height_px: DEFAULT_HEIGHT,
            show_truth: false,
            history_weeks: DEFAULT_HISTORY_WEEKS,
            n_levels: crate::sampling::DEFAULT_N_LEVELS,
            palette: Palette::default(),
        }
    }

    pub fn with_truth(mut self, show: bool) -> Self {
        self.show_truth = show;
        self
    }

    pub fn plot_area(&self) -> PlotArea {
        PlotArea {
            left: MARGIN_LEFT,
            top: MARGIN_TOP,
            width: self.width_px as f64 - MARGIN_LEFT - MARGIN_RIGHT,
            height: self.height_px as f64 - MARGIN_TOP - MARGIN_BOTTOM,
        }
    }
}

/// Precomputed inputs a design may need.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChartArtifacts<'a> {
    pub horizon_sample: Option<&'a HorizonSample>,
    pub bundle: Option<&'a ProgressiveBundle>,
    pub band: Option<&'a BandSeries>,
    pub densities: Option<&'a [DensityProfile]>,
    pub mean: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvgDocument {
    pub text: String,
}

/// Formats a pixel coordinate.
fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn points(pts: impl IntoIterator<Item = (f64, f64)>) -> String {
    pts.into_iter()
        .map(|(x, y)| format!("{},{}", px(x), px(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn require<'a, T: ?Sized>(
    item: Option<&'a T>,
    design: Design,
    artifact: &'static str,
) -> Result<&'a T> {
    item.ok_or(Error::MissingArtifact {
        design: design.name(),
        artifact,
    })
}

/// The axis transform `render_chart` uses for these inputs.
pub fn chart_axes(repo: &ForecastRepository, artifacts: &ChartArtifacts, spec: &ChartSpec) -> Axes {
    let horizon = repo.horizon_date();
    let earliest = repo.reference_date - Days::new(7 * spec.history_weeks as u64);
    let start = repo
        .history
        .dates
        .iter()
        .copied()
        .find(|d| *d >= earliest)
        .unwrap_or(repo.reference_date);
    let end = horizon + Days::new(7);

    let mut values: Vec<f64> = repo
        .history
        .dates
        .iter()
        .zip(&repo.history.values)
        .filter(|(d, _)| **d >= start)
        .map(|(_, v)| *v)
        .collect();
    values.extend(repo.forecasts.iter().flat_map(|f| f.values.iter().copied()));
    if let Some(band) = artifacts.band {
        values.extend(band.lo.iter().chain(&band.hi).copied());
    }
    if let Some(mean) = artifacts.mean {
        values.extend_from_slice(mean);
    }
    if spec.show_truth {
        values.extend(repo.truth_at_horizon);
    }
    if values.is_empty() {
        values.push(0.0);
    }
    Axes::new(spec.plot_area(), start, end, &values)
}

pub fn render_chart(
    repo: &ForecastRepository,
    artifacts: &ChartArtifacts,
    spec: &ChartSpec,
) -> Result<SvgDocument> {
    let design = spec.design;
    let truth = if spec.show_truth {
        Some(require(
            repo.truth_at_horizon.as_ref(),
            design,
            "horizon truth",
        )?)
    } else {
        None
    };
    // validate before drawing anything
    match design {
        Design::MeanOnly => {
            require(artifacts.mean, design, "mean")?;
        }
        Design::Ci => {
            require(artifacts.band, design, "band")?;
        }
        Design::Violin | Design::Density => {
            require(artifacts.densities, design, "densities")?;
        }
        Design::HorizonMfv => {
            require(artifacts.horizon_sample, design, "horizon_sample")?;
        }
        Design::ProgressiveBase | Design::ProgressiveFrequency => {
            require(artifacts.bundle, design, "bundle")?;
        }
        Design::Mfv => {}
    }

    let axes = chart_axes(repo, artifacts, spec);
    let area = axes.area;
    let pal = &spec.palette;
    let mut svg = String::new();
    let w = &mut svg;

    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{1}" viewBox="0 0 {0} {1}" font-family="sans-serif" font-size="12">"#,
        spec.width_px, spec.height_px
    );
    let _ = writeln!(
        w,
        r#"<defs><clipPath id="plot-area"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"#,
        px(area.left),
        px(area.top),
        px(area.width),
        px(area.height)
    );
    let _ = writeln!(
        w,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#FFFFFF"/>"##,
        spec.width_px, spec.height_px
    );

    // horizon band: half a week either side of the final step
    let horizon = repo.horizon_date();
    let hx = axes.x(horizon);
    let half = axes.week_px() / 2.0;
    let _ = writeln!(
        w,
        r#"<rect class="horizon-band" x="{}" y="{}" width="{}" height="{}" fill="{}" fill-opacity="{}"/>"#,
        px(hx - half),
        px(area.top),
        px(2.0 * half),
        px(area.height),
        pal.horizon_band,
        pal.horizon_band_opacity
    );

    write_axes(w, &axes, repo);

    let history: Vec<(f64, f64)> = repo
        .history
        .dates
        .iter()
        .zip(&repo.history.values)
        .filter(|(d, _)| **d >= axes.start)
        .map(|(d, v)| (axes.x(*d), axes.y(*v)))
        .collect();
    if !history.is_empty() {
        let _ = writeln!(
            w,
            r#"<polyline class="history" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            points(history),
            pal.history
        );
    }

    let _ = writeln!(w, r#"<g class="marks" clip-path="url(#plot-area)">"#);
    let step_x = |step: usize| axes.x(repo.step_date(step));
    match design {
        Design::Mfv => {
            for f in &repo.forecasts {
                write_forecast_line(w, &axes, repo, &f.model_id, &f.values, pal);
            }
        }
        Design::HorizonMfv => {
            for f in &artifacts.horizon_sample.unwrap().series {
                write_forecast_line(w, &axes, repo, &f.model_id, &f.values, pal);
            }
        }
        Design::MeanOnly => {
            let mean = artifacts.mean.unwrap();
            write_mean_line(w, &axes, repo, mean, pal);
        }
        Design::Ci => {
            let band = artifacts.band.unwrap();
            let upper = (1..=band.hi.len()).map(|s| (step_x(s), axes.y(band.hi[s - 1])));
            let lower = (1..=band.lo.len())
                .rev()
                .map(|s| (step_x(s), axes.y(band.lo[s - 1])));
            let _ = writeln!(
                w,
                r#"<polygon class="ci-band" points="{}" fill="{}" fill-opacity="{}" stroke="none"/>"#,
                points(upper.chain(lower)),
                pal.forecast,
                pal.forecast_opacity
            );
            write_mean_line(w, &axes, repo, &band.center, pal);
        }
        Design::Violin | Design::Density => {
            let profiles = artifacts.densities.unwrap();
            let peak = profiles
                .iter()
                .flat_map(|p| p.density.iter().copied())
                .fold(0.0, f64::max);
            let mirrored = design == Design::Violin;
            let max_width = if mirrored { 0.45 } else { 0.85 } * axes.week_px();
            for p in profiles {
                let cx = step_x(p.step);
                let scale = if peak > 0.0 { max_width / peak } else { 0.0 };
                let right: Vec<(f64, f64)> = p
                    .grid
                    .iter()
                    .zip(&p.density)
                    .map(|(v, d)| (cx + d * scale, axes.y(*v)))
                    .collect();
                let outline: Vec<(f64, f64)> = if mirrored {
                    right
                        .iter()
                        .copied()
                        .chain(right.iter().rev().map(|&(x, y)| (2.0 * cx - x, y)))
                        .collect()
                } else {
                    let first = right.first().map_or(0.0, |p| p.1);
                    let last = right.last().map_or(0.0, |p| p.1);
                    std::iter::once((cx, first))
                        .chain(right.iter().copied())
                        .chain(std::iter::once((cx, last)))
                        .collect()
                };
                let _ = writeln!(
                    w,
                    r#"<polygon class="{}" data-step="{}" points="{}" fill="{}" fill-opacity="{}" stroke="{}" stroke-width="1"/>"#,
                    design.name(),
                    p.step,
                    points(outline),
                    pal.forecast,
                    pal.forecast_opacity,
                    pal.forecast
                );
            }
        }
        Design::ProgressiveBase | Design::ProgressiveFrequency => {
            let bundle = artifacts.bundle.unwrap();
            let levels = if design == Design::ProgressiveFrequency {
                Some(frequency_levels(bundle, spec.n_levels)?)
            } else {
                None
            };
            let gray = |count: usize| -> (String, f64) {
                match &levels {
                    Some(l) => {
                        let g = l.gray(count);
                        (format!("#{g:02X}{g:02X}{g:02X}"), 1.0)
                    }
                    None => (pal.forecast.clone(), pal.forecast_opacity),
                }
            };
            for t in &bundle.transitions {
                let from = &bundle.clusters_at(t.step)[t.from_cluster];
                let to = &bundle.clusters_at(t.step + 1)[t.to_cluster];
                let (color, opacity) = gray(t.count);
                let _ = writeln!(
                    w,
                    r#"<line class="transition" data-count="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-opacity="{}" stroke-width="2"/>"#,
                    t.count,
                    px(step_x(t.step)),
                    px(axes.y(from.mean)),
                    px(step_x(t.step + 1)),
                    px(axes.y(to.mean)),
                    color,
                    opacity
                );
            }
            for (i, clusters) in bundle.steps.iter().enumerate() {
                let x = step_x(i + 1);
                for c in clusters {
                    let (color, opacity) = gray(c.size);
                    if levels.is_some() {
                        let _ = writeln!(
                            w,
                            r#"<line class="cluster-range" data-size="{size}" x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="{color}" stroke-width="3"/>"#,
                            size = c.size,
                            x = px(x),
                            y1 = px(axes.y(c.range_lo)),
                            y2 = px(axes.y(c.range_hi)),
                        );
                    }
                    let _ = writeln!(
                        w,
                        r#"<circle class="cluster" data-size="{}" cx="{}" cy="{}" r="3.5" fill="{}" fill-opacity="{}"/>"#,
                        c.size,
                        px(x),
                        px(axes.y(c.mean)),
                        color,
                        opacity
                    );
                }
            }
        }
    }
    let _ = writeln!(w, "</g>");

    let rx = axes.x(repo.reference_date);
    let _ = writeln!(
        w,
        r#"<line class="reference-rule" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{3}" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
        px(rx),
        px(area.top),
        px(area.bottom()),
        pal.history
    );

    if let Some(&t) = truth {
        let (tx, ty) = (hx, axes.y(t));
        let _ = writeln!(
            w,
            r#"<g class="truth"><line x1="{0}" y1="{3}" x2="{1}" y2="{3}" stroke="{4}" stroke-width="3"/><circle cx="{2}" cy="{3}" r="6" fill="{4}"/><text x="{5}" y="{6}" fill="{4}">Actual outcome</text></g>"#,
            px(tx - half * 0.6),
            px(tx + half * 0.6),
            px(tx),
            px(ty),
            pal.truth,
            px(tx + 10.0),
            px(ty - 10.0)
        );
    }

    let _ = writeln!(w, "</svg>");
    Ok(SvgDocument { text: svg })
}

fn write_forecast_line(
    w: &mut String,
    axes: &Axes,
    repo: &ForecastRepository,
    model: &str,
    values: &[f64],
    pal: &Palette,
) {
    let pts = values
        .iter()
        .enumerate()
        .map(|(i, v)| (axes.x(repo.step_date(i + 1)), axes.y(*v)));
    let _ = writeln!(
        w,
        r#"<polyline class="forecast" data-model="{}" points="{}" fill="none" stroke="{}" stroke-opacity="{}" stroke-width="2"/>"#,
        escape(model),
        points(pts),
        pal.forecast,
        pal.forecast_opacity
    );
}

fn write_mean_line(
    w: &mut String,
    axes: &Axes,
    repo: &ForecastRepository,
    mean: &[f64],
    pal: &Palette,
) {
    let pts = mean
        .iter()
        .enumerate()
        .map(|(i, v)| (axes.x(repo.step_date(i + 1)), axes.y(*v)));
    let _ = writeln!(
        w,
        r#"<polyline class="mean" points="{}" fill="none" stroke="{}" stroke-width="2.5"/>"#,
        points(pts),
        pal.forecast
    );
}

fn tick_label(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').to_string()
    }
}

fn write_axes(w: &mut String, axes: &Axes, repo: &ForecastRepository) {
    let area = axes.area;
    let _ = writeln!(w, r##"<g class="axes" stroke="#000000" fill="#000000">"##);
    let _ = writeln!(
        w,
        r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke-width="1"/>"#,
        px(area.left),
        px(area.bottom()),
        px(area.right())
    );
    let _ = writeln!(
        w,
        r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke-width="1"/>"#,
        px(area.left),
        px(area.top),
        px(area.bottom())
    );
    for v in axes.y_ticks(6) {
        let y = axes.y(v);
        let _ = writeln!(
            w,
            r#"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke-width="1"/><text x="{tx}" y="{ty}" text-anchor="end" stroke="none">{label}</text>"#,
            x1 = px(area.left - 5.0),
            y = px(y),
            x2 = px(area.left),
            tx = px(area.left - 8.0),
            ty = px(y + 4.0),
            label = tick_label(v)
        );
    }
    for d in axes.x_ticks(repo.reference_date, 10) {
        let x = axes.x(d);
        let _ = writeln!(
            w,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke-width="1"/><text x="{0}" y="{3}" text-anchor="middle" stroke="none">{4}</text>"#,
            px(x),
            px(area.bottom()),
            px(area.bottom() + 5.0),
            px(area.bottom() + 18.0),
            d.format("%Y-%m-%d")
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{0}" y="{1}" transform="rotate(-90 {0} {1})" text-anchor="middle" stroke="none">Mortality count</text>"#,
        px(22.0),
        px(area.top + area.height / 2.0)
    );
    let _ = writeln!(w, "</g>");
}
