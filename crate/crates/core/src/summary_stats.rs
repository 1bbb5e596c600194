//! Cross-model statistics for the control designs: mean trajectory,
//! 95% band and per-step kernel density profiles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast_data::ForecastRepository;

/// Linearly interpolated percentile of sorted data, `p` in `[0, 1]`.
///
/// Uses position `p * (n - 1)` between the closest order statistics.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile at the exact fraction `num / den`, interpolated as
/// `(x[k] * (den - r) + x[k+1] * r) / den` where `num * (n - 1) = k * den + r`.
///
/// For integer data this is the correctly rounded interpolated order
/// statistic, with no error from representing the fraction in binary.
pub fn percentile_ratio(sorted: &[f64], num: u64, den: u64) -> f64 {
    assert!(!sorted.is_empty() && den > 0 && num <= den);
    let pos = num * (sorted.len() as u64 - 1);
    let k = (pos / den) as usize;
    let r = pos % den;
    if r == 0 {
        return sorted[k];
    }
    let (a, b) = (sorted[k], sorted[k + 1]);
    ((a * (den - r) as f64 + b * r as f64) / den as f64).clamp(a, b)
}

/// Central 95% range of `values`: the 2.5th and 97.5th percentiles, or
/// `[min, max]` for two or fewer values.
pub fn central_95(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() <= 2 {
        return (sorted[0], *sorted.last().unwrap());
    }
    (
        percentile_ratio(&sorted, 1, 40),
        percentile_ratio(&sorted, 39, 40),
    )
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1); zero for a single value.
pub(crate) fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSeries {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    /// 2.5th to 97.5th percentile of the cross-model values.
    #[default]
    Percentile,
    /// mean +/- 1.96 standard deviations.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub step: usize,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityProfile {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn require_forecasts(repo: &ForecastRepository) -> Result<()> {
    if repo.is_empty() {
        Err(Error::Empty("forecast repository"))
    } else {
        Ok(())
    }
}

pub fn mean_trajectory(repo: &ForecastRepository) -> Result<Vec<f64>> {
    require_forecasts(repo)?;
    Ok((1..=repo.horizon_steps)
        .map(|step| mean(&repo.step_values(step)))
        .collect())
}

pub fn ci95(repo: &ForecastRepository) -> Result<BandSeries> {
    ci95_with(repo, IntervalMethod::Percentile)
}

/// Per-step 95% band around the mean trajectory. The band is widened to
/// contain the mean when a skewed step puts the mean outside the
/// percentile range.
pub fn ci95_with(repo: &ForecastRepository, method: IntervalMethod) -> Result<BandSeries> {
    let center = mean_trajectory(repo)?;
    let mut lo = Vec::with_capacity(center.len());
    let mut hi = Vec::with_capacity(center.len());
    for (step, &m) in (1..=repo.horizon_steps).zip(&center) {
        let values = repo.step_values(step);
        let (l, h) = match method {
            IntervalMethod::Percentile => central_95(&values),
            IntervalMethod::Normal => {
                let half = 1.96 * std_dev(&values);
                (m - half, m + half)
            }
        };
        lo.push(l.min(m));
        hi.push(h.max(m));
    }
    Ok(BandSeries { lo, hi, center })
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`.
///
/// When the IQR is zero but the sample still has spread the standard
/// deviation is used alone. The result is floored at
/// `1e-3 * max(1, max |x|)`, so a constant or near-constant sample still
/// yields a kernel wide enough to draw and a density of moderate height.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let sd = std_dev(&sorted);
    let iqr = percentile_ratio(&sorted, 3, 4) - percentile_ratio(&sorted, 1, 4);
    let mut spread = sd.min(iqr / 1.34);
    if spread <= 0.0 {
        spread = sd;
    }
    let magnitude = sorted[0].abs().max(sorted[sorted.len() - 1].abs());
    let floor = 1e-3 * magnitude.max(1.0);
    (0.9 * spread * n.powf(-0.2)).max(floor)
}

/// Gaussian kernel density of `values` on `grid_points` evenly spaced
/// points spanning `[min - 3h, max + 3h]`, rescaled so that its trapezoid
/// integral is exactly one.
pub fn kde_profile(values: &[f64], step: usize, grid_points: usize) -> Result<DensityProfile> {
    if values.is_empty() {
        return Err(Error::Empty("values for density estimate"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if grid_points < 16 {
        return Err(Error::InvalidArgument(format!(
            "grid_points must be at least 16, got {grid_points}"
        )));
    }
    let h = silverman_bandwidth(values);
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let start = min - 3.0 * h;
    let width = (max + 3.0 * h) - start;
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| start + width * i as f64 / (grid_points - 1) as f64)
        .collect();

    let norm = 1.0 / (values.len() as f64 * h * (2.0 * PI).sqrt());
    let mut density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            norm * values
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    let area = trapezoid(&grid, &density);
    density.iter_mut().for_each(|d| *d /= area);

    Ok(DensityProfile {
        step,
        bandwidth: h,
        grid,
        density,
    })
}

/// One density profile per horizon step.
pub fn step_profiles(repo: &ForecastRepository, grid_points: usize) -> Result<Vec<DensityProfile>> {
    require_forecasts(repo)?;
    (1..=repo.horizon_steps)
        .map(|step| kde_profile(&repo.step_values(step), step, grid_points))
        .collect()
}
