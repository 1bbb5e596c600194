//! Deterministic synthetic forecast hub data.
//!
//! Produces a weekly mortality truth curve and, for each of the six study
//! time points, a set of model submissions with the listed post-filter
//! count and truth-forecast relationship. Every time point also carries two
//! `COVIDhub-` ensemble submissions and one submission missing its final
//! step, so filtering is exercised on the way to the listed count.

use std::io::Write;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::forecast_data::{
    filter_models, step_date, study_time_points, ForecastRepository, ForecastSeries,
    IncompleteSeries, TimePointMeta, TruthSeries, TypeLabel, FORECAST_COLUMNS, TRUTH_COLUMNS,
};

pub const DEFAULT_SEED: u64 = 20_240_521;
pub const HORIZON: usize = 4;

const FIRST_WEEK: (i32, u32, u32) = (2020, 3, 7);
const LAST_WEEK: (i32, u32, u32) = (2022, 12, 31);

/// (peak date, peak weekly deaths, width in weeks)
const WAVES: [((i32, u32, u32), f64, f64); 6] = [
    ((2020, 4, 18), 14_500.0, 3.5),
    ((2020, 8, 1), 6_800.0, 5.0),
    ((2021, 1, 16), 21_500.0, 6.5),
    ((2021, 9, 18), 13_000.0, 5.0),
    ((2022, 2, 5), 16_500.0, 4.5),
    ((2022, 7, 30), 2_600.0, 7.0),
];

const TEAMS: [&str; 16] = [
    "SEIR", "ARIMA", "GBM", "LSTM", "Bayes", "Agent", "Growth", "Mech", "Ens", "Kalman", "Renewal",
    "GLM", "Spline", "Metapop", "Hawkes", "Prophet",
];

fn ymd((y, m, d): (i32, u32, u32)) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Weekly truth curve: a sum of Gaussian waves over a small floor, with
/// seeded multiplicative noise, rounded to whole deaths.
pub fn synthetic_truth(seed: u64) -> TruthSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = TruthSeries::default();
    let mut date = ymd(FIRST_WEEK);
    while date <= ymd(LAST_WEEK) {
        let level: f64 = 400.0
            + WAVES
                .iter()
                .map(|&(peak, height, width)| {
                    let weeks = (date - ymd(peak)).num_days() as f64 / 7.0;
                    height * (-0.5 * (weeks / width).powi(2)).exp()
                })
                .sum::<f64>();
        let noise: f64 = rng.random_range(-0.03..0.03);
        series.dates.push(date);
        series.values.push((level * (1.0 + noise)).round());
        date = date + Days::new(7);
    }
    series
}

/// Submissions for one time point, before filtering.
pub fn synthetic_repository(
    meta: &TimePointMeta,
    truth: &TruthSeries,
    seed: u64,
) -> Result<ForecastRepository> {
    let reference = meta.date_of_forecast;
    let last = truth
        .value_on(reference)
        .ok_or_else(|| Error::InvalidArgument(format!("{reference} outside synthetic truth")))?;
    let target = truth
        .value_on(step_date(reference, HORIZON))
        .ok_or_else(|| {
            Error::InvalidArgument(format!("horizon of {reference} outside synthetic truth"))
        })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (reference - ymd(FIRST_WEEK)).num_days() as u64);
    let n = meta.count;
    let sigma = 0.12;
    let z: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut sorted_z = z.clone();
    sorted_z.sort_by(f64::total_cmp);
    let (z_min, z_max, z_med) = (sorted_z[0], sorted_z[n - 1], sorted_z[n / 2]);

    let outlier = rng.random_range(0..n);
    let horizon_value = |i: usize| -> f64 {
        match meta.type_label {
            TypeLabel::Aligned | TypeLabel::None => target * (sigma * (z[i] - z_med)).exp(),
            // truth sits just past one stray forecast, well outside the bulk
            TypeLabel::Outlier if i == outlier => target * 0.985,
            TypeLabel::Outlier => target * 0.93 * (sigma * (z[i] - z_max)).exp(),
            // truth lies outside the whole forecast range
            TypeLabel::Contrast if target >= last => target * 0.85 * (sigma * (z[i] - z_max)).exp(),
            TypeLabel::Contrast => target * 1.18 * (sigma * (z[i] - z_min)).exp(),
        }
    };

    let trajectory = |rng: &mut ChaCha8Rng, end: f64| -> Vec<f64> {
        let curvature: f64 = rng.random_range(0.7..1.4);
        (1..=HORIZON)
            .map(|t| {
                let frac = (t as f64 / HORIZON as f64).powf(curvature);
                let wobble = if t < HORIZON {
                    rng.random_range(-0.02..0.02)
                } else {
                    0.0
                };
                let v = (last + (end - last) * frac) * (1.0 + wobble);
                (v.max(0.0) * 10.0).round() / 10.0
            })
            .collect()
    };

    let mut forecasts: Vec<ForecastSeries> = (0..n)
        .map(|i| {
            let values = trajectory(&mut rng, horizon_value(i));
            ForecastSeries::new(
                format!("team{:02}-{}", i + 1, TEAMS[i % TEAMS.len()]),
                values,
            )
        })
        .collect();
    let ensemble_end = target * (sigma * 0.5 * rng.sample::<f64, _>(StandardNormal)).exp();
    let ensemble = trajectory(&mut rng, ensemble_end);
    forecasts.push(ForecastSeries::new("COVIDhub-ensemble", ensemble));
    forecasts.push(ForecastSeries::new(
        "COVIDhub-baseline",
        vec![last; HORIZON],
    ));
    forecasts.sort_by(|a, b| a.model_id.cmp(&b.model_id));

    let partial_end = horizon_value(rng.random_range(0..n));
    let mut partial: Vec<Option<f64>> = trajectory(&mut rng, partial_end)
        .into_iter()
        .map(Some)
        .collect();
    partial[HORIZON - 1] = None;

    Ok(ForecastRepository {
        reference_date: reference,
        horizon_steps: HORIZON,
        history: truth.truncated_at(reference),
        forecasts,
        incomplete: vec![IncompleteSeries {
            model_id: "zz-partial-model".into(),
            values: partial,
        }],
        truth_at_horizon: Some(target),
    })
}

/// Truth plus the raw (unfiltered) repositories for all six time points.
pub struct SyntheticStudy {
    pub truth: TruthSeries,
    pub time_points: Vec<(TimePointMeta, ForecastRepository)>,
}

impl SyntheticStudy {
    pub fn generate(seed: u64) -> Result<Self> {
        let truth = synthetic_truth(seed);
        let time_points = study_time_points()
            .into_iter()
            .map(|meta| {
                let repo = synthetic_repository(&meta, &truth, seed)?;
                Ok((meta, repo))
            })
            .collect::<Result<_>>()?;
        Ok(SyntheticStudy { truth, time_points })
    }

    /// Filtered repositories, as a study run would load them.
    pub fn filtered(&self) -> Vec<(TimePointMeta, ForecastRepository)> {
        self.time_points
            .iter()
            .map(|(m, r)| (m.clone(), filter_models(r, &["COVIDhub"])))
            .collect()
    }

    /// One forecast CSV covering every time point.
    pub fn write_forecast_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::io("<forecast csv>", e.into());
        w.write_record(FORECAST_COLUMNS).map_err(err)?;
        for (_, repo) in &self.time_points {
            let date = repo.reference_date.to_string();
            let complete = repo.forecasts.iter().map(|f| {
                (
                    f.model_id.as_str(),
                    f.values.iter().copied().map(Some).collect::<Vec<_>>(),
                )
            });
            let partial = repo
                .incomplete
                .iter()
                .map(|f| (f.model_id.as_str(), f.values.clone()));
            for (model, values) in complete.chain(partial) {
                for (i, v) in values.iter().enumerate() {
                    if let Some(v) = v {
                        w.write_record([model, &date, &(i + 1).to_string(), &v.to_string()])
                            .map_err(err)?;
                    }
                }
            }
        }
        w.flush().map_err(|e| Error::io("<forecast csv>", e))
    }

    pub fn write_truth_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::io("<truth csv>", e.into());
        w.write_record(TRUTH_COLUMNS).map_err(err)?;
        for (d, v) in self.truth.dates.iter().zip(&self.truth.values) {
            w.write_record([d.to_string(), v.to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<truth csv>", e))
    }
}
