//! Forecast repositories: CSV ingestion, validation and model filtering.
//!
//! A forecast file holds one point forecast per `(model, reference_date,
//! horizon_step)` row; a truth file holds one observed value per week.
//! Missing data is an absent row, never a sentinel value.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORECAST_COLUMNS: [&str; 4] = ["model", "reference_date", "horizon_step", "value"];
pub const TRUTH_COLUMNS: [&str; 2] = ["date", "value"];
const DATE_FORMAT: &str = "%Y-%m-%d";

/// One model's point forecasts for horizon steps `1..=H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub model_id: String,
    pub values: Vec<f64>,
}

impl ForecastSeries {
    pub fn new(model_id: impl Into<String>, values: Vec<f64>) -> Self {
        ForecastSeries {
            model_id: model_id.into(),
            values,
        }
    }

    /// Value at the last step.
    pub fn horizon_value(&self) -> f64 {
        *self.values.last().expect("forecast series is never empty")
    }
}

impl AsRef<[f64]> for ForecastSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// A submission with at least one step missing. Kept on load so that
/// filtering, not ingestion, decides what is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompleteSeries {
    pub model_id: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl TruthSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn value_on(&self, date: NaiveDate) -> Option<f64> {
        self.dates.binary_search(&date).ok().map(|i| self.values[i])
    }

    /// The prefix of the series up to and including `date`.
    pub fn truncated_at(&self, date: NaiveDate) -> TruthSeries {
        let end = self.dates.partition_point(|d| *d <= date);
        TruthSeries {
            dates: self.dates[..end].to_vec(),
            values: self.values[..end].to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dates.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                expected: self.dates.len(),
                found: self.values.len(),
            });
        }
        if let Some(w) = self.dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "truth dates not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(v) = self.values.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidArgument(format!("negative truth value {v}")));
        }
        Ok(())
    }
}

/// All model submissions for one reference date, aligned with the
/// observed history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRepository {
    pub reference_date: NaiveDate,
    pub horizon_steps: usize,
    pub history: TruthSeries,
    pub forecasts: Vec<ForecastSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub incomplete: Vec<IncompleteSeries>,
    pub truth_at_horizon: Option<f64>,
}

impl ForecastRepository {
    pub fn len(&self) -> usize {
        self.forecasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forecasts.is_empty()
    }

    /// Calendar date of a 1-based horizon step.
    pub fn step_date(&self, step: usize) -> NaiveDate {
        step_date(self.reference_date, step)
    }

    pub fn horizon_date(&self) -> NaiveDate {
        self.step_date(self.horizon_steps)
    }

    /// Cross-model values at a 1-based step, in forecast order.
    pub fn step_values(&self, step: usize) -> Vec<f64> {
        assert!(
            (1..=self.horizon_steps).contains(&step),
            "step {step} outside 1..={}",
            self.horizon_steps
        );
        self.forecasts.iter().map(|f| f.values[step - 1]).collect()
    }

    pub fn horizon_values(&self) -> Vec<f64> {
        self.step_values(self.horizon_steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_steps == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        self.history.validate()?;
        if let Some(last) = self.history.dates.last() {
            if *last > self.reference_date {
                return Err(Error::InvalidArgument(format!(
                    "history extends past reference date ({last})"
                )));
            }
        }
        let mut seen = HashMap::new();
        for f in &self.forecasts {
            if f.model_id.is_empty() {
                return Err(Error::InvalidArgument("empty model id".into()));
            }
            if f.values.len() != self.horizon_steps {
                return Err(Error::LengthMismatch {
                    expected: self.horizon_steps,
                    found: f.values.len(),
                });
            }
            if let Some(v) = f.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "model {}: invalid value {v}",
                    f.model_id
                )));
            }
            if seen.insert(f.model_id.as_str(), ()).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate model id {}",
                    f.model_id
                )));
            }
        }
        Ok(())
    }

    /// Writes the forecasts (complete and incomplete) in the forecast CSV schema.
    pub fn write_forecast_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::io("<forecast csv>", e.into());
        w.write_record(FORECAST_COLUMNS).map_err(csv_err)?;
        let date = self.reference_date.format(DATE_FORMAT).to_string();
        for f in &self.forecasts {
            for (i, v) in f.values.iter().enumerate() {
                w.write_record([&f.model_id, &date, &(i + 1).to_string(), &v.to_string()])
                    .map_err(csv_err)?;
            }
        }
        for f in &self.incomplete {
            for (i, v) in f.values.iter().enumerate() {
                if let Some(v) = v {
                    w.write_record([&f.model_id, &date, &(i + 1).to_string(), &v.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<forecast csv>", e))
    }

    /// Writes the history plus the horizon truth (when known) in the truth CSV schema.
    pub fn write_truth_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::io("<truth csv>", e.into());
        w.write_record(TRUTH_COLUMNS).map_err(csv_err)?;
        for (d, v) in self.history.dates.iter().zip(&self.history.values) {
            w.write_record([d.format(DATE_FORMAT).to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
        if let Some(t) = self.truth_at_horizon {
            w.write_record([
                self.horizon_date().format(DATE_FORMAT).to_string(),
                t.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<truth csv>", e))
    }
}

pub fn step_date(reference_date: NaiveDate, step: usize) -> NaiveDate {
    reference_date + Days::new(7 * step as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Tutorial,
    Study,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeLabel {
    Outlier,
    Contrast,
    Aligned,
    None,
}

/// Metadata describing one forecast time point of a stimulus set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePointMeta {
    pub id: String,
    pub purpose: Purpose,
    pub date_of_forecast: NaiveDate,
    pub count: usize,
    pub type_label: TypeLabel,
}

/// The six time points (one tutorial, five study) with their post-filter
/// forecast counts and truth-forecast relationship.
pub fn study_time_points() -> Vec<TimePointMeta> {
    let row = |id: &str, purpose, date: &str, count, type_label| TimePointMeta {
        id: id.to_string(),
        purpose,
        date_of_forecast: NaiveDate::parse_from_str(date, DATE_FORMAT).unwrap(),
        count,
        type_label,
    };
    vec![
        row("T1", Purpose::Tutorial, "2022-10-01", 19, TypeLabel::None),
        row("T2", Purpose::Study, "2020-11-14", 43, TypeLabel::Outlier),
        row("T3", Purpose::Study, "2021-01-02", 39, TypeLabel::Contrast),
        row("T4", Purpose::Study, "2021-05-08", 44, TypeLabel::Aligned),
        row("T5", Purpose::Study, "2021-11-13", 24, TypeLabel::Contrast),
        row("T6", Purpose::Study, "2022-04-16", 30, TypeLabel::Contrast),
    ]
}

pub fn load_repository(
    forecast_csv: &Path,
    truth_csv: &Path,
    reference_date: NaiveDate,
    horizon_steps: usize,
) -> Result<ForecastRepository> {
    if horizon_steps == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let truth = read_truth(open(truth_csv)?, truth_csv)?;
    let forecasts = read_forecasts(
        open(forecast_csv)?,
        forecast_csv,
        reference_date,
        horizon_steps,
    )?;
    assemble(truth, forecasts, truth_csv, reference_date, horizon_steps)
}

/// Same as [`load_repository`] over in-memory readers; `*_name` labels errors.
pub fn read_repository<F: Read, T: Read>(
    forecast: F,
    forecast_name: &Path,
    truth: T,
    truth_name: &Path,
    reference_date: NaiveDate,
    horizon_steps: usize,
) -> Result<ForecastRepository> {
    if horizon_steps == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let truth = read_truth(truth, truth_name)?;
    let forecasts = read_forecasts(forecast, forecast_name, reference_date, horizon_steps)?;
    assemble(truth, forecasts, truth_name, reference_date, horizon_steps)
}

fn assemble(
    truth: TruthSeries,
    rows: Vec<(String, Vec<Option<f64>>)>,
    truth_name: &Path,
    reference_date: NaiveDate,
    horizon_steps: usize,
) -> Result<ForecastRepository> {
    if truth.value_on(reference_date).is_none() {
        return Err(Error::ReferenceDateAbsent {
            path: truth_name.to_path_buf(),
            date: reference_date,
        });
    }
    let mut forecasts = Vec::new();
    let mut incomplete = Vec::new();
    for (model_id, values) in rows {
        if values.iter().all(Option::is_some) {
            let values = values.into_iter().map(Option::unwrap).collect();
            forecasts.push(ForecastSeries { model_id, values });
        } else {
            incomplete.push(IncompleteSeries { model_id, values });
        }
    }
    Ok(ForecastRepository {
        reference_date,
        horizon_steps,
        history: truth.truncated_at(reference_date),
        forecasts,
        incomplete,
        truth_at_horizon: truth.value_on(step_date(reference_date, horizon_steps)),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })
}

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Maps each expected column to its index in the header row.
fn column_indices<const N: usize>(
    reader: &mut csv::Reader<impl Read>,
    expected: [&str; N],
    path: &Path,
) -> Result<[usize; N]> {
    let headers = reader
        .headers()
        .map_err(|e| malformed(path, 1, e.to_string()))?
        .clone();
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(expected) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| malformed(path, 1, format!("header is missing column `{name}`")))?;
    }
    Ok(out)
}

fn parse_date(s: &str, path: &Path, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT)
        .map_err(|_| malformed(path, line, format!("invalid date `{s}`")))
}

fn parse_value(s: &str, path: &Path, line: u64) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| malformed(path, line, format!("invalid number `{s}`")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(malformed(
            path,
            line,
            format!("value must be finite and non-negative, got `{s}`"),
        ));
    }
    Ok(v)
}

pub fn read_truth<R: Read>(reader: R, path: &Path) -> Result<TruthSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let [date_col, value_col] = column_indices(&mut rdr, TRUTH_COLUMNS, path)?;
    let mut series = TruthSeries::default();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| malformed(path, line, "missing field"))
        };
        let date = parse_date(field(date_col)?, path, line)?;
        let value = parse_value(field(value_col)?, path, line)?;
        if let Some(prev) = series.dates.last() {
            if date <= *prev {
                return Err(malformed(path, line, "dates must be strictly increasing"));
            }
        }
        series.dates.push(date);
        series.values.push(value);
    }
    Ok(series)
}

/// Rows for `reference_date`, grouped by model in order of first appearance.
/// Steps beyond `horizon_steps` are ignored.
pub fn read_forecasts<R: Read>(
    reader: R,
    path: &Path,
    reference_date: NaiveDate,
    horizon_steps: usize,
) -> Result<Vec<(String, Vec<Option<f64>>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let [model_col, date_col, step_col, value_col] =
        column_indices(&mut rdr, FORECAST_COLUMNS, path)?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| malformed(path, line, "missing field"))
        };
        let model = field(model_col)?.trim();
        if model.is_empty() {
            return Err(malformed(path, line, "empty model id"));
        }
        let date = parse_date(field(date_col)?, path, line)?;
        let step: usize = field(step_col)?
            .trim()
            .parse()
            .map_err(|_| malformed(path, line, "horizon_step must be a positive integer"))?;
        if step == 0 {
            return Err(malformed(path, line, "horizon_step must be at least 1"));
        }
        let value = parse_value(field(value_col)?, path, line)?;
        if date != reference_date || step > horizon_steps {
            continue;
        }
        let slot = *index.entry(model.to_string()).or_insert_with(|| {
            rows.push((model.to_string(), vec![None; horizon_steps]));
            rows.len() - 1
        });
        let cell = &mut rows[slot].1[step - 1];
        if cell.is_some() {
            return Err(malformed(
                path,
                line,
                format!("duplicate row for model {model} step {step}"),
            ));
        }
        *cell = Some(value);
    }
    Ok(rows)
}

/// Drops models whose id starts with any excluded prefix, and every model
/// with a missing step. Surviving series keep their order and values.
pub fn filter_models<S: AsRef<str>>(
    repo: &ForecastRepository,
    excluded_prefixes: &[S],
) -> ForecastRepository {
    let excluded = |id: &str| excluded_prefixes.iter().any(|p| id.starts_with(p.as_ref()));
    ForecastRepository {
        forecasts: repo
            .forecasts
            .iter()
            .filter(|f| !excluded(&f.model_id))
            .cloned()
            .collect(),
        incomplete: Vec::new(),
        ..repo.clone()
    }
}
