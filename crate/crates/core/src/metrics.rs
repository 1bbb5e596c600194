//! Computational fidelity benchmark for sampling strategies.
//!
//! These measures describe how faithfully a strategy's marks represent
//! the full repository. They are not a model of human judgement: error,
//! trust, surprise and task load cannot be derived from the marks alone
//! and are not estimated here.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::find_epsilon;
use crate::error::{Error, Result};
use crate::forecast_data::ForecastRepository;
use crate::sampling::{horizon_sample, progressive_bundle, HorizonSampleParams};
use crate::summary_stats::{ci95, mean_trajectory};

/// Whether `truth` lies within `[min(values), max(values)]`.
pub fn truth_coverage(values: &[f64], truth: f64) -> Result<bool> {
    if values.is_empty() {
        return Err(Error::Empty("values for coverage"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok(lo <= truth && truth <= hi)
}

/// 1-Wasserstein distance between two empirical distributions.
pub fn wasserstein_1d(sample: &[f64], full: &[f64]) -> Result<f64> {
    let a: Vec<(f64, f64)> = sample.iter().map(|&v| (v, 1.0)).collect();
    let b: Vec<(f64, f64)> = full.iter().map(|&v| (v, 1.0)).collect();
    wasserstein_1d_weighted(&a, &b)
}

/// 1-Wasserstein distance between two weighted point sets `(value, weight)`,
/// computed exactly as the integral of `|F_a - F_b|` between merged
/// breakpoints.
pub fn wasserstein_1d_weighted(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    let prepare = |points: &[(f64, f64)]| -> Result<Vec<(f64, f64)>> {
        if points.is_empty() {
            return Err(Error::Empty("distribution for Wasserstein distance"));
        }
        if let Some(i) = points
            .iter()
            .position(|(v, w)| !v.is_finite() || !w.is_finite() || *w < 0.0)
        {
            return Err(Error::NonFinite(i));
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        let mut out: Vec<(f64, f64)> = points.iter().map(|&(v, w)| (v, w / total)).collect();
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(out)
    };
    let a = prepare(a)?;
    let b = prepare(b)?;

    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut distance = 0.0;
    let mut prev: Option<f64> = None;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            distance += (fa - fb).abs() * (x - p);
        }
        while i < a.len() && a[i].0 == x {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            fb += b[j].1;
            j += 1;
        }
        prev = Some(x);
    }
    Ok(distance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Every forecast drawn.
    FullMfv,
    MeanOnly,
    /// The 95% band and its center line.
    Ci95,
    Horizon,
    /// Base progressive bundle at the horizon-sampling epsilon.
    Progressive,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::FullMfv,
        Strategy::MeanOnly,
        Strategy::Ci95,
        Strategy::Horizon,
        Strategy::Progressive,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FullMfv => "full-mfv",
            Strategy::MeanOnly => "mean-only",
            Strategy::Ci95 => "ci95",
            Strategy::Horizon => "horizon",
            Strategy::Progressive => "progressive",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy `{s}`")))
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which steps enter the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WassersteinScope {
    #[default]
    Horizon,
    /// Mean of the per-step distances over all steps.
    AllSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub strategy: String,
    pub time_point: String,
    pub seed: u64,
    pub truth_covered: bool,
    pub wasserstein_horizon: f64,
    pub crossings: u64,
    pub n_marks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchParams {
    pub sampling: HorizonSampleParams,
    pub scope: WassersteinScope,
}

/// Weighted marks a strategy puts on screen at every step.
struct Marks {
    per_step: Vec<Vec<(f64, f64)>>,
    crossings: u64,
}

fn strategy_marks(
    strategy: Strategy,
    repo: &ForecastRepository,
    params: &HorizonSampleParams,
) -> Result<Marks> {
    let steps = 1..=repo.horizon_steps;
    let unit = |v: Vec<f64>| v.into_iter().map(|x| (x, 1.0)).collect::<Vec<_>>();
    Ok(match strategy {
        Strategy::FullMfv => Marks {
            per_step: steps.map(|s| unit(repo.step_values(s))).collect(),
            crossings: crate::sampling::count_crossings(&repo.forecasts)?,
        },
        Strategy::MeanOnly => Marks {
            per_step: mean_trajectory(repo)?
                .into_iter()
                .map(|m| vec![(m, 1.0)])
                .collect(),
            crossings: 0,
        },
        Strategy::Ci95 => {
            let band = ci95(repo)?;
            Marks {
                per_step: (0..repo.horizon_steps)
                    .map(|t| unit(vec![band.lo[t], band.center[t], band.hi[t]]))
                    .collect(),
                crossings: 0,
            }
        }
        Strategy::Horizon => {
            let sample = horizon_sample(repo, params)?;
            Marks {
                per_step: (0..repo.horizon_steps)
                    .map(|t| unit(sample.series.iter().map(|s| s.values[t]).collect()))
                    .collect(),
                crossings: sample.score.crossings,
            }
        }
        Strategy::Progressive => {
            let (epsilon, _) =
                find_epsilon(&repo.horizon_values(), params.target_k, params.k_range)?;
            let bundle = progressive_bundle(repo, epsilon)?;
            Marks {
                per_step: bundle
                    .steps
                    .iter()
                    .map(|s| s.iter().map(|c| (c.mean, c.size as f64)).collect())
                    .collect(),
                crossings: bundle.segment_crossings(),
            }
        }
    })
}

/// Scores one strategy on one repository.
pub fn evaluate(
    strategy: Strategy,
    time_point: &str,
    repo: &ForecastRepository,
    params: &BenchParams,
) -> Result<FidelityReport> {
    let truth = repo.truth_at_horizon.ok_or_else(|| {
        Error::InvalidArgument(format!("time point {time_point} has no horizon truth"))
    })?;
    let marks = strategy_marks(strategy, repo, &params.sampling)?;
    let unit = |v: Vec<f64>| v.into_iter().map(|x| (x, 1.0)).collect::<Vec<_>>();

    let horizon_marks = marks.per_step.last().expect("horizon >= 1");
    let wasserstein = match params.scope {
        WassersteinScope::Horizon => {
            wasserstein_1d_weighted(horizon_marks, &unit(repo.horizon_values()))?
        }
        WassersteinScope::AllSteps => {
            let mut total = 0.0;
            for (t, m) in marks.per_step.iter().enumerate() {
                total += wasserstein_1d_weighted(m, &unit(repo.step_values(t + 1)))?;
            }
            total / marks.per_step.len() as f64
        }
    };
    let values: Vec<f64> = horizon_marks.iter().map(|m| m.0).collect();

    Ok(FidelityReport {
        strategy: strategy.name().to_string(),
        time_point: time_point.to_string(),
        seed: params.sampling.seed,
        truth_covered: truth_coverage(&values, truth)?,
        wasserstein_horizon: wasserstein,
        crossings: marks.crossings,
        n_marks: values.len(),
    })
}

/// Every `(strategy, time point, seed)` cell, in that nesting order.
pub fn bench(
    strategies: &[Strategy],
    time_points: &[(String, ForecastRepository)],
    seeds: &[u64],
    params: &BenchParams,
) -> Result<Vec<FidelityReport>> {
    let mut rows = Vec::with_capacity(strategies.len() * time_points.len() * seeds.len());
    for &strategy in strategies {
        for (id, repo) in time_points {
            for &seed in seeds {
                let cell = BenchParams {
                    sampling: HorizonSampleParams {
                        seed,
                        ..params.sampling
                    },
                    ..*params
                };
                rows.push(evaluate(strategy, id, repo, &cell)?);
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 7] = [
    "strategy",
    "time_point",
    "seed",
    "truth_covered",
    "wasserstein",
    "crossings",
    "n_marks",
];

pub fn write_csv<W: Write>(rows: &[FidelityReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::io("<bench csv>", e.into());
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.strategy.clone(),
            r.time_point.clone(),
            r.seed.to_string(),
            r.truth_covered.to_string(),
            format!("{:.6}", r.wasserstein_horizon),
            r.crossings.to_string(),
            r.n_marks.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<bench csv>", e))
}

/// Per-strategy averages over all time points and seeds, as an aligned
/// plain-text table.
pub fn summary_table(rows: &[FidelityReport]) -> String {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.strategy.as_str()) {
            order.push(&r.strategy);
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>10} {:>14} {:>11} {:>9}",
        "strategy", "cells", "coverage", "wasserstein", "crossings", "marks"
    );
    for name in order {
        let cells: Vec<&FidelityReport> = rows.iter().filter(|r| r.strategy == name).collect();
        let n = cells.len() as f64;
        let avg = |f: &dyn Fn(&FidelityReport) -> f64| cells.iter().map(|r| f(r)).sum::<f64>() / n;
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>10.3} {:>14.3} {:>11.2} {:>9.2}",
            name,
            cells.len(),
            avg(&|r| r.truth_covered as u8 as f64),
            avg(&|r| r.wasserstein_horizon),
            avg(&|r| r.crossings as f64),
            avg(&|r| r.n_marks as f64),
        );
    }
    out.push_str("coverage = share of cells whose marks span the horizon truth; not a human accuracy measure\n");
    out
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use crate::forecast_data::{ForecastSeries, TruthSeries};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    /// Integral of |Q_a(u) - Q_b(u)| over u in (0, 1) by the midpoint rule.
    fn quantile_oracle(a: &[f64], b: &[f64], n: usize) -> f64 {
        let q = |s: &[f64], u: f64| {
            let k = ((u * s.len() as f64).ceil() as usize).clamp(1, s.len());
            s[k - 1]
        };
        let mut sa = a.to_vec();
        sa.sort_by(f64::total_cmp);
        let mut sb = b.to_vec();
        sb.sort_by(f64::total_cmp);
        (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                (q(&sa, u) - q(&sb, u)).abs()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn coverage_examples() {
        assert!(truth_coverage(&[5.0, 10.0], 7.0).unwrap());
        assert!(!truth_coverage(&[5.0, 10.0], 11.0).unwrap());
        assert!(truth_coverage(&[5.0, 10.0], 10.0).unwrap());
        assert!(truth_coverage(&[], 1.0).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(
            wasserstein_1d(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(wasserstein_1d(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&[0.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert!(wasserstein_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn weighted_marks_equal_repeated_points() {
        let w = wasserstein_1d_weighted(&[(1.0, 2.0), (5.0, 1.0)], &[(2.0, 1.0)]).unwrap();
        let r = wasserstein_1d(&[1.0, 1.0, 5.0], &[2.0]).unwrap();
        assert!((w - r).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_quantile_oracle(
            a in prop::collection::vec(0.0f64..100.0, 1..12),
            b in prop::collection::vec(0.0f64..100.0, 1..12),
        ) {
            let exact = wasserstein_1d(&a, &b).unwrap();
            let approx = quantile_oracle(&a, &b, 100_000);
            prop_assert!((exact - approx).abs() <= 1e-4 * 100.0, "{} vs {}", exact, approx);
        }

        #[test]
        fn symmetric_and_triangle(
            a in prop::collection::vec(0.0f64..100.0, 1..10),
            b in prop::collection::vec(0.0f64..100.0, 1..10),
            c in prop::collection::vec(0.0f64..100.0, 1..10),
        ) {
            let ab = wasserstein_1d(&a, &b).unwrap();
            prop_assert!((ab - wasserstein_1d(&b, &a).unwrap()).abs() <= 1e-9);
            let ac = wasserstein_1d(&a, &c).unwrap();
            let cb = wasserstein_1d(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
        }

        #[test]
        fn coverage_is_monotone(values in prop::collection::vec(0.0f64..100.0, 1..10), extra in 0.0f64..100.0, truth in 0.0f64..100.0) {
            let before = truth_coverage(&values, truth).unwrap();
            let mut more = values.clone();
            more.push(extra);
            prop_assert!(!before || truth_coverage(&more, truth).unwrap());
        }
    }

    fn repo() -> ForecastRepository {
        let forecasts = (0..12)
            .map(|i| {
                let base = 100.0 + 13.0 * i as f64 + (i * i) as f64;
                ForecastSeries::new(
                    format!("m{i}"),
                    vec![base, base + 5.0, base + 3.0 * i as f64, base + 9.0],
                )
            })
            .collect();
        ForecastRepository {
            reference_date: NaiveDate::from_ymd_opt(2021, 5, 8).unwrap(),
            horizon_steps: 4,
            history: TruthSeries::default(),
            forecasts,
            incomplete: vec![],
            truth_at_horizon: Some(150.0),
        }
    }

    #[test]
    fn full_mfv_is_exact() {
        let r = repo();
        let params = BenchParams {
            sampling: HorizonSampleParams::new(3),
            scope: WassersteinScope::Horizon,
        };
        let rep = evaluate(Strategy::FullMfv, "T", &r, &params).unwrap();
        assert_eq!(rep.wasserstein_horizon, 0.0);
        assert_eq!(rep.n_marks, r.len());
        let mean = evaluate(Strategy::MeanOnly, "T", &r, &params).unwrap();
        assert_eq!(mean.n_marks, 1);
        assert!(!mean.truth_covered);
        let all = BenchParams {
            scope: WassersteinScope::AllSteps,
            ..params
        };
        assert_eq!(
            evaluate(Strategy::FullMfv, "T", &r, &all)
                .unwrap()
                .wasserstein_horizon,
            0.0
        );
    }

    #[test]
    fn bench_row_count_and_csv() {
        let tps = vec![("A".to_string(), repo()), ("B".to_string(), repo())];
        let params = BenchParams {
            sampling: HorizonSampleParams::new(0),
            scope: WassersteinScope::Horizon,
        };
        let rows = bench(&Strategy::ALL, &tps, &[1, 2, 3], &params).unwrap();
        assert_eq!(rows.len(), 5 * 2 * 3);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .starts_with("strategy,time_point,seed,truth_covered,wasserstein,crossings,n_marks\n"));
        assert_eq!(text.lines().count(), 31);
        let table = summary_table(&rows);
        assert!(table.contains("progressive"));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }
}
