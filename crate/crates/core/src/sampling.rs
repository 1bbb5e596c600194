//! The two cluster-based sampling strategies.
//!
//! *Horizon sampling* clusters the values at the final step and keeps one
//! untouched full-length series per cluster. *Progressive sampling*
//! clusters every step independently and bundles the clusters into a
//! trend graph of means, 95% ranges and transition counts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{dbscan_1d, find_epsilon, Clustering, CountRange};
use crate::error::{Error, Result};
use crate::forecast_data::{ForecastRepository, ForecastSeries};
use crate::summary_stats::{central_95, mean};

pub const DEFAULT_TARGET_K: usize = 8;
pub const DEFAULT_N_DRAWS: usize = 64;
pub const DEFAULT_N_LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub cluster_index: usize,
    pub model_id: String,
}

/// Quality of a candidate selection: fewer crossings first, then a wider
/// minimum gap between neighbouring lines at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub crossings: u64,
    pub min_gap: f64,
}

impl SelectionScore {
    fn better_than(&self, other: &SelectionScore) -> bool {
        self.crossings < other.crossings
            || (self.crossings == other.crossings && self.min_gap > other.min_gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSample {
    pub epsilon: f64,
    pub seed: u64,
    pub n_draws: usize,
    pub selections: Vec<Selection>,
    /// The selected series, unmodified, in cluster order.
    pub series: Vec<ForecastSeries>,
    pub score: SelectionScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonSampleParams {
    pub target_k: usize,
    pub k_range: CountRange,
    pub seed: u64,
    pub n_draws: usize,
}

impl HorizonSampleParams {
    pub fn new(seed: u64) -> Self {
        HorizonSampleParams {
            target_k: DEFAULT_TARGET_K,
            k_range: CountRange::default(),
            seed,
            n_draws: DEFAULT_N_DRAWS,
        }
    }
}

/// Clusters the horizon values and selects one representative per cluster.
///
/// Singleton clusters keep their only member. For the rest, `n_draws`
/// candidate selections are drawn uniformly from a seeded generator and the
/// best-scoring one wins, earliest draw first on ties.
pub fn horizon_sample(
    repo: &ForecastRepository,
    params: &HorizonSampleParams,
) -> Result<HorizonSample> {
    if repo.is_empty() {
        return Err(Error::Empty("forecast repository"));
    }
    if params.n_draws == 0 {
        return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
    }
    let (epsilon, clustering) =
        find_epsilon(&repo.horizon_values(), params.target_k, params.k_range)?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec<usize>, SelectionScore)> = None;
    for _ in 0..params.n_draws {
        let picks: Vec<usize> = clustering
            .clusters
            .iter()
            .map(|c| match c.len() {
                1 => c.member_indices[0],
                n => c.member_indices[rng.random_range(0..n)],
            })
            .collect();
        let score = score_selection(repo, &picks);
        if best.as_ref().is_none_or(|(_, b)| score.better_than(b)) {
            best = Some((picks, score));
        }
    }
    let (picks, score) = best.expect("n_draws >= 1");

    Ok(HorizonSample {
        epsilon,
        seed: params.seed,
        n_draws: params.n_draws,
        selections: picks
            .iter()
            .enumerate()
            .map(|(cluster_index, &i)| Selection {
                cluster_index,
                model_id: repo.forecasts[i].model_id.clone(),
            })
            .collect(),
        series: picks.iter().map(|&i| repo.forecasts[i].clone()).collect(),
        score,
    })
}

fn score_selection(repo: &ForecastRepository, picks: &[usize]) -> SelectionScore {
    let series: Vec<&[f64]> = picks
        .iter()
        .map(|&i| repo.forecasts[i].values.as_slice())
        .collect();
    let crossings = count_crossings(&series).expect("repository series share a length");
    let mut horizon: Vec<f64> = series.iter().map(|s| s[s.len() - 1]).collect();
    horizon.sort_by(f64::total_cmp);
    let min_gap = horizon
        .windows(2)
        .map(|w| w[1] - w[0])
        .min_by(f64::total_cmp)
        .unwrap_or(0.0);
    SelectionScore { crossings, min_gap }
}

/// Number of `(pair, step)` where two polylines swap order between
/// consecutive steps. Touching (a zero difference at either end) is not a
/// crossing.
pub fn count_crossings<S: AsRef<[f64]>>(series: &[S]) -> Result<u64> {
    let Some(first) = series.first() else {
        return Ok(0);
    };
    let len = first.as_ref().len();
    if let Some(bad) = series.iter().find(|s| s.as_ref().len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: bad.as_ref().len(),
        });
    }
    let mut count = 0;
    for (i, a) in series.iter().enumerate() {
        for b in &series[i + 1..] {
            let signs: Vec<i8> = a
                .as_ref()
                .iter()
                .zip(b.as_ref())
                .map(|(x, y)| sign(x - y))
                .collect();
            count += signs
                .windows(2)
                .filter(|w| w[0] != 0 && w[1] != 0 && w[0] != w[1])
                .count() as u64;
        }
    }
    Ok(count)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub mean: f64,
    pub range_lo: f64,
    pub range_hi: f64,
    pub size: usize,
}

impl ClusterSummary {
    fn of(values: &[f64]) -> Self {
        let m = mean(values);
        let (lo, hi) = central_95(values);
        ClusterSummary {
            mean: m,
            range_lo: lo.min(m),
            range_hi: hi.max(m),
            size: values.len(),
        }
    }
}

/// Forecasts moving from cluster `from_cluster` at `step` to cluster
/// `to_cluster` at `step + 1`. Steps are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub step: usize,
    pub from_cluster: usize,
    pub to_cluster: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveBundle {
    pub epsilon: f64,
    /// `steps[t]` holds the clusters at step `t + 1`, ordered by mean.
    pub steps: Vec<Vec<ClusterSummary>>,
    /// Ordered by `(step, from_cluster, to_cluster)`.
    pub transitions: Vec<Transition>,
}

impl ProgressiveBundle {
    pub fn clusters_at(&self, step: usize) -> &[ClusterSummary] {
        &self.steps[step - 1]
    }

    pub fn transitions_from(&self, step: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.step == step)
    }

    /// Cluster means at the last step paired with their sizes.
    pub fn horizon_marks(&self) -> Vec<(f64, f64)> {
        self.steps
            .last()
            .map(|s| s.iter().map(|c| (c.mean, c.size as f64)).collect())
            .unwrap_or_default()
    }

    /// Pairs of transition segments between the same two steps whose
    /// endpoints (cluster means) swap order.
    pub fn segment_crossings(&self) -> u64 {
        let mut count = 0;
        for step in 1..self.steps.len() {
            let here = &self.steps[step - 1];
            let next = &self.steps[step];
            let segs: Vec<(f64, f64)> = self
                .transitions_from(step)
                .map(|t| (here[t.from_cluster].mean, next[t.to_cluster].mean))
                .collect();
            for (i, a) in segs.iter().enumerate() {
                for b in &segs[i + 1..] {
                    let (s0, s1) = (sign(a.0 - b.0), sign(a.1 - b.1));
                    if s0 != 0 && s1 != 0 && s0 != s1 {
                        count += 1;
                    }
                }
            }
        }
        count
    }
}

/// Clusters each step independently at `epsilon` and records how the
/// forecasts move between consecutive steps' clusters.
pub fn progressive_bundle(repo: &ForecastRepository, epsilon: f64) -> Result<ProgressiveBundle> {
    if repo.is_empty() {
        return Err(Error::Empty("forecast repository"));
    }
    let clusterings: Vec<Clustering> = (1..=repo.horizon_steps)
        .map(|step| dbscan_1d(&repo.step_values(step), epsilon))
        .collect::<Result<_>>()?;
    let labels: Vec<Vec<usize>> = clusterings.iter().map(Clustering::labels).collect();

    let steps = clusterings
        .iter()
        .map(|c| {
            c.clusters
                .iter()
                .map(|c| ClusterSummary::of(&c.member_values))
                .collect()
        })
        .collect();

    let mut transitions = Vec::new();
    for (t, pair) in labels.windows(2).enumerate() {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (&from, &to) in pair[0].iter().zip(&pair[1]) {
            *counts.entry((from, to)).or_default() += 1;
        }
        transitions.extend(
            counts
                .into_iter()
                .map(|((from_cluster, to_cluster), count)| Transition {
                    step: t + 1,
                    from_cluster,
                    to_cluster,
                    count,
                }),
        );
    }

    Ok(ProgressiveBundle {
        epsilon,
        steps,
        transitions,
    })
}

/// Ordinal mapping from a forecast count to a grayscale level, 0 lightest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLevels {
    pub n_levels: usize,
    pub levels: BTreeMap<usize, usize>,
}

impl FrequencyLevels {
    pub fn level(&self, count: usize) -> usize {
        match self.levels.get(&count) {
            Some(l) => *l,
            // counts never seen fall into the nearest lower bin
            None => self
                .levels
                .range(..count)
                .next_back()
                .map_or(0, |(_, l)| *l),
        }
    }

    /// Gray intensity (0 black .. 255 white) of a count. Levels are spread
    /// evenly from light gray (200) down to near black (40).
    pub fn gray(&self, count: usize) -> u8 {
        let level = self.level(count) as f64;
        let span = (self.n_levels - 1) as f64;
        (200.0 - 160.0 * level / span).round() as u8
    }
}

/// Rank-bins the distinct cluster sizes and transition counts of a bundle
/// into `n_levels` equal-frequency bins. The largest count always lands
/// in the darkest level.
pub fn frequency_levels(bundle: &ProgressiveBundle, n_levels: usize) -> Result<FrequencyLevels> {
    if n_levels < 2 {
        return Err(Error::InvalidArgument("n_levels must be at least 2".into()));
    }
    let mut counts: Vec<usize> = bundle
        .steps
        .iter()
        .flatten()
        .map(|c| c.size)
        .chain(bundle.transitions.iter().map(|t| t.count))
        .collect();
    if counts.is_empty() {
        return Err(Error::Empty("progressive bundle"));
    }
    counts.sort_unstable();
    counts.dedup();
    let m = counts.len();
    let levels = counts
        .iter()
        .enumerate()
        .map(|(rank, &c)| (c, n_levels - 1 - (m - 1 - rank) * n_levels / m))
        .collect();
    Ok(FrequencyLevels { n_levels, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast_data::TruthSeries;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn repo(rows: &[Vec<f64>]) -> ForecastRepository {
        ForecastRepository {
            reference_date: NaiveDate::from_ymd_opt(2021, 5, 8).unwrap(),
            horizon_steps: rows[0].len(),
            history: TruthSeries::default(),
            forecasts: rows
                .iter()
                .enumerate()
                .map(|(i, r)| ForecastSeries::new(format!("m{i:02}"), r.clone()))
                .collect(),
            incomplete: vec![],
            truth_at_horizon: None,
        }
    }

    /// Proper intersection of the segments (t, a0)-(t+1, a1) and (t, b0)-(t+1, b1).
    fn segments_cross(a0: f64, a1: f64, b0: f64, b1: f64) -> bool {
        let orient = |px: f64, py: f64, qx: f64, qy: f64, rx: f64, ry: f64| {
            (qx - px) * (ry - py) - (qy - py) * (rx - px)
        };
        let d1 = orient(0.0, b0, 1.0, b1, 0.0, a0);
        let d2 = orient(0.0, b0, 1.0, b1, 1.0, a1);
        let d3 = orient(0.0, a0, 1.0, a1, 0.0, b0);
        let d4 = orient(0.0, a0, 1.0, a1, 1.0, b1);
        d1 * d2 < 0.0 && d3 * d4 < 0.0
    }

    #[test]
    fn crossing_basics() {
        assert_eq!(
            count_crossings(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap(),
            0
        );
        assert_eq!(
            count_crossings(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap(),
            1
        );
        assert_eq!(
            count_crossings(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap(),
            0
        );
        assert!(count_crossings(&[vec![0.0, 1.0], vec![1.0]]).is_err());
        assert_eq!(count_crossings::<Vec<f64>>(&[]).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn crossings_match_segment_oracle(rows in prop::collection::vec(prop::collection::vec(0u8..20, 4), 5)) {
            let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
            let mut expected = 0;
            for i in 0..5 {
                for j in i + 1..5 {
                    for t in 0..3 {
                        if segments_cross(rows[i][t], rows[i][t + 1], rows[j][t], rows[j][t + 1]) {
                            expected += 1;
                        }
                    }
                }
            }
            prop_assert_eq!(count_crossings(&rows).unwrap(), expected);
        }

        #[test]
        fn bundle_conserves_forecasts(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 4), 1..30),
            eps in 0.0f64..30.0,
        ) {
            let b = progressive_bundle(&repo(&rows), eps).unwrap();
            check_conservation(&b, rows.len());
        }

        #[test]
        fn frequency_levels_are_monotone(rows in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 3), 1..40), n in 2usize..8) {
            let b = progressive_bundle(&repo(&rows), 5.0).unwrap();
            let f = frequency_levels(&b, n).unwrap();
            let pairs: Vec<(usize, usize)> = f.levels.iter().map(|(c, l)| (*c, *l)).collect();
            for w in pairs.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
            prop_assert_eq!(pairs.last().unwrap().1, n - 1);
            prop_assert!(pairs.iter().all(|(_, l)| *l < n));
        }
    }

    fn check_conservation(b: &ProgressiveBundle, n: usize) {
        for (t, clusters) in b.steps.iter().enumerate() {
            let step = t + 1;
            assert_eq!(clusters.iter().map(|c| c.size).sum::<usize>(), n);
            for (ci, c) in clusters.iter().enumerate() {
                assert!(c.range_lo <= c.mean && c.mean <= c.range_hi);
                if step < b.steps.len() {
                    let out: usize = b
                        .transitions_from(step)
                        .filter(|t| t.from_cluster == ci)
                        .map(|t| t.count)
                        .sum();
                    assert_eq!(out, c.size);
                }
                if step > 1 {
                    let inc: usize = b
                        .transitions_from(step - 1)
                        .filter(|t| t.to_cluster == ci)
                        .map(|t| t.count)
                        .sum();
                    assert_eq!(inc, c.size);
                }
            }
        }
        assert!(b.transitions.iter().all(|t| t.count >= 1));
    }

    #[test]
    fn identical_forecasts_bundle() {
        let b = progressive_bundle(&repo(&vec![vec![3.0, 4.0, 5.0]; 3]), 0.5).unwrap();
        assert!(b.steps.iter().all(|s| s.len() == 1 && s[0].size == 3));
        assert_eq!(b.transitions.len(), 2);
        assert!(b.transitions.iter().all(|t| t.count == 3));
    }

    #[test]
    fn hand_traced_bundle() {
        let b = progressive_bundle(
            &repo(&[vec![1.0, 1.0], vec![1.0, 9.0], vec![9.0, 9.0]]),
            1.0,
        )
        .unwrap();
        let sizes: Vec<Vec<usize>> = b
            .steps
            .iter()
            .map(|s| s.iter().map(|c| c.size).collect())
            .collect();
        assert_eq!(sizes, vec![vec![2, 1], vec![1, 2]]);
        assert_eq!(b.steps[0][0].mean, 1.0);
        assert_eq!(b.steps[1][1].mean, 9.0);
        let t: Vec<(usize, usize, usize)> = b
            .transitions
            .iter()
            .map(|t| (t.from_cluster, t.to_cluster, t.count))
            .collect();
        assert_eq!(t, vec![(0, 0, 1), (0, 1, 1), (1, 1, 1)]);
        assert!(b.transitions.iter().all(|t| t.step == 1));
        check_conservation(&b, 3);
    }

    #[test]
    fn frequency_levels_examples() {
        let b = ProgressiveBundle {
            epsilon: 0.0,
            steps: vec![vec![
                ClusterSummary {
                    mean: 0.0,
                    range_lo: 0.0,
                    range_hi: 0.0,
                    size: 1,
                },
                ClusterSummary {
                    mean: 1.0,
                    range_lo: 1.0,
                    range_hi: 1.0,
                    size: 5,
                },
                ClusterSummary {
                    mean: 2.0,
                    range_lo: 2.0,
                    range_hi: 2.0,
                    size: 20,
                },
            ]],
            transitions: vec![],
        };
        let f = frequency_levels(&b, 3).unwrap();
        assert_eq!((f.level(1), f.level(5), f.level(20)), (0, 1, 2));
        assert!(f.gray(1) > f.gray(5) && f.gray(5) > f.gray(20));

        let same = progressive_bundle(&repo(&vec![vec![3.0, 4.0]; 4]), 0.0).unwrap();
        let f = frequency_levels(&same, 5).unwrap();
        assert_eq!(f.levels.len(), 1);
        assert_eq!(f.level(4), 4);
        assert!(frequency_levels(&same, 1).is_err());
    }

    #[test]
    fn wide_epsilon_collapses_to_mean() {
        let rows = vec![vec![1.0, 10.0], vec![4.0, 2.0], vec![7.0, 6.0]];
        let b = progressive_bundle(&repo(&rows), 100.0).unwrap();
        assert_eq!(b.steps[0][0].mean, 4.0);
        assert_eq!(b.steps[1][0].mean, 6.0);
    }

    #[test]
    fn all_singletons_ignore_seed() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![i as f64 * 10.0, i as f64 * 20.0])
            .collect();
        let r = repo(&rows);
        let a = horizon_sample(&r, &HorizonSampleParams::new(1)).unwrap();
        let b = horizon_sample(&r, &HorizonSampleParams::new(999)).unwrap();
        assert_eq!(a.selections, b.selections);
        assert_eq!(a.series, r.forecasts);
    }

    #[test]
    fn parallel_pair_is_preferred() {
        // cluster {a, b} at the horizon plus a singleton s; only b crosses s
        let rows = vec![
            vec![0.0, 0.0, 10.0],   // a: stays below s
            vec![30.0, 30.0, 10.5], // b: starts above s, ends below
            vec![20.0, 20.0, 50.0], // s
        ];
        let r = repo(&rows);
        let params = HorizonSampleParams {
            target_k: 2,
            k_range: CountRange::new(1, 3),
            seed: 7,
            n_draws: 64,
        };
        let s = horizon_sample(&r, &params).unwrap();
        assert_eq!(s.selections.len(), 2);
        assert_eq!(s.selections[0].model_id, "m00");
        assert_eq!(s.score.crossings, 0);
    }

    #[test]
    fn horizon_sample_errors() {
        let empty = ForecastRepository {
            forecasts: vec![],
            ..repo(&[vec![1.0]])
        };
        assert!(horizon_sample(&empty, &HorizonSampleParams::new(0)).is_err());
        let params = HorizonSampleParams {
            n_draws: 0,
            ..HorizonSampleParams::new(0)
        };
        assert!(horizon_sample(&repo(&[vec![1.0]]), &params).is_err());
    }
}
