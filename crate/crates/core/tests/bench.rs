use mfv_core::metrics::{bench, evaluate, summary_table, BenchParams, Strategy, WassersteinScope};
use mfv_core::sampling::HorizonSampleParams;
use mfv_core::synthetic::{SyntheticStudy, DEFAULT_SEED};

fn params(seed: u64, scope: WassersteinScope) -> BenchParams {
    BenchParams {
        sampling: HorizonSampleParams::new(seed),
        scope,
    }
}

#[test]
fn horizon_reports_on_t4_are_deterministic_per_seed() {
    let study = SyntheticStudy::generate(DEFAULT_SEED).unwrap();
    let (_, t4) = study
        .filtered()
        .into_iter()
        .find(|(m, _)| m.id == "T4")
        .unwrap();
    let tps = vec![("T4".to_string(), t4.clone())];
    let seeds: Vec<u64> = (0..100).collect();
    let p = params(0, WassersteinScope::Horizon);
    let a = bench(&[Strategy::Horizon], &tps, &seeds, &p).unwrap();
    let b = bench(&[Strategy::Horizon], &tps, &seeds, &p).unwrap();
    assert_eq!(a, b);
    for (row, seed) in a.iter().zip(&seeds) {
        assert_eq!(row.seed, *seed);
        assert_eq!(
            row,
            &evaluate(
                Strategy::Horizon,
                "T4",
                &t4,
                &params(*seed, WassersteinScope::Horizon)
            )
            .unwrap()
        );
        assert_eq!(row.n_marks, 8);
    }
}

#[test]
fn per_step_scope_is_zero_only_for_the_full_repository() {
    let study = SyntheticStudy::generate(DEFAULT_SEED).unwrap();
    let tps: Vec<(String, _)> = study
        .filtered()
        .into_iter()
        .skip(1)
        .map(|(m, r)| (m.id, r))
        .collect();
    let rows = bench(
        &Strategy::ALL,
        &tps,
        &[3],
        &params(3, WassersteinScope::AllSteps),
    )
    .unwrap();
    assert_eq!(rows.len(), Strategy::ALL.len() * 5);
    for r in &rows {
        assert_eq!(
            r.wasserstein_horizon == 0.0,
            r.strategy == "full-mfv",
            "{r:?}"
        );
    }
    let table = summary_table(&rows);
    assert!(table.contains("progressive"));
}
