use std::path::PathBuf;

use mfv_core::forecast_data::study_time_points;
use mfv_core::synthetic::{SyntheticStudy, DEFAULT_SEED};
use mfv_core::{filter_models, load_repository, truth_coverage};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn bundled_csvs_match_the_generator() {
    let study = SyntheticStudy::generate(DEFAULT_SEED).unwrap();
    let mut forecasts = Vec::new();
    let mut truth = Vec::new();
    study.write_forecast_csv(&mut forecasts).unwrap();
    study.write_truth_csv(&mut truth).unwrap();
    assert_eq!(std::fs::read(fixture("forecasts.csv")).unwrap(), forecasts);
    assert_eq!(std::fs::read(fixture("truth.csv")).unwrap(), truth);
}

#[test]
fn loaded_fixtures_have_listed_counts() {
    for meta in study_time_points() {
        let raw = load_repository(
            &fixture("forecasts.csv"),
            &fixture("truth.csv"),
            meta.date_of_forecast,
            4,
        )
        .unwrap();
        assert_eq!(raw.len(), meta.count + 2, "{}", meta.id);
        assert_eq!(raw.incomplete.len(), 1);
        let repo = filter_models(&raw, &["COVIDhub"]);
        assert_eq!(repo.len(), meta.count, "{}", meta.id);
        assert!(repo.incomplete.is_empty());
        assert!(repo.truth_at_horizon.is_some());
    }
}

#[test]
fn t2_truth_is_outside_the_horizon_values() {
    let t2 = study_time_points()
        .into_iter()
        .find(|m| m.id == "T2")
        .unwrap();
    let raw = load_repository(
        &fixture("forecasts.csv"),
        &fixture("truth.csv"),
        t2.date_of_forecast,
        4,
    )
    .unwrap();
    let repo = filter_models(&raw, &["COVIDhub"]);
    assert_eq!(repo.len(), 43);
    assert!(!truth_coverage(&repo.horizon_values(), repo.truth_at_horizon.unwrap()).unwrap());
}
