use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn study_toml() -> PathBuf {
    root().join("fixtures/study.toml")
}

fn mfv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfv"))
        .args(args)
        .env_remove("MFV_SEED")
        .output()
        .unwrap()
}

fn mfv_env(args: &[&str], seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfv"))
        .args(args)
        .env("MFV_SEED", seed)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn svgs(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "svg"))
        .collect();
    v.sort();
    v
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let o = mfv(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(mfv(&["ingest", "--bogus"]).status.code(), Some(1));
    assert_eq!(mfv(&["ingest"]).status.code(), Some(1));
}

#[test]
fn missing_csv_is_a_data_error_naming_the_path() {
    let truth = root().join("fixtures/truth.csv");
    let o = mfv(&[
        "ingest",
        "--forecast-csv",
        "/nonexistent/forecasts.csv",
        "--truth-csv",
        truth.to_str().unwrap(),
        "--reference-date",
        "2021-01-02",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("/nonexistent/forecasts.csv"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unwritable_output_is_an_io_error() {
    let cfg = study_toml();
    let o = mfv(&[
        "--config",
        cfg.to_str().unwrap(),
        "repo",
        "dump",
        "--time-point",
        "T2",
        "--out",
        "/nonexistent/dir/x.json",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn render_batch_from_study_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = study_toml();
    let o = mfv(&[
        "render-batch",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let files = svgs(dir.path());
    assert_eq!(files.len(), 88);
    assert_eq!(
        files
            .iter()
            .filter(|p| p.to_str().unwrap().ends_with("_truth.svg"))
            .count(),
        40
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 88);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn printed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = study_toml();
    let printed = mfv(&[
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
        "--print-config",
    ]);
    assert!(printed.status.success());
    let saved = dir.path().join("effective.toml");
    std::fs::write(&saved, stdout(&printed)).unwrap();

    let first = mfv(&[
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
        "render-batch",
    ]);
    assert!(first.status.success(), "{}", stderr(&first));
    let again = mfv(&["--config", saved.to_str().unwrap(), "--print-config"]);
    assert_eq!(stdout(&again), stdout(&printed));

    // same recipe, different output directory: identical charts
    let second = mfv(&[
        "--config",
        saved.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "render-batch",
    ]);
    assert!(second.status.success(), "{}", stderr(&second));
    for f in svgs(&a) {
        let g = b.join(f.file_name().unwrap());
        assert_eq!(
            std::fs::read(&f).unwrap(),
            std::fs::read(&g).unwrap(),
            "{}",
            f.display()
        );
    }
    let hash = |d: &Path| {
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("manifest.json")).unwrap())
                .unwrap();
        m["config_hash"].as_str().unwrap().to_string()
    };
    // the hash covers the output directory, so only the charts match
    assert_ne!(hash(&a), hash(&b));
}

#[test]
fn seed_falls_back_to_environment() {
    let truth = root().join("fixtures/truth.csv");
    let forecasts = root().join("fixtures/forecasts.csv");
    let args = [
        "--forecast-csv",
        forecasts.to_str().unwrap(),
        "--truth-csv",
        truth.to_str().unwrap(),
        "--print-config",
    ];
    assert!(stdout(&mfv_env(&args, "123")).contains("seed = 123"));
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "5"]);
    assert!(stdout(&mfv_env(&with_flag, "123")).contains("seed = 5"));
}

#[test]
fn cluster_reads_values_and_honours_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let values = dir.path().join("v.txt");
    std::fs::write(&values, "1\n2\n\n10\n11\n30\n").unwrap();
    let o = mfv(&[
        "cluster",
        "--values",
        values.to_str().unwrap(),
        "--epsilon",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(c["clusters"].as_array().unwrap().len(), 3);

    std::fs::write(&values, "1\nx\n").unwrap();
    let bad = mfv(&[
        "cluster",
        "--values",
        values.to_str().unwrap(),
        "--epsilon",
        "1",
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains(":2:"));
}

#[test]
fn subcommands_emit_json_for_a_time_point() {
    let cfg = study_toml();
    let c = cfg.to_str().unwrap();
    let ingest: serde_json::Value = serde_json::from_str(&stdout(&mfv(&[
        "--config",
        c,
        "ingest",
        "--time-point",
        "T2",
    ])))
    .unwrap();
    assert_eq!(ingest["forecasts"], 43);
    assert_eq!(ingest["excluded"].as_array().unwrap().len(), 2);
    assert_eq!(ingest["incomplete"].as_array().unwrap().len(), 1);

    let sample: serde_json::Value = serde_json::from_str(&stdout(&mfv(&[
        "--config",
        c,
        "sample",
        "horizon",
        "--time-point",
        "T4",
    ])))
    .unwrap();
    assert_eq!(sample["series"].as_array().unwrap().len(), 8);
    assert_eq!(sample["seed"], 42);

    let bundle: serde_json::Value = serde_json::from_str(&stdout(&mfv(&[
        "--config",
        c,
        "sample",
        "progressive",
        "--time-point",
        "T4",
    ])))
    .unwrap();
    assert_eq!(bundle["steps"].as_array().unwrap().len(), 4);

    let stats: serde_json::Value = serde_json::from_str(&stdout(&mfv(&[
        "--config",
        c,
        "stats",
        "--time-point",
        "T3",
    ])))
    .unwrap();
    assert_eq!(stats["mean"].as_array().unwrap().len(), 4);

    let dump: serde_json::Value = serde_json::from_str(&stdout(&mfv(&[
        "--config",
        c,
        "repo",
        "dump",
        "--time-point",
        "T5",
    ])))
    .unwrap();
    assert_eq!(dump["forecasts"].as_array().unwrap().len(), 24);
}

#[test]
fn render_writes_one_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.svg");
    let cfg = study_toml();
    let o = mfv(&[
        "--config",
        cfg.to_str().unwrap(),
        "render",
        "--design",
        "progressive_frequency",
        "--time-point",
        "T3",
        "--truth",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert!(doc
        .descendants()
        .any(|n| n.attribute("class") == Some("truth")));

    let bad = mfv(&[
        "--config",
        cfg.to_str().unwrap(),
        "render",
        "--design",
        "pie",
        "--time-point",
        "T3",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn bench_csv_is_deterministic() {
    let cfg = study_toml();
    let args = [
        "--config",
        cfg.to_str().unwrap(),
        "bench",
        "--strategies",
        "mean-only,ci95,horizon,progressive",
        "--seeds",
        "1,2,3",
    ];
    let a = mfv(&args);
    let b = mfv(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(
        text.starts_with("strategy,time_point,seed,truth_covered,wasserstein,crossings,n_marks")
    );
    assert_eq!(text.lines().count(), 1 + 4 * 5 * 3);
}
