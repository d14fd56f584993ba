mod common;

use common::{ok, read_csv, read_json, run, s, synth_corpus};

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn extract_three_records_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "d.jsonl",
        "{\"id\":\"a\",\"text\":\"The boy is on the stool. He reaches for the cookie jar.\"}\n\
         {\"id\":\"b\",\"text\":\"Um the water is overflowing. Yeah it is.\"}\n\
         {\"id\":\"c\",\"text\":\"The mother dries the dishes by the window.\"}\n",
    );
    let first = dir.path().join("one");
    let second = dir.path().join("two");
    ok(&["--out-dir", &s(&first), "extract", "--data", &s(&data)]).unwrap();
    ok(&["--out-dir", &s(&second), "extract", "--data", &s(&data)]).unwrap();
    let rows = read_csv(&first.join("features.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r["id"].as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
    assert_eq!(rows[0].len(), 101);
    for name in ["features.csv", "extract.manifest.json"] {
        assert_eq!(std::fs::read(first.join(name)).unwrap(), std::fs::read(second.join(name)).unwrap(), "{name}");
    }
    let manifest = read_json(&first.join("extract.manifest.json"));
    assert_eq!(manifest["tool_version"], "0.1.0");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 16);
    assert!(manifest["artifacts"]["features.csv"].is_string());
}

#[test]
fn empty_text_fails_naming_the_record_unless_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.jsonl", "{\"id\":\"ok1\",\"text\":\"hello there\"}\n{\"id\":\"blank7\",\"text\":\"\"}\n");
    let out = run(&["--out-dir", &s(dir.path()), "extract", "--data", &s(&data)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blank7"));
    ok(&["--out-dir", &s(dir.path()), "extract", "--data", &s(&data), "--skip-bad"]).unwrap();
    assert_eq!(read_csv(&dir.path().join("features.csv")).len(), 1);
    assert_eq!(read_csv(&dir.path().join("skipped.csv"))[0]["id"], "blank7");

    let all_bad = write(dir.path(), "bad.jsonl", "{\"id\":\"x\",\"text\":\"\"}\n");
    let out = run(&["--out-dir", &s(dir.path()), "extract", "--data", &s(&all_bad), "--skip-bad"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_inputs_and_bad_flags_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    assert_eq!(run(&["--out-dir", &d, "extract"]).status.code(), Some(2));
    assert_eq!(run(&["--out-dir", &d, "extract", "--data", "/nonexistent.jsonl"]).status.code(), Some(3));
    assert_eq!(run(&["--out-dir", &d, "frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--out-dir", &d, "train", "--task", "cluster"]).status.code(), Some(2));
    let data = write(dir.path(), "d.jsonl", "{\"id\":\"a\",\"text\":\"hi there\"}\n");
    assert_eq!(run(&["--out-dir", &d, "extract", "--data", &s(&data), "--lexicon", "/nope.dic"]).status.code(), Some(3));
    let junk = write(dir.path(), "m.json", "{not json");
    let out = run(&["--out-dir", &d, "predict", "--model", &s(&junk), "--features", &s(&data)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt model file at byte"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_predict_explain_evaluate_stratify() {
    let dir = tempfile::tempdir().unwrap();
    let c = synth_corpus(dir.path(), 80, 40).unwrap();
    let d = s(dir.path());

    let out = run(&["--out-dir", &d, "train", "--data", &s(&c.train), "--features", &s(&c.train_features), "--search-budget", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let base = ["--out-dir", &d, "train", "--data", &s(&c.train), "--features", &s(&c.train_features), "--n-trees", "50", "--max-depth", "16", "--folds", "3"];
    ok(&base).unwrap();
    let model = read_json(&dir.path().join("model.json"));
    assert_eq!(model["params"]["n_trees"], 50);
    assert_eq!(model["params"]["max_depth"], 16);
    assert_eq!(model["trees"].as_array().unwrap().len(), 50);
    assert!(model["metadata"]["config_hash"].is_string());
    let first = std::fs::read(dir.path().join("model.json")).unwrap();
    ok(&base).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("model.json")).unwrap());
    let report = read_json(&dir.path().join("train_report.json"));
    assert_eq!(report["cv"]["folds"].as_array().unwrap().len(), 3);

    let model_path = s(&dir.path().join("model.json"));
    ok(&["--out-dir", &d, "predict", "--model", &model_path, "--features", &s(&c.test_features)]).unwrap();
    let preds = read_csv(&dir.path().join("predictions.csv"));
    assert_eq!(preds.len(), 40);
    assert!(preds.iter().all(|r| (0.0..=1.0).contains(&r["score"].parse::<f64>().unwrap())));

    let one = dir.path().join("one.csv");
    let text = std::fs::read_to_string(&c.test_features).unwrap();
    std::fs::write(&one, text.lines().take(2).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    ok(&["--out-dir", &d, "explain", "--model", &model_path, "--features", &s(&one), "--reference-features", &s(&c.train_features)]).unwrap();
    let expl = read_csv(&dir.path().join("explanations.csv"));
    assert_eq!(expl.len(), 1);
    let r = &expl[0];
    let phi_sum: f64 = r.iter().filter(|(k, _)| !["id", "prediction", "base_value"].contains(&k.as_str())).map(|(_, v)| v.parse::<f64>().unwrap()).sum();
    let base_value: f64 = r["base_value"].parse().unwrap();
    let prediction: f64 = r["prediction"].parse().unwrap();
    assert!((base_value + phi_sum - prediction).abs() < 1e-9);
    assert_eq!(read_csv(&dir.path().join("breakdown.csv")).len(), 10);

    let ev = dir.path().join("eval");
    ok(&[
        "--out-dir", &s(&ev), "evaluate", "--train-data", &s(&c.train), "--train-features", &s(&c.train_features), "--test-data",
        &s(&c.test), "--test-features", &s(&c.test_features), "--n-trees", "20", "--folds", "3", "--repeats", "10",
    ])
    .unwrap();
    let report = read_json(&ev.join("report.json"));
    assert_eq!(report["bootstrap"]["repeats"], 10);
    for m in ["roc_auc", "accuracy", "sensitivity", "specificity"] {
        let (lo, mean, hi) = (
            report["bootstrap"]["ci_low"][m].as_f64().unwrap(),
            report["bootstrap"]["mean"][m].as_f64().unwrap(),
            report["bootstrap"]["ci_high"][m].as_f64().unwrap(),
        );
        assert!(lo <= mean && mean <= hi, "{m}");
    }
    assert_eq!(report["calibration"].as_array().unwrap().len(), 10);
    assert!(report["groups"]["sex"].is_object());
    assert!(ev.join("calibration.csv").exists());

    let fixed = dir.path().join("fixed");
    let scores = s(&ev.join("predictions.csv"));
    ok(&["--out-dir", &s(&fixed), "stratify", "--scores", &scores, "--green", "0.45", "--amber", "0.65"]).unwrap();
    assert!(fixed.join("bands.csv").exists());
    assert!(!fixed.join("thresholds.json").exists());
    assert!(!fixed.join("threshold_trace.csv").exists());
    let bands = read_csv(&fixed.join("bands.csv"));
    for b in &bands {
        let score: f64 = b["score"].parse().unwrap();
        let expect = if score <= 0.45 { "Green" } else if score <= 0.65 { "Amber" } else { "Red" };
        assert_eq!(b["band"], expect);
    }

    let searched = dir.path().join("search");
    ok(&["--out-dir", &s(&searched), "stratify", "--scores", &scores, "--data", &s(&c.test), "--search", "--folds", "4"]).unwrap();
    let t = read_json(&searched.join("thresholds.json"));
    assert_eq!(t["trace_path"], "threshold_trace.csv");
    assert_eq!(read_csv(&searched.join("threshold_trace.csv")).len(), 36);
    assert_eq!(read_csv(&searched.join("bands_by_mmse.csv")).len(), 31);
    let out = run(&["--out-dir", &s(&searched), "stratify", "--scores", &scores, "--search"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_mismatch_between_model_and_features() {
    let dir = tempfile::tempdir().unwrap();
    let c = synth_corpus(dir.path(), 30, 10).unwrap();
    let d = s(dir.path());
    ok(&["--out-dir", &d, "train", "--data", &s(&c.train), "--features", &s(&c.train_features), "--n-trees", "5", "--folds", "0"]).unwrap();
    let schema = write(dir.path(), "small.schema", "cttr\tdiversity\nword_count\tdescriptor\npronoun\tcategory\n");
    let small = dir.path().join("small");
    ok(&["--out-dir", &s(&small), "extract", "--data", &s(&c.test), "--schema", &s(&schema)]).unwrap();
    let out = run(&["--out-dir", &d, "predict", "--model", &s(&dir.path().join("model.json")), "--features", &s(&small.join("features.csv"))]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("feature schema mismatch"));
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let c = synth_corpus(dir.path(), 30, 10).unwrap();
    let conf = write(
        dir.path(),
        "run.conf",
        &format!(
            "seed = 5\n[paths]\ndata = {}\nfeatures = {}\n[train]\nn-trees = 7\nfolds = 0\n",
            c.train.display(),
            c.train_features.display()
        ),
    );
    let d = s(dir.path());
    ok(&["--config", &s(&conf), "--out-dir", &d, "train"]).unwrap();
    let m = read_json(&dir.path().join("model.json"));
    assert_eq!(m["params"]["n_trees"], 7);
    assert_eq!(m["seed"], 5);
    ok(&["--config", &s(&conf), "--out-dir", &d, "--seed", "6", "train", "--n-trees", "3"]).unwrap();
    let m = read_json(&dir.path().join("model.json"));
    assert_eq!(m["params"]["n_trees"], 3);
    assert_eq!(m["seed"], 6);
    let bad = write(dir.path(), "bad.conf", "[train]\nn-trees = lots\n");
    assert_eq!(run(&["--config", &s(&bad), "--out-dir", &d, "train"]).status.code(), Some(2));
}

#[test]
fn tune_reports_trials() {
    let dir = tempfile::tempdir().unwrap();
    let c = synth_corpus(dir.path(), 40, 10).unwrap();
    let d = s(dir.path());
    ok(&["--out-dir", &d, "tune", "--data", &s(&c.train), "--features", &s(&c.train_features), "--search-budget", "3", "--folds", "3"]).unwrap();
    let r = read_json(&dir.path().join("tune_report.json"));
    assert_eq!(r["search"]["trials"].as_array().unwrap().len(), 3);
    assert_eq!(r["search"]["metric"], "roc_auc");
    assert_eq!(run(&["--out-dir", &d, "tune", "--data", &s(&c.train), "--features", &s(&c.train_features), "--search-budget", "0"]).status.code(), Some(2));
}
