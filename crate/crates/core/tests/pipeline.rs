//! Library-level runs through corpus, features, models and explanations.

use lexiscreen::corpus::{generate_synthetic, SyntheticSpec};
use lexiscreen::eval::{cross_validate, roc_auc};
use lexiscreen::explain::{summarize_importance, tree_shap};
use lexiscreen::models::{fit_forest, load_model, save_model, ModelError};
use lexiscreen::{Dataset, Extractor, FeatureTable, FeatureVector, ForestParams, Samples, Task};

fn corpus(n: i64, prefix: &str, seed: u64) -> Dataset {
    let mut spec = SyntheticSpec::default().with_sizes(n, n);
    spec.id_prefix = prefix.to_string();
    generate_synthetic(&spec, seed).unwrap()
}

fn small_params() -> ForestParams {
    ForestParams {
        n_trees: 15,
        ..ForestParams::defaults(Task::Classify, 100)
    }
}

#[test]
fn classify_then_round_trip_model_and_table() {
    let ex = Extractor::default();
    let train = corpus(60, "tr", 1);
    let test = corpus(30, "te", 2);
    let train_table = ex.extract_dataset(&train).unwrap();
    let test_table = ex.extract_dataset(&test).unwrap();
    assert_eq!(train_table.names().len(), 100);

    let mut csv = Vec::new();
    train_table.write_csv(&mut csv).unwrap();
    let reread = FeatureTable::read_csv(csv.as_slice()).unwrap();
    assert_eq!(reread, train_table);

    let samples = Samples::from_table(&reread, &train, Task::Classify).unwrap();
    let model = fit_forest(&samples, Task::Classify, &small_params(), 5).unwrap();
    let scores = model.predict_table(&test_table).unwrap();
    let test_samples = Samples::from_table(&test_table, &test, Task::Classify).unwrap();
    assert!(roc_auc(&scores, &test_samples.labels()).unwrap() > 0.85);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.predict_table(&test_table).unwrap(), scores);
    assert_eq!(loaded.to_json(), model.to_json());
}

#[test]
fn fingerprint_mismatch_is_rejected() {
    let train = corpus(20, "tr", 3);
    let table = Extractor::default().extract_dataset(&train).unwrap();
    let samples = Samples::from_table(&table, &train, Task::Classify).unwrap();
    let model = fit_forest(&samples, Task::Classify, &small_params(), 1).unwrap();
    let mut names = table.names().to_vec();
    names.swap(0, 1);
    let shuffled = FeatureTable::new(names, table.ids().to_vec(), table.rows().to_vec());
    assert!(matches!(model.predict_table(&shuffled), Err(ModelError::FingerprintMismatch { .. })));
    let wrong = FeatureVector {
        fingerprint: "0000000000000000".into(),
        values: table.rows()[0].clone(),
    };
    assert!(model.predict(&wrong).is_err());
}

#[test]
fn shap_local_accuracy_on_extracted_features() {
    let ex = Extractor::default();
    let train = corpus(40, "tr", 4);
    let table = ex.extract_dataset(&train).unwrap();
    let samples = Samples::from_table(&table, &train, Task::Classify).unwrap();
    let model = fit_forest(&samples, Task::Classify, &small_params(), 2).unwrap();
    for row in table.rows().iter().take(10) {
        let x = FeatureVector {
            fingerprint: table.fingerprint().to_string(),
            values: row.clone(),
        };
        let a = tree_shap(&model, &x).unwrap();
        let total = a.base_value + a.phi.iter().sum::<f64>();
        assert!((total - model.predict_proba(&x).unwrap()).abs() < 1e-9);
    }
    let summary = summarize_importance(&model, &table).unwrap();
    assert_eq!(summary.ranking.len(), 100);
    assert!(summary.mean_abs.iter().all(|v| *v >= 0.0));
}

#[test]
fn cross_validation_is_deterministic_and_covers_every_row() {
    let train = corpus(30, "cv", 6);
    let table = Extractor::default().extract_dataset(&train).unwrap();
    let samples = Samples::from_table(&table, &train, Task::Classify).unwrap();
    let a = cross_validate(&samples, Task::Classify, &small_params(), 5, 9).unwrap();
    let b = cross_validate(&samples, Task::Classify, &small_params(), 5, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.out_of_fold.len(), samples.len());
    assert_eq!(a.folds.iter().map(|f| f.n_test).sum::<usize>(), samples.len());
}

#[test]
fn regression_on_mmse() {
    let train = corpus(50, "rg", 8);
    let table = Extractor::default().extract_dataset(&train).unwrap();
    let samples = Samples::from_table(&table, &train, Task::Regress).unwrap();
    let params = ForestParams {
        n_trees: 20,
        ..ForestParams::defaults(Task::Regress, 100)
    };
    let model = fit_forest(&samples, Task::Regress, &params, 3).unwrap();
    let preds = model.predict_samples(&samples).unwrap();
    assert!(preds.iter().all(|p| (0.0..=30.0).contains(p)));
}
