use std::path::PathBuf;

use confex::cfsearch::{oracle_solve, solve, ConfidenceQuery, Direction};
use confex::data::{load_dataset, rank_features, DatasetSchema, WeightBasis};
use confex::explain::explain;
use confex::model::{train, LogisticModel, TrainSettings};

fn repo_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn trained() -> (DatasetSchema, Vec<confex::data::Labeled>, LogisticModel) {
    let schema = DatasetSchema::load(repo_file("adult_schema.json")).unwrap();
    let data = load_dataset(repo_file("adult_subset.csv"), &schema).unwrap();
    let (model, report) = train(&data, &schema, &TrainSettings::default()).unwrap();
    assert!(report.training_accuracy >= 0.78, "{}", report.training_accuracy);
    (schema, data, model)
}

#[test]
fn adult_subset_trains_and_explains() {
    let (schema, data, model) = trained();
    assert_eq!(data.len(), 2000);
    assert_eq!(schema.features.len(), 7);

    // Most rows work 40 hours, so the MAD is zero and the fallback kicks in.
    let hours = model.mad_weights.weights["Working hours per week"];
    assert_eq!(hours.basis, WeightBasis::ScaledStd);

    let x = data[3].instance.clone();
    let u = model.confidence(&x, Default::default()).unwrap();
    let q = ConfidenceQuery::new(x, u * 0.5, Direction::Decrease);
    let bundle = explain(&model, &q, 2).unwrap().unwrap();
    assert_eq!(bundle.format_version, 1);
    assert!(bundle.sentence.starts_with("One way you could have got"));
}

#[test]
fn adult_solve_agrees_with_oracle() {
    let (_, data, model) = trained();
    for (i, row) in data.iter().step_by(211).enumerate() {
        let x = row.instance.clone();
        let u = model.confidence(&x, Default::default()).unwrap();
        let (t, dir) = if i % 2 == 0 {
            (u + 0.5 * (1.0 - u), Direction::Increase)
        } else {
            (u * 0.5, Direction::Decrease)
        };
        let q = ConfidenceQuery::new(x, t, dir);
        let a = solve(&model, &q).unwrap();
        let b = oracle_solve(&model, &q).unwrap();
        assert!((a.objective() - b.objective()).abs() <= 1e-9 || a.objective() == b.objective());
        assert_eq!(a.result().map(|r| &r.x_prime), b.result().map(|r| &r.x_prime));
    }
}

#[test]
fn importance_ranking_is_complete() {
    let (_, data, model) = trained();
    let ranked = rank_features(&data, &model, 7, 1).unwrap();
    assert_eq!(ranked.len(), 7);
}
