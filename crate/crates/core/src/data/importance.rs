use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Labeled;
use crate::model::{sigmoid, LogisticModel};
use crate::{Error, Result};

pub const PERMUTATION_REPEATS: usize = 10;

/// Mean drop in accuracy when one feature's column is shuffled, per feature
/// in schema order.
pub fn permutation_importance(
    instances: &[Labeled],
    model: &LogisticModel,
    seed: u64,
) -> Result<Vec<(String, f64)>> {
    if instances.is_empty() {
        return Err(Error::Data("permutation importance needs data".into()));
    }
    let schema = &model.schema;
    for r in instances {
        schema.check_instance(&r.instance)?;
    }
    // contributions[row][feature]
    let contributions: Vec<Vec<f64>> = instances
        .iter()
        .map(|r| {
            schema
                .ordered(&r.instance)
                .into_iter()
                .enumerate()
                .map(|(j, v)| model.contribution(j, v))
                .collect()
        })
        .collect();
    let accuracy = |swap: Option<(usize, &[usize])>| {
        let correct = contributions
            .iter()
            .enumerate()
            .filter(|(i, row)| {
                let logit = model.logit_from_contributions(row.iter().enumerate().map(|(j, &c)| {
                    match swap {
                        Some((f, perm)) if f == j => contributions[perm[*i]][j],
                        _ => c,
                    }
                }));
                (sigmoid(logit) >= model.decision_boundary) == instances[*i].positive
            })
            .count();
        correct as f64 / instances.len() as f64
    };

    let baseline = accuracy(None);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..instances.len()).collect();
    let mut out = Vec::with_capacity(schema.features.len());
    for (j, f) in schema.features.iter().enumerate() {
        let mut drop = 0.0;
        for _ in 0..PERMUTATION_REPEATS {
            perm.shuffle(&mut rng);
            drop += baseline - accuracy(Some((j, &perm)));
        }
        out.push((f.name.clone(), drop / PERMUTATION_REPEATS as f64));
    }
    Ok(out)
}

/// Top-`k` features by permutation importance; ties keep schema order.
pub fn rank_features(
    instances: &[Labeled],
    model: &LogisticModel,
    k: usize,
    seed: u64,
) -> Result<Vec<String>> {
    if k > model.schema.features.len() {
        return Err(Error::query(
            "k",
            format!("k = {k} exceeds feature count {}", model.schema.features.len()),
        ));
    }
    let mut scores = permutation_importance(instances, model, seed)?;
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scores.into_iter().take(k).map(|(name, _)| name).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetSchema, FeatureSchema, Instance};
    use crate::model::{train, TrainSettings};
    use rand::Rng;

    fn schema() -> DatasetSchema {
        DatasetSchema::new(
            vec![
                FeatureSchema::continuous("noise", -1.0, 1.0, 0.01),
                FeatureSchema::continuous("a", -1.0, 1.0, 0.01),
                FeatureSchema::categorical("c", &["u", "v"]),
            ],
            "y",
            "1",
            "0",
        )
        .unwrap()
    }

    fn data(n: usize) -> Vec<Labeled> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let noise: f64 = rng.random_range(-1.0..1.0);
                let c = if rng.random_bool(0.5) { "u" } else { "v" };
                Labeled {
                    instance: Instance::new().with("a", a).with("noise", noise).with("c", c),
                    positive: a > 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn label_driver_ranks_first() {
        let rows = data(300);
        let (model, _) = train(&rows, &schema(), &TrainSettings::default()).unwrap();
        let ranked = rank_features(&rows, &model, 3, 42).unwrap();
        assert_eq!(ranked[0], "a");

        // Oracle: recompute the drop for `a` directly from shuffled instances.
        let scores = permutation_importance(&rows, &model, 42).unwrap();
        let a_score = scores.iter().find(|(n, _)| n == "a").unwrap().1;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        let acc = |rows: &[Labeled]| {
            rows.iter()
                .filter(|r| (model.predict_proba(&r.instance).unwrap() >= 0.5) == r.positive)
                .count() as f64
                / rows.len() as f64
        };
        let base = acc(&rows);
        // `noise` is shuffled first (schema order), then `a`.
        for _ in 0..PERMUTATION_REPEATS {
            perm.shuffle(&mut rng);
        }
        let mut drop = 0.0;
        for _ in 0..PERMUTATION_REPEATS {
            perm.shuffle(&mut rng);
            let shuffled: Vec<Labeled> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut inst = r.instance.clone();
                    inst.set("a", rows[perm[i]].instance.get("a").unwrap().clone());
                    Labeled { instance: inst, positive: r.positive }
                })
                .collect();
            drop += base - acc(&shuffled);
        }
        assert!((a_score - drop / PERMUTATION_REPEATS as f64).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_feature_ranks_last() {
        // Labels depend on both `a` and `c`; the model reproduces that rule.
        let rows: Vec<Labeled> = data(200)
            .into_iter()
            .map(|mut r| {
                let a = r.instance.get("a").unwrap().as_number().unwrap();
                let shift = if r.instance.get("c").unwrap().as_label() == Some("u") { 0.5 } else { -0.5 };
                r.positive = a + shift > 0.0;
                r
            })
            .collect();
        let model = LogisticModel::zeros(&schema())
            .with_coefficient("a", 5.0)
            .with_level_weight("c", "u", 2.5)
            .with_level_weight("c", "v", -2.5);
        let ranked = rank_features(&rows, &model, 3, 1).unwrap();
        assert_eq!(ranked.last().unwrap(), "noise");
        let scores = permutation_importance(&rows, &model, 1).unwrap();
        assert_eq!(scores[0], ("noise".to_string(), 0.0));
    }

    #[test]
    fn full_ranking_is_a_permutation_and_deterministic() {
        let rows = data(150);
        let (model, _) = train(&rows, &schema(), &TrainSettings::default()).unwrap();
        let mut ranked = rank_features(&rows, &model, 3, 9).unwrap();
        assert_eq!(ranked, rank_features(&rows, &model, 3, 9).unwrap());
        ranked.sort();
        assert_eq!(ranked, vec!["a", "c", "noise"]);
        assert!(rank_features(&rows, &model, 4, 9).is_err());
    }
}
