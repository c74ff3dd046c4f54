//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use confex::cfsearch::{
    oracle_solve, solve, ChangedFeature, ConfidenceQuery, CounterfactualResult, Direction, Outcome,
};
use confex::data::{load_dataset, DatasetSchema, FeatureKind, FeatureSchema, Instance, MadWeights, Value};
use confex::explain::{explain, format_percent, render_sentence, render_table};
use confex::ice::ice_profile;
use confex::model::{train, Class, ConfidenceMeasure, LogisticModel, TrainSettings, TrainingProblem};
use confex::study::{self, Answer, AnswerSheet, Choice, Condition, StudyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

const SEED: u64 = 20_231_016;

/// Oracle agreement on objectives.
const OBJECTIVE_TOL: f64 = 1e-9;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const GRADIENT_TOL: f64 = 1e-5;
const END_TO_END_BUDGET: Duration = Duration::from_secs(10);
const MIN_ACCURACY: f64 = 0.78;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_model(rng: &mut ChaCha8Rng, max_grid: usize) -> LogisticModel {
    let nf = rng.random_range(1..=4);
    let mut features = Vec::new();
    for j in 0..nf {
        let name = format!("f{j}");
        let mut f = if rng.random_bool(0.4) {
            let n = rng.random_range(2..=max_grid.min(6));
            let levels: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
            let refs: Vec<&str> = levels.iter().map(String::as_str).collect();
            FeatureSchema::categorical(&name, &refs)
        } else {
            let len = rng.random_range(2..=max_grid);
            let step = [0.5, 1.0, 2.0, 0.25][rng.random_range(0..4)];
            let c_min = rng.random_range(-5..=5) as f64;
            FeatureSchema::continuous(&name, c_min, c_min + step * (len - 1) as f64, step)
        };
        if rng.random_bool(0.15) {
            f = f.immutable();
        }
        features.push(f);
    }
    let schema = DatasetSchema::new(features, "y", "pos", "neg").unwrap();
    let mut mad = MadWeights::unit(&schema);
    let mut model = LogisticModel::zeros(&schema).with_bias(rng.random_range(-1.5..1.5));
    for f in &schema.features {
        match &f.kind {
            FeatureKind::Categorical { levels } => {
                for l in levels {
                    model = model.with_level_weight(&f.name, l, rng.random_range(-2.0..2.0));
                }
            }
            FeatureKind::Continuous { c_min, c_max, .. } => {
                model = model
                    .with_coefficient(&f.name, rng.random_range(-2.0..2.0))
                    .with_standardization(&f.name, (c_min + c_max) / 2.0, rng.random_range(0.5..3.0));
                mad = mad.with_weight(&f.name, rng.random_range(0.2..3.0));
            }
        }
    }
    let d = if rng.random_bool(0.5) { 0.5 } else { rng.random_range(0.3..0.7) };
    model.with_mad_weights(mad).with_decision_boundary(d)
}

fn random_instance(rng: &mut ChaCha8Rng, schema: &DatasetSchema) -> Instance {
    schema
        .features
        .iter()
        .map(|f| (f.name.clone(), f.grid_value(rng.random_range(0..f.grid_len()))))
        .collect()
}

fn random_query(rng: &mut ChaCha8Rng, model: &LogisticModel) -> ConfidenceQuery {
    let x = random_instance(rng, &model.schema);
    let measure = ConfidenceMeasure::ALL[rng.random_range(0..4)];
    let u = model.confidence(&x, measure).unwrap();
    let f = rng.random_range(0.05..0.95);
    let (t, dir) = if rng.random_bool(0.5) {
        (u + (1.0 - u) * f, Direction::Increase)
    } else {
        (u * f, Direction::Decrease)
    };
    let mut q = ConfidenceQuery::new(x, t, dir)
        .with_k(rng.random_range(0..=2))
        .with_measure(measure);
    if rng.random_bool(0.3) {
        let names: Vec<String> = model
            .schema
            .names()
            .filter(|_| rng.random_bool(0.6))
            .map(str::to_string)
            .collect();
        q.mutable_features = Some(names);
    }
    q
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut compared, mut feasible) = (0, 0);
    for m in 0..100 {
        let model = random_model(&mut rng, 12);
        for _ in 0..5 {
            let q = random_query(&mut rng, &model);
            let (a, b) = match (solve(&model, &q), oracle_solve(&model, &q)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(_), Err(_)) => continue,
                (a, b) => return Err(format!("model {m}: solve {:?} vs oracle {:?}", a.is_ok(), b.is_ok())),
            };
            compared += 1;
            match (&a, &b) {
                (Outcome::Found(r), Outcome::Found(o)) => {
                    feasible += 1;
                    ensure((r.objective - o.objective).abs() <= OBJECTIVE_TOL, || {
                        format!("model {m}: objective {} vs {}", r.objective, o.objective)
                    })?;
                    ensure(r.x_prime == o.x_prime, || format!("model {m}: tie-break picked different points"))?;
                }
                (Outcome::Infeasible(_), Outcome::Infeasible(_)) => {}
                _ => return Err(format!("model {m}: feasibility differs")),
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < ORACLE_BUDGET, || format!("took {elapsed:?}"))?;
    ensure(feasible >= 100, || format!("only {feasible} feasible comparisons"))?;
    Ok(format!("{compared} queries on 100 models, {feasible} feasible, {elapsed:.2?}"))
}

fn constraint_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut checked = 0;
    let mut tries = 0;
    while checked < 1000 {
        tries += 1;
        if tries > 20_000 {
            return Err(format!("only {checked} feasible queries in {tries} tries"));
        }
        let model = random_model(&mut rng, 12);
        let q = random_query(&mut rng, &model);
        let Ok(Outcome::Found(r)) = solve(&model, &q) else {
            continue;
        };
        checked += 1;
        let d = model.decision_boundary;
        let p = model.predict_proba(&q.x).unwrap();
        let p2 = model.predict_proba(&r.x_prime).unwrap();
        ensure((p >= d) == (p2 >= d), || format!("class changed: {p} -> {p2}, D = {d}"))?;
        let u2 = q.measure.score(p2);
        let t = q.threshold.unwrap();
        let ok = match q.direction {
            Direction::Increase => u2 >= t + q.epsilon,
            Direction::Decrease => u2 <= t - q.epsilon,
        };
        ensure(ok, || format!("U = {u2} misses {} {t}", q.direction))?;
        ensure(r.changed.len() <= q.max_changed, || format!("{} changes > k", r.changed.len()))?;
        for f in &model.schema.features {
            let moved = q.x.get(&f.name) != r.x_prime.get(&f.name);
            let allowed = f.mutable
                && q.mutable_features.as_ref().is_none_or(|m| m.contains(&f.name));
            ensure(!moved || allowed, || format!("`{}` changed but is not mutable", f.name))?;
        }
    }
    Ok(format!("{checked} feasible queries ({tries} drawn)"))
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d = rng.random_range(2..8);
        let n = rng.random_range(20..200);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let targets = (0..n).map(|_| if rng.random_bool(0.4) { 1.0 } else { 0.0 }).collect();
        let prob = TrainingProblem {
            rows,
            targets,
            lambda: rng.random_range(1e-4..0.5),
        };
        for _ in 0..10 {
            let params: Vec<f64> = (0..prob.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = prob.gradient(&params);
            let h = 1e-5;
            let mut diff = 0.0;
            let mut scale = 0.0;
            for j in 0..params.len() {
                let mut up = params.clone();
                let mut down = params.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (prob.loss(&up) - prob.loss(&down)) / (2.0 * h);
                diff += (g[j] - fd) * (g[j] - fd);
                scale += g[j].abs().max(fd.abs()).powi(2);
            }
            worst = worst.max(diff.sqrt() / scale.sqrt().max(1e-12));
        }
    }
    ensure(worst < GRADIENT_TOL, || format!("relative error {worst:e}"))?;
    Ok(format!("50 points, worst relative error {worst:.1e}"))
}

fn margin_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut model = random_model(&mut rng, 12);
    for i in 0..1000 {
        if i % 50 == 0 {
            model = random_model(&mut rng, 12);
        }
        let x = random_instance(&mut rng, &model.schema);
        let p = model.predict_proba(&x).unwrap();
        let u = model.confidence(&x, ConfidenceMeasure::Margin).unwrap();
        ensure(u == (2.0 * p - 1.0).abs(), || format!("U = {u}, P = {p}"))?;
    }
    let shown = format_percent(ConfidenceMeasure::Margin.score(0.789));
    ensure(shown == "57.8%", || format!("P = 0.789 renders as {shown}"))?;
    Ok("1000 instances, P = 0.789 -> 57.8%".into())
}

fn occupation_model() -> LogisticModel {
    let schema = DatasetSchema::load(common::data_file("adult_schema.json")).unwrap();
    let negative_logit = |u: f64| {
        let p = (1.0 - u) / 2.0;
        (p / (1.0 - p)).ln()
    };
    LogisticModel::zeros(&schema)
        .with_level_weight("Occupation", "Manager", negative_logit(0.301))
        .with_level_weight("Occupation", "Skilled Specialty", negative_logit(0.421))
        .with_level_weight("Occupation", "Service", negative_logit(0.578))
}

fn occupation_original() -> Instance {
    serde_json::from_str(common::SERVICE_WORKER).unwrap()
}

fn occupation_alternative(level: &str, confidence: f64) -> CounterfactualResult {
    CounterfactualResult {
        feasible: true,
        x_prime: occupation_original().with("Occupation", level),
        confidence,
        probability: (1.0 - confidence) / 2.0,
        predicted_class: Class::Negative,
        predicted_label: "Lower than $50,000".into(),
        changed: vec![ChangedFeature {
            feature: "Occupation".into(),
            old: Value::from("Service"),
            new: Value::from(level),
        }],
        distance: 1.0,
        objective: 1.0 + (confidence - 0.45f64).abs(),
        threshold: 0.45,
        direction: Direction::Decrease,
        measure: ConfidenceMeasure::Margin,
    }
}

fn occupation_golden() -> Check {
    let model = occupation_model();
    let alts = [occupation_alternative("Manager", 0.301), occupation_alternative("Skilled Specialty", 0.421)];
    let table = render_table(&model, &occupation_original(), &alts).map_err(|e| e.to_string())?;
    let golden = include_str!("../../core/tests/fixtures/occupation_table.txt");
    ensure(table.to_text() == golden, || format!("table differs:\n{}", table.to_text()))?;
    let sentence = render_sentence(&model, &alts[0]).map_err(|e| e.to_string())?;
    let expected = "One way you could have got a confidence score of less than 45% (30.1%) instead is if Occupation had taken value Manager rather than Service.";
    ensure(sentence == expected, || format!("sentence: {sentence}"))?;
    Ok("table byte-equal to fixture, sentence verbatim".into())
}

fn is_valley(u: &[f64]) -> bool {
    let m = (0..u.len()).min_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap();
    u[..=m].windows(2).all(|w| w[1] <= w[0]) && u[m..].windows(2).all(|w| w[1] >= w[0])
}

fn ice_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut continuous, mut categorical) = (0, 0);
    for m in 0..100 {
        let model = random_model(&mut rng, 40);
        let x = random_instance(&mut rng, &model.schema);
        for f in &model.schema.features {
            let p = ice_profile(&model, &x, &f.name, ConfidenceMeasure::Margin).map_err(|e| e.to_string())?;
            match &f.kind {
                FeatureKind::Categorical { levels } => {
                    categorical += 1;
                    ensure(p.points.len() == levels.len(), || format!("model {m}: `{}` count", f.name))?;
                }
                FeatureKind::Continuous { c_min, c_max, step } => {
                    continuous += 1;
                    let expected = ((c_max - c_min) / step + 1e-9).floor() as usize + 1;
                    ensure(p.points.len() == expected, || {
                        format!("model {m}: `{}` has {} points, expected {expected}", f.name, p.points.len())
                    })?;
                    ensure(is_valley(&p.confidences()), || format!("model {m}: `{}` is not a valley", f.name))?;
                }
            }
        }
    }
    Ok(format!("{continuous} continuous and {categorical} categorical profiles"))
}

fn study_scoring() -> Check {
    let pay = |score: i64| study::payout_cents(score);
    ensure(pay(5) == 800 && pay(0) == 700 && pay(-10) == 700 && pay(10) == 900, || {
        format!("payouts {} {} {} {}", pay(5), pay(0), pay(-10), pay(10))
    })?;

    let model = LogisticModel::load(common::data_file("adult_model.json")).map_err(|e| e.to_string())?;
    let rows = load_dataset(common::data_file("adult_subset.csv"), &model.schema).map_err(|e| e.to_string())?;
    let pool: Vec<Instance> = rows.into_iter().map(|r| r.instance).collect();
    let mut total = 0;
    for (pool, condition) in [
        (&pool[..], Condition::Control),
        (&pool[..], Condition::ExampleBased),
        (&[][..], Condition::VisualisationBased),
    ] {
        let config = StudyConfig {
            n: 10,
            seed: SEED,
            condition,
            ..StudyConfig::default()
        };
        let qs = study::generate_questions(&model, pool, &config).map_err(|e| e.to_string())?;
        for q in &qs {
            total += 1;
            ensure(q.instances.len() == 3, || format!("question {} has {} instances", q.id, q.instances.len()))?;
            for x in &q.instances[1..] {
                for f in &model.schema.features {
                    let differs = x.get(&f.name) != q.instances[0].get(&f.name);
                    ensure(!differs || q.varied_features.contains(&f.name), || {
                        format!("question {}: undeclared change to `{}`", q.id, f.name)
                    })?;
                }
            }
            let u: Vec<f64> = q
                .instances
                .iter()
                .map(|x| model.confidence(x, config.measure).unwrap())
                .collect();
            let top = u[q.correct_index];
            let unique = u.iter().enumerate().all(|(i, &v)| i == q.correct_index || v < top);
            ensure(unique, || format!("question {}: argmax is not unique {u:?}", q.id))?;
        }
        // Seven right, one wrong, two "don't know" scores 5.
        let answers = qs
            .iter()
            .enumerate()
            .map(|(i, q)| Answer {
                question_id: q.id,
                choice: match i {
                    0..=6 => Choice::Index(q.correct_index),
                    7 => Choice::Index((q.correct_index + 1) % 3),
                    _ => Choice::DontKnow,
                },
                rationale: String::new(),
            })
            .collect();
        let sheet = AnswerSheet {
            participant_id: "p".into(),
            answers,
        };
        let r = study::score(&sheet, &qs).map_err(|e| e.to_string())?;
        ensure(r.score == 5 && r.payout_usd() == "8.00", || format!("score {} pays {}", r.score, r.payout_usd()))?;
    }
    Ok(format!("payouts exact, {total} generated questions valid"))
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let schema = DatasetSchema::load(common::data_file("adult_schema.json")).map_err(|e| e.to_string())?;
    let data = load_dataset(common::data_file("adult_subset.csv"), &schema).map_err(|e| e.to_string())?;
    ensure(data.len() == 2000 && schema.features.len() == 7, || "unexpected data shape".into())?;
    let (model, report) = train(&data, &schema, &TrainSettings::default()).map_err(|e| e.to_string())?;
    let acc = report.training_accuracy;
    ensure(acc >= MIN_ACCURACY, || format!("training accuracy {acc}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let row = rng.random_range(0..data.len());
    let x = data[row].instance.clone();
    let u = model.confidence(&x, ConfidenceMeasure::Margin).map_err(|e| e.to_string())?;
    let q = ConfidenceQuery::new(x, u * 0.5, Direction::Decrease);
    let bundle = explain(&model, &q, 2)
        .map_err(|e| e.to_string())?
        .map_err(|r| format!("row {row} infeasible: {}", r.message))?;
    let elapsed = start.elapsed();
    ensure(bundle.format_version == 1, || "format version".into())?;
    ensure(bundle.sentence.starts_with("One way you could have got"), || bundle.sentence.clone())?;
    ensure(bundle.table.rows.len() == 7, || "table rows".into())?;
    ensure(!bundle.profiles.is_empty() && bundle.profiles.len() == bundle.svgs.len(), || "profiles".into())?;
    ensure(elapsed < END_TO_END_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("accuracy {acc:.4}, row {row} explained, {elapsed:.2?}"))
}

#[derive(Deserialize)]
struct Exchange {
    method: String,
    uri: String,
    body: Option<String>,
    status: u16,
    response: String,
}

fn service_replay() -> Check {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/replay.jsonl");
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let log: Vec<Exchange> = text
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(log.len() == 50, || format!("log has {} requests", log.len()))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let app = common::app();
        for e in &log {
            let (status, body) = common::call(&app, &e.method, &e.uri, e.body.as_deref()).await;
            ensure(status.as_u16() == e.status && body == e.response, || {
                format!("{} {} differs", e.method, e.uri)
            })?;
        }
        Ok("50 recorded requests, byte-identical".to_string())
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("constraint suite", constraint_suite),
        ("gradient check", gradient_check),
        ("margin identity", margin_identity),
        ("comparison table golden", occupation_golden),
        ("ice structure", ice_structure),
        ("study scoring", study_scoring),
        ("end-to-end desk run", end_to_end),
        ("service determinism", service_replay),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
