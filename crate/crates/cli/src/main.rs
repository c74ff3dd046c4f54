use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use confex::cfsearch::{solve, ConfidenceQuery, Direction, InfeasibleReport, Outcome};
use confex::data::{load_dataset, DatasetSchema, Instance};
use confex::explain::{explain, render_profile_svg, render_sentence};
use confex::ice::ice_profile;
use confex::model::{train, ConfidenceMeasure, LogisticModel, TrainSettings};
use confex::study::{self, Condition, StudyConfig, StudyQuestion};
use confex_service::{ServiceConfig, DEFAULT_PORT};
use serde::Serialize;

const EXIT_INVALID: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "confex", version, about = "Confidence counterfactuals for logistic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a logistic model to a CSV dataset
    Train(TrainArgs),
    /// Probability, label and confidence scores of one instance
    Predict(PredictArgs),
    /// Nearest change that moves the confidence past a threshold
    Cf(CfArgs),
    /// Confidence profile of one feature
    Ice(IceArgs),
    /// Sentence, table and charts for a confidence query
    Explain(ExplainArgs),
    /// Forward-prediction study questions and scoring
    #[command(subcommand)]
    Study(StudyCommand),
    /// Run the HTTP API
    Serve(ServeArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long, default_value_t = TrainSettings::default().lambda)]
    lambda: f64,
    #[arg(long, default_value_t = TrainSettings::default().max_iterations)]
    max_iterations: usize,
}

#[derive(Args)]
struct ModelInstance {
    #[arg(long)]
    model: PathBuf,
    /// Instance as inline JSON or a path to a JSON file
    #[arg(long)]
    instance_json: String,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    input: ModelInstance,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    input: ModelInstance,
    /// Target confidence in [0, 1]; defaults to the current confidence
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    direction: Direction,
    /// Comma-separated features allowed to change
    #[arg(long, value_delimiter = ',')]
    mutable: Option<Vec<String>>,
    /// Maximum number of changed features
    #[arg(long, default_value_t = confex::cfsearch::DEFAULT_MAX_CHANGED)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Measure::Margin)]
    measure: Measure,
    #[arg(long, default_value_t = confex::cfsearch::DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Table,
    Svg,
}

#[derive(Args)]
struct CfArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// `text` prints the sentence before the JSON result
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, default_value_t = 2)]
    alternatives: usize,
}

#[derive(Args)]
struct IceArgs {
    #[command(flatten)]
    input: ModelInstance,
    #[arg(long)]
    feature: String,
    #[arg(long, value_enum, default_value_t = Measure::Margin)]
    measure: Measure,
    /// Also write the chart to this file
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Generate questions as JSON
    Gen(StudyGenArgs),
    /// Score answer sheets; prints participant_id,score,payout
    Score(StudyScoreArgs),
}

#[derive(Args)]
struct StudyGenArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = study::DEFAULT_QUESTIONS)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "control")]
    condition: Condition,
    /// CSV rows to draw base instances from; the schema grid otherwise
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = study::DEFAULT_MIN_GAP)]
    min_gap: f64,
    #[arg(long, value_enum, default_value_t = Measure::Margin)]
    measure: Measure,
}

#[derive(Args)]
struct StudyScoreArgs {
    #[arg(long)]
    questions: PathBuf,
    /// One CSV per participant, named after the participant
    #[arg(long, required = true, num_args = 1..)]
    answers: Vec<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, env = "MODEL_PATH")]
    model: PathBuf,
    #[arg(long, env = "SCHEMA_PATH")]
    schema: Option<PathBuf>,
    #[arg(long, env = "DATA_PATH")]
    data: Option<PathBuf>,
    /// Comma-separated allowed origins; localhost when unset
    #[arg(long, env = "CORS_ORIGIN", value_delimiter = ',')]
    cors_origin: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    LeastConfidence,
    Margin,
    Ratio,
    Entropy,
}

impl From<Measure> for ConfidenceMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::LeastConfidence => ConfidenceMeasure::LeastConfidence,
            Measure::Margin => ConfidenceMeasure::Margin,
            Measure::Ratio => ConfidenceMeasure::Ratio,
            Measure::Entropy => ConfidenceMeasure::Entropy,
        }
    }
}

fn read_instance(arg: &str) -> anyhow::Result<Instance> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    };
    Ok(Instance::from_json(&text)?)
}

fn load_model(path: &Path) -> anyhow::Result<LogisticModel> {
    LogisticModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

impl QueryArgs {
    fn load(&self) -> anyhow::Result<(LogisticModel, ConfidenceQuery)> {
        let model = load_model(&self.input.model)?;
        let x = read_instance(&self.input.instance_json)?;
        let mut q = ConfidenceQuery::new(x, 0.0, self.direction)
            .with_k(self.k)
            .with_measure(self.measure.into())
            .with_epsilon(self.epsilon);
        q.threshold = self.threshold;
        q.mutable_features = self.mutable.clone();
        Ok((model, q))
    }
}

enum Status {
    Done,
    Infeasible,
}

fn infeasible(report: &InfeasibleReport) -> anyhow::Result<Status> {
    print_json(report)?;
    eprintln!("infeasible: {}", report.message);
    Ok(Status::Infeasible)
}

#[derive(Serialize)]
struct Prediction {
    probability: f64,
    class: String,
    confidences: std::collections::BTreeMap<&'static str, f64>,
}

fn run(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Train(a) => {
            let schema = DatasetSchema::load(&a.schema)
                .with_context(|| format!("loading schema {}", a.schema.display()))?;
            let data = load_dataset(&a.data, &schema)
                .with_context(|| format!("loading data {}", a.data.display()))?;
            let settings = TrainSettings {
                lambda: a.lambda,
                max_iterations: a.max_iterations,
                ..TrainSettings::default()
            };
            let (model, report) = train(&data, &schema, &settings)?;
            model.save(&a.out_model)?;
            print_json(&serde_json::json!({
                "rows": data.len(),
                "iterations": report.iterations,
                "converged": report.converged,
                "final_loss": report.final_loss,
                "gradient_norm": report.gradient_norm,
                "training_accuracy": report.training_accuracy,
                "warnings": report.warnings,
            }))?;
        }
        Command::Predict(a) => {
            let model = load_model(&a.input.model)?;
            let x = read_instance(&a.input.instance_json)?;
            let p = model.predict_proba(&x)?;
            print_json(&Prediction {
                probability: p,
                class: model.schema.class_label(model.class_of(p)).to_string(),
                confidences: ConfidenceMeasure::ALL
                    .iter()
                    .map(|m| (m.as_str(), m.score(p)))
                    .collect(),
            })?;
        }
        Command::Cf(a) => {
            let (model, q) = a.query.load()?;
            match solve(&model, &q)? {
                Outcome::Found(r) => {
                    if !matches!(a.format, Format::Json) {
                        println!("{}", render_sentence(&model, &r)?);
                    }
                    print_json(&r)?;
                }
                Outcome::Infeasible(report) => return infeasible(&report),
            }
        }
        Command::Ice(a) => {
            let model = load_model(&a.input.model)?;
            let x = read_instance(&a.input.instance_json)?;
            let profile = ice_profile(&model, &x, &a.feature, a.measure.into())?;
            if let Some(path) = &a.svg {
                let svg = render_profile_svg(&profile, &profile.predicted_class)?;
                fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
            }
            print_json(&profile)?;
        }
        Command::Explain(a) => {
            let (model, q) = a.query.load()?;
            let bundle = match explain(&model, &q, a.alternatives)? {
                Ok(b) => b,
                Err(report) => return infeasible(&report),
            };
            match a.format {
                Format::Json => print_json(&bundle)?,
                Format::Svg => print!("{}", bundle.svgs.concat()),
                Format::Text | Format::Table => {
                    println!("{}\n", bundle.sentence);
                    print!("{}", bundle.table.to_text());
                    for w in &bundle.table.warnings {
                        eprintln!("warning: {w}");
                    }
                }
            }
        }
        Command::Study(StudyCommand::Gen(a)) => {
            let model = load_model(&a.model)?;
            let pool: Vec<Instance> = match &a.data {
                Some(path) => load_dataset(path, &model.schema)?
                    .into_iter()
                    .map(|r| r.instance)
                    .collect(),
                None => Vec::new(),
            };
            let config = StudyConfig {
                n: a.n,
                seed: a.seed,
                condition: a.condition,
                min_gap: a.min_gap,
                measure: a.measure.into(),
                ..StudyConfig::default()
            };
            print_json(&study::generate_questions(&model, &pool, &config)?)?;
        }
        Command::Study(StudyCommand::Score(a)) => {
            let text = fs::read_to_string(&a.questions)
                .with_context(|| format!("reading {}", a.questions.display()))?;
            let questions: Vec<StudyQuestion> = serde_json::from_str(&text)?;
            let mut scores = Vec::new();
            for path in &a.answers {
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
                let sheet = study::read_answers(file, &id)?;
                scores.push((id, study::score(&sheet, &questions)?));
            }
            study::write_scores(std::io::stdout().lock(), &scores)?;
        }
        Command::Serve(a) => {
            let config = ServiceConfig {
                port: a.port,
                model_path: a.model,
                schema_path: a.schema,
                data_path: a.data,
                cors_origins: a.cors_origin,
            };
            tokio::runtime::Runtime::new()?.block_on(confex_service::serve(config))?;
        }
    }
    Ok(Status::Done)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Infeasible) => ExitCode::from(EXIT_INFEASIBLE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
