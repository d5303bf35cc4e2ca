//! The `elicit` command line.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use elicit_core::config::{load_config, ConfigLayer, EngineConfig, FileFormat, ENV_CONFIG_PATH};
use elicit_core::distributions::{Distribution, Family};
use elicit_core::evaluation::{run_eval, EvalOptions, Method, SimulatedExpert};
use elicit_core::fitting::{fit_fixed_interval, fit_roulette, fit_variable_interval, IntervalJudgment};
use elicit_core::pooling::{linear_pool, log_pool, WeightedOpinions};
use elicit_core::predictive::find_model;
use elicit_core::records::{Answer, ElicitationDataset, ElicitedStatement, Judgment, Space};
use elicit_core::supra_bayes::{
    elicited_prior, posterior, AnalystPrior, ElicitationNoise, ElicitedPriorMode, GridSpec,
};

use crate::error::{ErrorClass, ServiceError, ServiceResult};
use crate::service::SessionService;
use crate::session::{canonical_json, PosteriorSummary, SessionConfig, SessionRecord, MIX_COMPONENTS};

pub const ENV_DATA_DIR: &str = "ELICIT_DATA_DIR";

#[derive(Parser, Debug)]
#[command(name = "elicit", version, about = "Prior elicitation engine")]
pub struct Cli {
    /// Session directory. `ELICIT_DATA_DIR` takes precedence when set.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Config file (TOML, or JSON by extension); `ELICIT_CONFIG` also works.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub mc_samples: Option<i64>,
    #[arg(long, global = true)]
    pub grid_points: Option<i64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// List the model registry.
    Models,
    #[command(subcommand)]
    Session(SessionCommand),
    /// Fit a parametric prior to elicited summaries (JSON file or `-`).
    Fit { input: PathBuf },
    /// Grid posterior over hyperparameters (JSON file or `-`).
    Posterior { input: PathBuf },
    /// Pool several experts' priors (JSON file or `-`).
    Pool { input: PathBuf },
    /// Evaluate a method against a simulated expert (JSON file or `-`).
    Eval { input: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum SessionCommand {
    /// Create a session from a config file (or `-`); prints its id.
    New {
        file: PathBuf,
        #[arg(long)]
        id: Option<String>,
    },
    Show { id: String },
    /// Issue (or repeat) the outstanding query.
    Next {
        id: String,
        #[arg(long, value_enum)]
        space: Option<SpaceArg>,
    },
    /// Answer the outstanding query, issuing one first if needed.
    Answer(AnswerArgs),
    Feedback { id: String },
    /// Replace earlier statements (a JSON list of statements, or `-`).
    Revise { id: String, statements: PathBuf },
    Accept {
        id: String,
        /// Also write the accepted prior to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild the session from its event log and compare with the snapshot.
    Replay { id: String },
}

#[derive(Args, Debug)]
pub struct AnswerArgs {
    pub id: String,
    /// Answer JSON, e.g. `{"QuantileValue": 0.3}`.
    #[arg(long, conflicts_with = "statement", required_unless_present = "statement")]
    pub answer: Option<String>,
    /// Full statement JSON, including `query_id`.
    #[arg(long)]
    pub statement: Option<String>,
    #[arg(long, default_value = "")]
    pub expert: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SpaceArg {
    Parameter,
    Observable,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Space {
        match s {
            SpaceArg::Parameter => Space::Parameter,
            SpaceArg::Observable => Space::Observable,
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
enum FitRequest {
    VariableInterval {
        tuples: Vec<(f64, f64)>,
        family: Family,
        #[serde(default)]
        bounds: Option<(f64, f64)>,
    },
    FixedInterval {
        bounds: (f64, f64),
        mode: f64,
        intervals: Vec<IntervalJudgment>,
        family: Family,
    },
    Roulette {
        edges: Vec<f64>,
        chips: Vec<u32>,
        #[serde(default)]
        family: Option<Family>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PosteriorRequest {
    model: String,
    judgments: Vec<Judgment>,
    noise: ElicitationNoise,
    #[serde(default)]
    analyst_prior: AnalystPrior,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    mc_samples: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    target: Option<String>,
}

#[derive(Serialize)]
struct PosteriorReply {
    summary: PosteriorSummary,
    prior: elicit_core::supra_bayes::ElicitedPrior,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum PoolRule {
    Linear,
    Log,
}

fn default_pool_grid() -> usize {
    2001
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolRequest {
    priors: Vec<Distribution>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    rule: PoolRule,
    #[serde(default = "default_pool_grid")]
    grid_size: usize,
}

fn default_repeats() -> usize {
    20
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalRequest {
    scenario: SimulatedExpert,
    method: Method,
    queries: usize,
    #[serde(default = "default_repeats")]
    repeats: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    options: EvalOptions,
}

fn read_input(path: &Path) -> ServiceResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> ServiceResult<T> {
    serde_json::from_str(text).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> ServiceResult<T> {
    parse(&read_input(path)?)
}

/// Engine config from the config file, environment and global flags.
pub fn engine_config(cli: &Cli, env: &BTreeMap<String, String>) -> ServiceResult<EngineConfig> {
    let path = cli.config.clone().or_else(|| env.get(ENV_CONFIG_PATH).map(PathBuf::from)).or_else(|| {
        ["elicit.toml", "elicit.json"].iter().map(PathBuf::from).find(|p| p.is_file())
    });
    let text = path.as_ref().map(std::fs::read_to_string).transpose()?;
    let file = text.as_deref().zip(path.as_deref().map(FileFormat::from_path));
    let flags = ConfigLayer {
        mc_samples: cli.mc_samples,
        grid_points: cli.grid_points,
        // the environment variable wins over the flag for the data directory
        data_dir: cli.data_dir.clone().filter(|_| !env.contains_key(ENV_DATA_DIR)),
        ..ConfigLayer::default()
    };
    Ok(load_config(file, env, &flags)?)
}

fn emit<T: Serialize>(v: &T) -> ServiceResult<()> {
    println!("{}", canonical_json(v, true));
    Ok(())
}

fn session_command(svc: &SessionService, cmd: SessionCommand) -> ServiceResult<()> {
    match cmd {
        SessionCommand::New { file, id } => {
            let mut cfg: SessionConfig = read_json(&file)?;
            if id.is_some() {
                cfg.id = id;
            }
            emit(&serde_json::json!({ "id": svc.create_session(cfg)? }))
        }
        SessionCommand::Show { id } => emit(&svc.get(&id)?),
        SessionCommand::Next { id, space } => emit(&svc.next_query(&id, space.map(Space::from))?),
        SessionCommand::Answer(a) => {
            let z = match (a.statement, a.answer) {
                (Some(s), _) => parse::<ElicitedStatement>(&s)?,
                (None, Some(ans)) => {
                    let answer: Answer = parse(&ans)?;
                    let issued = svc.next_query(&a.id, None)?;
                    ElicitedStatement { expert_id: a.expert, ..ElicitedStatement::new(issued.query.id, answer) }
                }
                (None, None) => return Err(ServiceError::BadRequest("need --answer or --statement".into())),
            };
            emit(&svc.record_answer(&a.id, z)?)
        }
        SessionCommand::Feedback { id } => emit(&svc.feedback(&id)?),
        SessionCommand::Revise { id, statements } => {
            let list: Vec<ElicitedStatement> = read_json(&statements)?;
            emit(&svc.revise(&id, list)?)
        }
        SessionCommand::Accept { id, out } => {
            let artifact = svc.accept(&id)?;
            if let Some(path) = out {
                std::fs::write(path, canonical_json(&artifact, true) + "\n")?;
            }
            emit(&artifact)
        }
        SessionCommand::Replay { id } => {
            let stored = svc.record(&id)?;
            let replayed = SessionRecord::replay(&stored.events)?;
            let same = canonical_json(&replayed, false) == canonical_json(&stored, false);
            if !same {
                return Err(ServiceError::Corrupt(format!("replay of `{id}` differs from the snapshot")));
            }
            emit(&serde_json::json!({ "id": id, "events": stored.events.len(), "identical": same }))
        }
    }
}

fn fit(req: FitRequest) -> ServiceResult<()> {
    let fit = match req {
        FitRequest::VariableInterval { tuples, family, bounds } => fit_variable_interval(&tuples, family, bounds)?,
        FitRequest::FixedInterval { bounds, mode, intervals, family } => {
            fit_fixed_interval(bounds, mode, &intervals, family)?
        }
        FitRequest::Roulette { edges, chips, family } => fit_roulette(&edges, &chips, family)?,
    };
    emit(&fit)
}

fn posterior_cmd(req: PosteriorRequest, engine: &EngineConfig) -> ServiceResult<()> {
    let m = find_model(&req.model).map_err(|_| ServiceError::UnknownModel(req.model.clone()))?;
    let mut data = ElicitationDataset::new();
    for j in req.judgments {
        data.push(j)?;
    }
    let grid = req.grid.unwrap_or_else(|| GridSpec::uniform(m.dim(), engine.grid_for(m.dim())));
    let s = req.mc_samples.unwrap_or(engine.mc_samples);
    let hp = posterior(&m, &data, &req.analyst_prior, &req.noise, &grid, s, req.seed)?;
    let target = req.target.unwrap_or_else(|| m.parameter_names[0].clone());
    let prior = elicited_prior(&hp, &m, &target, ElicitedPriorMode::Mixture, MIX_COMPONENTS)?;
    let summary = PosteriorSummary { mean: hp.mean()?, argmax: hp.argmax().to_vec(), entropy: hp.entropy(), grid_points: hp.len() };
    emit(&PosteriorReply { summary, prior })
}

fn pool(req: PoolRequest) -> ServiceResult<()> {
    let w = match req.weights {
        Some(weights) => WeightedOpinions::new(req.priors, weights)?,
        None => WeightedOpinions::equal(req.priors)?,
    };
    match req.rule {
        PoolRule::Linear => emit(&linear_pool(&w)?),
        PoolRule::Log => emit(&log_pool(&w, req.grid_size)?),
    }
}

fn eval(req: EvalRequest) -> ServiceResult<()> {
    emit(&run_eval(&req.scenario, req.method, req.queries, req.repeats, req.seed, &req.options)?)
}

pub fn execute(cli: Cli, env: &BTreeMap<String, String>) -> ServiceResult<()> {
    let engine = engine_config(&cli, env)?;
    match cli.command {
        Command::Serve { port } => {
            let svc = Arc::new(SessionService::new(engine)?);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on 127.0.0.1:{port}");
            rt.block_on(crate::http::serve(svc, port))?;
            Ok(())
        }
        Command::Models => emit(&SessionService::new(engine)?.models()),
        Command::Session(cmd) => session_command(&SessionService::new(engine)?, cmd),
        Command::Fit { input } => fit(read_json(&input)?),
        Command::Posterior { input } => posterior_cmd(read_json(&input)?, &engine),
        Command::Pool { input } => pool(read_json(&input)?),
        Command::Eval { input } => eval(read_json(&input)?),
    }
}

/// Exit status for an error: 3 not found, 4 state conflict, 5 invalid
/// input, 1 anything else.
pub fn exit_code(e: &ServiceError) -> i32 {
    match e.class() {
        ErrorClass::NotFound => 3,
        ErrorClass::Conflict => 4,
        ErrorClass::Invalid => 5,
        ErrorClass::Internal => 1,
    }
}

/// Parses arguments, runs, and reports errors as JSON on stderr.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let env: BTreeMap<String, String> = std::env::vars().collect();
    match execute(cli, &env) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", canonical_json(&e.body(), false));
            exit_code(&e)
        }
    }
}
