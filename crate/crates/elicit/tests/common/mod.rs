#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use elicit::session::{QuerySource, SessionConfig};
use elicit::SessionService;
use elicit_core::active::CandidateSet;
use elicit_core::config::EngineConfig;
use elicit_core::records::{Mode, Query, QueryKind, Space};
use elicit_core::supra_bayes::{ElicitationNoise, GridSpec};

pub fn service(dir: &std::path::Path) -> SessionService {
    SessionService::new(EngineConfig { data_dir: dir.to_path_buf(), ..EngineConfig::default() }).unwrap()
}

pub fn quartiles(target: &str) -> Vec<Query> {
    [("q25", 0.25), ("q50", 0.5), ("q75", 0.75)]
        .iter()
        .map(|(id, p)| Query::quantile(*id, target, *p))
        .collect()
}

pub fn fitting(model: &str, queries: Vec<Query>) -> SessionConfig {
    SessionConfig::scripted(model, Mode::Fitting, queries)
}

pub fn roulette_query(id: &str, target: &str, edges: Vec<f64>, chip_budget: u32) -> Query {
    Query { id: id.into(), space: Space::Parameter, target: target.into(), kind: QueryKind::Roulette { edges, chip_budget } }
}

pub fn small_grid() -> GridSpec {
    GridSpec::with_ranges(vec![12, 12], vec![(0.5, 10.0), (0.5, 10.0)])
}

pub fn noise() -> ElicitationNoise {
    ElicitationNoise::new(0.02, 50.0, 0.2).unwrap()
}

pub fn active(model: &str, candidates: Vec<Query>) -> SessionConfig {
    let mut cfg = supra(model, vec![]);
    cfg.source = QuerySource::Active { candidates: CandidateSet::new(candidates).unwrap() };
    cfg
}

pub fn supra(model: &str, queries: Vec<Query>) -> SessionConfig {
    let mut cfg = SessionConfig::scripted(model, Mode::SupraBayes, queries);
    cfg.noise = Some(noise());
    cfg.grid = Some(small_grid());
    cfg.mc_samples = Some(2000);
    cfg.seed = 5;
    cfg
}

pub fn levels(target: &str) -> Vec<Query> {
    [0.1, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .enumerate()
        .map(|(i, &p)| Query::quantile(format!("c{i}"), target, p))
        .collect()
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn elicit(cwd: &Path, env: &[(&str, &str)], args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_elicit"));
    cmd.current_dir(cwd).args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("ELICIT_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}


pub fn check_golden(name: &str, out: &Output) {
    let path = golden_dir().join(name);
    let actual = String::from_utf8(out.stdout.clone()).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert_eq!(actual, expected, "{name} differs from its golden file");
}

/// `session new`, three answers, `feedback`, `accept`; returns every output.
pub fn beta_session(cwd: &Path) -> Vec<(String, Output)> {
    let cfg = fixtures().join("beta_session.json");
    let cfg = cfg.to_str().unwrap();
    let dd = ["--data-dir", "data"];
    let mut outs = Vec::new();
    let mut run = |name: &str, args: &[&str]| {
        let all: Vec<&str> = dd.iter().chain(args).copied().collect();
        outs.push((name.to_string(), elicit(cwd, &[], &all)));
    };
    run("new.json", &["session", "new", cfg, "--id", "golden"]);
    for (i, v) in ["0.1611", "0.2644", "0.3931"].iter().enumerate() {
        let answer = format!("{{\"QuantileValue\": {v}}}");
        run(&format!("answer{}.json", i + 1), &["session", "answer", "golden", "--answer", &answer]);
    }
    run("feedback.json", &["session", "feedback", "golden"]);
    run("accept.json", &["session", "accept", "golden"]);
    outs
}

