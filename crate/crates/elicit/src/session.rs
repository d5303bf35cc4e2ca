//! Event-sourced elicitation sessions.
//!
//! Every mutation is expressed as a [`SessionEvent`] and applied through
//! [`SessionState::apply`], so replaying the log rebuilds the snapshot.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use elicit_core::active::{select_next_query, CandidateSet};
use elicit_core::config::EngineConfig;
use elicit_core::distributions::{Density, Family};
use elicit_core::fitting::{feedback_summaries, fit_roulette, fit_variable_interval, FitResult};
use elicit_core::predictive::{find_model, ModelEntry};
use elicit_core::records::{
    validate_statement, Answer, ElicitationDataset, ElicitedStatement, Fitted, Interaction, Judgment, Mode, Query,
    QueryKind, Session, Space, Status, Violation, ViolationKind,
};
use elicit_core::supra_bayes::{
    analyst_iqr, elicited_prior, posterior, AnalystPrior, ElicitationNoise, ElicitedPrior, ElicitedPriorMode, GridSpec,
    HyperPosterior,
};

use crate::error::{ServiceError, ServiceResult};

/// Heaviest grid points kept in a supra-Bayesian elicited prior.
pub const MIX_COMPONENTS: usize = 100;
/// Draws used to turn the relative quantile noise into an absolute one.
const IQR_SAMPLES: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum QuerySource {
    Scripted { queries: Vec<Query> },
    Active { candidates: CandidateSet },
}

impl QuerySource {
    pub fn queries(&self) -> &[Query] {
        match self {
            QuerySource::Scripted { queries } => queries,
            QuerySource::Active { candidates } => &candidates.queries,
        }
    }
}

fn iterative() -> Interaction {
    Interaction::Iterative
}

/// Session settings. Unset optional fields are filled from the engine
/// configuration when the session is created, and the filled-in copy is
/// what the event log records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub model: String,
    pub mode: Mode,
    #[serde(default = "iterative")]
    pub interaction: Interaction,
    /// Enabled elicitation spaces; both when empty.
    #[serde(default)]
    pub spaces: Vec<Space>,
    pub source: QuerySource,
    /// Parameter whose prior is fitted or reported; the model's first by
    /// default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Family fitted in `Fitting` mode; the model's own family for the
    /// target by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<ElicitationNoise>,
    #[serde(default)]
    pub analyst_prior: AnalystPrior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Whether violations suspend refitting. Only `Fitting` mode blocks,
    /// and it does so unless this is `false`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_on_violation: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_probs: Option<Vec<f64>>,
}

fn invalid(msg: impl Into<String>) -> ServiceError {
    ServiceError::InvalidConfig(msg.into())
}

fn model(name: &str) -> ServiceResult<ModelEntry> {
    find_model(name).map_err(|_| ServiceError::UnknownModel(name.to_string()))
}

impl SessionConfig {
    pub fn scripted(model: impl Into<String>, mode: Mode, queries: Vec<Query>) -> Self {
        SessionConfig {
            id: None,
            model: model.into(),
            mode,
            interaction: Interaction::Iterative,
            spaces: Vec::new(),
            source: QuerySource::Scripted { queries },
            target: None,
            family: None,
            noise: None,
            analyst_prior: AnalystPrior::Uniform,
            grid: None,
            mc_samples: None,
            seed: 0,
            block_on_violation: None,
            feedback_probs: None,
        }
    }

    pub fn target(&self) -> &str {
        self.target.as_deref().unwrap_or_default()
    }

    fn space_enabled(&self, s: Space) -> bool {
        self.spaces.is_empty() || self.spaces.contains(&s)
    }

    /// Checks the config against the registry and fills every default.
    pub fn resolve(mut self, engine: &EngineConfig) -> ServiceResult<SessionConfig> {
        let m = model(&self.model)?;
        if let Some(id) = &self.id {
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(invalid(format!("session id `{id}` must be nonempty [A-Za-z0-9_-]")));
            }
        }
        let target = match &self.target {
            Some(t) if m.parameter_names.contains(t) => t.clone(),
            Some(t) => return Err(invalid(format!("model `{}` has no parameter `{t}`", m.name))),
            None => m.parameter_names.first().cloned().ok_or_else(|| invalid("model has no parameters"))?,
        };
        let queries = self.source.queries();
        match &self.source {
            QuerySource::Scripted { queries } if queries.is_empty() => {
                return Err(invalid("scripted sessions need at least one query"))
            }
            QuerySource::Active { candidates } => {
                if self.mode != Mode::SupraBayes {
                    return Err(invalid("active query selection requires SupraBayes mode"));
                }
                candidates.validate().map_err(|e| invalid(e.to_string()))?;
            }
            _ => {}
        }
        let mut seen = std::collections::BTreeSet::new();
        for q in queries {
            q.validate().map_err(|e| invalid(format!("query `{}`: {e}", q.id)))?;
            if !seen.insert(q.id.as_str()) {
                return Err(invalid(format!("duplicate query id `{}`", q.id)));
            }
            if !self.space_enabled(q.space) {
                return Err(invalid(format!("query `{}` is in a disabled space", q.id)));
            }
            match q.space {
                Space::Parameter if !m.parameter_names.contains(&q.target) => {
                    return Err(invalid(format!("query `{}` targets unknown parameter `{}`", q.id, q.target)))
                }
                Space::Observable => {
                    if let QueryKind::PartitionProbabilities { partition } = &q.kind {
                        m.partition(partition).map_err(|e| invalid(e.to_string()))?;
                    }
                }
                _ => {}
            }
            match self.mode {
                Mode::Fitting if q.space != Space::Parameter || q.target != target => {
                    return Err(invalid(format!("fitting sessions only ask about `{target}`; `{}` does not", q.id)))
                }
                Mode::SupraBayes if matches!(q.kind, QueryKind::Roulette { .. }) => {
                    return Err(invalid(format!("roulette query `{}` has no supra-Bayesian likelihood", q.id)))
                }
                _ => {}
            }
        }
        let defaults = m.prior_marginal(&box_center(&m), &target)?;
        match self.mode {
            Mode::Fitting => {
                let family = self.family.unwrap_or(defaults.family());
                if family.param_count().is_none() {
                    return Err(invalid(format!("cannot fit a {family:?} prior")));
                }
                self.family = Some(family);
                self.block_on_violation = Some(self.block_on_violation.unwrap_or(true));
            }
            Mode::SupraBayes => {
                self.family = None;
                self.block_on_violation = Some(false);
                let grid = self.grid.clone().unwrap_or_else(|| GridSpec::uniform(m.dim(), engine.grid_for(m.dim())));
                grid.points(&m).map_err(|e| invalid(e.to_string()))?;
                self.grid = Some(grid);
                let noise = match self.noise {
                    Some(n) => n,
                    None => {
                        let iqr = analyst_iqr(&m, &self.analyst_prior, &target, IQR_SAMPLES, self.seed)?;
                        ElicitationNoise::new(
                            engine.quantile_noise_rel * iqr,
                            engine.probability_precision,
                            engine.interval_prob_noise,
                        )?
                    }
                };
                noise.validate()?;
                self.noise = Some(noise);
            }
        }
        let s = self.mc_samples.unwrap_or(engine.mc_samples);
        if s == 0 {
            return Err(invalid("mc_samples must be positive"));
        }
        self.mc_samples = Some(s);
        let probs = self.feedback_probs.clone().unwrap_or_else(|| engine.feedback_probs.clone());
        if probs.is_empty() || probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(invalid("feedback probabilities must lie in (0, 1)"));
        }
        self.feedback_probs = Some(probs);
        self.target = Some(target);
        Ok(self)
    }
}

fn box_center(m: &ModelEntry) -> Vec<f64> {
    m.hyperparameters.iter().map(|h| 0.5 * (h.lower + h.upper)).collect()
}

/// The current prior over the target, as shown to the expert.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorArtifact {
    Elicited(ElicitedPrior),
    /// A Beta stretched over a custom support.
    Scaled(FitResult),
}

impl PriorArtifact {
    fn density(&self) -> &dyn Density {
        match self {
            PriorArtifact::Elicited(e) => e,
            PriorArtifact::Scaled(f) => f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: Vec<f64>,
    pub argmax: Vec<f64>,
    pub entropy: f64,
    pub grid_points: usize,
}

/// What a recorded answer or revision did to the prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateSummary {
    pub statements: usize,
    /// Refitting was suspended because the data carry violations.
    pub fit_blocked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior: Option<PosteriorSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IssuedQuery {
    pub query: Query,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runner_up_eig: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPacket {
    pub prior: PriorArtifact,
    pub summaries: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedPrior {
    pub session_id: String,
    pub model: String,
    pub target: String,
    pub prior: PriorArtifact,
    pub provenance_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    Created { config: SessionConfig },
    QueryIssued { issued: IssuedQuery },
    AnswerRecorded { statement: ElicitedStatement },
    ViolationRaised { query_id: String, violations: Vec<Violation> },
    PriorUpdated { summary: UpdateSummary },
    FeedbackShown { packet: FeedbackPacket },
    JudgmentRevised { statement: ElicitedStatement, previous: ElicitedStatement },
    Accepted { artifact: AcceptedPrior },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub event: EventKind,
}

/// Derived snapshot of a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session: Session,
    pub config: SessionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outstanding: Option<IssuedQuery>,
    pub fit_blocked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<AcceptedPrior>,
}

/// Snapshot plus the log it derives from; this is what is persisted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub state: SessionState,
    pub events: Vec<SessionEvent>,
}

/// Serializes with object keys sorted, so equal values give equal bytes.
pub fn canonical_json<T: Serialize>(v: &T, pretty: bool) -> String {
    let value = serde_json::to_value(v).expect("session values serialize");
    if pretty {
        serde_json::to_string_pretty(&value).expect("values serialize")
    } else {
        value.to_string()
    }
}

/// Hex SHA-256 of the canonical encoding of `events`.
pub fn provenance_hash(events: &[SessionEvent]) -> String {
    hex::encode(Sha256::digest(canonical_json(&events, false).as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub summary: UpdateSummary,
    pub violations: Vec<Violation>,
}

/// Violations of every judgment against all the others.
fn dataset_violations(data: &ElicitationDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    for j in data.parameter_space.iter().chain(&data.observable_space) {
        let mut rest = data.clone();
        rest.remove(&j.query.id);
        out.extend(validate_statement(&j.query, &j.statement, &rest));
    }
    out
}

fn fit_target(cfg: &SessionConfig, data: &ElicitationDataset) -> elicit_core::Result<Option<FitResult>> {
    let family = cfg.family.expect("resolved fitting config has a family");
    let target = cfg.target();
    let on_target: Vec<&Judgment> = data.parameter_space.iter().filter(|j| j.query.target == target).collect();
    let roulette = on_target.iter().rev().find_map(|j| match (&j.query.kind, &j.statement.answer) {
        (QueryKind::Roulette { edges, .. }, Answer::ChipAllocation(chips)) => Some((edges, chips)),
        _ => None,
    });
    if let Some((edges, chips)) = roulette {
        return fit_roulette(edges, chips, Some(family)).map(Some);
    }
    let bounds = on_target.iter().rev().find_map(|j| match j.statement.answer {
        Answer::Bounds { min, max } if family == Family::Beta => Some((min, max)),
        _ => None,
    });
    let mut tuples: Vec<(f64, f64)> = on_target
        .iter()
        .filter_map(|j| match (&j.query.kind, &j.statement.answer) {
            (QueryKind::QuantileAt { p }, Answer::QuantileValue(v)) => Some((*p, *v)),
            _ => None,
        })
        .collect();
    tuples.sort_by(|a, b| a.0.total_cmp(&b.0));
    if tuples.len() < family.param_count().unwrap_or(usize::MAX) {
        return Ok(None);
    }
    fit_variable_interval(&tuples, family, bounds).map(Some)
}

impl SessionState {
    fn created(config: SessionConfig) -> ServiceResult<Self> {
        let id = config.id.clone().ok_or_else(|| invalid("session id missing from the log"))?;
        let session = Session::new(id, config.model.clone(), config.mode, config.interaction);
        Ok(SessionState { session, config, outstanding: None, fit_blocked: false, accepted: None })
    }

    pub fn model(&self) -> ServiceResult<ModelEntry> {
        model(&self.config.model)
    }

    fn noise(&self) -> ElicitationNoise {
        self.config.noise.expect("resolved supra-Bayes config has noise")
    }

    fn grid(&self) -> &GridSpec {
        self.config.grid.as_ref().expect("resolved supra-Bayes config has a grid")
    }

    fn mc(&self) -> usize {
        self.config.mc_samples.expect("resolved config has mc_samples")
    }

    fn hyper_posterior(&self, m: &ModelEntry) -> ServiceResult<HyperPosterior> {
        if let Some(Fitted::Posterior(hp)) = self.session.fitted() {
            return Ok(hp.clone());
        }
        Ok(posterior(
            m,
            &ElicitationDataset::new(),
            &self.config.analyst_prior,
            &self.noise(),
            self.grid(),
            self.mc(),
            self.config.seed,
        )?)
    }

    /// Recomputes the prior from the dataset. Deterministic in the state.
    pub fn recompute(&self) -> ServiceResult<(Option<Fitted>, UpdateSummary)> {
        let data = &self.session.dataset;
        let blocked = self.config.block_on_violation == Some(true) && !dataset_violations(data).is_empty();
        let mut summary = UpdateSummary {
            statements: data.len(),
            fit_blocked: blocked,
            fit: None,
            fit_error: None,
            posterior: None,
        };
        if blocked {
            return Ok((self.session.fitted().cloned(), summary));
        }
        match self.config.mode {
            Mode::Fitting => match fit_target(&self.config, data) {
                Ok(fit) => {
                    summary.fit = fit.clone();
                    Ok((fit.map(Fitted::Fit), summary))
                }
                Err(e) => {
                    summary.fit_error = Some(e.to_string());
                    Ok((self.session.fitted().cloned(), summary))
                }
            },
            Mode::SupraBayes => {
                let m = self.model()?;
                let hp = posterior(
                    &m,
                    data,
                    &self.config.analyst_prior,
                    &self.noise(),
                    self.grid(),
                    self.mc(),
                    self.config.seed,
                )?;
                summary.posterior = Some(PosteriorSummary {
                    mean: hp.mean()?,
                    argmax: hp.argmax().to_vec(),
                    entropy: hp.entropy(),
                    grid_points: hp.len(),
                });
                let fitted = if data.is_empty() { None } else { Some(Fitted::Posterior(hp)) };
                Ok((fitted, summary))
            }
        }
    }

    /// The current prior over the target.
    pub fn prior(&self) -> ServiceResult<PriorArtifact> {
        match self.session.fitted() {
            None => Err(ServiceError::NothingFitted),
            Some(Fitted::Fit(fit)) => Ok(match fit.support {
                Some((lo, hi)) if (lo, hi) != (0.0, 1.0) => PriorArtifact::Scaled(fit.clone()),
                _ => PriorArtifact::Elicited(ElicitedPrior::Distribution(fit.distribution.clone())),
            }),
            Some(Fitted::Posterior(hp)) => {
                let m = self.model()?;
                Ok(PriorArtifact::Elicited(elicited_prior(
                    hp,
                    &m,
                    self.config.target(),
                    ElicitedPriorMode::Mixture,
                    MIX_COMPONENTS,
                )?))
            }
        }
    }

    fn feedback_packet(&self) -> ServiceResult<FeedbackPacket> {
        let prior = self.prior()?;
        let probs = self.config.feedback_probs.as_deref().unwrap_or_default();
        let summaries = feedback_summaries(prior.density(), probs)?;
        Ok(FeedbackPacket { prior, summaries })
    }

    fn issued_ids(&self) -> Vec<String> {
        let d = &self.session.dataset;
        d.parameter_space.iter().chain(&d.observable_space).map(|j| j.query.id.clone()).collect()
    }

    fn ensure_open(&self) -> ServiceResult<()> {
        match self.session.status() {
            Status::Accepted => Err(ServiceError::SessionClosed),
            _ => Ok(()),
        }
    }

    /// The query to issue next, restricted to `space` when given.
    fn choose_query(&self, space: Option<Space>) -> ServiceResult<IssuedQuery> {
        let answered = self.issued_ids();
        let allowed = |q: &Query| space.is_none_or(|s| q.space == s) && !answered.contains(&q.id);
        match &self.config.source {
            QuerySource::Scripted { queries } => queries
                .iter()
                .find(|q| allowed(q))
                .map(|q| IssuedQuery { query: q.clone(), eig: None, runner_up_eig: None })
                .ok_or(ServiceError::ScriptExhausted),
            QuerySource::Active { candidates } => {
                let open: Vec<Query> = candidates.queries.iter().filter(|q| allowed(q)).cloned().collect();
                if open.is_empty() {
                    return Err(ServiceError::ScriptExhausted);
                }
                let cands = CandidateSet { queries: open, discretization: candidates.discretization.clone() };
                let m = self.model()?;
                let hp = self.hyper_posterior(&m)?;
                let sel = select_next_query(&m, &hp, &cands, &self.noise(), self.mc(), self.config.seed, &[])?;
                Ok(IssuedQuery { query: sel.query, eig: Some(sel.eig), runner_up_eig: sel.runner_up_eig })
            }
        }
    }

    /// Applies one event. `PriorUpdated` recomputes the prior unless the
    /// caller already did and passes the result in `fitted`.
    fn apply(&mut self, ev: &EventKind, fitted: Option<Option<Fitted>>) -> ServiceResult<()> {
        match ev {
            EventKind::Created { .. } => return Err(ServiceError::Corrupt("Created after the first event".into())),
            EventKind::QueryIssued { issued } => {
                if self.session.status() == Status::Feedback {
                    self.session.transition(Status::Open)?;
                }
                self.outstanding = Some(issued.clone());
            }
            EventKind::AnswerRecorded { statement } => {
                let issued = self.outstanding.take().ok_or(ServiceError::NoOutstandingQuery)?;
                self.session.dataset.push(Judgment { query: issued.query, statement: statement.clone() })?;
            }
            EventKind::ViolationRaised { .. } => {}
            EventKind::PriorUpdated { summary } => {
                let fitted = match fitted {
                    Some(f) => f,
                    None => {
                        let (f, again) = self.recompute()?;
                        if &again != summary {
                            return Err(ServiceError::Corrupt("replayed update differs from the log".into()));
                        }
                        f
                    }
                };
                self.fit_blocked = summary.fit_blocked;
                self.session.set_fitted(fitted)?;
            }
            EventKind::FeedbackShown { .. } => {
                if self.session.status() == Status::Open {
                    self.session.transition(Status::Feedback)?;
                }
            }
            EventKind::JudgmentRevised { statement, .. } => {
                self.session.dataset.replace(statement.clone())?;
            }
            EventKind::Accepted { artifact } => {
                if self.session.status() == Status::Open {
                    self.session.transition(Status::Feedback)?;
                }
                self.session.transition(Status::Accepted)?;
                self.accepted = Some(artifact.clone());
            }
        }
        Ok(())
    }
}

impl SessionRecord {
    /// Starts a session from a resolved config that carries an id.
    pub fn create(config: SessionConfig) -> ServiceResult<Self> {
        let state = SessionState::created(config.clone())?;
        Ok(SessionRecord { state, events: vec![SessionEvent { seq: 0, event: EventKind::Created { config } }] })
    }

    /// Rebuilds a record from its event log alone.
    pub fn replay(events: &[SessionEvent]) -> ServiceResult<Self> {
        let (first, rest) = events.split_first().ok_or_else(|| ServiceError::Corrupt("empty event log".into()))?;
        let EventKind::Created { config } = &first.event else {
            return Err(ServiceError::Corrupt("log does not start with Created".into()));
        };
        if first.seq != 0 {
            return Err(ServiceError::Corrupt("first sequence number is not 0".into()));
        }
        let mut state = SessionState::created(config.clone())?;
        for (i, e) in rest.iter().enumerate() {
            if e.seq != i as u64 + 1 {
                return Err(ServiceError::Corrupt(format!("sequence gap at {}", e.seq)));
            }
            state.apply(&e.event, None)?;
        }
        Ok(SessionRecord { state, events: events.to_vec() })
    }

    pub fn id(&self) -> &str {
        &self.state.session.id
    }

    fn push(&mut self, event: EventKind, fitted: Option<Option<Fitted>>) -> ServiceResult<()> {
        self.state.apply(&event, fitted)?;
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent { seq, event });
        Ok(())
    }

    fn update_prior(&mut self) -> ServiceResult<UpdateSummary> {
        let (fitted, summary) = self.state.recompute()?;
        self.push(EventKind::PriorUpdated { summary: summary.clone() }, Some(fitted))?;
        Ok(summary)
    }

    /// The outstanding query, issuing a new one if none is.
    pub fn next_query(&mut self, space: Option<Space>) -> ServiceResult<IssuedQuery> {
        self.state.ensure_open()?;
        if let Some(q) = &self.state.outstanding {
            return Ok(q.clone());
        }
        let issued = self.state.choose_query(space)?;
        self.push(EventKind::QueryIssued { issued: issued.clone() }, None)?;
        Ok(issued)
    }

    pub fn record_answer(&mut self, z: ElicitedStatement) -> ServiceResult<AnswerResponse> {
        self.state.ensure_open()?;
        let issued = self.state.outstanding.as_ref().ok_or(ServiceError::NoOutstandingQuery)?;
        if z.query_id != issued.query.id {
            return Err(ServiceError::QueryMismatch { expected: issued.query.id.clone(), got: z.query_id });
        }
        if !z.answer.matches(&issued.query.kind) {
            return Err(ServiceError::AnswerKindMismatch(issued.query.kind.name().into()));
        }
        let violations = validate_statement(&issued.query, &z, &self.state.session.dataset);
        let qid = z.query_id.clone();
        self.push(EventKind::AnswerRecorded { statement: z }, None)?;
        if !violations.is_empty() {
            self.push(EventKind::ViolationRaised { query_id: qid, violations: violations.clone() }, None)?;
        }
        let summary = self.update_prior()?;
        Ok(AnswerResponse { summary, violations })
    }

    pub fn feedback(&mut self) -> ServiceResult<FeedbackPacket> {
        self.state.ensure_open()?;
        let packet = self.state.feedback_packet()?;
        self.push(EventKind::FeedbackShown { packet: packet.clone() }, None)?;
        Ok(packet)
    }

    /// Replaces earlier statements. All-or-nothing: on error nothing changes.
    pub fn revise(&mut self, statements: Vec<ElicitedStatement>) -> ServiceResult<AnswerResponse> {
        if self.state.session.status() == Status::Accepted {
            return Err(ServiceError::AlreadyAccepted);
        }
        if statements.is_empty() {
            return Err(ServiceError::BadRequest("no statements to revise".into()));
        }
        let mut trial = self.state.session.dataset.clone();
        let mut previous = Vec::with_capacity(statements.len());
        let mut violations = Vec::new();
        for z in &statements {
            let j = trial.get(&z.query_id).ok_or_else(|| elicit_core::Error::UnknownQuery(z.query_id.clone()))?;
            if !z.answer.matches(&j.query.kind) {
                return Err(ServiceError::AnswerKindMismatch(j.query.kind.name().into()));
            }
            let query = j.query.clone();
            let mut rest = trial.clone();
            rest.remove(&z.query_id);
            violations.extend(validate_statement(&query, z, &rest));
            previous.push(trial.replace(z.clone())?);
        }
        for (z, prev) in statements.into_iter().zip(previous) {
            self.push(EventKind::JudgmentRevised { statement: z, previous: prev }, None)?;
        }
        let summary = self.update_prior()?;
        Ok(AnswerResponse { summary, violations })
    }

    pub fn accept(&mut self) -> ServiceResult<AcceptedPrior> {
        match self.state.session.status() {
            Status::Accepted => return Err(ServiceError::AlreadyAccepted),
            Status::Open if self.state.config.interaction == Interaction::Iterative => {
                return Err(ServiceError::NotAtFeedback)
            }
            _ => {}
        }
        let artifact = AcceptedPrior {
            session_id: self.id().to_string(),
            model: self.state.config.model.clone(),
            target: self.state.config.target().to_string(),
            prior: self.state.prior()?,
            provenance_hash: provenance_hash(&self.events),
        };
        self.push(EventKind::Accepted { artifact: artifact.clone() }, None)?;
        Ok(artifact)
    }
}

/// Whether any recorded violation is of `kind`.
pub fn has_violation(violations: &[Violation], kind: ViolationKind) -> bool {
    violations.iter().any(|v| v.code == kind)
}
