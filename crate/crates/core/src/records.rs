//! The elicitation data model: queries the analyst issues, statements the
//! expert returns, datasets split by elicitation space, and sessions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::supra_bayes::HyperPosterior;

/// Whether a query concerns model parameters or observable quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Parameter,
    Observable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum QueryKind {
    /// "What value has probability `p` of not being exceeded?"
    QuantileAt { p: f64 },
    /// "How likely is the target to fall in `[lower, upper]`?"
    IntervalProbability { lower: f64, upper: f64 },
    /// Allocate `chip_budget` chips over the bins delimited by `edges`.
    Roulette { edges: Vec<f64>, chip_budget: u32 },
    /// Probabilities of every region of a declared observable partition.
    PartitionProbabilities { partition: String },
    /// Smallest and largest plausible values.
    PlausibleBounds,
}

impl QueryKind {
    pub fn name(&self) -> &'static str {
        match self {
            QueryKind::QuantileAt { .. } => "QuantileAt",
            QueryKind::IntervalProbability { .. } => "IntervalProbability",
            QueryKind::Roulette { .. } => "Roulette",
            QueryKind::PartitionProbabilities { .. } => "PartitionProbabilities",
            QueryKind::PlausibleBounds => "PlausibleBounds",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub space: Space,
    /// Parameter name (parameter space) or partition id (observable space).
    pub target: String,
    pub kind: QueryKind,
}

impl Query {
    pub fn quantile(id: impl Into<String>, target: impl Into<String>, p: f64) -> Self {
        Query {
            id: id.into(),
            space: Space::Parameter,
            target: target.into(),
            kind: QueryKind::QuantileAt { p },
        }
    }

    pub fn partition(id: impl Into<String>, partition: impl Into<String>) -> Self {
        let partition = partition.into();
        Query {
            id: id.into(),
            space: Space::Observable,
            target: partition.clone(),
            kind: QueryKind::PartitionProbabilities { partition },
        }
    }

    /// Structural checks that do not need a model.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidQuery(format!("{}: {m}", self.id)));
        if self.id.is_empty() {
            return bad("empty id");
        }
        let observable = matches!(self.kind, QueryKind::PartitionProbabilities { .. });
        if observable != (self.space == Space::Observable) {
            return bad("partition queries live in the observable space, all others in the parameter space");
        }
        match &self.kind {
            QueryKind::QuantileAt { p } if !(*p > 0.0 && *p < 1.0) => bad("quantile level outside (0, 1)"),
            QueryKind::IntervalProbability { lower, upper } if !(lower < upper) => {
                bad("interval needs lower < upper")
            }
            QueryKind::Roulette { edges, chip_budget } => {
                if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
                    bad("roulette edges must be strictly ascending")
                } else if *chip_budget < 1 {
                    bad("chip budget must be at least 1")
                } else {
                    Ok(())
                }
            }
            QueryKind::PartitionProbabilities { partition } if partition != &self.target => {
                bad("partition query target must name its partition")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Answer {
    QuantileValue(f64),
    Probability(f64),
    ChipAllocation(Vec<u32>),
    SimplexVector(Vec<f64>),
    Bounds { min: f64, max: f64 },
}

impl Answer {
    /// Whether this answer is the right shape for `kind`.
    pub fn matches(&self, kind: &QueryKind) -> bool {
        matches!(
            (self, kind),
            (Answer::QuantileValue(_), QueryKind::QuantileAt { .. })
                | (Answer::Probability(_), QueryKind::IntervalProbability { .. })
                | (Answer::ChipAllocation(_), QueryKind::Roulette { .. })
                | (Answer::SimplexVector(_), QueryKind::PartitionProbabilities { .. })
                | (Answer::Bounds { .. }, QueryKind::PlausibleBounds)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElicitedStatement {
    pub query_id: String,
    pub answer: Answer,
    #[serde(default)]
    pub expert_id: String,
    /// Informational only; nothing orders or keys on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl ElicitedStatement {
    pub fn new(query_id: impl Into<String>, answer: Answer) -> Self {
        ElicitedStatement { query_id: query_id.into(), answer, expert_id: String::new(), timestamp: None }
    }
}

/// One `(z, q)` data point: a statement together with the query it answers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub query: Query,
    pub statement: ElicitedStatement,
}

impl Judgment {
    pub fn new(query: Query, answer: Answer) -> Self {
        let statement = ElicitedStatement::new(query.id.clone(), answer);
        Judgment { query, statement }
    }
}

/// Elicitation data split into the parameter-space and observable-space
/// blocks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElicitationDataset {
    pub parameter_space: Vec<Judgment>,
    pub observable_space: Vec<Judgment>,
}

impl ElicitationDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.parameter_space.len() + self.observable_space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Judgment> {
        self.parameter_space.iter().chain(&self.observable_space)
    }

    pub fn get(&self, query_id: &str) -> Option<&Judgment> {
        self.iter().find(|j| j.query.id == query_id)
    }

    pub fn push(&mut self, judgment: Judgment) -> Result<()> {
        if judgment.statement.query_id != judgment.query.id {
            return Err(Error::UnknownQuery(judgment.statement.query_id.clone()));
        }
        if self.get(&judgment.query.id).is_some() {
            return Err(Error::DuplicateQuery(judgment.query.id.clone()));
        }
        match judgment.query.space {
            Space::Parameter => self.parameter_space.push(judgment),
            Space::Observable => self.observable_space.push(judgment),
        }
        Ok(())
    }

    pub fn remove(&mut self, query_id: &str) -> Option<Judgment> {
        for block in [&mut self.parameter_space, &mut self.observable_space] {
            if let Some(i) = block.iter().position(|j| j.query.id == query_id) {
                return Some(block.remove(i));
            }
        }
        None
    }

    /// Replaces the statement answering `statement.query_id`, returning the
    /// old one.
    pub fn replace(&mut self, statement: ElicitedStatement) -> Result<ElicitedStatement> {
        let slot = self
            .parameter_space
            .iter_mut()
            .chain(self.observable_space.iter_mut())
            .find(|j| j.query.id == statement.query_id)
            .ok_or_else(|| Error::UnknownQuery(statement.query_id.clone()))?;
        Ok(std::mem::replace(&mut slot.statement, statement))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    QueryMismatch,
    AnswerKindMismatch,
    NonFinite,
    ProbabilityOutOfRange,
    NonMonotoneQuantiles,
    OutsideBounds,
    ChipBudget,
    NotOnSimplex,
    InvalidBounds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationKind,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationKind, message: impl Into<String>) -> Self {
        Violation { code, message: message.into() }
    }
}

/// Checks `z` against its query and against statements already accepted in
/// `accepted`. Returns every violation found; inconsistent data is reported,
/// never repaired.
pub fn validate_statement(q: &Query, z: &ElicitedStatement, accepted: &ElicitationDataset) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    if z.query_id != q.id {
        out.push(Violation::new(QueryMismatch, format!("statement answers `{}`, not `{}`", z.query_id, q.id)));
    }
    if !z.answer.matches(&q.kind) {
        out.push(Violation::new(
            AnswerKindMismatch,
            format!("answer kind does not match a {} query", q.kind.name()),
        ));
        return out;
    }
    match &z.answer {
        Answer::QuantileValue(v) => {
            if !v.is_finite() {
                out.push(Violation::new(NonFinite, "quantile value is not finite"));
                return out;
            }
            let QueryKind::QuantileAt { p } = q.kind else { unreachable!() };
            let earlier = accepted
                .parameter_space
                .iter()
                .filter(|j| j.query.target == q.target && j.query.id != q.id);
            for j in earlier {
                match (&j.query.kind, &j.statement.answer) {
                    (QueryKind::QuantileAt { p: p0 }, Answer::QuantileValue(v0)) => {
                        if (*p0 < p && *v0 > *v) || (*p0 > p && *v0 < *v) {
                            out.push(Violation::new(
                                NonMonotoneQuantiles,
                                format!("non-monotone quantiles: q({p0}) = {v0} but q({p}) = {v}"),
                            ));
                        }
                    }
                    (QueryKind::PlausibleBounds, Answer::Bounds { min, max }) if v < min || v > max => {
                        out.push(Violation::new(
                            OutsideBounds,
                            format!("quantile {v} outside plausible bounds [{min}, {max}]"),
                        ));
                    }
                    _ => {}
                }
            }
        }
        Answer::Probability(rho) => {
            if !(0.0..=1.0).contains(rho) {
                out.push(Violation::new(ProbabilityOutOfRange, format!("probability out of range: {rho}")));
            }
        }
        Answer::ChipAllocation(chips) => {
            let QueryKind::Roulette { edges, chip_budget } = &q.kind else { unreachable!() };
            if chips.len() + 1 != edges.len() {
                out.push(Violation::new(
                    ChipBudget,
                    format!("{} bins but {} chip counts", edges.len() - 1, chips.len()),
                ));
            }
            let total: u64 = chips.iter().map(|&c| c as u64).sum();
            if total != *chip_budget as u64 {
                out.push(Violation::new(ChipBudget, format!("{total} chips placed, budget is {chip_budget}")));
            }
        }
        Answer::SimplexVector(rho) => {
            let sum: f64 = rho.iter().sum();
            if rho.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
                out.push(Violation::new(ProbabilityOutOfRange, "probability out of range in simplex vector"));
            }
            if (sum - 1.0).abs() > 1e-9 {
                out.push(Violation::new(NotOnSimplex, format!("probabilities sum to {sum}, not 1")));
            }
        }
        Answer::Bounds { min, max } => {
            if !(min < max) {
                out.push(Violation::new(InvalidBounds, format!("bounds need min < max, got [{min}, {max}]")));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Fitting,
    SupraBayes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interaction {
    OneShot,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Open,
    Feedback,
    Accepted,
}

/// What the analyst currently holds as the elicited prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Fitted {
    Fit(FitResult),
    Posterior(HyperPosterior),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub model: String,
    pub mode: Mode,
    pub interaction: Interaction,
    pub dataset: ElicitationDataset,
    fitted: Option<Fitted>,
    status: Status,
}

impl Session {
    pub fn new(id: impl Into<String>, model: impl Into<String>, mode: Mode, interaction: Interaction) -> Self {
        Session {
            id: id.into(),
            model: model.into(),
            mode,
            interaction,
            dataset: ElicitationDataset::new(),
            fitted: None,
            status: Status::Open,
        }
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn fitted(&self) -> Option<&Fitted> {
        self.fitted.as_ref()
    }

    /// Installs a fit; refused while the dataset is empty.
    pub fn set_fitted(&mut self, fitted: Option<Fitted>) -> Result<()> {
        if fitted.is_some() && self.dataset.is_empty() {
            return Err(Error::Precondition("cannot hold a fitted prior without statements".into()));
        }
        self.fitted = fitted;
        Ok(())
    }

    /// Moves to `next`. `Accepted` is reachable only from `Feedback` and is
    /// terminal.
    pub fn transition(&mut self, next: Status) -> Result<()> {
        let ok = match (self.status, next) {
            (Status::Accepted, _) => false,
            (_, Status::Accepted) => self.status == Status::Feedback,
            (Status::Open | Status::Feedback, Status::Open | Status::Feedback) => true,
        };
        if !ok {
            return Err(Error::IllegalTransition {
                from: format!("{:?}", self.status),
                to: format!("{next:?}"),
            });
        }
        self.status = next;
        Ok(())
    }
}
