//! Sampling models, observable-space partitions, prior-predictive Monte
//! Carlo, and the conditional-means prior.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{expit, logit};
use crate::rng::{rng, Rng};

/// One coordinate of the hyperparameter box. Each end may be open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameter {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl Hyperparameter {
    fn new(name: &str, lower: f64, upper: f64, lower_open: bool, upper_open: bool) -> Self {
        Hyperparameter { name: name.into(), lower, upper, lower_open, upper_open }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lower_open { v > self.lower } else { v >= self.lower };
        let below = if self.upper_open { v < self.upper } else { v <= self.upper };
        above && below && v.is_finite()
    }
}

/// A region of observation space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// `lower <= y[coordinate] < upper`; infinite ends allowed.
    Interval { coordinate: usize, lower: f64, upper: f64 },
    /// `y[coordinates[k]] == values[k]` for every `k`.
    Label { coordinates: Vec<usize>, values: Vec<f64> },
}

impl Region {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Region::Interval { coordinate, lower, upper } => {
                let v = y[*coordinate];
                v >= *lower && v < *upper
            }
            Region::Label { coordinates, values } => {
                coordinates.iter().zip(values).all(|(&c, &v)| y[c] == v)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub id: String,
    pub regions: Vec<Region>,
}

impl Partition {
    /// Cuts `c_1 < ... < c_k` on one coordinate give `k + 1` intervals.
    pub fn cuts(id: &str, coordinate: usize, cuts: &[f64]) -> Self {
        let mut ends = vec![f64::NEG_INFINITY];
        ends.extend_from_slice(cuts);
        ends.push(f64::INFINITY);
        Partition {
            id: id.into(),
            regions: ends
                .windows(2)
                .map(|w| Region::Interval { coordinate, lower: w[0], upper: w[1] })
                .collect(),
        }
    }

    /// One region per listed outcome of the given coordinates.
    pub fn labels(id: &str, coordinates: &[usize], outcomes: &[&[f64]]) -> Self {
        Partition {
            id: id.into(),
            regions: outcomes
                .iter()
                .map(|o| Region::Label { coordinates: coordinates.to_vec(), values: o.to_vec() })
                .collect(),
        }
    }

    /// Index of the region containing `y`.
    pub fn locate(&self, y: &[f64]) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(y))
    }
}

type PriorFn = dyn Fn(&[f64], &str) -> Result<Distribution> + Send + Sync;
type DrawFn = dyn Fn(&[f64], &mut Rng) -> Vec<f64> + Send + Sync;

/// A sampling model `p(y | theta)` with a parametric prior `p(theta | lambda)`.
///
/// Parameter-space queries address `parameter_names`; each must have a
/// closed-form marginal under `p(. | lambda)`. Observable-space queries
/// address `partitions`.
#[derive(Clone)]
pub struct ModelEntry {
    pub name: String,
    pub description: String,
    pub parameter_names: Vec<String>,
    pub hyperparameters: Vec<Hyperparameter>,
    pub partitions: Vec<Partition>,
    prior: Arc<PriorFn>,
    draw_theta: Arc<DrawFn>,
    draw_y: Arc<DrawFn>,
}

impl fmt::Debug for ModelEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelEntry")
            .field("name", &self.name)
            .field("parameter_names", &self.parameter_names)
            .field("hyperparameters", &self.hyperparameters)
            .field("partitions", &self.partitions)
            .finish_non_exhaustive()
    }
}

/// Serializable description of a registry entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub description: String,
    pub parameter_names: Vec<String>,
    pub hyperparameters: Vec<Hyperparameter>,
    pub partitions: Vec<Partition>,
}

impl ModelEntry {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        parameter_names: Vec<String>,
        hyperparameters: Vec<Hyperparameter>,
        partitions: Vec<Partition>,
        prior: impl Fn(&[f64], &str) -> Result<Distribution> + Send + Sync + 'static,
        draw_theta: impl Fn(&[f64], &mut Rng) -> Vec<f64> + Send + Sync + 'static,
        draw_y: impl Fn(&[f64], &mut Rng) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if hyperparameters.is_empty() {
            return Err(Error::InvalidParams("model needs at least one hyperparameter".into()));
        }
        if hyperparameters.iter().any(|h| !(h.lower < h.upper)) {
            return Err(Error::InvalidParams("empty hyperparameter box".into()));
        }
        Ok(ModelEntry {
            name: name.into(),
            description: description.into(),
            parameter_names,
            hyperparameters,
            partitions,
            prior: Arc::new(prior),
            draw_theta: Arc::new(draw_theta),
            draw_y: Arc::new(draw_y),
        })
    }

    pub fn info(&self) -> ModelInfo {
        ModelInfo {
            name: self.name.clone(),
            description: self.description.clone(),
            parameter_names: self.parameter_names.clone(),
            hyperparameters: self.hyperparameters.clone(),
            partitions: self.partitions.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.hyperparameters.len()
    }

    pub fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: lambda.len() });
        }
        for (h, &v) in self.hyperparameters.iter().zip(lambda) {
            if !h.contains(v) {
                return Err(Error::HyperparameterOutOfBox(format!("{} = {v}", h.name)));
            }
        }
        Ok(())
    }

    /// Marginal prior of the named parameter at `lambda`.
    pub fn prior_marginal(&self, lambda: &[f64], target: &str) -> Result<Distribution> {
        self.check_lambda(lambda)?;
        if !self.parameter_names.iter().any(|n| n == target) {
            return Err(Error::UnknownTarget(target.into()));
        }
        (self.prior)(lambda, target)
    }

    pub fn partition(&self, id: &str) -> Result<&Partition> {
        self.partitions.iter().find(|p| p.id == id).ok_or_else(|| Error::UnknownPartition(id.into()))
    }

    /// Draws `theta ~ p(. | lambda)` then `y ~ p(. | theta)`.
    pub fn draw_observation(&self, lambda: &[f64], r: &mut Rng) -> Vec<f64> {
        let theta = (self.draw_theta)(lambda, r);
        (self.draw_y)(&theta, r)
    }

    pub fn draw_theta(&self, lambda: &[f64], r: &mut Rng) -> Vec<f64> {
        (self.draw_theta)(lambda, r)
    }
}

fn normal(r: &mut Rng, mean: f64, sd: f64) -> f64 {
    mean + sd * r.sample::<f64, _>(StandardNormal)
}

fn bernoulli(r: &mut Rng, p: f64) -> f64 {
    if r.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

pub const BETA_BERNOULLI: &str = "beta-bernoulli";
pub const NORMAL_KNOWN_SIGMA: &str = "normal-known-sigma";
pub const HIERARCHICAL_NORMAL: &str = "hierarchical-normal";
pub const LOGISTIC_REGRESSION: &str = "logistic-regression";

/// Number of groups in the hierarchical entry.
pub const HIERARCHICAL_GROUPS: usize = 8;
/// Concentration of the Beta marginals on the conditional means in the
/// logistic entry.
pub const CMP_CONCENTRATION: f64 = 10.0;

fn beta_bernoulli() -> ModelEntry {
    ModelEntry::new(
        BETA_BERNOULLI,
        "theta ~ Beta(alpha, beta), y ~ Bernoulli(theta)",
        vec!["theta".into()],
        vec![
            Hyperparameter::new("alpha", 0.0, 100.0, true, false),
            Hyperparameter::new("beta", 0.0, 100.0, true, false),
        ],
        vec![Partition::labels("y", &[0], &[&[0.0], &[1.0]])],
        |l, _| Distribution::beta(l[0], l[1]),
        |l, r| vec![Distribution::beta(l[0], l[1]).expect("inside box").draw(r)],
        |t, r| vec![bernoulli(r, t[0])],
    )
    .expect("static entry")
}

fn normal_known_sigma() -> ModelEntry {
    ModelEntry::new(
        NORMAL_KNOWN_SIGMA,
        "theta ~ Normal(mu0, sigma0), y ~ Normal(theta, 1)",
        vec!["theta".into()],
        vec![
            Hyperparameter::new("mu0", -10.0, 10.0, false, false),
            Hyperparameter::new("sigma0", 0.0, 10.0, true, false),
        ],
        vec![Partition::cuts("y", 0, &[-1.0, 0.0, 1.0])],
        |l, _| Distribution::normal(l[0], l[1]),
        |l, r| vec![normal(r, l[0], l[1])],
        |t, r| vec![normal(r, t[0], 1.0)],
    )
    .expect("static entry")
}

fn hierarchical_normal() -> ModelEntry {
    ModelEntry::new(
        HIERARCHICAL_NORMAL,
        "a ~ Normal(mu_a, sigma_a), tau ~ Gamma(alpha_tau, beta_tau), a_j ~ Normal(a, tau), \
         y_j ~ Normal(a_j, 1) for 8 groups",
        vec!["a".into(), "tau".into()],
        vec![
            Hyperparameter::new("mu_a", -10.0, 10.0, false, false),
            Hyperparameter::new("sigma_a", 0.0, 10.0, true, false),
            Hyperparameter::new("alpha_tau", 0.0, 20.0, true, false),
            Hyperparameter::new("beta_tau", 0.0, 20.0, true, false),
        ],
        vec![Partition::cuts("y1", 0, &[-2.0, 0.0, 2.0])],
        |l, target| match target {
            "a" => Distribution::normal(l[0], l[1]),
            _ => Distribution::gamma(l[2], l[3]),
        },
        |l, r| {
            let a = normal(r, l[0], l[1]);
            let tau = Distribution::gamma(l[2], l[3]).expect("inside box").draw(r);
            let mut theta = vec![a, tau];
            theta.extend((0..HIERARCHICAL_GROUPS).map(|_| normal(r, a, tau)));
            theta
        },
        |t, r| t[2..].iter().map(|&aj| normal(r, aj, 1.0)).collect(),
    )
    .expect("static entry")
}

/// Design points `x_1 = (1, 0)`, `x_2 = (1, 1)` of the logistic entry.
pub fn logistic_design() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![1.0, 1.0]]
}

fn logistic_regression() -> ModelEntry {
    let design = logistic_design();
    let mean_marginals = |l: &[f64]| -> Vec<Distribution> {
        l.iter()
            .map(|&m| Distribution::beta(CMP_CONCENTRATION * m, CMP_CONCENTRATION * (1.0 - m)).expect("inside box"))
            .collect()
    };
    let inverse = cmp_inverse(&design).expect("static design is invertible");
    let draw_design = design.clone();
    ModelEntry::new(
        LOGISTIC_REGRESSION,
        "conditional means m_j ~ Beta(10 lambda_j, 10 (1 - lambda_j)) at x_1 = (1, 0), x_2 = (1, 1); \
         b = X^-1 logit(m); y_j ~ Bernoulli(logit^-1(x_j' b))",
        vec!["m1".into(), "m2".into()],
        vec![
            Hyperparameter::new("lambda1", 0.0, 1.0, true, true),
            Hyperparameter::new("lambda2", 0.0, 1.0, true, true),
        ],
        vec![
            Partition::labels("y1", &[0], &[&[0.0], &[1.0]]),
            Partition::labels("y2", &[1], &[&[0.0], &[1.0]]),
            Partition::labels("y", &[0, 1], &[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]),
        ],
        move |l, target| {
            let i = if target == "m1" { 0 } else { 1 };
            Ok(mean_marginals(l).swap_remove(i))
        },
        move |l, r| {
            let m: Vec<f64> = mean_marginals(l).iter().map(|d| d.draw(r)).collect();
            let g: Vec<f64> = m.iter().map(|&v| logit(v.clamp(1e-300, 1.0 - 1e-16))).collect();
            (&inverse * DVector::from_vec(g)).iter().copied().collect()
        },
        move |b, r| {
            draw_design
                .iter()
                .map(|x| bernoulli(r, expit(x.iter().zip(b).map(|(a, c)| a * c).sum())))
                .collect()
        },
    )
    .expect("static entry")
}

/// The built-in models.
pub fn builtin_registry() -> Vec<ModelEntry> {
    vec![beta_bernoulli(), normal_known_sigma(), hierarchical_normal(), logistic_regression()]
}

pub fn find_model(name: &str) -> Result<ModelEntry> {
    builtin_registry()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::UnknownModel(name.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionProbabilities {
    pub partition: String,
    pub probs: Vec<f64>,
    pub mc_samples: usize,
}

/// Monte Carlo estimate of `P(y in A_i | lambda)` from `s` joint draws.
pub fn prior_predictive_partition(
    m: &ModelEntry,
    lambda: &[f64],
    partition: &str,
    s: usize,
    seed: u64,
) -> Result<PartitionProbabilities> {
    m.check_lambda(lambda)?;
    let part = m.partition(partition)?;
    if s == 0 {
        return Err(Error::InvalidParams("need at least one Monte Carlo sample".into()));
    }
    let mut counts = vec![0u64; part.regions.len()];
    let mut r = rng(seed);
    for _ in 0..s {
        let y = m.draw_observation(lambda, &mut r);
        let i = part.locate(&y).ok_or_else(|| Error::PartitionNotExhaustive(format!("{y:?} in {partition}")))?;
        counts[i] += 1;
    }
    Ok(PartitionProbabilities {
        partition: partition.into(),
        probs: counts.iter().map(|&c| c as f64 / s as f64).collect(),
        mc_samples: s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Link {
    Identity,
    Logit,
    Log,
}

impl Link {
    pub fn apply(self, m: f64) -> Result<f64> {
        match self {
            Link::Identity if m.is_finite() => Ok(m),
            Link::Logit if m > 0.0 && m < 1.0 => Ok(logit(m)),
            Link::Log if m > 0.0 && m.is_finite() => Ok(m.ln()),
            _ => Err(Error::LinkDomain(m)),
        }
    }

    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::Logit => expit(eta),
            Link::Log => eta.exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmpSpec {
    /// Square design matrix, one row per elicited covariate combination.
    pub design: Vec<Vec<f64>>,
    pub link: Link,
    /// Elicited mean responses, one per design row.
    pub means: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_marginals: Option<Vec<Distribution>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmpOutput {
    pub point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<f64>>>,
}

const MAX_CONDITION: f64 = 1e12;

fn cmp_inverse(design: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let p = design.len();
    if p == 0 {
        return Err(Error::SingularDesign);
    }
    if let Some(row) = design.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch { expected: p, got: row.len() });
    }
    let x = DMatrix::from_fn(p, p, |i, j| design[i][j]);
    let sv = x.clone().svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if !(min > 0.0) || !(max / min < MAX_CONDITION) {
        return Err(Error::SingularDesign);
    }
    x.try_inverse().ok_or(Error::SingularDesign)
}

/// `b = X^-1 g(m)`, and with mean marginals, `n` draws of `b` obtained by
/// drawing each `m_i` independently.
pub fn cmp_transform(spec: &CmpSpec, n: Option<usize>, seed: u64) -> Result<CmpOutput> {
    let p = spec.design.len();
    if spec.means.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: spec.means.len() });
    }
    let inv = cmp_inverse(&spec.design)?;
    let g = spec.means.iter().map(|&m| spec.link.apply(m)).collect::<Result<Vec<f64>>>()?;
    let x = DMatrix::from_fn(p, p, |i, j| spec.design[i][j]);
    let point = solve_refined(&x, &inv, &g);

    let samples = match (&spec.mean_marginals, n) {
        (Some(margs), Some(n)) => {
            if margs.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: margs.len() });
            }
            if margs.iter().any(|d| !d.is_univariate()) {
                return Err(Error::NotUnivariate);
            }
            let mut r = rng(seed);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let g = margs
                    .iter()
                    .map(|d| spec.link.apply(d.draw(&mut r)))
                    .collect::<Result<Vec<f64>>>()?;
                out.push(solve_refined(&x, &inv, &g));
            }
            Some(out)
        }
        _ => None,
    };
    Ok(CmpOutput { point, samples })
}

/// `X^-1 g` followed by one step of iterative refinement.
fn solve_refined(x: &DMatrix<f64>, inv: &DMatrix<f64>, g: &[f64]) -> Vec<f64> {
    let g = DVector::from_column_slice(g);
    let b = inv * &g;
    let resid = &g - x * &b;
    (b + inv * resid).iter().copied().collect()
}
