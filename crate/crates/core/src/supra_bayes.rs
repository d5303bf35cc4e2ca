//! Elicitation as inference: a grid posterior over the hyperparameters
//! `lambda` of a model's parametric prior, given expert statements in the
//! parameter space and the observable space.
//!
//! The log weight of a grid point is
//!
//! ```text
//! log p(lambda) + sum_{D_theta} log p(z | q, lambda) + sum_{D_y} log p(z | q, lambda)
//! ```
//!
//! Parameter-space answers carry Gaussian noise (quantiles on the natural
//! scale, single probabilities on the logit scale). Partition answers follow
//! a Dirichlet whose mean is the Monte Carlo prior predictive.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{dirichlet_ln_pdf, Density, Distribution, Mixture};
use crate::error::{Error, Result};
use crate::numeric::{linspace, log_sum_exp, logit, normal_ln_pdf};
use crate::predictive::{prior_predictive_partition, ModelEntry};
use crate::records::{Answer, ElicitationDataset, Judgment, QueryKind, Space};
use crate::rng::{derive_seed, rng};

/// Largest number of grid points a posterior may use.
pub const MAX_GRID_POINTS: u128 = 1_000_000;
const PROB_FLOOR: f64 = 1e-12;
const ANSWER_PROB_FLOOR: f64 = 1e-6;

/// The analyst's prior over `lambda`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum AnalystPrior {
    /// Flat over the model's hyperparameter box.
    #[default]
    Uniform,
    /// Independent marginals, one per coordinate.
    Independent(Vec<Distribution>),
}

impl AnalystPrior {
    pub fn ln_density(&self, lambda: &[f64]) -> Result<f64> {
        match self {
            AnalystPrior::Uniform => Ok(0.0),
            AnalystPrior::Independent(ds) => {
                if ds.len() != lambda.len() {
                    return Err(Error::DimensionMismatch { expected: lambda.len(), got: ds.len() });
                }
                ds.iter().zip(lambda).map(|(d, &l)| d.ln_pdf(l)).sum()
            }
        }
    }

    /// One draw of `lambda`. Draws outside the box are rejected and redrawn.
    fn draw(&self, m: &ModelEntry, r: &mut crate::rng::Rng) -> Vec<f64> {
        loop {
            let l: Vec<f64> = match self {
                AnalystPrior::Uniform => m
                    .hyperparameters
                    .iter()
                    .map(|h| h.lower + (h.upper - h.lower) * r.random::<f64>())
                    .collect(),
                AnalystPrior::Independent(ds) => ds.iter().map(|d| d.draw(r)).collect(),
            };
            if m.check_lambda(&l).is_ok() {
                return l;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElicitationNoise {
    /// Standard deviation of quantile answers, on the scale of the target.
    pub quantile_noise: f64,
    /// Dirichlet concentration multiplier for partition answers.
    pub probability_precision: f64,
    /// Standard deviation of single probability answers on the logit scale.
    pub interval_prob_noise: f64,
}

impl ElicitationNoise {
    pub fn new(quantile_noise: f64, probability_precision: f64, interval_prob_noise: f64) -> Result<Self> {
        let n = ElicitationNoise { quantile_noise, probability_precision, interval_prob_noise };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quantile_noise", self.quantile_noise),
            ("probability_precision", self.probability_precision),
            ("interval_prob_noise", self.interval_prob_noise),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidNoise(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Empirical inter-quartile range of `target` under the analyst's prior
/// predictive over `theta`, from `n` draws.
pub fn analyst_iqr(m: &ModelEntry, prior: &AnalystPrior, target: &str, n: usize, seed: u64) -> Result<f64> {
    if n < 4 {
        return Err(Error::InvalidParams("need at least 4 draws".into()));
    }
    let mut r = rng(seed);
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let l = prior.draw(m, &mut r);
        xs.push(m.prior_marginal(&l, target)?.draw(&mut r));
    }
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| xs[((n - 1) as f64 * p).round() as usize];
    Ok(q(0.75) - q(0.25))
}

/// Per-coordinate grid sizes, with optional explicit ranges.
///
/// Without a range an axis covers the model's box. A closed box is spanned
/// end to end; otherwise the box is cut into `n` equal cells with one point
/// per cell, at the closed end of each cell (at the midpoint when both box
/// ends are open). With a range, points are evenly spaced and
/// include both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<Vec<(f64, f64)>>,
}

impl GridSpec {
    pub fn uniform(dim: usize, n: usize) -> Self {
        GridSpec { points: vec![n; dim], ranges: None }
    }

    pub fn with_ranges(points: Vec<usize>, ranges: Vec<(f64, f64)>) -> Self {
        GridSpec { points, ranges: Some(ranges) }
    }

    pub fn total(&self) -> u128 {
        self.points.iter().map(|&n| n as u128).product()
    }

    fn axes(&self, m: &ModelEntry) -> Result<Vec<Vec<f64>>> {
        if self.points.len() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), got: self.points.len() });
        }
        if self.points.contains(&0) {
            return Err(Error::EmptyGrid);
        }
        if self.total() > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge(self.total()));
        }
        let mut axes = Vec::with_capacity(m.dim());
        for (i, (h, &n)) in m.hyperparameters.iter().zip(&self.points).enumerate() {
            let axis = match &self.ranges {
                Some(ranges) => {
                    let (lo, hi) = *ranges.get(i).ok_or(Error::DimensionMismatch {
                        expected: m.dim(),
                        got: ranges.len(),
                    })?;
                    if n == 1 {
                        vec![0.5 * (lo + hi)]
                    } else {
                        linspace(lo, hi, n)
                    }
                }
                None if !h.lower_open && !h.upper_open && n > 1 => linspace(h.lower, h.upper, n),
                None => {
                    let step = (h.upper - h.lower) / n as f64;
                    let offset = match (h.lower_open, h.upper_open) {
                        (true, true) => 0.5,
                        (true, false) => 1.0,
                        (false, _) => 0.0,
                    };
                    (0..n)
                        .map(|k| {
                            if offset == 1.0 && k + 1 == n {
                                h.upper
                            } else {
                                h.lower + step * (k as f64 + offset)
                            }
                        })
                        .collect()
                }
            };
            if let Some(v) = axis.iter().find(|&&v| !h.contains(v)) {
                return Err(Error::HyperparameterOutOfBox(format!("{} = {v}", h.name)));
            }
            axes.push(axis);
        }
        Ok(axes)
    }

    /// All grid points in row-major order (last coordinate fastest).
    pub fn points(&self, m: &ModelEntry) -> Result<Vec<Vec<f64>>> {
        let axes = self.axes(m)?;
        let total = self.total() as usize;
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut p = vec![0.0; axes.len()];
            for d in (0..axes.len()).rev() {
                p[d] = axes[d][rem % axes[d].len()];
                rem /= axes[d].len();
            }
            out.push(p);
        }
        Ok(out)
    }
}

/// Weighted point cloud over `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperPosterior {
    pub points: Vec<Vec<f64>>,
    pub log_weights: Vec<f64>,
    pub normalized: bool,
}

impl HyperPosterior {
    /// Normalizes unnormalized log weights by log-sum-exp.
    pub fn from_log_weights(points: Vec<Vec<f64>>, log_weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if points.len() != log_weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: log_weights.len() });
        }
        let lse = log_sum_exp(&log_weights);
        if !lse.is_finite() {
            return Err(Error::Precondition("posterior has no finite mass on the grid".into()));
        }
        let log_weights = log_weights.iter().map(|w| w - lse).collect();
        Ok(HyperPosterior { points, log_weights, normalized: true })
    }

    /// A single point carrying all the mass.
    pub fn point_mass(lambda: Vec<f64>) -> Self {
        HyperPosterior { points: vec![lambda], log_weights: vec![0.0], normalized: true }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::Unnormalized)
        }
    }

    /// Posterior mean of `lambda`.
    pub fn mean(&self) -> Result<Vec<f64>> {
        self.require_normalized()?;
        let dim = self.points.first().map_or(0, Vec::len);
        let mut m = vec![0.0; dim];
        for (p, w) in self.points.iter().zip(self.weights()) {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += w * v;
            }
        }
        Ok(m)
    }

    /// Grid point of largest weight; the first one on ties.
    pub fn argmax(&self) -> &[f64] {
        let mut best = 0;
        for (i, w) in self.log_weights.iter().enumerate() {
            if *w > self.log_weights[best] {
                best = i;
            }
        }
        &self.points[best]
    }

    /// Shannon entropy of the grid weights, in nats.
    pub fn entropy(&self) -> f64 {
        self.log_weights
            .iter()
            .filter(|w| w.is_finite())
            .map(|&lw| -lw.exp() * lw)
            .sum()
    }

    /// Indices of the `k` heaviest points, heaviest first; ties keep grid order.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.log_weights[b].total_cmp(&self.log_weights[a]));
        idx.truncate(k);
        idx
    }
}

fn clamp_prob(p: f64, floor: f64) -> f64 {
    p.clamp(floor, 1.0 - floor)
}

/// Log-likelihood of one parameter-space judgment at `lambda`.
///
/// Quantile answers: `log N(v; Q_lambda(p), sigma_e)`. Interval
/// probabilities: `log N(logit rho; logit P_lambda(I), sigma_p)`. Bounds
/// carry no information here and contribute 0.
pub fn loglik_parameter_space(m: &ModelEntry, lambda: &[f64], j: &Judgment, noise: &ElicitationNoise) -> Result<f64> {
    if j.query.space != Space::Parameter {
        return Err(Error::WrongSpace);
    }
    let q = &j.query;
    match (&q.kind, &j.statement.answer) {
        (QueryKind::QuantileAt { p }, Answer::QuantileValue(v)) => {
            let d = m.prior_marginal(lambda, &q.target)?;
            Ok(normal_ln_pdf(*v, d.quantile(*p)?, noise.quantile_noise))
        }
        (QueryKind::IntervalProbability { lower, upper }, Answer::Probability(rho)) => {
            let d = m.prior_marginal(lambda, &q.target)?;
            let mass = clamp_prob(d.cdf(*upper)? - d.cdf(*lower)?, PROB_FLOOR);
            let rho = clamp_prob(*rho, ANSWER_PROB_FLOOR);
            Ok(normal_ln_pdf(logit(rho), logit(mass), noise.interval_prob_noise))
        }
        (QueryKind::PlausibleBounds, Answer::Bounds { .. }) => Ok(0.0),
        (kind, _) => Err(Error::UnsupportedStatement(format!("{} in supra-Bayesian mode", kind.name()))),
    }
}

/// Prior-predictive partition probabilities smoothed by `1/(2S)` per region
/// and renormalized, so every region keeps positive mass.
pub fn smoothed_predictive(m: &ModelEntry, lambda: &[f64], partition: &str, s: usize, seed: u64) -> Result<Vec<f64>> {
    let pp = prior_predictive_partition(m, lambda, partition, s, seed)?;
    let eps = 1.0 / (2.0 * s as f64);
    let total = 1.0 + eps * pp.probs.len() as f64;
    Ok(pp.probs.iter().map(|p| (p + eps) / total).collect())
}

/// Simplex answer with entries floored at 1e-6 and renormalized.
pub(crate) fn floored_simplex(rho: &[f64]) -> Vec<f64> {
    let floored: Vec<f64> = rho.iter().map(|r| r.max(ANSWER_PROB_FLOOR)).collect();
    let total: f64 = floored.iter().sum();
    floored.iter().map(|r| r / total).collect()
}

/// `log Dirichlet(rho; alpha_dir * pi_tilde)` for a smoothed predictive.
pub fn dirichlet_answer_loglik(pi_tilde: &[f64], rho: &[f64], precision: f64) -> Result<f64> {
    if pi_tilde.len() != rho.len() {
        return Err(Error::DimensionMismatch { expected: pi_tilde.len(), got: rho.len() });
    }
    let alpha: Vec<f64> = pi_tilde.iter().map(|p| precision * p).collect();
    Ok(dirichlet_ln_pdf(&alpha, &floored_simplex(rho)))
}

/// Log-likelihood of one partition judgment at `lambda`, using `s` Monte
/// Carlo draws seeded by `seed`.
pub fn loglik_observable_space(
    m: &ModelEntry,
    lambda: &[f64],
    j: &Judgment,
    noise: &ElicitationNoise,
    s: usize,
    seed: u64,
) -> Result<f64> {
    if j.query.space != Space::Observable {
        return Err(Error::WrongSpace);
    }
    let (QueryKind::PartitionProbabilities { partition }, Answer::SimplexVector(rho)) =
        (&j.query.kind, &j.statement.answer)
    else {
        return Err(Error::UnsupportedStatement(j.query.kind.name().into()));
    };
    let pi = smoothed_predictive(m, lambda, partition, s, seed)?;
    dirichlet_answer_loglik(&pi, rho, noise.probability_precision)
}

/// Seed of the Monte Carlo predictive at grid point `index` for `query_id`.
pub fn point_seed(seed: u64, index: usize, query_id: &str) -> u64 {
    derive_seed(seed, index as u64, query_id)
}

fn sorted_by_id(js: &[Judgment]) -> Vec<&Judgment> {
    let mut v: Vec<&Judgment> = js.iter().collect();
    v.sort_by(|a, b| a.query.id.cmp(&b.query.id));
    v
}

/// Unnormalized log weights `(log prior, parameter block, observable block)`
/// at each grid point. Within a block, judgments are summed in query-id
/// order.
pub fn log_weight_blocks(
    m: &ModelEntry,
    data: &ElicitationDataset,
    prior: &AnalystPrior,
    noise: &ElicitationNoise,
    points: &[Vec<f64>],
    s: usize,
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>> {
    noise.validate()?;
    let theta_block = sorted_by_id(&data.parameter_space);
    let y_block = sorted_by_id(&data.observable_space);
    for j in &theta_block {
        if j.query.space != Space::Parameter {
            return Err(Error::WrongSpace);
        }
    }
    for j in &y_block {
        if j.query.space != Space::Observable {
            return Err(Error::WrongSpace);
        }
    }
    points
        .par_iter()
        .enumerate()
        .map(|(i, lambda)| {
            let lp = prior.ln_density(lambda)?;
            let mut st = 0.0;
            for j in &theta_block {
                st += loglik_parameter_space(m, lambda, j, noise)?;
            }
            let mut sy = 0.0;
            for j in &y_block {
                sy += loglik_observable_space(m, lambda, j, noise, s, point_seed(seed, i, &j.query.id))?;
            }
            Ok((lp, st, sy))
        })
        .collect()
}

/// Grid posterior over `lambda` given both elicitation datasets.
pub fn posterior(
    m: &ModelEntry,
    data: &ElicitationDataset,
    prior: &AnalystPrior,
    noise: &ElicitationNoise,
    grid: &GridSpec,
    s: usize,
    seed: u64,
) -> Result<HyperPosterior> {
    let points = grid.points(m)?;
    if !data.observable_space.is_empty() && s == 0 {
        return Err(Error::InvalidParams("need at least one Monte Carlo sample".into()));
    }
    let blocks = log_weight_blocks(m, data, prior, noise, &points, s, seed)?;
    let lw = blocks.iter().map(|(lp, st, sy)| lp + st + sy).collect();
    HyperPosterior::from_log_weights(points, lw)
}

/// How to turn a posterior over `lambda` into a prior over `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElicitedPriorMode {
    /// `p(theta | mean lambda)`.
    PlugInMean,
    /// The heaviest grid points' priors, weights renormalized.
    Mixture,
}

/// A prior over one target parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElicitedPrior {
    Mixture(Mixture),
    Distribution(Distribution),
}

impl Density for ElicitedPrior {
    fn density(&self, x: f64) -> f64 {
        match self {
            ElicitedPrior::Mixture(m) => m.density(x),
            ElicitedPrior::Distribution(d) => d.density(x),
        }
    }

    fn cumulative(&self, x: f64) -> f64 {
        match self {
            ElicitedPrior::Mixture(m) => m.cumulative(x),
            ElicitedPrior::Distribution(d) => d.cumulative(x),
        }
    }

    fn inverse_cumulative(&self, p: f64) -> f64 {
        match self {
            ElicitedPrior::Mixture(m) => m.inverse_cumulative(p),
            ElicitedPrior::Distribution(d) => d.inverse_cumulative(p),
        }
    }

    fn ln_density(&self, x: f64) -> f64 {
        match self {
            ElicitedPrior::Mixture(m) => m.ln_density(x),
            ElicitedPrior::Distribution(d) => d.ln_density(x),
        }
    }
}

/// The elicited prior of `target` implied by `hp`.
pub fn elicited_prior(
    hp: &HyperPosterior,
    m: &ModelEntry,
    target: &str,
    mode: ElicitedPriorMode,
    mix_components: usize,
) -> Result<ElicitedPrior> {
    hp.require_normalized()?;
    match mode {
        ElicitedPriorMode::PlugInMean => Ok(ElicitedPrior::Distribution(m.prior_marginal(&hp.mean()?, target)?)),
        ElicitedPriorMode::Mixture => {
            if mix_components == 0 {
                return Err(Error::InvalidParams("mixture needs at least one component".into()));
            }
            let top = hp.top_k(mix_components);
            let raw: Vec<f64> = top.iter().map(|&i| hp.log_weights[i]).collect();
            let lse = log_sum_exp(&raw);
            let mut weights: Vec<f64> = raw.iter().map(|w| (w - lse).exp()).collect();
            // absorb rounding so the weights pass the sum-to-one check
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            let components = top
                .iter()
                .map(|&i| m.prior_marginal(&hp.points[i], target))
                .collect::<Result<Vec<_>>>()?;
            Ok(ElicitedPrior::Mixture(Mixture::new(weights, components)?))
        }
    }
}
