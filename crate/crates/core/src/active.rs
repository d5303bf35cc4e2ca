//! Query selection by expected information gain about `lambda`.
//!
//! For a candidate query the expert's answer is discretized: scalar answers
//! into a fixed number of cells, partition answers into a Monte Carlo sample
//! drawn from the user model itself. The gain is the mutual information
//! between the discretized answer and `lambda` under the current posterior.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Density, Distribution, Mixture};
use crate::error::{Error, Result};
use crate::numeric::{expit, linspace, log_sum_exp, logit, normal_ln_pdf};
use crate::predictive::ModelEntry;
use crate::records::{Answer, Query, QueryKind};
use crate::rng::{derive_seed, rng};
use crate::supra_bayes::{dirichlet_answer_loglik, point_seed, smoothed_predictive, ElicitationNoise, HyperPosterior};

/// Numerical floor below which a computed gain is treated as zero.
pub const EIG_FLOOR: f64 = 1e-9;
const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// Cells for scalar answers, spread over the user model's central range.
    pub answer_cells: usize,
    /// Tail probability cut from each end of that range.
    pub tail: f64,
    /// Monte Carlo answers per partition query.
    pub partition_samples: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization { answer_cells: 33, tail: 0.001, partition_samples: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub queries: Vec<Query>,
    #[serde(default)]
    pub discretization: Discretization,
}

impl CandidateSet {
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        let c = CandidateSet { queries, discretization: Discretization::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.queries.is_empty() {
            return Err(Error::NoCandidates);
        }
        let d = &self.discretization;
        if d.answer_cells < 2 || d.partition_samples < 1 || !(d.tail > 0.0 && d.tail < 0.5) {
            return Err(Error::InvalidParams("degenerate answer discretization".into()));
        }
        for q in &self.queries {
            q.validate()?;
        }
        Ok(())
    }
}

/// Discretized user model `p(z | q)` together with the per-point answer
/// log-likelihoods it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserModelPredictive {
    pub answers: Vec<Answer>,
    /// Predictive mass of each answer. For partition queries the answers
    /// are draws from the predictive and each carries mass `1/M`.
    pub probs: Vec<f64>,
    /// `log p(answer_c | q, lambda_i)`, indexed `[c][i]`.
    #[serde(skip)]
    log_lik: Vec<Vec<f64>>,
}

/// Where a scalar answer lives: the per-point noise mean and spread.
struct ScalarAnswer {
    means: Vec<f64>,
    sd: f64,
    to_answer: fn(f64) -> Answer,
    to_scale: fn(f64) -> Result<f64>,
}

fn scalar_answer(m: &ModelEntry, hp: &HyperPosterior, q: &Query, noise: &ElicitationNoise) -> Result<ScalarAnswer> {
    let marginals: Vec<Distribution> = hp
        .points
        .iter()
        .map(|l| m.prior_marginal(l, &q.target))
        .collect::<Result<_>>()?;
    match q.kind {
        QueryKind::QuantileAt { p } => Ok(ScalarAnswer {
            means: marginals.iter().map(|d| d.quantile(p)).collect::<Result<_>>()?,
            sd: noise.quantile_noise,
            to_answer: Answer::QuantileValue,
            to_scale: Ok,
        }),
        QueryKind::IntervalProbability { lower, upper } => Ok(ScalarAnswer {
            means: marginals
                .iter()
                .map(|d| Ok(logit((d.cdf(upper)? - d.cdf(lower)?).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))))
                .collect::<Result<_>>()?,
            sd: noise.interval_prob_noise,
            to_answer: |x| Answer::Probability(expit(x)),
            to_scale: |rho| {
                if rho > 0.0 && rho < 1.0 {
                    Ok(logit(rho))
                } else {
                    Err(Error::ProbabilityOutOfRange(rho))
                }
            },
        }),
        _ => Err(Error::UnknownQueryKind(q.kind.name().into())),
    }
}

fn check_hp(hp: &HyperPosterior) -> Result<()> {
    if !hp.normalized {
        return Err(Error::Unnormalized);
    }
    if hp.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(())
}

/// Discretized predictive from cell values on the noise scale. Each grid
/// point's answer distribution is normalized over the cells, so the mixture
/// needs no further normalization.
fn scalar_predictive(hp: &HyperPosterior, sa: &ScalarAnswer, cells: &[f64]) -> UserModelPredictive {
    let per_point: Vec<Vec<f64>> = sa
        .means
        .iter()
        .map(|&mu| {
            let raw: Vec<f64> = cells.iter().map(|&v| normal_ln_pdf(v, mu, sa.sd)).collect();
            let z = log_sum_exp(&raw);
            raw.iter().map(|r| r - z).collect()
        })
        .collect();
    let log_lik: Vec<Vec<f64>> = (0..cells.len()).map(|c| per_point.iter().map(|row| row[c]).collect()).collect();
    let weights = hp.weights();
    let probs = log_lik
        .iter()
        .map(|row| row.iter().zip(&weights).map(|(l, w)| w * l.exp()).sum())
        .collect();
    UserModelPredictive { answers: cells.iter().map(|&v| (sa.to_answer)(v)).collect(), probs, log_lik }
}

fn auto_cells(hp: &HyperPosterior, sa: &ScalarAnswer, disc: &Discretization) -> Result<Vec<f64>> {
    let weights = hp.weights();
    let total: f64 = weights.iter().sum();
    let (w, comps): (Vec<f64>, Vec<Distribution>) = weights
        .iter()
        .zip(&sa.means)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, &mu)| Ok((w / total, Distribution::normal(mu, sa.sd)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let s: f64 = w.iter().sum();
    let mix = Mixture::new(w.iter().map(|x| x / s).collect(), comps)?;
    let (lo, hi) = (mix.inverse_cumulative(disc.tail), mix.inverse_cumulative(1.0 - disc.tail));
    Ok(linspace(lo, hi, disc.answer_cells))
}

fn partition_predictive(
    m: &ModelEntry,
    hp: &HyperPosterior,
    q: &Query,
    partition: &str,
    noise: &ElicitationNoise,
    disc: &Discretization,
    s: usize,
    seed: u64,
) -> Result<UserModelPredictive> {
    let pis: Vec<Vec<f64>> = hp
        .points
        .par_iter()
        .enumerate()
        .map(|(i, l)| smoothed_predictive(m, l, partition, s, point_seed(seed, i, &q.id)))
        .collect::<Result<_>>()?;
    let weights = hp.weights();
    let mut r = rng(derive_seed(seed, u64::MAX, &format!("answers/{}", q.id)));
    let mut answers = Vec::with_capacity(disc.partition_samples);
    for _ in 0..disc.partition_samples {
        let u: f64 = r.random();
        let mut acc = 0.0;
        let mut pick = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        let alpha: Vec<f64> = pis[pick].iter().map(|p| noise.probability_precision * p).collect();
        answers.push(Distribution::dirichlet(alpha)?.draw_simplex(&mut r));
    }
    let log_lik = answers
        .iter()
        .map(|rho| {
            pis.iter()
                .map(|pi| dirichlet_answer_loglik(pi, rho, noise.probability_precision))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mass = 1.0 / disc.partition_samples as f64;
    Ok(UserModelPredictive {
        probs: vec![mass; answers.len()],
        answers: answers.into_iter().map(Answer::SimplexVector).collect(),
        log_lik,
    })
}

/// The user model `p(z | q) = sum_lambda w(lambda) p(z | q, lambda)` on the
/// discretized answer space.
pub fn user_model_predictive(
    m: &ModelEntry,
    hp: &HyperPosterior,
    q: &Query,
    noise: &ElicitationNoise,
    disc: &Discretization,
    s: usize,
    seed: u64,
) -> Result<UserModelPredictive> {
    check_hp(hp)?;
    noise.validate()?;
    match &q.kind {
        QueryKind::PartitionProbabilities { partition } => {
            partition_predictive(m, hp, q, partition, noise, disc, s, seed)
        }
        _ => {
            let sa = scalar_answer(m, hp, q, noise)?;
            let cells = auto_cells(hp, &sa, disc)?;
            Ok(scalar_predictive(hp, &sa, &cells))
        }
    }
}

/// Like [`user_model_predictive`] for scalar queries, on caller-chosen
/// answer values (quantile values, or probabilities for interval queries).
pub fn user_model_predictive_on(
    m: &ModelEntry,
    hp: &HyperPosterior,
    q: &Query,
    noise: &ElicitationNoise,
    answers: &[f64],
) -> Result<UserModelPredictive> {
    check_hp(hp)?;
    noise.validate()?;
    if answers.is_empty() {
        return Err(Error::InvalidParams("empty answer grid".into()));
    }
    let sa = scalar_answer(m, hp, q, noise)?;
    let cells = answers.iter().map(|&a| (sa.to_scale)(a)).collect::<Result<Vec<f64>>>()?;
    Ok(scalar_predictive(hp, &sa, &cells))
}

impl UserModelPredictive {
    /// `sum_c p(c) KL(post_c || hp)`.
    pub fn information_gain(&self, hp: &HyperPosterior) -> f64 {
        self.log_lik
            .iter()
            .zip(&self.probs)
            .map(|(ll, pc)| {
                let joint: Vec<f64> = ll.iter().zip(&hp.log_weights).map(|(l, w)| l + w).collect();
                let evidence = log_sum_exp(&joint);
                if !evidence.is_finite() {
                    return 0.0;
                }
                let kl: f64 = joint
                    .iter()
                    .zip(ll)
                    .map(|(j, l)| {
                        let post = (j - evidence).exp();
                        if post > 0.0 {
                            post * (l - evidence)
                        } else {
                            0.0
                        }
                    })
                    .sum();
                pc * kl
            })
            .sum()
    }

    /// Posterior after observing answer `c`.
    pub fn condition(&self, hp: &HyperPosterior, c: usize) -> Result<HyperPosterior> {
        let lw = self.log_lik[c].iter().zip(&hp.log_weights).map(|(l, w)| l + w).collect();
        HyperPosterior::from_log_weights(hp.points.clone(), lw)
    }
}

/// Expected information gain of `q` about `lambda`.
pub fn expected_information_gain(
    m: &ModelEntry,
    hp: &HyperPosterior,
    q: &Query,
    noise: &ElicitationNoise,
    disc: &Discretization,
    s: usize,
    seed: u64,
) -> Result<f64> {
    Ok(user_model_predictive(m, hp, q, noise, disc, s, seed)?.information_gain(hp))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub query: Query,
    pub eig: f64,
    /// Gain of the best remaining candidate, if any.
    pub runner_up_eig: Option<f64>,
}

/// The non-excluded candidate of largest expected information gain. Ties go
/// to the lexicographically smallest query id.
pub fn select_next_query(
    m: &ModelEntry,
    hp: &HyperPosterior,
    cands: &CandidateSet,
    noise: &ElicitationNoise,
    s: usize,
    seed: u64,
    exclude: &[String],
) -> Result<Selection> {
    let open: Vec<&Query> = cands.queries.iter().filter(|q| !exclude.contains(&q.id)).collect();
    if open.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mut scored: Vec<(f64, &Query)> = open
        .par_iter()
        .map(|q| Ok((expected_information_gain(m, hp, q, noise, &cands.discretization, s, seed)?, *q)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
    Ok(Selection {
        query: scored[0].1.clone(),
        eig: scored[0].0,
        runner_up_eig: scored.get(1).map(|s| s.0),
    })
}
