//! Desk-scale evaluation: simulated experts with known ground truth,
//! injected biases, recovery metrics, and proper scoring rules.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::active::{select_next_query, CandidateSet, Discretization};
use crate::distributions::{kl_numeric, total_variation, Density, Distribution, Family};
use crate::error::{Error, Result};
use crate::fitting::{fit_roulette, fit_variable_interval};
use crate::numeric::{expit, linspace, logit, trapezoid};
use crate::predictive::{find_model, prior_predictive_partition, ModelEntry};
use crate::records::{Answer, ElicitationDataset, ElicitedStatement, Judgment, Query, QueryKind, Space};
use crate::rng::{derive_seed, rng};
use crate::supra_bayes::{
    elicited_prior, posterior, AnalystPrior, ElicitationNoise, ElicitedPriorMode, GridSpec,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bias {
    /// Answers the `0.5 + kappa (p - 0.5)` quantile when asked for `p`.
    Overconfidence { kappa: f64 },
    /// Rounds quantile answers to the nearest multiple of `step`.
    RoundingToGrid { step: f64 },
}

/// Noise on simulated answers. Zero disables the corresponding noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnswerNoise {
    pub quantile_noise: f64,
    pub probability_precision: f64,
    pub interval_prob_noise: f64,
}

fn default_mc() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedExpert {
    pub model: String,
    pub true_lambda: Vec<f64>,
    #[serde(default)]
    pub answer_noise: AnswerNoise,
    #[serde(default)]
    pub biases: Vec<Bias>,
    #[serde(default)]
    pub seed: u64,
    /// Parameter the expert is asked about; the model's first by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Hyperparameters for the responsiveness run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifted_lambda: Option<Vec<f64>>,
    /// Monte Carlo draws behind partition answers.
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
}

impl SimulatedExpert {
    pub fn new(model: impl Into<String>, true_lambda: Vec<f64>, answer_noise: AnswerNoise, seed: u64) -> Self {
        SimulatedExpert {
            model: model.into(),
            true_lambda,
            answer_noise,
            biases: Vec::new(),
            seed,
            target: None,
            shifted_lambda: None,
            mc_samples: default_mc(),
        }
    }

    pub fn validate(&self, m: &ModelEntry) -> Result<()> {
        m.check_lambda(&self.true_lambda)?;
        let n = &self.answer_noise;
        if [n.quantile_noise, n.probability_precision, n.interval_prob_noise]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidNoise("simulated noise must be finite and nonnegative".into()));
        }
        for b in &self.biases {
            match *b {
                Bias::Overconfidence { kappa } if !(kappa > 0.0 && kappa <= 1.0) => {
                    return Err(Error::InvalidParams(format!("kappa = {kappa} outside (0, 1]")))
                }
                Bias::RoundingToGrid { step } if !(step > 0.0 && step.is_finite()) => {
                    return Err(Error::InvalidParams(format!("rounding step {step}")))
                }
                _ => {}
            }
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidParams("mc_samples must be positive".into()));
        }
        Ok(())
    }

    fn target<'a>(&'a self, m: &'a ModelEntry) -> Result<&'a str> {
        match &self.target {
            Some(t) => Ok(t),
            None => m
                .parameter_names
                .first()
                .map(String::as_str)
                .ok_or_else(|| Error::UnknownTarget("model has no parameters".into())),
        }
    }

    /// The level actually answered when asked for `p`.
    pub fn answered_level(&self, p: f64) -> f64 {
        self.biases.iter().fold(p, |p, b| match b {
            Bias::Overconfidence { kappa } => 0.5 + kappa * (p - 0.5),
            Bias::RoundingToGrid { .. } => p,
        })
    }

    fn round(&self, v: f64) -> f64 {
        self.biases.iter().fold(v, |v, b| match b {
            Bias::RoundingToGrid { step } => (v / step).round() * step,
            Bias::Overconfidence { .. } => v,
        })
    }
}

/// Largest-remainder rounding of `masses` to integers summing to `budget`.
pub fn allocate_chips(masses: &[f64], budget: u32) -> Vec<u32> {
    let total: f64 = masses.iter().sum();
    let exact: Vec<f64> = masses.iter().map(|m| m / total * budget as f64).collect();
    let mut chips: Vec<u32> = exact.iter().map(|e| e.floor() as u32).collect();
    let mut left = budget - chips.iter().sum::<u32>();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        chips[i] += 1;
        left -= 1;
    }
    chips
}

/// The simulated expert's answer to `q`, deterministic in `(e.seed, q.id)`.
pub fn simulated_answer(e: &SimulatedExpert, m: &ModelEntry, q: &Query) -> Result<ElicitedStatement> {
    let mut r = rng(derive_seed(e.seed, 0, &q.id));
    let noise = &e.answer_noise;
    let marginal = || m.prior_marginal(&e.true_lambda, &q.target);
    let answer = match &q.kind {
        QueryKind::QuantileAt { p } => {
            let v = marginal()?.quantile(e.answered_level(*p))?;
            let eps = if noise.quantile_noise > 0.0 { noise.quantile_noise * r.sample::<f64, _>(StandardNormal) } else { 0.0 };
            Answer::QuantileValue(e.round(v + eps))
        }
        QueryKind::IntervalProbability { lower, upper } => {
            let d = marginal()?;
            let mut rho = d.cdf(*upper)? - d.cdf(*lower)?;
            if noise.interval_prob_noise > 0.0 {
                let z = logit(rho.clamp(1e-12, 1.0 - 1e-12));
                rho = expit(z + noise.interval_prob_noise * r.sample::<f64, _>(StandardNormal));
            }
            Answer::Probability(rho)
        }
        QueryKind::Roulette { edges, chip_budget } => {
            let d = marginal()?;
            let masses: Vec<f64> = edges.windows(2).map(|w| d.cdf_unchecked(w[1]) - d.cdf_unchecked(w[0])).collect();
            if masses.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Precondition("roulette bins carry no prior mass".into()));
            }
            Answer::ChipAllocation(allocate_chips(&masses, *chip_budget))
        }
        QueryKind::PlausibleBounds => {
            let d = marginal()?;
            Answer::Bounds {
                min: e.round(d.quantile(e.answered_level(0.01))?),
                max: e.round(d.quantile(e.answered_level(0.99))?),
            }
        }
        QueryKind::PartitionProbabilities { partition } => {
            let pi = prior_predictive_partition(m, &e.true_lambda, partition, e.mc_samples, derive_seed(e.seed, 1, &q.id))?;
            if noise.probability_precision > 0.0 {
                let eps = 1.0 / (2.0 * e.mc_samples as f64);
                let total = 1.0 + eps * pi.probs.len() as f64;
                let alpha = pi.probs.iter().map(|p| noise.probability_precision * (p + eps) / total).collect();
                Answer::SimplexVector(Distribution::dirichlet(alpha)?.draw_simplex(&mut r))
            } else {
                Answer::SimplexVector(pi.probs)
            }
        }
    };
    Ok(ElicitedStatement::new(q.id.clone(), answer))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoringRule {
    Logarithmic,
    Quadratic,
    Spherical,
}

fn integration_range(q: &Distribution) -> (f64, f64) {
    let (lo, hi) = q.support();
    let finite_end = |x: f64| x.is_finite() && q.pdf_unchecked(x).is_finite();
    (
        if finite_end(lo) { lo } else { q.quantile_unchecked(1e-9) },
        if finite_end(hi) { hi } else { q.quantile_unchecked(1.0 - 1e-9) },
    )
}

/// Score of the reported density `q` at the realized value `theta`.
pub fn score(rule: ScoringRule, q: &Distribution, theta: f64, grid_size: usize) -> Result<f64> {
    if !q.is_univariate() {
        return Err(Error::NotUnivariate);
    }
    let (lo, hi) = q.support();
    let at = q.pdf_unchecked(theta);
    if !(theta >= lo && theta <= hi) || !(at > 0.0) {
        return Err(Error::OutOfSupport(theta));
    }
    if rule == ScoringRule::Logarithmic {
        return Ok(at.ln());
    }
    if grid_size < 2 {
        return Err(Error::InvalidParams("grid_size must be at least 2".into()));
    }
    let (a, b) = integration_range(q);
    let xs = linspace(a, b, grid_size);
    let ys: Vec<f64> = xs.iter().map(|&x| q.pdf_unchecked(x).powi(2)).collect();
    let norm2 = trapezoid(&xs, &ys);
    Ok(match rule {
        ScoringRule::Quadratic => 2.0 * at - norm2,
        _ => at / norm2.sqrt(),
    })
}

/// Score of the probability vector `q` when outcome `k` occurs.
pub fn discrete_score(rule: ScoringRule, q: &[f64], k: usize) -> f64 {
    match rule {
        ScoringRule::Logarithmic => q[k].ln(),
        ScoringRule::Quadratic => 2.0 * q[k] - q.iter().map(|v| v * v).sum::<f64>(),
        ScoringRule::Spherical => q[k] / q.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// `sum_k p_k S(q, k)`, skipping outcomes of zero probability.
pub fn expected_discrete_score(rule: ScoringRule, p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .enumerate()
        .filter(|(_, pk)| **pk > 0.0)
        .map(|(k, pk)| pk * discrete_score(rule, q, k))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    FitVariableInterval,
    FitRoulette,
    SupraBayesRandom,
    SupraBayesActive,
}

fn default_mix() -> usize {
    100
}

fn default_kl_grid() -> usize {
    4001
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Posterior grid; 50 points per coordinate over the box by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub analyst_prior: AnalystPrior,
    /// Noise assumed by the analyst. Defaults to the expert's noise with
    /// zero entries replaced by small positive values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inference_noise: Option<ElicitationNoise>,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default = "default_mix")]
    pub mix_components: usize,
    /// Candidate queries for the supra-Bayesian methods; quantile queries
    /// on the target at nine levels by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Query>>,
    #[serde(default = "default_kl_grid")]
    pub kl_grid: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            grid: None,
            analyst_prior: AnalystPrior::Uniform,
            inference_noise: None,
            mc_samples: default_mc(),
            mix_components: default_mix(),
            candidates: None,
            kl_grid: default_kl_grid(),
        }
    }
}

/// Quantile levels offered to the supra-Bayesian methods by default.
pub const CANDIDATE_LEVELS: [f64; 9] = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub repeats: usize,
    /// Mean `KL(truth || elicited)` over repeats.
    pub validity_kl: f64,
    /// Mean total variation between truth and elicited prior.
    pub validity_tv: f64,
    pub validity_kl_per_repeat: Vec<f64>,
    /// Standard deviation across repeats of each estimated coordinate: the
    /// fitted parameters for fitting methods, the posterior mean of lambda
    /// otherwise.
    pub reliability_sd: Vec<f64>,
    /// Total variation between the priors elicited at the true and the
    /// shifted hyperparameters.
    pub responsiveness_tv: f64,
    pub queries_per_session: f64,
    pub wall_time_ms: f64,
}

struct SessionOutcome {
    prior: Box<dyn Density>,
    estimate: Vec<f64>,
    queries: usize,
}

fn inference_noise(e: &SimulatedExpert, opts: &EvalOptions) -> Result<ElicitationNoise> {
    if let Some(n) = opts.inference_noise {
        n.validate()?;
        return Ok(n);
    }
    let pos = |v: f64, floor: f64| if v > 0.0 { v } else { floor };
    let n = &e.answer_noise;
    ElicitationNoise::new(
        pos(n.quantile_noise, 1e-3),
        pos(n.probability_precision, 1e4),
        pos(n.interval_prob_noise, 1e-2),
    )
}

fn run_session(e: &SimulatedExpert, m: &ModelEntry, method: Method, n_queries: usize, opts: &EvalOptions) -> Result<SessionOutcome> {
    let target = e.target(m)?.to_string();
    let truth = m.prior_marginal(&e.true_lambda, &target)?;
    match method {
        Method::FitVariableInterval => {
            let family = truth.family();
            let mut tuples = Vec::with_capacity(n_queries);
            for k in 1..=n_queries {
                let p = k as f64 / (n_queries + 1) as f64;
                let q = Query::quantile(format!("q{k}"), target.clone(), p);
                if let Answer::QuantileValue(v) = simulated_answer(e, m, &q)?.answer {
                    tuples.push((p, v));
                }
            }
            let fit = fit_variable_interval(&tuples, family, None)?;
            let estimate = fit.distribution.params().to_vec();
            Ok(SessionOutcome { prior: Box::new(fit), estimate, queries: n_queries })
        }
        Method::FitRoulette => {
            let (lo, hi) = match truth.support() {
                (a, b) if a.is_finite() && b.is_finite() => (a, b),
                _ => (truth.quantile(0.001)?, truth.quantile(0.999)?),
            };
            let edges = linspace(lo, hi, 11);
            let q = Query {
                id: "roulette".into(),
                space: Space::Parameter,
                target: target.clone(),
                kind: QueryKind::Roulette { edges: edges.clone(), chip_budget: 20 },
            };
            let Answer::ChipAllocation(chips) = simulated_answer(e, m, &q)?.answer else {
                unreachable!("roulette queries get chip answers")
            };
            let fit = fit_roulette(&edges, &chips, Some(truth.family()))?;
            let estimate = fit.distribution.params().to_vec();
            Ok(SessionOutcome { prior: Box::new(fit), estimate, queries: 1 })
        }
        Method::SupraBayesRandom | Method::SupraBayesActive => {
            let noise = inference_noise(e, opts)?;
            let grid = opts.grid.clone().unwrap_or_else(|| GridSpec::uniform(m.dim(), 50));
            let cands = CandidateSet {
                queries: opts.candidates.clone().unwrap_or_else(|| {
                    CANDIDATE_LEVELS
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| Query::quantile(format!("c{i}"), target.clone(), p))
                        .collect()
                }),
                discretization: Discretization::default(),
            };
            cands.validate()?;
            let mut order: Vec<usize> = (0..cands.queries.len()).collect();
            order.shuffle(&mut rng(derive_seed(e.seed, 2, "random-order")));
            let mut data = ElicitationDataset::new();
            let mut issued: Vec<String> = Vec::new();
            let mut hp = posterior(m, &data, &opts.analyst_prior, &noise, &grid, opts.mc_samples, e.seed)?;
            for &next in order.iter().take(n_queries) {
                let q = if method == Method::SupraBayesActive {
                    select_next_query(m, &hp, &cands, &noise, opts.mc_samples, e.seed, &issued)?.query
                } else {
                    cands.queries[next].clone()
                };
                let z = simulated_answer(e, m, &q)?;
                issued.push(q.id.clone());
                data.push(Judgment { query: q, statement: z })?;
                hp = posterior(m, &data, &opts.analyst_prior, &noise, &grid, opts.mc_samples, e.seed)?;
            }
            let prior = elicited_prior(&hp, m, &target, ElicitedPriorMode::Mixture, opts.mix_components)?;
            Ok(SessionOutcome { prior: Box::new(prior), estimate: hp.mean()?, queries: issued.len() })
        }
    }
}

fn check_compatible(e: &SimulatedExpert, m: &ModelEntry, method: Method) -> Result<()> {
    let target = e.target(m)?;
    let family = m.prior_marginal(&e.true_lambda, target)?.family();
    match method {
        Method::FitVariableInterval | Method::FitRoulette if family.param_count().is_none() || family == Family::Uniform => {
            Err(Error::IncompatibleMethod(format!("{method:?} cannot fit a {family:?} prior")))
        }
        _ => Ok(()),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Default shift for the responsiveness run: each coordinate scaled by 1.5
/// and pulled back inside the box.
pub fn default_shift(m: &ModelEntry, lambda: &[f64]) -> Vec<f64> {
    m.hyperparameters
        .iter()
        .zip(lambda)
        .map(|(h, &l)| {
            let v = if l == 0.0 { 0.5 * (h.upper - h.lower) / 10.0 } else { l * 1.5 };
            let inner = 1e-6 * (h.upper - h.lower);
            v.clamp(h.lower + inner, h.upper - inner)
        })
        .collect()
}

/// Runs `repeats` independent sessions of `method` against the scenario and
/// one more against its shifted hyperparameters.
pub fn run_eval(
    scenario: &SimulatedExpert,
    method: Method,
    queries_per_session: usize,
    repeats: usize,
    seed: u64,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let m = find_model(&scenario.model)?;
    scenario.validate(&m)?;
    if repeats < 2 {
        return Err(Error::Precondition("reliability needs at least two repeats".into()));
    }
    if queries_per_session == 0 {
        return Err(Error::Precondition("sessions need at least one query".into()));
    }
    check_compatible(scenario, &m, method)?;
    let target = scenario.target(&m)?.to_string();
    let truth = m.prior_marginal(&scenario.true_lambda, &target)?;

    let start = Instant::now();
    let mut kls = Vec::with_capacity(repeats);
    let mut tvs = Vec::with_capacity(repeats);
    let mut estimates = Vec::with_capacity(repeats);
    let mut queries = 0;
    let mut first: Option<Box<dyn Density>> = None;
    for r in 0..repeats {
        let e = SimulatedExpert { seed: derive_seed(seed, r as u64, "repeat"), ..scenario.clone() };
        let out = run_session(&e, &m, method, queries_per_session, opts)?;
        kls.push(kl_numeric(&truth, out.prior.as_ref(), opts.kl_grid)?.max(0.0));
        tvs.push(total_variation(&truth, out.prior.as_ref(), opts.kl_grid)?);
        estimates.push(out.estimate);
        queries += out.queries;
        if first.is_none() {
            first = Some(out.prior);
        }
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    let shifted = scenario.shifted_lambda.clone().unwrap_or_else(|| default_shift(&m, &scenario.true_lambda));
    let e = SimulatedExpert { true_lambda: shifted, seed: derive_seed(seed, 0, "repeat"), ..scenario.clone() };
    e.validate(&m)?;
    let moved = run_session(&e, &m, method, queries_per_session, opts)?;
    let base = first.expect("at least two repeats ran");
    let responsiveness_tv = total_variation(base.as_ref(), moved.prior.as_ref(), opts.kl_grid)?;

    let dim = estimates[0].len();
    let reliability_sd = (0..dim)
        .map(|k| sd(&estimates.iter().map(|v| v[k]).collect::<Vec<_>>()))
        .collect();
    Ok(EvalReport {
        method,
        repeats,
        validity_kl: mean(&kls),
        validity_tv: mean(&tvs),
        validity_kl_per_repeat: kls,
        reliability_sd,
        responsiveness_tv,
        queries_per_session: queries as f64 / repeats as f64,
        wall_time_ms: elapsed / repeats as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictive::BETA_BERNOULLI;

    fn expert(noise: f64) -> SimulatedExpert {
        SimulatedExpert::new(BETA_BERNOULLI, vec![2.0, 5.0], AnswerNoise { quantile_noise: noise, ..AnswerNoise::default() }, 9)
    }

    #[test]
    fn noiseless_answers_are_exact() {
        let e = expert(0.0);
        let m = find_model(BETA_BERNOULLI).unwrap();
        let q = Query::quantile("q", "theta", 0.75);
        let z = simulated_answer(&e, &m, &q).unwrap();
        let truth = Distribution::beta(2.0, 5.0).unwrap().quantile(0.75).unwrap();
        assert_eq!(z.answer, Answer::QuantileValue(truth));
        let noisy = expert(0.05);
        assert_eq!(simulated_answer(&noisy, &m, &q).unwrap(), simulated_answer(&noisy, &m, &q).unwrap());
    }

    #[test]
    fn overconfidence_shrinks_levels() {
        let mut e = expert(0.0);
        e.biases.push(Bias::Overconfidence { kappa: 0.5 });
        assert!((e.answered_level(0.9) - 0.7).abs() < 1e-15);
        let m = find_model(BETA_BERNOULLI).unwrap();
        let at = |p| match simulated_answer(&e, &m, &Query::quantile(format!("q{p}"), "theta", p)).unwrap().answer {
            Answer::QuantileValue(v) => v,
            _ => unreachable!(),
        };
        let truth = Distribution::beta(2.0, 5.0).unwrap();
        assert!((at(0.9) - truth.quantile(0.7).unwrap()).abs() < 1e-12);
        let iqr = at(0.75) - at(0.25);
        assert!(iqr < truth.quantile(0.75).unwrap() - truth.quantile(0.25).unwrap());
    }

    #[test]
    fn rounding_bias() {
        let mut e = expert(0.0);
        e.biases.push(Bias::RoundingToGrid { step: 0.05 });
        let m = find_model(BETA_BERNOULLI).unwrap();
        let Answer::QuantileValue(v) = simulated_answer(&e, &m, &Query::quantile("q", "theta", 0.5)).unwrap().answer else { panic!() };
        assert!(((v / 0.05).round() * 0.05 - v).abs() < 1e-15);
    }

    #[test]
    fn chips_follow_largest_remainder() {
        assert_eq!(allocate_chips(&[0.5, 0.3, 0.2], 10), vec![5, 3, 2]);
        assert_eq!(allocate_chips(&[1.0, 1.0, 1.0], 10).iter().sum::<u32>(), 10);
        assert_eq!(allocate_chips(&[0.34, 0.33, 0.33], 2), vec![1, 1, 0]);
    }

    #[test]
    fn uniform_scores() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(score(ScoringRule::Logarithmic, &u, 0.5, 1001).unwrap().abs() < 1e-15);
        assert!((score(ScoringRule::Quadratic, &u, 0.5, 1001).unwrap() - 1.0).abs() < 1e-12);
        assert!((score(ScoringRule::Spherical, &u, 0.5, 1001).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(score(ScoringRule::Logarithmic, &u, 1.5, 1001).unwrap_err(), Error::OutOfSupport(1.5));
    }

    #[test]
    fn normal_quadratic_score() {
        // oracle: integral of N(0,1)^2 is 1 / (2 sqrt(pi))
        let n = Distribution::normal(0.0, 1.0).unwrap();
        let s = score(ScoringRule::Quadratic, &n, 0.0, 20_001).unwrap();
        let expect = 2.0 / (2.0 * std::f64::consts::PI).sqrt() - 1.0 / (2.0 * std::f64::consts::PI.sqrt());
        assert!((s - expect).abs() < 1e-8);
    }

    #[test]
    fn fit_variable_interval_eval_is_exact_without_noise() {
        let report = run_eval(&expert(0.0), Method::FitVariableInterval, 3, 2, 1, &EvalOptions::default()).unwrap();
        assert!(report.validity_kl < 1e-4, "{report:?}");
        assert!(report.reliability_sd.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn eval_preconditions() {
        assert!(matches!(run_eval(&expert(0.0), Method::FitRoulette, 1, 1, 0, &EvalOptions::default()), Err(Error::Precondition(_))));
        let mut bad = expert(0.0);
        bad.true_lambda = vec![-1.0, 1.0];
        assert!(matches!(run_eval(&bad, Method::FitRoulette, 1, 2, 0, &EvalOptions::default()), Err(Error::HyperparameterOutOfBox(_))));
    }
}
