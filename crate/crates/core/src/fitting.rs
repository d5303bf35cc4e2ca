//! Classical fitting of a parametric prior to elicited summaries.
//!
//! Quantile judgments are matched in the quantile domain, interval and
//! roulette judgments in the probability domain. All fits run Nelder–Mead
//! over an unconstrained parameterization in which positive parameters are
//! optimized on the log scale.

use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::distributions::{Density, Distribution, Family};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Probabilities at which a fitted prior is summarized back to the expert.
pub const FEEDBACK_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub distribution: Distribution,
    /// Affine support `(min, max)` onto which a unit-interval Beta is
    /// stretched; `None` when the distribution is used as is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<(f64, f64)>,
    /// Final objective value.
    pub residual: f64,
    pub iterations: usize,
    /// `(p, quantile)` pairs shown at the feedback stage.
    pub feedback: Vec<(f64, f64)>,
}

impl FitResult {
    fn new(distribution: Distribution, support: Option<(f64, f64)>, residual: f64, iterations: usize) -> Self {
        let mut fit = FitResult { distribution, support, residual, iterations, feedback: Vec::new() };
        fit.feedback = feedback_summaries(&fit, &FEEDBACK_PROBS).expect("fixed feedback probabilities are valid");
        fit
    }

    fn to_unit(&self, x: f64) -> (f64, f64) {
        match self.support {
            Some((lo, hi)) => ((x - lo) / (hi - lo), hi - lo),
            None => (x, 1.0),
        }
    }
}

impl Density for FitResult {
    fn density(&self, x: f64) -> f64 {
        let (u, w) = self.to_unit(x);
        self.distribution.density(u) / w
    }

    fn cumulative(&self, x: f64) -> f64 {
        self.distribution.cumulative(self.to_unit(x).0)
    }

    fn inverse_cumulative(&self, p: f64) -> f64 {
        let u = self.distribution.inverse_cumulative(p);
        match self.support {
            Some((lo, hi)) => lo + u * (hi - lo),
            None => u,
        }
    }

    fn ln_density(&self, x: f64) -> f64 {
        let (u, w) = self.to_unit(x);
        self.distribution.ln_density(u) - w.ln()
    }
}

/// Quantiles of `d` at each of `ps`.
pub fn feedback_summaries<D: Density + ?Sized>(d: &D, ps: &[f64]) -> Result<Vec<(f64, f64)>> {
    ps.iter()
        .map(|&p| {
            if p > 0.0 && p < 1.0 {
                Ok((p, d.inverse_cumulative(p)))
            } else {
                Err(Error::ProbabilityOutOfRange(p))
            }
        })
        .collect()
}

fn check_fittable(family: Family) -> Result<usize> {
    match family.param_count() {
        Some(k) => Ok(k),
        None => Err(Error::UnsupportedFamily(family)),
    }
}

fn to_free(family: Family, params: &[f64]) -> Vec<f64> {
    match family {
        Family::Normal | Family::LogNormal => vec![params[0], params[1].ln()],
        Family::Beta | Family::Gamma => vec![params[0].ln(), params[1].ln()],
        Family::StudentT => vec![params[0].ln(), params[1], params[2].ln()],
        Family::Uniform => vec![params[0], (params[1] - params[0]).ln()],
        Family::Histogram | Family::Dirichlet => unreachable!("not fittable"),
    }
}

fn from_free(family: Family, x: &[f64]) -> Result<Distribution> {
    let params = match family {
        Family::Normal | Family::LogNormal => vec![x[0], x[1].exp()],
        Family::Beta | Family::Gamma => vec![x[0].exp(), x[1].exp()],
        Family::StudentT => vec![x[0].exp(), x[1], x[2].exp()],
        Family::Uniform => vec![x[0], x[0] + x[1].exp()],
        Family::Histogram | Family::Dirichlet => return Err(Error::UnsupportedFamily(family)),
    };
    Distribution::new(family, params)
}

fn std_normal_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * p - 1.0)
}

/// Moment-style starting point from a location and spread estimate.
fn init_from_moments(family: Family, mean: f64, sd: f64, log_mean: f64, log_sd: f64) -> Vec<f64> {
    let sd = if sd.is_finite() && sd > 0.0 { sd } else { 1.0 };
    match family {
        Family::Normal => vec![mean, sd],
        Family::StudentT => vec![5.0, mean, sd],
        Family::LogNormal => {
            let s = if log_sd.is_finite() && log_sd > 0.0 { log_sd } else { 1.0 };
            vec![if log_mean.is_finite() { log_mean } else { 0.0 }, s]
        }
        Family::Beta => {
            let m = mean.clamp(0.02, 0.98);
            let var = (sd * sd).min(0.9 * m * (1.0 - m));
            let c = m * (1.0 - m) / var - 1.0;
            vec![m * c, (1.0 - m) * c]
        }
        Family::Gamma => {
            if mean > 0.0 {
                vec![(mean / sd).powi(2), mean / (sd * sd)]
            } else {
                vec![1.0, 1.0]
            }
        }
        Family::Uniform => vec![mean - 3f64.sqrt() * sd, mean + 3f64.sqrt() * sd],
        Family::Histogram | Family::Dirichlet => unreachable!("not fittable"),
    }
}

fn minimize(family: Family, start: Vec<f64>, objective: impl Fn(&Distribution) -> f64) -> Result<(Distribution, f64, usize)> {
    let start = match Distribution::new(family, start) {
        Ok(d) => to_free(family, d.params()),
        Err(e) => return Err(Error::OptimizationFailed(format!("bad starting point: {e}"))),
    };
    let f = |x: &[f64]| match from_free(family, x) {
        Ok(d) => objective(&d),
        Err(_) => f64::INFINITY,
    };
    let m = nelder_mead(f, &start, NelderMeadOptions::default())?;
    let d = from_free(family, &m.x)?;
    Ok((d, m.value, m.iterations))
}

/// Variable-interval (quantile) fit: minimizes `sum_i (Q_d(p_i) - v_i)^2`.
///
/// `bounds` act as hard support limits: a Beta is stretched onto them, and
/// for other families every elicited value must lie inside.
pub fn fit_variable_interval(tuples: &[(f64, f64)], family: Family, bounds: Option<(f64, f64)>) -> Result<FitResult> {
    let k = check_fittable(family)?;
    let mut pts = tuples.to_vec();
    if let Some(&(p, _)) = pts.iter().find(|(p, _)| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if pts.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::Precondition("quantile values must be finite".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Precondition("probability levels must be distinct".into()));
    }
    if pts.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(Error::NonMonotoneQuantiles);
    }
    if pts.len() < k {
        return Err(Error::TooFewSummaries { needed: k, got: pts.len() });
    }
    if let Some((lo, hi)) = bounds {
        if !(lo < hi) {
            return Err(Error::Precondition("bounds need min < max".into()));
        }
        if pts.iter().any(|&(_, v)| v < lo || v > hi) {
            return Err(Error::Precondition("elicited quantile outside the plausible bounds".into()));
        }
    }
    let support = match family {
        Family::Beta => Some(bounds.unwrap_or((0.0, 1.0))),
        _ => None,
    };
    let (scale_lo, width) = support.map_or((0.0, 1.0), |(lo, hi)| (lo, hi - lo));
    let unit: Vec<(f64, f64)> = pts.iter().map(|&(p, v)| (p, (v - scale_lo) / width)).collect();
    if family == Family::Beta && unit.iter().any(|&(_, u)| u <= 0.0 || u >= 1.0) {
        return Err(Error::Precondition("beta quantiles must lie strictly inside the support".into()));
    }

    let (first, last) = (unit[0], unit[unit.len() - 1]);
    let median = interpolate_at(&unit, 0.5);
    let spread = (last.1 - first.1) / (std_normal_quantile(last.0) - std_normal_quantile(first.0));
    let start = if family == Family::Uniform {
        let slope = (last.1 - first.1) / (last.0 - first.0);
        let a = first.1 - first.0 * slope;
        vec![a, a + slope]
    } else {
        let logs: Vec<(f64, f64)> = unit.iter().map(|&(p, v)| (p, v.ln())).collect();
        let log_spread = (logs[logs.len() - 1].1 - logs[0].1)
            / (std_normal_quantile(last.0) - std_normal_quantile(first.0));
        init_from_moments(family, median, spread, interpolate_at(&logs, 0.5), log_spread)
    };

    let objective = |d: &Distribution| -> f64 {
        unit.iter()
            .map(|&(p, v)| (d.quantile_unchecked(p) - v).powi(2))
            .sum::<f64>()
    };
    let (d, value, iterations) = minimize(family, start, objective)?;
    Ok(FitResult::new(d, support, value * width * width, iterations))
}

/// Linear interpolation of `(p, v)` points at level `at`, extrapolating from
/// the end segments.
fn interpolate_at(pts: &[(f64, f64)], at: f64) -> f64 {
    if pts.len() == 1 {
        return pts[0].1;
    }
    let i = pts.partition_point(|&(p, _)| p < at).clamp(1, pts.len() - 1);
    let (a, b) = (pts[i - 1], pts[i]);
    a.1 + (at - a.0) * (b.1 - a.1) / (b.0 - a.0)
}

/// A probability judgment about a closed interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalJudgment {
    pub lower: f64,
    pub upper: f64,
    pub probability: f64,
}

/// Fixed-interval fit: minimizes `sum_i (P_d(I_i) - rho_i)^2`. A Beta is
/// fitted on the support stretched to `bounds`; `mode` seeds the search.
pub fn fit_fixed_interval(
    bounds: (f64, f64),
    mode: f64,
    probs: &[IntervalJudgment],
    family: Family,
) -> Result<FitResult> {
    check_fittable(family)?;
    let (lo, hi) = bounds;
    if !(lo < mode && mode < hi) {
        return Err(Error::Precondition("need min < mode < max".into()));
    }
    if probs.is_empty() {
        return Err(Error::EmptyProbs);
    }
    for j in probs {
        if !(j.lower < j.upper) || j.lower < lo || j.upper > hi {
            return Err(Error::Precondition(format!(
                "interval [{}, {}] not inside bounds [{lo}, {hi}]",
                j.lower, j.upper
            )));
        }
        if !(0.0..=1.0).contains(&j.probability) {
            return Err(Error::Precondition(format!("probability {} outside [0, 1]", j.probability)));
        }
    }
    let width = hi - lo;
    let support = (family == Family::Beta).then_some(bounds);
    let to_unit = |x: f64| if support.is_some() { (x - lo) / width } else { x };
    let unit: Vec<(f64, f64, f64)> = probs
        .iter()
        .map(|j| (to_unit(j.lower), to_unit(j.upper), j.probability))
        .collect();
    let start = match family {
        Family::Beta => {
            let m = to_unit(mode);
            vec![1.0 + 4.0 * m, 1.0 + 4.0 * (1.0 - m)]
        }
        Family::Normal => vec![mode, width / 4.0],
        Family::StudentT => vec![5.0, mode, width / 4.0],
        Family::LogNormal if mode > 0.0 => vec![mode.ln(), 0.5],
        Family::Gamma if mode > 0.0 => vec![2.0, 1.0 / mode],
        Family::LogNormal | Family::Gamma => {
            return Err(Error::Precondition("positive family needs a positive mode".into()))
        }
        Family::Uniform => vec![lo, hi],
        Family::Histogram | Family::Dirichlet => unreachable!("checked above"),
    };
    let objective = |d: &Distribution| -> f64 {
        unit.iter()
            .map(|&(a, b, rho)| (d.cdf_unchecked(b) - d.cdf_unchecked(a) - rho).powi(2))
            .sum::<f64>()
    };
    let (d, value, iterations) = minimize(family, start, objective)?;
    Ok(FitResult::new(d, support, value, iterations))
}

/// Roulette (chips-in-bins) fit. Without a family the chip proportions are
/// returned as a histogram; with one, bin masses are matched by least
/// squares.
pub fn fit_roulette(edges: &[f64], chips: &[u32], family: Option<Family>) -> Result<FitResult> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("roulette edges must be strictly ascending".into()));
    }
    if chips.len() + 1 != edges.len() {
        return Err(Error::Precondition(format!(
            "{} bins but {} chip counts",
            edges.len() - 1,
            chips.len()
        )));
    }
    let total: u64 = chips.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return Err(Error::ZeroChips);
    }
    let props: Vec<f64> = chips.iter().map(|&c| c as f64 / total as f64).collect();
    let Some(family) = family else {
        let hist = Distribution::histogram(edges.to_vec(), props)?;
        return Ok(FitResult::new(hist, None, 0.0, 0));
    };
    let k = check_fittable(family)?;
    if k >= 2 && chips.iter().filter(|&&c| c > 0).count() == 1 {
        return Err(Error::DegenerateAllocation);
    }
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    let support = match family {
        Family::Beta => Some((lo, hi)),
        _ => None,
    };
    let to_unit = |x: f64| match support {
        Some(_) => (x - lo) / (hi - lo),
        None => x,
    };
    let unit_edges: Vec<f64> = edges.iter().map(|&e| to_unit(e)).collect();

    // moments of the chip histogram, uniform within bins
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut log_mean = 0.0;
    let mut log_second = 0.0;
    for (w, pr) in unit_edges.windows(2).zip(&props) {
        let (a, b) = (w[0], w[1]);
        mean += pr * 0.5 * (a + b);
        second += pr * (a * a + a * b + b * b) / 3.0;
        let mid = 0.5 * (a + b);
        log_mean += pr * mid.ln();
        log_second += pr * mid.ln().powi(2);
    }
    let sd = (second - mean * mean).max(0.0).sqrt();
    let log_sd = (log_second - log_mean * log_mean).max(0.0).sqrt();
    let start = init_from_moments(family, mean, sd, log_mean, log_sd);

    let objective = |d: &Distribution| -> f64 {
        unit_edges
            .windows(2)
            .zip(&props)
            .map(|(w, pr)| (d.cdf_unchecked(w[1]) - d.cdf_unchecked(w[0]) - pr).powi(2))
            .sum::<f64>()
    };
    let (d, value, iterations) = minimize(family, start, objective)?;
    Ok(FitResult::new(d, support, value, iterations))
}

/// Reconciles elicited Beta marginals into one Dirichlet: normalized marginal
/// means times the average marginal concentration.
pub fn reconcile_dirichlet(marginals: &[Distribution]) -> Result<Distribution> {
    if marginals.len() < 2 {
        return Err(Error::TooFewMarginals);
    }
    let mut means = Vec::with_capacity(marginals.len());
    let mut conc = 0.0;
    for d in marginals {
        if d.family() != Family::Beta {
            return Err(Error::InvalidParams(format!("expected beta marginals, got {:?}", d.family())));
        }
        let (a, b) = (d.params()[0], d.params()[1]);
        means.push(a / (a + b));
        conc += a + b;
    }
    let c = conc / marginals.len() as f64;
    let total: f64 = means.iter().sum();
    Distribution::dirichlet(means.iter().map(|m| c * m / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn normal_from_quartiles() {
        // oracle: sigma = IQR / 1.3489795, mu = median
        let fit = fit_variable_interval(
            &[(0.25, -0.674_489_8), (0.5, 0.0), (0.75, 0.674_489_8)],
            Family::Normal,
            None,
        )
        .unwrap();
        let p = fit.distribution.params();
        let sigma_oracle = (2.0 * 0.674_489_8) / 1.348_979_5;
        assert!(close(p[0], 0.0, 1e-4), "{p:?}");
        assert!(close(p[1], sigma_oracle, 1e-3), "{p:?}");
        assert!(close(p[1], 1.0, 1e-3));
    }

    #[test]
    fn flat_beta_from_uniform_quartiles() {
        let fit = fit_variable_interval(&[(0.25, 0.25), (0.5, 0.5), (0.75, 0.75)], Family::Beta, None).unwrap();
        let p = fit.distribution.params();
        assert!(close(p[0], 1.0, 0.01) && close(p[1], 1.0, 0.01), "{p:?}");
    }

    #[test]
    fn equal_quantiles_rejected() {
        assert_eq!(
            fit_variable_interval(&[(0.25, 1.0), (0.75, 1.0)], Family::Normal, None).unwrap_err(),
            Error::NonMonotoneQuantiles
        );
        assert_eq!(
            fit_variable_interval(&[(0.5, 1.0)], Family::Normal, None).unwrap_err(),
            Error::TooFewSummaries { needed: 2, got: 1 }
        );
        assert!(matches!(
            fit_variable_interval(&[(0.5, 1.0), (0.7, 2.0)], Family::Histogram, None),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn scaled_beta_with_bounds() {
        let truth = Distribution::beta(2.0, 3.0).unwrap();
        let tuples: Vec<(f64, f64)> = [0.25, 0.5, 0.75]
            .iter()
            .map(|&p| (p, 10.0 + 20.0 * truth.quantile(p).unwrap()))
            .collect();
        let fit = fit_variable_interval(&tuples, Family::Beta, Some((10.0, 30.0))).unwrap();
        assert_eq!(fit.support, Some((10.0, 30.0)));
        let p = fit.distribution.params();
        assert!(close(p[0], 2.0, 2e-3) && close(p[1], 3.0, 3e-3), "{p:?}");
        let med = fit.inverse_cumulative(0.5);
        assert!(close(med, tuples[1].1, 1e-5));
    }

    #[test]
    fn residual_not_worse_than_truth_with_noise() {
        let truth = Distribution::gamma(3.0, 2.0).unwrap();
        let noise = [0.01, -0.02, 0.015, -0.005, 0.02];
        let ps = [0.1, 0.3, 0.5, 0.7, 0.9];
        let tuples: Vec<(f64, f64)> =
            ps.iter().zip(noise).map(|(&p, e)| (p, truth.quantile(p).unwrap() + e)).collect();
        let fit = fit_variable_interval(&tuples, Family::Gamma, None).unwrap();
        let truth_resid: f64 = tuples.iter().map(|&(p, v)| (truth.quantile(p).unwrap() - v).powi(2)).sum();
        assert!(fit.residual <= truth_resid + 1e-12);
    }

    #[test]
    fn fixed_interval_recovers_beta22() {
        // oracle: exact Beta(2,2) masses P(0 < theta < c), F(c) = 3c^2 - 2c^3
        let cuts = [0.25, 0.375, 0.5, 0.625, 0.75];
        let probs: Vec<IntervalJudgment> = cuts
            .iter()
            .map(|&c: &f64| IntervalJudgment { lower: 0.0, upper: c, probability: 3.0 * c * c - 2.0 * c.powi(3) })
            .collect();
        let fit = fit_fixed_interval((0.0, 1.0), 0.5, &probs, Family::Beta).unwrap();
        let p = fit.distribution.params();
        assert!(close(p[0], 2.0, 0.05) && close(p[1], 2.0, 0.05), "{p:?}");
    }

    #[test]
    fn fixed_interval_uniform_masses() {
        let cuts = [0.2, 0.4, 0.5, 0.6, 0.8];
        let probs: Vec<IntervalJudgment> =
            cuts.iter().map(|&c| IntervalJudgment { lower: 0.0, upper: c, probability: c }).collect();
        let fit = fit_fixed_interval((0.0, 1.0), 0.3, &probs, Family::Beta).unwrap();
        let p = fit.distribution.params();
        assert!(close(p[0], 1.0, 0.05) && close(p[1], 1.0, 0.05), "{p:?}");
    }

    #[test]
    fn fixed_interval_preconditions() {
        let outside = [IntervalJudgment { lower: -1.0, upper: 0.5, probability: 0.3 }];
        assert!(matches!(fit_fixed_interval((0.0, 1.0), 0.5, &outside, Family::Beta), Err(Error::Precondition(_))));
        assert_eq!(fit_fixed_interval((0.0, 1.0), 0.5, &[], Family::Beta).unwrap_err(), Error::EmptyProbs);
        let ok = [IntervalJudgment { lower: 0.0, upper: 0.5, probability: 0.3 }];
        assert!(matches!(fit_fixed_interval((0.0, 1.0), 1.5, &ok, Family::Beta), Err(Error::Precondition(_))));
    }

    #[test]
    fn roulette_histogram_and_errors() {
        let fit = fit_roulette(&[0.0, 0.25, 0.5, 0.75, 1.0], &[5, 5, 5, 5], None).unwrap();
        assert_eq!(fit.distribution.family(), Family::Histogram);
        assert_eq!(fit.distribution.params(), &[0.25; 4]);
        assert_eq!(
            fit_roulette(&[0.0, 0.25, 0.5, 0.75, 1.0], &[20, 0, 0, 0], Some(Family::Normal)).unwrap_err(),
            Error::DegenerateAllocation
        );
        assert_eq!(fit_roulette(&[0.0, 1.0], &[0], None).unwrap_err(), Error::ZeroChips);
    }

    #[test]
    fn roulette_histogram_probs_are_chip_fractions() {
        let chips = [3u32, 0, 7, 1, 9];
        let fit = fit_roulette(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &chips, None).unwrap();
        for (p, c) in fit.distribution.params().iter().zip(chips) {
            assert_eq!(*p, c as f64 / 20.0);
        }
    }

    #[test]
    fn dirichlet_reconciliation() {
        // oracle: Dirichlet(2,2,2) has marginals Beta(2, 6 - 2) = Beta(2,4)
        let b = Distribution::beta(2.0, 4.0).unwrap();
        let d = reconcile_dirichlet(&[b.clone(), b.clone(), b]).unwrap();
        for a in d.params() {
            assert!(close(*a, 2.0, 1e-12));
        }
        let flat = Distribution::beta(1.0, 1.0).unwrap();
        let d = reconcile_dirichlet(&[flat.clone(), flat.clone()]).unwrap();
        assert_eq!(d.params(), &[1.0, 1.0]);
        assert_eq!(reconcile_dirichlet(&[flat]).unwrap_err(), Error::TooFewMarginals);
    }

    #[test]
    fn reconciled_means_match_normalized_inputs() {
        let ms = [Distribution::beta(1.0, 3.0).unwrap(), Distribution::beta(3.0, 3.0).unwrap(), Distribution::beta(2.0, 9.0).unwrap()];
        let d = reconcile_dirichlet(&ms).unwrap();
        let a0: f64 = d.params().iter().sum();
        let raw: Vec<f64> = ms.iter().map(|m| m.mean().unwrap()).collect();
        let tot: f64 = raw.iter().sum();
        for (a, m) in d.params().iter().zip(raw) {
            assert!(close(a / a0, m / tot, 1e-15));
        }
    }

    #[test]
    fn feedback_quantiles() {
        let n = Distribution::normal(0.0, 1.0).unwrap();
        let fb = feedback_summaries(&n, &[0.25, 0.5, 0.75]).unwrap();
        assert!(close(fb[0].1, -0.674_489_8, 1e-7) && close(fb[1].1, 0.0, 1e-12) && close(fb[2].1, 0.674_489_8, 1e-7));
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let fb = feedback_summaries(&u, &[0.1, 0.9]).unwrap();
        assert!(close(fb[0].1, 0.1, 1e-15) && close(fb[1].1, 0.9, 1e-15));
        assert_eq!(feedback_summaries(&u, &[0.5, 1.0]).unwrap_err(), Error::ProbabilityOutOfRange(1.0));
    }
}
