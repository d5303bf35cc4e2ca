//! Mathematical aggregation of several experts' priors.

use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Mixture};
use crate::error::{Error, Result};
use crate::numeric::{linspace, trapezoid};

const WEIGHT_TOL: f64 = 1e-12;
/// Each prior contributes its central 0.9999 range to the log-pool grid.
const POOL_TAIL: f64 = 0.5e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedOpinions {
    priors: Vec<Distribution>,
    weights: Vec<f64>,
}

impl WeightedOpinions {
    pub fn new(priors: Vec<Distribution>, weights: Vec<f64>) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::InvalidWeights("need at least one prior".into()));
        }
        if priors.len() != weights.len() {
            return Err(Error::InvalidWeights(format!("{} priors but {} weights", priors.len(), weights.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        if priors.iter().any(|d| !d.is_univariate()) {
            return Err(Error::NotUnivariate);
        }
        Ok(WeightedOpinions { priors, weights })
    }

    /// Every expert weighted `1/n`.
    pub fn equal(priors: Vec<Distribution>) -> Result<Self> {
        let n = priors.len().max(1);
        Self::new(priors, vec![1.0 / n as f64; n])
    }

    pub fn priors(&self) -> &[Distribution] {
        &self.priors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `sum_i w_i p_i(theta)`.
pub fn linear_pool(w: &WeightedOpinions) -> Result<Mixture> {
    // 1/n weights can miss 1 by a few ulps; the mixture re-checks the sum
    let total: f64 = w.weights.iter().sum();
    Mixture::new(w.weights.iter().map(|x| x / total).collect(), w.priors.clone())
}

/// `prod_i p_i(theta)^{w_i}`, normalized by the trapezoid rule on
/// `grid_size` nodes spanning the union of the priors' central ranges, and
/// returned as a histogram on those nodes.
pub fn log_pool(w: &WeightedOpinions, grid_size: usize) -> Result<Distribution> {
    if grid_size < 3 {
        return Err(Error::InvalidParams("grid_size must be at least 3".into()));
    }
    let lo = w.priors.iter().map(|d| d.quantile_unchecked(POOL_TAIL)).fold(f64::INFINITY, f64::min);
    let hi = w.priors.iter().map(|d| d.quantile_unchecked(1.0 - POOL_TAIL)).fold(f64::NEG_INFINITY, f64::max);
    let xs = linspace(lo, hi, grid_size);
    let log_dens: Vec<f64> = xs
        .iter()
        .map(|&x| {
            w.priors
                .iter()
                .zip(&w.weights)
                .filter(|(_, &wi)| wi > 0.0)
                .map(|(d, wi)| wi * d.ln_pdf_unchecked(x))
                .sum::<f64>()
        })
        .collect();
    let peak = log_dens.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::EmptyOverlap);
    }
    let ys: Vec<f64> = log_dens
        .iter()
        .map(|l| if l.is_nan() { 0.0 } else { (l - peak).exp() })
        .collect();
    let z = trapezoid(&xs, &ys);
    if !(z > 0.0) {
        return Err(Error::EmptyOverlap);
    }
    // bin mass by the trapezoid rule, so the histogram integrates exactly to 1
    let mut probs: Vec<f64> = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]) / z)
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Distribution::histogram(xs, probs)
}
