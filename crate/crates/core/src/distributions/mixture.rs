//! Finite weighted mixtures of univariate distributions.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Density, Distribution};
use crate::error::{Error, Result};
use crate::numeric::{invert_monotone, log_sum_exp};
use crate::rng::rng;

const WEIGHT_TOL: f64 = 1e-12;

/// `sum_i w_i p_i(x)`. Serializes as
/// `{"family": "mixture", "weights": [...], "components": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct Mixture {
    weights: Vec<f64>,
    components: Vec<Distribution>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureRepr {
    family: String,
    weights: Vec<f64>,
    components: Vec<Distribution>,
}

impl TryFrom<MixtureRepr> for Mixture {
    type Error = Error;
    fn try_from(r: MixtureRepr) -> Result<Self> {
        if r.family != "mixture" {
            return Err(Error::InvalidParams(format!("expected family \"mixture\", got {:?}", r.family)));
        }
        Mixture::new(r.weights, r.components)
    }
}

impl From<Mixture> for MixtureRepr {
    fn from(m: Mixture) -> Self {
        MixtureRepr { family: "mixture".into(), weights: m.weights, components: m.components }
    }
}

impl Mixture {
    /// Weights must be nonnegative and sum to 1 within 1e-12.
    pub fn new(weights: Vec<f64>, components: Vec<Distribution>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidWeights("mixture needs at least one component".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch { expected: components.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        if components.iter().any(|d| !d.is_univariate()) {
            return Err(Error::NotUnivariate);
        }
        Ok(Mixture { weights, components })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Distribution] {
        &self.components
    }

    pub fn mean(&self) -> Option<f64> {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, d)| if *w == 0.0 { Some(0.0) } else { d.mean().map(|m| w * m) })
            .sum()
    }

    /// Component choice by weight, then a draw from that component.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidParams("sample size must be at least 1".into()));
        }
        let mut r = rng(seed);
        let last = self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
        Ok((0..n)
            .map(|_| {
                let u: f64 = r.random();
                let mut acc = 0.0;
                let mut pick = last;
                for (i, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if u < acc && *w > 0.0 {
                        pick = i;
                        break;
                    }
                }
                self.components[pick].draw(&mut r)
            })
            .collect())
    }
}

impl Density for Mixture {
    fn density(&self, x: f64) -> f64 {
        self.weights.iter().zip(&self.components).map(|(w, d)| w * d.pdf_unchecked(x)).sum()
    }

    fn cumulative(&self, x: f64) -> f64 {
        self.weights.iter().zip(&self.components).map(|(w, d)| w * d.cdf_unchecked(x)).sum()
    }

    fn inverse_cumulative(&self, p: f64) -> f64 {
        // the mixture quantile lies between the extreme component quantiles
        let qs = self
            .weights
            .iter()
            .zip(&self.components)
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, d)| d.quantile_unchecked(p));
        let (lo, hi) = qs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q)));
        if lo == hi {
            return lo;
        }
        invert_monotone(|x| self.cumulative(x), |x| self.density(x), p, lo, hi, None)
    }

    fn ln_density(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, d)| w.ln() + d.ln_pdf_unchecked(x))
            .collect();
        log_sum_exp(&terms)
    }
}
