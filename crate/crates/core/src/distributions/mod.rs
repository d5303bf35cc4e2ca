//! Parametric distribution families.
//!
//! A [`Distribution`] is a validated `(family, params)` pair. Parameter order
//! is fixed per family:
//!
//! | family      | params                      |
//! |-------------|-----------------------------|
//! | `normal`    | `[mu, sigma]`               |
//! | `lognormal` | `[mu, sigma]` (log scale)   |
//! | `beta`      | `[alpha, beta]`             |
//! | `gamma`     | `[shape, rate]`             |
//! | `studentt`  | `[nu, location, scale]`     |
//! | `uniform`   | `[a, b]`                    |
//! | `dirichlet` | `[alpha_1, ..., alpha_k]`   |
//!
//! Histograms carry bin edges and bin probabilities instead. Degenerate
//! parameters (zero scale, empty interval) are rejected at construction, so
//! every value of this type has a density.

mod copula;
mod divergence;
mod mixture;

pub use copula::{nearest_correlation, CopulaJointPrior, CorrelationMatrix};
pub use divergence::{kl_numeric, total_variation, Density};
pub use mixture::Mixture;

use rand::Rng as _;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use statrs::function::{beta as sbeta, erf, gamma as sgamma};

use crate::error::{Error, Result};
use crate::numeric::{invert_monotone, LN_SQRT_2PI};
use crate::rng::{rng, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    LogNormal,
    Beta,
    Gamma,
    StudentT,
    Uniform,
    Histogram,
    Dirichlet,
}

impl Family {
    /// Number of parameters, or `None` for variable-length families.
    pub fn param_count(self) -> Option<usize> {
        match self {
            Family::Normal | Family::LogNormal | Family::Beta | Family::Gamma | Family::Uniform => {
                Some(2)
            }
            Family::StudentT => Some(3),
            Family::Histogram | Family::Dirichlet => None,
        }
    }

    pub fn is_continuous_parametric(self) -> bool {
        !matches!(self, Family::Histogram | Family::Dirichlet)
    }

    pub const CONTINUOUS: [Family; 6] = [
        Family::Normal,
        Family::LogNormal,
        Family::Beta,
        Family::Gamma,
        Family::StudentT,
        Family::Uniform,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct Distribution {
    family: Family,
    /// Family parameters; bin probabilities for histograms.
    params: Vec<f64>,
    /// Bin edges, histograms only.
    edges: Vec<f64>,
}

/// Draws from a distribution: scalars, or simplex vectors for Dirichlet.
#[derive(Clone, Debug, PartialEq)]
pub enum Samples {
    Scalar(Vec<f64>),
    Simplex(Vec<Vec<f64>>),
}

impl Distribution {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self> {
        if family == Family::Histogram {
            return Err(Error::InvalidParams(
                "histograms are built with Distribution::histogram".into(),
            ));
        }
        let d = Distribution { family, params, edges: Vec::new() };
        d.validate()?;
        Ok(d)
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Normal, vec![mu, sigma])
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::LogNormal, vec![mu, sigma])
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Family::Beta, vec![alpha, beta])
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(Family::Gamma, vec![shape, rate])
    }

    pub fn student_t(nu: f64, location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::StudentT, vec![nu, location, scale])
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Uniform, vec![a, b])
    }

    pub fn dirichlet(alpha: Vec<f64>) -> Result<Self> {
        Self::new(Family::Dirichlet, alpha)
    }

    pub fn histogram(edges: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let d = Distribution { family: Family::Histogram, params: probs, edges };
        d.validate()?;
        Ok(d)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Family parameters (bin probabilities for a histogram).
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Histogram bin edges; empty for other families.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn is_univariate(&self) -> bool {
        self.family != Family::Dirichlet
    }

    fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |msg: &str| Err(Error::InvalidParams(format!("{:?}: {msg}", self.family)));
        if p.iter().any(|v| !v.is_finite()) || self.edges.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite");
        }
        if let Some(n) = self.family.param_count() {
            if p.len() != n {
                return bad(&format!("expected {n} parameters, got {}", p.len()));
            }
        }
        match self.family {
            Family::Normal | Family::LogNormal if p[1] <= 0.0 => bad("sigma must be positive"),
            Family::Beta | Family::Gamma if p[0] <= 0.0 || p[1] <= 0.0 => {
                bad("parameters must be positive")
            }
            Family::StudentT if p[0] <= 0.0 || p[2] <= 0.0 => {
                bad("degrees of freedom and scale must be positive")
            }
            Family::Uniform if p[0] >= p[1] => bad("requires a < b"),
            Family::Histogram => {
                if self.edges.len() < 2 || p.len() != self.edges.len() - 1 {
                    return bad("need n+1 edges for n bin probabilities");
                }
                if self.edges.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("edges must be strictly ascending");
                }
                if p.iter().any(|&v| v < 0.0) {
                    return bad("bin probabilities must be nonnegative");
                }
                if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return bad("bin probabilities must sum to 1");
                }
                Ok(())
            }
            Family::Dirichlet if p.len() < 2 || p.iter().any(|&a| a <= 0.0) => {
                bad("need at least two positive concentrations")
            }
            _ => Ok(()),
        }
    }

    fn univariate(&self) -> Result<()> {
        if self.is_univariate() {
            Ok(())
        } else {
            Err(Error::NotUnivariate)
        }
    }

    /// Closed support `(lower, upper)`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        let p = &self.params;
        match self.family {
            Family::Normal | Family::StudentT => (f64::NEG_INFINITY, f64::INFINITY),
            Family::LogNormal | Family::Gamma => (0.0, f64::INFINITY),
            Family::Beta => (0.0, 1.0),
            Family::Uniform => (p[0], p[1]),
            Family::Histogram => (self.edges[0], self.edges[self.edges.len() - 1]),
            Family::Dirichlet => (0.0, 1.0),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.univariate()?;
        Ok(self.pdf_unchecked(x))
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        self.univariate()?;
        Ok(self.ln_pdf_unchecked(x))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.univariate()?;
        Ok(self.cdf_unchecked(x))
    }

    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform => {
                let (a, b) = (self.params[0], self.params[1]);
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Family::Histogram => match self.bin_of(x) {
                Some(i) => self.params[i] / (self.edges[i + 1] - self.edges[i]),
                None => 0.0,
            },
            _ => self.ln_pdf_unchecked(x).exp(),
        }
    }

    pub(crate) fn ln_pdf_unchecked(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Normal => {
                let z = (x - p[0]) / p[1];
                -0.5 * z * z - p[1].ln() - LN_SQRT_2PI
            }
            Family::LogNormal => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - p[0]) / p[1];
                -0.5 * z * z - p[1].ln() - LN_SQRT_2PI - x.ln()
            }
            Family::Beta => {
                let (a, b) = (p[0], p[1]);
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                let norm = sbeta::ln_beta(a, b);
                let left = if x == 0.0 {
                    edge_log_term(a)
                } else {
                    (a - 1.0) * x.ln()
                };
                let right = if x == 1.0 {
                    edge_log_term(b)
                } else {
                    (b - 1.0) * (-x).ln_1p()
                };
                left + right - norm
            }
            Family::Gamma => {
                let (k, r) = (p[0], p[1]);
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return match k {
                        k if k < 1.0 => f64::INFINITY,
                        1.0 => r.ln(),
                        _ => f64::NEG_INFINITY,
                    };
                }
                k * r.ln() + (k - 1.0) * x.ln() - r * x - sgamma::ln_gamma(k)
            }
            Family::StudentT => {
                let (nu, loc, s) = (p[0], p[1], p[2]);
                let z = (x - loc) / s;
                sgamma::ln_gamma(0.5 * (nu + 1.0))
                    - sgamma::ln_gamma(0.5 * nu)
                    - 0.5 * (nu * std::f64::consts::PI).ln()
                    - s.ln()
                    - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
            Family::Uniform | Family::Histogram => self.pdf_unchecked(x).ln(),
            Family::Dirichlet => f64::NAN,
        }
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        let p = &self.params;
        let v = match self.family {
            Family::Normal => 0.5 * erf::erfc(-(x - p[0]) / (p[1] * std::f64::consts::SQRT_2)),
            Family::LogNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    0.5 * erf::erfc(-(x.ln() - p[0]) / (p[1] * std::f64::consts::SQRT_2))
                }
            }
            Family::Beta => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    sbeta::beta_reg(p[0], p[1], x)
                }
            }
            Family::Gamma => {
                if x <= 0.0 {
                    0.0
                } else {
                    sgamma::gamma_lr(p[0], p[1] * x)
                }
            }
            Family::StudentT => {
                let (nu, loc, s) = (p[0], p[1], p[2]);
                let t = (x - loc) / s;
                if t.is_infinite() {
                    return if t > 0.0 { 1.0 } else { 0.0 };
                }
                let tail = 0.5 * sbeta::beta_reg(0.5 * nu, 0.5, nu / (nu + t * t));
                if t < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            Family::Uniform => ((x - p[0]) / (p[1] - p[0])).clamp(0.0, 1.0),
            Family::Histogram => {
                let e = &self.edges;
                if x <= e[0] {
                    0.0
                } else if x >= e[e.len() - 1] {
                    1.0
                } else {
                    let i = self.bin_of(x).expect("x inside histogram range");
                    let before: f64 = p[..i].iter().sum();
                    before + p[i] * (x - e[i]) / (e[i + 1] - e[i])
                }
            }
            Family::Dirichlet => f64::NAN,
        };
        v.clamp(0.0, 1.0)
    }

    fn bin_of(&self, x: f64) -> Option<usize> {
        let e = &self.edges;
        let last = e.len() - 1;
        if x < e[0] || x > e[last] {
            return None;
        }
        // first edge strictly greater than x, minus one; last bin is closed
        let i = e.partition_point(|&edge| edge <= x);
        Some(i.saturating_sub(1).min(last - 1))
    }

    /// Inverse CDF. Histograms interpolate linearly within bins; other
    /// families solve `cdf(x) = p` on a bracket that always shrinks.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.univariate()?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let prm = &self.params;
        match self.family {
            Family::Uniform => prm[0] + p * (prm[1] - prm[0]),
            Family::Histogram => self.histogram_quantile(p),
            Family::Normal => {
                let guess = prm[0] + prm[1] * std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * p - 1.0);
                self.solve_cdf(p, Some(guess))
            }
            Family::LogNormal => {
                let z = std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * p - 1.0);
                self.solve_cdf(p, Some((prm[0] + prm[1] * z).exp()))
            }
            _ => self.solve_cdf(p, None),
        }
    }

    fn histogram_quantile(&self, p: f64) -> f64 {
        let (e, probs) = (&self.edges, &self.params);
        let mut cum = 0.0;
        for (i, &w) in probs.iter().enumerate() {
            if w > 0.0 && cum + w >= p {
                let frac = ((p - cum) / w).clamp(0.0, 1.0);
                return e[i] + frac * (e[i + 1] - e[i]);
            }
            cum += w;
        }
        // rounding left p above the accumulated mass: last populated bin's right edge
        let last = probs.iter().rposition(|&w| w > 0.0).unwrap_or(probs.len() - 1);
        e[last + 1]
    }

    fn solve_cdf(&self, p: f64, guess: Option<f64>) -> f64 {
        let (lo, hi) = self.bracket(p, guess);
        invert_monotone(
            |x| self.cdf_unchecked(x),
            |x| self.pdf_unchecked(x),
            p,
            lo,
            hi,
            guess,
        )
    }

    fn bracket(&self, p: f64, guess: Option<f64>) -> (f64, f64) {
        let (mut lo, mut hi) = self.support();
        if lo.is_finite() && hi.is_finite() {
            return (lo, hi);
        }
        let (center, width) = self.location_scale();
        let center = guess.unwrap_or(center);
        if lo.is_infinite() {
            let mut step = width;
            lo = center - step;
            while self.cdf_unchecked(lo) > p && lo.is_finite() {
                step *= 2.0;
                lo = center - step;
            }
        }
        if hi.is_infinite() {
            let mut step = width;
            hi = center.max(lo) + step;
            while self.cdf_unchecked(hi) < p && hi.is_finite() {
                step *= 2.0;
                hi = center.max(lo) + step;
            }
        }
        (lo, hi)
    }

    /// A rough center and spread, used to seed brackets and initial guesses.
    fn location_scale(&self) -> (f64, f64) {
        let p = &self.params;
        match self.family {
            Family::Normal => (p[0], p[1]),
            Family::LogNormal => (p[0].exp(), p[0].exp() * p[1].max(0.1)),
            Family::Gamma => (p[0] / p[1], p[0].sqrt() / p[1]),
            Family::StudentT => (p[1], p[2]),
            _ => {
                let (lo, hi) = self.support();
                (0.5 * (lo + hi), hi - lo)
            }
        }
    }

    /// Analytic mean, where finite.
    pub fn mean(&self) -> Option<f64> {
        let p = &self.params;
        match self.family {
            Family::Normal => Some(p[0]),
            Family::LogNormal => Some((p[0] + 0.5 * p[1] * p[1]).exp()),
            Family::Beta => Some(p[0] / (p[0] + p[1])),
            Family::Gamma => Some(p[0] / p[1]),
            Family::StudentT if p[0] > 1.0 => Some(p[1]),
            Family::StudentT => None,
            Family::Uniform => Some(0.5 * (p[0] + p[1])),
            Family::Histogram => Some(
                self.edges
                    .windows(2)
                    .zip(p)
                    .map(|(e, w)| w * 0.5 * (e[0] + e[1]))
                    .sum(),
            ),
            Family::Dirichlet => None,
        }
    }

    /// Probability of the closed interval `[lower, upper]`.
    pub fn interval_probability(&self, lower: f64, upper: f64) -> Result<f64> {
        self.univariate()?;
        Ok((self.cdf_unchecked(upper) - self.cdf_unchecked(lower)).max(0.0))
    }

    /// `n` draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Samples> {
        if n == 0 {
            return Err(Error::InvalidParams("sample size must be at least 1".into()));
        }
        let mut r = rng(seed);
        if self.family == Family::Dirichlet {
            let draws = (0..n).map(|_| self.draw_simplex(&mut r)).collect();
            return Ok(Samples::Simplex(draws));
        }
        Ok(Samples::Scalar((0..n).map(|_| self.draw(&mut r)).collect()))
    }

    /// Scalar draws; fails for Dirichlet.
    pub fn sample_scalar(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.univariate()?;
        match self.sample(n, seed)? {
            Samples::Scalar(v) => Ok(v),
            Samples::Simplex(_) => Err(Error::NotUnivariate),
        }
    }

    /// One draw using a caller-owned generator. Dirichlet yields NaN; use
    /// [`Distribution::draw_simplex`].
    pub fn draw(&self, r: &mut Rng) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Normal => p[0] + p[1] * r.sample::<f64, _>(rand_distr::StandardNormal),
            Family::LogNormal => {
                (p[0] + p[1] * r.sample::<f64, _>(rand_distr::StandardNormal)).exp()
            }
            Family::Beta => rand_distr::Beta::new(p[0], p[1])
                .expect("validated beta parameters")
                .sample(r),
            Family::Gamma => rand_distr::Gamma::new(p[0], 1.0 / p[1])
                .expect("validated gamma parameters")
                .sample(r),
            Family::StudentT => {
                let t: f64 = rand_distr::StudentT::new(p[0])
                    .expect("validated degrees of freedom")
                    .sample(r);
                p[1] + p[2] * t
            }
            Family::Uniform => p[0] + (p[1] - p[0]) * r.random::<f64>(),
            Family::Histogram => {
                let u: f64 = r.random();
                self.histogram_quantile(u.max(f64::MIN_POSITIVE))
            }
            Family::Dirichlet => f64::NAN,
        }
    }

    /// One simplex draw from a Dirichlet via normalized gamma variates.
    pub fn draw_simplex(&self, r: &mut Rng) -> Vec<f64> {
        let mut g: Vec<f64> = self
            .params
            .iter()
            .map(|&a| {
                rand_distr::Gamma::new(a, 1.0)
                    .expect("validated concentration")
                    .sample(r)
            })
            .collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 {
            g.iter_mut().for_each(|v| *v /= total);
        } else {
            // every gamma draw underflowed; fall back to the largest concentration
            let k = argmax(&self.params);
            g.iter_mut().enumerate().for_each(|(i, v)| *v = if i == k { 1.0 } else { 0.0 });
        }
        g
    }

    /// Log density of a Dirichlet at a point of the simplex.
    pub fn ln_pdf_simplex(&self, x: &[f64]) -> Result<f64> {
        if self.family != Family::Dirichlet {
            return Err(Error::InvalidParams("not a Dirichlet".into()));
        }
        if x.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), got: x.len() });
        }
        Ok(dirichlet_ln_pdf(&self.params, x))
    }
}

pub(crate) fn dirichlet_ln_pdf(alpha: &[f64], x: &[f64]) -> f64 {
    let a0: f64 = alpha.iter().sum();
    let mut v = sgamma::ln_gamma(a0);
    for (&a, &xi) in alpha.iter().zip(x) {
        v += (a - 1.0) * xi.ln() - sgamma::ln_gamma(a);
    }
    v
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `(a - 1) * ln(0)` with the conventions used at the Beta boundary.
fn edge_log_term(a: f64) -> f64 {
    if a < 1.0 {
        f64::INFINITY
    } else if a == 1.0 {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionRepr {
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        match r.family {
            Family::Histogram => match (r.edges, r.probs, r.params) {
                (Some(e), Some(p), None) => Distribution::histogram(e, p),
                _ => Err(Error::InvalidParams("histogram needs `edges` and `probs`".into())),
            },
            f => match (r.params, r.edges, r.probs) {
                (Some(p), None, None) => Distribution::new(f, p),
                _ => Err(Error::InvalidParams(format!("{f:?} needs `params` only"))),
            },
        }
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(d: Distribution) -> Self {
        if d.family == Family::Histogram {
            DistributionRepr {
                family: d.family,
                params: None,
                edges: Some(d.edges),
                probs: Some(d.params),
            }
        } else {
            DistributionRepr { family: d.family, params: Some(d.params), edges: None, probs: None }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{linspace, trapezoid};

    fn sweep() -> Vec<Distribution> {
        let mut out = Vec::new();
        for k in 0..5 {
            let t = k as f64;
            out.push(Distribution::normal(-2.0 + t, 0.3 + 0.7 * t).unwrap());
            out.push(Distribution::lognormal(-1.0 + 0.5 * t, 0.2 + 0.3 * t).unwrap());
            out.push(Distribution::beta(0.5 + 1.5 * t, 5.0 - t).unwrap());
            out.push(Distribution::gamma(0.5 + 2.0 * t, 0.5 + t).unwrap());
            out.push(Distribution::student_t(1.0 + 3.0 * t, t - 1.0, 0.5 + t).unwrap());
            out.push(Distribution::uniform(-t, 1.0 + t * t).unwrap());
        }
        out
    }

    #[test]
    fn normal_pdf_at_zero() {
        // oracle: 1/sqrt(2*pi) to 16 digits
        let d = Distribution::normal(0.0, 1.0).unwrap();
        assert!((d.pdf(0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn flat_densities() {
        assert_eq!(Distribution::uniform(0.0, 1.0).unwrap().pdf(0.5).unwrap(), 1.0);
        assert!((Distribution::beta(1.0, 1.0).unwrap().pdf(0.3).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(Distribution::uniform(0.0, 1.0).unwrap().pdf(1.5).unwrap(), 0.0);
    }

    #[test]
    fn cdf_symmetry_points() {
        let n = Distribution::normal(3.0, 2.0).unwrap();
        assert!((n.cdf(3.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(Distribution::uniform(0.0, 1.0).unwrap().cdf(0.25).unwrap(), 0.25);
        assert!((Distribution::beta(2.0, 2.0).unwrap().cdf(0.5).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn normal_upper_quartile_matches_bisection() {
        // oracle: plain bisection on the cdf to 1e-10
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let (mut lo, mut hi) = (-10.0f64, 10.0f64);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if 0.5 * erf::erfc(-mid / std::f64::consts::SQRT_2) < 0.75 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let q = d.quantile(0.75).unwrap();
        assert!((q - 0.5 * (lo + hi)).abs() < 1e-9);
        assert!((q - 0.674_489_8).abs() < 1e-7);
    }

    #[test]
    fn trivial_quantiles() {
        assert!((Distribution::beta(1.0, 1.0).unwrap().quantile(0.3).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(Distribution::uniform(2.0, 4.0).unwrap().quantile(0.5).unwrap(), 3.0);
    }

    #[test]
    fn quantile_rejects_closed_endpoints() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(d.quantile(p), Err(Error::ProbabilityOutOfRange(_))));
        }
    }

    #[test]
    fn cdf_quantile_round_trip_across_sweep() {
        for d in sweep() {
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let x = d.quantile(p).unwrap();
                let err = (d.cdf(x).unwrap() - p).abs();
                assert!(err < 1e-8, "{d:?} p={p} x={x} err={err}");
            }
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        for d in sweep() {
            // substitute x = Q(u) would be circular; integrate over a wide
            // quantile window with a fine grid and add the excluded tails
            let (lo, hi) = (d.quantile(1e-10).unwrap(), d.quantile(1.0 - 1e-10).unwrap());
            let xs = if d.family() == Family::LogNormal || d.family() == Family::Gamma {
                // log-spaced nodes resolve mass piled up near zero
                linspace(lo.ln(), hi.ln(), 400_001).into_iter().map(f64::exp).collect()
            } else if d.family() == Family::Beta && d.params()[0] < 1.0 {
                linspace(lo.ln(), hi.ln(), 400_001).into_iter().map(f64::exp).collect()
            } else {
                linspace(lo, hi, 200_001)
            };
            let mass = if d.family() == Family::StudentT {
                // heavy tails: x = loc + scale * tan(phi) maps the real line to a bounded interval
                let (loc, s) = (d.params()[1], d.params()[2]);
                let h = std::f64::consts::FRAC_PI_2 - 1e-9;
                let phis = linspace(-h, h, 200_001);
                let ys: Vec<f64> = phis
                    .iter()
                    .map(|&t| d.pdf(loc + s * t.tan()).unwrap() * s / t.cos().powi(2))
                    .collect();
                trapezoid(&phis, &ys)
            } else {
                let ys: Vec<f64> = xs.iter().map(|&x| d.pdf(x).unwrap()).collect();
                trapezoid(&xs, &ys) + 2e-10
            };
            assert!((mass - 1.0).abs() < 1e-6, "{d:?} mass={mass}");
        }
    }

    #[test]
    fn degenerate_parameters_rejected() {
        assert!(matches!(Distribution::normal(5.0, 0.0), Err(Error::InvalidParams(_))));
        assert!(Distribution::uniform(1.0, 1.0).is_err());
        assert!(Distribution::beta(0.0, 1.0).is_err());
        assert!(Distribution::gamma(1.0, -1.0).is_err());
        assert!(Distribution::dirichlet(vec![1.0]).is_err());
        assert!(Distribution::histogram(vec![0.0, 1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Distribution::histogram(vec![0.0, 1.0, 2.0], vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(Family::Normal, vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn uniform_sample_mean() {
        let d = Distribution::uniform(0.0, 1.0).unwrap();
        let xs = d.sample_scalar(100_000, 7).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((0.49..=0.51).contains(&mean));
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Distribution::beta(2.0, 5.0).unwrap();
        assert_eq!(d.sample(50, 3).unwrap(), d.sample(50, 3).unwrap());
        assert_ne!(d.sample(50, 3).unwrap(), d.sample(50, 4).unwrap());
        assert!(d.sample(0, 3).is_err());
    }

    fn ks(d: &Distribution, xs: &mut [f64]) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = d.cdf(x).unwrap();
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn samples_pass_kolmogorov_smirnov() {
        let hist = Distribution::histogram(vec![0.0, 1.0, 3.0, 4.0], vec![0.2, 0.5, 0.3]).unwrap();
        for d in sweep().into_iter().step_by(5).chain([hist]) {
            let mut xs = d.sample_scalar(100_000, 11).unwrap();
            let stat = ks(&d, &mut xs);
            assert!(stat < 0.02, "{d:?} ks={stat}");
        }
    }

    #[test]
    fn dirichlet_draws_lie_on_simplex() {
        let d = Distribution::dirichlet(vec![2.0, 3.0, 0.5]).unwrap();
        let Samples::Simplex(v) = d.sample(1000, 1).unwrap() else { panic!() };
        for x in &v {
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.iter().all(|&c| c >= 0.0));
        }
        let m0 = v.iter().map(|x| x[0]).sum::<f64>() / 1000.0;
        assert!((m0 - 2.0 / 5.5).abs() < 0.03);
        assert!(matches!(d.pdf(0.3), Err(Error::NotUnivariate)));
    }

    #[test]
    fn histogram_quantile_interpolates() {
        let h = Distribution::histogram(vec![0.0, 1.0, 2.0], vec![0.25, 0.75]).unwrap();
        assert!((h.quantile(0.125).unwrap() - 0.5).abs() < 1e-15);
        assert!((h.quantile(0.625).unwrap() - 1.5).abs() < 1e-15);
        assert!((h.cdf(1.5).unwrap() - 0.625).abs() < 1e-15);
        assert_eq!(h.pdf(1.5).unwrap(), 0.75);
        assert_eq!(h.pdf(2.0).unwrap(), 0.75);
    }

    #[test]
    fn json_layout() {
        let b = Distribution::beta(2.0, 5.0).unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"family":"beta","params":[2.0,5.0]}"#);
        let h = Distribution::histogram(vec![0.0, 1.0], vec![1.0]).unwrap();
        assert_eq!(
            serde_json::to_string(&h).unwrap(),
            r#"{"family":"histogram","edges":[0.0,1.0],"probs":[1.0]}"#
        );
        let back: Distribution = serde_json::from_str(r#"{"family":"studentt","params":[3,0,1]}"#).unwrap();
        assert_eq!(back, Distribution::student_t(3.0, 0.0, 1.0).unwrap());
        assert!(serde_json::from_str::<Distribution>(r#"{"family":"normal","params":[0,0]}"#).is_err());
        assert!(serde_json::from_str::<Distribution>(r#"{"family":"normal","params":[0,1],"x":1}"#).is_err());
    }
}
