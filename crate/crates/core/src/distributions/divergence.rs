use super::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{linspace, trapezoid};

/// A univariate density that can be evaluated and inverted. Implemented by
/// [`Distribution`] as well as pooled and mixture priors.
pub trait Density {
    fn density(&self, x: f64) -> f64;
    fn cumulative(&self, x: f64) -> f64;
    /// Inverse of [`Density::cumulative`] for `p` in `(0, 1)`.
    fn inverse_cumulative(&self, p: f64) -> f64;

    fn ln_density(&self, x: f64) -> f64 {
        self.density(x).ln()
    }
}

impl Density for Distribution {
    fn density(&self, x: f64) -> f64 {
        if self.is_univariate() {
            self.pdf_unchecked(x)
        } else {
            f64::NAN
        }
    }

    fn cumulative(&self, x: f64) -> f64 {
        if self.is_univariate() {
            self.cdf_unchecked(x)
        } else {
            f64::NAN
        }
    }

    fn inverse_cumulative(&self, p: f64) -> f64 {
        if self.is_univariate() {
            self.quantile_unchecked(p)
        } else {
            f64::NAN
        }
    }

    fn ln_density(&self, x: f64) -> f64 {
        if self.is_univariate() {
            self.ln_pdf_unchecked(x)
        } else {
            f64::NAN
        }
    }
}

const KL_TAIL: f64 = 1e-6;

/// Trapezoid estimate of `KL(p || q)` on `grid_size` equally spaced nodes
/// spanning the `[1e-6, 1 - 1e-6]` quantile range of `p`.
///
/// Nodes where `q` vanishes but `p` does not are tolerated while their
/// combined `p`-mass stays below 1e-9.
pub fn kl_numeric<Q: Density + ?Sized>(p: &Distribution, q: &Q, grid_size: usize) -> Result<f64> {
    if !p.is_univariate() {
        return Err(Error::NotUnivariate);
    }
    if grid_size < 2 {
        return Err(Error::InvalidParams("grid_size must be at least 2".into()));
    }
    let xs = linspace(p.quantile_unchecked(KL_TAIL), p.quantile_unchecked(1.0 - KL_TAIL), grid_size);
    let mut integrand = Vec::with_capacity(xs.len());
    let mut uncovered = Vec::with_capacity(xs.len());
    for &x in &xs {
        let (lp, lq) = (p.ln_pdf_unchecked(x), q.ln_density(x));
        let pd = lp.exp();
        if pd == 0.0 || !pd.is_finite() {
            integrand.push(0.0);
            uncovered.push(0.0);
        } else if lq == f64::NEG_INFINITY {
            integrand.push(0.0);
            uncovered.push(pd);
        } else {
            integrand.push(pd * (lp - lq));
            uncovered.push(0.0);
        }
    }
    let missing = trapezoid(&xs, &uncovered);
    if missing > 1e-9 {
        return Err(Error::SupportMismatch(format!(
            "q vanishes on a region carrying {missing:.3e} of p's mass"
        )));
    }
    Ok(trapezoid(&xs, &integrand))
}

/// Total-variation distance `0.5 * integral |p - q|` on a grid spanning both
/// densities' `[1e-6, 1 - 1e-6]` quantile ranges.
pub fn total_variation<P, Q>(p: &P, q: &Q, grid_size: usize) -> Result<f64>
where
    P: Density + ?Sized,
    Q: Density + ?Sized,
{
    if grid_size < 2 {
        return Err(Error::InvalidParams("grid_size must be at least 2".into()));
    }
    let lo = p.inverse_cumulative(KL_TAIL).min(q.inverse_cumulative(KL_TAIL));
    let hi = p.inverse_cumulative(1.0 - KL_TAIL).max(q.inverse_cumulative(1.0 - KL_TAIL));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NotUnivariate);
    }
    let xs = linspace(lo, hi, grid_size);
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let d = (p.density(x) - q.density(x)).abs();
            if d.is_finite() {
                d
            } else {
                0.0
            }
        })
        .collect();
    Ok((0.5 * trapezoid(&xs, &ys)).clamp(0.0, 1.0))
}
