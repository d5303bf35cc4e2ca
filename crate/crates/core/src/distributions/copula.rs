//! Gaussian copula joint priors built from elicited marginals and an
//! elicited correlation matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use super::Distribution;
use crate::error::{Error, Result};
use crate::rng::rng;

const SYMMETRY_TOL: f64 = 1e-12;
const MIN_EIGENVALUE: f64 = 1e-10;
const CLIP_FLOOR: f64 = 1e-6;

/// Symmetric, unit-diagonal, positive-definite matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrelationMatrix {
    entries: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let m = to_matrix(&entries)?;
        check_symmetric_unit_diagonal(&m)?;
        if min_eigenvalue(&m) <= MIN_EIGENVALUE {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(CorrelationMatrix { entries })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(
            (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    fn matrix(&self) -> DMatrix<f64> {
        to_matrix(&self.entries).expect("validated at construction")
    }
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(c: CorrelationMatrix) -> Self {
        c.entries
    }
}

fn to_matrix(entries: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = entries.len();
    if n < 2 {
        return Err(Error::InvalidParams("correlation matrix needs dimension >= 2".into()));
    }
    if let Some(row) = entries.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: row.len() });
    }
    if entries.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("correlation entries must be finite".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| entries[i][j]))
}

fn check_symmetric_unit_diagonal(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::NotSymmetric);
            }
        }
        if m[(i, i)] != 1.0 {
            return Err(Error::InvalidParams("correlation diagonal must be exactly 1".into()));
        }
    }
    Ok(())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Repairs an expert-entered correlation matrix: eigenvalues are clipped at
/// 1e-6 and the result rescaled back to a unit diagonal. Matrices that are
/// already positive definite come back unchanged.
pub fn nearest_correlation(entries: Vec<Vec<f64>>) -> Result<CorrelationMatrix> {
    let m = to_matrix(&entries)?;
    check_symmetric_unit_diagonal(&m)?;
    if min_eigenvalue(&m) > MIN_EIGENVALUE {
        return Ok(CorrelationMatrix { entries });
    }
    let eig = SymmetricEigen::new(m);
    let clipped = eig.eigenvalues.map(|v| v.max(CLIP_FLOOR));
    let q = &eig.eigenvectors;
    let a = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    let n = a.nrows();
    let scale: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
    let out: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        // average the two triangles so the result is exactly symmetric
                        0.5 * (a[(i, j)] + a[(j, i)]) / (scale[i] * scale[j])
                    }
                })
                .collect()
        })
        .collect();
    CorrelationMatrix::new(out)
}

/// Joint prior with arbitrary univariate marginals coupled through a
/// Gaussian copula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopulaJointPrior {
    marginals: Vec<Distribution>,
    correlation: CorrelationMatrix,
}

impl CopulaJointPrior {
    pub fn new(marginals: Vec<Distribution>, correlation: CorrelationMatrix) -> Result<Self> {
        if marginals.len() != correlation.dim() {
            return Err(Error::DimensionMismatch {
                expected: correlation.dim(),
                got: marginals.len(),
            });
        }
        if marginals.iter().any(|d| !d.is_univariate()) {
            return Err(Error::NotUnivariate);
        }
        Ok(CopulaJointPrior { marginals, correlation })
    }

    pub fn marginals(&self) -> &[Distribution] {
        &self.marginals
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.correlation
    }

    /// `n` joint draws, one row per draw.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::InvalidParams("sample size must be at least 1".into()));
        }
        let chol = self
            .correlation
            .matrix()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let dim = self.marginals.len();
        let mut r = rng(seed);
        let mut rows = Vec::with_capacity(n);
        let mut eps = vec![0.0; dim];
        for _ in 0..n {
            for e in eps.iter_mut() {
                *e = rand::Rng::sample::<f64, _>(&mut r, rand_distr::StandardNormal);
            }
            let row = (0..dim)
                .map(|i| {
                    let z: f64 = (0..=i).map(|j| l[(i, j)] * eps[j]).sum();
                    let u = (0.5 * erf::erfc(-z / std::f64::consts::SQRT_2))
                        .clamp(1e-16, 1.0 - 1e-16);
                    self.marginals[i].quantile_unchecked(u)
                })
                .collect();
            rows.push(row);
        }
        Ok(rows)
    }
}
