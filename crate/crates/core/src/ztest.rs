//! Per-column two-sided Z-tests of `H0: mu_i = mu0_i` under the normal
//! approximation to the negative binomial.

use crate::combiners::PValueVector;
use crate::datagen::{column_means, CountMatrix};
use crate::distributions::{normal_sf, NegBinParams};
use crate::error::{domain, Error, Result};

/// Null means and null variances, one per column.
///
/// The Z denominator uses these null variances rather than the sample
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpec {
    mu0: Vec<f64>,
    var0: Vec<f64>,
}

impl NullSpec {
    pub fn new(mu0: Vec<f64>, var0: Vec<f64>) -> Result<Self> {
        if mu0.len() != var0.len() {
            return Err(Error::Dimension {
                expected: mu0.len(),
                actual: var0.len(),
            });
        }
        if mu0.is_empty() {
            return Err(Error::Validation("null specification is empty".into()));
        }
        for (i, (&mu, &var)) in mu0.iter().zip(&var0).enumerate() {
            if !(mu > 0.0 && var > mu && var.is_finite()) {
                return Err(Error::Validation(format!(
                    "null for variable {i} must satisfy var0 > mu0 > 0, got mu0 = {mu}, var0 = {var}"
                )));
            }
        }
        Ok(Self { mu0, var0 })
    }

    /// Null means and variances `r(1-p)/p`, `r(1-p)/p^2` of the given laws.
    pub fn from_marginals(marginals: &[NegBinParams]) -> Result<Self> {
        Self::new(
            marginals.iter().map(NegBinParams::mean).collect(),
            marginals.iter().map(NegBinParams::variance).collect(),
        )
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    pub fn var0(&self) -> &[f64] {
        &self.var0
    }

    pub fn len(&self) -> usize {
        self.mu0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu0.is_empty()
    }
}

/// `Z_i = (mean_i - mu0_i) / sqrt(var0_i / n)`.
pub fn z_statistics(data: &CountMatrix, null: &NullSpec) -> Result<Vec<f64>> {
    if data.m() != null.len() {
        return Err(Error::Dimension {
            expected: data.m(),
            actual: null.len(),
        });
    }
    if data.n() < 2 {
        return Err(Error::Validation("Z-test needs n >= 2 rows".into()));
    }
    let n = data.n() as f64;
    Ok(column_means(data)
        .into_iter()
        .zip(null.mu0.iter().zip(&null.var0))
        .map(|(mean, (&mu, &var))| (mean - mu) / (var / n).sqrt())
        .collect())
}

/// `p_i = 2 (1 - Phi(|z_i|))`, clamped into the combiners' open interval.
pub fn two_sided_pvalues(z: &[f64]) -> Result<PValueVector> {
    let mut p = Vec::with_capacity(z.len());
    for &zi in z {
        if !zi.is_finite() {
            return Err(domain(format!("Z statistic must be finite, got {zi}")));
        }
        p.push((2.0 * normal_sf(zi.abs())?).min(1.0));
    }
    PValueVector::new(p)
}
