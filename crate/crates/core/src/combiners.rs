//! Global-null p-value combination tests: Cauchy (CCT), Fisher and MinP.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::chisq_sf;
use crate::error::{domain, Error, Result};

/// Lower clamp applied to every incoming p-value; the upper clamp is `1 - P_CLAMP`.
pub const P_CLAMP: f64 = 1e-15;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Individual p-values, clamped into `[1e-15, 1 - 1e-15]`, with optional
/// combination weights (CCT only).
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    pvalues: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl PValueVector {
    pub fn new(pvalues: Vec<f64>) -> Result<Self> {
        Self::build(pvalues, None)
    }

    pub fn with_weights(pvalues: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::build(pvalues, Some(weights))
    }

    fn build(mut pvalues: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if pvalues.is_empty() {
            return Err(domain("at least one p-value is required"));
        }
        for p in &mut pvalues {
            if !(0.0..=1.0).contains(p) {
                return Err(domain(format!("p-value {p} is outside [0, 1]")));
            }
            *p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
        }
        if let Some(w) = &weights {
            if w.len() != pvalues.len() {
                return Err(Error::Dimension {
                    expected: pvalues.len(),
                    actual: w.len(),
                });
            }
            if let Some(bad) = w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                return Err(domain(format!("weights must be positive, got {bad}")));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(domain(format!("weights must sum to 1, got {total}")));
            }
        }
        Ok(Self { pvalues, weights })
    }

    pub fn len(&self) -> usize {
        self.pvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvalues.is_empty()
    }

    pub fn pvalues(&self) -> &[f64] {
        &self.pvalues
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cct", alias = "CCT")]
    Cct,
    #[serde(rename = "fisher", alias = "Fisher")]
    Fisher,
    #[serde(rename = "minp", alias = "MinP")]
    MinP,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cct, Method::Fisher, Method::MinP];

    pub fn combine(self, pv: &PValueVector) -> CombinedResult {
        match self {
            Method::Cct => combine_cct(pv),
            Method::Fisher => combine_fisher(pv),
            Method::MinP => combine_minp(pv),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cct => "CCT",
            Method::Fisher => "Fisher",
            Method::MinP => "MinP",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cct" | "cauchy" => Ok(Method::Cct),
            "fisher" => Ok(Method::Fisher),
            "minp" => Ok(Method::MinP),
            _ => Err(domain(format!("unknown combination method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombinedResult {
    pub method: Method,
    pub statistic: f64,
    pub pvalue: f64,
}

/// Cauchy combination: `T = sum w_i tan((0.5 - p_i) pi)`, `p = 0.5 - atan(T)/pi`.
/// Missing weights mean `w_i = 1/m`.
pub fn combine_cct(pv: &PValueVector) -> CombinedResult {
    let m = pv.len();
    let uniform = 1.0 / m as f64;
    let statistic = match pv.weights() {
        Some(w) => pv
            .pvalues
            .iter()
            .zip(w)
            .map(|(&p, &wi)| wi * cauchy_transform(p))
            .sum(),
        None => pv
            .pvalues
            .iter()
            .map(|&p| uniform * cauchy_transform(p))
            .sum(),
    };
    CombinedResult {
        method: Method::Cct,
        statistic,
        pvalue: cauchy_upper_tail(statistic),
    }
}

#[inline]
fn cauchy_transform(p: f64) -> f64 {
    ((0.5 - p) * PI).tan()
}

/// `P(C > t)` for a standard Cauchy `C`; for `t > 0` uses `atan(1/t)/pi`,
/// which keeps relative precision in the far tail.
pub fn cauchy_upper_tail(t: f64) -> f64 {
    if t > 0.0 {
        (1.0 / t).atan() / PI
    } else {
        0.5 - t.atan() / PI
    }
}

/// Fisher: `-2 sum log p_i ~ chi2_{2m}`. Weights are ignored.
pub fn combine_fisher(pv: &PValueVector) -> CombinedResult {
    let statistic: f64 = pv.pvalues.iter().map(|p| -2.0 * p.ln()).sum();
    let df = 2 * pv.len() as u32;
    let pvalue = chisq_sf(statistic, df).expect("Fisher statistic is a finite non-negative sum");
    CombinedResult {
        method: Method::Fisher,
        statistic,
        pvalue,
    }
}

/// MinP: `p_(1)` with p-value `1 - (1 - p_(1))^m`. Weights are ignored.
pub fn combine_minp(pv: &PValueVector) -> CombinedResult {
    let statistic = pv.pvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let m = pv.len() as f64;
    let pvalue = -(m * (-statistic).ln_1p()).exp_m1();
    CombinedResult {
        method: Method::MinP,
        statistic,
        pvalue,
    }
}
