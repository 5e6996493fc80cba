//! Distribution primitives: the standard normal CDF, chi-square survival,
//! the negative binomial pmf/quantile, and the gamma and positive-stable
//! samplers used as frailties by the copula module.
//!
//! Every sampler takes the RNG explicitly; nothing here touches global state.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

use crate::error::{domain, Error, Result};

/// Negative binomial law of the number of failures before the `r`-th success,
/// each trial succeeding with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegBinParams {
    r: u32,
    p: f64,
}

impl NegBinParams {
    pub fn new(r: u32, p: f64) -> Result<Self> {
        if r == 0 {
            return Err(domain("negative binomial r must be >= 1"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!(
                "negative binomial p must lie in (0, 1), got {p}"
            )));
        }
        Ok(Self { r, p })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `r(1-p)/p`
    pub fn mean(&self) -> f64 {
        f64::from(self.r) * (1.0 - self.p) / self.p
    }

    /// `r(1-p)/p^2`, always strictly larger than the mean.
    pub fn variance(&self) -> f64 {
        f64::from(self.r) * (1.0 - self.p) / (self.p * self.p)
    }

    pub fn normal_approx(&self) -> NormalApprox {
        NormalApprox {
            mu: self.mean(),
            sigma2: self.variance(),
        }
    }
}

/// Moment-matched normal approximation `N(E[X], V[X])` of a negative binomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalApprox {
    pub mu: f64,
    pub sigma2: f64,
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!(
            "normal_cdf requires a finite argument, got {x}"
        )));
    }
    Ok(0.5 * libm::erfc(-x * FRAC_1_SQRT_2))
}

/// Standard normal upper tail `1 - Phi(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!(
            "normal_sf requires a finite argument, got {x}"
        )));
    }
    Ok(0.5 * libm::erfc(x * FRAC_1_SQRT_2))
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Survival function `P(X > x)` of a chi-square variable with `df` degrees of
/// freedom. Even `df` uses the finite Poisson-sum closed form; odd `df` goes
/// through the regularized incomplete gamma function.
pub fn chisq_sf(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(domain("chi-square degrees of freedom must be >= 1"));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if df.is_multiple_of(2) {
        Ok(chisq_sf_even(x, df / 2))
    } else {
        Ok(gamma_q(0.5 * f64::from(df), 0.5 * x))
    }
}

/// `exp(-h) * sum_{k < terms} h^k / k!` with `h = x/2`.
fn chisq_sf_even(x: f64, terms: u32) -> f64 {
    let h = 0.5 * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    // log of the factor pulled out of `sum` whenever it grows too large
    let mut ln_scale = 0.0;
    for k in 1..terms {
        term *= h / f64::from(k);
        sum += term;
        if sum > 1e280 {
            ln_scale += sum.ln();
            term /= sum;
            sum = 1.0;
        }
    }
    if ln_scale == 0.0 && h < 700.0 {
        (sum * (-h).exp()).min(1.0)
    } else {
        (ln_scale + sum.ln() - h).exp().min(1.0)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = Gamma(a, x) / Gamma(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

pub fn negbin_ln_pmf(k: u64, params: NegBinParams) -> f64 {
    let r = f64::from(params.r);
    let k = k as f64;
    ln_gamma(k + r) - ln_gamma(r) - ln_gamma(k + 1.0) + r * params.p.ln() + k * (-params.p).ln_1p()
}

/// `C(k+r-1, r-1) p^r (1-p)^k`, evaluated in log space.
pub fn negbin_pmf(k: u64, params: NegBinParams) -> f64 {
    negbin_ln_pmf(k, params).exp()
}

/// Generalized inverse `min{k : F(k) >= u}` of the negative binomial CDF.
///
/// Builds a [`NegBinTable`] on every call; hot loops should keep the table.
pub fn negbin_quantile(u: f64, params: NegBinParams) -> Result<u64> {
    NegBinTable::new(params).quantile(u)
}

/// Precomputed pmf, CDF and survival values of a negative binomial over
/// `0..=cap`, where `cap = ceil(mean + 50 sd)`.
///
/// The pmf is accumulated forward with the ratio
/// `pmf(k+1) / pmf(k) = (1-p)(k+r)/(k+1)` carried in log space. The CDF is the
/// forward prefix sum; the survival column is summed backward from the cap so
/// that quantiles with `u` close to one are resolved against an accurate tail
/// rather than against `1 - F(k)`.
#[derive(Debug, Clone)]
pub struct NegBinTable {
    params: NegBinParams,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    /// `sf[k] = P(X > k)`
    sf: Vec<f64>,
}

impl NegBinTable {
    pub fn new(params: NegBinParams) -> Self {
        let cap = (params.mean() + 50.0 * params.variance().sqrt()).ceil() as usize;
        let r = f64::from(params.r);
        let ln_q = (-params.p).ln_1p();
        let mut pmf = Vec::with_capacity(cap + 1);
        let mut ln_pmf = r * params.p.ln();
        for k in 0..=cap {
            pmf.push(ln_pmf.exp());
            let kf = k as f64;
            ln_pmf += ln_q + (kf + r).ln() - (kf + 1.0).ln();
        }
        let mut cdf = Vec::with_capacity(cap + 1);
        let mut acc = 0.0;
        for &mass in &pmf {
            acc += mass;
            cdf.push(acc);
        }
        let mut sf = vec![0.0; cap + 1];
        let mut tail = 0.0;
        for k in (0..cap).rev() {
            tail += pmf[k + 1];
            sf[k] = tail;
        }
        Self {
            params,
            pmf,
            cdf,
            sf,
        }
    }

    pub fn params(&self) -> NegBinParams {
        self.params
    }

    /// Largest support point held in the table.
    pub fn cap(&self) -> u64 {
        (self.pmf.len() - 1) as u64
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.pmf.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn cdf(&self, k: u64) -> f64 {
        self.cdf.get(k as usize).copied().unwrap_or(1.0)
    }

    pub fn quantile(&self, u: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&u) {
            return Err(domain(format!(
                "quantile level must lie in [0, 1), got {u}"
            )));
        }
        let k = if u <= 0.5 {
            self.cdf.partition_point(|&c| c < u)
        } else {
            // F(k) >= u  <=>  P(X > k) <= 1 - u; 1 - u is exact for u >= 0.5
            let q = 1.0 - u;
            self.sf.partition_point(|&s| s > q)
        };
        if k >= self.pmf.len() {
            return Err(Error::QuantileCap { u, cap: self.cap() });
        }
        Ok(k as u64)
    }

    /// Quantile for `u` already known to lie in `[0, 1)`.
    #[inline]
    pub(crate) fn quantile_unchecked(&self, u: f64) -> u64 {
        let k = if u <= 0.5 {
            self.cdf.partition_point(|&c| c < u)
        } else {
            let q = 1.0 - u;
            self.sf.partition_point(|&s| s > q)
        };
        k.min(self.pmf.len() - 1) as u64
    }
}

/// Marsaglia–Tsang squeeze sampler for `Gamma(shape, 1)`. Shapes below one are
/// boosted: `Gamma(a) = Gamma(a + 1) * U^(1/a)`.
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    shape: f64,
    d: f64,
    c: f64,
    boost: Option<f64>,
}

impl GammaSampler {
    pub fn new(shape: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(domain(format!("gamma shape must be positive, got {shape}")));
        }
        let (base, boost) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let d = base - 1.0 / 3.0;
        Ok(Self {
            shape,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            boost,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + self.c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u: f64 = rng.sample(Open01);
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                break self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                break self.d * v;
            }
        };
        match self.boost {
            Some(inv_shape) => {
                let u: f64 = rng.sample(Open01);
                g * u.powf(inv_shape)
            }
            None => g,
        }
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    Ok(GammaSampler::new(shape)?.sample(rng))
}

pub fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// Positive alpha-stable law with Laplace transform `E[exp(-tS)] = exp(-t^alpha)`,
/// drawn with Kanter's representation of the Chambers–Mallows–Stuck method:
///
/// `S = sin(aU) / sin(U)^(1/a) * (sin((1-a)U) / E)^((1-a)/a)`,
/// `U ~ Uniform(0, pi)`, `E ~ Exp(1)`.
#[derive(Debug, Clone, Copy)]
pub struct PositiveStable {
    alpha: f64,
}

impl PositiveStable {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(domain(format!(
                "stable index must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        if a == 1.0 {
            return 1.0;
        }
        let u = PI * rng.sample::<f64, _>(Open01);
        let e: f64 = rng.sample(Exp1);
        let b = (1.0 - a) / a;
        let ln_s =
            (a * u).sin().ln() - (u.sin().ln()) / a + b * (((1.0 - a) * u).sin().ln() - e.ln());
        ln_s.exp()
    }
}

pub fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    Ok(PositiveStable::new(alpha)?.sample(rng))
}
