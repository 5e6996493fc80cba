//! Independence, Clayton and Gumbel–Hougaard copulas in dimension `m`.
//!
//! Sampling uses the Marshall–Olkin frailty construction: draw one shared
//! positive variable `V` whose Laplace transform is the copula generator
//! `psi`, then set `U_i = psi(E_i / V)` with `E_i` iid Exp(1).
//!
//! * Clayton: `psi(t) = (1 + t)^(-1/theta)`, `V ~ Gamma(1/theta)`.
//! * Gumbel–Hougaard: `psi(t) = exp(-t^(1/theta))`, `V` positive stable with
//!   index `1/theta`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::distributions::{GammaSampler, PositiveStable};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaFamily {
    Independence,
    Clayton,
    #[serde(
        rename = "gumbel",
        alias = "gumbel-hougaard",
        alias = "gumbel_hougaard"
    )]
    GumbelHougaard,
}

impl CopulaFamily {
    pub fn name(self) -> &'static str {
        match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::GumbelHougaard => "gumbel",
        }
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independence" | "independent" => Ok(CopulaFamily::Independence),
            "clayton" => Ok(CopulaFamily::Clayton),
            "gumbel" | "gumbel-hougaard" | "gumbel_hougaard" => Ok(CopulaFamily::GumbelHougaard),
            _ => Err(domain(format!("unknown copula family '{s}'"))),
        }
    }
}

/// A validated copula: family, dependence parameter and dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    family: CopulaFamily,
    theta: f64,
    dim: usize,
}

impl CopulaSpec {
    pub fn new(family: CopulaFamily, theta: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(domain(format!("copula dimension must be >= 2, got {dim}")));
        }
        match family {
            CopulaFamily::Clayton if !(theta > 0.0 && theta.is_finite()) => Err(domain(format!(
                "Clayton copula requires theta > 0, got {theta}"
            ))),
            CopulaFamily::GumbelHougaard if !(theta >= 1.0 && theta.is_finite()) => Err(domain(
                format!("Gumbel-Hougaard copula requires theta >= 1, got {theta}"),
            )),
            _ => Ok(Self { family, theta, dim }),
        }
    }

    pub fn independence(dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::Independence, 0.0, dim)
    }

    pub fn clayton(theta: f64, dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::Clayton, theta, dim)
    }

    pub fn gumbel(theta: f64, dim: usize) -> Result<Self> {
        Self::new(CopulaFamily::GumbelHougaard, theta, dim)
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    /// Dependence parameter; `None` for the independence copula.
    pub fn theta(&self) -> Option<f64> {
        match self.family {
            CopulaFamily::Independence => None,
            _ => Some(self.theta),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Population Kendall's tau of any bivariate margin.
    pub fn kendall_tau(&self) -> f64 {
        match self.family {
            CopulaFamily::Independence => 0.0,
            CopulaFamily::Clayton => self.theta / (self.theta + 2.0),
            CopulaFamily::GumbelHougaard => 1.0 - 1.0 / self.theta,
        }
    }
}

/// Evaluates the copula distribution function at `u`.
pub fn copula_cdf(spec: &CopulaSpec, u: &[f64]) -> Result<f64> {
    if u.len() != spec.dim {
        return Err(Error::Dimension {
            expected: spec.dim,
            actual: u.len(),
        });
    }
    if let Some(bad) = u.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        return Err(domain(format!("copula argument {bad} is outside [0, 1]")));
    }
    let min_u = u.iter().copied().fold(1.0, f64::min);
    if min_u == 0.0 {
        return Ok(0.0);
    }
    let value = match spec.family {
        CopulaFamily::Independence => u.iter().product(),
        CopulaFamily::Clayton => {
            let theta = spec.theta;
            let s: f64 = u.iter().map(|&x| x.powf(-theta)).sum();
            (s - (spec.dim as f64 - 1.0)).powf(-1.0 / theta)
        }
        CopulaFamily::GumbelHougaard => {
            let theta = spec.theta;
            let s: f64 = u.iter().map(|&x| (-x.ln()).powf(theta)).sum();
            (-s.powf(1.0 / theta)).exp()
        }
    };
    Ok(value.clamp(0.0, min_u))
}

/// Smallest and largest values a sampled coordinate may take.
const U_MIN: f64 = f64::MIN_POSITIVE;
const U_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy)]
enum Frailty {
    None,
    Gamma(GammaSampler),
    Stable(PositiveStable),
}

/// Reusable sampler for one copula; draws into caller-provided buffers.
#[derive(Debug, Clone)]
pub struct CopulaSampler {
    spec: CopulaSpec,
    frailty: Frailty,
    inv_theta: f64,
}

impl CopulaSampler {
    pub fn new(spec: CopulaSpec) -> Self {
        let frailty = match spec.family {
            CopulaFamily::Independence => Frailty::None,
            CopulaFamily::Clayton => Frailty::Gamma(
                GammaSampler::new(1.0 / spec.theta).expect("validated Clayton theta"),
            ),
            CopulaFamily::GumbelHougaard => Frailty::Stable(
                PositiveStable::new(1.0 / spec.theta).expect("validated Gumbel theta"),
            ),
        };
        let inv_theta = match spec.family {
            CopulaFamily::Independence => 0.0,
            _ => 1.0 / spec.theta,
        };
        Self {
            spec,
            frailty,
            inv_theta,
        }
    }

    pub fn spec(&self) -> &CopulaSpec {
        &self.spec
    }

    /// Fills `out` (length `dim`) with one draw in `(0, 1)^dim`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.spec.dim);
        match self.frailty {
            Frailty::None => {
                for x in out.iter_mut() {
                    *x = rng.sample(Open01);
                }
            }
            Frailty::Gamma(gamma) => {
                let v = gamma.sample(rng);
                for x in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *x = (-self.inv_theta * (e / v).ln_1p())
                        .exp()
                        .clamp(U_MIN, U_MAX);
                }
            }
            Frailty::Stable(stable) => {
                let v = stable.sample(rng);
                for x in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *x = (-(e / v).powf(self.inv_theta)).exp().clamp(U_MIN, U_MAX);
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.dim];
        self.sample_into(rng, &mut out);
        out
    }
}

/// One draw from the copula.
pub fn copula_sample<R: Rng + ?Sized>(spec: &CopulaSpec, rng: &mut R) -> Vec<f64> {
    CopulaSampler::new(*spec).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{kendall_tau, ks_uniform};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn construction_checks_domains() {
        assert!(CopulaSpec::clayton(0.0, 2).is_err());
        assert!(CopulaSpec::clayton(-1.0, 2).is_err());
        assert!(CopulaSpec::gumbel(0.99, 2).is_err());
        assert!(CopulaSpec::gumbel(f64::NAN, 2).is_err());
        assert!(CopulaSpec::independence(1).is_err());
        assert!(CopulaSpec::gumbel(1.0, 2).is_ok());
        assert!(CopulaSpec::clayton(0.01, 500).is_ok());
        let err = CopulaSpec::clayton(0.0, 3).unwrap_err().to_string();
        assert!(err.contains("theta > 0"), "{err}");
    }

    #[test]
    fn cdf_examples() {
        let clayton = CopulaSpec::clayton(1.0, 2).unwrap();
        assert!((copula_cdf(&clayton, &[0.5, 0.5]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let gumbel = CopulaSpec::gumbel(1.0, 2).unwrap();
        assert!((copula_cdf(&gumbel, &[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
        for spec in [
            CopulaSpec::independence(4).unwrap(),
            CopulaSpec::clayton(3.0, 4).unwrap(),
            CopulaSpec::gumbel(2.0, 4).unwrap(),
        ] {
            assert!((copula_cdf(&spec, &[1.0; 4]).unwrap() - 1.0).abs() < 1e-15);
            assert_eq!(copula_cdf(&spec, &[0.3, 0.0, 0.5, 0.9]).unwrap(), 0.0);
            // uniform margins: C(u, 1, ..., 1) = u
            assert!((copula_cdf(&spec, &[0.37, 1.0, 1.0, 1.0]).unwrap() - 0.37).abs() < 1e-13);
            let v = copula_cdf(&spec, &[0.2, 0.6, 0.5, 0.9]).unwrap();
            assert!((0.0..=0.2).contains(&v));
        }
        assert!(copula_cdf(&clayton, &[0.5]).is_err());
        assert!(copula_cdf(&clayton, &[0.5, 1.2]).is_err());
    }

    #[test]
    fn sampled_coordinates_stay_in_open_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in [
            CopulaSpec::clayton(5.0, 50).unwrap(),
            CopulaSpec::gumbel(5.0, 50).unwrap(),
            CopulaSpec::independence(50).unwrap(),
        ] {
            let sampler = CopulaSampler::new(spec);
            for _ in 0..2000 {
                assert!(sampler.sample(&mut rng).iter().all(|&u| u > 0.0 && u < 1.0));
            }
        }
    }

    const DRAWS: usize = 100_000;

    fn draws(spec: CopulaSpec, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampler = CopulaSampler::new(spec);
        (0..DRAWS).map(|_| sampler.sample(&mut rng)).collect()
    }

    fn column(xs: &[Vec<f64>], j: usize) -> Vec<f64> {
        xs.iter().map(|row| row[j]).collect()
    }

    #[test]
    fn kendall_tau_examples() {
        let cases = [
            (CopulaSpec::gumbel(1.0, 3).unwrap(), 0.0),
            (CopulaSpec::clayton(3.0, 2).unwrap(), 0.6),
            (CopulaSpec::gumbel(2.0, 2).unwrap(), 0.5),
        ];
        for (i, (spec, tau)) in cases.into_iter().enumerate() {
            let xs = draws(spec, 100 + i as u64);
            let got = kendall_tau(&column(&xs, 0), &column(&xs, 1));
            assert!((got - tau).abs() < 0.01, "{spec:?}: {got}");
        }
    }

    #[test]
    fn margins_are_uniform() {
        for (i, spec) in [
            CopulaSpec::clayton(5.0, 3).unwrap(),
            CopulaSpec::gumbel(3.0, 3).unwrap(),
        ]
        .into_iter()
        .enumerate()
        {
            let xs = draws(spec, 200 + i as u64);
            for j in 0..3 {
                assert!(ks_uniform(&column(&xs, j)) < 0.01);
            }
        }
    }
}
