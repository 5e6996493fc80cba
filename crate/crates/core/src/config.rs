//! Experiment grid files.
//!
//! A grid file is flat TOML. Axis keys (`m`, `r`, `theta`, `n_grid`) hold lists
//! and the grid is their Cartesian product, expanded in the order
//! `m`, `r`, `theta`, `n`:
//!
//! ```toml
//! experiment = "table2_clayton"
//! target = "Clayton type-1 table"
//! protocol = "type1"
//! family = "clayton"
//! theta = [1.0, 3.0, 5.0]
//! m = [10, 50]
//! r = [5, 30]
//! p = 0.5
//! n = 30
//! M = 10000
//! alphas = [0.05]
//! seed = 1
//! ```
//!
//! Power grids use `n_grid` instead of `n` and a `[signal]` table giving the
//! number of trailing variables drawn from `NB(signal.r, p)` instead of
//! `NB(r, p)`. Null means always come from the baseline `NB(r, p)`.
//!
//! Cell `i` of the expansion runs with seed `derive_seed(seed, i)`.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::combiners::Method;
use crate::copulas::{CopulaFamily, CopulaSpec};
use crate::datagen::DatasetSpec;
use crate::distributions::NegBinParams;
use crate::harness::{derive_seed, ExperimentConfig, Protocol, MIN_REPLICATIONS};
use crate::ztest::NullSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub experiment: Spanned<String>,
    /// Table or figure this grid reproduces; echoed into output headers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Spanned<Protocol>>,
    pub seed: Spanned<u64>,
    #[serde(rename = "M")]
    pub replications: Spanned<u64>,
    pub alphas: Spanned<Vec<f64>>,
    #[serde(default = "all_methods")]
    pub methods: Spanned<Vec<Method>>,
    pub family: Spanned<CopulaFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Spanned<Vec<f64>>>,
    pub m: Spanned<Vec<usize>>,
    pub r: Spanned<Vec<u32>>,
    pub p: Spanned<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Spanned<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Spanned<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<Spanned<Signal>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_misspecified: bool,
}

fn all_methods() -> Spanned<Vec<Method>> {
    Spanned::new(0..0, Method::ALL.to_vec())
}

/// The last `count` variables of every cell are drawn from `NB(r, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signal {
    pub count: usize,
    pub r: u32,
}

/// A configuration problem, anchored to a 1-based source line when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Descriptive fields of one expanded cell, used to label output rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub config: ExperimentConfig,
    pub m: usize,
    pub r: u32,
    pub theta: Option<f64>,
    pub n: usize,
}

impl GridConfig {
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        toml::from_str(source).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(source, s.start)),
            message: e.message().to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid config serializes")
    }

    pub fn name(&self) -> &str {
        self.experiment.get_ref()
    }

    /// Validates the grid against `protocol` and expands it into cells.
    /// `source` is the text the config was parsed from, used for line anchors.
    pub fn expand(&self, protocol: Protocol, source: &str) -> Result<Vec<Cell>, ConfigError> {
        let err = |span: Range<usize>, message: String| ConfigError {
            line: (span.end > 0).then(|| line_of(source, span.start)),
            message,
        };

        if let Some(declared) = &self.protocol {
            if *declared.get_ref() != protocol {
                return Err(err(
                    declared.span(),
                    format!(
                        "this grid is declared for the {} protocol",
                        declared.get_ref()
                    ),
                ));
            }
        }
        if *self.replications.get_ref() < MIN_REPLICATIONS {
            return Err(err(
                self.replications.span(),
                format!("M must be >= {MIN_REPLICATIONS}"),
            ));
        }
        let alphas = self.alphas.get_ref();
        if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(err(
                self.alphas.span(),
                "alphas must be a non-empty list inside (0, 1)".into(),
            ));
        }
        if self.methods.get_ref().is_empty() {
            return Err(err(self.methods.span(), "methods must not be empty".into()));
        }
        for (key, empty, span) in [
            ("m", self.m.get_ref().is_empty(), self.m.span()),
            ("r", self.r.get_ref().is_empty(), self.r.span()),
        ] {
            if empty {
                return Err(err(span, format!("{key} must list at least one value")));
            }
        }
        if let Some(&bad) = self.m.get_ref().iter().find(|&&m| m == 0) {
            return Err(err(self.m.span(), format!("m must be >= 1, got {bad}")));
        }
        let p = *self.p.get_ref();
        for &r in self.r.get_ref() {
            NegBinParams::new(r, p).map_err(|e| {
                err(
                    self.r.span().start..self.p.span().end.max(self.r.span().end),
                    e.to_string(),
                )
            })?;
        }

        let family = *self.family.get_ref();
        let thetas: Vec<Option<f64>> = match (family, &self.theta) {
            (CopulaFamily::Independence, _) => vec![None],
            (_, None) => {
                return Err(err(
                    self.family.span(),
                    format!("family '{family}' needs a theta list"),
                ))
            }
            (_, Some(t)) if t.get_ref().is_empty() => {
                return Err(err(t.span(), "theta must list at least one value".into()))
            }
            (_, Some(t)) => {
                for &theta in t.get_ref() {
                    let domain = match family {
                        CopulaFamily::Clayton => "Clayton copula requires theta > 0",
                        _ => "Gumbel-Hougaard copula requires theta >= 1",
                    };
                    CopulaSpec::new(family, theta, 2).map_err(|_| {
                        err(
                            t.span(),
                            format!("theta = {theta} is outside the domain: {domain}"),
                        )
                    })?;
                }
                t.get_ref().iter().copied().map(Some).collect()
            }
        };

        let ns: Vec<usize> = match protocol {
            Protocol::Type1 => match &self.n {
                Some(n) => vec![*n.get_ref()],
                None => {
                    return Err(ConfigError {
                        line: None,
                        message: "type-1 grids need a sample size n".into(),
                    })
                }
            },
            Protocol::Power => match &self.n_grid {
                Some(g) if g.get_ref().is_empty() => {
                    return Err(err(
                        g.span(),
                        "n_grid must list at least one sample size".into(),
                    ))
                }
                Some(g) => g.get_ref().clone(),
                None => {
                    return Err(ConfigError {
                        line: None,
                        message: "power grids need an n_grid".into(),
                    })
                }
            },
        };
        let n_span = match protocol {
            Protocol::Type1 => self.n.as_ref().map(|n| n.span()),
            Protocol::Power => self.n_grid.as_ref().map(|n| n.span()),
        }
        .unwrap_or(0..0);
        if let Some(&bad) = ns.iter().find(|&&n| n < 2) {
            return Err(err(n_span, format!("sample sizes must be >= 2, got {bad}")));
        }

        let signal = self
            .signal
            .as_ref()
            .map(|s| (s.get_ref().clone(), s.span()));
        if protocol == Protocol::Power && signal.is_none() {
            return Err(ConfigError {
                line: None,
                message: "power grids need a [signal] table".into(),
            });
        }

        let mut cells = Vec::new();
        for &m in self.m.get_ref() {
            for &r in self.r.get_ref() {
                let base = NegBinParams::new(r, p).expect("checked above");
                let mut marginals = vec![base; m];
                if let Some((s, span)) = &signal {
                    if s.count > m {
                        return Err(err(
                            span.clone(),
                            format!("signal.count = {} exceeds m = {m}", s.count),
                        ));
                    }
                    let shifted =
                        NegBinParams::new(s.r, p).map_err(|e| err(span.clone(), e.to_string()))?;
                    for law in &mut marginals[m - s.count..] {
                        *law = shifted;
                    }
                }
                let null = NullSpec::from_marginals(&vec![base; m])
                    .map_err(|e| err(self.r.span(), e.to_string()))?;
                for &theta in &thetas {
                    let copula = match (family, m) {
                        (CopulaFamily::Independence, _) | (_, 1) => None,
                        _ => Some(
                            CopulaSpec::new(family, theta.unwrap_or(0.0), m)
                                .expect("checked above"),
                        ),
                    };
                    for &n in &ns {
                        let dataset = DatasetSpec::new(marginals.clone(), copula, n)
                            .map_err(|e| err(n_span.clone(), e.to_string()))?;
                        let index = cells.len() as u64;
                        let config = ExperimentConfig {
                            id: cell_id(self.name(), m, r, theta, n),
                            dataset,
                            null: null.clone(),
                            replications: *self.replications.get_ref(),
                            alpha_levels: alphas.clone(),
                            seed: derive_seed(*self.seed.get_ref(), index),
                            methods: self.methods.get_ref().clone(),
                            allow_misspecified: self.allow_misspecified,
                        };
                        config.validate(protocol).map_err(|e| ConfigError {
                            line: None,
                            message: e.to_string(),
                        })?;
                        cells.push(Cell {
                            config,
                            m,
                            r,
                            theta,
                            n,
                        });
                    }
                }
            }
        }
        Ok(cells)
    }
}

fn cell_id(experiment: &str, m: usize, r: u32, theta: Option<f64>, n: usize) -> String {
    match theta {
        Some(t) => format!("{experiment}/m{m}-r{r}-theta{t}-n{n}"),
        None => format!("{experiment}/m{m}-r{r}-n{n}"),
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}
