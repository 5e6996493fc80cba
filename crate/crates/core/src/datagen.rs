//! Negative binomial count matrices with independent or copula-coupled columns.
//!
//! Each row draws `u` from the copula and maps coordinate `j` through the
//! generalized inverse CDF of `marginals[j]`. With discrete margins the joint
//! law is one of many sharing that copula on the range of the marginal CDFs;
//! the margins themselves are exact.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::Open01;

use crate::copulas::{CopulaSampler, CopulaSpec};
use crate::distributions::{NegBinParams, NegBinTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    marginals: Vec<NegBinParams>,
    copula: Option<CopulaSpec>,
    n: usize,
}

impl DatasetSpec {
    /// `copula = None` means independent columns.
    pub fn new(marginals: Vec<NegBinParams>, copula: Option<CopulaSpec>, n: usize) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Validation(
                "a dataset needs at least one column".into(),
            ));
        }
        if n < 2 {
            return Err(Error::Validation(format!(
                "sample size n must be >= 2, got {n}"
            )));
        }
        if let Some(c) = &copula {
            if c.dim() != marginals.len() {
                return Err(Error::Dimension {
                    expected: marginals.len(),
                    actual: c.dim(),
                });
            }
        }
        Ok(Self {
            marginals,
            copula,
            n,
        })
    }

    pub fn marginals(&self) -> &[NegBinParams] {
        &self.marginals
    }

    pub fn copula(&self) -> Option<&CopulaSpec> {
        self.copula.as_ref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.marginals.len()
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.marginals.clone(), self.copula, n)
    }
}

/// An `n x m` matrix of counts, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    values: Vec<u32>,
    n: usize,
    m: usize,
}

impl CountMatrix {
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 {
            return Err(Error::Validation("count matrix must be non-empty".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::Dimension {
                expected: m,
                actual: bad.len(),
            });
        }
        Ok(Self {
            values: rows.concat(),
            n: rows.len(),
            m,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.values[row * self.m + col]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.values[row * self.m..(row + 1) * self.m]
    }

    pub fn column(&self, col: usize) -> Vec<u32> {
        (0..self.n).map(|i| self.get(i, col)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.values.chunks_exact(self.m)
    }

    /// Tab-separated dump, one row per line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join("\t"))?;
        }
        Ok(())
    }
}

pub fn column_means(data: &CountMatrix) -> Vec<f64> {
    let mut sums = vec![0u64; data.m];
    for row in data.rows() {
        for (s, &x) in sums.iter_mut().zip(row) {
            *s += u64::from(x);
        }
    }
    let n = data.n as f64;
    sums.into_iter().map(|s| s as f64 / n).collect()
}

/// Precomputed quantile tables and copula sampler for repeated generation.
#[derive(Debug, Clone)]
pub struct DatasetGenerator {
    spec: DatasetSpec,
    tables: Vec<NegBinTable>,
    /// `table_of[j]` indexes `tables` for column `j`
    table_of: Vec<usize>,
    sampler: Option<CopulaSampler>,
}

impl DatasetGenerator {
    pub fn new(spec: DatasetSpec) -> Self {
        let mut tables: Vec<NegBinTable> = Vec::new();
        let table_of = spec
            .marginals
            .iter()
            .map(
                |params| match tables.iter().position(|t| t.params() == *params) {
                    Some(i) => i,
                    None => {
                        tables.push(NegBinTable::new(*params));
                        tables.len() - 1
                    }
                },
            )
            .collect();
        let sampler = spec.copula.map(CopulaSampler::new);
        Self {
            spec,
            tables,
            table_of,
            sampler,
        }
    }

    pub fn spec(&self) -> &DatasetSpec {
        &self.spec
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> CountMatrix {
        let (n, m) = (self.spec.n, self.spec.m());
        let mut values = vec![0u32; n * m];
        let mut u = vec![0.0; m];
        for row in values.chunks_exact_mut(m) {
            match &self.sampler {
                Some(s) => s.sample_into(rng, &mut u),
                None => u.iter_mut().for_each(|x| *x = rng.sample(Open01)),
            }
            for ((cell, &uj), &t) in row.iter_mut().zip(&u).zip(&self.table_of) {
                *cell = self.tables[t].quantile_unchecked(uj) as u32;
            }
        }
        CountMatrix { values, n, m }
    }
}

pub fn generate_dataset<R: Rng + ?Sized>(spec: &DatasetSpec, rng: &mut R) -> CountMatrix {
    DatasetGenerator::new(spec.clone()).generate(rng)
}
