//! Moment oracles: E[∏ X_j^{a_j}] for the joint laws that label tensor
//! networks, and the scalar laws they are built from.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{catalan, double_factorial, powi, sqrt};
use crate::rng::{normal, rademacher, uniform};
use crate::spectral::{semicircle_quantile, SpectralSpec};

/// Joint moments of a random vector (X_1, …, X_k).
pub trait MomentOracle {
    fn nvars(&self) -> usize;
    /// E[∏ X_j^{exps[j]}]; `exps` has length `nvars()`.
    fn moment(&self, exps: &[u32]) -> Result<f64>;
    /// Sample size for empirical oracles.
    fn sample_size(&self) -> Option<usize> {
        None
    }
}

/// A one-dimensional law with closed-form moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarLaw {
    StandardNormal,
    Normal { variance: f64 },
    Rademacher,
    /// Semicircle on [-2, 2].
    Semicircle,
    Uniform { a: f64, b: f64 },
    Constant { c: f64 },
    /// N(0, 1) with probability p, else 0.
    BernoulliGaussian { p: f64 },
}

impl ScalarLaw {
    pub fn moment(&self, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let even = k.is_multiple_of(2);
        match *self {
            ScalarLaw::StandardNormal => {
                if even {
                    double_factorial(k - 1)
                } else {
                    0.0
                }
            }
            ScalarLaw::Normal { variance } => {
                if even {
                    double_factorial(k - 1) * powi(sqrt(variance), k)
                } else {
                    0.0
                }
            }
            ScalarLaw::Rademacher => {
                if even {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarLaw::Semicircle => {
                if even {
                    catalan(k / 2)
                } else {
                    0.0
                }
            }
            ScalarLaw::Uniform { a, b } => (powi(b, k + 1) - powi(a, k + 1)) / ((k + 1) as f64 * (b - a)),
            ScalarLaw::Constant { c } => powi(c, k),
            ScalarLaw::BernoulliGaussian { p } => {
                if even {
                    p * double_factorial(k - 1)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScalarLaw::StandardNormal => normal(rng),
            ScalarLaw::Normal { variance } => sqrt(variance) * normal(rng),
            ScalarLaw::Rademacher => rademacher(rng),
            ScalarLaw::Semicircle => semicircle_quantile(uniform(rng)),
            ScalarLaw::Uniform { a, b } => a + (b - a) * uniform(rng),
            ScalarLaw::Constant { c } => c,
            ScalarLaw::BernoulliGaussian { p } => {
                // Both draws are always taken so the stream position does not
                // depend on the outcome.
                let keep = uniform(rng) < p;
                let g = normal(rng);
                if keep {
                    g
                } else {
                    0.0
                }
            }
        }
    }
}

/// Independent coordinates, each with its own scalar law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndependentLaws(pub Vec<ScalarLaw>);

impl IndependentLaws {
    pub fn iid(law: ScalarLaw, k: usize) -> Self {
        Self(alloc::vec![law; k])
    }
}

fn check_len(exps: &[u32], k: usize) -> Result<()> {
    if exps.len() != k {
        return Err(Error::Arity(alloc::format!(
            "moment of {} variables requested from a {k}-variable oracle",
            exps.len()
        )));
    }
    Ok(())
}

impl MomentOracle for IndependentLaws {
    fn nvars(&self) -> usize {
        self.0.len()
    }

    fn moment(&self, exps: &[u32]) -> Result<f64> {
        check_len(exps, self.0.len())?;
        Ok(self.0.iter().zip(exps).map(|(l, &e)| l.moment(e)).product())
    }
}

/// One-variable oracle for E[D^k] from a spectral law.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMoments(pub SpectralSpec);

impl MomentOracle for SpectralMoments {
    fn nvars(&self) -> usize {
        1
    }

    fn moment(&self, exps: &[u32]) -> Result<f64> {
        check_len(exps, 1)?;
        Ok(self.0.moment(exps[0]))
    }
}

/// Moments of the empirical distribution of rows of column data.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl EmpiricalMoments {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::InvalidArgument("empirical oracle needs at least one row".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        Ok(Self { columns, n })
    }
}

impl MomentOracle for EmpiricalMoments {
    fn nvars(&self) -> usize {
        self.columns.len()
    }

    fn moment(&self, exps: &[u32]) -> Result<f64> {
        check_len(exps, self.columns.len())?;
        let mut acc = crate::math::CompensatedSum::new();
        for i in 0..self.n {
            acc.add(
                self.columns
                    .iter()
                    .zip(exps)
                    .map(|(c, &e)| powi(c[i], e))
                    .product(),
            );
        }
        Ok(acc.value() / self.n as f64)
    }

    fn sample_size(&self) -> Option<usize> {
        Some(self.n)
    }
}

/// A finite table of moments; anything not listed is an error, except the
/// all-zero exponent which is always 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableMoments {
    nvars: usize,
    table: BTreeMap<Vec<u32>, f64>,
}

impl TableMoments {
    pub fn new(nvars: usize) -> Self {
        Self {
            nvars,
            table: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, exps: Vec<u32>, value: f64) {
        self.table.insert(exps, value);
    }
}

impl MomentOracle for TableMoments {
    fn nvars(&self) -> usize {
        self.nvars
    }

    fn moment(&self, exps: &[u32]) -> Result<f64> {
        check_len(exps, self.nvars)?;
        if exps.iter().all(|&e| e == 0) {
            return Ok(1.0);
        }
        self.table
            .get(exps)
            .copied()
            .ok_or_else(|| Error::MissingMoment(exps.to_vec()))
    }
}
