//! Sparse multivariate polynomials used as tensor-network labels and test functions.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::powi;
use crate::moments::MomentOracle;

/// Σ c_a x^a, stored as a sorted list of (exponent vector, coefficient).
///
/// Serialized as a JSON list of `[exponents, coeff]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(Vec<u32>, f64)>", into = "Vec<(Vec<u32>, f64)>")]
pub struct MultiPoly {
    terms: Vec<(Vec<u32>, f64)>,
}

impl From<Vec<(Vec<u32>, f64)>> for MultiPoly {
    fn from(terms: Vec<(Vec<u32>, f64)>) -> Self {
        Self::new(terms)
    }
}

impl From<MultiPoly> for Vec<(Vec<u32>, f64)> {
    fn from(p: MultiPoly) -> Self {
        p.terms
    }
}

impl MultiPoly {
    /// Canonical form: like monomials merged, zero coefficients dropped,
    /// terms sorted by exponent vector.
    pub fn new(mut terms: Vec<(Vec<u32>, f64)>) -> Self {
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Vec<u32>, f64)> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Self { terms: out }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::new(vec![(vec![0; nvars], c)])
    }

    /// x_j in `nvars` variables.
    pub fn var(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        Self::new(vec![(e, 1.0)])
    }

    pub fn monomial(exps: Vec<u32>, c: f64) -> Self {
        Self::new(vec![(exps, c)])
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of variables, or `None` for the zero polynomial.
    pub fn nvars(&self) -> Option<usize> {
        self.terms.first().map(|t| t.0.len())
    }

    pub fn check_arity(&self, k: usize) -> Result<()> {
        match self.terms.iter().find(|t| t.0.len() != k) {
            Some(t) => Err(Error::Arity(alloc::format!(
                "monomial {:?} has {} exponents, expected {k}",
                t.0,
                t.0.len()
            ))),
            None => Ok(()),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.0.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &v)| powi(v, k)).product::<f64>())
            .sum()
    }

    /// Evaluates on every row of column-stored data.
    pub fn eval_columns(&self, cols: &[&[f64]], n: usize) -> Vec<f64> {
        let k = cols.len();
        let maxdeg: Vec<u32> = (0..k)
            .map(|j| self.terms.iter().map(|t| t.0[j]).max().unwrap_or(0))
            .collect();
        let mut out = vec![0.0; n];
        let mut pows: Vec<Vec<f64>> = maxdeg.iter().map(|&d| vec![1.0; d as usize + 1]).collect();
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..k {
                let x = cols[j][i];
                for d in 1..pows[j].len() {
                    pows[j][d] = pows[j][d - 1] * x;
                }
            }
            let mut acc = 0.0;
            for (e, c) in &self.terms {
                let mut t = *c;
                for (j, &ej) in e.iter().enumerate() {
                    if ej > 0 {
                        t *= pows[j][ej as usize];
                    }
                }
                acc += t;
            }
            *o = acc;
        }
        out
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        MultiPoly::new(terms)
    }

    pub fn scale(&self, c: f64) -> MultiPoly {
        MultiPoly::new(self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect())
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                terms.push((e, ca * cb));
            }
        }
        MultiPoly::new(terms)
    }

    /// Splits the terms into the first `k` and the rest.
    pub fn split_terms(&self, k: usize) -> (MultiPoly, MultiPoly) {
        let k = k.min(self.terms.len());
        (
            MultiPoly {
                terms: self.terms[..k].to_vec(),
            },
            MultiPoly {
                terms: self.terms[k..].to_vec(),
            },
        )
    }

    /// E[p(X)] under the oracle's joint law.
    pub fn expectation(&self, oracle: &dyn MomentOracle) -> Result<f64> {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            acc += c * oracle.moment(e)?;
        }
        Ok(acc)
    }

    /// The polynomial minus its mean under the oracle.
    pub fn centered(&self, nvars: usize, oracle: &dyn MomentOracle) -> Result<MultiPoly> {
        let m = self.expectation(oracle)?;
        Ok(self.add(&MultiPoly::constant(nvars, -m)))
    }
}

/// All monomials of total degree 1..=max_degree in `nvars` variables, by
/// degree then reverse-lexicographic exponent order, truncated at `cap`.
pub fn monomial_panel(nvars: usize, max_degree: u32, cap: usize) -> Vec<MultiPoly> {
    let mut out = Vec::new();
    for deg in 1..=max_degree {
        let mut level = Vec::new();
        compositions(nvars, deg, &mut vec![0; nvars], 0, &mut level);
        for e in level {
            if out.len() == cap {
                return out;
            }
            out.push(MultiPoly::monomial(e, 1.0));
        }
    }
    out
}

fn compositions(k: usize, remaining: u32, cur: &mut Vec<u32>, pos: usize, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == k {
        cur[pos] = remaining;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if k == 0 {
        return;
    }
    for take in (0..=remaining).rev() {
        cur[pos] = take;
        compositions(k, remaining - take, cur, pos + 1, out);
    }
    cur[pos] = 0;
}
