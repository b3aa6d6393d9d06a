//! Compactly supported spectral laws for the invariant ensembles.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{catalan, cos, gauss_legendre, powi, sin, sqrt};
use crate::rng::{rademacher, uniform};

/// Limit law of the eigenvalues (symmetric) or singular values (rectangular).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralSpec {
    /// Semicircle on [-2, 2].
    Semicircle,
    /// Square roots of Marchenko–Pastur eigenvalues with ratio γ, normalized
    /// so that E[D²] = 1; for γ > 1 the law has an atom 1 − 1/γ at zero.
    MarchenkoPastur { gamma: f64 },
    /// ±a with probability 1/2 each.
    SymmetricTwoPoint { a: f64 },
    Uniform { a: f64, b: f64 },
    Constant { c: f64 },
    /// An explicit list of values, sorted ascending.
    Explicit { values: Vec<f64> },
}

const GL_NODES: usize = 16;
const GL_PANELS: usize = 256;

impl SpectralSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpectrum(m.into()));
        match self {
            SpectralSpec::Semicircle => Ok(()),
            SpectralSpec::MarchenkoPastur { gamma } => {
                if gamma.is_finite() && *gamma > 0.0 {
                    Ok(())
                } else {
                    bad("marchenko_pastur needs gamma > 0")
                }
            }
            SpectralSpec::SymmetricTwoPoint { a } => {
                if a.is_finite() {
                    Ok(())
                } else {
                    bad("two-point value must be finite")
                }
            }
            SpectralSpec::Uniform { a, b } => {
                if a.is_finite() && b.is_finite() && a < b {
                    Ok(())
                } else {
                    bad("uniform needs finite a < b")
                }
            }
            SpectralSpec::Constant { c } => {
                if c.is_finite() {
                    Ok(())
                } else {
                    bad("constant must be finite")
                }
            }
            SpectralSpec::Explicit { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return bad("explicit values must be non-empty and finite");
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return bad("explicit values must be sorted ascending");
                }
                Ok(())
            }
        }
    }

    /// E[D^k].
    pub fn moment(&self, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match self {
            SpectralSpec::Semicircle => {
                if k % 2 == 1 {
                    0.0
                } else {
                    catalan(k / 2)
                }
            }
            SpectralSpec::MarchenkoPastur { gamma } => mp_moment(*gamma, k),
            SpectralSpec::SymmetricTwoPoint { a } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    powi(*a, k)
                }
            }
            SpectralSpec::Uniform { a, b } => {
                (powi(*b, k + 1) - powi(*a, k + 1)) / ((k + 1) as f64 * (b - a))
            }
            SpectralSpec::Constant { c } => powi(*c, k),
            SpectralSpec::Explicit { values } => {
                crate::math::mean(&values.iter().map(|&v| powi(v, k)).collect::<Vec<_>>())
            }
        }
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.moment(1);
        self.moment(2) - m1 * m1
    }

    /// Checks the non-degeneracy required of an invariant ensemble:
    /// Var[D] > 0 for eigenvalues, E[D²] > 0 for singular values.
    pub fn check_nondegenerate(&self, symmetric: bool) -> Result<()> {
        self.validate()?;
        if symmetric && self.variance() <= 0.0 {
            return Err(Error::InvalidSpectrum("eigenvalue law needs Var[D] > 0".into()));
        }
        if !symmetric && self.moment(2) <= 0.0 {
            return Err(Error::InvalidSpectrum("singular value law needs E[D²] > 0".into()));
        }
        Ok(())
    }

    /// `len` i.i.d. draws (symmetric eigenvalues). An explicit law must have
    /// exactly `len` values and is returned as given.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match self {
            SpectralSpec::Semicircle => (0..len).map(|_| semicircle_quantile(uniform(rng))).collect(),
            SpectralSpec::MarchenkoPastur { gamma } => {
                let table = MpTable::new(*gamma);
                (0..len).map(|_| table.quantile(uniform(rng))).collect()
            }
            SpectralSpec::SymmetricTwoPoint { a } => (0..len).map(|_| a * rademacher(rng)).collect(),
            SpectralSpec::Uniform { a, b } => (0..len).map(|_| a + (b - a) * uniform(rng)).collect(),
            SpectralSpec::Constant { c } => alloc::vec![*c; len],
            SpectralSpec::Explicit { values } => {
                if values.len() != len {
                    return Err(Error::DimensionMismatch {
                        expected: len,
                        got: values.len(),
                    });
                }
                values.clone()
            }
        })
    }

    /// The `min(m, n)` singular values of an m×n rectangular invariant matrix.
    ///
    /// For Marchenko–Pastur with γ > 1 the zero atom is supplied by the
    /// m − n padding rows, so draws come from the continuous part only.
    pub fn sample_singular<R: Rng + ?Sized>(&self, rng: &mut R, m: usize, n: usize) -> Result<Vec<f64>> {
        let k = m.min(n);
        if let SpectralSpec::MarchenkoPastur { gamma } = self {
            self.validate()?;
            let table = MpTable::new(*gamma);
            return Ok((0..k).map(|_| table.quantile_continuous(uniform(rng))).collect());
        }
        self.sample(rng, k)
    }
}

/// Inverse CDF of the semicircle on [-2, 2].
///
/// With x = −2cos φ the CDF is (φ − sin φ cos φ)/π, which is solved for φ
/// by bisection.
pub fn semicircle_quantile(u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, PI);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let f = (mid - sin(mid) * cos(mid)) / PI;
        if f < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    -2.0 * cos(0.5 * (lo + hi))
}

/// Integrand of the continuous Marchenko–Pastur part in the angle variable
/// φ ∈ [0, π], λ = (1 + γ) − 2√γ cos φ: density·dλ = r² sin²φ/(2πγλ) dφ.
fn mp_weight(gamma: f64, phi: f64) -> (f64, f64) {
    let r = 2.0 * sqrt(gamma);
    let lambda = (1.0 + gamma) - r * cos(phi);
    let s = sin(phi);
    (lambda, r * r * s * s / (2.0 * PI * gamma * lambda.max(f64::MIN_POSITIVE)))
}

fn mp_moment(gamma: f64, k: u32) -> f64 {
    let (x, w) = gauss_legendre(GL_NODES);
    let h = PI / GL_PANELS as f64;
    let mut acc = crate::math::CompensatedSum::new();
    for p in 0..GL_PANELS {
        let a = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let phi = a + 0.5 * h * (xi + 1.0);
            let (lambda, dens) = mp_weight(gamma, phi);
            let dk = if k.is_multiple_of(2) {
                powi(lambda, k / 2)
            } else {
                powi(lambda, k / 2) * sqrt(lambda.max(0.0))
            };
            acc.add(0.5 * h * wi * dens * dk);
        }
    }
    acc.value()
}

/// Tabulated CDF of the continuous Marchenko–Pastur part on a φ grid.
struct MpTable {
    gamma: f64,
    atom: f64,
    cdf: Vec<f64>,
    nodes: (Vec<f64>, Vec<f64>),
}

const MP_TABLE: usize = 1024;

impl MpTable {
    fn new(gamma: f64) -> Self {
        let nodes = gauss_legendre(8);
        let h = PI / MP_TABLE as f64;
        let mut cdf = Vec::with_capacity(MP_TABLE + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for p in 0..MP_TABLE {
            acc += Self::panel(gamma, &nodes, p as f64 * h, (p + 1) as f64 * h);
            cdf.push(acc);
        }
        let atom = if gamma > 1.0 { 1.0 - 1.0 / gamma } else { 0.0 };
        Self {
            gamma,
            atom,
            cdf,
            nodes,
        }
    }

    fn panel(gamma: f64, nodes: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        nodes
            .0
            .iter()
            .zip(&nodes.1)
            .map(|(x, w)| half * w * mp_weight(gamma, a + half * (x + 1.0)).1)
            .sum()
    }

    fn quantile(&self, u: f64) -> f64 {
        if u < self.atom {
            return 0.0;
        }
        let mass = 1.0 - self.atom;
        self.quantile_continuous((u - self.atom) / mass)
    }

    /// Quantile of the continuous part renormalized to mass one.
    fn quantile_continuous(&self, u: f64) -> f64 {
        let total = self.cdf[MP_TABLE];
        let target = u * total;
        let idx = match self.cdf.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => i.min(MP_TABLE - 1),
            Err(i) => i.saturating_sub(1).min(MP_TABLE - 1),
        };
        let h = PI / MP_TABLE as f64;
        let a = idx as f64 * h;
        let base = self.cdf[idx];
        let (mut lo, mut hi) = (a, a + h);
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            if base + Self::panel(self.gamma, &self.nodes, a, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (lambda, _) = mp_weight(self.gamma, 0.5 * (lo + hi));
        sqrt(lambda.max(0.0))
    }
}
