//! Separable AMP nonlinearities u_{t+1}(z_1, …, z_t, f_1, …, f_k).

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{abs, sq, tanh};
use crate::poly::MultiPoly;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

pub trait Nonlinearity: Send + Sync {
    /// Value at iterates `z = (z_1..z_t)` and side information `f`.
    fn eval(&self, z: &[f64], f: &[f64]) -> f64;

    /// Closed-form ∂/∂z_s (0-based `s`), when one exists. Kinks follow the
    /// weak-derivative convention.
    fn partial(&self, z: &[f64], f: &[f64], s: usize) -> Option<f64>;

    fn is_lipschitz(&self) -> bool {
        true
    }
}

/// Central difference (u(z + h e_s) − u(z − h e_s)) / 2h.
pub fn finite_diff_partial<N: Nonlinearity + ?Sized>(nl: &N, z: &[f64], f: &[f64], s: usize, h: f64) -> f64 {
    let mut zz = z.to_vec();
    zz[s] = z[s] + h;
    let up = nl.eval(&zz, f);
    zz[s] = z[s] - h;
    let down = nl.eval(&zz, f);
    (up - down) / (2.0 * h)
}

/// Soft thresholding η(x; θ) = sign(x) max(|x| − θ, 0).
#[inline]
pub fn soft_threshold(x: f64, theta: f64) -> f64 {
    if x > theta {
        x - theta
    } else if x < -theta {
        x + theta
    } else {
        0.0
    }
}

/// Serializable nonlinearities. Variants acting on "the latest iterate" read
/// z_t only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Nonlin {
    Zero,
    Identity,
    Tanh,
    /// tanh(z_t + side_weight · f_1).
    TanhShift { side_weight: f64 },
    SoftThreshold { theta: f64 },
    /// Σ_s coeffs[s] z_s over the first `coeffs.len()` iterates.
    Linear { coeffs: Vec<f64> },
    /// A polynomial in (z_1..z_t, f_1..f_k); not Lipschitz unless affine.
    Polynomial { poly: MultiPoly },
}

impl Nonlin {
    /// Checks that the nonlinearity can act on t iterates and k side columns.
    pub fn check_arity(&self, t: usize, k: usize) -> Result<()> {
        let latest = matches!(self, Self::Identity | Self::Tanh | Self::TanhShift { .. } | Self::SoftThreshold { .. });
        if latest && t == 0 {
            return Err(Error::Arity(format!("{self:?} needs at least one iterate")));
        }
        match self {
            Self::TanhShift { .. } if k == 0 => Err(Error::Arity("tanh_shift needs a side-information column".into())),
            Self::SoftThreshold { theta } if !(*theta >= 0.0) => {
                Err(Error::InvalidArgument(format!("threshold must be nonnegative, got {theta}")))
            }
            Self::Linear { coeffs } if coeffs.len() > t => Err(Error::Arity(format!(
                "linear map has {} coefficients but only {t} iterates exist",
                coeffs.len()
            ))),
            Self::Polynomial { poly } => poly.check_arity(t + k),
            _ => Ok(()),
        }
    }
}

fn poly_partial(poly: &MultiPoly, x: &[f64], j: usize) -> f64 {
    let mut acc = 0.0;
    for (e, c) in poly.terms() {
        if e[j] == 0 {
            continue;
        }
        let mut term = c * e[j] as f64;
        for (i, (&xi, &ei)) in x.iter().zip(e).enumerate() {
            let p = if i == j { ei - 1 } else { ei };
            term *= crate::math::powi(xi, p);
        }
        acc += term;
    }
    acc
}

impl Nonlinearity for Nonlin {
    fn eval(&self, z: &[f64], f: &[f64]) -> f64 {
        let last = || z[z.len() - 1];
        match self {
            Self::Zero => 0.0,
            Self::Identity => last(),
            Self::Tanh => tanh(last()),
            Self::TanhShift { side_weight } => tanh(last() + side_weight * f[0]),
            Self::SoftThreshold { theta } => soft_threshold(last(), *theta),
            Self::Linear { coeffs } => coeffs.iter().zip(z).map(|(c, x)| c * x).sum(),
            Self::Polynomial { poly } => {
                let x: Vec<f64> = z.iter().chain(f).copied().collect();
                poly.eval(&x)
            }
        }
    }

    fn partial(&self, z: &[f64], f: &[f64], s: usize) -> Option<f64> {
        let t = z.len();
        let latest = |d: f64| if s + 1 == t { d } else { 0.0 };
        Some(match self {
            Self::Zero => 0.0,
            Self::Identity => latest(1.0),
            Self::Tanh => latest(1.0 - sq(tanh(z[t - 1]))),
            Self::TanhShift { side_weight } => latest(1.0 - sq(tanh(z[t - 1] + side_weight * f[0]))),
            Self::SoftThreshold { theta } => latest((abs(z[t - 1]) > *theta) as u8 as f64),
            Self::Linear { coeffs } => coeffs.get(s).copied().unwrap_or(0.0),
            Self::Polynomial { poly } => {
                let x: Vec<f64> = z.iter().chain(f).copied().collect();
                poly_partial(poly, &x, s)
            }
        })
    }

    fn is_lipschitz(&self) -> bool {
        match self {
            Self::Polynomial { poly } => poly.degree() <= 1,
            _ => true,
        }
    }
}
