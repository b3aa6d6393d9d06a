//! The AMP iterations: symmetric, rectangular, and compressed sensing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::math::{norm2, norm_cdf, norm_pdf, sorted_mean, sq, sqrt};
use crate::nonlin::{finite_diff_partial, soft_threshold, Nonlin, Nonlinearity, FD_STEP};
use crate::operator::MatrixOperator;
use crate::stateevo::{DerivativeMode, SEResult};

/// Iterates whose norm exceeds this multiple of √n abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e8;

/// Wall-clock source for per-iteration timings; the core crate has none.
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn now(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CoefficientMode {
    /// Onsager coefficients taken from a state-evolution result.
    Prescribed { se: SEResult },
    /// Expectations replaced by averages over the current iterates.
    Empirical { derivative: DerivativeMode },
}

/// Inputs shared by the symmetric and rectangular runs. For the rectangular
/// iteration `u1` and `side` live in R^m, `side_v` in R^n, `v[j]` is v_{j+1};
/// in both cases `u[j]` is u_{j+2}.
#[derive(Debug, Clone)]
pub struct AmpConfig<'a, N = Nonlin> {
    pub op: &'a MatrixOperator,
    pub u1: Vec<f64>,
    pub side: Vec<Vec<f64>>,
    pub side_v: Vec<Vec<f64>>,
    pub u: Vec<N>,
    pub v: Vec<N>,
    pub coefficients: CoefficientMode,
    pub horizon: usize,
}

/// Iterates indexed from t = 1 at position 0. Symmetric runs leave `v`, `y`
/// and `a` empty. `b[(t-1, s-1)]` is the b_{ts} actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmpTrajectory {
    pub z: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub b: Mat,
    pub a: Option<Mat>,
    pub seconds: Vec<f64>,
}

fn check_finite(x: &[f64], step: usize) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step });
    }
    let norm = norm2(x);
    let limit = DIVERGENCE_FACTOR * sqrt(x.len() as f64);
    if norm > limit {
        return Err(Error::Diverged { step, norm, limit });
    }
    Ok(())
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    Ok(())
}

/// Applies `nl` coordinate-wise to (iterates[0..t], side). Also returns the
/// averaged partials ⟨∂_s nl⟩ for s < t when `derivative` is given.
fn apply_nonlin<N: Nonlinearity>(
    nl: &N,
    iterates: &[Vec<f64>],
    side: &[Vec<f64>],
    derivative: Option<DerivativeMode>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = iterates.len();
    let n = iterates[0].len();
    let mut out = vec![0.0; n];
    let mut parts = vec![vec![0.0; n]; if derivative.is_some() { t } else { 0 }];
    let mut x = vec![0.0; t];
    let mut f = vec![0.0; side.len()];
    for i in 0..n {
        for (xs, it) in x.iter_mut().zip(iterates) {
            *xs = it[i];
        }
        for (fj, col) in f.iter_mut().zip(side) {
            *fj = col[i];
        }
        out[i] = nl.eval(&x, &f);
        match derivative {
            None => {}
            Some(DerivativeMode::ClosedForm) => {
                for (s, p) in parts.iter_mut().enumerate() {
                    p[i] = nl
                        .partial(&x, &f, s)
                        .ok_or_else(|| Error::InvalidArgument("nonlinearity has no closed-form derivative".into()))?;
                }
            }
            Some(DerivativeMode::FiniteDiff) => {
                for (s, p) in parts.iter_mut().enumerate() {
                    p[i] = finite_diff_partial(nl, &x, &f, s, FD_STEP);
                }
            }
            Some(DerivativeMode::Stein) => {
                return Err(Error::InvalidArgument(
                    "Stein estimates apply to state evolution, not empirical AMP coefficients".into(),
                ))
            }
        }
    }
    Ok((out, parts.iter().map(|p| sorted_mean(p)).collect()))
}

fn empirical_mode(mode: &CoefficientMode) -> Option<DerivativeMode> {
    match mode {
        CoefficientMode::Empirical { derivative } => Some(*derivative),
        CoefficientMode::Prescribed { .. } => None,
    }
}

fn check_side(cols: &[Vec<f64>], n: usize) -> Result<()> {
    cols.iter().try_for_each(|c| check_len(c, n))
}

/// z_t = W u_t − Σ_{s<t} b_ts u_s, u_{t+1} = u_{t+1}(z_{1:t}, f).
pub fn amp_run_sym<N: Nonlinearity>(cfg: &AmpConfig<'_, N>, clock: &dyn Clock) -> Result<AmpTrajectory> {
    let op = cfg.op;
    if !op.is_symmetric() {
        return Err(Error::InvalidArgument("symmetric AMP needs a symmetric operator".into()));
    }
    let n = op.rows();
    let tt = cfg.horizon;
    check_len(&cfg.u1, n)?;
    check_side(&cfg.side, n)?;
    if cfg.u.len() < tt {
        return Err(Error::Arity(format!("horizon {tt} needs {tt} nonlinearities, got {}", cfg.u.len())));
    }
    if let CoefficientMode::Prescribed { se } = &cfg.coefficients {
        if se.horizon < tt {
            return Err(Error::InvalidArgument(format!(
                "state evolution covers {} steps, horizon is {tt}",
                se.horizon
            )));
        }
    }
    let emp = empirical_mode(&cfg.coefficients);
    let mut b = Mat::zeros(tt, tt);
    let mut us = vec![cfg.u1.clone()];
    let mut zs: Vec<Vec<f64>> = Vec::with_capacity(tt);
    let mut seconds = Vec::with_capacity(tt);
    // Averaged partials of u_t, kept from the step that produced it.
    let mut pending: Vec<f64> = Vec::new();
    for t in 1..=tt {
        let start = clock.now();
        for s in 1..t {
            b[(t - 1, s - 1)] = match &cfg.coefficients {
                CoefficientMode::Prescribed { se } => se.b_ts(t, s),
                CoefficientMode::Empirical { .. } => pending[s - 1],
            };
        }
        let mut z = op.apply(&us[t - 1], false)?;
        for s in 1..t {
            let c = b[(t - 1, s - 1)];
            for (zi, ui) in z.iter_mut().zip(&us[s - 1]) {
                *zi -= c * ui;
            }
        }
        check_finite(&z, t)?;
        zs.push(z);
        let (next, parts) = apply_nonlin(&cfg.u[t - 1], &zs, &cfg.side, emp)?;
        check_finite(&next, t)?;
        us.push(next);
        pending = parts;
        seconds.push(clock.now() - start);
    }
    Ok(AmpTrajectory {
        z: zs,
        u: us,
        v: Vec::new(),
        y: Vec::new(),
        b,
        a: None,
        seconds,
    })
}

/// z_t = Wᵀu_t − Σ_{s<t} b_ts v_s, v_t = v_t(z_{1:t}, g),
/// y_t = W v_t − Σ_{s≤t} a_ts u_s, u_{t+1} = u_{t+1}(y_{1:t}, f).
pub fn amp_run_rect<N: Nonlinearity>(cfg: &AmpConfig<'_, N>, clock: &dyn Clock) -> Result<AmpTrajectory> {
    let op = cfg.op;
    let (m, n) = (op.rows(), op.cols());
    let gamma = m as f64 / n as f64;
    let tt = cfg.horizon;
    check_len(&cfg.u1, m)?;
    check_side(&cfg.side, m)?;
    check_side(&cfg.side_v, n)?;
    if cfg.u.len() < tt || cfg.v.len() < tt {
        return Err(Error::Arity(format!("horizon {tt} needs {tt} u- and v-nonlinearities")));
    }
    if let CoefficientMode::Prescribed { se } = &cfg.coefficients {
        if se.horizon < tt || se.a.is_none() {
            return Err(Error::InvalidArgument(format!(
                "need a rectangular state evolution covering {tt} steps"
            )));
        }
    }
    let emp = empirical_mode(&cfg.coefficients);
    let mut a = Mat::zeros(tt, tt);
    let mut b = Mat::zeros(tt, tt);
    let mut us = vec![cfg.u1.clone()];
    let (mut zs, mut vs, mut ys): (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) = (Vec::new(), Vec::new(), Vec::new());
    let mut seconds = Vec::with_capacity(tt);
    let mut pending_u: Vec<f64> = Vec::new();
    for t in 1..=tt {
        let start = clock.now();
        for s in 1..t {
            b[(t - 1, s - 1)] = match &cfg.coefficients {
                CoefficientMode::Prescribed { se } => se.b_ts(t, s),
                CoefficientMode::Empirical { .. } => gamma * pending_u[s - 1],
            };
        }
        let mut z = op.apply(&us[t - 1], true)?;
        for s in 1..t {
            let c = b[(t - 1, s - 1)];
            for (zi, vi) in z.iter_mut().zip(&vs[s - 1]) {
                *zi -= c * vi;
            }
        }
        check_finite(&z, t)?;
        zs.push(z);
        let (v, parts_v) = apply_nonlin(&cfg.v[t - 1], &zs, &cfg.side_v, emp)?;
        check_finite(&v, t)?;
        for s in 1..=t {
            a[(t - 1, s - 1)] = match &cfg.coefficients {
                CoefficientMode::Prescribed { se } => se.a_ts(t, s).unwrap_or(0.0),
                CoefficientMode::Empirical { .. } => parts_v[s - 1],
            };
        }
        let mut y = op.apply(&v, false)?;
        vs.push(v);
        for s in 1..=t {
            let c = a[(t - 1, s - 1)];
            for (yi, ui) in y.iter_mut().zip(&us[s - 1]) {
                *yi -= c * ui;
            }
        }
        check_finite(&y, t)?;
        ys.push(y);
        let (next, parts_u) = apply_nonlin(&cfg.u[t - 1], &ys, &cfg.side, emp)?;
        check_finite(&next, t)?;
        us.push(next);
        pending_u = parts_u;
        seconds.push(clock.now() - start);
    }
    Ok(AmpTrajectory {
        z: zs,
        u: us,
        v: vs,
        y: ys,
        b,
        a: Some(a),
        seconds,
    })
}

/// Soft-threshold levels θ_t for compressed-sensing AMP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdSchedule {
    Constant { theta: f64 },
    /// θ_t = values[t−1], the last value repeating.
    Explicit { values: Vec<f64> },
    /// θ_t = α ‖z_t‖ / √m.
    Adaptive { alpha: f64 },
}

impl ThresholdSchedule {
    fn theta(&self, t: usize, z: &[f64]) -> f64 {
        match self {
            Self::Constant { theta } => *theta,
            Self::Explicit { values } => values[(t - 1).min(values.len() - 1)],
            Self::Adaptive { alpha } => alpha * norm2(z) / sqrt(z.len() as f64),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant { theta } => *theta >= 0.0,
            Self::Explicit { values } => !values.is_empty() && values.iter().all(|v| *v >= 0.0),
            Self::Adaptive { alpha } => *alpha >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid threshold schedule {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsTrajectory {
    /// Estimate x_{T+1}.
    pub x: Vec<f64>,
    /// Residual z_T.
    pub z: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// b_{t,t−1} used at step t.
    pub onsager: Vec<f64>,
    /// ‖x_{t+1} − x‖²/n per step, when the truth is known.
    pub mse: Vec<f64>,
    /// ‖x_{t+1} − x‖/‖x‖ per step, when the truth is known.
    pub relative_error: Vec<f64>,
    pub seconds: Vec<f64>,
}

impl CsTrajectory {
    pub fn final_relative_error(&self) -> Option<f64> {
        self.relative_error.last().copied()
    }
}

/// z_t = y − W x_t + b_{t,t−1} z_{t−1}, x_{t+1} = η(Wᵀz_t + x_t; θ_t), from
/// x_1 = 0 and z_0 = 0, with b_{t,t−1} = (n/m)⟨η′(Wᵀz_{t−1} + x_{t−1})⟩.
pub fn amp_run_cs(
    op: &MatrixOperator,
    y: &[f64],
    thresholds: &ThresholdSchedule,
    horizon: usize,
    truth: Option<&[f64]>,
    clock: &dyn Clock,
) -> Result<CsTrajectory> {
    let (m, n) = (op.rows(), op.cols());
    if m == 0 {
        return Err(Error::InvalidArgument("no measurements".into()));
    }
    check_len(y, m)?;
    if let Some(x0) = truth {
        check_len(x0, n)?;
    }
    thresholds.validate()?;
    let truth_norm = truth.map(norm2);
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; m];
    let mut b = 0.0;
    let mut out = CsTrajectory {
        x: Vec::new(),
        z: Vec::new(),
        thresholds: Vec::new(),
        onsager: Vec::new(),
        mse: Vec::new(),
        relative_error: Vec::new(),
        seconds: Vec::new(),
    };
    for t in 1..=horizon {
        let start = clock.now();
        let wx = op.apply(&x, false)?;
        for i in 0..m {
            z[i] = y[i] - wx[i] + b * z[i];
        }
        check_finite(&z, t)?;
        let theta = thresholds.theta(t, &z);
        let mut r = op.apply(&z, true)?;
        let mut active = 0usize;
        for (ri, xi) in r.iter_mut().zip(&x) {
            *ri += xi;
            if crate::math::abs(*ri) > theta {
                active += 1;
            }
        }
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi = soft_threshold(*ri, theta);
        }
        check_finite(&x, t)?;
        out.onsager.push(b);
        out.thresholds.push(theta);
        b = active as f64 / m as f64;
        if let (Some(x0), Some(nrm)) = (truth, truth_norm) {
            let err: f64 = x.iter().zip(x0).map(|(a, b)| sq(a - b)).sum();
            out.mse.push(err / n as f64);
            out.relative_error.push(if nrm > 0.0 {
                sqrt(err) / nrm
            } else if err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
        }
        out.seconds.push(clock.now() - start);
    }
    out.x = x;
    out.z = z;
    Ok(out)
}

/// Soft-thresholding phase transition: returns (ρ(δ), α*(δ)) where
/// ρ(δ) = max_α [1 − (2/δ) M(α)] / [1 + α² − 2 M(α)], M(α) = (1 + α²)Φ(−α) − αφ(α),
/// and α* is the maximizing threshold multiplier.
pub fn dt_curve(delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("undersampling ratio must lie in (0, 1], got {delta}")));
    }
    let rho = |a: f64| {
        let m = (1.0 + a * a) * norm_cdf(-a) - a * norm_pdf(a);
        (1.0 - 2.0 * m / delta) / (1.0 + a * a - 2.0 * m)
    };
    // Coarse scan, then golden-section refinement around the best cell.
    let (lo, hi, steps) = (1e-6, 6.0, 600);
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|i| lo + h * i as f64)
        .max_by(|a, b| rho(*a).total_cmp(&rho(*b)))
        .unwrap_or(lo);
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = 0.5 * (sqrt(5.0) - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if rho(c) > rho(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let alpha = 0.5 * (a + b);
    Ok((rho(alpha), alpha))
}
