//! State evolution for symmetric (GOE prescription) and rectangular
//! (white-noise prescription) AMP, by Monte Carlo over the limiting law.
//!
//! Gaussian iterates are built from fixed standard normal columns G_r as
//! Z_t = Σ_r L[t][r] G_r with L a Cholesky factor grown one row per step, so
//! Σ_s is exactly the leading block of Σ_t and every step reuses the same
//! underlying draws. Samples are split into fixed-size blocks with their own
//! streams and reduced in block order, which makes results independent of
//! the executor.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{reduce_sum, Executor};
use crate::linalg::{cholesky_psd, spd_inverse, Mat};
use crate::math::sqrt;
use crate::moments::ScalarLaw;
use crate::nonlin::{finite_diff_partial, Nonlin, Nonlinearity, FD_STEP};
use crate::rng::{fill_normal, stream_rng, streams};

pub const DEFAULT_SE_SAMPLES: usize = 1_000_000;
pub const DEFAULT_BLOCK_SIZE: usize = 1 << 14;
/// Covariances with a larger condition number count as singular.
pub const MAX_CONDITION: f64 = 1e12;
const CHOLESKY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    ClosedForm,
    FiniteDiff,
    /// b = Σ⁻¹ E[Z u(Z, F)] by Stein's lemma; needs an invertible Σ.
    Stein,
}

fn default_samples() -> usize {
    DEFAULT_SE_SAMPLES
}
fn default_derivative() -> DerivativeMode {
    DerivativeMode::ClosedForm
}
fn default_fd_step() -> f64 {
    FD_STEP
}
fn default_block_size() -> usize {
    DEFAULT_BLOCK_SIZE
}
fn default_max_condition() -> f64 {
    MAX_CONDITION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_derivative")]
    pub derivative: DerivativeMode,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    #[serde(default = "default_max_condition")]
    pub max_condition: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SE_SAMPLES,
            seed: 0,
            derivative: DerivativeMode::ClosedForm,
            fd_step: FD_STEP,
            block_size: DEFAULT_BLOCK_SIZE,
            max_condition: MAX_CONDITION,
        }
    }
}

/// Law of (U₁, F₁, …, F_k), with independent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialLaw {
    pub u1: ScalarLaw,
    #[serde(default)]
    pub side: Vec<ScalarLaw>,
}

impl InitialLaw {
    pub fn standard() -> Self {
        Self {
            u1: ScalarLaw::StandardNormal,
            side: Vec::new(),
        }
    }
}

/// Symmetric model: `u[j]` is u_{j+2}, a function of (z_1..z_{j+1}, f).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SEModel<N = Nonlin> {
    pub horizon: usize,
    pub init: InitialLaw,
    pub u: Vec<N>,
    #[serde(default)]
    pub mc: McConfig,
}

/// Rectangular model: `v[j]` is v_{j+1}(z_1..z_{j+1}, g) and `u[j]` is
/// u_{j+2}(y_1..y_{j+1}, f).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSEModel<N = Nonlin> {
    pub horizon: usize,
    pub gamma: f64,
    pub init: InitialLaw,
    #[serde(default)]
    pub side_v: Vec<ScalarLaw>,
    pub v: Vec<N>,
    pub u: Vec<N>,
    #[serde(default)]
    pub mc: McConfig,
}

/// Monte-Carlo state evolution. Matrices are T×T; the step-t quantity is the
/// leading t×t block. `b[(t, s)]` holds b_{t+1, s+1} (0-based storage).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SEResult {
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub derivative: DerivativeMode,
    pub sigma: Mat,
    pub sigma_se: Mat,
    pub b: Mat,
    pub b_se: Mat,
    /// Rectangular only.
    pub gamma: Option<f64>,
    pub omega: Option<Mat>,
    pub omega_se: Option<Mat>,
    pub a: Option<Mat>,
    pub a_se: Option<Mat>,
}

impl SEResult {
    /// Σ_t for 1 ≤ t ≤ T.
    pub fn sigma_at(&self, t: usize) -> Mat {
        self.sigma.leading_block(t)
    }

    /// Ω_t for 1 ≤ t ≤ T (rectangular).
    pub fn omega_at(&self, t: usize) -> Option<Mat> {
        self.omega.as_ref().map(|o| o.leading_block(t))
    }

    /// b_{ts} in 1-based indices.
    pub fn b_ts(&self, t: usize, s: usize) -> f64 {
        self.b[(t - 1, s - 1)]
    }

    /// a_{ts} in 1-based indices (rectangular).
    pub fn a_ts(&self, t: usize, s: usize) -> Option<f64> {
        self.a.as_ref().map(|a| a[(t - 1, s - 1)])
    }
}

/// Sums and sums of squares of per-sample values, block by block.
struct Pass<'a> {
    exec: &'a dyn Executor,
    mc: &'a McConfig,
    stream: u64,
}

impl Pass<'_> {
    fn nblocks(&self) -> usize {
        self.mc.samples.div_ceil(self.mc.block_size)
    }

    /// `sample(rng, out)` writes `width` values per sample; returns (mean, s.e.) per value.
    fn run(
        &self,
        width: usize,
        sample: &(dyn Fn(&mut crate::rng::StreamRng, &mut [f64]) -> Result<()> + Sync),
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.mc.samples;
        let bs = self.mc.block_size;
        let job = |block: usize| {
            let mut rng = stream_rng(self.mc.seed, block as u64, self.stream);
            let count = bs.min(n - block * bs);
            // Slot 2·width flags a failure inside the block.
            let mut acc = vec![0.0; 2 * width + 1];
            let mut vals = vec![0.0; width];
            for _ in 0..count {
                if sample(&mut rng, &mut vals).is_err() {
                    acc[2 * width] = 1.0;
                    break;
                }
                for (j, &v) in vals.iter().enumerate() {
                    acc[j] += v;
                    acc[width + j] += v * v;
                }
            }
            acc
        };
        let blocks = self.exec.run(self.nblocks(), &job);
        let tot = reduce_sum(&blocks);
        if tot[2 * width] != 0.0 {
            // Re-run one sample on the calling thread to surface the error.
            let mut rng = stream_rng(self.mc.seed, 0, self.stream);
            let mut vals = vec![0.0; width];
            sample(&mut rng, &mut vals)?;
            return Err(Error::InvalidArgument("state-evolution sampler failed".into()));
        }
        let nf = n as f64;
        let mut means = vec![0.0; width];
        let mut ses = vec![0.0; width];
        for j in 0..width {
            let m = tot[j] / nf;
            let var = if n > 1 {
                ((tot[width + j] - nf * m * m) / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            means[j] = m;
            ses[j] = sqrt(var / nf);
        }
        for (j, m) in means.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::NonFinite { step: j });
            }
        }
        Ok((means, ses))
    }
}

fn check_mc(mc: &McConfig) -> Result<()> {
    if mc.samples < 2 {
        return Err(Error::InvalidArgument("state evolution needs at least two samples".into()));
    }
    if mc.block_size == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    if !(mc.fd_step > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {}", mc.fd_step)));
    }
    Ok(())
}

/// Derivative estimates of `nl` at (x_1..x_t, side) for s < t, written to `out`.
/// `prec_x` is Σ⁻¹x for the Stein mode.
fn derivatives<N: Nonlinearity>(
    nl: &N,
    mode: DerivativeMode,
    h: f64,
    x: &[f64],
    side: &[f64],
    value: f64,
    prec_x: &[f64],
    out: &mut [f64],
) -> Result<()> {
    for s in 0..x.len() {
        out[s] = match mode {
            DerivativeMode::ClosedForm => nl
                .partial(x, side, s)
                .ok_or_else(|| Error::InvalidArgument("nonlinearity has no closed-form derivative".into()))?,
            DerivativeMode::FiniteDiff => finite_diff_partial(nl, x, side, s, h),
            DerivativeMode::Stein => prec_x[s] * value,
        };
    }
    Ok(())
}

fn stein_precision(mode: DerivativeMode, cov: &Mat, max_condition: f64) -> Result<Option<Mat>> {
    match mode {
        DerivativeMode::Stein => spd_inverse(cov, max_condition).map(Some),
        _ => Ok(None),
    }
}

/// Appends the Cholesky row for the newest coordinate of `cov` to `l`.
fn grow_factor(l: &mut Mat, cov: &Mat) {
    let t = cov.rows;
    let row = cholesky_psd(cov, CHOLESKY_TOL);
    for r in 0..t {
        l[(t - 1, r)] = row[(t - 1, r)];
    }
}

fn correlated(l: &Mat, g: &[f64], t: usize, z: &mut [f64]) {
    for r in 0..t {
        z[r] = (0..=r).map(|q| l[(r, q)] * g[q]).sum();
    }
}

fn mul_vec(m: &Mat, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate().take(m.rows) {
        *o = (0..m.cols).map(|j| m[(i, j)] * x[j]).sum();
    }
}

/// GOE state evolution: Σ₁ = E[U₁²], Σ_{t+1}[r, s] = E[U_r U_s] with
/// Z_{1:t} ~ N(0, Σ_t) independent of (U₁, F), b_{ts} = E[∂_s u_t] for s < t, b_tt = 0.
pub fn se_goe<N: Nonlinearity>(model: &SEModel<N>, exec: &dyn Executor) -> Result<SEResult> {
    let tt = model.horizon;
    let mc = &model.mc;
    check_mc(mc)?;
    if model.u.len() + 1 < tt {
        return Err(Error::Arity(format!(
            "horizon {tt} needs {} nonlinearities, got {}",
            tt.saturating_sub(1),
            model.u.len()
        )));
    }
    let k = model.init.side.len();
    let mut sigma = Mat::zeros(tt, tt);
    let mut sigma_se = Mat::zeros(tt, tt);
    let mut b = Mat::zeros(tt, tt);
    let mut b_se = Mat::zeros(tt, tt);
    let result = |sigma, sigma_se, b, b_se| SEResult {
        horizon: tt,
        samples: mc.samples,
        seed: mc.seed,
        derivative: mc.derivative,
        sigma,
        sigma_se,
        b,
        b_se,
        gamma: None,
        omega: None,
        omega_se: None,
        a: None,
        a_se: None,
    };
    if tt == 0 {
        return Ok(result(sigma, sigma_se, b, b_se));
    }
    let pass = Pass {
        exec,
        mc,
        stream: streams::STATE_EVOLUTION,
    };
    let init = &model.init;
    // Per-sample draw order is fixed: U₁, F₁..F_k, then T normals.
    let draw = move |rng: &mut crate::rng::StreamRng, f: &mut [f64], g: &mut [f64]| {
        let u1 = init.u1.sample(rng);
        for (x, law) in f.iter_mut().zip(&init.side) {
            *x = law.sample(rng);
        }
        fill_normal(rng, g);
        u1
    };

    let (m, s) = pass.run(1, &|rng, out| {
        let (mut f, mut g) = (vec![0.0; k], vec![0.0; tt]);
        let u1 = draw(rng, &mut f, &mut g);
        out[0] = u1 * u1;
        Ok(())
    })?;
    sigma[(0, 0)] = m[0];
    sigma_se[(0, 0)] = s[0];
    if !(m[0] > 0.0) {
        return Err(Error::InvalidArgument("E[U1^2] must be positive".into()));
    }

    let mut l = Mat::zeros(tt, tt);
    for t in 1..tt {
        // Σ_t is known; add Z_t and estimate row t+1 of Σ and b.
        let cov = sigma.leading_block(t);
        grow_factor(&mut l, &cov);
        let prec = stein_precision(mc.derivative, &cov, mc.max_condition)?;
        let (lr, prec) = (&l, &prec);
        let width = (t + 1) + t;
        let (m, s) = pass.run(width, &|rng, out| {
            let (mut f, mut g) = (vec![0.0; k], vec![0.0; tt]);
            let u1 = draw(rng, &mut f, &mut g);
            let mut z = vec![0.0; t];
            correlated(lr, &g, t, &mut z);
            let mut us = vec![0.0; t + 1];
            us[0] = u1;
            for j in 1..=t {
                us[j] = model.u[j - 1].eval(&z[..j], &f);
            }
            let last = us[t];
            for r in 0..=t {
                out[r] = us[r] * last;
            }
            let mut pz = vec![0.0; t];
            if let Some(p) = prec {
                mul_vec(p, &z, &mut pz);
            }
            derivatives(&model.u[t - 1], mc.derivative, mc.fd_step, &z, &f, last, &pz, &mut out[t + 1..])
        })?;
        for r in 0..=t {
            sigma[(r, t)] = m[r];
            sigma[(t, r)] = m[r];
            sigma_se[(r, t)] = s[r];
            sigma_se[(t, r)] = s[r];
        }
        for q in 0..t {
            b[(t, q)] = m[t + 1 + q];
            b_se[(t, q)] = s[t + 1 + q];
        }
    }
    Ok(result(sigma, sigma_se, b, b_se))
}

/// White-noise state evolution with aspect ratio γ = m/n:
/// Ω₁ = γE[U₁²], Σ_t[r, s] = E[V_r V_s], Ω_{t+1}[r, s] = γE[U_r U_s],
/// a_{ts} = E[∂_s v_t], b_{ts} = γE[∂_s u_t].
pub fn se_whitenoise<N: Nonlinearity>(model: &RectSEModel<N>, exec: &dyn Executor) -> Result<SEResult> {
    let tt = model.horizon;
    let mc = &model.mc;
    let gamma = model.gamma;
    check_mc(mc)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("aspect ratio must be positive, got {gamma}")));
    }
    if model.v.len() < tt || model.u.len() + 1 < tt {
        return Err(Error::Arity(format!(
            "horizon {tt} needs {tt} v-nonlinearities and {} u-nonlinearities",
            tt.saturating_sub(1)
        )));
    }
    let (k, lv) = (model.init.side.len(), model.side_v.len());
    let z = || Mat::zeros(tt, tt);
    let (mut sigma, mut sigma_se, mut omega, mut omega_se) = (z(), z(), z(), z());
    let (mut a, mut a_se, mut b, mut b_se) = (z(), z(), z(), z());
    let finish = |sigma, sigma_se, b, b_se, omega, omega_se, a, a_se| SEResult {
        horizon: tt,
        samples: mc.samples,
        seed: mc.seed,
        derivative: mc.derivative,
        sigma,
        sigma_se,
        b,
        b_se,
        gamma: Some(gamma),
        omega: Some(omega),
        omega_se: Some(omega_se),
        a: Some(a),
        a_se: Some(a_se),
    };
    if tt == 0 {
        return Ok(finish(sigma, sigma_se, b, b_se, omega, omega_se, a, a_se));
    }
    let u_pass = Pass {
        exec,
        mc,
        stream: streams::STATE_EVOLUTION,
    };
    let v_pass = Pass {
        exec,
        mc,
        stream: streams::STATE_EVOLUTION_AUX,
    };
    let init = &model.init;
    let side_v = &model.side_v;
    let draw_u = move |rng: &mut crate::rng::StreamRng, f: &mut [f64], g: &mut [f64]| {
        let u1 = init.u1.sample(rng);
        for (x, law) in f.iter_mut().zip(&init.side) {
            *x = law.sample(rng);
        }
        fill_normal(rng, g);
        u1
    };
    let draw_v = move |rng: &mut crate::rng::StreamRng, gs: &mut [f64], g: &mut [f64]| {
        for (x, law) in gs.iter_mut().zip(side_v) {
            *x = law.sample(rng);
        }
        fill_normal(rng, g);
    };

    let (m, s) = u_pass.run(1, &|rng, out| {
        let (mut f, mut g) = (vec![0.0; k], vec![0.0; tt]);
        let u1 = draw_u(rng, &mut f, &mut g);
        out[0] = u1 * u1;
        Ok(())
    })?;
    if !(m[0] > 0.0) {
        return Err(Error::InvalidArgument("E[U1^2] must be positive".into()));
    }
    omega[(0, 0)] = gamma * m[0];
    omega_se[(0, 0)] = gamma * s[0];

    let mut l_omega = Mat::zeros(tt, tt);
    let mut l_sigma = Mat::zeros(tt, tt);
    for t in 1..=tt {
        // V side: Z_{1:t} ~ N(0, Ω_t); row t of Σ and a_t.
        let cov = omega.leading_block(t);
        grow_factor(&mut l_omega, &cov);
        let prec = stein_precision(mc.derivative, &cov, mc.max_condition)?;
        let (lr, pr) = (&l_omega, &prec);
        let (m, s) = v_pass.run(2 * t, &|rng, out| {
            let (mut gs, mut g) = (vec![0.0; lv], vec![0.0; tt]);
            draw_v(rng, &mut gs, &mut g);
            let mut zz = vec![0.0; t];
            correlated(lr, &g, t, &mut zz);
            let mut vs = vec![0.0; t];
            for j in 1..=t {
                vs[j - 1] = model.v[j - 1].eval(&zz[..j], &gs);
            }
            let last = vs[t - 1];
            for r in 0..t {
                out[r] = vs[r] * last;
            }
            let mut pz = vec![0.0; t];
            if let Some(p) = pr {
                mul_vec(p, &zz, &mut pz);
            }
            derivatives(&model.v[t - 1], mc.derivative, mc.fd_step, &zz, &gs, last, &pz, &mut out[t..])
        })?;
        for r in 0..t {
            sigma[(r, t - 1)] = m[r];
            sigma[(t - 1, r)] = m[r];
            sigma_se[(r, t - 1)] = s[r];
            sigma_se[(t - 1, r)] = s[r];
            a[(t - 1, r)] = m[t + r];
            a_se[(t - 1, r)] = s[t + r];
        }
        if t == tt {
            break;
        }
        // U side: Y_{1:t} ~ N(0, Σ_t); row t+1 of Ω and b_{t+1}.
        let cov = sigma.leading_block(t);
        grow_factor(&mut l_sigma, &cov);
        let prec = stein_precision(mc.derivative, &cov, mc.max_condition)?;
        let (lr, pr) = (&l_sigma, &prec);
        let (m, s) = u_pass.run((t + 1) + t, &|rng, out| {
            let (mut f, mut g) = (vec![0.0; k], vec![0.0; tt]);
            let u1 = draw_u(rng, &mut f, &mut g);
            let mut y = vec![0.0; t];
            correlated(lr, &g, t, &mut y);
            let mut us = vec![0.0; t + 1];
            us[0] = u1;
            for j in 1..=t {
                us[j] = model.u[j - 1].eval(&y[..j], &f);
            }
            let last = us[t];
            for r in 0..=t {
                out[r] = us[r] * last;
            }
            let mut py = vec![0.0; t];
            if let Some(p) = pr {
                mul_vec(p, &y, &mut py);
            }
            derivatives(&model.u[t - 1], mc.derivative, mc.fd_step, &y, &f, last, &py, &mut out[t + 1..])
        })?;
        for r in 0..=t {
            omega[(r, t)] = gamma * m[r];
            omega[(t, r)] = gamma * m[r];
            omega_se[(r, t)] = gamma * s[r];
            omega_se[(t, r)] = gamma * s[r];
        }
        for q in 0..t {
            b[(t, q)] = gamma * m[t + 1 + q];
            b_se[(t, q)] = gamma * s[t + 1 + q];
        }
    }
    Ok(finish(sigma, sigma_se, b, b_se, omega, omega_se, a, a_se))
}
