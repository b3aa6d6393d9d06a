//! AMP on the two-community block model and on the Gaussian Z2
//! synchronization model with the same signal strength.
//!
//! With side information f entering the first update through tanh(z + s f),
//! the iterates of AMP on Y = (√λ/n) f fᵀ + W behave like μ_t f + σ_t G.
//! Writing m_1 = s and m_t = μ_t for t ≥ 2,
//!
//! μ_1 = 0,  μ_{t+1} = √λ E tanh(σ_t G + m_t),  σ_1² = 1,  σ_{t+1}² = E tanh²(σ_t G + m_t),
//!
//! and the noise part evolves as symmetric AMP on W with nonlinearities
//! tanh(z + m_t f), which gives the Onsager coefficients.

use amplab_core::amp::{amp_run_sym, AmpConfig, CoefficientMode};
use amplab_core::ensembles::{sample_symmetric, sbm_adjacency, sbm_probabilities, SymEnsembleSpec};
use amplab_core::linalg::Mat;
use amplab_core::math::{gauss_hermite, mean_and_se, sorted_mean};
use amplab_core::moments::ScalarLaw;
use amplab_core::nonlin::Nonlin;
use amplab_core::operator::MatrixOperator;
use amplab_core::rng::{rademacher, stream_rng, streams, trial_seed};
use amplab_core::stateevo::{se_goe, InitialLaw, SEModel, SEResult};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use super::{draw_columns, mean_square, Ctx};
use crate::config::SbmStudy;
use crate::io::{fmt_f64, ArtifactDir, Table};

const QUADRATURE_NODES: usize = 80;

/// Overlap and variance predictions for t = 1..=horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPrediction {
    pub mu: Vec<f64>,
    pub sigma_sq: Vec<f64>,
}

/// The μ_t, σ_t² recursion by Gauss–Hermite quadrature.
pub fn predict(horizon: usize, lambda: f64, side_weight: f64) -> SignalPrediction {
    let (x, w) = gauss_hermite(QUADRATURE_NODES);
    let expect = |f: &dyn Fn(f64) -> f64| x.iter().zip(&w).map(|(g, wi)| wi * f(*g)).sum::<f64>();
    let mut mu = vec![0.0f64];
    let mut sigma_sq = vec![1.0f64];
    let mut shift = side_weight;
    for _ in 1..horizon {
        let s = sigma_sq.last().unwrap().sqrt();
        let m = shift;
        let a = expect(&|g| (s * g + m).tanh());
        let b = expect(&|g| (s * g + m).tanh().powi(2));
        mu.push(lambda.sqrt() * a);
        sigma_sq.push(b);
        shift = *mu.last().unwrap();
    }
    mu.truncate(horizon);
    sigma_sq.truncate(horizon);
    SignalPrediction { mu, sigma_sq }
}

/// State-evolution model for the noise part: u_{t+1} = tanh(z_t + m_t f).
pub fn noise_model(pred: &SignalPrediction, side_weight: f64, mc: amplab_core::stateevo::McConfig) -> SEModel {
    let horizon = pred.mu.len();
    let u = (0..horizon)
        .map(|j| Nonlin::TanhShift {
            side_weight: if j == 0 { side_weight } else { pred.mu[j] },
        })
        .collect();
    SEModel {
        horizon,
        init: InitialLaw {
            u1: ScalarLaw::StandardNormal,
            side: vec![ScalarLaw::Rademacher],
        },
        u,
        mc,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheck {
    pub model: String,
    /// Mean over trials of ⟨f, z_t⟩.
    pub overlap: Vec<f64>,
    pub overlap_se: Vec<f64>,
    /// Mean over trials of ⟨z_t²⟩.
    pub second_moment: Vec<f64>,
    pub second_moment_se: Vec<f64>,
    /// Largest |empirical − predicted| / √(σ_t² + μ_t²) over both statistics.
    pub max_scaled_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSummary {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub pbar: f64,
    pub lambda: f64,
    pub prediction: SignalPrediction,
    /// Largest gap between the quadrature σ_t² and the Monte-Carlo Σ_t[t,t].
    pub quadrature_vs_se: f64,
    pub models: Vec<ModelCheck>,
    pub pass: bool,
}

fn run_model(
    name: &str,
    study: &SbmStudy,
    ctx: &Ctx<'_>,
    se: &SEResult,
    pred: &SignalPrediction,
    dir: &mut ArtifactDir,
    observe: impl Fn(usize) -> Result<(MatrixOperator, Vec<f64>)> + Sync,
) -> Result<ModelCheck> {
    let horizon = study.horizon;
    let mut u = vec![Nonlin::TanhShift {
        side_weight: study.side_weight,
    }];
    u.resize(horizon, Nonlin::Tanh);
    let runs = ctx.pool.try_map(ctx.trials, |k| {
        let (op, f) = observe(k)?;
        let u1 = draw_columns(ctx.seed, k as u64, &[&ScalarLaw::StandardNormal], study.n).pop().expect("one column");
        let cfg = AmpConfig {
            op: &op,
            u1,
            side: vec![f.clone()],
            side_v: Vec::new(),
            u: u.clone(),
            v: Vec::new(),
            coefficients: CoefficientMode::Prescribed { se: se.clone() },
            horizon,
        };
        let traj = amp_run_sym(&cfg, ctx.clock).with_context(|| format!("AMP on {name} trial {k}"))?;
        let overlap: Vec<f64> = traj
            .z
            .iter()
            .map(|z| sorted_mean(&z.iter().zip(&f).map(|(a, b)| a * b).collect::<Vec<_>>()))
            .collect();
        let second: Vec<f64> = traj.z.iter().map(|z| mean_square(z)).collect();
        Ok((overlap, second))
    })?;
    let mut table = Table::new(["trial", "t", "overlap", "second_moment"]);
    for (k, (o, s)) in runs.iter().enumerate() {
        for t in 0..horizon {
            table.push(vec![k.to_string(), (t + 1).to_string(), fmt_f64(o[t]), fmt_f64(s[t])]);
        }
    }
    dir.write_table(&format!("{name}.csv"), &table)?;
    let column = |which: usize, t: usize| -> Vec<f64> { runs.iter().map(|r| if which == 0 { r.0[t] } else { r.1[t] }).collect() };
    let mut check = ModelCheck {
        model: name.into(),
        overlap: Vec::new(),
        overlap_se: Vec::new(),
        second_moment: Vec::new(),
        second_moment_se: Vec::new(),
        max_scaled_error: 0.0,
        pass: true,
    };
    for t in 0..horizon {
        let (o, ose) = mean_and_se(&column(0, t));
        let (s, sse) = mean_and_se(&column(1, t));
        let scale = (pred.sigma_sq[t] + pred.mu[t] * pred.mu[t]).sqrt();
        let err = ((o - pred.mu[t]).abs()).max((s - scale * scale).abs()) / scale;
        check.max_scaled_error = check.max_scaled_error.max(err);
        check.overlap.push(o);
        check.overlap_se.push(ose);
        check.second_moment.push(s);
        check.second_moment_se.push(sse);
    }
    check.pass = check.max_scaled_error <= study.tolerance;
    Ok(check)
}

pub fn run(study: &SbmStudy, ctx: &Ctx<'_>, dir: &mut ArtifactDir) -> Result<SbmSummary> {
    let n = study.n;
    let pbar = study.pbar.unwrap_or(5.0 * (n as f64).ln() / n as f64);
    let (p, q) = sbm_probabilities(n, pbar, study.lambda);
    if !(q >= 0.0 && p <= 1.0) {
        bail!("λ = {} with p̄ = {pbar} needs connection probabilities outside [0, 1]", study.lambda);
    }
    let pred = predict(study.horizon, study.lambda, study.side_weight);
    let model = noise_model(&pred, study.side_weight, study.mc.clone());
    let se = if study.horizon == 0 {
        None
    } else {
        Some(se_goe(&model, ctx.pool).context("state evolution")?)
    };
    let mut models = Vec::new();
    let mut gap = 0.0f64;
    if let Some(se) = &se {
        dir.write_json("state_evolution.json", se)?;
        for t in 0..study.horizon {
            gap = gap.max((se.sigma[(t, t)] - pred.sigma_sq[t]).abs());
        }
        let scale = 1.0 / (n as f64 * pbar * (1.0 - pbar)).sqrt();
        models.push(run_model("sbm", study, ctx, se, &pred, dir, |k| {
            let (a, f) = sbm_adjacency(n, p, q, trial_seed(ctx.seed, k as u64))?;
            let y = Mat::from_fn(n, n, |i, j| (a[(i, j)] - pbar) * scale);
            Ok((MatrixOperator::dense(y), f))
        })?);
        let signal = study.lambda.sqrt() / n as f64;
        models.push(run_model("z2_synchronization", study, ctx, se, &pred, dir, |k| {
            let mut rng = stream_rng(ctx.seed, k as u64, streams::SIGNAL);
            let f: Vec<f64> = (0..n).map(|_| rademacher(&mut rng)).collect();
            let goe = sample_symmetric(&SymEnsembleSpec::Goe, n, trial_seed(ctx.seed, (ctx.trials + k) as u64))?;
            let w = goe.op.materialize_dense(n * n)?;
            let y = Mat::from_fn(n, n, |i, j| w[(i, j)] + signal * f[i] * f[j]);
            Ok((MatrixOperator::dense(y), f))
        })?);
    }
    let mut table = Table::new(["t", "mu", "sigma_sq"]);
    for t in 0..study.horizon {
        table.push(vec![(t + 1).to_string(), fmt_f64(pred.mu[t]), fmt_f64(pred.sigma_sq[t])]);
    }
    dir.write_table("prediction.csv", &table)?;
    let pass = models.iter().all(|m| m.pass);
    Ok(SbmSummary {
        n,
        p,
        q,
        pbar,
        lambda: study.lambda,
        prediction: pred,
        quadrature_vs_se: gap,
        models,
        pass,
    })
}
