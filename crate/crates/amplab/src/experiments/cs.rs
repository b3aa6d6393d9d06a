//! Soft-threshold AMP success rates over a (δ, ρ) grid for several sensing
//! ensembles, compared away from the minimax phase-transition curve.
//!
//! ρ is the number of nonzeros per measurement, so the signal is
//! Bernoulli(ρδ)-Gaussian. A matrix is drawn once per (δ, trial) and reused
//! across ρ; a signal is drawn once per (δ, ρ, trial) and reused across
//! sensing ensembles.

use amplab_core::amp::{amp_run_cs, dt_curve, ThresholdSchedule};
use amplab_core::ensembles::{sample_rectangular, Basis, RectEnsembleSpec};
use amplab_core::moments::ScalarLaw;
use amplab_core::operator::MatrixOperator;
use amplab_core::rng::{stream_rng, streams, trial_seed};
use amplab_core::spectral::SpectralSpec;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use super::Ctx;
use crate::config::{CsStudy, Sensing};
use crate::io::{fmt_f64, ArtifactDir, Table};

/// An m×n sensing matrix with entries of variance 1/m, or the invariant
/// analogue with the same limiting singular-value law.
pub fn sensing_matrix(kind: Sensing, m: usize, n: usize, seed: u64) -> Result<MatrixOperator> {
    let spec = match kind {
        Sensing::Gaussian => RectEnsembleSpec::GaussianWhiteNoise,
        // O D Qᵀ with Q a signed, permuted Hadamard matrix and D drawn from
        // the white-noise singular-value law. The left factor O drops out of
        // AMP (it rotates y and z_t together), so this behaves as m
        // subsampled Hadamard rows with a random diagonal in front.
        Sensing::SubsampledHadamard => RectEnsembleSpec::RectInvariant {
            singular_value_law: SpectralSpec::MarchenkoPastur { gamma: m as f64 / n as f64 },
            left_basis: Basis::Dct2,
            right_basis: Basis::Hadamard,
        },
    };
    let op = sample_rectangular(&spec, m, n, seed)?.op;
    Ok(op.scaled((n as f64 / m as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsPoint {
    pub rho: f64,
    /// |ρ − ρ_DT(δ)| below the band.
    pub boundary: bool,
    /// Success rate per sensing ensemble, in configuration order.
    pub rates: Vec<f64>,
    /// Largest |rate − rate of the first ensemble|.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub delta: f64,
    pub m: usize,
    pub alpha: f64,
    pub rho_dt: f64,
    pub points: Vec<CsPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsSummary {
    pub n: usize,
    pub trials: usize,
    pub sensing: Vec<String>,
    pub deltas: Vec<DeltaSummary>,
    pub max_off_boundary_difference: f64,
    pub pass: bool,
}

pub fn run(study: &CsStudy, ctx: &Ctx<'_>, dir: &mut ArtifactDir) -> Result<CsSummary> {
    let n = study.n;
    let trials = ctx.trials;
    let nr = study.rhos.len();
    let ns = study.sensing.len();
    let mut deltas = Vec::with_capacity(study.deltas.len());
    let mut max_diff = 0.0f64;
    for (di, &delta) in study.deltas.iter().enumerate() {
        let m = ((delta * n as f64).round() as usize).max(1);
        let (rho_dt, alpha_dt) = dt_curve(delta)?;
        let alpha = study.alpha.unwrap_or(alpha_dt);
        let schedule = ThresholdSchedule::Adaptive { alpha };
        // outcome[t][ri * ns + si]
        let outcome = ctx.pool.try_map(trials, |t| {
            let seed = trial_seed(ctx.seed, (di * trials + t) as u64);
            let ops = study
                .sensing
                .iter()
                .map(|&s| sensing_matrix(s, m, n, seed).with_context(|| format!("sampling {} at δ = {delta}", s.name())))
                .collect::<Result<Vec<_>>>()?;
            let mut ok = Vec::with_capacity(nr * ns);
            for (ri, &rho) in study.rhos.iter().enumerate() {
                let law = ScalarLaw::BernoulliGaussian { p: (rho * delta).min(1.0) };
                let mut rng = stream_rng(ctx.seed, ((di * nr + ri) * trials + t) as u64, streams::SIGNAL);
                let x: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
                for op in &ops {
                    let y = op.apply(&x, false)?;
                    // A diverging run counts as a failure.
                    let success = amp_run_cs(op, &y, &schedule, study.horizon, Some(&x), ctx.clock)
                        .ok()
                        .and_then(|tr| tr.final_relative_error())
                        .is_some_and(|e| e <= study.success_tolerance);
                    ok.push(success);
                }
            }
            Ok(ok)
        })?;
        let mut points = Vec::with_capacity(nr);
        for (ri, &rho) in study.rhos.iter().enumerate() {
            let rates: Vec<f64> = (0..ns)
                .map(|si| outcome.iter().filter(|o| o[ri * ns + si]).count() as f64 / trials as f64)
                .collect();
            let difference = rates.iter().map(|r| (r - rates[0]).abs()).fold(0.0, f64::max);
            let boundary = (rho - rho_dt).abs() < study.boundary_band;
            if !boundary {
                max_diff = max_diff.max(difference);
            }
            points.push(CsPoint {
                rho,
                boundary,
                rates,
                difference,
            });
        }
        deltas.push(DeltaSummary {
            delta,
            m,
            alpha,
            rho_dt,
            points,
        });
    }
    for (si, s) in study.sensing.iter().enumerate() {
        let mut table = Table::new(["delta", "rho", "success_rate", "successes", "trials"]);
        for d in &deltas {
            for p in &d.points {
                table.push(vec![
                    fmt_f64(d.delta),
                    fmt_f64(p.rho),
                    fmt_f64(p.rates[si]),
                    ((p.rates[si] * trials as f64).round() as usize).to_string(),
                    trials.to_string(),
                ]);
            }
        }
        dir.write_table(&format!("success_{}.csv", s.name()), &table)?;
    }
    let mut curve = Table::new(["delta", "rho_dt", "alpha"]);
    for d in &deltas {
        curve.push(vec![fmt_f64(d.delta), fmt_f64(d.rho_dt), fmt_f64(d.alpha)]);
    }
    dir.write_table("transition.csv", &curve)?;
    Ok(CsSummary {
        n,
        trials,
        sensing: study.sensing.iter().map(|s| s.name().to_string()).collect(),
        deltas,
        max_off_boundary_difference: max_diff,
        pass: max_diff <= study.max_difference,
    })
}
