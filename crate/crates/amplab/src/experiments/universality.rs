//! AMP against state evolution, per ensemble and across ensembles.

use amplab_core::amp::{amp_run_rect, amp_run_sym, AmpConfig, AmpTrajectory, Clock, CoefficientMode};
use amplab_core::diagnostics::{
    compare_to_se, cross_ensemble_report, default_panel, rows_from_rect_u, rows_from_sym, sample_se_law, CrossEnsembleReport,
    EmpiricalRows, SeLayout, SeReport,
};
use amplab_core::ensembles::{sample_rectangular, sample_symmetric, RectEnsembleSpec, SymEnsembleSpec};
use amplab_core::math::mean_and_se;
use amplab_core::poly::MultiPoly;
use amplab_core::rng::trial_seed;
use amplab_core::stateevo::{se_goe, se_whitenoise, RectSEModel, SEModel, SEResult};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use super::{draw_columns, mean_square, Ctx};
use crate::config::{Coefficients, RectStudy, SymStudy};
use crate::io::{fmt_f64, ArtifactDir, Table};

/// Seed-averaged second moments of one family of iterates against the
/// state-evolution variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub iterate: String,
    pub mean_square: Vec<f64>,
    pub mean_square_se: Vec<f64>,
    pub predicted: Vec<f64>,
    pub relative_error: Vec<f64>,
    pub max_relative_error: f64,
    pub within_tolerance: bool,
}

impl MomentCheck {
    fn new(iterate: &str, per_trial: &[Vec<f64>], predicted: Vec<f64>, tolerance: f64) -> Self {
        let horizon = predicted.len();
        let mut mean = Vec::with_capacity(horizon);
        let mut se = Vec::with_capacity(horizon);
        let mut rel = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let col: Vec<f64> = per_trial.iter().map(|r| r[t]).collect();
            let (m, s) = mean_and_se(&col);
            rel.push((m - predicted[t]).abs() / predicted[t]);
            mean.push(m);
            se.push(s);
        }
        let max_rel = rel.iter().copied().fold(0.0, f64::max);
        Self {
            iterate: iterate.into(),
            mean_square: mean,
            mean_square_se: se,
            predicted,
            within_tolerance: rel.iter().all(|r| *r <= tolerance),
            relative_error: rel,
            max_relative_error: max_rel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub name: String,
    pub trials: usize,
    pub checks: Vec<MomentCheck>,
    /// Panel, marginal and covariance comparison of trial 0 with the limit law.
    pub report: SeReport,
    /// Fraction of panel functions with |z| within the threshold.
    pub panel_agreement: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalitySummary {
    pub horizon: usize,
    pub tolerance: f64,
    pub ensembles: Vec<EnsembleSummary>,
    pub cross: Option<CrossEnsembleReport>,
    pub pass: bool,
}

pub fn coefficient_mode(choice: Coefficients, se: &SEResult) -> CoefficientMode {
    match choice {
        Coefficients::Prescribed => CoefficientMode::Prescribed { se: se.clone() },
        Coefficients::Empirical => CoefficientMode::Empirical { derivative: se.derivative },
    }
}

fn diag(m: &amplab_core::linalg::Mat) -> Vec<f64> {
    (0..m.rows).map(|i| m[(i, i)]).collect()
}

fn trial_table(checks: &[(&str, &[f64], &[f64])]) -> Table {
    let mut headers = vec!["t".to_string()];
    for (name, _, _) in checks {
        headers.push(format!("{name}_mean_square"));
        headers.push(format!("{name}_predicted"));
    }
    let mut t = Table::new(headers);
    let horizon = checks.first().map_or(0, |c| c.1.len());
    for s in 0..horizon {
        let mut row = vec![(s + 1).to_string()];
        for (_, emp, pred) in checks {
            row.push(fmt_f64(emp[s]));
            row.push(fmt_f64(pred[s]));
        }
        t.push(row);
    }
    t
}

fn panel_table(report: &SeReport) -> Table {
    let mut t = Table::new(["function", "empirical", "empirical_se", "predicted", "predicted_se", "z_score"]);
    for e in &report.panel {
        let f = serde_json::to_string(&e.function).expect("polynomials serialize").replace(',', ";");
        t.push(vec![
            f,
            fmt_f64(e.empirical),
            fmt_f64(e.empirical_se),
            fmt_f64(e.predicted),
            fmt_f64(e.predicted_se),
            fmt_f64(e.z_score),
        ]);
    }
    t
}

fn agreement(report: &SeReport, z: f64) -> f64 {
    if report.panel.is_empty() {
        return 1.0;
    }
    report.panel.iter().filter(|e| e.z_score.abs() <= z).count() as f64 / report.panel.len() as f64
}

fn cross_report(groups: Vec<(String, Vec<EmpiricalRows>)>, panel: &[MultiPoly], dir: &mut ArtifactDir) -> Result<Option<CrossEnsembleReport>> {
    if groups.len() < 2 {
        return Ok(None);
    }
    let report = cross_ensemble_report(&groups, panel)?;
    let mut t = Table::new(["first", "second", "function", "difference", "combined_se", "z_score", "agree"]);
    for p in &report.pairs {
        for (i, f) in report.panel.iter().enumerate() {
            t.push(vec![
                p.first.clone(),
                p.second.clone(),
                serde_json::to_string(f)?.replace(',', ";"),
                fmt_f64(p.differences[i]),
                fmt_f64(p.combined_se[i]),
                fmt_f64(p.z_scores[i]),
                p.agree[i].to_string(),
            ]);
        }
    }
    dir.write_table("cross_ensemble.csv", &t)?;
    Ok(Some(report))
}

/// Input columns, one vector per column.
pub type Columns = Vec<Vec<f64>>;

/// One symmetric AMP run: matrix from `trial_seed(master, trial)`, u₁ and
/// side columns from the trial's input stream. Returns the trajectory and
/// the side columns.
pub fn sym_trial(
    spec: &SymEnsembleSpec,
    n: usize,
    model: &SEModel,
    mode: &CoefficientMode,
    master: u64,
    trial: u64,
    clock: &dyn Clock,
) -> Result<(AmpTrajectory, Columns)> {
    let sample = sample_symmetric(spec, n, trial_seed(master, trial)).context("sampling the matrix")?;
    let laws: Vec<_> = std::iter::once(&model.init.u1).chain(&model.init.side).collect();
    let mut cols = draw_columns(master, trial, &laws, n);
    let side = cols.split_off(1);
    let cfg = AmpConfig {
        op: &sample.op,
        u1: cols.pop().expect("u1 column"),
        side: side.clone(),
        side_v: Vec::new(),
        u: model.u.clone(),
        v: Vec::new(),
        coefficients: mode.clone(),
        horizon: model.horizon,
    };
    Ok((amp_run_sym(&cfg, clock)?, side))
}

/// One rectangular AMP run; the n-side columns come from a trial index with
/// the top bit set so they never coincide with the m-side draws. Returns
/// the trajectory, the m-side and the n-side columns.
#[allow(clippy::too_many_arguments)]
pub fn rect_trial(
    spec: &RectEnsembleSpec,
    m: usize,
    n: usize,
    model: &RectSEModel,
    mode: &CoefficientMode,
    master: u64,
    trial: u64,
    clock: &dyn Clock,
) -> Result<(AmpTrajectory, Columns, Columns)> {
    let sample = sample_rectangular(spec, m, n, trial_seed(master, trial)).context("sampling the matrix")?;
    let u_laws: Vec<_> = std::iter::once(&model.init.u1).chain(&model.init.side).collect();
    let v_laws: Vec<_> = model.side_v.iter().collect();
    let mut cols = draw_columns(master, trial, &u_laws, m);
    let side = cols.split_off(1);
    let side_v = draw_columns(master, trial | (1 << 63), &v_laws, n);
    let cfg = AmpConfig {
        op: &sample.op,
        u1: cols.pop().expect("u1 column"),
        side: side.clone(),
        side_v: side_v.clone(),
        u: model.u.clone(),
        v: model.v.clone(),
        coefficients: mode.clone(),
        horizon: model.horizon,
    };
    Ok((amp_run_rect(&cfg, clock)?, side, side_v))
}

/// Symmetric AMP on every ensemble of the study; with `cross`, also compares
/// the ensembles with each other. Ensemble e uses trial indices
/// e·trials .. (e+1)·trials, so groups are independent.
pub fn run_sym(study: &SymStudy, ctx: &Ctx<'_>, dir: &mut ArtifactDir, cross: bool) -> Result<UniversalitySummary> {
    let horizon = study.model.horizon;
    if horizon == 0 {
        return Ok(UniversalitySummary {
            horizon,
            tolerance: study.tolerance,
            ensembles: Vec::new(),
            cross: None,
            pass: true,
        });
    }
    let se = se_goe(&study.model, ctx.pool).context("state evolution")?;
    dir.write_json("state_evolution.json", &se)?;
    let init = &study.model.init;
    let reference = sample_se_law(&se, SeLayout::Symmetric, init, &[], study.reference_samples, ctx.seed)?;
    let panel = default_panel(reference.ncols());
    let predicted = diag(&se.sigma);
    let mode = coefficient_mode(study.coefficients, &se);

    let mut summaries = Vec::new();
    let mut groups = Vec::new();
    for (ei, ens) in study.ensembles.iter().enumerate() {
        let n = ens.n.unwrap_or(study.n);
        let runs = ctx.pool.try_map(ctx.trials, |k| {
            let (traj, side) = sym_trial(&ens.spec, n, &study.model, &mode, ctx.seed, (ei * ctx.trials + k) as u64, ctx.clock)
                .with_context(|| format!("{} trial {k}", ens.name))?;
            let z_sq: Vec<f64> = traj.z.iter().map(|z| mean_square(z)).collect();
            Ok((rows_from_sym(&traj, &side)?, z_sq))
        })?;
        let z_sq: Vec<Vec<f64>> = runs.iter().map(|r| r.1.clone()).collect();
        for (k, zs) in z_sq.iter().enumerate() {
            dir.write_table(&format!("trials/{}/trial{k:04}.csv", ens.name), &trial_table(&[("z", zs, &predicted)]))?;
        }
        let check = MomentCheck::new("z", &z_sq, predicted.clone(), study.tolerance);
        let report = compare_to_se(&runs[0].0, &se, SeLayout::Symmetric, &reference, &panel)?;
        dir.write_table(&format!("panels/{}.csv", ens.name), &panel_table(&report))?;
        summaries.push(EnsembleSummary {
            name: ens.name.clone(),
            trials: ctx.trials,
            pass: check.within_tolerance,
            panel_agreement: agreement(&report, study.z_threshold),
            checks: vec![check],
            report,
        });
        groups.push((ens.name.clone(), runs.into_iter().map(|r| r.0).collect::<Vec<_>>()));
    }
    let cross = if cross { cross_report(groups, &panel, dir)? } else { None };
    let pass = summaries.iter().all(|s| s.pass) && cross.as_ref().is_none_or(|c| c.universal);
    Ok(UniversalitySummary {
        horizon,
        tolerance: study.tolerance,
        ensembles: summaries,
        cross,
        pass,
    })
}

/// Rectangular AMP: ⟨z_t²⟩ against Ω_t[t,t] and ⟨y_t²⟩ against Σ_t[t,t].
pub fn run_rect(study: &RectStudy, ctx: &Ctx<'_>, dir: &mut ArtifactDir) -> Result<UniversalitySummary> {
    let model = &study.model;
    let horizon = model.horizon;
    if horizon == 0 {
        return Ok(UniversalitySummary {
            horizon,
            tolerance: study.tolerance,
            ensembles: Vec::new(),
            cross: None,
            pass: true,
        });
    }
    let se = se_whitenoise(model, ctx.pool).context("state evolution")?;
    dir.write_json("state_evolution.json", &se)?;
    let init = &model.init;
    let reference = sample_se_law(&se, SeLayout::RectU, init, &model.side_v, study.reference_samples, ctx.seed)?;
    let panel = default_panel(reference.ncols());
    let sigma = diag(&se.sigma);
    let omega = diag(se.omega.as_ref().expect("rectangular state evolution has Ω"));
    let mode = coefficient_mode(study.coefficients, &se);

    let mut summaries = Vec::new();
    let mut groups = Vec::new();
    for (ei, ens) in study.ensembles.iter().enumerate() {
        let (m, n) = (ens.m, ens.n);
        let runs = ctx.pool.try_map(ctx.trials, |k| {
            let (traj, side, _) = rect_trial(&ens.spec, m, n, model, &mode, ctx.seed, (ei * ctx.trials + k) as u64, ctx.clock)
                .with_context(|| format!("{} trial {k}", ens.name))?;
            let z_sq: Vec<f64> = traj.z.iter().map(|z| mean_square(z)).collect();
            let y_sq: Vec<f64> = traj.y.iter().map(|y| mean_square(y)).collect();
            Ok((rows_from_rect_u(&traj, &side)?, z_sq, y_sq))
        })?;
        let z_sq: Vec<Vec<f64>> = runs.iter().map(|r| r.1.clone()).collect();
        let y_sq: Vec<Vec<f64>> = runs.iter().map(|r| r.2.clone()).collect();
        for k in 0..runs.len() {
            let t = trial_table(&[("z", &z_sq[k], &omega), ("y", &y_sq[k], &sigma)]);
            dir.write_table(&format!("trials/{}/trial{k:04}.csv", ens.name), &t)?;
        }
        let checks = vec![
            MomentCheck::new("z", &z_sq, omega.clone(), study.tolerance),
            MomentCheck::new("y", &y_sq, sigma.clone(), study.tolerance),
        ];
        let report = compare_to_se(&runs[0].0, &se, SeLayout::RectU, &reference, &panel)?;
        dir.write_table(&format!("panels/{}.csv", ens.name), &panel_table(&report))?;
        summaries.push(EnsembleSummary {
            name: ens.name.clone(),
            trials: ctx.trials,
            pass: checks.iter().all(|c| c.within_tolerance),
            panel_agreement: agreement(&report, amplab_core::diagnostics::Z_THRESHOLD),
            checks,
            report,
        });
        groups.push((ens.name.clone(), runs.into_iter().map(|r| r.0).collect::<Vec<_>>()));
    }
    let cross = cross_report(groups, &panel, dir)?;
    let pass = summaries.iter().all(|s| s.pass) && cross.as_ref().is_none_or(|c| c.universal);
    Ok(UniversalitySummary {
        horizon,
        tolerance: study.tolerance,
        ensembles: summaries,
        cross,
        pass,
    })
}
