//! Experiment runners. Each writes its artifacts and a typed summary; the
//! dispatcher adds `summary.json`, the manifest and the timing file.

use std::path::Path;

use amplab_core::moments::ScalarLaw;
use amplab_core::rng::{stream_rng, streams};
use anyhow::Result;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::io::ArtifactDir;
use crate::manifest::{self, Manifest, ManifestInput, Timing};
use crate::runtime::{Pool, WallClock};

pub mod cs;
pub mod sbm;
pub mod sinkhorn;
pub mod tn;
pub mod universality;

pub const SUMMARY_FILE: &str = "summary.json";

/// What every runner gets: the master seed, the trial count and the pool.
pub struct Ctx<'a> {
    pub seed: u64,
    pub trials: usize,
    pub pool: &'a Pool,
    pub clock: &'a WallClock,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub pass: bool,
    pub summary: serde_json::Value,
    pub manifest: Manifest,
}

/// Writes the typed summary, keeping field order, and returns it as a value.
fn summarize<S: Serialize>(dir: &mut ArtifactDir, s: &S, pass: bool) -> Result<(bool, serde_json::Value)> {
    dir.write_json(SUMMARY_FILE, s)?;
    Ok((pass, serde_json::to_value(s)?))
}

/// Runs the configured experiment into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, pool: &Pool) -> Result<RunOutcome> {
    cfg.validate()?;
    let clock = WallClock::start();
    let mut dir = ArtifactDir::create(out)?;
    let ctx = Ctx {
        seed: cfg.seed,
        trials: cfg.trials,
        pool,
        clock: &clock,
    };
    let (pass, summary) = match &cfg.experiment {
        Experiment::SeCheck(s) => {
            let r = universality::run_sym(s, &ctx, &mut dir, false)?;
            summarize(&mut dir, &r, r.pass)?
        }
        Experiment::UniversalitySym(s) => {
            let r = universality::run_sym(s, &ctx, &mut dir, true)?;
            summarize(&mut dir, &r, r.pass)?
        }
        Experiment::UniversalityRect(s) => {
            let r = universality::run_rect(s, &ctx, &mut dir)?;
            summarize(&mut dir, &r, r.pass)?
        }
        Experiment::TnUniversality(s) => {
            let r = tn::run_universality(s, &ctx, &mut dir)?;
            summarize(&mut dir, &r, r.pass)?
        }
        Experiment::LimvalAudit(s) => {
            let r = tn::run_audit(s, &ctx, &mut dir)?;
            summarize(&mut dir, &r, r.pass)?
        }
        Experiment::SbmZ2sync(s) => {
            let r = sbm::run(s, &ctx, &mut dir)?;
            summarize(&mut dir, &r, r.pass)?
        }
        Experiment::CsPhaseDiagram(s) => {
            let r = cs::run(s, &ctx, &mut dir)?;
            summarize(&mut dir, &r, r.pass)?
        }
        Experiment::SinkhornDemo(s) => {
            let r = sinkhorn::run(s, &ctx, &mut dir)?;
            summarize(&mut dir, &r, r.pass)?
        }
    };
    let mut echo = cfg.clone();
    echo.out = None;
    let input = ManifestInput {
        experiment: cfg.experiment.name(),
        config: serde_json::to_value(&echo)?,
        master_seed: cfg.seed,
        trials: cfg.experiment.trial_indices(cfg.trials),
        pass,
    };
    let timing = Timing {
        wall_clock_seconds: amplab_core::amp::Clock::now(&clock),
        threads: pool.threads(),
    };
    let manifest = manifest::finish(&mut dir, input, &timing)?;
    Ok(RunOutcome { pass, summary, manifest })
}

/// Input columns for one trial: column j has `len` draws from `laws[j]`,
/// taken column by column from the trial's input stream.
pub fn draw_columns(master: u64, trial: u64, laws: &[&ScalarLaw], len: usize) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(master, trial, streams::INPUTS);
    laws.iter().map(|law| (0..len).map(|_| law.sample(&mut rng)).collect()).collect()
}

/// Mean of x² with permutation-invariant summation.
pub fn mean_square(x: &[f64]) -> f64 {
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    amplab_core::math::sorted_mean(&sq)
}
