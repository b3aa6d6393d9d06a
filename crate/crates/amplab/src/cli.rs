//! Command-line front end. Each subcommand wraps one library operation.

use std::io::Write;
use std::path::{Path, PathBuf};

use amplab_core::amp::NoClock;
use amplab_core::combinat::{limval_invariant_sym, limval_wigner_sym, InvariantRoute, INVARIANT_EDGE_CAP, WIGNER_VERTEX_CAP};
use amplab_core::ensembles::{sample_rectangular, sample_symmetric, RectEnsembleSpec, SymEnsembleSpec};
use amplab_core::moments::{IndependentLaws, ScalarLaw, SpectralMoments};
use amplab_core::operator::DEFAULT_MATERIALIZE_CAP;
use amplab_core::rng::trial_seed;
use amplab_core::spectral::SpectralSpec;
use amplab_core::stateevo::{se_goe, se_whitenoise, RectSEModel, SEModel};
use amplab_core::tensornet::{tn_eval, DiagonalTensorNetwork};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{from_value_strict, Coefficients, ExperimentConfig};
use crate::experiments::universality::{coefficient_mode, rect_trial, sym_trial};
use crate::experiments::{draw_columns, run_experiment};
use crate::io::{fmt_f64, to_json, Format, Table};
use crate::runtime::Pool;

#[derive(Debug, Parser)]
#[command(name = "amplab", version, about = "AMP, state evolution and tensor-network experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON input for the subcommand.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one matrix and print it densely.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Ensemble kind without parameters, e.g. `goe`; otherwise give the spec via --config.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        n: usize,
        /// Row count for rectangular ensembles (default n).
        #[arg(long)]
        m: Option<usize>,
    },
    /// State evolution of a symmetric or rectangular model.
    SePredict {
        #[command(flatten)]
        common: Common,
    },
    /// One AMP trajectory.
    AmpRun {
        #[command(flatten)]
        common: Common,
        /// Keep every k-th coordinate in CSV output.
        #[arg(long, default_value_t = 1)]
        thin: usize,
    },
    /// val_T(W; x) for one network on one sampled matrix.
    TnEval {
        #[command(flatten)]
        common: Common,
    },
    /// Large-n limit of a network's expected value.
    TnLimit {
        #[command(flatten)]
        common: Common,
    },
    /// Run a configured experiment; the exit status reflects its verdict.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmpRunConfig {
    Symmetric {
        ensemble: SymEnsembleSpec,
        n: usize,
        model: SEModel,
        #[serde(default)]
        coefficients: Coefficients,
    },
    Rectangular {
        ensemble: RectEnsembleSpec,
        m: usize,
        n: usize,
        model: RectSEModel,
        #[serde(default)]
        coefficients: Coefficients,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnEvalConfig {
    pub network: DiagonalTensorNetwork,
    pub ensemble: SymEnsembleSpec,
    pub n: usize,
    pub inputs: Vec<ScalarLaw>,
}

/// Without a spectrum the Wigner limit is computed; with one, the invariant limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnLimitConfig {
    pub network: DiagonalTensorNetwork,
    pub inputs: Vec<ScalarLaw>,
    #[serde(default)]
    pub spectrum: Option<SpectralSpec>,
    #[serde(default)]
    pub route: Option<InvariantRoute>,
}

fn read_json<T: DeserializeOwned + Serialize>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { bail!("--config is required") };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    from_value_strict(value).with_context(|| format!("parsing {}", path.display()))
}

/// Writes `body` to `<out>/<stem>.<ext>` or, without --out, to stdout.
fn emit(common: &Common, stem: &str, format: Format, body: &str, stdout: &mut dyn Write) -> Result<()> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let ext = match format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn matrix_body(m: &amplab_core::linalg::Mat, format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => Table::from_matrix(m).render(),
        Format::Json => to_json(&m.to_rows())?,
    })
}

/// Runs the parsed command; `Ok(false)` means an experiment ran and failed
/// its acceptance thresholds.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::Sample { common, kind, n, m } => {
            let format = common.format.unwrap_or(Format::Csv);
            let seed = common.seed.unwrap_or(0);
            let spec: serde_json::Value = match (&kind, &common.config) {
                (Some(k), None) => serde_json::json!({ "kind": k }),
                (None, Some(p)) => read_json(Some(p))?,
                _ => bail!("give exactly one of --kind and --config"),
            };
            let mat = if serde_json::from_value::<SymEnsembleSpec>(spec.clone()).is_ok() {
                let s: SymEnsembleSpec = from_value_strict(spec)?;
                sample_symmetric(&s, n, seed)?.op.materialize_dense(DEFAULT_MATERIALIZE_CAP)?
            } else {
                let r: RectEnsembleSpec = from_value_strict(spec).context("not a symmetric or rectangular ensemble")?;
                sample_rectangular(&r, m.unwrap_or(n), n, seed)?.op.materialize_dense(DEFAULT_MATERIALIZE_CAP)?
            };
            emit(&common, "matrix", format, &matrix_body(&mat, format)?, stdout)?;
        }
        Command::SePredict { common } => {
            let format = common.format.unwrap_or(Format::Json);
            let value: serde_json::Value = read_json(common.config.as_deref())?;
            let pool = Pool::from_env()?;
            let se = if serde_json::from_value::<SEModel>(value.clone()).is_ok() {
                let mut model: SEModel = from_value_strict(value)?;
                if let Some(s) = common.seed {
                    model.mc.seed = s;
                }
                se_goe(&model, &pool)?
            } else {
                let mut model: RectSEModel = from_value_strict(value).context("not a symmetric or rectangular model")?;
                if let Some(s) = common.seed {
                    model.mc.seed = s;
                }
                se_whitenoise(&model, &pool)?
            };
            let body = match format {
                Format::Json => to_json(&se)?,
                Format::Csv => Table::from_matrix(&se.sigma).render(),
            };
            emit(&common, "state_evolution", format, &body, stdout)?;
        }
        Command::AmpRun { common, thin } => {
            let format = common.format.unwrap_or(Format::Csv);
            let seed = common.seed.unwrap_or(0);
            let cfg: AmpRunConfig = read_json(common.config.as_deref())?;
            let pool = Pool::from_env()?;
            let (traj, se) = match &cfg {
                AmpRunConfig::Symmetric {
                    ensemble,
                    n,
                    model,
                    coefficients,
                } => {
                    let se = se_goe(model, &pool)?;
                    let mode = coefficient_mode(*coefficients, &se);
                    (sym_trial(ensemble, *n, model, &mode, seed, 0, &NoClock)?.0, se)
                }
                AmpRunConfig::Rectangular {
                    ensemble,
                    m,
                    n,
                    model,
                    coefficients,
                } => {
                    let se = se_whitenoise(model, &pool)?;
                    let mode = coefficient_mode(*coefficients, &se);
                    (rect_trial(ensemble, *m, *n, model, &mode, seed, 0, &NoClock)?.0, se)
                }
            };
            let body = match format {
                Format::Json => to_json(&serde_json::json!({ "trajectory": traj, "state_evolution": se }))?,
                Format::Csv => {
                    let mut t = Table::new(["iterate", "t", "i", "value"]);
                    for (name, seq) in [("z", &traj.z), ("u", &traj.u), ("v", &traj.v), ("y", &traj.y)] {
                        for (s, x) in seq.iter().enumerate() {
                            for i in (0..x.len()).step_by(thin.max(1)) {
                                t.push(vec![name.into(), (s + 1).to_string(), i.to_string(), fmt_f64(x[i])]);
                            }
                        }
                    }
                    t.render()
                }
            };
            emit(&common, "trajectory", format, &body, stdout)?;
        }
        Command::TnEval { common } => {
            let format = common.format.unwrap_or(Format::Json);
            let seed = common.seed.unwrap_or(0);
            let cfg: TnEvalConfig = read_json(common.config.as_deref())?;
            let sample = sample_symmetric(&cfg.ensemble, cfg.n, trial_seed(seed, 0))?;
            let laws: Vec<_> = cfg.inputs.iter().collect();
            let cols = draw_columns(seed, 0, &laws, cfg.n);
            let inputs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let value = tn_eval(&cfg.network, &sample.op, &inputs)?;
            let body = match format {
                Format::Json => to_json(&serde_json::json!({ "value": value }))?,
                Format::Csv => format!("value\n{}\n", fmt_f64(value)),
            };
            emit(&common, "value", format, &body, stdout)?;
        }
        Command::TnLimit { common } => {
            let format = common.format.unwrap_or(Format::Json);
            let cfg: TnLimitConfig = read_json(common.config.as_deref())?;
            let oracle = IndependentLaws(cfg.inputs.clone());
            let lv = match &cfg.spectrum {
                None => limval_wigner_sym(&cfg.network, &oracle, WIGNER_VERTEX_CAP)?,
                Some(spec) => limval_invariant_sym(
                    &cfg.network,
                    &oracle,
                    &SpectralMoments(spec.clone()),
                    cfg.route.unwrap_or(InvariantRoute::Chains),
                    INVARIANT_EDGE_CAP,
                )?,
            };
            let body = match format {
                Format::Json => to_json(&lv)?,
                Format::Csv => format!("value,note\n{},{}\n", fmt_f64(lv.value), lv.note.as_deref().unwrap_or("")),
            };
            emit(&common, "limit", format, &body, stdout)?;
        }
        Command::Experiment { common } => {
            let mut cfg = ExperimentConfig::load(common.config.as_deref().context("--config is required")?)?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let out = common
                .out
                .clone()
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()));
            let pool = Pool::from_env()?;
            let outcome = run_experiment(&cfg, &out, &pool)?;
            let verdict = if outcome.pass { "PASS" } else { "FAIL" };
            writeln!(stdout, "{}: {verdict} ({})", cfg.experiment.name(), out.display())?;
            return Ok(outcome.pass);
        }
    }
    Ok(true)
}
