//! Experiment configuration. Every object rejects unknown keys.

use std::path::{Path, PathBuf};

use amplab_core::combinat::BipartiteMultigraph;
use amplab_core::ensembles::{RectEnsembleSpec, SymEnsembleSpec};
use amplab_core::moments::ScalarLaw;
use amplab_core::poly::MultiPoly;
use amplab_core::spectral::SpectralSpec;
use amplab_core::stateevo::{RectSEModel, SEModel};
use amplab_core::tensornet::DiagonalTensorNetwork;
use anyhow::{bail, ensure, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

fn one() -> usize {
    1
}
fn five_percent() -> f64 {
    0.05
}
fn three() -> f64 {
    3.0
}
fn reference_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; trial k uses `trial_seed(seed, k)`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    SeCheck(SymStudy),
    UniversalitySym(SymStudy),
    UniversalityRect(RectStudy),
    TnUniversality(TnStudy),
    LimvalAudit(LimvalAudit),
    SbmZ2sync(SbmStudy),
    CsPhaseDiagram(CsStudy),
    SinkhornDemo(SinkhornStudy),
}

impl Experiment {
    /// Number of trial indices the runner draws from, each naming a
    /// trial seed recorded in the manifest.
    pub fn trial_indices(&self, trials: usize) -> usize {
        match self {
            Self::SeCheck(s) | Self::UniversalitySym(s) => trials * s.ensembles.len(),
            Self::UniversalityRect(s) => trials * s.ensembles.len(),
            Self::CsPhaseDiagram(s) => trials * s.deltas.len(),
            Self::SbmZ2sync(_) => 2 * trials,
            Self::TnUniversality(_) => trials,
            Self::LimvalAudit(_) | Self::SinkhornDemo(_) => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SeCheck(_) => "se_check",
            Self::UniversalitySym(_) => "universality_sym",
            Self::UniversalityRect(_) => "universality_rect",
            Self::TnUniversality(_) => "tn_universality",
            Self::LimvalAudit(_) => "limval_audit",
            Self::SbmZ2sync(_) => "sbm_z2sync",
            Self::CsPhaseDiagram(_) => "cs_phase_diagram",
            Self::SinkhornDemo(_) => "sinkhorn_demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSym {
    pub name: String,
    pub spec: SymEnsembleSpec,
    /// Dimension for this ensemble in place of the study's `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedRect {
    pub name: String,
    pub spec: RectEnsembleSpec,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficients {
    #[default]
    Prescribed,
    Empirical,
}

/// Symmetric AMP against its state evolution on one or more ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymStudy {
    pub ensembles: Vec<NamedSym>,
    pub n: usize,
    pub model: SEModel,
    #[serde(default)]
    pub coefficients: Coefficients,
    /// Bound on |mean over trials of ⟨z_t²⟩ − Σ_t[t,t]| / Σ_t[t,t].
    #[serde(default = "five_percent")]
    pub tolerance: f64,
    #[serde(default = "three")]
    pub z_threshold: f64,
    /// Size of the sample drawn from the limiting law for panel comparisons.
    #[serde(default = "reference_samples")]
    pub reference_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectStudy {
    pub ensembles: Vec<NamedRect>,
    pub model: RectSEModel,
    #[serde(default)]
    pub coefficients: Coefficients,
    #[serde(default = "five_percent")]
    pub tolerance: f64,
    #[serde(default = "reference_samples")]
    pub reference_samples: usize,
}

/// Which tensor networks to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSet {
    Explicit {
        networks: Vec<DiagonalTensorNetwork>,
    },
    /// One network per unlabeled tree with at most `max_edges` edges;
    /// vertex v gets `labels[v % labels.len()]`.
    AllTrees {
        max_edges: usize,
        labels: Vec<MultiPoly>,
    },
    /// Random trees with random integer-coefficient labels of degree at
    /// most `degree`, each centered under the input law.
    RandomCentered {
        count: usize,
        min_edges: usize,
        max_edges: usize,
        degree: u32,
    },
}

/// Monte-Carlo tensor-network values against their combinatorial limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnStudy {
    pub networks: NetworkSet,
    /// Law of each input column (independent coordinates).
    pub inputs: Vec<ScalarLaw>,
    pub ensembles: Vec<NamedSym>,
    pub n: usize,
    #[serde(default = "three")]
    pub z_threshold: f64,
}

fn hadamard_n() -> usize {
    4096
}

/// Limit values by every available route, and bipartite graph limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimvalAudit {
    pub networks: NetworkSet,
    pub inputs: Vec<ScalarLaw>,
    pub spectrum: SpectralSpec,
    #[serde(default)]
    pub graphs: Vec<BipartiteMultigraph>,
    #[serde(default = "hadamard_n")]
    pub hadamard_n: usize,
    #[serde(default = "five_percent")]
    pub graph_tolerance: f64,
}

fn sbm_lambda() -> f64 {
    2.0
}
fn side_weight() -> f64 {
    1.0
}

/// AMP for the two-community block model and the matching Gaussian
/// synchronization model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmStudy {
    pub n: usize,
    pub horizon: usize,
    /// Mean connection probability p̄; defaults to 5 log n / n.
    #[serde(default)]
    pub pbar: Option<f64>,
    #[serde(default = "sbm_lambda")]
    pub lambda: f64,
    /// Weight of the side information f in the first update.
    #[serde(default = "side_weight")]
    pub side_weight: f64,
    #[serde(default)]
    pub mc: amplab_core::stateevo::McConfig,
    #[serde(default = "five_percent")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensing {
    /// i.i.d. N(0, 1/m) entries.
    Gaussian,
    /// Hadamard-based invariant matrix with the Gaussian singular-value law;
    /// n must be a power of two.
    SubsampledHadamard,
}

impl Sensing {
    pub fn name(self) -> &'static str {
        match self {
            Sensing::Gaussian => "gaussian",
            Sensing::SubsampledHadamard => "subsampled_hadamard",
        }
    }
}

fn cs_horizon() -> usize {
    60
}
fn cs_success() -> f64 {
    1e-3
}
fn cs_band() -> f64 {
    0.1
}
fn cs_difference() -> f64 {
    0.15
}

/// Success rates of soft-threshold AMP over a (δ, ρ) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsStudy {
    pub deltas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub n: usize,
    pub sensing: Vec<Sensing>,
    #[serde(default = "cs_horizon")]
    pub horizon: usize,
    /// A trial succeeds when ‖x_{T+1} − x‖/‖x‖ is at most this.
    #[serde(default = "cs_success")]
    pub success_tolerance: f64,
    /// Threshold multiplier; defaults to the minimax α for each δ.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Grid points with |ρ − ρ_DT(δ)| below this count as boundary points.
    #[serde(default = "cs_band")]
    pub boundary_band: f64,
    #[serde(default = "cs_difference")]
    pub max_difference: f64,
}

fn sinkhorn_tol() -> f64 {
    amplab_core::ensembles::SINKHORN_DEFAULT_TOL
}
fn sinkhorn_iter() -> usize {
    amplab_core::ensembles::SINKHORN_DEFAULT_MAX_ITER
}

/// Biwhitening of a heteroskedastic variance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkhornStudy {
    /// Explicit variance matrix; when absent a random one is drawn.
    #[serde(default)]
    pub variances: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub n: usize,
    #[serde(default = "sinkhorn_tol")]
    pub tol: f64,
    #[serde(default = "sinkhorn_iter")]
    pub max_iter: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).context("invalid experiment configuration")?;
        let cfg: Self = from_value_strict(value).context("invalid experiment configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks that serde cannot express; lists every problem found.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        match &self.experiment {
            Experiment::SeCheck(s) => {
                need(s.ensembles.len() == 1, "se_check takes exactly one ensemble");
                need(s.n >= 1, "n must be positive");
                need(s.model.horizon == 0 || self.trials >= 1, "trials must be positive");
            }
            Experiment::UniversalitySym(s) => {
                need(!s.ensembles.is_empty(), "at least one ensemble is required");
                need(s.n >= 1, "n must be positive");
                need(s.ensembles.len() < 2 || self.trials >= 2, "cross-ensemble comparison needs at least two trials");
            }
            Experiment::UniversalityRect(s) => {
                need(!s.ensembles.is_empty(), "at least one ensemble is required");
                for e in &s.ensembles {
                    need(e.m >= 1 && e.n >= 1, "dimensions must be positive");
                    need(
                        (e.m as f64 / e.n as f64 - s.model.gamma).abs() <= 1e-12,
                        "every ensemble must have m/n equal to the model's gamma",
                    );
                }
                need(s.ensembles.len() < 2 || self.trials >= 2, "cross-ensemble comparison needs at least two trials");
            }
            Experiment::TnUniversality(s) => {
                need(!s.ensembles.is_empty(), "at least one ensemble is required");
                need(self.trials >= 2, "standard errors need at least two trials");
                need(s.n >= 1, "n must be positive");
            }
            Experiment::LimvalAudit(_) => {}
            Experiment::SbmZ2sync(s) => {
                need(s.n >= 2, "n must be at least 2");
                need(s.lambda >= 0.0, "lambda must be nonnegative");
                need(self.trials >= 1, "trials must be positive");
            }
            Experiment::CsPhaseDiagram(s) => {
                need(!s.sensing.is_empty(), "at least one sensing ensemble is required");
                need(s.deltas.iter().all(|d| *d > 0.0 && *d <= 1.0), "deltas must lie in (0, 1]");
                need(s.rhos.iter().all(|r| *r >= 0.0 && *r <= 1.0), "rhos must lie in [0, 1]");
                need(self.trials >= 1, "trials must be positive");
            }
            Experiment::SinkhornDemo(s) => {
                need(s.variances.is_some() || (s.m >= 1 && s.n >= 1), "give variances or positive m and n");
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            bail!("configuration errors:\n  - {}", errs.join("\n  - "))
        }
    }
}

/// Parses `value` as `T` and rejects keys that `T` drops. serde ignores
/// extra keys next to the tag of a unit variant even under
/// `deny_unknown_fields`, so the parsed value is echoed back and compared.
pub fn from_value_strict<T: DeserializeOwned + Serialize>(value: Value) -> Result<T> {
    let parsed: T = serde_json::from_value(value.clone())?;
    let echo = serde_json::to_value(&parsed)?;
    let mut unknown = Vec::new();
    dropped_keys(&value, &echo, "", &mut unknown);
    ensure!(unknown.is_empty(), "unknown field(s): {}", unknown.join(", "));
    Ok(parsed)
}

fn dropped_keys(input: &Value, echo: &Value, path: &str, out: &mut Vec<String>) {
    match (input, echo) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get(k) {
                    Some(w) => dropped_keys(v, w, &p, out),
                    None if v.is_null() => {}
                    None => out.push(p),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (i, (v, w)) in a.iter().zip(b).enumerate() {
                dropped_keys(v, w, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SE: &str = r#"{
        "seed": 3,
        "trials": 2,
        "experiment": {
            "kind": "se_check",
            "ensembles": [{"name": "goe", "spec": {"kind": "goe"}}],
            "n": 100,
            "model": {"horizon": 2, "init": {"u1": {"law": "standard_normal"}}, "u": [{"kind": "tanh"}, {"kind": "tanh"}]}
        }
    }"#;

    #[test]
    fn parses_and_applies_defaults() {
        let c = ExperimentConfig::from_json(SE).unwrap();
        assert_eq!(c.experiment.name(), "se_check");
        let Experiment::SeCheck(s) = &c.experiment else { unreachable!() };
        assert_eq!(s.tolerance, 0.05);
        assert_eq!(s.coefficients, Coefficients::Prescribed);
        assert_eq!(s.model.mc.samples, amplab_core::stateevo::DEFAULT_SE_SAMPLES);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let top = SE.replacen("\"trials\"", "\"trails\": 1, \"trials\"", 1);
        assert!(ExperimentConfig::from_json(&top).is_err());
        let inner = SE.replacen("\"n\": 100", "\"n\": 100, \"m\": 5", 1);
        assert!(ExperimentConfig::from_json(&inner).is_err());
        let deep = SE.replacen("\"standard_normal\"", "\"standard_normal\", \"scale\": 2", 1);
        let err = format!("{:#}", ExperimentConfig::from_json(&deep).unwrap_err());
        assert!(err.contains("experiment.model.init.u1.scale"), "{err}");
        let unit = SE.replacen("{\"kind\": \"goe\"}", "{\"kind\": \"goe\", \"sparsity\": 1}", 1);
        assert!(ExperimentConfig::from_json(&unit).is_err());
    }

    #[test]
    fn shipped_configurations_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut count = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{e:#}"));
            count += 1;
        }
        assert!(count >= 8);
    }

    #[test]
    fn semantic_errors_are_listed() {
        let bad = SE.replacen("\"n\": 100", "\"n\": 0", 1).replacen("[{\"name\": \"goe\", \"spec\": {\"kind\": \"goe\"}}]", "[]", 1);
        let msg = format!("{:#}", ExperimentConfig::from_json(&bad).unwrap_err());
        assert!(msg.contains("exactly one ensemble") && msg.contains("n must be positive"), "{msg}");
    }
}
