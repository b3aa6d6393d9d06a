//! Agreement between AMP iterates and state evolution, and across ensembles.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::amp::AmpTrajectory;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_psd, Mat};
use crate::math::{norm_ppf, sorted_mean, sq, sqrt};
use crate::moments::ScalarLaw;
use crate::poly::{monomial_panel, MultiPoly};
use crate::rng::{fill_normal, seeded, streams};
use crate::stateevo::{InitialLaw, SEResult};

/// Default panel: monomials of total degree ≤ 3, at most this many.
pub const DEFAULT_PANEL_CAP: usize = 60;
/// A panel function agrees when |z| ≤ this.
pub const Z_THRESHOLD: f64 = 3.0;
/// Cross-ensemble verdict: at least this fraction of the panel must agree.
pub const AGREEMENT_FRACTION: f64 = 0.95;
/// Covariance gaps above this fraction of max(1, max diag Σ) are flagged.
pub const COVARIANCE_FLAG: f64 = 0.1;

/// Joint coordinates, one column per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRows {
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl EmpiricalRows {
    pub fn new(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: columns.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidArgument(format!("duplicate column label {l}")));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        for c in &columns {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
            if c.iter().any(|x| x.is_nan()) {
                return Err(Error::InvalidArgument("empirical rows contain NaN".into()));
            }
        }
        Ok(Self { labels, columns })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|i| self.columns[i].as_slice())
    }

    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    /// Rows reordered by `perm` (row i of the result is row perm[i]).
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self {
            labels: self.labels.clone(),
            columns: self.columns.iter().map(|c| perm.iter().map(|&i| c[i]).collect()).collect(),
        }
    }

    /// Per-row values of `p` and their average.
    fn average(&self, p: &MultiPoly) -> (f64, f64) {
        let cols: Vec<&[f64]> = self.columns.iter().map(Vec::as_slice).collect();
        let vals = p.eval_columns(&cols, self.nrows());
        mean_se(&vals)
    }
}

/// Permutation-invariant mean and standard error.
fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    let m = sorted_mean(vals);
    if n < 2 {
        return (m, 0.0);
    }
    let dev: Vec<f64> = vals.iter().map(|v| sq(v - m)).collect();
    let var = sorted_mean(&dev) * n as f64 / (n - 1) as f64;
    (m, sqrt(var / n as f64))
}

fn labeled(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}{i}"))
}

/// Columns (u1, f1..fk, z1..zT) of a symmetric run.
pub fn rows_from_sym(traj: &AmpTrajectory, side: &[Vec<f64>]) -> Result<EmpiricalRows> {
    let mut labels = vec![String::from("u1")];
    labels.extend(labeled("f", side.len()));
    labels.extend(labeled("z", traj.z.len()));
    let mut cols = vec![traj.u[0].clone()];
    cols.extend(side.iter().cloned());
    cols.extend(traj.z.iter().cloned());
    EmpiricalRows::new(labels, cols)
}

/// The m-dimensional side of a rectangular run: (u1, f1..fk, y1..yT).
pub fn rows_from_rect_u(traj: &AmpTrajectory, side: &[Vec<f64>]) -> Result<EmpiricalRows> {
    let mut labels = vec![String::from("u1")];
    labels.extend(labeled("f", side.len()));
    labels.extend(labeled("y", traj.y.len()));
    let mut cols = vec![traj.u[0].clone()];
    cols.extend(side.iter().cloned());
    cols.extend(traj.y.iter().cloned());
    EmpiricalRows::new(labels, cols)
}

/// The n-dimensional side of a rectangular run: (g1..gl, z1..zT).
pub fn rows_from_rect_v(traj: &AmpTrajectory, side_v: &[Vec<f64>]) -> Result<EmpiricalRows> {
    let mut labels: Vec<String> = labeled("g", side_v.len()).collect();
    labels.extend(labeled("z", traj.z.len()));
    let mut cols: Vec<Vec<f64>> = side_v.to_vec();
    cols.extend(traj.z.iter().cloned());
    EmpiricalRows::new(labels, cols)
}

/// 1-D W2 distance between the empirical law of `samples` and N(0, σ²),
/// using Gaussian quantiles at the midpoints (i − ½)/n.
pub fn w2_gaussian_1d(samples: &[f64], variance: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::InvalidArgument(format!("variance must be nonnegative, got {variance}")));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let mut x = samples.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    let sd = sqrt(variance);
    // Quantiles are computed on the lower half and mirrored, so the grid is
    // exactly antisymmetric.
    let mut q = vec![0.0; n];
    for i in 0..n / 2 {
        let v = norm_ppf((i as f64 + 0.5) / n as f64);
        q[i] = v;
        q[n - 1 - i] = -v;
    }
    let gaps: Vec<f64> = x.iter().zip(&q).map(|(a, b)| sq(a - sd * b)).collect();
    Ok(sqrt(sorted_mean(&gaps)))
}

/// Which layout of the state-evolution law to compare against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeLayout {
    /// (u1, f…, z1..zT) with Z ~ N(0, Σ_T).
    Symmetric,
    /// (u1, f…, y1..yT) with Y ~ N(0, Σ_T).
    RectU,
    /// (g…, z1..zT) with Z ~ N(0, Ω_T).
    RectV,
}

/// Samples from the limiting joint law of the columns in `layout`.
pub fn sample_se_law(
    se: &SEResult,
    layout: SeLayout,
    init: &InitialLaw,
    side_v: &[ScalarLaw],
    samples: usize,
    seed: u64,
) -> Result<EmpiricalRows> {
    let tt = se.horizon;
    let (cov, prefix) = match layout {
        SeLayout::Symmetric => (se.sigma.clone(), "z"),
        SeLayout::RectU => (se.sigma.clone(), "y"),
        SeLayout::RectV => (
            se.omega
                .clone()
                .ok_or_else(|| Error::InvalidArgument("state evolution has no Ω".into()))?,
            "z",
        ),
    };
    let l = cholesky_psd(&cov, 1e-12);
    let mut labels = Vec::new();
    let mut laws: Vec<&ScalarLaw> = Vec::new();
    if layout == SeLayout::RectV {
        labels.extend(labeled("g", side_v.len()));
        laws.extend(side_v);
    } else {
        labels.push("u1".into());
        labels.extend(labeled("f", init.side.len()));
        laws.push(&init.u1);
        laws.extend(&init.side);
    }
    labels.extend(labeled(prefix, tt));
    let nl = laws.len();
    let mut cols = vec![vec![0.0; samples]; nl + tt];
    let mut rng = seeded(seed, streams::PROBE);
    let mut g = vec![0.0; tt];
    for i in 0..samples {
        for (j, law) in laws.iter().enumerate() {
            cols[j][i] = law.sample(&mut rng);
        }
        fill_normal(&mut rng, &mut g);
        for r in 0..tt {
            cols[nl + r][i] = (0..=r).map(|q| l[(r, q)] * g[q]).sum();
        }
    }
    EmpiricalRows::new(labels, cols)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelEntry {
    pub function: MultiPoly,
    pub empirical: f64,
    pub empirical_se: f64,
    pub predicted: f64,
    pub predicted_se: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEntry {
    pub label: String,
    pub variance: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeReport {
    pub panel: Vec<PanelEntry>,
    pub marginals: Vec<MarginalEntry>,
    /// Empirical covariance of the Gaussian columns.
    pub covariance: Mat,
    /// max |empirical − predicted| over covariance entries.
    pub covariance_gap: f64,
    pub covariance_flagged: bool,
    pub max_abs_z: f64,
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Compares `rows` with the state-evolution law, represented by `reference`
/// (typically from [`sample_se_law`]). Labels must match exactly.
pub fn compare_to_se(rows: &EmpiricalRows, se: &SEResult, layout: SeLayout, reference: &EmpiricalRows, panel: &[MultiPoly]) -> Result<SeReport> {
    if rows.labels() != reference.labels() {
        return Err(Error::InvalidArgument(format!(
            "label mismatch: {:?} vs {:?}",
            rows.labels(),
            reference.labels()
        )));
    }
    let tt = se.horizon;
    let cov = match layout {
        SeLayout::RectV => se.omega.clone().ok_or_else(|| Error::InvalidArgument("state evolution has no Ω".into()))?,
        _ => se.sigma.clone(),
    };
    let first = rows.ncols() - tt;
    for p in panel {
        p.check_arity(rows.ncols())?;
    }
    let mut entries = Vec::with_capacity(panel.len());
    let mut max_abs_z: f64 = 0.0;
    for p in panel {
        let (e, e_se) = rows.average(p);
        let (r, r_se) = reference.average(p);
        let z = z_score(e - r, sqrt(sq(e_se) + sq(r_se)));
        max_abs_z = max_abs_z.max(crate::math::abs(z));
        entries.push(PanelEntry {
            function: p.clone(),
            empirical: e,
            empirical_se: e_se,
            predicted: r,
            predicted_se: r_se,
            z_score: z,
        });
    }
    let mut marginals = Vec::with_capacity(tt);
    let mut emp_cov = Mat::zeros(tt, tt);
    for r in 0..tt {
        let col = &rows.columns()[first + r];
        marginals.push(MarginalEntry {
            label: rows.labels()[first + r].clone(),
            variance: cov[(r, r)],
            w2: w2_gaussian_1d(col, cov[(r, r)])?,
        });
        for s in 0..=r {
            let prod: Vec<f64> = col.iter().zip(&rows.columns()[first + s]).map(|(a, b)| a * b).collect();
            let v = sorted_mean(&prod);
            emp_cov[(r, s)] = v;
            emp_cov[(s, r)] = v;
        }
    }
    let gap = emp_cov.max_abs_diff(&cov);
    let scale = (0..tt).fold(1.0f64, |m, i| m.max(cov[(i, i)]));
    Ok(SeReport {
        panel: entries,
        marginals,
        covariance: emp_cov,
        covariance_gap: gap,
        covariance_flagged: gap > COVARIANCE_FLAG * scale,
        max_abs_z,
    })
}

/// All monomials of degree ≤ 3 in `ncols` variables, capped at 60.
pub fn default_panel(ncols: usize) -> Vec<MultiPoly> {
    monomial_panel(ncols, 3, DEFAULT_PANEL_CAP)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub trials: usize,
    /// Mean over trials of each panel average, with its standard error.
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub first: String,
    pub second: String,
    pub differences: Vec<f64>,
    pub combined_se: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub agree: Vec<bool>,
    pub agreement_fraction: f64,
    pub universal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEnsembleReport {
    pub panel: Vec<MultiPoly>,
    pub groups: Vec<GroupSummary>,
    pub pairs: Vec<PairComparison>,
    pub universal: bool,
}

/// Pairwise comparison of panel averages between ensembles. Each group holds
/// one set of rows per independent trial; standard errors are across trials.
/// Groups may differ in dimension but must share column labels.
pub fn cross_ensemble_report(groups: &[(String, Vec<EmpiricalRows>)], panel: &[MultiPoly]) -> Result<CrossEnsembleReport> {
    let reference = groups
        .first()
        .and_then(|g| g.1.first())
        .ok_or_else(|| Error::InvalidArgument("no trajectories to compare".into()))?;
    let mut summaries = Vec::with_capacity(groups.len());
    for (name, trials) in groups {
        if trials.len() < 2 {
            return Err(Error::InvalidArgument(format!("group {name} needs at least two trials")));
        }
        for rows in trials {
            if rows.labels() != reference.labels() {
                return Err(Error::InvalidArgument(format!("group {name} has different columns")));
            }
        }
        let mut means = Vec::with_capacity(panel.len());
        let mut ses = Vec::with_capacity(panel.len());
        for p in panel {
            p.check_arity(reference.ncols())?;
            let per_trial: Vec<f64> = trials.iter().map(|r| r.average(p).0).collect();
            let (m, s) = mean_se(&per_trial);
            means.push(m);
            ses.push(s);
        }
        summaries.push(GroupSummary {
            name: name.clone(),
            trials: trials.len(),
            means,
            ses,
        });
    }
    let mut pairs = Vec::new();
    for i in 0..summaries.len() {
        for j in i + 1..summaries.len() {
            let (a, b) = (&summaries[i], &summaries[j]);
            let differences: Vec<f64> = a.means.iter().zip(&b.means).map(|(x, y)| x - y).collect();
            let combined_se: Vec<f64> = a.ses.iter().zip(&b.ses).map(|(x, y)| sqrt(sq(*x) + sq(*y))).collect();
            let z_scores: Vec<f64> = differences.iter().zip(&combined_se).map(|(d, s)| z_score(*d, *s)).collect();
            let agree: Vec<bool> = z_scores.iter().map(|z| crate::math::abs(*z) <= Z_THRESHOLD).collect();
            let frac = if agree.is_empty() {
                1.0
            } else {
                agree.iter().filter(|a| **a).count() as f64 / agree.len() as f64
            };
            pairs.push(PairComparison {
                first: a.name.clone(),
                second: b.name.clone(),
                differences,
                combined_se,
                z_scores,
                agree,
                agreement_fraction: frac,
                universal: frac >= AGREEMENT_FRACTION,
            });
        }
    }
    let universal = pairs.iter().all(|p| p.universal);
    Ok(CrossEnsembleReport {
        panel: panel.to_vec(),
        groups: summaries,
        pairs,
        universal,
    })
}
