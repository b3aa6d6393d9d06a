//! Tensor-network values against their combinatorial limits.

use amplab_core::combinat::{
    hadamard_graph_value, hgraph_limit, hgraph_sum_dense, limval_invariant_sym, limval_wigner_sym, InvariantRoute, LimitValue,
    INVARIANT_EDGE_CAP, WIGNER_VERTEX_CAP,
};
use amplab_core::ensembles::{sample_symmetric, SymEnsembleSpec};
use amplab_core::linalg::Mat;
use amplab_core::math::mean_and_se;
use amplab_core::moments::{IndependentLaws, MomentOracle, SpectralMoments};
use amplab_core::poly::MultiPoly;
use amplab_core::rng::{stream_rng, streams, trial_seed, uniform, StreamRng};
use amplab_core::spectral::SpectralSpec;
use amplab_core::tensornet::{tn_eval, trees, DiagonalTensorNetwork, DEFAULT_BRUTE_CAP};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use super::{draw_columns, Ctx};
use crate::config::{LimvalAudit, NetworkSet, TnStudy};
use crate::io::{fmt_f64, ArtifactDir, Table};

/// Agreement required between two exact routes to the same limit.
const ROUTE_TOLERANCE: f64 = 1e-9;
/// Size of the dense Hadamard matrix used to cross-check the graph formula.
const DENSE_HADAMARD_N: usize = 8;
/// Attempts at drawing a label whose centered version is nonzero.
const LABEL_ATTEMPTS: usize = 1000;

fn pick(rng: &mut StreamRng, k: usize) -> usize {
    ((uniform(rng) * k as f64) as usize).min(k - 1)
}

/// Random integer-coefficient polynomial of total degree 1..=degree, centered
/// under `oracle`; redrawn until the centered polynomial is nonzero.
fn random_centered_label(rng: &mut StreamRng, nvars: usize, degree: u32, oracle: &dyn MomentOracle) -> Result<MultiPoly> {
    for _ in 0..LABEL_ATTEMPTS {
        let nterms = 1 + pick(rng, 3);
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let total = 1 + pick(rng, degree as usize) as u32;
            let mut exps = vec![0u32; nvars];
            for _ in 0..total {
                exps[pick(rng, nvars)] += 1;
            }
            let c = pick(rng, 6) as i32 - 3;
            terms.push((exps, if c >= 0 { c as f64 + 1.0 } else { c as f64 }));
        }
        let p = MultiPoly::new(terms).centered(nvars, oracle)?;
        if !p.is_zero() {
            return Ok(p);
        }
    }
    bail!("could not draw a nonconstant label; the input laws may be degenerate")
}

/// The networks of `set`, all with `nvars` input columns.
pub fn build_networks(set: &NetworkSet, nvars: usize, oracle: &dyn MomentOracle, master: u64) -> Result<Vec<DiagonalTensorNetwork>> {
    let nets = match set {
        NetworkSet::Explicit { networks } => networks.clone(),
        NetworkSet::AllTrees { max_edges, labels } => {
            if labels.is_empty() {
                bail!("all_trees needs at least one label");
            }
            let mut out = Vec::new();
            for w in 0..=*max_edges {
                for edges in trees::shapes(w) {
                    let vertices = (0..=w).map(|v| labels[v % labels.len()].clone()).collect();
                    out.push(DiagonalTensorNetwork::new(nvars, vertices, edges));
                }
            }
            out
        }
        NetworkSet::RandomCentered {
            count,
            min_edges,
            max_edges,
            degree,
        } => {
            if min_edges > max_edges || *degree == 0 || nvars == 0 {
                bail!("random_centered needs min_edges <= max_edges, degree >= 1 and at least one input");
            }
            let mut rng = stream_rng(master, 0, streams::NETWORK);
            let mut out = Vec::with_capacity(*count);
            for _ in 0..*count {
                let w = min_edges + pick(&mut rng, max_edges - min_edges + 1);
                let edges = trees::random_tree(&mut rng, w + 1);
                let vertices = (0..=w)
                    .map(|_| random_centered_label(&mut rng, nvars, *degree, oracle))
                    .collect::<Result<_>>()?;
                out.push(DiagonalTensorNetwork::new(nvars, vertices, edges));
            }
            out
        }
    };
    for (i, t) in nets.iter().enumerate() {
        t.validate().into_result().with_context(|| format!("network {i}"))?;
    }
    Ok(nets)
}

/// The limit that applies to `spec`: the invariant formula for invariant
/// ensembles, the Wigner formula otherwise.
fn limit_for(spec: &SymEnsembleSpec, t: &DiagonalTensorNetwork, mom_x: &dyn MomentOracle) -> Result<LimitValue> {
    Ok(match spec {
        SymEnsembleSpec::SymInvariant { eigenvalue_law, .. } => limval_invariant_sym(
            t,
            mom_x,
            &SpectralMoments(eigenvalue_law.clone()),
            InvariantRoute::Chains,
            INVARIANT_EDGE_CAP,
        )?,
        _ => limval_wigner_sym(t, mom_x, WIGNER_VERTEX_CAP)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnEntry {
    pub network: usize,
    pub edges: usize,
    pub limit: f64,
    pub mean: f64,
    pub se: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnEnsembleSummary {
    pub name: String,
    pub n: usize,
    pub entries: Vec<TnEntry>,
    pub max_abs_z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnSummary {
    pub networks: usize,
    pub trials: usize,
    pub z_threshold: f64,
    pub ensembles: Vec<TnEnsembleSummary>,
    /// For centered networks: whether every limit is exactly zero.
    pub limits_exactly_zero: Option<bool>,
    pub pass: bool,
}

fn z_score(mean: f64, se: f64, limit: f64) -> f64 {
    let d = mean - limit;
    if d == 0.0 {
        0.0
    } else if se > 0.0 {
        d / se
    } else {
        f64::INFINITY.copysign(d)
    }
}

/// Monte-Carlo averages of every network on every ensemble, with z-scores
/// against the limit for that ensemble.
pub fn run_universality(study: &TnStudy, ctx: &Ctx<'_>, dir: &mut ArtifactDir) -> Result<TnSummary> {
    let nvars = study.inputs.len();
    let oracle = IndependentLaws(study.inputs.clone());
    let nets = build_networks(&study.networks, nvars, &oracle, ctx.seed)?;
    dir.write_json("networks.json", &nets)?;
    let laws: Vec<_> = study.inputs.iter().collect();

    let mut limit_cols = Vec::with_capacity(study.ensembles.len());
    for ens in &study.ensembles {
        let lim = nets
            .iter()
            .enumerate()
            .map(|(i, t)| limit_for(&ens.spec, t, &oracle).map(|l| l.value).with_context(|| format!("limit of network {i}")))
            .collect::<Result<Vec<f64>>>()?;
        limit_cols.push(lim);
    }
    let mut headers = vec!["network".to_string(), "edges".to_string()];
    headers.extend(study.ensembles.iter().map(|e| e.name.clone()));
    let mut limits = Table::new(headers);
    for (i, t) in nets.iter().enumerate() {
        let mut row = vec![i.to_string(), t.num_edges().to_string()];
        row.extend(limit_cols.iter().map(|c| fmt_f64(c[i])));
        limits.push(row);
    }
    dir.write_table("limits.csv", &limits)?;

    let mut ensembles = Vec::new();
    for (ens, lim) in study.ensembles.iter().zip(&limit_cols) {
        let n = ens.n.unwrap_or(study.n);
        let values = ctx.pool.try_map(ctx.trials, |k| {
            let sample = sample_symmetric(&ens.spec, n, trial_seed(ctx.seed, k as u64)).with_context(|| format!("sampling {}", ens.name))?;
            let cols = draw_columns(ctx.seed, k as u64, &laws, n);
            let inputs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            nets.iter()
                .map(|t| tn_eval(t, &sample.op, &inputs).map_err(Into::into))
                .collect::<Result<Vec<f64>>>()
        })?;
        let mut table = Table::new((0..nets.len()).map(|i| format!("network{i}")));
        for row in &values {
            table.push_floats(row);
        }
        dir.write_table(&format!("values/{}.csv", ens.name), &table)?;
        let entries: Vec<TnEntry> = (0..nets.len())
            .map(|i| {
                let col: Vec<f64> = values.iter().map(|r| r[i]).collect();
                let (mean, se) = mean_and_se(&col);
                TnEntry {
                    network: i,
                    edges: nets[i].num_edges(),
                    limit: lim[i],
                    mean,
                    se,
                    z_score: z_score(mean, se, lim[i]),
                }
            })
            .collect();
        let max_abs_z = entries.iter().map(|e| e.z_score.abs()).fold(0.0, f64::max);
        ensembles.push(TnEnsembleSummary {
            name: ens.name.clone(),
            n,
            pass: max_abs_z <= study.z_threshold,
            max_abs_z,
            entries,
        });
    }
    let limits_exactly_zero = matches!(study.networks, NetworkSet::RandomCentered { .. })
        .then(|| limit_cols.iter().flatten().all(|v| *v == 0.0));
    let pass = ensembles.iter().all(|e| e.pass) && limits_exactly_zero.unwrap_or(true);
    Ok(TnSummary {
        networks: nets.len(),
        trials: ctx.trials,
        z_threshold: study.z_threshold,
        ensembles,
        limits_exactly_zero,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEntry {
    pub network: usize,
    pub edges: usize,
    pub wigner: Option<f64>,
    pub chains: f64,
    pub moebius: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEntry {
    pub graph: usize,
    pub limit: u8,
    pub value: f64,
    /// Literal index sum at a small size against the closed form there.
    pub dense_check: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub networks: Vec<RouteEntry>,
    pub graphs: Vec<GraphEntry>,
    pub hadamard_n: usize,
    pub pass: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ROUTE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn dense_hadamard(n: usize) -> Mat {
    let s = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { s } else { -s })
}

/// Every limit route on every network, and graph limits against the exact
/// Hadamard sums.
pub fn run_audit(study: &LimvalAudit, ctx: &Ctx<'_>, dir: &mut ArtifactDir) -> Result<AuditSummary> {
    study.spectrum.validate()?;
    let nvars = study.inputs.len();
    let oracle = IndependentLaws(study.inputs.clone());
    let nets = build_networks(&study.networks, nvars, &oracle, ctx.seed)?;
    dir.write_json("networks.json", &nets)?;
    let spectrum = SpectralMoments(study.spectrum.clone());
    // A semicircle spectrum makes the invariant limit coincide with the Wigner one.
    let semicircle = matches!(study.spectrum, SpectralSpec::Semicircle);

    let mut routes = Vec::new();
    let mut table = Table::new(["network", "edges", "wigner", "chains", "moebius", "agree"]);
    for (i, t) in nets.iter().enumerate() {
        let chains = limval_invariant_sym(t, &oracle, &spectrum, InvariantRoute::Chains, INVARIANT_EDGE_CAP)?.value;
        let moebius = limval_invariant_sym(t, &oracle, &spectrum, InvariantRoute::Moebius, INVARIANT_EDGE_CAP)?.value;
        let wigner = if semicircle {
            Some(limval_wigner_sym(t, &oracle, WIGNER_VERTEX_CAP)?.value)
        } else {
            None
        };
        let agree = close(chains, moebius) && wigner.is_none_or(|w| close(w, chains));
        table.push(vec![
            i.to_string(),
            t.num_edges().to_string(),
            wigner.map_or_else(String::new, fmt_f64),
            fmt_f64(chains),
            fmt_f64(moebius),
            agree.to_string(),
        ]);
        routes.push(RouteEntry {
            network: i,
            edges: t.num_edges(),
            wigner,
            chains,
            moebius,
            agree,
        });
    }
    dir.write_table("routes.csv", &table)?;

    let small = dense_hadamard(DENSE_HADAMARD_N);
    let mut graphs = Vec::new();
    let mut table = Table::new(["graph", "limit", "value", "dense_check", "pass"]);
    for (i, g) in study.graphs.iter().enumerate() {
        let limit = hgraph_limit(g)?;
        let value = hadamard_graph_value(g, study.hadamard_n)?;
        let dense_check = hgraph_sum_dense(g, &small, DEFAULT_BRUTE_CAP)
            .ok()
            .map(|d| d - hadamard_graph_value(g, DENSE_HADAMARD_N).expect("power of two"));
        let pass = (value - f64::from(limit)).abs() <= study.graph_tolerance && dense_check.is_none_or(|d| d.abs() <= ROUTE_TOLERANCE);
        table.push(vec![
            i.to_string(),
            limit.to_string(),
            fmt_f64(value),
            dense_check.map_or_else(String::new, fmt_f64),
            pass.to_string(),
        ]);
        graphs.push(GraphEntry {
            graph: i,
            limit,
            value,
            dense_check,
            pass,
        });
    }
    dir.write_table("graphs.csv", &table)?;
    let pass = routes.iter().all(|r| r.agree) && graphs.iter().all(|g| g.pass);
    Ok(AuditSummary {
        networks: routes,
        graphs,
        hadamard_n: study.hadamard_n,
        pass,
    })
}
