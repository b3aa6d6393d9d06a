//! Diagonal and alternating tensor networks on trees, and their values on
//! a matrix by rooted contraction or by brute-force index summation.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::math::CompensatedSum;
use crate::operator::MatrixOperator;
use crate::poly::MultiPoly;

/// Default cap on the number of index tuples summed by the brute-force evaluators.
pub const DEFAULT_BRUTE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub(crate) fn from_issues(issues: Vec<String>) -> Self {
        Self {
            valid: issues.is_empty(),
            issues,
        }
    }

    pub fn into_result(self) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(self.issues.join("; ")))
        }
    }
}

/// A tree whose vertices carry polynomial labels in `nvars` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalTensorNetwork {
    pub nvars: usize,
    pub vertices: Vec<MultiPoly>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Indexed by [m], labeled by polynomials in the x-inputs.
    U,
    /// Indexed by [n], labeled by polynomials in the y-inputs.
    V,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltVertex {
    pub side: Side,
    pub label: MultiPoly,
}

/// A bipartite tree: U-vertices labeled by p_u(x_1..x_k), V-vertices by q_v(y_1..y_ℓ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlternatingTensorNetwork {
    pub x_vars: usize,
    pub y_vars: usize,
    pub vertices: Vec<AltVertex>,
    pub edges: Vec<(usize, usize)>,
}

fn tree_issues(nv: usize, edges: &[(usize, usize)]) -> Vec<String> {
    let mut issues = Vec::new();
    if nv == 0 {
        issues.push("network has no vertices".into());
        return issues;
    }
    for &(a, b) in edges {
        if a >= nv || b >= nv {
            issues.push(format!("edge ({a}, {b}) references a missing vertex"));
        } else if a == b {
            issues.push(format!("self-loop at vertex {a}"));
        }
    }
    if !issues.is_empty() {
        return issues;
    }
    if edges.len() + 1 != nv {
        issues.push(format!("not a tree: {} vertices and {} edges", nv, edges.len()));
    }
    let adj = adjacency(nv, edges);
    let mut seen = vec![false; nv];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        issues.push("not a tree: graph is disconnected".into());
    }
    issues
}

fn adjacency(nv: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nv];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

impl DiagonalTensorNetwork {
    pub fn new(nvars: usize, vertices: Vec<MultiPoly>, edges: Vec<(usize, usize)>) -> Self {
        Self {
            nvars,
            vertices,
            edges,
        }
    }

    /// Same shape with every label equal to `label`.
    pub fn uniform(nvars: usize, nv: usize, edges: Vec<(usize, usize)>, label: MultiPoly) -> Self {
        Self::new(nvars, vec![label; nv], edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut issues = tree_issues(self.vertices.len(), &self.edges);
        for (i, q) in self.vertices.iter().enumerate() {
            if let Err(e) = q.check_arity(self.nvars) {
                issues.push(format!("vertex {i}: {e}"));
            }
        }
        ValidationReport::from_issues(issues)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }
}

impl AlternatingTensorNetwork {
    pub fn validate(&self) -> ValidationReport {
        let mut issues = tree_issues(self.vertices.len(), &self.edges);
        for &(a, b) in &self.edges {
            if a < self.vertices.len() && b < self.vertices.len() && self.vertices[a].side == self.vertices[b].side {
                issues.push(format!("edge ({a}, {b}) joins two {:?}-vertices", self.vertices[a].side));
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            let k = match v.side {
                Side::U => self.x_vars,
                Side::V => self.y_vars,
            };
            if let Err(e) = v.label.check_arity(k) {
                issues.push(format!("vertex {i}: {e}"));
            }
        }
        ValidationReport::from_issues(issues)
    }

    pub fn count_side(&self, side: Side) -> usize {
        self.vertices.iter().filter(|v| v.side == side).count()
    }
}

pub fn tn_validate(t: &DiagonalTensorNetwork) -> ValidationReport {
    t.validate()
}

pub fn tn_validate_alt(t: &AlternatingTensorNetwork) -> ValidationReport {
    t.validate()
}

/// A vertex of maximum degree (the lowest index among ties).
pub fn max_degree_vertex(nv: usize, edges: &[(usize, usize)]) -> usize {
    let mut d = vec![0usize; nv];
    for &(a, b) in edges {
        d[a] += 1;
        d[b] += 1;
    }
    let mut best = 0;
    for v in 1..nv {
        if d[v] > d[best] {
            best = v;
        }
    }
    best
}

/// Parents and a BFS order from `root`; children always appear after parents.
fn bfs_order(nv: usize, edges: &[(usize, usize)], root: usize) -> (Vec<usize>, Vec<usize>) {
    let adj = adjacency(nv, edges);
    let mut parent = vec![usize::MAX; nv];
    let mut order = Vec::with_capacity(nv);
    let mut queue = VecDeque::from([root]);
    parent[root] = root;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    (parent, order)
}

fn check_inputs(inputs: &[&[f64]], k: usize, len: usize) -> Result<()> {
    if inputs.len() != k {
        return Err(Error::Arity(format!("network expects {k} inputs, got {}", inputs.len())));
    }
    for x in inputs {
        if x.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: x.len(),
            });
        }
    }
    Ok(())
}

/// val_T(W; x_1..x_k) by contraction rooted at a maximum-degree vertex.
pub fn tn_eval(t: &DiagonalTensorNetwork, w: &MatrixOperator, inputs: &[&[f64]]) -> Result<f64> {
    let root = max_degree_vertex(t.vertices.len(), &t.edges);
    tn_eval_rooted(t, w, inputs, root)
}

/// val_T(W; x_1..x_k) by contraction rooted at `root`.
pub fn tn_eval_rooted(t: &DiagonalTensorNetwork, w: &MatrixOperator, inputs: &[&[f64]], root: usize) -> Result<f64> {
    t.validate().into_result()?;
    let n = w.rows();
    if w.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.cols(),
        });
    }
    check_inputs(inputs, t.nvars, n)?;
    if root >= t.vertices.len() {
        return Err(Error::InvalidArgument(format!("root {root} out of range")));
    }
    let nv = t.vertices.len();
    let (parent, order) = bfs_order(nv, &t.edges, root);
    let mut local: Vec<Option<Vec<f64>>> = vec![None; nv];
    for &v in order.iter().rev() {
        let mut acc = t.vertices[v].eval_columns(inputs, n);
        if let Some(children) = local[v].take() {
            for (a, c) in acc.iter_mut().zip(children) {
                *a *= c;
            }
        }
        if v == root {
            return Ok(normalized_sum(&acc, n));
        }
        let msg = w.apply(&acc, false)?;
        let p = parent[v];
        merge_message(&mut local[p], msg);
    }
    unreachable!("root is visited")
}

fn merge_message(slot: &mut Option<Vec<f64>>, msg: Vec<f64>) {
    match slot {
        Some(existing) => existing.iter_mut().zip(msg).for_each(|(a, b)| *a *= b),
        None => *slot = Some(msg),
    }
}

fn normalized_sum(v: &[f64], n: usize) -> f64 {
    let mut s = CompensatedSum::new();
    for &x in v {
        s.add(x);
    }
    s.value() / n as f64
}

/// Value of an alternating network on an m×n matrix, normalized by 1/n.
pub fn tn_eval_alt(t: &AlternatingTensorNetwork, w: &MatrixOperator, x: &[&[f64]], y: &[&[f64]]) -> Result<f64> {
    let root = max_degree_vertex(t.vertices.len(), &t.edges);
    tn_eval_alt_rooted(t, w, x, y, root)
}

pub fn tn_eval_alt_rooted(
    t: &AlternatingTensorNetwork,
    w: &MatrixOperator,
    x: &[&[f64]],
    y: &[&[f64]],
    root: usize,
) -> Result<f64> {
    t.validate().into_result()?;
    let (m, n) = (w.rows(), w.cols());
    check_inputs(x, t.x_vars, m)?;
    check_inputs(y, t.y_vars, n)?;
    if root >= t.vertices.len() {
        return Err(Error::InvalidArgument(format!("root {root} out of range")));
    }
    let nv = t.vertices.len();
    let (parent, order) = bfs_order(nv, &t.edges, root);
    let mut local: Vec<Option<Vec<f64>>> = vec![None; nv];
    for &v in order.iter().rev() {
        let vert = &t.vertices[v];
        let mut acc = match vert.side {
            Side::U => vert.label.eval_columns(x, m),
            Side::V => vert.label.eval_columns(y, n),
        };
        if let Some(children) = local[v].take() {
            for (a, c) in acc.iter_mut().zip(children) {
                *a *= c;
            }
        }
        if v == root {
            return Ok(normalized_sum(&acc, n));
        }
        // A V-vertex sends W·(n-vector) to its U parent; a U-vertex sends Wᵀ·(m-vector).
        let msg = w.apply(&acc, vert.side == Side::U)?;
        merge_message(&mut local[parent[v]], msg);
    }
    unreachable!("root is visited")
}

fn check_cap(ranges: &[usize], cap: u128) -> Result<u128> {
    let total = ranges.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
    if total > cap {
        return Err(Error::CapExceeded {
            what: "brute-force index tuples",
            needed: total,
            cap,
        });
    }
    Ok(total)
}

/// Literal (1/n) Σ_i ∏_v q_v(x[i_v]) ∏_{(u,v)} W[i_u, i_v].
pub fn tn_eval_brute(t: &DiagonalTensorNetwork, w: &Mat, inputs: &[&[f64]], cap: u128) -> Result<f64> {
    t.validate().into_result()?;
    let n = w.rows;
    check_inputs(inputs, t.nvars, n)?;
    let nv = t.vertices.len();
    check_cap(&vec![n; nv], cap)?;
    let labels: Vec<Vec<f64>> = t.vertices.iter().map(|q| q.eval_columns(inputs, n)).collect();
    let ranges = vec![n; nv];
    Ok(brute_sum(&ranges, &labels, &t.edges, |a, b, idx| w[(idx[a], idx[b])]) / n as f64)
}

/// Literal index sum for an alternating network; U indices range over [m],
/// V indices over [n], and every edge contributes W[i_u, i_v].
pub fn tn_eval_alt_brute(
    t: &AlternatingTensorNetwork,
    w: &Mat,
    x: &[&[f64]],
    y: &[&[f64]],
    cap: u128,
) -> Result<f64> {
    t.validate().into_result()?;
    let (m, n) = (w.rows, w.cols);
    check_inputs(x, t.x_vars, m)?;
    check_inputs(y, t.y_vars, n)?;
    let ranges: Vec<usize> = t.vertices.iter().map(|v| if v.side == Side::U { m } else { n }).collect();
    check_cap(&ranges, cap)?;
    let labels: Vec<Vec<f64>> = t
        .vertices
        .iter()
        .map(|v| match v.side {
            Side::U => v.label.eval_columns(x, m),
            Side::V => v.label.eval_columns(y, n),
        })
        .collect();
    let sides: Vec<Side> = t.vertices.iter().map(|v| v.side).collect();
    Ok(brute_sum(&ranges, &labels, &t.edges, |a, b, idx| {
        if sides[a] == Side::U {
            w[(idx[a], idx[b])]
        } else {
            w[(idx[b], idx[a])]
        }
    }) / n as f64)
}

fn brute_sum(
    ranges: &[usize],
    labels: &[Vec<f64>],
    edges: &[(usize, usize)],
    entry: impl Fn(usize, usize, &[usize]) -> f64,
) -> f64 {
    let nv = ranges.len();
    let mut idx = vec![0usize; nv];
    let mut acc = CompensatedSum::new();
    loop {
        let mut term: f64 = (0..nv).map(|v| labels[v][idx[v]]).product();
        for &(a, b) in edges {
            term *= entry(a, b, &idx);
        }
        acc.add(term);
        let mut pos = 0;
        loop {
            if pos == nv {
                return acc.value();
            }
            idx[pos] += 1;
            if idx[pos] < ranges[pos] {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Tree shapes.
pub mod trees {
    use super::*;

    /// Labeled tree on `nv` vertices from a Prüfer sequence.
    pub fn from_prufer(seq: &[usize]) -> Vec<(usize, usize)> {
        let nv = seq.len() + 2;
        let mut degree = vec![1usize; nv];
        for &s in seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(nv - 1);
        for &s in seq {
            let leaf = (0..nv).find(|&v| degree[v] == 1).expect("a leaf exists");
            edges.push((leaf, s));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..nv).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        edges
    }

    /// Uniformly random labeled tree with `nv` vertices.
    pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, nv: usize) -> Vec<(usize, usize)> {
        match nv {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => {
                let seq: Vec<usize> = (0..nv - 2).map(|_| rng.random_range(0..nv)).collect();
                from_prufer(&seq)
            }
        }
    }

    /// Canonical string of the tree rooted at `root` (AHU encoding).
    fn encode(adj: &[Vec<usize>], v: usize, parent: usize) -> String {
        let mut kids: Vec<String> = adj[v]
            .iter()
            .filter(|&&w| w != parent)
            .map(|&w| encode(adj, w, v))
            .collect();
        kids.sort();
        let mut s = String::from("(");
        for k in kids {
            s.push_str(&k);
        }
        s.push(')');
        s
    }

    /// Isomorphism-invariant code: the smallest rooted encoding over all roots.
    pub fn canonical_code(nv: usize, edges: &[(usize, usize)]) -> String {
        let adj = adjacency(nv, edges);
        (0..nv).map(|r| encode(&adj, r, usize::MAX)).min().unwrap_or_default()
    }

    /// One representative of every unlabeled tree with `w` edges.
    pub fn shapes(w: usize) -> Vec<Vec<(usize, usize)>> {
        let nv = w + 1;
        if nv <= 2 {
            return vec![if nv == 2 { vec![(0, 1)] } else { Vec::new() }];
        }
        let mut seen = alloc::collections::BTreeSet::new();
        let mut out = Vec::new();
        let total = nv.pow((nv - 2) as u32);
        for code in 0..total {
            let mut c = code;
            let seq: Vec<usize> = (0..nv - 2)
                .map(|_| {
                    let d = c % nv;
                    c /= nv;
                    d
                })
                .collect();
            let edges = from_prufer(&seq);
            if seen.insert(canonical_code(nv, &edges)) {
                out.push(edges);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal, seeded};

    fn x_only(k: usize) -> MultiPoly {
        MultiPoly::var(1, k)
    }

    #[test]
    fn validation_cases() {
        let single = DiagonalTensorNetwork::new(1, vec![MultiPoly::constant(1, 1.0)], vec![]);
        assert!(single.validate().valid);
        let cycle = DiagonalTensorNetwork::uniform(1, 3, vec![(0, 1), (1, 2), (2, 0)], MultiPoly::constant(1, 1.0));
        assert!(!cycle.validate().valid);
        let alt = AlternatingTensorNetwork {
            x_vars: 1,
            y_vars: 1,
            vertices: vec![
                AltVertex { side: Side::U, label: MultiPoly::constant(1, 1.0) },
                AltVertex { side: Side::U, label: MultiPoly::constant(1, 1.0) },
            ],
            edges: vec![(0, 1)],
        };
        assert!(!alt.validate().valid);
        let wrong_arity = DiagonalTensorNetwork::new(2, vec![MultiPoly::var(1, 0)], vec![]);
        assert!(!wrong_arity.validate().valid);
    }

    #[test]
    fn single_vertex_is_empirical_mean() {
        let t = DiagonalTensorNetwork::new(1, vec![MultiPoly::monomial(vec![2], 1.0)], vec![]);
        let x = [1.0, 2.0, 3.0];
        let w = MatrixOperator::identity(3);
        assert!((tn_eval(&t, &w, &[&x]).unwrap() - 14.0 / 3.0).abs() < 1e-14);
        let wm = Mat::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        assert!((tn_eval_brute(&t, &wm, &[&x], DEFAULT_BRUTE_CAP).unwrap() - 14.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn line_network_is_quadratic_form() {
        let n = 7;
        let mut rng = seeded(1, 0);
        let mut w = Mat::from_fn(n, n, |_, _| normal(&mut rng));
        w.symmetrize();
        let t = DiagonalTensorNetwork::uniform(1, 3, vec![(0, 1), (1, 2)], MultiPoly::constant(1, 1.0));
        let ones = vec![1.0; n];
        let w1 = w.matvec(&ones);
        let dense: f64 = w1.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let op = MatrixOperator::dense(w);
        let got = tn_eval(&t, &op, &[&ones]).unwrap();
        assert!((got - dense).abs() < 1e-12);
    }

    #[test]
    fn single_edge_with_identity_collapses() {
        let t = DiagonalTensorNetwork::new(1, vec![x_only(0), MultiPoly::monomial(vec![2], 1.0)], vec![(0, 1)]);
        let x = [0.5, -1.0, 2.0, 3.0];
        let expect: f64 = x.iter().map(|v| v * v * v).sum::<f64>() / 4.0;
        let got = tn_eval_brute(&t, &Mat::identity(4), &[&x], DEFAULT_BRUTE_CAP).unwrap();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn alternating_single_u_vertex() {
        let t = AlternatingTensorNetwork {
            x_vars: 1,
            y_vars: 1,
            vertices: vec![AltVertex { side: Side::U, label: x_only(0) }],
            edges: vec![],
        };
        let w = MatrixOperator::dense(Mat::zeros(3, 6));
        let x = [1.0, 2.0, 6.0];
        let y = [0.0; 6];
        // (1/n) Σ_α x_α = (m/n) ⟨x⟩_m
        assert_eq!(tn_eval_alt(&t, &w, &[&x], &[&y]).unwrap(), 9.0 / 6.0);
    }

    #[test]
    fn alternating_line_is_quadratic_form() {
        let (m, n) = (4, 6);
        let mut rng = seeded(2, 0);
        let w = Mat::from_fn(m, n, |_, _| normal(&mut rng));
        let one = MultiPoly::constant(1, 1.0);
        let t = AlternatingTensorNetwork {
            x_vars: 1,
            y_vars: 1,
            vertices: vec![
                AltVertex { side: Side::U, label: one.clone() },
                AltVertex { side: Side::V, label: one.clone() },
                AltVertex { side: Side::U, label: one },
            ],
            edges: vec![(0, 1), (1, 2)],
        };
        let wt1 = w.matvec_t(&vec![1.0; m]);
        let dense: f64 = wt1.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let x = vec![0.0; m];
        let y = vec![0.0; n];
        let got = tn_eval_alt(&t, &MatrixOperator::dense(w), &[&x], &[&y]).unwrap();
        assert!((got - dense).abs() < 1e-12);
    }

    #[test]
    fn tree_shape_counts() {
        let counts: Vec<usize> = (0..=6).map(|w| trees::shapes(w).len()).collect();
        assert_eq!(counts, vec![1, 1, 1, 2, 3, 6, 11]);
    }
}
