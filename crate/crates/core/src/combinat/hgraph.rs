use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::math::pow;

/// A bipartite multigraph with `k` vertices on side K and `l` on side L;
/// each edge is (K-index, L-index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteMultigraph {
    pub k: usize,
    pub l: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteMultigraph {
    pub fn new(k: usize, l: usize, edges: Vec<(usize, usize)>) -> Self {
        Self { k, l, edges }
    }

    /// Degrees of K-vertices followed by L-vertices.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.k + self.l];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[self.k + b] += 1;
        }
        d
    }

    /// Connected, every degree even and positive, at least one edge.
    pub fn check(&self) -> Result<()> {
        let fail = |m: alloc::string::String| Err(Error::GraphPrecondition(m));
        if self.edges.is_empty() {
            return fail("graph has no edges".into());
        }
        if let Some(&(a, b)) = self.edges.iter().find(|&&(a, b)| a >= self.k || b >= self.l) {
            return fail(format!("edge ({a}, {b}) references a missing vertex"));
        }
        if let Some((v, d)) = self.degrees().into_iter().enumerate().find(|&(_, d)| d % 2 == 1 || d == 0) {
            return fail(format!("vertex {v} has degree {d}"));
        }
        let n = self.k + self.l;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, self.k + b));
            parent[ra] = rb;
        }
        let r0 = find(&mut parent, 0);
        if (1..n).any(|v| find(&mut parent, v) != r0) {
            return fail("graph is disconnected".into());
        }
        Ok(())
    }

    fn half_edges(&self) -> usize {
        self.edges.len() / 2
    }
}

/// The limit of (1/n) H_n(G) for orthogonal H with delocalized entries,
/// by repeatedly removing a degree-2 vertex and merging its two neighbors.
pub fn hgraph_limit(g: &BipartiteMultigraph) -> Result<u8> {
    g.check()?;
    let mut g = g.clone();
    loop {
        let w = g.half_edges();
        if w == 1 {
            return Ok(1);
        }
        if g.k + g.l <= w {
            return Ok(0);
        }
        // Average degree 4w/(k+l) < 4 with even degrees forces a degree-2 vertex.
        let deg = g.degrees();
        let v = deg.iter().position(|&d| d == 2).expect("a degree-2 vertex exists");
        g = if v < g.k {
            remove_k(&g, v)
        } else {
            let swapped = swap_sides(&g);
            swap_sides(&remove_k(&swapped, v - g.k))
        };
    }
}

fn swap_sides(g: &BipartiteMultigraph) -> BipartiteMultigraph {
    BipartiteMultigraph::new(g.l, g.k, g.edges.iter().map(|&(a, b)| (b, a)).collect())
}

/// Delete K-vertex `v` (degree 2) and its edges, merging its L-neighbors.
fn remove_k(g: &BipartiteMultigraph, v: usize) -> BipartiteMultigraph {
    let nbrs: Vec<usize> = g.edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect();
    let (keep, gone) = (nbrs[0].min(nbrs[1]), nbrs[0].max(nbrs[1]));
    let relabel_l = |b: usize| {
        let b = if b == gone { keep } else { b };
        if keep != gone && b > gone {
            b - 1
        } else {
            b
        }
    };
    let edges = g
        .edges
        .iter()
        .filter(|e| e.0 != v)
        .map(|&(a, b)| (if a > v { a - 1 } else { a }, relabel_l(b)))
        .collect();
    BipartiteMultigraph::new(g.k - 1, if keep != gone { g.l - 1 } else { g.l }, edges)
}

fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let width = rows.first().map_or(0, |r| r.len() * 64);
    let mut rank = 0;
    for col in 0..width {
        let (word, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][word] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][word] & bit != 0 {
                let pivot = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Exact (1/n) H_n(G) for the normalized Sylvester–Hadamard matrix of size n.
///
/// With H[k, l] = n^{-1/2} (−1)^{⟨k, l⟩} on bit vectors, the index sum
/// factorizes over the log2 n bit positions, and each position contributes
/// 2^{|K| + |L| − rank B}, where B is the K×L edge-multiplicity matrix mod 2.
/// Hence (1/n) H_n(G) = n^{|K| + |L| − rank B − w − 1} for 2w edges.
pub fn hadamard_graph_value(g: &BipartiteMultigraph, n: usize) -> Result<f64> {
    g.check()?;
    if !crate::fastops::is_power_of_two(n) {
        return Err(Error::NotPowerOfTwo(n));
    }
    let words = g.l.div_ceil(64);
    let mut rows = vec![vec![0u64; words]; g.k];
    for &(a, b) in &g.edges {
        rows[a][b / 64] ^= 1u64 << (b % 64);
    }
    let exponent = (g.k + g.l) as f64 - gf2_rank(rows) as f64 - g.half_edges() as f64 - 1.0;
    Ok(pow(n as f64, exponent))
}

/// Literal (1/n) Σ over one index per vertex of ∏_edges H[k_S, l_S′].
pub fn hgraph_sum_dense(g: &BipartiteMultigraph, h: &Mat, cap: u128) -> Result<f64> {
    g.check()?;
    if h.rows != h.cols {
        return Err(Error::DimensionMismatch {
            expected: h.rows,
            got: h.cols,
        });
    }
    let n = h.rows;
    let nv = g.k + g.l;
    let needed = (n as u128).checked_pow(nv as u32).unwrap_or(u128::MAX);
    if needed > cap {
        return Err(Error::CapExceeded {
            what: "dense graph sum",
            needed,
            cap,
        });
    }
    let mut idx = vec![0usize; nv];
    let mut acc = crate::math::CompensatedSum::new();
    loop {
        acc.add(g.edges.iter().map(|&(a, b)| h[(idx[a], idx[g.k + b])]).product());
        let mut i = 0;
        loop {
            if i == nv {
                return Ok(acc.value() / n as f64);
            }
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}
