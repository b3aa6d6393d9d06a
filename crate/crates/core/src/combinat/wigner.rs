use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use super::partition::{all_partitions, Partition};
use super::{LimitTerm, LimitValue};
use crate::error::{Error, Result};
use crate::math::powi;
use crate::moments::MomentOracle;
use crate::poly::MultiPoly;
use crate::tensornet::{AlternatingTensorNetwork, DiagonalTensorNetwork, Side};

/// Default bound on the vertex count for partition enumeration (Bell(8) = 4140).
pub const WIGNER_VERTEX_CAP: usize = 8;

fn check_cap(nv: usize, cap: usize) -> Result<()> {
    if nv > cap {
        return Err(Error::CapExceeded {
            what: "vertex-partition enumeration",
            needed: nv as u128,
            cap: cap as u128,
        });
    }
    Ok(())
}

/// Whether the quotient of `edges` under the vertex classes `class` is a
/// doubled tree on `nblocks` blocks: no self-loops, every distinct edge
/// exactly twice, and |E|/2 + 1 blocks.
fn doubled_tree_quotient(edges: &[(usize, usize)], class: impl Fn(usize) -> usize, nblocks: usize) -> bool {
    if nblocks != edges.len() / 2 + 1 {
        return false;
    }
    let mut mult: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(a, b) in edges {
        let (ca, cb) = (class(a), class(b));
        if ca == cb {
            return false;
        }
        *mult.entry((ca.min(cb), ca.max(cb))).or_insert(0) += 1;
    }
    mult.values().all(|&c| c == 2)
}

fn block_expectation(labels: &[&MultiPoly], nvars: usize, oracle: &dyn MomentOracle) -> Result<f64> {
    let mut prod = MultiPoly::constant(nvars, 1.0);
    for q in labels {
        prod = prod.mul(q);
    }
    prod.expectation(oracle)
}

/// Limit of E[val_T(W; x)] for generalized Wigner W: the sum over vertex
/// partitions whose quotient is a doubled tree of ∏_blocks E[∏ q_v(X)].
pub fn limval_wigner_sym(t: &DiagonalTensorNetwork, mom_x: &dyn MomentOracle, vertex_cap: usize) -> Result<LimitValue> {
    t.validate().into_result()?;
    let nv = t.num_vertices();
    if t.num_edges() % 2 == 1 {
        return Ok(LimitValue::zero_with_note("odd-edge parity"));
    }
    check_cap(nv, vertex_cap)?;
    let mut value = 0.0;
    let mut terms = Vec::new();
    for p in all_partitions(nv) {
        if !doubled_tree_quotient(&t.edges, |v| p.block_of(v), p.num_blocks()) {
            continue;
        }
        let mut weight = 1.0;
        for block in p.blocks() {
            let labels: Vec<&MultiPoly> = block.iter().map(|&v| &t.vertices[v]).collect();
            weight *= block_expectation(&labels, t.nvars, mom_x)?;
        }
        value += weight;
        terms.push(LimitTerm {
            description: format!("vertex classes {p}"),
            weight,
        });
    }
    Ok(LimitValue {
        value,
        terms,
        note: None,
    })
}

/// Rectangular analogue for alternating networks: U- and V-vertices are
/// partitioned separately, and each admissible pair of partitions carries
/// γ^{|U-blocks|} ∏ E[P_U(X)] ∏ E[Q_V(Y)].
pub fn limval_wigner_rect(
    t: &AlternatingTensorNetwork,
    gamma: f64,
    mom_x: &dyn MomentOracle,
    mom_y: &dyn MomentOracle,
    vertex_cap: usize,
) -> Result<LimitValue> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("aspect ratio must be positive, got {gamma}")));
    }
    t.validate().into_result()?;
    if t.edges.len() % 2 == 1 {
        return Ok(LimitValue::zero_with_note("odd-edge parity"));
    }
    let us: Vec<usize> = (0..t.vertices.len()).filter(|&v| t.vertices[v].side == Side::U).collect();
    let vs: Vec<usize> = (0..t.vertices.len()).filter(|&v| t.vertices[v].side == Side::V).collect();
    check_cap(us.len().max(vs.len()), vertex_cap)?;
    // Position of each vertex within its side.
    let mut local = alloc::vec![0usize; t.vertices.len()];
    for (i, &u) in us.iter().enumerate() {
        local[u] = i;
    }
    for (i, &v) in vs.iter().enumerate() {
        local[v] = i;
    }
    let side_parts = |k: usize| {
        if k == 0 {
            alloc::vec![Partition::singletons(0)]
        } else {
            all_partitions(k)
        }
    };
    let (pus, pvs) = (side_parts(us.len()), side_parts(vs.len()));
    let mut value = 0.0;
    let mut terms = Vec::new();
    for pu in &pus {
        for pv in &pvs {
            let nu = pu.num_blocks();
            // U-blocks are numbered first, V-blocks after them.
            let class = |v: usize| match t.vertices[v].side {
                Side::U => pu.block_of(local[v]),
                Side::V => nu + pv.block_of(local[v]),
            };
            if !doubled_tree_quotient(&t.edges, class, nu + pv.num_blocks()) {
                continue;
            }
            let mut weight = powi(gamma, nu as u32);
            for block in pu.blocks() {
                let labels: Vec<&MultiPoly> = block.iter().map(|&i| &t.vertices[us[i]].label).collect();
                weight *= block_expectation(&labels, t.x_vars, mom_x)?;
            }
            for block in pv.blocks() {
                let labels: Vec<&MultiPoly> = block.iter().map(|&i| &t.vertices[vs[i]].label).collect();
                weight *= block_expectation(&labels, t.y_vars, mom_y)?;
            }
            value += weight;
            terms.push(LimitTerm {
                description: format!("U classes {pu}, V classes {pv}"),
                weight,
            });
        }
    }
    Ok(LimitValue {
        value,
        terms,
        note: None,
    })
}
