use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::pairing::PairingSpace;
use super::partition::Partition;
use super::{LimitTerm, LimitValue};
use crate::error::{Error, Result};
use crate::moments::MomentOracle;
use crate::poly::MultiPoly;
use crate::tensornet::DiagonalTensorNetwork;

/// Default bound on the edge count (pairings of [10]).
pub const INVARIANT_EDGE_CAP: usize = 5;

/// The 2w vertex-edge incidences of a tree network. Edge k = (u, v) owns
/// incidences 2k = (u, k) and 2k+1 = (v, k); π_V groups incidences by vertex
/// and π_E by edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFrame {
    pub w: usize,
    pub vertex_of: Vec<usize>,
    pub edge_of: Vec<usize>,
    pub pi_v: Partition,
    pub pi_e: Partition,
}

impl PairFrame {
    pub fn new(t: &DiagonalTensorNetwork) -> Result<Self> {
        t.validate().into_result()?;
        let w = t.num_edges();
        let mut vertex_of = Vec::with_capacity(2 * w);
        let mut edge_of = Vec::with_capacity(2 * w);
        for (k, &(u, v)) in t.edges.iter().enumerate() {
            vertex_of.extend([u, v]);
            edge_of.extend([k, k]);
        }
        Ok(Self {
            w,
            pi_v: Partition::from_labels(&vertex_of),
            pi_e: Partition::from_labels(&edge_of),
            vertex_of,
            edge_of,
        })
    }

    /// q(π) = ∏_blocks E[∏ over distinct vertices v in the block of q_v(X)], for π ≥ π_V.
    pub fn q_value(&self, t: &DiagonalTensorNetwork, pi: &Partition, mom_x: &dyn MomentOracle) -> Result<f64> {
        let mut out = 1.0;
        for block in pi.blocks() {
            let mut verts: Vec<usize> = block.iter().map(|&r| self.vertex_of[r]).collect();
            verts.sort_unstable();
            verts.dedup();
            let mut prod = MultiPoly::constant(t.nvars, 1.0);
            for v in verts {
                prod = prod.mul(&t.vertices[v]);
            }
            out *= prod.expectation(mom_x)?;
        }
        Ok(out)
    }

    /// D(π′) = ∏_blocks E[D^{number of distinct edges in the block}], for π′ ≥ π_E.
    pub fn d_value(&self, pi: &Partition, mom_d: &dyn MomentOracle) -> Result<f64> {
        let mut out = 1.0;
        for block in pi.blocks() {
            let mut edges: Vec<usize> = block.iter().map(|&r| self.edge_of[r]).collect();
            edges.sort_unstable();
            edges.dedup();
            out *= mom_d.moment(&[edges.len() as u32])?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantRoute {
    /// Σ over geodesic chains π_V → π₀ → … → π_j → π_E of (−1)^j q(π_V ∨ π₀) D(π_E ∨ π_j).
    Chains,
    /// Σ over pairs (π, π′) on a geodesic π_V → π → π′ → π_E of Moeb(π, π′) q(π_V ∨ π) D(π_E ∨ π′).
    Moebius,
}

struct Geodesic {
    space: PairingSpace,
    to_v: Vec<usize>,
    to_e: Vec<usize>,
    total: usize,
    q: Vec<Option<f64>>,
    d: Vec<Option<f64>>,
}

impl Geodesic {
    fn new(t: &DiagonalTensorNetwork, mom_x: &dyn MomentOracle, mom_d: &dyn MomentOracle) -> Result<Self> {
        let frame = PairFrame::new(t)?;
        let space = PairingSpace::new(2 * frame.w)?;
        let to_v: Vec<usize> = space.pairings().iter().map(|p| frame.pi_v.metric(p)).collect::<Result<_>>()?;
        let to_e: Vec<usize> = space.pairings().iter().map(|p| frame.pi_e.metric(p)).collect::<Result<_>>()?;
        let total = frame.pi_v.metric(&frame.pi_e)?;
        // Only pairings on some geodesic from π_V to π_E contribute.
        let mut q = vec![None; space.len()];
        let mut d = vec![None; space.len()];
        for (i, p) in space.pairings().iter().enumerate() {
            if to_v[i] + to_e[i] == total {
                q[i] = Some(frame.q_value(t, &frame.pi_v.join(p)?, mom_x)?);
                d[i] = Some(frame.d_value(&frame.pi_e.join(p)?, mom_d)?);
            }
        }
        Ok(Self {
            space,
            to_v,
            to_e,
            total,
            q,
            d,
        })
    }

    fn on_geodesic(&self, i: usize) -> bool {
        self.to_v[i] + self.to_e[i] == self.total
    }

    fn chains(&self) -> LimitValue {
        let mut value = 0.0;
        let mut terms = Vec::new();
        let mut chain = Vec::new();
        for first in 0..self.space.len() {
            if self.on_geodesic(first) {
                chain.push(first);
                self.extend(&mut chain, self.to_v[first], &mut value, &mut terms);
                chain.pop();
            }
        }
        LimitValue {
            value,
            terms,
            note: None,
        }
    }

    /// `used` is d(π_V, π₀) + Σ d(π_i, π_{i+1}) along the current chain.
    fn extend(&self, chain: &mut Vec<usize>, used: usize, value: &mut f64, terms: &mut Vec<LimitTerm>) {
        let cur = *chain.last().unwrap();
        if used + self.to_e[cur] == self.total {
            let sign = if chain.len() % 2 == 1 { 1.0 } else { -1.0 };
            let weight = sign * self.q[chain[0]].unwrap() * self.d[cur].unwrap();
            *value += weight;
            if weight != 0.0 {
                terms.push(LimitTerm {
                    description: format!("chain {}", self.describe(chain)),
                    weight,
                });
            }
        }
        for next in 0..self.space.len() {
            if next == cur {
                continue;
            }
            let step = self.space.dist(cur, next);
            if used + step + self.to_e[next] == self.total {
                chain.push(next);
                self.extend(chain, used + step, value, terms);
                chain.pop();
            }
        }
    }

    fn moebius(&self) -> LimitValue {
        let mut value = 0.0;
        let mut terms = Vec::new();
        for b in 0..self.space.len() {
            if !self.on_geodesic(b) {
                continue;
            }
            let moeb = self.space.moeb_to(b);
            for a in 0..self.space.len() {
                if self.to_v[a] + self.space.dist(a, b) + self.to_e[b] != self.total || moeb[a] == 0 {
                    continue;
                }
                let weight = moeb[a] as f64 * self.q[a].unwrap() * self.d[b].unwrap();
                value += weight;
                if weight != 0.0 {
                    terms.push(LimitTerm {
                        description: format!(
                            "pi {} pi' {} moeb {}",
                            self.space.pairings()[a],
                            self.space.pairings()[b],
                            moeb[a]
                        ),
                        weight,
                    });
                }
            }
        }
        LimitValue {
            value,
            terms,
            note: None,
        }
    }

    fn describe(&self, chain: &[usize]) -> String {
        let parts: Vec<String> = chain.iter().map(|&i| format!("{}", self.space.pairings()[i])).collect();
        parts.join(" -> ")
    }
}

/// Limit of E[val_T(W; x)] for a symmetric orthogonally invariant W with
/// spectral law D. π_j in a chain may coincide with π_E.
pub fn limval_invariant_sym(
    t: &DiagonalTensorNetwork,
    mom_x: &dyn MomentOracle,
    mom_d: &dyn MomentOracle,
    route: InvariantRoute,
    edge_cap: usize,
) -> Result<LimitValue> {
    t.validate().into_result()?;
    let w = t.num_edges();
    if w == 0 {
        let value = t.vertices[0].expectation(mom_x)?;
        return Ok(LimitValue {
            value,
            terms: vec![LimitTerm {
                description: "single vertex".into(),
                weight: value,
            }],
            note: None,
        });
    }
    if w > edge_cap.min(PairingSpace::MAX_GROUND / 2) {
        return Err(Error::CapExceeded {
            what: "invariant limit value edge count",
            needed: w as u128,
            cap: edge_cap.min(PairingSpace::MAX_GROUND / 2) as u128,
        });
    }
    let g = Geodesic::new(t, mom_x, mom_d)?;
    debug_assert_eq!(g.total, 2 * w - 1);
    Ok(match route {
        InvariantRoute::Chains => g.chains(),
        InvariantRoute::Moebius => g.moebius(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{IndependentLaws, ScalarLaw, TableMoments};
    use crate::tensornet::trees;

    fn one() -> MultiPoly {
        MultiPoly::constant(1, 1.0)
    }

    #[test]
    fn frame_distance_is_two_w_minus_one() {
        for w in 1..=4 {
            for edges in trees::shapes(w) {
                let t = DiagonalTensorNetwork::uniform(1, w + 1, edges, one());
                let f = PairFrame::new(&t).unwrap();
                assert_eq!(f.pi_v.num_blocks(), w + 1);
                assert!(f.pi_e.is_pairing());
                assert_eq!(f.pi_v.join(&f.pi_e).unwrap().num_blocks(), 1);
                assert_eq!(f.pi_v.metric(&f.pi_e).unwrap(), 2 * w - 1);
            }
        }
    }

    #[test]
    fn single_edge_is_mixed_moment_times_mean() {
        let mom_x = IndependentLaws::iid(ScalarLaw::StandardNormal, 1);
        let mut mom_d = TableMoments::new(1);
        mom_d.insert(vec![1], 0.7);
        let x = MultiPoly::var(1, 0);
        let t = DiagonalTensorNetwork::new(1, vec![x.clone(), x], vec![(0, 1)]);
        for route in [InvariantRoute::Chains, InvariantRoute::Moebius] {
            let lv = limval_invariant_sym(&t, &mom_x, &mom_d, route, INVARIANT_EDGE_CAP).unwrap();
            assert!((lv.value - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn semicircle_path_matches_wigner() {
        let mom_x = IndependentLaws::iid(ScalarLaw::StandardNormal, 1);
        let mom_d = IndependentLaws::iid(ScalarLaw::Semicircle, 1);
        let t = DiagonalTensorNetwork::uniform(1, 3, vec![(0, 1), (1, 2)], one());
        for route in [InvariantRoute::Chains, InvariantRoute::Moebius] {
            let lv = limval_invariant_sym(&t, &mom_x, &mom_d, route, INVARIANT_EDGE_CAP).unwrap();
            assert_eq!(lv.value, 1.0);
        }
        // Semicircle spectrum reproduces every Wigner limit value for constant labels.
        for w in 1..=4 {
            for edges in trees::shapes(w) {
                let t = DiagonalTensorNetwork::uniform(1, w + 1, edges, one());
                let inv = limval_invariant_sym(&t, &mom_x, &mom_d, InvariantRoute::Chains, 5).unwrap();
                let wig = super::super::limval_wigner_sym(&t, &mom_x, 8).unwrap();
                assert!((inv.value - wig.value).abs() < 1e-12, "{:?}", t.edges);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let mom = IndependentLaws::iid(ScalarLaw::StandardNormal, 1);
        let t = DiagonalTensorNetwork::uniform(1, 4, trees::shapes(3).remove(0), one());
        assert!(matches!(
            limval_invariant_sym(&t, &mom, &mom, InvariantRoute::Chains, 2),
            Err(Error::CapExceeded { .. })
        ));
    }
}
