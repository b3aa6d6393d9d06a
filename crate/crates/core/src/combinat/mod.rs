//! Partition-lattice combinatorics and closed-form limit values of tensor
//! networks.

mod hgraph;
mod invariant;
mod pairing;
mod partition;
mod wigner;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use hgraph::{hadamard_graph_value, hgraph_limit, hgraph_sum_dense, BipartiteMultigraph};
pub use invariant::{limval_invariant_sym, InvariantRoute, PairFrame, INVARIANT_EDGE_CAP};
pub use pairing::{enumerate_pairings, moeb_pairings, PairingSpace, MAX_PAIRING_GROUND};
pub use partition::{all_partitions, moebius_partitions, partition_join, partition_metric, Partition};
pub use wigner::{limval_wigner_rect, limval_wigner_sym, WIGNER_VERTEX_CAP};

/// A limit value together with its nonzero contributions, for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub value: f64,
    pub terms: Vec<LimitTerm>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTerm {
    pub description: String,
    pub weight: f64,
}

impl LimitValue {
    fn zero_with_note(note: &str) -> Self {
        Self {
            value: 0.0,
            terms: Vec::new(),
            note: Some(note.into()),
        }
    }
}
