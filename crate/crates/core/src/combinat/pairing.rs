use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::partition::Partition;
use crate::error::{Error, Result};

/// Largest ground set for which pairings are enumerated: 11!! = 10395.
pub const MAX_PAIRING_GROUND: usize = 12;

/// All (m−1)!! pairings of [m]. Canonical order: the smallest unpaired
/// element is matched with each larger unpaired element in increasing order,
/// recursively.
pub fn enumerate_pairings(m: usize) -> Result<Vec<Partition>> {
    if m % 2 == 1 {
        return Err(Error::OddGroundSet(m));
    }
    if m > MAX_PAIRING_GROUND {
        return Err(Error::CapExceeded {
            what: "pairing enumeration",
            needed: crate::math::double_factorial(m as u32 - 1) as u128,
            cap: crate::math::double_factorial(MAX_PAIRING_GROUND as u32 - 1) as u128,
        });
    }
    let mut out = Vec::new();
    let mut partner = vec![usize::MAX; m];
    recurse(&mut partner, &mut out);
    Ok(out)
}

fn recurse(partner: &mut [usize], out: &mut Vec<Partition>) {
    let Some(first) = partner.iter().position(|&p| p == usize::MAX) else {
        let labels: Vec<usize> = (0..partner.len()).map(|i| i.min(partner[i])).collect();
        out.push(Partition::from_labels(&labels));
        return;
    };
    for j in first + 1..partner.len() {
        if partner[j] == usize::MAX {
            partner[first] = j;
            partner[j] = first;
            recurse(partner, out);
            partner[first] = usize::MAX;
            partner[j] = usize::MAX;
        }
    }
}

fn check_pairing(p: &Partition) -> Result<()> {
    if p.is_pairing() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!("{p} is not a pairing")))
    }
}

/// Möbius function between two pairings: the signed count Σ (−1)^k over
/// chains π = π₀ → … → π_k = π′ of distinct pairings that are geodesics for
/// the partition metric. Enumerated depth-first with prefix-sum pruning.
pub fn moeb_pairings(pi: &Partition, pi_prime: &Partition) -> Result<i64> {
    if pi.ground_size() != pi_prime.ground_size() {
        return Err(Error::GroundSetMismatch(pi.ground_size(), pi_prime.ground_size()));
    }
    check_pairing(pi)?;
    check_pairing(pi_prime)?;
    let all = enumerate_pairings(pi.ground_size())?;
    let to_target: Vec<usize> = all.iter().map(|p| p.metric(pi_prime)).collect::<Result<_>>()?;
    let total = pi.metric(pi_prime)?;
    fn dfs(all: &[Partition], to_target: &[usize], cur: &Partition, budget: usize, sign: i64) -> Result<i64> {
        // `budget` is the distance still allowed; the chain is a geodesic
        // exactly when it reaches the target with the budget used up.
        let mut acc = 0;
        if budget == 0 {
            return Ok(sign);
        }
        for (p, &dt) in all.iter().zip(to_target) {
            if p == cur {
                continue;
            }
            let step = cur.metric(p)?;
            if step + dt == budget {
                acc += dfs(all, to_target, p, dt, -sign)?;
            }
        }
        Ok(acc)
    }
    dfs(&all, &to_target, pi, total, 1)
}

/// All pairings of a ground set with their pairwise distances, for repeated
/// geodesic queries.
#[derive(Debug, Clone)]
pub struct PairingSpace {
    m: usize,
    pairings: Vec<Partition>,
    index: BTreeMap<Partition, usize>,
    dist: Vec<u8>,
}

impl PairingSpace {
    /// Pairwise distances are stored densely, so the ground set is capped at 10.
    pub const MAX_GROUND: usize = 10;

    pub fn new(m: usize) -> Result<Self> {
        if m > Self::MAX_GROUND {
            return Err(Error::CapExceeded {
                what: "pairing distance table",
                needed: m as u128,
                cap: Self::MAX_GROUND as u128,
            });
        }
        let pairings = enumerate_pairings(m)?;
        let np = pairings.len();
        let index = pairings.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut dist = vec![0u8; np * np];
        for i in 0..np {
            for j in i + 1..np {
                let d = pairings[i].metric(&pairings[j])? as u8;
                dist[i * np + j] = d;
                dist[j * np + i] = d;
            }
        }
        Ok(Self {
            m,
            pairings,
            index,
            dist,
        })
    }

    pub fn ground_size(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.pairings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairings.is_empty()
    }

    pub fn pairings(&self) -> &[Partition] {
        &self.pairings
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> usize {
        self.dist[i * self.pairings.len() + j] as usize
    }

    /// Moeb(·, target) for every pairing, by the recursion
    /// f(target) = 1, f(c) = −Σ f(p) over p ≠ c lying on a geodesic from c to target.
    pub fn moeb_to(&self, target: usize) -> Vec<i64> {
        let np = self.len();
        let mut order: Vec<usize> = (0..np).collect();
        order.sort_by_key(|&c| self.dist(c, target));
        let mut f = vec![0i64; np];
        f[target] = 1;
        for &c in &order {
            if c == target {
                continue;
            }
            let dc = self.dist(c, target);
            let mut s = 0;
            for p in 0..np {
                if p != c && self.dist(c, p) + self.dist(p, target) == dc {
                    s += f[p];
                }
            }
            f[c] = -s;
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::math::catalan;

    #[test]
    fn counts_and_order() {
        let two = enumerate_pairings(2).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(alloc::format!("{}", two[0]), "{{1,2}}");
        let four = enumerate_pairings(4).unwrap();
        let shown: Vec<_> = four.iter().map(|p| alloc::format!("{p}")).collect();
        assert_eq!(shown, ["{{1,2},{3,4}}", "{{1,3},{2,4}}", "{{1,4},{2,3}}"]);
        let mut eight = enumerate_pairings(8).unwrap();
        assert_eq!(eight.len(), 105);
        eight.sort();
        eight.dedup();
        assert_eq!(eight.len(), 105);
        assert_eq!(enumerate_pairings(12).unwrap().len(), 10395);
        assert_eq!(enumerate_pairings(3), Err(Error::OddGroundSet(3)));
        assert!(matches!(enumerate_pairings(14), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn moeb_on_four() {
        let ps = enumerate_pairings(4).unwrap();
        assert_eq!(moeb_pairings(&ps[0], &ps[0]).unwrap(), 1);
        assert_eq!(ps[0].metric(&ps[1]).unwrap(), 2);
        assert_eq!(moeb_pairings(&ps[0], &ps[1]).unwrap(), -1);
    }

    /// Solve the geodesic-incidence system Z f = e_target, where
    /// Z[c][p] = 1 when p lies on a geodesic from c to the target, by
    /// Gaussian elimination in floating point.
    fn inversion_oracle(space: &PairingSpace, target: usize) -> Vec<i64> {
        let np = space.len();
        let z = Mat::from_fn(np, np, |c, p| {
            (space.dist(c, p) + space.dist(p, target) == space.dist(c, target)) as u8 as f64
        });
        let mut a = z.to_rows();
        let mut b = vec![0.0; np];
        b[target] = 1.0;
        for col in 0..np {
            let piv = (col..np).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in 0..np {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    if f != 0.0 {
                        for k in col..np {
                            a[r][k] -= f * a[col][k];
                        }
                        b[r] -= f * b[col];
                    }
                }
            }
        }
        (0..np).map(|i| libm::round(b[i] / a[i][i]) as i64).collect()
    }

    #[test]
    fn moeb_agrees_with_inversion_and_dfs_on_six() {
        let space = PairingSpace::new(6).unwrap();
        for t in 0..space.len() {
            let dp = space.moeb_to(t);
            assert_eq!(dp, inversion_oracle(&space, t));
            for c in 0..space.len() {
                let dfs = moeb_pairings(&space.pairings()[c], &space.pairings()[t]).unwrap();
                assert_eq!(dfs, dp[c]);
            }
        }
    }

    #[test]
    fn moeb_matches_signed_catalan_product() {
        // Leading-order orthogonal Weingarten: each block of π ∨ π′ with 2k
        // elements contributes (−1)^{k−1} Cat_{k−1}.
        let space = PairingSpace::new(8).unwrap();
        let t = 5;
        let dp = space.moeb_to(t);
        for (c, p) in space.pairings().iter().enumerate() {
            let j = p.join(&space.pairings()[t]).unwrap();
            let expected: i64 = j
                .blocks()
                .iter()
                .map(|b| {
                    let k = b.len() as u32 / 2;
                    let c = catalan(k - 1) as i64;
                    if k % 2 == 1 {
                        c
                    } else {
                        -c
                    }
                })
                .product();
            assert_eq!(dp[c], expected, "{p}");
        }
    }
}
