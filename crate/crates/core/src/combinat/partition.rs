use alloc::collections::BTreeMap;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set partition of {0, …, m−1}, stored as its restricted growth string:
/// element i belongs to block `labels[i]`, and blocks are numbered in order
/// of their smallest element. Equality is therefore structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<u16>,
}

impl Partition {
    /// Canonicalizes arbitrary block labels.
    pub fn from_labels<T: Copy + Ord>(raw: &[T]) -> Self {
        let mut map: BTreeMap<T, u16> = BTreeMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = map.len() as u16;
                *map.entry(r).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    /// From explicit blocks of 0-based elements covering [m] exactly once.
    pub fn from_blocks(m: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; m];
        for (b, block) in blocks.iter().enumerate() {
            for &e in block {
                if e >= m || raw[e] != usize::MAX {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "element {e} is out of range or repeated"
                    )));
                }
                raw[e] = b;
            }
        }
        if raw.contains(&usize::MAX) {
            return Err(Error::InvalidArgument("blocks do not cover the ground set".into()));
        }
        Ok(Self::from_labels(&raw))
    }

    /// The finest partition 0_m.
    pub fn singletons(m: usize) -> Self {
        Self {
            labels: (0..m as u16).collect(),
        }
    }

    /// The coarsest partition 1_m.
    pub fn one(m: usize) -> Self {
        Self { labels: vec![0; m] }
    }

    pub fn ground_size(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0)
    }

    #[inline]
    pub fn block_of(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// Blocks sorted by smallest element, each sorted ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    pub fn is_pairing(&self) -> bool {
        let mut counts = vec![0usize; self.num_blocks()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts.iter().all(|&c| c == 2)
    }

    /// Every block has even size.
    pub fn is_even(&self) -> bool {
        let mut counts = vec![0usize; self.num_blocks()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts.iter().all(|&c| c % 2 == 0)
    }

    fn same_ground(&self, other: &Self) -> Result<()> {
        if self.labels.len() != other.labels.len() {
            return Err(Error::GroundSetMismatch(self.labels.len(), other.labels.len()));
        }
        Ok(())
    }

    /// Least upper bound, by union-find over co-blocked elements.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.same_ground(other)?;
        let m = self.labels.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for part in [self, other] {
            let mut first = vec![usize::MAX; part.num_blocks()];
            for i in 0..m {
                let b = part.labels[i] as usize;
                if first[b] == usize::MAX {
                    first[b] = i;
                } else {
                    let (ra, rb) = (find(&mut parent, first[b]), find(&mut parent, i));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let roots: Vec<usize> = (0..m).map(|i| find(&mut parent, i)).collect();
        Ok(Self::from_labels(&roots))
    }

    /// Greatest lower bound: blocks are the nonempty intersections.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.same_ground(other)?;
        let pairs: Vec<(u16, u16)> = self.labels.iter().copied().zip(other.labels.iter().copied()).collect();
        Ok(Self::from_labels(&pairs))
    }

    /// Whether `self ≤ other` (every block of self lies inside a block of other).
    pub fn refines(&self, other: &Self) -> Result<bool> {
        self.same_ground(other)?;
        let mut image = vec![u16::MAX; self.num_blocks()];
        for (a, b) in self.labels.iter().zip(&other.labels) {
            let slot = &mut image[*a as usize];
            if *slot == u16::MAX {
                *slot = *b;
            } else if *slot != *b {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// d(π, π′) = |π| + |π′| − 2|π ∨ π′|.
    pub fn metric(&self, other: &Self) -> Result<usize> {
        let j = self.join(other)?;
        Ok(self.num_blocks() + other.num_blocks() - 2 * j.num_blocks())
    }

    /// All τ with self ≤ τ ≤ upper.
    pub fn interval(&self, upper: &Self) -> Result<Vec<Self>> {
        if !self.refines(upper)? {
            return Err(Error::NotRefinement);
        }
        let k = self.num_blocks();
        // Block b of self lies in block `host[b]` of upper; a coarsening of
        // self is a partition of its blocks, admissible when merged blocks
        // share a host.
        let mut host = vec![0u16; k];
        for (a, b) in self.labels.iter().zip(&upper.labels) {
            host[*a as usize] = *b;
        }
        let mut out = Vec::new();
        for merge in all_partitions(k) {
            let ok = merge
                .blocks()
                .iter()
                .all(|blk| blk.iter().all(|&b| host[b] == host[blk[0]]));
            if ok {
                let labels: Vec<u16> = self.labels.iter().map(|&a| merge.labels[a as usize]).collect();
                out.push(Self::from_labels(&labels));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Partition {
    /// 1-based block notation, e.g. `{{1,2},{3}}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (bi, block) in self.blocks().iter().enumerate() {
            if bi > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (i, e) in block.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", e + 1)?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}

pub fn partition_join(a: &Partition, b: &Partition) -> Result<Partition> {
    a.join(b)
}

pub fn partition_metric(a: &Partition, b: &Partition) -> Result<usize> {
    a.metric(b)
}

/// Every partition of [m], in lexicographic order of restricted growth strings.
pub fn all_partitions(m: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if m == 0 {
        out.push(Partition { labels: Vec::new() });
        return out;
    }
    let mut labels = vec![0u16; m];
    let mut maxes = vec![0u16; m];
    loop {
        out.push(Partition { labels: labels.clone() });
        // Find the rightmost position that can be incremented.
        let mut i = m - 1;
        loop {
            if i == 0 {
                return out;
            }
            if labels[i] <= maxes[i - 1] {
                labels[i] += 1;
                maxes[i] = maxes[i - 1].max(labels[i]);
                for j in i + 1..m {
                    labels[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Möbius function μ(π, σ) of the partition lattice, from the defining
/// recursion Σ_{π≤τ≤σ} μ(π, τ) = 1{π = σ}, memoized over the interval.
pub fn moebius_partitions(pi: &Partition, sigma: &Partition) -> Result<i64> {
    let interval = pi.interval(sigma)?;
    let mut memo: BTreeMap<Partition, i64> = BTreeMap::new();
    // Process from finest to coarsest so every strict lower element is known.
    let mut sorted = interval;
    sorted.sort_by_key(|t| core::cmp::Reverse(t.num_blocks()));
    for tau in &sorted {
        if tau == pi {
            memo.insert(tau.clone(), 1);
            continue;
        }
        let mut s = 0i64;
        for (rho, mu) in &memo {
            if rho != tau && rho.refines(tau)? {
                s += mu;
            }
        }
        memo.insert(tau.clone(), -s);
    }
    Ok(memo[sigma])
}


#[cfg(test)]
mod tests {
    use super::*;

    fn p(m: usize, blocks: &[&[usize]]) -> Partition {
        let b: Vec<Vec<usize>> = blocks.iter().map(|b| b.iter().map(|x| x - 1).collect()).collect();
        Partition::from_blocks(m, &b).unwrap()
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..=7).map(|m| all_partitions(m).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52, 203, 877]);
    }

    #[test]
    fn join_examples() {
        let a = p(3, &[&[1], &[2], &[3]]);
        let b = p(3, &[&[1, 2], &[3]]);
        assert_eq!(a.join(&b).unwrap(), b);
        assert_eq!(b.join(&b).unwrap(), b);
        let c = p(4, &[&[1, 2], &[3, 4]]);
        let d = p(4, &[&[2, 3], &[1], &[4]]);
        assert_eq!(c.join(&d).unwrap(), Partition::one(4));
        assert_eq!(alloc::format!("{c}"), "{{1,2},{3,4}}");
        assert!(matches!(c.join(&a), Err(Error::GroundSetMismatch(4, 3))));
    }

    #[test]
    fn moebius_small_values() {
        assert_eq!(moebius_partitions(&Partition::singletons(3), &Partition::one(3)).unwrap(), 2);
        let x = p(4, &[&[1, 2], &[3], &[4]]);
        assert_eq!(moebius_partitions(&x, &x).unwrap(), 1);
        assert_eq!(
            moebius_partitions(&Partition::one(3), &Partition::singletons(3)),
            Err(Error::NotRefinement)
        );
    }

    #[test]
    fn moebius_matches_product_formula() {
        // μ(π, σ) = ∏ over blocks of σ of (−1)^{k−1}(k−1)!, where k counts the
        // blocks of π inside that block of σ.
        let parts = all_partitions(5);
        for a in &parts {
            for b in &parts {
                if !a.refines(b).unwrap() {
                    continue;
                }
                let mut counts = vec![0i64; b.num_blocks()];
                for blk in a.blocks() {
                    counts[b.block_of(blk[0])] += 1;
                }
                let expected: i64 = counts
                    .iter()
                    .map(|&k| {
                        let f: i64 = (1..k).product();
                        if (k - 1) % 2 == 0 {
                            f
                        } else {
                            -f
                        }
                    })
                    .product();
                assert_eq!(moebius_partitions(a, b).unwrap(), expected, "{a} {b}");
            }
        }
    }
}
