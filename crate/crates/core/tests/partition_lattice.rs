use std::collections::{BTreeMap, VecDeque};

use amplab_core::combinat::{all_partitions, moebius_partitions, Partition};
use proptest::prelude::*;

fn partition_of(m: usize) -> impl Strategy<Value = Partition> {
    proptest::collection::vec(0u16..m as u16, m).prop_map(|raw| Partition::from_labels(&raw))
}

/// Partitions one merge away from `p`; splits are the reverse moves.
fn merges(p: &Partition) -> Vec<Partition> {
    let k = p.num_blocks();
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let raw: Vec<u16> = p.labels().iter().map(|&l| if l as usize == b { a as u16 } else { l }).collect();
            out.push(Partition::from_labels(&raw));
        }
    }
    out
}

#[test]
fn metric_is_merge_split_edit_distance_on_five() {
    let all = all_partitions(5);
    let index: BTreeMap<Partition, usize> = all.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut adj = vec![Vec::new(); all.len()];
    for (i, p) in all.iter().enumerate() {
        for q in merges(p) {
            let j = index[&q];
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for (s, p) in all.iter().enumerate() {
        let mut dist = vec![usize::MAX; all.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for (t, q) in all.iter().enumerate() {
            assert_eq!(p.metric(q).unwrap(), dist[t], "{p} vs {q}");
        }
    }
}

#[test]
fn moebius_inversion_exhaustive_on_five() {
    let all = all_partitions(5);
    for lo in &all {
        for hi in &all {
            if !lo.refines(hi).unwrap() {
                continue;
            }
            let total: i64 = all
                .iter()
                .filter(|s| lo.refines(s).unwrap() && s.refines(hi).unwrap())
                .map(|s| moebius_partitions(lo, s).unwrap())
                .sum();
            assert_eq!(total, i64::from(lo == hi), "{lo} .. {hi}");
        }
    }
}

proptest! {
    #[test]
    fn join_is_a_semilattice(a in partition_of(5), b in partition_of(5), c in partition_of(5)) {
        let ab = a.join(&b).unwrap();
        prop_assert_eq!(&ab, &b.join(&a).unwrap());
        prop_assert_eq!(ab.join(&c).unwrap(), a.join(&b.join(&c).unwrap()).unwrap());
        prop_assert_eq!(&a.join(&a).unwrap(), &a);
        prop_assert!(a.refines(&ab).unwrap() && b.refines(&ab).unwrap());
    }

    #[test]
    fn meet_lies_below_both(a in partition_of(5), b in partition_of(5)) {
        let m = a.meet(&b).unwrap();
        prop_assert!(m.refines(&a).unwrap() && m.refines(&b).unwrap());
        prop_assert_eq!(m.join(&a).unwrap(), a);
    }

    #[test]
    fn metric_triangle_inequality_on_six(a in partition_of(6), b in partition_of(6), c in partition_of(6)) {
        let ab = a.metric(&b).unwrap();
        let bc = b.metric(&c).unwrap();
        let ac = a.metric(&c).unwrap();
        prop_assert!(ac <= ab + bc);
        prop_assert_eq!(ab, b.metric(&a).unwrap());
        prop_assert_eq!(a.metric(&a).unwrap(), 0);
    }
}
