// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Maximal clique enumeration and the overlap filter that turns the clique
//! list into a seed set.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::community::{canonical_order, Community};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::threshold::Threshold;

pub const DEFAULT_CLIQUE_CAP: usize = 10_000_000;

/// Cliques in canonical order (descending size, then lexicographic members),
/// all of size at least `min_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueSet {
    cliques: Vec<Community>,
    min_size: usize,
}

impl CliqueSet {
    /// Sorts `cliques` into canonical order. No maximality check is done.
    pub fn from_cliques(mut cliques: Vec<Community>, min_size: usize) -> Self {
        cliques.retain(|c| c.len() >= min_size);
        cliques.sort_unstable_by(canonical_order);
        cliques.dedup();
        CliqueSet { cliques, min_size }
    }

    pub fn cliques(&self) -> &[Community] {
        &self.cliques
    }

    pub fn min_size(&self) -> usize {
        self.min_size
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn into_cliques(self) -> Vec<Community> {
        self.cliques
    }
}

pub fn enumerate_maximal_cliques(graph: &Graph, min_size: usize) -> Result<CliqueSet> {
    enumerate_maximal_cliques_capped(graph, min_size, DEFAULT_CLIQUE_CAP)
}

/// Bron–Kerbosch with Tomita pivoting under a degeneracy-ordered outer loop.
/// Fails with [`Error::ResourceCap`] once more than `cap` cliques are found.
pub fn enumerate_maximal_cliques_capped(
    graph: &Graph,
    min_size: usize,
    cap: usize,
) -> Result<CliqueSet> {
    if min_size == 0 {
        return Err(Error::InvalidParameter("min clique size must be at least 1".into()));
    }
    let order = degeneracy_order(graph);
    let mut position = vec![0usize; order.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v as usize] = i;
    }

    let found = AtomicUsize::new(0);
    let search = Search {
        graph,
        min_size,
        cap,
        found: &found,
    };
    let per_vertex: Vec<Vec<Community>> = order
        .par_iter()
        .map(|&v| {
            let (mut later, mut earlier) = (Vec::new(), Vec::new());
            for &w in graph.neighbors(v) {
                if position[w as usize] > position[v as usize] {
                    later.push(w);
                } else {
                    earlier.push(w);
                }
            }
            let mut out = Vec::new();
            let mut r = vec![v];
            search.expand(&mut r, later, earlier, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut cliques: Vec<Community> = per_vertex.into_iter().flatten().collect();
    cliques.par_sort_unstable_by(canonical_order);
    Ok(CliqueSet { cliques, min_size })
}

struct Search<'a> {
    graph: &'a Graph,
    min_size: usize,
    cap: usize,
    found: &'a AtomicUsize,
}

impl Search<'_> {
    fn expand(
        &self,
        r: &mut Vec<u32>,
        mut p: Vec<u32>,
        mut x: Vec<u32>,
        out: &mut Vec<Community>,
    ) -> Result<()> {
        if self.found.load(Ordering::Relaxed) > self.cap {
            return Err(self.cap_error());
        }
        if p.is_empty() {
            if x.is_empty() && r.len() >= self.min_size {
                if self.found.fetch_add(1, Ordering::Relaxed) >= self.cap {
                    return Err(self.cap_error());
                }
                out.push(Community::new(r.clone()));
            }
            return Ok(());
        }
        if r.len() + p.len() < self.min_size {
            return Ok(());
        }

        let pivot = p
            .iter()
            .chain(x.iter())
            .copied()
            .max_by_key(|&u| (intersect_count(&p, self.graph.neighbors(u)), std::cmp::Reverse(u)))
            .expect("p is non-empty");
        let pivot_nbrs = self.graph.neighbors(pivot);
        let branches: Vec<u32> = p
            .iter()
            .copied()
            .filter(|v| pivot_nbrs.binary_search(v).is_err())
            .collect();

        for v in branches {
            let nbrs = self.graph.neighbors(v);
            let next_p = intersect(&p, nbrs);
            let next_x = intersect(&x, nbrs);
            r.push(v);
            self.expand(r, next_p, next_x, out)?;
            r.pop();
            if let Ok(i) = p.binary_search(&v) {
                p.remove(i);
            }
            if let Err(i) = x.binary_search(&v) {
                x.insert(i, v);
            }
        }
        Ok(())
    }

    fn cap_error(&self) -> Error {
        Error::ResourceCap {
            what: "maximal clique count",
            cap: self.cap,
        }
    }
}

fn intersect(small: &[u32], large: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(small.len().min(large.len()));
    if large.len() > 16 * small.len() {
        out.extend(small.iter().copied().filter(|v| large.binary_search(v).is_ok()));
        return out;
    }
    let (mut i, mut j) = (0, 0);
    while i < small.len() && j < large.len() {
        match small[i].cmp(&large[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(small[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn intersect_count(small: &[u32], large: &[u32]) -> usize {
    if large.len() > 16 * small.len() {
        return small.iter().filter(|v| large.binary_search(v).is_ok()).count();
    }
    crate::community::sorted_intersection_len(small, large)
}

/// Vertices in degeneracy (smallest-last) order via a bucket queue.
fn degeneracy_order(graph: &Graph) -> Vec<u32> {
    let n = graph.node_count();
    let mut degree: Vec<usize> = (0..n as u32).map(|v| graph.degree(v)).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); max_degree + 1];
    for v in 0..n {
        buckets[degree[v]].push(v as u32);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut d = 0;
    while order.len() < n {
        // Buckets hold stale entries; skip anything already removed or moved.
        let v = loop {
            match buckets[d].pop() {
                Some(v) if !removed[v as usize] && degree[v as usize] == d => break v,
                Some(_) => {}
                None => d += 1,
            }
        };
        removed[v as usize] = true;
        order.push(v);
        for &w in graph.neighbors(v) {
            let w = w as usize;
            if !removed[w] {
                degree[w] -= 1;
                buckets[degree[w]].push(w as u32);
                if degree[w] < d {
                    d = degree[w];
                }
            }
        }
    }
    order
}

/// Walks `cliques` in order and keeps a candidate unless some already-kept
/// clique shares more than `threshold * min(|candidate|, |kept|)` nodes with it.
pub fn filter_overlapping(cliques: &CliqueSet, threshold: f64) -> Result<CliqueSet> {
    let threshold = Threshold::new(threshold)?;
    Ok(filter_with(cliques, threshold))
}

pub(crate) fn filter_with(cliques: &CliqueSet, threshold: Threshold) -> CliqueSet {
    let mut kept: Vec<Community> = Vec::new();
    // node -> indices of kept cliques containing it
    let mut holders: std::collections::HashMap<u32, Vec<u32>> = std::collections::HashMap::new();
    let mut overlap: Vec<u32> = Vec::new();
    let mut touched: Vec<u32> = Vec::new();

    for candidate in cliques.cliques() {
        for &v in candidate.members() {
            if let Some(list) = holders.get(&v) {
                for &k in list {
                    if overlap[k as usize] == 0 {
                        touched.push(k);
                    }
                    overlap[k as usize] += 1;
                }
            }
        }
        let discard = touched.iter().any(|&k| {
            let smaller = candidate.len().min(kept[k as usize].len());
            threshold.exceeded_by(overlap[k as usize] as usize, smaller)
        });
        for &k in &touched {
            overlap[k as usize] = 0;
        }
        touched.clear();
        if discard {
            continue;
        }
        let id = kept.len() as u32;
        for &v in candidate.members() {
            holders.entry(v).or_default().push(id);
        }
        kept.push(candidate.clone());
        overlap.push(0);
    }

    CliqueSet {
        cliques: kept,
        min_size: cliques.min_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn members(cs: &CliqueSet) -> Vec<Vec<u32>> {
        cs.cliques().iter().map(|c| c.members().to_vec()).collect()
    }

    #[test]
    fn k5_is_one_clique() {
        let g = fixtures::complete(5);
        assert_eq!(members(&enumerate_maximal_cliques(&g, 3).unwrap()), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn triangle_with_pendant() {
        let g = fixtures::triangle_with_pendant();
        let got = enumerate_maximal_cliques(&g, 2).unwrap();
        assert_eq!(members(&got), vec![vec![0, 1, 2], vec![2, 3]]);
        let got = enumerate_maximal_cliques(&g, 3).unwrap();
        assert_eq!(members(&got), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn empty_graph() {
        let g = Graph::from_index_edges(0, &[]).unwrap();
        assert!(enumerate_maximal_cliques(&g, 1).unwrap().is_empty());
    }

    #[test]
    fn isolated_nodes_are_singleton_cliques() {
        let g = Graph::from_index_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(members(&enumerate_maximal_cliques(&g, 1).unwrap()), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn cap_aborts() {
        let g = fixtures::gnp(12, 0.5, 3);
        let total = enumerate_maximal_cliques(&g, 1).unwrap().len();
        assert!(total > 3);
        assert!(matches!(
            enumerate_maximal_cliques_capped(&g, 1, 3),
            Err(Error::ResourceCap { cap: 3, .. })
        ));
        assert_eq!(enumerate_maximal_cliques_capped(&g, 1, total).unwrap().len(), total);
    }

    #[test]
    fn matches_subset_oracle() {
        for seed in 0..30 {
            let n = 4 + (seed as usize % 9);
            let g = fixtures::gnp(n, 0.45, seed);
            let expected = fixtures::oracle_maximal_cliques(&g).unwrap();
            let got = enumerate_maximal_cliques(&g, 1).unwrap();
            assert_eq!(got, expected, "seed {seed}");
        }
    }

    fn clique(range: std::ops::Range<u32>) -> Community {
        Community::new(range.collect())
    }

    #[test]
    fn worked_overlap_example() {
        // kept clique of 10, candidate of 5 sharing 2 then 4 nodes, threshold 0.7
        let big = clique(0..10);
        let shares_two = Community::new(vec![8, 9, 20, 21, 22]);
        let shares_four = Community::new(vec![6, 7, 8, 9, 20]);
        let kept = filter_overlapping(&CliqueSet::from_cliques(vec![big.clone(), shares_two.clone()], 1), 0.7).unwrap();
        assert_eq!(kept.cliques(), &[big.clone(), shares_two]);
        let kept = filter_overlapping(&CliqueSet::from_cliques(vec![big.clone(), shares_four], 1), 0.7).unwrap();
        assert_eq!(kept.cliques(), &[big]);
    }

    #[test]
    fn tie_keeps_candidate() {
        // 0.6 * 5 = 3 exactly
        let cs = CliqueSet::from_cliques(vec![clique(0..10), Community::new(vec![7, 8, 9, 20, 21])], 1);
        assert_eq!(filter_overlapping(&cs, 0.6).unwrap().len(), 2);
    }

    #[test]
    fn compared_against_kept_only() {
        // B is discarded by A; C overlaps only B and survives.
        let a = clique(0..6);
        let b = Community::new(vec![3, 4, 5, 10, 11]);
        let c = Community::new(vec![10, 11, 12, 13]);
        let cs = CliqueSet::from_cliques(vec![a.clone(), b, c.clone()], 1);
        assert_eq!(filter_overlapping(&cs, 0.5).unwrap().cliques(), &[a, c]);
    }

    #[test]
    fn threshold_out_of_range() {
        let cs = CliqueSet::from_cliques(vec![], 1);
        assert!(filter_overlapping(&cs, 1.01).is_err());
        assert!(filter_overlapping(&cs, -0.5).is_err());
    }

    #[test]
    fn kept_count_can_drop_when_threshold_rises() {
        // B overlaps A in 3 of 5 nodes: discarded at 0.5, kept at 0.6. Once
        // kept, B discards C and D, which each share 3 of 4 nodes with it.
        let a = clique(0..6);
        let b = Community::new(vec![3, 4, 5, 10, 11]);
        let c = Community::new(vec![5, 10, 11, 20]);
        let d = Community::new(vec![4, 10, 11, 21]);
        let cs = CliqueSet::from_cliques(vec![a, b, c, d], 1);
        assert_eq!(filter_overlapping(&cs, 0.5).unwrap().len(), 3);
        assert_eq!(filter_overlapping(&cs, 0.6).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn filter_invariants(seed in 0u64..500, n in 5usize..25, p in 0.2f64..0.8) {
            let g = fixtures::gnp(n, p, seed);
            let all = enumerate_maximal_cliques(&g, 2).unwrap();
            for step in 0..=10 {
                let t = step as f64 / 10.0;
                let kept = filter_overlapping(&all, t).unwrap();
                // subsequence of the input
                let mut it = all.cliques().iter();
                for k in kept.cliques() {
                    prop_assert!(it.any(|c| c == k));
                }
                if step == 0 {
                    for (i, a) in kept.cliques().iter().enumerate() {
                        for b in &kept.cliques()[i + 1..] {
                            prop_assert_eq!(a.intersection_len(b), 0);
                        }
                    }
                }
                if step == 10 {
                    prop_assert_eq!(kept.len(), all.len());
                }
            }
        }

        #[test]
        fn cliques_are_maximal(seed in 0u64..1000, n in 1usize..40, p in 0.05f64..0.9) {
            let g = fixtures::gnp(n, p, seed);
            for c in enumerate_maximal_cliques(&g, 1).unwrap().cliques() {
                prop_assert!(fixtures::is_maximal_clique(&g, c.members()));
            }
        }
    }
}
