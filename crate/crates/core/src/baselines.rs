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

//! Reference detectors: asynchronous label propagation (disjoint) and clique
//! percolation (overlapping).

use std::collections::HashMap;

use itertools::Itertools;
use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clique;
use crate::community::{Community, Cover};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Serialize)]
pub struct LpParams {
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams {
            seed: 0,
            max_iterations: 100,
        }
    }
}

/// Asynchronous label propagation. Every sweep visits the nodes in a fresh
/// seeded permutation; a node keeps its label while it is among the most
/// frequent neighbor labels and otherwise takes one of them uniformly at
/// random. Stops once every node holds a majority label, or after
/// `max_iterations` sweeps.
pub fn label_propagation(graph: &Graph, params: &LpParams) -> Result<Cover> {
    if params.max_iterations == 0 {
        return Err(Error::InvalidParameter("max iterations must be at least 1".into()));
    }
    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut labels: Vec<u32> = (0..n as u32).collect();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut tally = LabelTally::new(n);

    for _ in 0..params.max_iterations {
        order.shuffle(&mut rng);
        for &v in &order {
            if graph.degree(v) == 0 {
                continue;
            }
            let best = tally.majority(graph, &labels, v);
            if best.binary_search(&labels[v as usize]).is_err() {
                labels[v as usize] = best[rng.gen_range(0..best.len())];
            }
        }
        let settled = (0..n as u32).all(|v| {
            graph.degree(v) == 0 || tally.majority(graph, &labels, v).binary_search(&labels[v as usize]).is_ok()
        });
        if settled {
            break;
        }
    }

    let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
    for (v, &label) in labels.iter().enumerate() {
        groups.entry(label).or_default().push(v as u32);
    }
    Ok(groups
        .into_values()
        .map(Community::from_sorted)
        .collect::<Cover>()
        .canonicalized())
}

struct LabelTally {
    counts: Vec<u32>,
    touched: Vec<u32>,
    best: Vec<u32>,
}

impl LabelTally {
    fn new(n: usize) -> Self {
        LabelTally {
            counts: vec![0; n],
            touched: Vec::new(),
            best: Vec::new(),
        }
    }

    /// Sorted labels with the highest count among `v`'s neighbors.
    fn majority(&mut self, graph: &Graph, labels: &[u32], v: u32) -> &[u32] {
        for &w in graph.neighbors(v) {
            let l = labels[w as usize];
            if self.counts[l as usize] == 0 {
                self.touched.push(l);
            }
            self.counts[l as usize] += 1;
        }
        let top = self.touched.iter().map(|&l| self.counts[l as usize]).max().unwrap_or(0);
        self.best.clear();
        for &l in &self.touched {
            if self.counts[l as usize] == top {
                self.best.push(l);
            }
            self.counts[l as usize] = 0;
        }
        self.touched.clear();
        self.best.sort_unstable();
        &self.best
    }
}

pub const DEFAULT_KCLIQUE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct CpmParams {
    pub k: usize,
    pub kclique_cap: usize,
    pub clique_cap: usize,
}

impl CpmParams {
    pub fn new(k: usize) -> Self {
        CpmParams {
            k,
            kclique_cap: DEFAULT_KCLIQUE_CAP,
            clique_cap: clique::DEFAULT_CLIQUE_CAP,
        }
    }
}

/// Clique percolation: k-cliques sharing `k - 1` nodes are chained, and each
/// chain component becomes the union of its k-cliques. The k-cliques come from
/// expanding every maximal clique of size at least `k` into its k-subsets.
pub fn clique_percolation(graph: &Graph, params: &CpmParams) -> Result<Cover> {
    let k = params.k;
    if k < 3 {
        return Err(Error::InvalidParameter(format!("k must be at least 3, got {k}")));
    }
    let maximal = clique::enumerate_maximal_cliques_capped(graph, k, params.clique_cap)?;

    let mut total: usize = 0;
    for c in maximal.cliques() {
        total = total.saturating_add(binomial(c.len(), k));
        if total > params.kclique_cap {
            return Err(Error::ResourceCap {
                what: "k-clique count",
                cap: params.kclique_cap,
            });
        }
    }

    let mut kcliques: Vec<Vec<u32>> = maximal
        .cliques()
        .par_iter()
        .flat_map_iter(|c| c.members().iter().copied().combinations(k))
        .collect();
    kcliques.par_sort_unstable();
    kcliques.dedup();

    let mut components = UnionFind::<usize>::new(kcliques.len());
    let mut by_face: HashMap<Vec<u32>, usize> = HashMap::with_capacity(kcliques.len() * k);
    for (i, kc) in kcliques.iter().enumerate() {
        for skip in 0..k {
            let face: Vec<u32> = kc
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip)
                .map(|(_, &v)| v)
                .collect();
            match by_face.get(&face) {
                Some(&other) => {
                    components.union(i, other);
                }
                None => {
                    by_face.insert(face, i);
                }
            }
        }
    }

    let mut members: HashMap<usize, Vec<u32>> = HashMap::new();
    for (i, kc) in kcliques.iter().enumerate() {
        members.entry(components.find(i)).or_default().extend_from_slice(kc);
    }
    Ok(members
        .into_values()
        .map(Community::new)
        .collect::<Cover>()
        .canonicalized())
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}
