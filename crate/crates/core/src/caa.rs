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

//! Clique augmentation: enumerate maximal cliques, keep a weakly-overlapping
//! seed subset, then grow every seed by admitting neighbors that are
//! connected to a large enough fraction of the community.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::clique::{self, CliqueSet};
use crate::community::{Community, Cover};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::threshold::Threshold;

#[derive(Debug, Clone, Serialize)]
pub struct CaaParams {
    pub min_clique_size: usize,
    pub overlapping_threshold: f64,
    pub growing_threshold: f64,
    /// `None` runs every seed to its fixpoint.
    pub max_rounds: Option<usize>,
    pub clique_cap: usize,
}

impl Default for CaaParams {
    fn default() -> Self {
        CaaParams {
            min_clique_size: 3,
            overlapping_threshold: 0.0,
            growing_threshold: 0.7,
            max_rounds: None,
            clique_cap: clique::DEFAULT_CLIQUE_CAP,
        }
    }
}

impl CaaParams {
    fn checked(&self) -> Result<(Threshold, Threshold)> {
        if self.min_clique_size < 3 {
            return Err(Error::InvalidParameter(format!(
                "min clique size must be at least 3, got {}",
                self.min_clique_size
            )));
        }
        if self.max_rounds == Some(0) {
            return Err(Error::InvalidParameter("max rounds must be at least 1".into()));
        }
        Ok((
            Threshold::new(self.overlapping_threshold)?,
            growing_threshold(self.growing_threshold)?,
        ))
    }
}

fn growing_threshold(value: f64) -> Result<Threshold> {
    let t = Threshold::new(value)?;
    if t.is_zero() {
        return Err(Error::InvalidParameter("growing threshold must be in (0, 1]".into()));
    }
    Ok(t)
}

/// A grown community and the number of rounds that admitted someone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Growth {
    pub community: Community,
    pub rounds: usize,
}

/// Grows `seed` to its fixpoint under `growing_threshold`.
pub fn grow_community(graph: &Graph, seed: &Community, growing_threshold: f64) -> Result<Community> {
    let t = self::growing_threshold(growing_threshold)?;
    Ok(grow(graph, seed, t, None)?.community)
}

/// Round-based growth. Each round counts, for every non-member neighbor, its
/// edges into the community as it stood at the start of the round, admits all
/// with `count >= threshold * size` at once, and stops after a round that
/// admits nobody or after `max_rounds` admitting rounds.
pub fn grow(
    graph: &Graph,
    seed: &Community,
    threshold: Threshold,
    max_rounds: Option<usize>,
) -> Result<Growth> {
    check_clique(graph, seed)?;
    let mut members = seed.members().to_vec();
    let mut rounds = 0;
    let mut links: HashMap<u32, usize> = HashMap::new();
    while max_rounds.map_or(true, |cap| rounds < cap) {
        links.clear();
        for &v in &members {
            for &w in graph.neighbors(v) {
                if members.binary_search(&w).is_err() {
                    *links.entry(w).or_insert(0) += 1;
                }
            }
        }
        let size = members.len();
        let mut admitted: Vec<u32> = links
            .iter()
            .filter(|&(_, &count)| threshold.reached_by(count, size))
            .map(|(&w, _)| w)
            .collect();
        if admitted.is_empty() {
            break;
        }
        admitted.sort_unstable();
        members.extend(admitted);
        members.sort_unstable();
        rounds += 1;
    }
    Ok(Growth {
        community: Community::from_sorted(members),
        rounds,
    })
}

fn check_clique(graph: &Graph, seed: &Community) -> Result<()> {
    let members = seed.members();
    if members.is_empty() {
        return Err(Error::InvalidParameter("seed community is empty".into()));
    }
    for (i, &a) in members.iter().enumerate() {
        graph.check_node(a)?;
        for &b in &members[i + 1..] {
            graph.check_node(b)?;
            if !graph.has_edge(a, b) {
                return Err(Error::NonCliqueSeed(a, b));
            }
        }
    }
    Ok(())
}

/// Output of a full CAA run.
#[derive(Debug, Clone)]
pub struct CaaRun {
    pub cover: Cover,
    pub seeds: CliqueSet,
    pub maximal_cliques: usize,
    /// Admitting rounds -> number of seeds that needed that many.
    pub rounds_histogram: BTreeMap<usize, usize>,
}

pub fn run_caa(graph: &Graph, params: &CaaParams) -> Result<Cover> {
    Ok(run_caa_detailed(graph, params)?.cover)
}

pub fn run_caa_detailed(graph: &Graph, params: &CaaParams) -> Result<CaaRun> {
    let (overlap, growing) = params.checked()?;
    let cliques =
        clique::enumerate_maximal_cliques_capped(graph, params.min_clique_size, params.clique_cap)?;
    let maximal_cliques = cliques.len();
    let seeds = clique::filter_with(&cliques, overlap);
    drop(cliques);
    let (cover, rounds_histogram) = grow_seeds(graph, &seeds, growing, params.max_rounds)?;
    Ok(CaaRun {
        cover,
        seeds,
        maximal_cliques,
        rounds_histogram,
    })
}

/// Grows every seed in parallel and returns the deduplicated cover in
/// canonical order.
pub fn grow_seeds(
    graph: &Graph,
    seeds: &CliqueSet,
    threshold: Threshold,
    max_rounds: Option<usize>,
) -> Result<(Cover, BTreeMap<usize, usize>)> {
    let grown: Vec<Growth> = seeds
        .cliques()
        .par_iter()
        .map(|seed| grow(graph, seed, threshold, max_rounds))
        .collect::<Result<_>>()?;
    let mut histogram = BTreeMap::new();
    for g in &grown {
        *histogram.entry(g.rounds).or_insert(0) += 1;
    }
    let cover: Cover = grown.into_iter().map(|g| g.community).collect();
    Ok((cover.canonicalized(), histogram))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::planted_partition;
    use proptest::prelude::*;

    /// K10 on 0..10; node 10 links to 0..7, node 11 links to 0..6.
    fn worked_growth_graph() -> Graph {
        let mut edges = Vec::new();
        for a in 0..10u32 {
            for b in a + 1..10 {
                edges.push((a, b));
            }
        }
        edges.extend((0..7).map(|v| (v, 10)));
        edges.extend((0..6).map(|v| (v, 11)));
        Graph::from_index_edges(12, &edges).unwrap()
    }

    #[test]
    fn seven_of_ten_admitted_six_rejected() {
        let g = worked_growth_graph();
        let seed = Community::new((0..10).collect());
        let grown = grow(&g, &seed, Threshold::new(0.7).unwrap(), Some(1)).unwrap();
        assert_eq!(grown.community.members(), (0..11).collect::<Vec<u32>>());
        assert_eq!(grown.rounds, 1);
        let fixpoint = grow_community(&g, &seed, 0.7).unwrap();
        assert!(!fixpoint.contains(11));
    }

    #[test]
    fn outside_node_joins_block() {
        // Blocks 0..5 and 5..10; node 10 links four nodes of the first block
        // and one of the second.
        let mut edges = Vec::new();
        for base in [0u32, 5] {
            for a in 0..5 {
                for b in a + 1..5 {
                    edges.push((base + a, base + b));
                }
            }
        }
        edges.extend([(0, 10), (1, 10), (2, 10), (3, 10), (5, 10)]);
        let g = Graph::from_index_edges(11, &edges).unwrap();
        let seed = Community::new((0..5).collect());
        let grown = grow(&g, &seed, Threshold::new(0.7).unwrap(), None).unwrap();
        assert_eq!(grown.community.members(), &[0, 1, 2, 3, 4, 10]);
        assert_eq!(grown.rounds, 1);
    }

    #[test]
    fn non_clique_seed_rejected() {
        let g = fixtures::path(3);
        assert!(matches!(
            grow_community(&g, &Community::new(vec![0, 1, 2]), 0.7),
            Err(Error::NonCliqueSeed(0, 2))
        ));
    }

    #[test]
    fn zero_growing_threshold_rejected() {
        let g = fixtures::complete(3);
        assert!(grow_community(&g, &Community::new(vec![0, 1, 2]), 0.0).is_err());
        let params = CaaParams { growing_threshold: 0.0, ..Default::default() };
        assert!(run_caa(&g, &params).is_err());
        let params = CaaParams { min_clique_size: 2, ..Default::default() };
        assert!(run_caa(&g, &params).is_err());
    }

    #[test]
    fn disjoint_k5s() {
        let cover = run_caa(&fixtures::two_k5(), &CaaParams::default()).unwrap();
        let got: Vec<&[u32]> = cover.iter().map(|c| c.members()).collect();
        assert_eq!(got, vec![&[0, 1, 2, 3, 4][..], &[5, 6, 7, 8, 9]]);
        let cover = run_caa(&fixtures::complete(5), &CaaParams::default()).unwrap();
        assert_eq!(cover.len(), 1);
        assert_eq!(cover.communities()[0].len(), 5);
    }

    #[test]
    fn converging_seeds_are_merged() {
        // Two 4-cliques sharing three nodes both grow into all five nodes.
        let g = Graph::from_index_edges(
            5,
            &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (0, 4), (1, 4), (2, 4), (3, 4)],
        )
        .unwrap();
        let params = CaaParams { overlapping_threshold: 1.0, growing_threshold: 0.5, ..Default::default() };
        let run = run_caa_detailed(&g, &params).unwrap();
        assert_eq!(run.seeds.len(), 2);
        assert_eq!(run.cover.len(), 1);
        assert_eq!(run.cover.communities()[0].len(), 5);
    }

    #[test]
    fn planted_blocks_contain_communities() {
        let planted = planted_partition(4, 25, 0.9, 0.01, 11).unwrap();
        let cover = run_caa(&planted.graph, &CaaParams::default()).unwrap();
        assert!(!cover.is_empty());
        let crossing = cover
            .iter()
            .filter(|c| {
                let b = planted.block_of(c.members()[0]);
                c.members().iter().any(|&v| planted.block_of(v) != b)
            })
            .count();
        // Cross-block growth is possible in principle but should be rare.
        assert!(crossing * 1000 <= cover.len().max(1000), "{crossing} of {}", cover.len());
    }

    proptest! {
        #[test]
        fn growth_properties(seed in 0u64..300, n in 6usize..30, p in 0.2f64..0.7, t in 0.3f64..1.0) {
            let g = fixtures::gnp(n, p, seed);
            let t = (t * 10.0).round() / 10.0;
            for c in clique::enumerate_maximal_cliques(&g, 3).unwrap().cliques() {
                let grown = grow_community(&g, c, t).unwrap();
                prop_assert!(c.is_subset_of(&grown));
                let at_one = grow_community(&g, c, 1.0).unwrap();
                prop_assert_eq!(&at_one, c);
                // every seed member still sits in a triangle
                for &v in c.members() {
                    let inside: Vec<u32> = g.neighbors(v).iter().copied().filter(|&w| grown.contains(w)).collect();
                    let in_triangle = inside.iter().any(|&a| inside.iter().any(|&b| a < b && g.has_edge(a, b)));
                    prop_assert!(in_triangle);
                }
            }
        }

        #[test]
        fn caa_is_deterministic(seed in 0u64..200) {
            let g = fixtures::gnp(40, 0.25, seed);
            let params = CaaParams { overlapping_threshold: 0.5, ..Default::default() };
            let a = run_caa(&g, &params).unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            let b = pool.install(|| run_caa(&g, &params)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
