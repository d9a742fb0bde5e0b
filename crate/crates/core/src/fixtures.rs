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

//! Hand-built graphs with known answers, a plain G(n, p) sampler, and
//! brute-force oracles.
//!
//! Nothing here calls into the clique, baseline, or metric implementations;
//! the oracles are deliberately naive so they can be trusted at small sizes.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clique::CliqueSet;
use crate::community::{Community, Cover};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const ORACLE_CLIQUE_MAX_N: usize = 12;
pub const ORACLE_CPM_MAX_N: usize = 10;
pub const ORACLE_MODULARITY_MAX_N: usize = 30;

pub fn complete(n: usize) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            edges.push((a, b));
        }
    }
    Graph::from_index_edges(n, &edges).expect("valid indices")
}

/// Two K5 components on nodes 0..5 and 5..10.
pub fn two_k5() -> Graph {
    let mut edges = Vec::new();
    for base in [0u32, 5] {
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((base + a, base + b));
            }
        }
    }
    Graph::from_index_edges(10, &edges).expect("valid indices")
}

/// Triangle 0-1-2 with node 3 hanging off node 2.
pub fn triangle_with_pendant() -> Graph {
    Graph::from_index_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]).expect("valid indices")
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
    Graph::from_index_edges(n, &edges).expect("valid indices")
}

pub fn cycle(n: usize) -> Graph {
    let mut edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
    edges.push((0, n as u32 - 1));
    Graph::from_index_edges(n, &edges).expect("valid indices")
}

/// Triangles 0-1-2 and 1-2-3 sharing the edge 1-2.
pub fn triangles_sharing_edge() -> Graph {
    Graph::from_index_edges(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]).expect("valid indices")
}

/// Triangles 0-1-2 and 2-3-4 sharing node 2.
pub fn triangles_sharing_node() -> Graph {
    Graph::from_index_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)])
        .expect("valid indices")
}

pub fn two_triangles() -> Graph {
    Graph::from_index_edges(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
        .expect("valid indices")
}

/// Erdős–Rényi G(n, p) by testing every pair in order.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::from_index_edges(n, &edges).expect("valid indices")
}

/// Assigns every node of an `n`-node graph to one of `parts` labels at random.
pub fn random_partition(n: usize, parts: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); parts.max(1)];
    for v in 0..n as u32 {
        out[rng.gen_range(0..parts.max(1))].push(v);
    }
    out.retain(|p| !p.is_empty());
    out
}

fn adjacency_matrix(graph: &Graph) -> Vec<Vec<bool>> {
    let n = graph.node_count();
    let mut m = vec![vec![false; n]; n];
    for (a, b) in graph.edges() {
        m[a as usize][b as usize] = true;
        m[b as usize][a as usize] = true;
    }
    m
}

/// Direct definition check: all pairs adjacent, and no outside node adjacent
/// to every member.
pub fn is_maximal_clique(graph: &Graph, members: &[u32]) -> bool {
    let adj = adjacency_matrix(graph);
    let pairwise = members
        .iter()
        .all(|&a| members.iter().all(|&b| a == b || adj[a as usize][b as usize]));
    let extendable = (0..graph.node_count() as u32)
        .filter(|v| !members.contains(v))
        .any(|v| members.iter().all(|&m| adj[v as usize][m as usize]));
    !members.is_empty() && pairwise && !extendable
}

/// Tests every vertex subset for being a maximal clique.
pub fn oracle_maximal_cliques(graph: &Graph) -> Result<CliqueSet> {
    let n = graph.node_count();
    if n > ORACLE_CLIQUE_MAX_N {
        return Err(Error::OracleTooLarge(format!("{n} nodes > {ORACLE_CLIQUE_MAX_N}")));
    }
    let adj = adjacency_matrix(graph);
    let neighbor_mask: Vec<u32> = (0..n)
        .map(|v| (0..n).filter(|&w| adj[v][w]).fold(0u32, |m, w| m | (1 << w)))
        .collect();
    let is_clique = |mask: u32| {
        (0..n).all(|v| mask & (1 << v) == 0 || (mask & !(1 << v)) & !neighbor_mask[v] == 0)
    };
    let mut found = Vec::new();
    for mask in 1u32..(1u32 << n) {
        if !is_clique(mask) {
            continue;
        }
        let maximal = (0..n).all(|v| mask & (1 << v) != 0 || mask & !neighbor_mask[v] != 0);
        if maximal {
            found.push(Community::new((0..n as u32).filter(|&v| mask & (1 << v) != 0).collect()));
        }
    }
    Ok(CliqueSet::from_cliques(found, 1))
}

/// Classical modularity by a double loop over all ordered node pairs.
/// `partition` must be disjoint; unassigned nodes contribute nothing.
pub fn oracle_modularity(graph: &Graph, partition: &[Vec<u32>]) -> Result<f64> {
    let n = graph.node_count();
    if n > ORACLE_MODULARITY_MAX_N {
        return Err(Error::OracleTooLarge(format!("{n} nodes > {ORACLE_MODULARITY_MAX_N}")));
    }
    let mut label = vec![usize::MAX; n];
    for (i, part) in partition.iter().enumerate() {
        for &v in part {
            if label[v as usize] != usize::MAX {
                return Err(Error::InvalidParameter(format!("node {v} in two parts")));
            }
            label[v as usize] = i;
        }
    }
    let adj = adjacency_matrix(graph);
    let degree: Vec<f64> = adj.iter().map(|row| row.iter().filter(|&&x| x).count() as f64).collect();
    let two_m: f64 = degree.iter().sum();
    if two_m == 0.0 {
        return Err(Error::EmptyGraph);
    }
    let mut q = 0.0;
    for v in 0..n {
        for w in 0..n {
            if label[v] != usize::MAX && label[v] == label[w] {
                let a = if adj[v][w] { 1.0 } else { 0.0 };
                q += a - degree[v] * degree[w] / two_m;
            }
        }
    }
    Ok(q / two_m)
}

/// k = 3 clique percolation by listing every triangle and joining triangles
/// that share two nodes.
pub fn oracle_cpm_k3(graph: &Graph) -> Result<Cover> {
    let n = graph.node_count();
    if n > ORACLE_CPM_MAX_N {
        return Err(Error::OracleTooLarge(format!("{n} nodes > {ORACLE_CPM_MAX_N}")));
    }
    let adj = adjacency_matrix(graph);
    let mut triangles = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if adj[a][b] && adj[a][c] && adj[b][c] {
                    triangles.push([a, b, c]);
                }
            }
        }
    }
    let shared = |s: &[usize; 3], t: &[usize; 3]| s.iter().filter(|x| t.contains(x)).count();
    let mut seen = vec![false; triangles.len()];
    let mut communities = Vec::new();
    for start in 0..triangles.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut nodes = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            nodes.extend(triangles[t].iter().map(|&v| v as u32));
            for u in 0..triangles.len() {
                if !seen[u] && shared(&triangles[t], &triangles[u]) == 2 {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        communities.push(Community::new(nodes.into_iter().collect()));
    }
    Ok(Cover::new(communities).canonicalized())
}

/// Share of `members` that are one corner of some member triple with all
/// three edges present.
pub fn oracle_tpr(graph: &Graph, members: &[u32]) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let adj = adjacency_matrix(graph);
    let linked = |a: u32, b: u32| adj[a as usize][b as usize];
    let hits = members
        .iter()
        .filter(|&&v| {
            members.iter().any(|&a| {
                members
                    .iter()
                    .any(|&b| a != v && b != v && a != b && linked(v, a) && linked(v, b) && linked(a, b))
            })
        })
        .count();
    hits as f64 / members.len() as f64
}

/// Where a fixture's expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Checkable by inspection.
    ByHand,
    /// Produced by one of the oracles above.
    Oracle,
    /// Arithmetic taken from the published worked examples.
    WorkedExample,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    MaximalCliques { min_size: usize, cliques: Vec<Vec<u32>> },
    Modularity(f64),
    Tpr(f64),
    CpmK3(Vec<Vec<u32>>),
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: Graph,
    /// Cover the metric expectations refer to.
    pub cover: Option<Cover>,
    pub expected: Vec<(Expected, Source)>,
}

pub fn catalog() -> Vec<Fixture> {
    let whole = |n: u32| Cover::new(vec![Community::new((0..n).collect())]);
    vec![
        Fixture {
            name: "k4",
            graph: complete(4),
            cover: Some(whole(4)),
            expected: vec![
                (Expected::MaximalCliques { min_size: 1, cliques: vec![vec![0, 1, 2, 3]] }, Source::ByHand),
                (Expected::Modularity(0.0), Source::ByHand),
                (Expected::Tpr(1.0), Source::ByHand),
            ],
        },
        Fixture {
            name: "c5",
            graph: cycle(5),
            cover: None,
            expected: vec![(
                Expected::MaximalCliques {
                    min_size: 1,
                    cliques: vec![vec![0, 1], vec![0, 4], vec![1, 2], vec![2, 3], vec![3, 4]],
                },
                Source::ByHand,
            )],
        },
        Fixture {
            name: "two_k5",
            graph: two_k5(),
            cover: Some(Cover::new(vec![
                Community::new((0..5).collect()),
                Community::new((5..10).collect()),
            ])),
            expected: vec![
                (
                    Expected::MaximalCliques {
                        min_size: 3,
                        cliques: vec![(0..5).collect(), (5..10).collect()],
                    },
                    Source::ByHand,
                ),
                (Expected::Modularity(0.5), Source::Oracle),
            ],
        },
        Fixture {
            name: "triangle_pendant",
            graph: triangle_with_pendant(),
            cover: Some(whole(4)),
            expected: vec![
                (
                    Expected::MaximalCliques { min_size: 2, cliques: vec![vec![0, 1, 2], vec![2, 3]] },
                    Source::ByHand,
                ),
                (Expected::Tpr(0.75), Source::Oracle),
            ],
        },
        Fixture {
            name: "path4",
            graph: path(4),
            cover: Some(whole(4)),
            expected: vec![(Expected::Tpr(0.0), Source::ByHand)],
        },
        Fixture {
            name: "triangles_sharing_edge",
            graph: triangles_sharing_edge(),
            cover: None,
            expected: vec![(Expected::CpmK3(vec![vec![0, 1, 2, 3]]), Source::Oracle)],
        },
        Fixture {
            name: "triangles_sharing_node",
            graph: triangles_sharing_node(),
            cover: None,
            expected: vec![(Expected::CpmK3(vec![vec![0, 1, 2], vec![2, 3, 4]]), Source::Oracle)],
        },
        Fixture {
            name: "two_triangles",
            graph: two_triangles(),
            cover: None,
            expected: vec![(Expected::CpmK3(vec![vec![0, 1, 2], vec![3, 4, 5]]), Source::Oracle)],
        },
    ]
}
