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

//! Undirected simple graphs over dense node indices, plus the directed
//! follower-edge form that only preprocessing consumes.
//!
//! Node indices are always assigned in lexicographic order of the external
//! ids, so sorting by index and sorting by external id agree everywhere.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::community::{Community, Cover};
use crate::error::{Error, Result};

/// Counts of records dropped while building a simple graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct EdgeStats {
    pub records: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    ids: Vec<String>,
    index: HashMap<String, u32>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from external-id pairs. Self-loops and repeated pairs
    /// (in either direction) are dropped and counted. Only ids that appear in
    /// some non-loop edge become nodes.
    pub fn from_id_edges<'a, I>(edges: I) -> (Graph, EdgeStats)
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut stats = EdgeStats::default();
        let mut interner: HashMap<&'a str, u32> = HashMap::new();
        let mut names: Vec<&'a str> = Vec::new();
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let mut intern = |s: &'a str, interner: &mut HashMap<&'a str, u32>| -> u32 {
            *interner.entry(s).or_insert_with(|| {
                names.push(s);
                (names.len() - 1) as u32
            })
        };
        for (a, b) in edges {
            stats.records += 1;
            if a == b {
                stats.self_loops += 1;
                continue;
            }
            let a = intern(a, &mut interner);
            let b = intern(b, &mut interner);
            pairs.push((a.min(b), a.max(b)));
        }

        // Relabel so that index order equals id order.
        let mut order: Vec<u32> = (0..names.len() as u32).collect();
        order.sort_unstable_by(|&x, &y| names[x as usize].cmp(names[y as usize]));
        let mut relabel = vec![0u32; names.len()];
        for (new, &old) in order.iter().enumerate() {
            relabel[old as usize] = new as u32;
        }
        let ids: Vec<String> = order.iter().map(|&o| names[o as usize].to_owned()).collect();
        for p in &mut pairs {
            let (a, b) = (relabel[p.0 as usize], relabel[p.1 as usize]);
            *p = (a.min(b), a.max(b));
        }
        let before = pairs.len();
        pairs.sort_unstable();
        pairs.dedup();
        stats.duplicates = before - pairs.len();

        (Graph::assemble(ids, &pairs), stats)
    }

    /// Builds a graph on nodes `0..n` whose external ids are the zero-padded
    /// decimal indices. Isolated nodes are kept.
    pub fn from_index_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let width = n.saturating_sub(1).to_string().len();
        let ids = (0..n).map(|i| format!("{i:0width$}")).collect();
        let mut pairs = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for x in [a, b] {
                if x as usize >= n {
                    return Err(Error::IndexOutOfRange { index: x, n });
                }
            }
            if a != b {
                pairs.push((a.min(b), a.max(b)));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Graph::assemble(ids, &pairs))
    }

    /// `pairs` must be sorted, deduplicated, with `a < b`.
    fn assemble(ids: Vec<String>, pairs: &[(u32, u32)]) -> Graph {
        let n = ids.len();
        let mut degree = vec![0usize; n];
        for &(a, b) in pairs {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut adjacency: Vec<Vec<u32>> = degree.iter().map(|&d| Vec::with_capacity(d)).collect();
        for &(a, b) in pairs {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Graph {
            adjacency,
            ids,
            index,
            edge_count: pairs.len(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbor indices of `v`.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    pub fn id(&self, v: u32) -> &str {
        &self.ids[v as usize]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    /// Every edge once, as `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            let a = a as u32;
            list.iter().copied().filter(move |&b| b > a).map(move |b| (a, b))
        })
    }

    pub fn check_node(&self, v: u32) -> Result<()> {
        if (v as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: v,
                n: self.node_count(),
            })
        }
    }
}

/// Directed follower edges keyed by external id. Repeated records are
/// collapsed on construction; self-loops are kept as records here and dropped
/// by [`mutualize`].
#[derive(Debug, Clone, Default)]
pub struct DirectedEdgeList {
    ids: Vec<String>,
    interner: HashMap<String, u32>,
    edges: Vec<(u32, u32)>,
    records: usize,
}

impl DirectedEdgeList {
    pub fn from_pairs<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut list = DirectedEdgeList::default();
        for (s, t) in pairs {
            list.push(s, t);
        }
        list.finish();
        list
    }

    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.interner.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.to_owned());
        self.interner.insert(id.to_owned(), i);
        i
    }

    fn push(&mut self, source: &str, target: &str) {
        let s = self.intern(source);
        let t = self.intern(target);
        self.edges.push((s, t));
        self.records += 1;
    }

    fn finish(&mut self) {
        self.edges.sort_unstable();
        self.edges.dedup();
    }

    /// Distinct directed edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Records seen on ingest, including repeats.
    pub fn records(&self) -> usize {
        self.records
    }

    pub fn duplicates(&self) -> usize {
        self.records - self.edges.len()
    }

    /// Distinct external ids mentioned by any record.
    pub fn id_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(s, t)| (self.ids[s as usize].as_str(), self.ids[t as usize].as_str()))
    }
}

/// Keeps an undirected edge `{a, b}` iff both `a -> b` and `b -> a` are
/// present. Self-loops and nodes left without a mutual edge are dropped.
pub fn mutualize(directed: &DirectedEdgeList) -> Graph {
    let edges = &directed.edges;
    let mutual = edges.iter().filter(|&&(s, t)| s < t && edges.binary_search(&(t, s)).is_ok());
    let (graph, _) = Graph::from_id_edges(
        mutual.map(|&(s, t)| (directed.ids[s as usize].as_str(), directed.ids[t as usize].as_str())),
    );
    graph
}

/// Result of [`load_edge_list`].
#[derive(Debug)]
pub enum EdgeList {
    Directed(DirectedEdgeList),
    Undirected(Graph, EdgeStats),
}

pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<EdgeList> {
    let path = path.as_ref();
    let records = read_edge_records(path)?;
    let pairs = records.iter().map(|(a, b)| (a.as_str(), b.as_str()));
    Ok(if directed {
        EdgeList::Directed(DirectedEdgeList::from_pairs(pairs))
    } else {
        let (g, stats) = Graph::from_id_edges(pairs);
        EdgeList::Undirected(g, stats)
    })
}

pub fn load_directed(path: impl AsRef<Path>) -> Result<DirectedEdgeList> {
    match load_edge_list(path, true)? {
        EdgeList::Directed(d) => Ok(d),
        EdgeList::Undirected(..) => unreachable!(),
    }
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<(Graph, EdgeStats)> {
    match load_edge_list(path, false)? {
        EdgeList::Undirected(g, s) => Ok((g, s)),
        EdgeList::Directed(_) => unreachable!(),
    }
}

fn read_edge_records(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(path, lineno, "empty node id"));
        }
        records.push((fields[0].to_owned(), fields[1].to_owned()));
    }
    Ok(records)
}

/// Writes every edge once, `a<TAB>b` with `a` before `b` in id order.
pub fn write_edge_list(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (a, b) in graph.edges() {
        writeln!(out, "{}\t{}", graph.id(a), graph.id(b)).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Subgraph on the members of `community` with every edge of `graph` internal
/// to it. External ids are preserved.
pub fn induced_subgraph(graph: &Graph, community: &Community) -> Result<Graph> {
    let members = community.members();
    for &v in members {
        graph.check_node(v)?;
    }
    let ids = members.iter().map(|&v| graph.id(v).to_owned()).collect();
    let mut pairs = Vec::new();
    for (i, &v) in members.iter().enumerate() {
        for &w in graph.neighbors(v) {
            if w > v {
                if let Ok(j) = members.binary_search(&w) {
                    pairs.push((i as u32, j as u32));
                }
            }
        }
    }
    pairs.sort_unstable();
    Ok(Graph::assemble(ids, &pairs))
}

/// A planted-partition graph together with the block of every node.
#[derive(Debug, Clone)]
pub struct PlantedPartition {
    pub graph: Graph,
    pub block_size: usize,
    pub blocks: usize,
}

impl PlantedPartition {
    pub fn block_of(&self, v: u32) -> usize {
        v as usize / self.block_size
    }

    pub fn block_cover(&self) -> Cover {
        let mut cover = Cover::default();
        for b in 0..self.blocks {
            let lo = (b * self.block_size) as u32;
            let hi = lo + self.block_size as u32;
            cover.push(Community::from_sorted((lo..hi).collect()));
        }
        cover
    }
}

/// Samples a planted-partition graph. Block `b` holds nodes
/// `b * block_size .. (b + 1) * block_size`; intra-block pairs are joined with
/// probability `p_in`, all other pairs with `p_out`.
pub fn planted_partition(
    blocks: usize,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<PlantedPartition> {
    if blocks == 0 || block_size == 0 {
        return Err(Error::InvalidParameter(
            "block count and block size must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in={p_in} p_out={p_out}"
        )));
    }
    let n = blocks
        .checked_mul(block_size)
        .filter(|&n| n <= u32::MAX as usize)
        .ok_or_else(|| Error::InvalidParameter("graph too large".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for b in 0..blocks {
        let offset = (b * block_size) as u32;
        sample_pairs(block_size, p_in, &mut rng, |i, j| {
            edges.push((offset + i, offset + j))
        });
    }
    sample_pairs(n, p_out, &mut rng, |i, j| {
        if i as usize / block_size != j as usize / block_size {
            edges.push((i, j));
        }
    });

    Ok(PlantedPartition {
        graph: Graph::from_index_edges(n, &edges)?,
        block_size,
        blocks,
    })
}

/// Calls `emit(i, j)` (`i < j < n`) for each pair independently with
/// probability `p`, skipping geometrically between hits so sparse draws cost
/// O(n + hits).
fn sample_pairs(n: usize, p: f64, rng: &mut ChaCha8Rng, mut emit: impl FnMut(u32, u32)) {
    if p <= 0.0 || n < 2 {
        return;
    }
    if p >= 1.0 {
        for j in 1..n as u32 {
            for i in 0..j {
                emit(i, j);
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    // Walk the lower triangle row by row: row `v`, column `w < v`.
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n {
        let r: f64 = rng.gen();
        w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            emit(w as u32, v as u32);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(g: &Graph) -> Vec<(String, String)> {
        g.edges().map(|(a, b)| (g.id(a).to_owned(), g.id(b).to_owned())).collect()
    }

    fn assert_simple(g: &Graph) {
        for v in 0..g.node_count() as u32 {
            assert!(!g.has_edge(v, v));
            for &w in g.neighbors(v) {
                assert!(g.has_edge(w, v));
            }
        }
        let total: usize = (0..g.node_count() as u32).map(|v| g.degree(v)).sum();
        assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn mutualize_drops_one_way_edges_and_isolated() {
        let d = DirectedEdgeList::from_pairs([("a", "b"), ("b", "a"), ("a", "c")]);
        let g = mutualize(&d);
        assert_eq!(g.node_count(), 2);
        assert_eq!(edge_set(&g), vec![("a".into(), "b".into())]);
        assert!(g.index_of("c").is_none());
        assert_simple(&g);
    }

    #[test]
    fn mutualize_empty() {
        let g = mutualize(&DirectedEdgeList::default());
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
    }

    #[test]
    fn mutualize_drops_self_loops() {
        let d = DirectedEdgeList::from_pairs([("a", "a"), ("a", "b"), ("b", "a")]);
        let g = mutualize(&d);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn directed_list_collapses_repeats() {
        let d = DirectedEdgeList::from_pairs([("a", "b"), ("a", "b"), ("b", "a")]);
        assert_eq!(d.len(), 2);
        assert_eq!(d.records(), 3);
        assert_eq!(d.duplicates(), 1);
    }

    #[test]
    fn index_order_follows_id_order() {
        let (g, stats) = Graph::from_id_edges([("zeta", "alpha"), ("mid", "alpha"), ("alpha", "zeta"), ("x", "x")]);
        assert_eq!(g.ids(), ["alpha", "mid", "zeta"]);
        assert_eq!(stats, EdgeStats { records: 4, self_loops: 1, duplicates: 1 });
        assert_simple(&g);
    }

    #[test]
    fn induced_k3_from_k4() {
        let k4 = Graph::from_index_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let sub = induced_subgraph(&k4, &Community::new(vec![0, 2, 3])).unwrap();
        assert_eq!(sub.node_count(), 3);
        assert_eq!(sub.edge_count(), 3);
        assert_eq!(sub.ids(), ["0", "2", "3"]);

        let single = induced_subgraph(&k4, &Community::new(vec![1])).unwrap();
        assert_eq!((single.node_count(), single.edge_count()), (1, 0));
    }

    #[test]
    fn induced_rejects_bad_member() {
        let g = Graph::from_index_edges(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            induced_subgraph(&g, &Community::new(vec![0, 5])),
            Err(Error::IndexOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn planted_degenerate_probabilities() {
        let p = planted_partition(2, 5, 1.0, 0.0, 3).unwrap();
        assert_eq!(p.graph.node_count(), 10);
        assert_eq!(p.graph.edge_count(), 20);
        for (a, b) in p.graph.edges() {
            assert_eq!(p.block_of(a), p.block_of(b));
        }
        let k4 = planted_partition(1, 4, 1.0, 0.0, 99).unwrap();
        assert_eq!(k4.graph.edge_count(), 6);
    }

    #[test]
    fn planted_is_seeded() {
        let a = planted_partition(2, 50, 0.3, 0.01, 7).unwrap();
        let b = planted_partition(2, 50, 0.3, 0.01, 7).unwrap();
        let c = planted_partition(2, 50, 0.3, 0.01, 8).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_ne!(a.graph, c.graph);
        assert_simple(&a.graph);
    }

    #[test]
    fn planted_rejects_bad_probabilities() {
        assert!(planted_partition(2, 5, 0.1, 0.2, 0).is_err());
        assert!(planted_partition(2, 5, 1.2, 0.2, 0).is_err());
        assert!(planted_partition(0, 5, 0.5, 0.2, 0).is_err());
    }

    #[test]
    fn pair_sampler_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = 0usize;
        let mut bad = false;
        sample_pairs(400, 0.1, &mut rng, |i, j| {
            hits += 1;
            bad |= i >= j || j >= 400;
        });
        assert!(!bad);
        let expected = 0.1 * (400.0 * 399.0 / 2.0);
        assert!((hits as f64 - expected).abs() < 0.05 * expected, "{hits} vs {expected}");
    }
}
