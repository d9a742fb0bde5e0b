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

//! Communities, covers, and the cover file format.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A sorted, duplicate-free set of node indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Community(Vec<u32>);

impl Community {
    pub fn new(mut members: Vec<u32>) -> Self {
        members.sort_unstable();
        members.dedup();
        Community(members)
    }

    /// `members` must already be strictly ascending.
    pub fn from_sorted(members: Vec<u32>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Community(members)
    }

    pub fn members(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn intersection_len(&self, other: &Community) -> usize {
        sorted_intersection_len(&self.0, &other.0)
    }

    pub fn is_subset_of(&self, other: &Community) -> bool {
        self.intersection_len(other) == self.len()
    }

    pub fn into_members(self) -> Vec<u32> {
        self.0
    }
}

pub(crate) fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Canonical community order: larger first, then lexicographic on the sorted
/// members. Because indices follow id order this is also lexicographic on
/// external ids.
pub fn canonical_order(a: &Community, b: &Community) -> Ordering {
    b.len().cmp(&a.len()).then_with(|| a.0.cmp(&b.0))
}

/// An ordered, possibly overlapping, collection of communities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cover {
    communities: Vec<Community>,
}

impl Cover {
    pub fn new(communities: Vec<Community>) -> Self {
        Cover { communities }
    }

    pub fn push(&mut self, c: Community) {
        self.communities.push(c);
    }

    pub fn communities(&self) -> &[Community] {
        &self.communities
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Community> {
        self.communities.iter()
    }

    pub fn into_communities(self) -> Vec<Community> {
        self.communities
    }

    /// Sorts into canonical order and drops repeated member sets.
    pub fn canonicalize(&mut self) {
        self.communities.sort_unstable_by(canonical_order);
        self.communities.dedup();
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// Number of communities containing each node.
    pub fn memberships(&self, n: usize) -> Vec<u32> {
        let mut counts = vec![0u32; n];
        for c in &self.communities {
            for &v in c.members() {
                counts[v as usize] += 1;
            }
        }
        counts
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        for c in &self.communities {
            if let Some(&last) = c.members().last() {
                graph.check_node(last)?;
            }
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Cover {
    type Item = &'a Community;
    type IntoIter = std::slice::Iter<'a, Community>;
    fn into_iter(self) -> Self::IntoIter {
        self.communities.iter()
    }
}

impl FromIterator<Community> for Cover {
    fn from_iter<T: IntoIterator<Item = Community>>(iter: T) -> Self {
        Cover::new(iter.into_iter().collect())
    }
}

/// One community per line, members as space-separated external ids.
pub fn write_cover(graph: &Graph, cover: &Cover, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_cover_to(graph, cover, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_cover_to(graph: &Graph, cover: &Cover, out: &mut impl Write) -> std::io::Result<()> {
    for c in cover {
        let mut first = true;
        for &v in c.members() {
            if !first {
                out.write_all(b" ")?;
            }
            out.write_all(graph.id(v).as_bytes())?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a cover file against `graph`. File order is preserved; blank and
/// `#` lines are skipped. Every id must name a node of `graph`.
pub fn read_cover(graph: &Graph, path: impl AsRef<Path>) -> Result<Cover> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cover = Cover::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut members = Vec::new();
        for id in line.split_whitespace() {
            match graph.index_of(id) {
                Some(v) => members.push(v),
                None => {
                    return Err(Error::parse(path, i + 1, format!("unknown node id {id:?}")));
                }
            }
        }
        cover.push(Community::new(members));
    }
    Ok(cover)
}
