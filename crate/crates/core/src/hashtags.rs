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

//! Per-user hashtag counts and automated community theme scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::community::{Community, Cover};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Strips leading `#`s and, unless `preserve_case`, lowercases.
pub fn normalize_tag(tag: &str, preserve_case: bool) -> String {
    let bare = tag.trim_start_matches('#');
    if preserve_case {
        bare.to_owned()
    } else {
        bare.to_lowercase()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HashtagTable {
    users: BTreeMap<String, BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagCount {
    pub tag: String,
    pub count: u64,
}

impl HashtagTable {
    /// Adds `count` uses of `tag` by `user`. Zero counts are not stored.
    pub fn add(&mut self, user: &str, tag: &str, count: u64, preserve_case: bool) {
        if count == 0 {
            return;
        }
        *self
            .users
            .entry(user.to_owned())
            .or_default()
            .entry(normalize_tag(tag, preserve_case))
            .or_insert(0) += count;
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn tags_of(&self, user: &str) -> Option<&BTreeMap<String, u64>> {
        self.users.get(user)
    }
}

/// Reads `user<TAB>hashtag<TAB>count` records; `//` lines are comments.
pub fn load_hashtags(path: impl AsRef<Path>, preserve_case: bool) -> Result<HashtagTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = HashtagTable::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with("//") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [user, tag, count] = fields[..] else {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        if user.is_empty() || normalize_tag(tag, true).is_empty() {
            return Err(Error::parse(path, lineno, "empty user or hashtag"));
        }
        let count: i64 = count
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad count {count:?}")))?;
        if count < 0 {
            return Err(Error::parse(path, lineno, format!("negative count {count}")));
        }
        table.add(user, tag, count as u64, preserve_case);
    }
    Ok(table)
}

fn ranked<'a>(counts: impl IntoIterator<Item = (&'a String, &'a u64)>, k: usize) -> Vec<TagCount> {
    let mut all: Vec<(&String, u64)> = counts.into_iter().map(|(t, &c)| (t, c)).collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    all.into_iter()
        .take(k)
        .map(|(tag, count)| TagCount {
            tag: tag.clone(),
            count,
        })
        .collect()
}

/// The user's `k` most used tags, ties broken lexicographically.
pub fn user_top_k(table: &HashtagTable, user: &str, k: usize) -> Vec<TagCount> {
    table.tags_of(user).map_or_else(Vec::new, |tags| ranked(tags, k))
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThemeEntry {
    pub size: usize,
    pub members_with_data: usize,
    pub members_missing: usize,
    /// Community-wide tag totals, top `K`.
    pub top_tags: Vec<TagCount>,
    /// Mean Jaccard similarity of members' top-k sets over all pairs of members
    /// with data. `None` with fewer than two such members.
    pub mean_pairwise_jaccard: Option<f64>,
    pub pairs: usize,
    /// Share of members with data whose top-k holds the community's #1 tag.
    pub top_tag_penetration: Option<f64>,
}

pub fn community_theme(
    graph: &Graph,
    community: &Community,
    table: &HashtagTable,
    user_k: usize,
    community_k: usize,
) -> ThemeEntry {
    let mut aggregate: BTreeMap<String, u64> = BTreeMap::new();
    let mut top_sets: Vec<BTreeSet<String>> = Vec::new();
    for &v in community.members() {
        let Some(tags) = table.tags_of(graph.id(v)) else {
            continue;
        };
        for (tag, &count) in tags {
            *aggregate.entry(tag.clone()).or_insert(0) += count;
        }
        top_sets.push(ranked(tags, user_k).into_iter().map(|t| t.tag).collect());
    }
    let top_tags = ranked(&aggregate, community_k);

    let mut pairs = 0;
    let mut total = 0.0;
    for (i, a) in top_sets.iter().enumerate() {
        for b in &top_sets[i + 1..] {
            total += jaccard(a, b);
            pairs += 1;
        }
    }
    let penetration = top_tags.first().filter(|_| !top_sets.is_empty()).map(|leader| {
        top_sets.iter().filter(|s| s.contains(&leader.tag)).count() as f64 / top_sets.len() as f64
    });

    ThemeEntry {
        size: community.len(),
        members_with_data: top_sets.len(),
        members_missing: community.len() - top_sets.len(),
        top_tags,
        mean_pairwise_jaccard: (pairs > 0).then(|| total / pairs as f64),
        pairs,
        top_tag_penetration: penetration,
    }
}

/// Up to `count` communities with size in `[size_lo, size_hi]`, drawn
/// uniformly without replacement and returned in their original order. When
/// fewer qualify, all of them are returned.
pub fn sample_communities(cover: &Cover, size_lo: usize, size_hi: usize, count: usize, seed: u64) -> Cover {
    let qualifying: Vec<&Community> = cover
        .iter()
        .filter(|c| (size_lo..=size_hi).contains(&c.len()))
        .collect();
    if qualifying.len() <= count {
        return qualifying.into_iter().cloned().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, qualifying.len(), count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| qualifying[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThemeReport {
    pub user_k: usize,
    pub community_k: usize,
    pub communities: Vec<ThemedCommunity>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThemedCommunity {
    pub members: Vec<String>,
    #[serde(flatten)]
    pub theme: ThemeEntry,
}

pub fn theme_report(
    graph: &Graph,
    cover: &Cover,
    table: &HashtagTable,
    user_k: usize,
    community_k: usize,
) -> ThemeReport {
    let communities = cover
        .communities()
        .par_iter()
        .map(|c| ThemedCommunity {
            members: c.members().iter().map(|&v| graph.id(v).to_owned()).collect(),
            theme: community_theme(graph, c, table, user_k, community_k),
        })
        .collect();
    ThemeReport {
        user_k,
        community_k,
        communities,
    }
}

fn tag_list(tags: &[TagCount]) -> String {
    tags.iter()
        .map(|t| format!("#{} {}", t.tag, t.count))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Plain-text digest: per community, the top community tags, the scores, and
/// the top-k lists of the first `users_shown` members with data.
pub fn render_digest(report: &ThemeReport, table: &HashtagTable, users_shown: usize) -> String {
    let mut out = String::new();
    for (i, c) in report.communities.iter().enumerate() {
        let t = &c.theme;
        let _ = writeln!(
            out,
            "community {} (size {}, {} with hashtags, {} missing)",
            i + 1,
            t.size,
            t.members_with_data,
            t.members_missing
        );
        let _ = writeln!(out, "  top {} community tags: {}", report.community_k, tag_list(&t.top_tags));
        match t.mean_pairwise_jaccard {
            Some(j) => {
                let _ = writeln!(out, "  mean pairwise top-{} jaccard: {j:.4} over {} pairs", report.user_k, t.pairs);
            }
            None => {
                let _ = writeln!(out, "  mean pairwise top-{} jaccard: n/a", report.user_k);
            }
        }
        if let Some(p) = t.top_tag_penetration {
            let _ = writeln!(out, "  leading tag penetration: {p:.4}");
        }
        for user in c.members.iter().filter(|u| table.tags_of(u).is_some()).take(users_shown) {
            let _ = writeln!(out, "  {user}: {}", tag_list(&user_top_k(table, user, report.user_k)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: &[(&str, &str, u64)]) -> HashtagTable {
        let mut t = HashtagTable::default();
        for &(u, tag, c) in rows {
            t.add(u, tag, c, false);
        }
        t
    }

    fn tags(list: &[TagCount]) -> Vec<&str> {
        list.iter().map(|t| t.tag.as_str()).collect()
    }

    #[test]
    fn load_normalizes_and_sums() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tags.tsv");
        std::fs::write(&path, "// comment\nu1\t#Pray\t51\nu1\t#pray\t4\nu2\t#x\t0\n\n").unwrap();
        let t = load_hashtags(&path, false).unwrap();
        assert_eq!(t.tags_of("u1").unwrap().get("pray"), Some(&55));
        assert!(t.tags_of("u2").is_none());

        let kept = load_hashtags(&path, true).unwrap();
        assert_eq!(kept.tags_of("u1").unwrap().len(), 2);

        std::fs::write(&path, "").unwrap();
        assert!(load_hashtags(&path, false).unwrap().is_empty());
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tags.tsv");
        for bad in ["u1\t#a\t-3\n", "u1\t#a\n", "u1\t#a\tmany\n", "u1\t#\t3\n"] {
            std::fs::write(&path, bad).unwrap();
            assert!(matches!(load_hashtags(&path, false), Err(Error::Parse { line: 1, .. })), "{bad:?}");
        }
        assert!(matches!(load_hashtags(dir.path().join("missing"), false), Err(Error::Io { .. })));
    }

    #[test]
    fn top_k_ties_are_lexicographic() {
        let t = table(&[("u", "b", 5), ("u", "a", 5), ("u", "c", 1)]);
        assert_eq!(tags(&user_top_k(&t, "u", 2)), vec!["a", "b"]);
        assert_eq!(tags(&user_top_k(&t, "u", 10)), vec!["a", "b", "c"]);
        assert!(user_top_k(&t, "nobody", 10).is_empty());
    }

    #[test]
    fn jaccard_fixture() {
        let g = crate::fixtures::complete(4);
        let t = table(&[
            ("0", "a", 3), ("0", "b", 2), ("0", "c", 1),
            ("1", "a", 3), ("1", "b", 2), ("1", "d", 1),
            ("2", "a", 3), ("2", "e", 2), ("2", "f", 1),
        ]);
        let theme = community_theme(&g, &Community::new(vec![0, 1, 2, 3]), &t, 3, 20);
        assert!((theme.mean_pairwise_jaccard.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(theme.pairs, 3);
        assert_eq!((theme.members_with_data, theme.members_missing), (3, 1));
        assert_eq!(theme.top_tags[0], TagCount { tag: "a".into(), count: 9 });
        assert_eq!(theme.top_tag_penetration, Some(1.0));
    }

    #[test]
    fn identical_and_disjoint_members() {
        let g = crate::fixtures::complete(2);
        let same = table(&[("0", "x", 1), ("0", "y", 2), ("1", "x", 5), ("1", "y", 1)]);
        let theme = community_theme(&g, &Community::new(vec![0, 1]), &same, 10, 20);
        assert_eq!(theme.mean_pairwise_jaccard, Some(1.0));
        assert_eq!(theme.top_tag_penetration, Some(1.0));
        let apart = table(&[("0", "x", 1), ("1", "y", 1)]);
        let theme = community_theme(&g, &Community::new(vec![0, 1]), &apart, 10, 20);
        assert_eq!(theme.mean_pairwise_jaccard, Some(0.0));
        assert_eq!(theme.top_tag_penetration, Some(0.5));
    }

    #[test]
    fn sampling() {
        let cover: Cover = (0..100u32).map(|i| Community::new((i * 20..i * 20 + 12).collect())).collect();
        let a = sample_communities(&cover, 10, 150, 50, 4);
        assert_eq!(a.len(), 50);
        assert_eq!(a, sample_communities(&cover, 10, 150, 50, 4));
        let few: Cover = cover.iter().take(10).cloned().collect();
        assert_eq!(sample_communities(&few, 10, 150, 50, 4), few);
        assert!(sample_communities(&cover, 200, 300, 50, 4).is_empty());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(tag in "#{0,3}[A-Za-zÄÖÜß0-9_]{0,12}", keep in any::<bool>()) {
            let once = normalize_tag(&tag, keep);
            prop_assert_eq!(normalize_tag(&once, keep), once);
        }

        #[test]
        fn jaccard_is_symmetric(a in proptest::collection::btree_set(0u8..20, 0..10), b in proptest::collection::btree_set(0u8..20, 0..10)) {
            let j = jaccard(&a, &b);
            prop_assert_eq!(j, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&j));
            if !a.is_empty() {
                prop_assert_eq!(jaccard(&a, &a), 1.0);
            }
        }

        #[test]
        fn aggregate_is_member_sum(rows in proptest::collection::vec((0u32..6, 0u8..5, 1u64..50), 0..40)) {
            let g = crate::fixtures::complete(6);
            let mut t = HashtagTable::default();
            for &(u, tag, c) in &rows {
                t.add(&u.to_string(), &format!("t{tag}"), c, false);
            }
            let theme = community_theme(&g, &Community::new((0..6).collect()), &t, 10, 100);
            for tc in &theme.top_tags {
                let expected: u64 = rows.iter().filter(|r| format!("t{}", r.1) == tc.tag).map(|r| r.2).sum();
                prop_assert_eq!(tc.count, expected);
            }
        }
    }
}
