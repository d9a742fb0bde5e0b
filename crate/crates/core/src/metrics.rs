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

//! Size-aware evaluation of a cover: size histogram, desirable-community
//! coverage, extended modularity with a per-band breakdown, and triangle
//! participation ratio.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::community::{Community, Cover};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DESIRABLE_MIN: usize = 4;
pub const DESIRABLE_MAX: usize = 150;

/// Inclusive size range; `hi == None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl Band {
    pub fn contains(&self, size: usize) -> bool {
        size >= self.lo && self.hi.map_or(true, |hi| size <= hi)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(hi) => write!(f, "{}-{}", self.lo, hi),
            None => write!(f, "{}+", self.lo),
        }
    }
}

impl Serialize for Band {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Contiguous bands starting at 1 with an unbounded last band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeBands(Vec<Band>);

impl Default for SizeBands {
    fn default() -> Self {
        SizeBands(vec![
            Band { lo: 1, hi: Some(3) },
            Band { lo: 4, hi: Some(9) },
            Band { lo: 10, hi: Some(150) },
            Band { lo: 151, hi: None },
        ])
    }
}

impl SizeBands {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("size bands: {msg}")));
        let Some(first) = bands.first() else {
            return bad("no bands".into());
        };
        if first.lo != 1 {
            return bad(format!("first band must start at 1, not {}", first.lo));
        }
        for (i, b) in bands.iter().enumerate() {
            let last = i + 1 == bands.len();
            match (b.hi, last) {
                (None, false) => return bad(format!("band {b} is unbounded but not last")),
                (Some(_), true) => return bad(format!("last band {b} must be unbounded")),
                (Some(hi), false) => {
                    if hi < b.lo {
                        return bad(format!("band {b} is empty"));
                    }
                    if bands[i + 1].lo != hi + 1 {
                        return bad(format!("gap or overlap after band {b}"));
                    }
                }
                (None, true) => {}
            }
        }
        Ok(SizeBands(bands))
    }

    pub fn bands(&self) -> &[Band] {
        &self.0
    }

    pub fn index_of(&self, size: usize) -> usize {
        self.0
            .iter()
            .position(|b| b.contains(size))
            .expect("bands cover every size >= 1")
    }
}

impl FromStr for SizeBands {
    type Err = Error;

    /// Parses `1-3,4-9,10-150,151+` (a trailing `-` also means unbounded).
    fn from_str(s: &str) -> Result<Self> {
        let bad = |part: &str| Error::InvalidParameter(format!("cannot parse size band {part:?}"));
        let mut bands = Vec::new();
        for part in s.split(',').map(str::trim) {
            let (lo, hi) = if let Some(lo) = part.strip_suffix('+').or_else(|| part.strip_suffix('-')) {
                (lo, None)
            } else {
                let (lo, hi) = part.split_once('-').ok_or_else(|| bad(part))?;
                (lo, Some(hi.parse::<usize>().map_err(|_| bad(part))?))
            };
            let lo = lo.parse::<usize>().map_err(|_| bad(part))?;
            bands.push(Band { lo, hi });
        }
        SizeBands::new(bands)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bands: Vec<Band>,
    pub counts: Vec<usize>,
    /// Share of all communities per band, in percent.
    pub percentages: Vec<f64>,
}

pub fn size_histogram(cover: &Cover, bands: &SizeBands) -> Histogram {
    let mut counts = vec![0usize; bands.bands().len()];
    for c in cover {
        counts[bands.index_of(c.len())] += 1;
    }
    let total = cover.len();
    let percentages = counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
        .collect();
    Histogram {
        bands: bands.bands().to_vec(),
        counts,
        percentages,
    }
}

/// Fraction of all nodes that sit in at least one community whose size is in
/// `[lo, hi]`.
pub fn desirable_coverage(graph: &Graph, cover: &Cover, lo: usize, hi: usize) -> Result<f64> {
    if lo > hi {
        return Err(Error::InvalidParameter(format!("coverage range [{lo}, {hi}] is empty")));
    }
    cover.validate(graph)?;
    let n = graph.node_count();
    if n == 0 {
        return Ok(0.0);
    }
    let mut covered = vec![false; n];
    for c in cover.iter().filter(|c| (lo..=hi).contains(&c.len())) {
        for &v in c.members() {
            covered[v as usize] = true;
        }
    }
    Ok(covered.iter().filter(|&&x| x).count() as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedModularity {
    pub total: f64,
    /// One term per community, in cover order; they sum to `total`.
    pub per_community: Vec<f64>,
}

/// Overlap-aware modularity: every ordered member pair `(v, w)` of each
/// community adds `(A_vw - k_v k_w / 2m) / (O_v O_w)`, where `O_v` is the
/// number of communities holding `v`; the sum is scaled by `1 / 2m`. Degrees
/// and `m` are taken from the whole graph.
pub fn extended_modularity(graph: &Graph, cover: &Cover) -> Result<ExtendedModularity> {
    cover.validate(graph)?;
    let two_m = 2.0 * graph.edge_count() as f64;
    if two_m == 0.0 {
        return Err(Error::EmptyGraph);
    }
    let memberships = cover.memberships(graph.node_count());
    let per_community: Vec<f64> = cover
        .communities()
        .par_iter()
        .map(|c| community_modularity(graph, c, &memberships, two_m))
        .collect();
    let total = per_community.iter().sum();
    Ok(ExtendedModularity { total, per_community })
}

fn community_modularity(graph: &Graph, c: &Community, memberships: &[u32], two_m: f64) -> f64 {
    let members = c.members();
    let mut internal = 0.0;
    let mut weighted_degree = 0.0;
    for &v in members {
        let ov = memberships[v as usize] as f64;
        weighted_degree += graph.degree(v) as f64 / ov;
        for &w in graph.neighbors(v) {
            if members.binary_search(&w).is_ok() {
                internal += 1.0 / (ov * memberships[w as usize] as f64);
            }
        }
    }
    (internal - weighted_degree * weighted_degree / two_m) / two_m
}

/// Fraction of `c`'s members that lie on a triangle inside `c`.
pub fn triangle_participation_ratio(graph: &Graph, c: &Community) -> f64 {
    let members = c.members();
    if members.is_empty() {
        return 0.0;
    }
    let inside: Vec<Vec<u32>> = members
        .iter()
        .map(|&v| {
            graph
                .neighbors(v)
                .iter()
                .copied()
                .filter(|w| members.binary_search(w).is_ok())
                .collect()
        })
        .collect();
    let local = |v: u32| members.binary_search(&v).expect("member");
    let in_triangle = inside
        .iter()
        .filter(|nbrs| {
            nbrs.iter().any(|&a| {
                crate::community::sorted_intersection_len(nbrs, &inside[local(a)]) > 0
            })
        })
        .count();
    in_triangle as f64 / members.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSummary {
    pub band: Band,
    pub count: usize,
    pub percentage: f64,
    pub eq_contribution: f64,
    /// Mean TPR over the band's communities; `None` when the band is empty.
    pub tpr_mean: Option<f64>,
    /// Member-weighted TPR over the band.
    pub tpr_micro: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunitySummary {
    pub size: usize,
    pub tpr: f64,
    pub eq_contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub community_count: usize,
    pub largest_community_size: usize,
    pub coverage: f64,
    pub eq_total: f64,
    pub bands: Vec<BandSummary>,
    pub per_community: Vec<CommunitySummary>,
}

impl MetricsReport {
    pub fn histogram(&self) -> Vec<usize> {
        self.bands.iter().map(|b| b.count).collect()
    }

    pub fn eq_by_band(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.eq_contribution).collect()
    }

    pub fn mean_tpr(&self) -> Option<f64> {
        if self.per_community.is_empty() {
            return None;
        }
        Some(self.per_community.iter().map(|c| c.tpr).sum::<f64>() / self.per_community.len() as f64)
    }
}

pub fn evaluate(graph: &Graph, cover: &Cover, bands: &SizeBands) -> Result<MetricsReport> {
    let coverage = desirable_coverage(graph, cover, DESIRABLE_MIN, DESIRABLE_MAX)?;
    let eq = extended_modularity(graph, cover)?;
    let tprs: Vec<f64> = cover
        .communities()
        .par_iter()
        .map(|c| triangle_participation_ratio(graph, c))
        .collect();
    let histogram = size_histogram(cover, bands);

    let mut summaries: Vec<BandSummary> = histogram
        .bands
        .iter()
        .zip(&histogram.counts)
        .zip(&histogram.percentages)
        .map(|((&band, &count), &percentage)| BandSummary {
            band,
            count,
            percentage,
            eq_contribution: 0.0,
            tpr_mean: None,
            tpr_micro: None,
        })
        .collect();
    let mut tpr_sum = vec![0.0; summaries.len()];
    let mut hit_sum = vec![0.0; summaries.len()];
    let mut member_sum = vec![0usize; summaries.len()];
    let mut per_community = Vec::with_capacity(cover.len());
    for ((c, &tpr), &contribution) in cover.iter().zip(&tprs).zip(&eq.per_community) {
        let b = bands.index_of(c.len());
        summaries[b].eq_contribution += contribution;
        tpr_sum[b] += tpr;
        hit_sum[b] += tpr * c.len() as f64;
        member_sum[b] += c.len();
        per_community.push(CommunitySummary {
            size: c.len(),
            tpr,
            eq_contribution: contribution,
        });
    }
    for (b, s) in summaries.iter_mut().enumerate() {
        if s.count > 0 {
            s.tpr_mean = Some(tpr_sum[b] / s.count as f64);
            s.tpr_micro = Some(hit_sum[b] / member_sum[b] as f64);
        }
    }

    Ok(MetricsReport {
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        community_count: cover.len(),
        largest_community_size: cover.iter().map(Community::len).max().unwrap_or(0),
        coverage,
        eq_total: eq.total,
        bands: summaries,
        per_community,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn community(range: std::ops::Range<u32>) -> Community {
        Community::new(range.collect())
    }

    fn sized(sizes: &[u32]) -> Cover {
        let mut start = 0;
        sizes
            .iter()
            .map(|&s| {
                let c = community(start..start + s);
                start += s;
                c
            })
            .collect()
    }

    #[test]
    fn band_parsing() {
        let bands: SizeBands = "1-3,4-9,10-150,151+".parse().unwrap();
        assert_eq!(bands, SizeBands::default());
        assert_eq!("1-3,4-".parse::<SizeBands>().unwrap().bands().len(), 2);
        assert!("2-3,4+".parse::<SizeBands>().is_err());
        assert!("1-3,5+".parse::<SizeBands>().is_err());
        assert!("1-3,4-9".parse::<SizeBands>().is_err());
        assert!("1-x,4+".parse::<SizeBands>().is_err());
        assert_eq!(SizeBands::default().bands()[3].to_string(), "151+");
    }

    #[test]
    fn histogram_counts() {
        let h = size_histogram(&sized(&[2, 5, 12, 200]), &SizeBands::default());
        assert_eq!(h.counts, vec![1, 1, 1, 1]);
        assert_eq!(h.percentages, vec![25.0; 4]);
        let empty = size_histogram(&Cover::default(), &SizeBands::default());
        assert_eq!(empty.counts, vec![0; 4]);
        assert_eq!(empty.percentages, vec![0.0; 4]);
    }

    #[test]
    fn histogram_matches_rebinning() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sizes: Vec<u32> = (0..100).map(|_| rng.gen_range(1..300)).collect();
        let h = size_histogram(&sized(&sizes), &SizeBands::default());
        let mut expected = [0usize; 4];
        for &s in &sizes {
            let b = if s <= 3 { 0 } else if s <= 9 { 1 } else if s <= 150 { 2 } else { 3 };
            expected[b] += 1;
        }
        assert_eq!(h.counts, expected);
    }

    #[test]
    fn coverage_examples() {
        let g = Graph::from_index_edges(100, &[]).unwrap();
        let half = Cover::new(vec![community(0..50)]);
        assert_eq!(desirable_coverage(&g, &half, 4, 150).unwrap(), 0.5);
        let singletons: Cover = (0..100).map(|v| community(v..v + 1)).collect();
        assert_eq!(desirable_coverage(&g, &singletons, 4, 150).unwrap(), 0.0);
        let overlapping = Cover::new(vec![community(0..10), community(5..25)]);
        assert_eq!(desirable_coverage(&g, &overlapping, 4, 150).unwrap(), 0.25);
        assert!(desirable_coverage(&g, &half, 10, 4).is_err());
    }

    #[test]
    fn modularity_identities() {
        let g = fixtures::two_k5();
        let halves = Cover::new(vec![community(0..5), community(5..10)]);
        assert!((extended_modularity(&g, &halves).unwrap().total - 0.5).abs() < 1e-12);
        let whole = Cover::new(vec![community(0..10)]);
        assert!(extended_modularity(&g, &whole).unwrap().total.abs() < 1e-12);
        let empty = Graph::from_index_edges(3, &[]).unwrap();
        let all3 = Cover::new(vec![community(0..3)]);
        assert!(matches!(extended_modularity(&empty, &all3), Err(Error::EmptyGraph)));
    }

    #[test]
    fn duplicated_community_changes_modularity() {
        let g = fixtures::two_k5();
        let halves = Cover::new(vec![community(0..5), community(5..10)]);
        let with_dup = Cover::new(vec![community(0..5), community(0..5), community(5..10)]);
        let base = extended_modularity(&g, &halves).unwrap();
        assert!(base.per_community[0] > 0.0);
        let dup = extended_modularity(&g, &with_dup).unwrap();
        assert!((dup.total - base.total).abs() > 1e-6);
    }

    #[test]
    fn tpr_examples() {
        let g = fixtures::triangle_with_pendant();
        assert_eq!(triangle_participation_ratio(&g, &community(0..3)), 1.0);
        assert_eq!(triangle_participation_ratio(&g, &community(0..4)), 0.75);
        assert_eq!(triangle_participation_ratio(&fixtures::path(4), &community(0..4)), 0.0);
        assert_eq!(triangle_participation_ratio(&fixtures::complete(7), &community(0..7)), 1.0);
    }

    #[test]
    fn evaluate_two_k5() {
        let g = fixtures::two_k5();
        let halves = Cover::new(vec![community(0..5), community(5..10)]);
        let r = evaluate(&g, &halves, &SizeBands::default()).unwrap();
        assert_eq!(r.community_count, 2);
        assert_eq!(r.largest_community_size, 5);
        assert_eq!(r.coverage, 1.0);
        assert!((r.eq_total - 0.5).abs() < 1e-12);
        assert!(r.per_community.iter().all(|c| c.tpr == 1.0));
        assert_eq!(r.histogram(), vec![0, 2, 0, 0]);
        assert_eq!(r.bands[1].tpr_mean, Some(1.0));
        assert_eq!(r.bands[0].tpr_mean, None);
    }

    #[test]
    fn evaluate_empty_cover() {
        let r = evaluate(&fixtures::two_k5(), &Cover::default(), &SizeBands::default()).unwrap();
        assert_eq!((r.community_count, r.largest_community_size), (0, 0));
        assert_eq!((r.coverage, r.eq_total), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn disjoint_cover_matches_classical(seed in 0u64..2000, n in 2usize..31, parts in 1usize..6) {
            let g = fixtures::gnp(n, 0.3, seed);
            prop_assume!(g.edge_count() > 0);
            let partition = fixtures::random_partition(n, parts, seed + 1);
            let cover: Cover = partition.iter().map(|p| Community::new(p.clone())).collect();
            let eq = extended_modularity(&g, &cover).unwrap().total;
            let oracle = fixtures::oracle_modularity(&g, &partition).unwrap();
            prop_assert!((eq - oracle).abs() <= 1e-12, "{} vs {}", eq, oracle);
        }

        #[test]
        fn report_invariants(seed in 0u64..500, shuffle in 0u64..100) {
            let g = fixtures::gnp(40, 0.2, seed);
            prop_assume!(g.edge_count() > 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let communities: Vec<Community> = (0..8)
                .map(|_| {
                    let size = rng.gen_range(1..20);
                    Community::new((0..size).map(|_| rng.gen_range(0..40)).collect())
                })
                .collect();
            let cover = Cover::new(communities.clone());
            let r = evaluate(&g, &cover, &SizeBands::default()).unwrap();
            prop_assert_eq!(r.histogram().iter().sum::<usize>(), r.community_count);
            prop_assert!((r.eq_by_band().iter().sum::<f64>() - r.eq_total).abs() < 1e-12);
            prop_assert!(r.per_community.iter().all(|c| (0.0..=1.0).contains(&c.tpr)));
            prop_assert!((0.0..=1.0).contains(&r.coverage));

            let mut reordered = communities;
            let k = shuffle as usize % reordered.len();
            reordered.rotate_left(k);
            reordered.reverse();
            let eq2 = extended_modularity(&g, &Cover::new(reordered)).unwrap().total;
            prop_assert!((eq2 - r.eq_total).abs() < 1e-12);

            let narrow = desirable_coverage(&g, &cover, 5, 10).unwrap();
            let wide = desirable_coverage(&g, &cover, 3, 15).unwrap();
            prop_assert!(wide >= narrow);
        }
    }
}
