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

//! Threshold sweeps over a fixed graph. Cliques are enumerated once per sweep.

use serde::Serialize;

use crate::caa::grow_seeds;
use crate::clique::{enumerate_maximal_cliques_capped, filter_with};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::{size_histogram, Histogram, SizeBands};
use crate::threshold::Threshold;

pub const OVERLAP_SWEEP_MIN_CLIQUE: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowingPoint {
    pub growing_threshold: f64,
    pub seeds: usize,
    pub mean_seed_size: f64,
    pub communities: usize,
    pub mean_size: f64,
    pub histogram: Histogram,
}

/// Non-overlapping seeds (overlap threshold 0) grown at every threshold of
/// `grid`.
pub fn growing_sweep(
    graph: &Graph,
    grid: &[f64],
    min_clique_size: usize,
    bands: &SizeBands,
    clique_cap: usize,
) -> Result<Vec<GrowingPoint>> {
    let cliques = enumerate_maximal_cliques_capped(graph, min_clique_size, clique_cap)?;
    let seeds = filter_with(&cliques, Threshold::new(0.0)?);
    let mean_seed_size = mean(seeds.cliques().iter().map(|c| c.len()));
    grid.iter()
        .map(|&t| {
            let threshold = Threshold::new(t)?;
            if threshold.is_zero() {
                return Err(Error::InvalidParameter("growing threshold must be in (0, 1]".into()));
            }
            let (cover, _) = grow_seeds(graph, &seeds, threshold, None)?;
            Ok(GrowingPoint {
                growing_threshold: t,
                seeds: seeds.len(),
                mean_seed_size,
                communities: cover.len(),
                mean_size: mean(cover.iter().map(|c| c.len())),
                histogram: size_histogram(&cover, bands),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapPoint {
    pub overlapping_threshold: f64,
    pub min_clique_size: usize,
    pub cliques: usize,
    pub kept: usize,
}

/// Kept-clique counts for every overlap threshold of `grid`.
pub fn overlapping_sweep(
    graph: &Graph,
    grid: &[f64],
    min_clique_size: usize,
    clique_cap: usize,
) -> Result<Vec<OverlapPoint>> {
    let cliques = enumerate_maximal_cliques_capped(graph, min_clique_size, clique_cap)?;
    grid.iter()
        .map(|&t| {
            let kept = filter_with(&cliques, Threshold::new(t)?);
            Ok(OverlapPoint {
                overlapping_threshold: t,
                min_clique_size,
                cliques: cliques.len(),
                kept: kept.len(),
            })
        })
        .collect()
}

fn mean(sizes: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = sizes.fold((0usize, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}
