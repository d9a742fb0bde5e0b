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

//! Overlapping community detection by clique augmentation, two reference
//! detectors, and a size-aware evaluation suite.
//!
//! Every detector returns a [`Cover`] over a [`Graph`]; every metric takes one.

pub mod baselines;
pub mod caa;
pub mod clique;
pub mod community;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod hashtags;
pub mod metrics;
pub mod sweep;
pub mod threshold;

pub use community::{Community, Cover};
pub use error::{Error, Result};
pub use graph::Graph;
