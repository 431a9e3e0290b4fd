//! Pairwise opinion distances and the ε-neighborhood index built from them.
//!
//! Distances live in `[0, 1]` and all ε comparisons use a raw `<=` on the
//! stored `f64` — intentionally tolerance-free so results reproduce
//! bit-for-bit across runs and platforms.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ApprovalMatrix, Selection};

/// Default ε used by the diversity-aware selector.
pub const DEFAULT_SELECTION_EPSILON: f64 = 0.8;

/// Column distance function; Hamming is the canonical choice, Jaccard an
/// optional alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMetric {
    Hamming,
    Jaccard,
}

fn check_pair(m: &ApprovalMatrix, i: usize, j: usize) -> Result<()> {
    for idx in [i, j] {
        if idx >= m.n_opinions() {
            return Err(Error::OpinionOutOfRange {
                index: idx,
                m: m.n_opinions(),
            });
        }
    }
    Ok(())
}

/// Normalized Hamming distance between opinion columns `i` and `j`: the
/// fraction of users whose approval of the two opinions differs.
pub fn hamming(m: &ApprovalMatrix, i: usize, j: usize) -> Result<f64> {
    check_pair(m, i, j)?;
    let diff = (0..m.n_users())
        .filter(|&u| m.approves(u, i) != m.approves(u, j))
        .count();
    Ok(diff as f64 / m.n_users() as f64)
}

/// Jaccard distance between the approver sets of opinions `i` and `j`.
/// Two columns nobody approves have an empty union and count as identical
/// (distance 0).
pub fn jaccard(m: &ApprovalMatrix, i: usize, j: usize) -> Result<f64> {
    check_pair(m, i, j)?;
    let mut inter = 0usize;
    let mut union = 0usize;
    for u in 0..m.n_users() {
        let a = m.approves(u, i);
        let b = m.approves(u, j);
        if a && b {
            inter += 1;
        }
        if a || b {
            union += 1;
        }
    }
    if union == 0 {
        Ok(0.0)
    } else {
        Ok(1.0 - inter as f64 / union as f64)
    }
}

/// Precomputed pairwise distances plus the ε-neighbor lists derived from
/// them. Neighbors of `i` are the `j != i` with `d(i, j) <= ε`, sorted
/// ascending.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    n_opinions: usize,
    epsilon: f64,
    metric: DistanceMetric,
    dist: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl DistanceIndex {
    /// Builds the Hamming index; see [`DistanceIndex::build_with_metric`].
    pub fn build(matrix: &ApprovalMatrix, epsilon: f64) -> Self {
        Self::build_with_metric(matrix, epsilon, DistanceMetric::Hamming)
    }

    /// Computes all pairwise distances (parallelized over rows; output is
    /// deterministic) and thresholds them at `epsilon`.
    pub fn build_with_metric(
        matrix: &ApprovalMatrix,
        epsilon: f64,
        metric: DistanceMetric,
    ) -> Self {
        let m = matrix.n_opinions();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (0..m)
                    .map(|j| match metric {
                        DistanceMetric::Hamming => hamming(matrix, i, j).expect("index in range"),
                        DistanceMetric::Jaccard => jaccard(matrix, i, j).expect("index in range"),
                    })
                    .collect()
            })
            .collect();
        let dist: Vec<f64> = rows.into_iter().flatten().collect();
        let mut index = DistanceIndex {
            n_opinions: m,
            epsilon,
            metric,
            dist,
            neighbors: Vec::new(),
        };
        index.neighbors = index.threshold();
        index
    }

    /// Same distances, different threshold — cheap compared to a rebuild.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut index = DistanceIndex {
            n_opinions: self.n_opinions,
            epsilon,
            metric: self.metric,
            dist: self.dist.clone(),
            neighbors: Vec::new(),
        };
        index.neighbors = index.threshold();
        index
    }

    fn threshold(&self) -> Vec<Vec<usize>> {
        (0..self.n_opinions)
            .map(|i| {
                (0..self.n_opinions)
                    .filter(|&j| j != i && self.distance(i, j) <= self.epsilon)
                    .collect()
            })
            .collect()
    }

    pub fn n_opinions(&self) -> usize {
        self.n_opinions
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n_opinions + j]
    }

    /// ε-neighbors of `i` (excluding `i` itself), ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn neighbor_count(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        i != j && self.distance(i, j) <= self.epsilon
    }

    /// Connected components of the ε-graph restricted to `slate`, i.e. groups
    /// of near-duplicates. Chains count: transitively connected opinions land
    /// in one group even when their endpoints are far apart. Components are
    /// sorted internally and ordered by their smallest member.
    pub fn clone_groups_of(&self, slate: &[usize]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = slate.to_vec();
        remaining.sort_unstable();
        let mut components = Vec::new();
        let mut visited = vec![false; remaining.len()];
        for start in 0..remaining.len() {
            if visited[start] {
                continue;
            }
            let mut stack = vec![start];
            visited[start] = true;
            let mut comp = Vec::new();
            while let Some(pos) = stack.pop() {
                comp.push(remaining[pos]);
                for other in 0..remaining.len() {
                    if !visited[other] && self.are_neighbors(remaining[pos], remaining[other]) {
                        visited[other] = true;
                        stack.push(other);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Writes the full distance matrix as CSV: a header of opinion indices,
    /// then one labelled row per opinion.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["opinion".to_string()];
        header.extend((0..self.n_opinions).map(|j| j.to_string()));
        w.write_record(&header)?;
        for i in 0..self.n_opinions {
            let mut record = vec![i.to_string()];
            record.extend((0..self.n_opinions).map(|j| self.distance(i, j).to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Near-duplicate groups among the selected opinions; see
/// [`DistanceIndex::clone_groups_of`].
pub fn clone_groups(selection: &Selection, index: &DistanceIndex) -> Vec<Vec<usize>> {
    index.clone_groups_of(selection.opinions())
}
