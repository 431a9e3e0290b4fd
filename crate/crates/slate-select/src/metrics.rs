//! Evaluation metrics for a selected slate: how many users it leaves
//! unrepresented (overall and per group), how much cross-group consensus its
//! best opinion carries, how far the farthest left-out opinion sits from the
//! slate, and how much of the slate is near-duplicates.

use serde::Serialize;

use crate::distance::DistanceIndex;
use crate::error::{Error, Result};
use crate::model::{ApprovalMatrix, GroupPartition, Instance, Selection};

fn check_selection(matrix: &ApprovalMatrix, selection: &Selection) -> Result<()> {
    if selection.k() == 0 {
        return Err(Error::KZero);
    }
    selection.check_in_range(matrix)
}

/// Percentage of users who approve nothing in the slate, in `[0, 100]`.
pub fn unrepresented_overall(matrix: &ApprovalMatrix, selection: &Selection) -> Result<f64> {
    check_selection(matrix, selection)?;
    let n = matrix.n_users();
    let left_out = (0..n)
        .filter(|&u| !matrix.approves_any(u, selection.opinions()))
        .count();
    Ok(100.0 * left_out as f64 / n as f64)
}

/// The unrepresented percentage within each group, in partition order.
pub fn unrepresented_per_group(
    matrix: &ApprovalMatrix,
    selection: &Selection,
    groups: &GroupPartition,
) -> Result<Vec<f64>> {
    check_selection(matrix, selection)?;
    groups
        .members()
        .iter()
        .enumerate()
        .map(|(g, members)| {
            if members.is_empty() {
                return Err(Error::Config(format!("group {g} is empty")));
            }
            for &u in members {
                if u >= matrix.n_users() {
                    return Err(Error::UserOutOfRange {
                        index: u,
                        n: matrix.n_users(),
                    });
                }
            }
            let left_out = members
                .iter()
                .filter(|&&u| !matrix.approves_any(u, selection.opinions()))
                .count();
            Ok(100.0 * left_out as f64 / members.len() as f64)
        })
        .collect()
}

/// Median over groups of the within-group unrepresented percentage; an even
/// group count takes the midpoint of the two central values.
pub fn unrepresented_median_group(
    matrix: &ApprovalMatrix,
    selection: &Selection,
    groups: &GroupPartition,
) -> Result<f64> {
    let mut values = unrepresented_per_group(matrix, selection, groups)?;
    values.sort_by(f64::total_cmp);
    let g = values.len();
    if g % 2 == 1 {
        Ok(values[g / 2])
    } else {
        Ok((values[g / 2 - 1] + values[g / 2]) / 2.0)
    }
}

/// Best cross-group backing any single selected opinion achieves: the
/// maximum over the slate of the minimum per-group approval share.
pub fn consensus(
    matrix: &ApprovalMatrix,
    selection: &Selection,
    groups: &GroupPartition,
) -> Result<f64> {
    check_selection(matrix, selection)?;
    let mut best = 0.0f64;
    for &s in selection.opinions() {
        let mut worst = f64::INFINITY;
        for (g, members) in groups.members().iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Config(format!("group {g} is empty")));
            }
            for &u in members {
                if u >= matrix.n_users() {
                    return Err(Error::UserOutOfRange {
                        index: u,
                        n: matrix.n_users(),
                    });
                }
            }
            let share = members.iter().filter(|&&u| matrix.approves(u, s)).count() as f64
                / members.len() as f64;
            worst = worst.min(share);
        }
        best = best.max(worst);
    }
    Ok(best)
}

/// Coverage gap of a slate given as raw indices: the largest distance any
/// non-selected opinion has to its nearest selected one. A slate covering
/// every opinion (`k = m`) has gap 0.
pub fn coverage_gap_for(slate: &[usize], index: &DistanceIndex) -> Result<f64> {
    if slate.is_empty() {
        return Err(Error::KZero);
    }
    for &s in slate {
        if s >= index.n_opinions() {
            return Err(Error::OpinionOutOfRange {
                index: s,
                m: index.n_opinions(),
            });
        }
    }
    let mut gap = 0.0f64;
    for o in 0..index.n_opinions() {
        if slate.contains(&o) {
            continue;
        }
        let nearest = slate
            .iter()
            .map(|&s| index.distance(o, s))
            .fold(f64::INFINITY, f64::min);
        gap = gap.max(nearest);
    }
    Ok(gap)
}

/// See [`coverage_gap_for`].
pub fn coverage_gap(selection: &Selection, index: &DistanceIndex) -> Result<f64> {
    coverage_gap_for(selection.opinions(), index)
}

/// Fraction of slate slots wasted on near-duplicates: clone groups are the
/// connected components of the ε-graph restricted to the slate, and each
/// component of size `c` wastes `c - 1` slots. Ranges over `[0, (k-1)/k]`.
pub fn redundancy(selection: &Selection, index: &DistanceIndex) -> Result<f64> {
    if selection.k() == 0 {
        return Err(Error::KZero);
    }
    for &s in selection.opinions() {
        if s >= index.n_opinions() {
            return Err(Error::OpinionOutOfRange {
                index: s,
                m: index.n_opinions(),
            });
        }
    }
    let wasted: usize = index
        .clone_groups_of(selection.opinions())
        .iter()
        .map(|c| c.len() - 1)
        .sum();
    Ok(wasted as f64 / selection.k() as f64)
}

/// All metrics for one slate. Group-dependent entries are `None` when the
/// instance has no partition. `redundancy_epsilon` records the ε the
/// redundancy (and the index's distances) were computed with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub u_all: f64,
    pub median_u: Option<f64>,
    pub consensus: Option<f64>,
    pub coverage_gap: f64,
    pub redundancy: f64,
    pub redundancy_epsilon: f64,
}

impl MetricsReport {
    pub fn compute(
        instance: &Instance,
        selection: &Selection,
        index: &DistanceIndex,
    ) -> Result<Self> {
        let matrix = instance.matrix();
        if index.n_opinions() != matrix.n_opinions() {
            return Err(Error::Config(format!(
                "distance index covers {} opinions, matrix has {}",
                index.n_opinions(),
                matrix.n_opinions()
            )));
        }
        let (median_u, consensus_v) = match instance.groups() {
            Some(groups) => (
                Some(unrepresented_median_group(matrix, selection, groups)?),
                Some(consensus(matrix, selection, groups)?),
            ),
            None => (None, None),
        };
        Ok(MetricsReport {
            u_all: unrepresented_overall(matrix, selection)?,
            median_u,
            consensus: consensus_v,
            coverage_gap: coverage_gap(selection, index)?,
            redundancy: redundancy(selection, index)?,
            redundancy_epsilon: index.epsilon(),
        })
    }
}
