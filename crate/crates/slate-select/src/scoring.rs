//! Per-opinion score vectors used by the score-based rules and the greedy
//! stages of the guarantee-driven selectors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ApprovalMatrix, GroupPartition};

/// Which scoring function produced a [`ScoreVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    Engagement,
    GroupAware,
    Coverage,
    Random,
}

/// Real-valued score per opinion. All consumers break score ties by lowest
/// opinion index, making every score-driven choice deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    kind: ScoreKind,
    scores: Vec<f64>,
}

impl ScoreVector {
    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score(&self, opinion: usize) -> f64 {
        self.scores[opinion]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// The `k` highest-scoring opinions in descending score order, ties by
    /// lowest index.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .total_cmp(&self.scores[a])
                .then(a.cmp(&b))
        });
        order.truncate(k);
        order
    }
}

/// Picks the highest-scoring index out of `pool`, ties by lowest index.
/// `pool` must be non-empty.
pub(crate) fn argmax_in(scores: &[f64], pool: &[usize]) -> usize {
    let mut best = pool[0];
    for &i in &pool[1..] {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    best
}

/// Approval count per opinion.
pub fn engagement_scores(matrix: &ApprovalMatrix) -> ScoreVector {
    let scores = (0..matrix.n_opinions())
        .map(|i| matrix.approval_count(i) as f64)
        .collect();
    ScoreVector {
        kind: ScoreKind::Engagement,
        scores,
    }
}

/// Group-aware consensus score: for each opinion, the minimum over groups of
/// the within-group approval fraction. High scores mean every group backs the
/// opinion, so it bridges the partition.
pub fn cga_scores(matrix: &ApprovalMatrix, groups: &GroupPartition) -> Result<ScoreVector> {
    if groups.n_groups() == 0 {
        return Err(Error::Config("partition has no groups".into()));
    }
    for (g, members) in groups.members().iter().enumerate() {
        if members.is_empty() {
            return Err(Error::Config(format!(
                "group {g} (`{}`) is empty",
                groups.names()[g]
            )));
        }
        for &u in members {
            if u >= matrix.n_users() {
                return Err(Error::UserOutOfRange {
                    index: u,
                    n: matrix.n_users(),
                });
            }
        }
    }
    let scores = (0..matrix.n_opinions())
        .map(|i| {
            groups
                .members()
                .iter()
                .map(|members| {
                    let approving = members.iter().filter(|&&u| matrix.approves(u, i)).count();
                    approving as f64 / members.len() as f64
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ScoreVector {
        kind: ScoreKind::GroupAware,
        scores,
    })
}

/// Approval count restricted to the users flagged `true` in `uncovered`
/// (length `n_users`).
pub fn coverage_scores(matrix: &ApprovalMatrix, uncovered: &[bool]) -> Result<ScoreVector> {
    if uncovered.len() != matrix.n_users() {
        return Err(Error::Config(format!(
            "uncovered mask has length {}, expected {}",
            uncovered.len(),
            matrix.n_users()
        )));
    }
    let scores = (0..matrix.n_opinions())
        .map(|i| {
            (0..matrix.n_users())
                .filter(|&u| uncovered[u] && matrix.approves(u, i))
                .count() as f64
        })
        .collect();
    Ok(ScoreVector {
        kind: ScoreKind::Coverage,
        scores,
    })
}

/// Uniform `[0, 1)` score per opinion from a ChaCha8 stream keyed by `seed`,
/// one draw per opinion in index order. The same seed always yields the same
/// vector, on every platform.
pub fn random_scores(n_opinions: usize, seed: u64) -> ScoreVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scores = (0..n_opinions).map(|_| rng.random::<f64>()).collect();
    ScoreVector {
        kind: ScoreKind::Random,
        scores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_matrix() -> ApprovalMatrix {
        ApprovalMatrix::from_rows(&[vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 1]]).unwrap()
    }

    #[test]
    fn engagement_counts_approvals() {
        let s = engagement_scores(&chain_matrix());
        assert_eq!(s.scores(), &[2.0, 2.0, 1.0]);
        assert_eq!(s.top_k(2), vec![0, 1]); // tie on 2 broken by lowest index
    }

    #[test]
    fn group_aware_takes_group_minimum() {
        let m = chain_matrix();
        let groups = GroupPartition::new(vec![vec![0, 1], vec![2]], None).unwrap();
        let s = cga_scores(&m, &groups).unwrap();
        assert_eq!(s.scores(), &[0.0, 0.5, 0.0]);
        assert_eq!(s.top_k(1), vec![1]);
    }

    #[test]
    fn group_aware_rejects_empty_group() {
        let m = chain_matrix();
        let groups = GroupPartition::new(vec![vec![0, 1, 2], vec![]], None).unwrap();
        assert!(cga_scores(&m, &groups).is_err());
    }

    #[test]
    fn group_aware_never_exceeds_mean_approval() {
        // min over groups of a fraction can never beat the overall fraction
        let m = chain_matrix();
        let groups = GroupPartition::new(vec![vec![0], vec![1], vec![2]], None).unwrap();
        let cga = cga_scores(&m, &groups).unwrap();
        let eng = engagement_scores(&m);
        for i in 0..m.n_opinions() {
            assert!(cga.score(i) <= eng.score(i) / m.n_users() as f64 + 1e-12);
        }
    }

    #[test]
    fn coverage_restricts_to_uncovered() {
        let m = chain_matrix();
        let s = coverage_scores(&m, &[false, false, true]).unwrap();
        assert_eq!(s.scores(), &[0.0, 1.0, 1.0]);
        assert!(coverage_scores(&m, &[true, true]).is_err());
    }

    #[test]
    fn random_scores_are_deterministic_per_seed() {
        let a = random_scores(16, 7);
        let b = random_scores(16, 7);
        let c = random_scores(16, 8);
        assert_eq!(a.scores(), b.scores());
        assert_ne!(a.scores(), c.scores());
        assert!(a.scores().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let scores = [1.0, 3.0, 3.0, 2.0];
        assert_eq!(argmax_in(&scores, &[0, 1, 2, 3]), 1);
        assert_eq!(argmax_in(&scores, &[2, 3]), 2);
    }
}
