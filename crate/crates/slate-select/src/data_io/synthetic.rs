//! Planted-block synthetic instances: users and opinions are split into
//! aligned blocks, in-block approval is sampled at the cohesion rate and
//! out-of-block approval at the noise rate.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{budget_schedule, ApprovalMatrix, GroupPartition, Instance};

/// Parameters for [`generate_synthetic`]. Block sizes follow the same
/// near-even split as assignment budgets: the first `n mod g` blocks get one
/// extra member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_opinions: usize,
    pub n_groups: usize,
    /// In-block approval probability.
    pub cohesion: f64,
    /// Out-of-block approval probability.
    pub noise: f64,
    pub seed: u64,
}

fn block_ids(total: usize, blocks: usize) -> Vec<usize> {
    budget_schedule(total, blocks)
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat(b).take(size))
        .collect()
}

/// Deterministically generates the planted instance for `spec`: cells are
/// drawn row-major from a ChaCha8 stream keyed by the seed, and the user
/// blocks double as the instance's group partition.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Instance> {
    if spec.n_users == 0 || spec.n_opinions == 0 {
        return Err(Error::Config(
            "synthetic instances need at least one user and one opinion".into(),
        ));
    }
    if spec.n_groups == 0 || spec.n_groups > spec.n_users.min(spec.n_opinions) {
        return Err(Error::Config(format!(
            "n_groups = {} must lie in [1, min(n, m)] = [1, {}]",
            spec.n_groups,
            spec.n_users.min(spec.n_opinions)
        )));
    }
    for (name, p) in [("cohesion", spec.cohesion), ("noise", spec.noise)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
        }
    }

    let user_block = block_ids(spec.n_users, spec.n_groups);
    let opinion_block = block_ids(spec.n_opinions, spec.n_groups);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cells = Vec::with_capacity(spec.n_users * spec.n_opinions);
    for u in 0..spec.n_users {
        for i in 0..spec.n_opinions {
            let p = if user_block[u] == opinion_block[i] {
                spec.cohesion
            } else {
                spec.noise
            };
            cells.push(u8::from(rng.random::<f64>() < p));
        }
    }
    let matrix = ApprovalMatrix::new(spec.n_users, spec.n_opinions, cells)?;

    let mut members = vec![Vec::new(); spec.n_groups];
    for (u, &b) in user_block.iter().enumerate() {
        members[b].push(u);
    }
    let groups = GroupPartition::new(members, None)?;
    let question_id = format!(
        "synthetic-n{}-m{}-g{}-s{}",
        spec.n_users, spec.n_opinions, spec.n_groups, spec.seed
    );
    let k_default = spec.n_opinions.min(5);
    Ok(Instance::new(question_id, matrix, k_default).with_groups(groups))
}
