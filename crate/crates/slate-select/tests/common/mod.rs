//! Instance builders shared by the integration suites.
#![allow(dead_code)] // each test binary uses its own subset

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slate_select::data_io::{generate_synthetic, SyntheticSpec};
use slate_select::model::{ApprovalMatrix, GroupPartition, Instance};

/// The 3x3 chain: u0 approves only o0, u1 approves o0 and o1, u2 approves
/// o1 and o2. At ε = 0.7 the neighbor pairs are (o0, o1) and (o1, o2), so
/// o1 bridges two otherwise-distant opinions — the smallest instance where
/// diversity-aware tie-breaking changes the outcome.
pub fn chain_instance() -> Instance {
    let matrix = ApprovalMatrix::from_rows(&[vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 1]])
        .expect("binary fixture rows");
    Instance::new("chain", matrix, 2)
}

/// Two users approve the first opinion pair, one user the second pair: a
/// popular camp (o0, o1) and a minority camp (o2, o3). Coverage-first
/// selection must take one opinion from each camp before filling up.
pub fn two_camp_instance() -> Instance {
    let matrix = ApprovalMatrix::from_rows(&[
        vec![1, 1, 0, 0],
        vec![1, 1, 0, 0],
        vec![0, 0, 1, 1],
    ])
    .expect("binary fixture rows");
    Instance::new("two-camp", matrix, 3)
}

/// Unstructured random instance: dimensions up to `max_n` x `max_m`, cell
/// density drawn per instance from 0.15..0.85. Deterministic in `seed`.
pub fn random_instance(seed: u64, max_n: usize, max_m: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let m = rng.random_range(2..=max_m);
    let density = rng.random_range(0.15..0.85);
    let cells = (0..n * m)
        .map(|_| u8::from(rng.random::<f64>() < density))
        .collect();
    let matrix = ApprovalMatrix::new(n, m, cells).expect("cells sized n * m");
    Instance::new(format!("random-{seed}"), matrix, m.min(5))
}

/// A slate size in `1..=max_k` (clipped to m), drawn from the same stream
/// position every time for a given seed.
pub fn random_k(seed: u64, instance: &Instance, max_k: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6b);
    rng.random_range(1..=max_k.min(instance.n_opinions()))
}

/// Random instance small enough for the exhaustive balanced-assignment
/// search: n in 4..=12, m in 3..=10.
pub fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(7));
    let n = rng.random_range(4..=12);
    let m = rng.random_range(3..=10);
    let density = rng.random_range(0.2..0.8);
    let cells = (0..n * m)
        .map(|_| u8::from(rng.random::<f64>() < density))
        .collect();
    let matrix = ApprovalMatrix::new(n, m, cells).expect("cells sized n * m");
    Instance::new(format!("small-{seed}"), matrix, m.min(3))
}

/// Random instance whose opinion columns are pairwise distinct, found by
/// advancing the seed until the draw has no duplicate column. Returns the
/// instance and the seed that produced it.
pub fn distinct_column_instance(seed: u64, max_n: usize, max_m: usize) -> (Instance, u64) {
    let mut attempt = seed;
    loop {
        let instance = random_instance(attempt, max_n, max_m);
        if all_columns_distinct(instance.matrix()) {
            return (instance, attempt);
        }
        attempt = attempt.wrapping_add(0x1000_0000_0000_0001);
    }
}

pub fn all_columns_distinct(matrix: &ApprovalMatrix) -> bool {
    let m = matrix.n_opinions();
    let columns: Vec<Vec<usize>> = (0..m).map(|i| matrix.approvers(i)).collect();
    for i in 0..m {
        for j in i + 1..m {
            if columns[i] == columns[j] {
                return false;
            }
        }
    }
    true
}

/// Block-structured instance from the synthetic generator: `n_groups` user
/// blocks, each approving its own opinion block at rate `cohesion` and
/// everything else at rate `noise`. Carries the planted partition.
pub fn planted_instance(
    seed: u64,
    n_users: usize,
    n_opinions: usize,
    n_groups: usize,
    cohesion: f64,
    noise: f64,
) -> Instance {
    generate_synthetic(&SyntheticSpec {
        n_users,
        n_opinions,
        n_groups,
        cohesion,
        noise,
        seed,
    })
    .expect("valid synthetic parameters")
}

/// Random partition of `n_users` into `n_groups` non-empty groups: the
/// first `n_groups` users seed one group each, the rest land uniformly.
pub fn random_groups(n_users: usize, n_groups: usize, seed: u64) -> GroupPartition {
    assert!(n_groups >= 1 && n_groups <= n_users);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
    let mut members: Vec<Vec<usize>> = (0..n_groups).map(|g| vec![g]).collect();
    for u in n_groups..n_users {
        members[rng.random_range(0..n_groups)].push(u);
    }
    GroupPartition::new(members, None).expect("group count matches")
}
