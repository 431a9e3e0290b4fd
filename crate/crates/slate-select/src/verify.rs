//! Representation checks: the cohesive-group coverage test, the balanced
//! certificate check, and two small-instance brute-force oracles the faster
//! checks can be validated against.
//!
//! Group-size thresholds compare exactly: a group of size `t` counts as
//! large enough iff `k * t >= n`, avoiding float division entirely.

use serde::Serialize;

use crate::distance::DistanceIndex;
use crate::error::{Error, Result};
use crate::metrics::coverage_gap_for;
use crate::model::{Instance, Selection};

/// Limits for the exhaustive balanced-assignment search.
pub const BRUTE_FORCE_MAX_USERS: usize = 12;
pub const BRUTE_FORCE_MAX_K: usize = 4;
/// Limit on the number of k-subsets the exhaustive coverage-gap search will
/// enumerate.
pub const BRUTE_FORCE_MAX_SUBSETS: u128 = 1_000_000;

/// Outcome of the cohesive-group coverage check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JrReport {
    pub satisfied: bool,
    /// A violating opinion and the cohesive group it anchors, if any.
    pub witness: Option<JrWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JrWitness {
    pub opinion: usize,
    pub group: Vec<usize>,
}

/// Checks that no opinion is approved by `n/k` or more users who approve
/// nothing in the slate (`k` = slate size). Any cohesive group large enough
/// to deserve a slot is a subset of such a set for its common opinion, so
/// scanning opinions is equivalent to scanning all groups.
pub fn check_jr(instance: &Instance, selection: &Selection) -> Result<JrReport> {
    let matrix = instance.matrix();
    selection.check_in_range(matrix)?;
    let k = selection.k();
    if k == 0 {
        return Err(Error::KZero);
    }
    let n = matrix.n_users();
    let unrepresented: Vec<usize> = (0..n)
        .filter(|&u| !matrix.approves_any(u, selection.opinions()))
        .collect();
    for q in 0..matrix.n_opinions() {
        let group: Vec<usize> = unrepresented
            .iter()
            .copied()
            .filter(|&u| matrix.approves(u, q))
            .collect();
        if k * group.len() >= n {
            return Ok(JrReport {
                satisfied: false,
                witness: Some(JrWitness { opinion: q, group }),
            });
        }
    }
    Ok(JrReport {
        satisfied: true,
        witness: None,
    })
}

/// Outcome of checking a balanced assignment certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum BjrCertCheck {
    /// Balanced and no blocking group anywhere.
    Satisfied,
    /// Balanced, but `opinion` is approved by a large-enough group of users
    /// all mapped elsewhere.
    Violated { opinion: usize, blockers: Vec<usize> },
    /// Structurally broken (wrong lengths, unbalanced budgets, assignments
    /// outside the slate); reported distinctly from a violation.
    Malformed { reason: String },
}

impl BjrCertCheck {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, BjrCertCheck::Satisfied)
    }
}

/// Validates the certificate's structure (total, within-slate, budgets in
/// `{floor(n/k), ceil(n/k)}` summing to `n`, counts matching budgets), then
/// hunts for a blocking group: for every opinion `q`, the users approving
/// `q` but mapped elsewhere form the largest group that could block with
/// `q`; the certificate stands iff every such set stays below `n/k`.
pub fn check_bjr_certificate(
    instance: &Instance,
    selection: &Selection,
    certificate: &crate::model::AssignmentCertificate,
) -> Result<BjrCertCheck> {
    let matrix = instance.matrix();
    selection.check_in_range(matrix)?;
    let k = selection.k();
    if k == 0 {
        return Err(Error::KZero);
    }
    let n = matrix.n_users();
    let slate = selection.opinions();
    let assignment = certificate.assignment();
    let budgets = certificate.budgets();

    if assignment.len() != n {
        return Ok(BjrCertCheck::Malformed {
            reason: format!("assignment covers {} users, instance has {n}", assignment.len()),
        });
    }
    if budgets.len() != k {
        return Ok(BjrCertCheck::Malformed {
            reason: format!("{} budgets for {k} selected opinions", budgets.len()),
        });
    }
    if let Some(&p) = assignment.iter().find(|&&p| !slate.contains(&p)) {
        return Ok(BjrCertCheck::Malformed {
            reason: format!("user assigned to opinion {p}, which is not in the selection"),
        });
    }
    let floor = n / k;
    let ceil = n.div_ceil(k);
    if let Some((t, &b)) = budgets
        .iter()
        .enumerate()
        .find(|&(_, &b)| b != floor && b != ceil)
    {
        return Ok(BjrCertCheck::Malformed {
            reason: format!("budget {b} for opinion {} outside {{{floor}, {ceil}}}", slate[t]),
        });
    }
    if budgets.iter().sum::<usize>() != n {
        return Ok(BjrCertCheck::Malformed {
            reason: format!(
                "budgets sum to {}, expected {n}",
                budgets.iter().sum::<usize>()
            ),
        });
    }
    for (t, &p) in slate.iter().enumerate() {
        let assigned = assignment.iter().filter(|&&q| q == p).count();
        if assigned != budgets[t] {
            return Ok(BjrCertCheck::Malformed {
                reason: format!(
                    "opinion {p} has {assigned} assigned users but budget {}",
                    budgets[t]
                ),
            });
        }
    }

    for q in 0..matrix.n_opinions() {
        let blockers: Vec<usize> = (0..n)
            .filter(|&u| matrix.approves(u, q) && assignment[u] != q)
            .collect();
        if k * blockers.len() >= n {
            return Ok(BjrCertCheck::Violated {
                opinion: q,
                blockers,
            });
        }
    }
    Ok(BjrCertCheck::Satisfied)
}

/// Exhaustively decides whether *any* balanced assignment over the slate
/// avoids all blocking groups. Guarded to `n <= 12`, `k <= 4`; larger
/// instances get an explicit refusal, never a truncated search.
pub fn brute_force_bjr_exists(instance: &Instance, selection: &Selection) -> Result<bool> {
    let matrix = instance.matrix();
    selection.check_in_range(matrix)?;
    let k = selection.k();
    if k == 0 {
        return Err(Error::KZero);
    }
    let n = matrix.n_users();
    if n > BRUTE_FORCE_MAX_USERS || k > BRUTE_FORCE_MAX_K {
        return Err(Error::EnumerationGuard {
            reason: format!(
                "balanced-assignment search handles n <= {BRUTE_FORCE_MAX_USERS} and \
                 k <= {BRUTE_FORCE_MAX_K}, got n = {n}, k = {k}"
            ),
        });
    }

    let slate = selection.opinions().to_vec();
    let floor = n / k;
    let ceil = n.div_ceil(k);
    let mut counts = vec![0usize; k];
    let mut slot_of = vec![0usize; n];

    fn assignment_clears(
        matrix: &crate::model::ApprovalMatrix,
        slate: &[usize],
        slot_of: &[usize],
        k: usize,
    ) -> bool {
        let n = matrix.n_users();
        for q in 0..matrix.n_opinions() {
            let blockers = (0..n)
                .filter(|&u| matrix.approves(u, q) && slate[slot_of[u]] != q)
                .count();
            if k * blockers >= n {
                return false;
            }
        }
        true
    }

    fn search(
        u: usize,
        matrix: &crate::model::ApprovalMatrix,
        slate: &[usize],
        counts: &mut [usize],
        slot_of: &mut [usize],
        floor: usize,
        ceil: usize,
    ) -> bool {
        let n = matrix.n_users();
        let k = slate.len();
        if u == n {
            // Each count is <= ceil by construction; >= floor plus the sum
            // equaling n makes the assignment balanced.
            return counts.iter().all(|&c| c >= floor)
                && assignment_clears(matrix, slate, slot_of, k);
        }
        let deficit: usize = counts.iter().map(|&c| floor.saturating_sub(c)).sum();
        if deficit > n - u {
            return false; // not enough users left to reach every floor
        }
        for slot in 0..k {
            if counts[slot] < ceil {
                counts[slot] += 1;
                slot_of[u] = slot;
                if search(u + 1, matrix, slate, counts, slot_of, floor, ceil) {
                    return true;
                }
                counts[slot] -= 1;
            }
        }
        false
    }

    Ok(search(0, matrix, &slate, &mut counts, &mut slot_of, floor, ceil))
}

/// Exhaustively finds the k-subset of opinions minimizing the coverage gap,
/// returning the gap and the first (lexicographically) minimizer. Guarded by
/// the number of subsets; larger searches get an explicit refusal.
pub fn brute_force_min_cg(
    instance: &Instance,
    k: usize,
    index: &DistanceIndex,
) -> Result<(f64, Vec<usize>)> {
    let m = instance.n_opinions();
    if k == 0 {
        return Err(Error::KZero);
    }
    if k > m {
        return Err(Error::KTooLarge { k, m });
    }
    if index.n_opinions() != m {
        return Err(Error::Config(format!(
            "distance index covers {} opinions, instance has {m}",
            index.n_opinions()
        )));
    }
    let subsets = binomial(m as u128, k as u128);
    if subsets > BRUTE_FORCE_MAX_SUBSETS {
        return Err(Error::EnumerationGuard {
            reason: format!(
                "coverage-gap search over C({m}, {k}) = {subsets} subsets exceeds the \
                 {BRUTE_FORCE_MAX_SUBSETS} limit"
            ),
        });
    }

    let mut subset: Vec<usize> = (0..k).collect();
    let mut best_gap = f64::INFINITY;
    let mut best_subset = subset.clone();
    loop {
        let gap = coverage_gap_for(&subset, index)?;
        if gap < best_gap {
            best_gap = gap;
            best_subset = subset.clone();
        }
        // Advance to the next k-combination of 0..m in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok((best_gap, best_subset));
            }
            i -= 1;
            if subset[i] != i + m - k {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > BRUTE_FORCE_MAX_SUBSETS {
            return acc; // already over any guard we compare against
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ApprovalMatrix, AssignmentCertificate};
    use crate::selectors::greedy_certificate;

    fn chain_instance() -> Instance {
        let m =
            ApprovalMatrix::from_rows(&[vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        Instance::new("chain", m, 2)
    }

    #[test]
    fn jr_satisfied_when_everyone_is_covered() {
        let inst = chain_instance();
        let report = check_jr(&inst, &Selection::manual(vec![0, 2]).unwrap()).unwrap();
        assert!(report.satisfied);
        assert!(report.witness.is_none());
    }

    #[test]
    fn jr_violated_by_an_ignored_unanimous_opinion() {
        // Everyone approves opinion 0 and nothing else; the slate {1} leaves
        // a cohesive group of size n = n/k entirely unrepresented.
        let m = ApprovalMatrix::from_rows(&[vec![1, 0], vec![1, 0], vec![1, 0]]).unwrap();
        let inst = Instance::new("unanimous", m, 1);
        let report = check_jr(&inst, &Selection::manual(vec![1]).unwrap()).unwrap();
        assert!(!report.satisfied);
        let w = report.witness.unwrap();
        assert_eq!(w.opinion, 0);
        assert_eq!(w.group, vec![0, 1, 2]);
    }

    #[test]
    fn jr_small_groups_do_not_block() {
        // Slate {2} represents only u2, but no opinion musters n/k = 3
        // uncovered approvers, so the check passes.
        let inst = chain_instance();
        let report = check_jr(&inst, &Selection::manual(vec![2]).unwrap()).unwrap();
        assert!(report.satisfied);
    }

    /// Literal re-statement of the definition: some subset of users, at
    /// least `n/k` strong, shares an approved opinion and approves nothing
    /// in the slate.
    fn jr_violated_by_subset_scan(inst: &Instance, slate: &[usize]) -> bool {
        let matrix = inst.matrix();
        let n = matrix.n_users();
        let k = slate.len();
        for mask in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|&u| mask & (1 << u) != 0).collect();
            if k * members.len() < n {
                continue;
            }
            let cohesive = (0..matrix.n_opinions())
                .any(|q| members.iter().all(|&u| matrix.approves(u, q)));
            if cohesive && members.iter().all(|&u| !matrix.approves_any(u, slate)) {
                return true;
            }
        }
        false
    }

    #[test]
    fn jr_check_agrees_with_subset_scan() {
        use rand::RngCore;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = 2 + (rng.next_u64() % 7) as usize; // <= 8 users
            let m = 2 + (rng.next_u64() % 5) as usize;
            let cells: Vec<u8> = (0..n * m).map(|_| (rng.next_u64() % 2) as u8).collect();
            let inst = Instance::new("r", ApprovalMatrix::new(n, m, cells).unwrap(), 1);
            let k = 1 + (rng.next_u64() as usize) % m;
            let mut slate: Vec<usize> = (0..m).collect();
            for i in (1..slate.len()).rev() {
                let j = (rng.next_u64() as usize) % (i + 1);
                slate.swap(i, j);
            }
            slate.truncate(k);
            let report = check_jr(&inst, &Selection::manual(slate.clone()).unwrap()).unwrap();
            assert_eq!(
                report.satisfied,
                !jr_violated_by_subset_scan(&inst, &slate),
                "n={n} m={m} slate={slate:?}"
            );
        }
    }

    #[test]
    fn certificate_for_popular_pair_is_clean() {
        let inst = chain_instance();
        let sel = Selection::manual(vec![0, 1]).unwrap();
        let cert = greedy_certificate(inst.matrix(), sel.opinions()).unwrap();
        assert_eq!(
            check_bjr_certificate(&inst, &sel, &cert).unwrap(),
            BjrCertCheck::Satisfied
        );
        assert!(brute_force_bjr_exists(&inst, &sel).unwrap());
    }

    #[test]
    fn chain_slate_zero_two_has_a_blocking_pair() {
        // The slate {0, 2} looks diverse but cannot be balanced cleanly:
        // any balanced map sends u1 or u2 away from opinion 1, which both
        // approve, and 2 users meet the n/k = 1.5 bar. The oracle confirms
        // no balanced assignment for this slate survives.
        let inst = chain_instance();
        let sel = Selection::manual(vec![0, 2]).unwrap();
        let cert = greedy_certificate(inst.matrix(), sel.opinions()).unwrap();
        assert_eq!(cert.assignment(), &[0, 0, 2]);
        assert_eq!(
            check_bjr_certificate(&inst, &sel, &cert).unwrap(),
            BjrCertCheck::Violated {
                opinion: 1,
                blockers: vec![1, 2]
            }
        );
        assert_eq!(brute_force_bjr_exists(&inst, &sel).unwrap(), false);
    }

    #[test]
    fn malformed_certificates_are_distinguished() {
        let inst = chain_instance();
        let sel = Selection::manual(vec![0, 1]).unwrap();
        let cases = [
            AssignmentCertificate::new(vec![0, 0], vec![2, 1]), // short assignment
            AssignmentCertificate::new(vec![0, 0, 2], vec![2, 1]), // outside slate
            AssignmentCertificate::new(vec![0, 0, 1], vec![3]), // budget count
            AssignmentCertificate::new(vec![0, 0, 0], vec![3, 0]), // budget value
            AssignmentCertificate::new(vec![0, 0, 1], vec![1, 1]), // sum != n
            AssignmentCertificate::new(vec![0, 1, 1], vec![2, 1]), // count mismatch
        ];
        for cert in &cases {
            assert!(matches!(
                check_bjr_certificate(&inst, &sel, cert).unwrap(),
                BjrCertCheck::Malformed { .. }
            ));
        }
    }

    #[test]
    fn brute_force_guard_refuses_large_instances() {
        let m = ApprovalMatrix::new(13, 2, vec![0; 26]).unwrap();
        let inst = Instance::new("big", m, 1);
        let sel = Selection::manual(vec![0]).unwrap();
        assert!(matches!(
            brute_force_bjr_exists(&inst, &sel),
            Err(Error::EnumerationGuard { .. })
        ));
    }

    #[test]
    fn min_cg_oracle_on_the_chain() {
        let inst = chain_instance();
        let index = DistanceIndex::build(inst.matrix(), 0.7);
        let (gap, subset) = brute_force_min_cg(&inst, 2, &index).unwrap();
        // {0,1} and {0,2} both leave a gap of 1/3; the first wins.
        assert_eq!(gap, 1.0 / 3.0);
        assert_eq!(subset, vec![0, 1]);
        let (gap, subset) = brute_force_min_cg(&inst, 3, &index).unwrap();
        assert_eq!(gap, 0.0);
        assert_eq!(subset, vec![0, 1, 2]);
    }

    #[test]
    fn min_cg_guard_refuses_huge_enumerations() {
        let m = ApprovalMatrix::new(2, 40, vec![0; 80]).unwrap();
        let inst = Instance::new("wide", m, 2);
        let index = DistanceIndex::build(inst.matrix(), 0.5);
        assert!(matches!(
            brute_force_min_cg(&inst, 20, &index),
            Err(Error::EnumerationGuard { .. })
        ));
    }
}
