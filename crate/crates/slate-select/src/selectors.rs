//! The seven selection rules.
//!
//! Three are guarantee-driven: `jr` greedily covers cohesive groups, `bjr`
//! additionally produces a balanced user-to-opinion assignment certificate,
//! and `diverse-bjr` steers the same machinery away from near-duplicate
//! opinions whenever a feasibility probe shows the remaining budgets can
//! still be met without them. The other four (`random`, `engagement`,
//! `bridging`, `diversity`) are score- or distance-based baselines.
//!
//! Every tie anywhere is broken by lowest index, so each rule is a pure
//! function of (instance, config).

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::{DistanceIndex, DEFAULT_SELECTION_EPSILON};
use crate::error::{Error, Result};
use crate::model::{
    budget_schedule, ApprovalMatrix, AssignmentCertificate, Instance, Rule, RuleParams, Selection,
};
use crate::scoring::{argmax_in, cga_scores, coverage_scores, engagement_scores, random_scores};

/// Default number of feasibility-probe attempts (first deterministic, rest
/// randomized).
pub const DEFAULT_FEASIBILITY_TRIALS: u32 = 5;

/// Everything a selection run needs besides the instance.
#[derive(Debug, Clone)]
pub struct SelectorConfig {
    pub rule: Rule,
    pub k: usize,
    /// Seed for the rules that consume randomness (`random` sampling and the
    /// fixed random score vector drawn once per `jr`/`bjr`/`diverse-bjr`
    /// run).
    pub seed: u64,
    /// Near-duplicate threshold for `diverse-bjr` (and the default ε when the
    /// dispatcher builds a distance index for `diversity`).
    pub epsilon: f64,
    /// Feasibility-probe attempts for `diverse-bjr`.
    pub trials: u32,
}

impl SelectorConfig {
    pub fn new(rule: Rule, k: usize) -> Self {
        SelectorConfig {
            rule,
            k,
            seed: 0,
            epsilon: DEFAULT_SELECTION_EPSILON,
            trials: DEFAULT_FEASIBILITY_TRIALS,
        }
    }
}

/// A selection plus, for the certificate-producing rules, its assignment.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub selection: Selection,
    pub certificate: Option<AssignmentCertificate>,
}

fn check_k(matrix: &ApprovalMatrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::KZero);
    }
    if k > matrix.n_opinions() {
        return Err(Error::KTooLarge {
            k,
            m: matrix.n_opinions(),
        });
    }
    Ok(())
}

fn check_index(matrix: &ApprovalMatrix, index: &DistanceIndex) -> Result<()> {
    if index.n_opinions() != matrix.n_opinions() {
        return Err(Error::Config(format!(
            "distance index covers {} opinions, matrix has {}",
            index.n_opinions(),
            matrix.n_opinions()
        )));
    }
    Ok(())
}

/// Runs the rule named in `config`, building a distance index at
/// `config.epsilon` when the rule needs one.
pub fn select(instance: &Instance, config: &SelectorConfig) -> Result<SelectionOutcome> {
    let outcome = match config.rule {
        Rule::Random => SelectionOutcome {
            selection: select_random(instance, config)?,
            certificate: None,
        },
        Rule::Engagement => SelectionOutcome {
            selection: select_engagement(instance, config)?,
            certificate: None,
        },
        Rule::Bridging => SelectionOutcome {
            selection: select_bridging(instance, config)?,
            certificate: None,
        },
        Rule::Diversity => {
            let index = DistanceIndex::build(instance.matrix(), config.epsilon);
            SelectionOutcome {
                selection: select_diversity(instance, config, &index)?,
                certificate: None,
            }
        }
        Rule::Jr => SelectionOutcome {
            selection: select_jr(instance, config)?,
            certificate: None,
        },
        Rule::Bjr => {
            let (selection, certificate) = select_bjr(instance, config)?;
            SelectionOutcome {
                selection,
                certificate: Some(certificate),
            }
        }
        Rule::DiverseBjr => {
            let index = DistanceIndex::build(instance.matrix(), config.epsilon);
            let (selection, certificate) = select_diverse_bjr(instance, config, &index)?;
            SelectionOutcome {
                selection,
                certificate: Some(certificate),
            }
        }
        Rule::Manual => {
            return Err(Error::Config(
                "`manual` tags externally supplied slates and cannot be run as a rule".into(),
            ))
        }
    };
    Ok(outcome)
}

/// `k` distinct opinions sampled uniformly from a ChaCha8 stream keyed by
/// `config.seed`, in sample order.
pub fn select_random(instance: &Instance, config: &SelectorConfig) -> Result<Selection> {
    let matrix = instance.matrix();
    check_k(matrix, config.k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let opinions = sample(&mut rng, matrix.n_opinions(), config.k).into_vec();
    Selection::new(
        opinions,
        Rule::Random,
        Some(config.seed),
        RuleParams::default(),
    )
}

/// The `k` most-approved opinions.
pub fn select_engagement(instance: &Instance, config: &SelectorConfig) -> Result<Selection> {
    let matrix = instance.matrix();
    check_k(matrix, config.k)?;
    let opinions = engagement_scores(matrix).top_k(config.k);
    Selection::new(opinions, Rule::Engagement, None, RuleParams::lowest_index())
}

/// The `k` opinions with the highest group-aware consensus score; requires a
/// group partition.
pub fn select_bridging(instance: &Instance, config: &SelectorConfig) -> Result<Selection> {
    let matrix = instance.matrix();
    check_k(matrix, config.k)?;
    let groups = instance.groups().ok_or_else(|| Error::MissingPartition {
        rule: Rule::Bridging.as_str().into(),
    })?;
    let opinions = cga_scores(matrix, groups)?.top_k(config.k);
    Selection::new(opinions, Rule::Bridging, None, RuleParams::lowest_index())
}

/// Farthest-first traversal over opinion distances. The first pick minimizes
/// the worst-case distance to any opinion (the best single-opinion slate);
/// each later pick is the opinion farthest from the current slate. By the
/// standard triangle-inequality argument the resulting coverage gap is at
/// most twice the optimum for the same `k`.
pub fn select_diversity(
    instance: &Instance,
    config: &SelectorConfig,
    index: &DistanceIndex,
) -> Result<Selection> {
    let matrix = instance.matrix();
    check_k(matrix, config.k)?;
    check_index(matrix, index)?;
    let m = matrix.n_opinions();

    let mut first = 0usize;
    let mut best_radius = f64::INFINITY;
    for i in 0..m {
        let radius = (0..m)
            .map(|j| index.distance(i, j))
            .fold(0.0f64, f64::max);
        if radius < best_radius {
            best_radius = radius;
            first = i;
        }
    }

    let mut opinions = vec![first];
    let mut dist_to_slate: Vec<f64> = (0..m).map(|i| index.distance(i, first)).collect();
    while opinions.len() < config.k {
        let mut next = None;
        let mut best = -1.0f64;
        for i in 0..m {
            if !opinions.contains(&i) && dist_to_slate[i] > best {
                best = dist_to_slate[i];
                next = Some(i);
            }
        }
        let next = next.expect("k <= m leaves an unselected opinion");
        opinions.push(next);
        for i in 0..m {
            dist_to_slate[i] = dist_to_slate[i].min(index.distance(i, next));
        }
    }
    Selection::new(opinions, Rule::Diversity, None, RuleParams::lowest_index())
}

/// Greedy cohesive-group coverage. Stage 1 repeatedly adds the opinion
/// approved by the most still-uncovered users as long as some opinion has at
/// least `ceil(n/k)` uncovered approvers; stage 2 fills leftover slots by a
/// random score vector drawn once per run. The exit condition of stage 1
/// caps every opinion's uncovered approvers strictly below `n/k`, so the
/// output always satisfies the cohesive-representation check.
pub fn select_jr(instance: &Instance, config: &SelectorConfig) -> Result<Selection> {
    let matrix = instance.matrix();
    check_k(matrix, config.k)?;
    let n = matrix.n_users();
    let m = matrix.n_opinions();
    let threshold = n.div_ceil(config.k);

    let mut covered = vec![false; n];
    let mut selected = vec![false; m];
    let mut opinions = Vec::with_capacity(config.k);
    while opinions.len() < config.k {
        let uncovered: Vec<bool> = covered.iter().map(|&c| !c).collect();
        let coverage = coverage_scores(matrix, &uncovered)?;
        let pool: Vec<usize> = (0..m).filter(|&i| !selected[i]).collect();
        let best = argmax_in(coverage.scores(), &pool);
        if coverage.score(best) < threshold as f64 {
            break;
        }
        selected[best] = true;
        opinions.push(best);
        for u in 0..n {
            if matrix.approves(u, best) {
                covered[u] = true;
            }
        }
    }

    if opinions.len() < config.k {
        let scores = random_scores(m, config.seed);
        let mut rest: Vec<usize> = (0..m).filter(|&i| !selected[i]).collect();
        rest.sort_by(|&a, &b| scores.score(b).total_cmp(&scores.score(a)).then(a.cmp(&b)));
        opinions.extend(rest.into_iter().take(config.k - opinions.len()));
    }
    Selection::new(opinions, Rule::Jr, Some(config.seed), RuleParams::lowest_index())
}

/// Balanced greedy selection: per-round budgets, stage-1 picks by maximum
/// approval among unmatched users, stage-2 fallback by a fixed random score
/// vector. Returns the selection and its balanced assignment certificate.
pub fn select_bjr(
    instance: &Instance,
    config: &SelectorConfig,
) -> Result<(Selection, AssignmentCertificate)> {
    let matrix = instance.matrix();
    check_k(matrix, config.k)?;
    let out = run_rounds(matrix, config, None)?;
    let selection = Selection::new(
        out.picks,
        Rule::Bjr,
        Some(config.seed),
        RuleParams::lowest_index(),
    )?;
    Ok((selection, AssignmentCertificate::new(out.assignment, out.budgets)))
}

/// The balanced greedy selection with near-duplicate avoidance: whenever a
/// pick has ε-neighbors and a feasibility probe confirms the remaining
/// budgets can be met without them, those neighbors become ineligible for
/// stage-2 picks. With ε = 0 (and all-distinct columns) no opinion has
/// neighbors and the run coincides with [`select_bjr`] exactly.
pub fn select_diverse_bjr(
    instance: &Instance,
    config: &SelectorConfig,
    index: &DistanceIndex,
) -> Result<(Selection, AssignmentCertificate)> {
    let matrix = instance.matrix();
    check_k(matrix, config.k)?;
    check_index(matrix, index)?;
    let out = run_rounds(matrix, config, Some(index))?;
    let params = RuleParams {
        epsilon: Some(index.epsilon()),
        trials: Some(config.trials),
        tie_break: Some("lowest-index".into()),
    };
    let selection = Selection::new(out.picks, Rule::DiverseBjr, Some(config.seed), params)?;
    Ok((selection, AssignmentCertificate::new(out.assignment, out.budgets)))
}

/// Balanced assignment for an externally chosen slate, built with the same
/// round machinery the `bjr` rule uses (budgets in slate order, approvers
/// taken by lowest residual degree, leftovers to the lowest-index opinion
/// with budget to spare). Lets any slate be checked for a blocking group.
pub fn greedy_certificate(
    matrix: &ApprovalMatrix,
    slate: &[usize],
) -> Result<AssignmentCertificate> {
    if slate.is_empty() {
        return Err(Error::KZero);
    }
    for &i in slate {
        if i >= matrix.n_opinions() {
            return Err(Error::OpinionOutOfRange {
                index: i,
                m: matrix.n_opinions(),
            });
        }
    }
    let mut seen = slate.to_vec();
    seen.sort_unstable();
    for w in seen.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateOpinion { index: w[0] });
        }
    }

    let n = matrix.n_users();
    let budgets = budget_schedule(n, slate.len());
    let mut unmatched = vec![true; n];
    let mut selected = vec![false; matrix.n_opinions()];
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    for (t, &pick) in slate.iter().enumerate() {
        selected[pick] = true;
        let takers = takers_by_residual_degree(matrix, &unmatched, &selected, pick, budgets[t]);
        for u in takers {
            unmatched[u] = false;
            assignment[u] = Some(pick);
        }
    }
    let assignment = complete_assignment(assignment, slate, &budgets);
    Ok(AssignmentCertificate::new(assignment, budgets))
}

struct RoundsOutput {
    picks: Vec<usize>,
    budgets: Vec<usize>,
    assignment: Vec<usize>,
}

/// Shared round loop for `bjr` (no index) and `diverse-bjr` (with index).
fn run_rounds(
    matrix: &ApprovalMatrix,
    config: &SelectorConfig,
    diversity: Option<&DistanceIndex>,
) -> Result<RoundsOutput> {
    let n = matrix.n_users();
    let m = matrix.n_opinions();
    let k = config.k;
    let budgets = budget_schedule(n, k);
    let scores = random_scores(m, config.seed);

    let mut unmatched = vec![true; n];
    let mut selected = vec![false; m];
    let mut ineligible = vec![false; m];
    let mut picks = Vec::with_capacity(k);
    let mut assignment: Vec<Option<usize>> = vec![None; n];

    for t in 0..k {
        let r = budgets[t];
        let coverage: Vec<usize> = (0..m)
            .map(|i| {
                if selected[i] {
                    0
                } else {
                    (0..n).filter(|&u| unmatched[u] && matrix.approves(u, i)).count()
                }
            })
            .collect();

        // Stage 1 pool: enough unmatched approvers to fill this round's
        // budget. Ineligibility only constrains stage-2 fallback picks; a
        // near-duplicate that can still cover a full budget stays available.
        let stage1: Vec<usize> = (0..m)
            .filter(|&i| !selected[i] && coverage[i] >= r)
            .collect();

        let pick = if !stage1.is_empty() {
            let top = stage1.iter().map(|&i| coverage[i]).max().unwrap();
            let mut cands: Vec<usize> = stage1.into_iter().filter(|&i| coverage[i] == top).collect();
            if let Some(index) = diversity {
                // Prefer opinions with fewer near-duplicates overall...
                let fewest = cands.iter().map(|&i| index.neighbor_count(i)).min().unwrap();
                cands.retain(|&i| index.neighbor_count(i) == fewest);
                if cands.len() > 1 {
                    // ...then the one whose unmatched approvers depend on it
                    // most: approvers with no alternative among its
                    // neighbors. Counted over unmatched users so that an
                    // opinion without neighbors scores exactly its coverage,
                    // leaving the ε = 0 behavior identical to the plain rule.
                    let unique = |i: usize| {
                        (0..n)
                            .filter(|&u| {
                                unmatched[u]
                                    && matrix.approves(u, i)
                                    && !index.neighbors(i).iter().any(|&j| matrix.approves(u, j))
                            })
                            .count()
                    };
                    let most = cands.iter().map(|&i| unique(i)).max().unwrap();
                    cands.retain(|&i| unique(i) == most);
                }
            }
            *cands.iter().min().unwrap()
        } else {
            // Stage 2: no opinion can fill the budget; fall back to the
            // fixed random scores, skipping ineligible near-duplicates
            // unless that would leave nothing to pick.
            let eligible: Vec<usize> = (0..m)
                .filter(|&i| !selected[i] && !ineligible[i])
                .collect();
            let pool = if eligible.is_empty() {
                (0..m).filter(|&i| !selected[i]).collect()
            } else {
                eligible
            };
            argmax_in(scores.scores(), &pool)
        };

        selected[pick] = true;
        picks.push(pick);
        let takers = takers_by_residual_degree(matrix, &unmatched, &selected, pick, r);
        for &u in &takers {
            unmatched[u] = false;
            assignment[u] = Some(pick);
        }

        // Mark the pick's near-duplicates ineligible, but only after a probe
        // confirms the remaining budgets stay fillable without them.
        if let Some(index) = diversity {
            if t + 1 < k {
                let marks: Vec<usize> = index
                    .neighbors(pick)
                    .iter()
                    .copied()
                    .filter(|&q| !selected[q] && !ineligible[q])
                    .collect();
                if !marks.is_empty() {
                    let pool: Vec<usize> = (0..n).filter(|&u| unmatched[u]).collect();
                    let candidates: Vec<usize> = (0..m)
                        .filter(|&i| !selected[i] && !ineligible[i] && !marks.contains(&i))
                        .collect();
                    let (feasible, _) = bjr_feasible(
                        matrix,
                        &pool,
                        &candidates,
                        &budgets[t + 1..],
                        config.trials,
                        round_seed(config.seed, t),
                    );
                    if feasible {
                        for q in marks {
                            ineligible[q] = true;
                        }
                    }
                }
            }
        }
    }

    let assignment = complete_assignment(assignment, &picks, &budgets);
    Ok(RoundsOutput {
        picks,
        budgets,
        assignment,
    })
}

/// Up to `budget` unmatched approvers of `pick`, preferring users with the
/// fewest approved opinions left outside the current slate (they have the
/// least to lose by being matched now), ties by lowest user index.
fn takers_by_residual_degree(
    matrix: &ApprovalMatrix,
    unmatched: &[bool],
    selected: &[bool],
    pick: usize,
    budget: usize,
) -> Vec<usize> {
    let mut approvers: Vec<(usize, usize)> = (0..matrix.n_users())
        .filter(|&u| unmatched[u] && matrix.approves(u, pick))
        .map(|u| {
            let degree = matrix
                .row(u)
                .iter()
                .enumerate()
                .filter(|&(i, &c)| c == 1 && !selected[i])
                .count();
            (degree, u)
        })
        .collect();
    approvers.sort_unstable();
    approvers.into_iter().take(budget).map(|(_, u)| u).collect()
}

/// Gives every still-unassigned user to the lowest-index picked opinion with
/// budget to spare; budgets sum to `n`, so this always totalizes the map.
fn complete_assignment(
    assignment: Vec<Option<usize>>,
    picks: &[usize],
    budgets: &[usize],
) -> Vec<usize> {
    let mut residual: Vec<usize> = picks
        .iter()
        .zip(budgets)
        .map(|(&p, &b)| b - assignment.iter().filter(|a| **a == Some(p)).count())
        .collect();
    let mut order: Vec<usize> = (0..picks.len()).collect();
    order.sort_by_key(|&t| picks[t]);
    assignment
        .into_iter()
        .map(|a| match a {
            Some(p) => p,
            None => {
                let slot = order
                    .iter()
                    .copied()
                    .find(|&t| residual[t] > 0)
                    .expect("budgets sum to n");
                residual[slot] -= 1;
                picks[slot]
            }
        })
        .collect()
}

fn round_seed(seed: u64, round: usize) -> u64 {
    // Distinct stream per round, disjoint from the score-vector stream.
    seed.wrapping_add((round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// One opinion and the users assigned to it by a feasibility probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleSchedule {
    /// `(opinion, users)` in the order demands were served (largest first).
    pub assignments: Vec<(usize, Vec<usize>)>,
}

/// Probes whether `demands` can each be served by a distinct candidate
/// opinion with that many approvers among `unmatched`, removing the assigned
/// users as it goes. Demands are served largest-first. The first trial picks
/// the fullest candidate and removes low-residual-degree approvers (the same
/// heuristics the selection rounds use); later trials randomize both choices
/// from a ChaCha8 stream keyed by `seed`.
///
/// A `true` answer is constructive — the returned schedule is a witness. A
/// `false` answer only means no trial found a schedule.
pub fn bjr_feasible(
    matrix: &ApprovalMatrix,
    unmatched: &[usize],
    candidates: &[usize],
    demands: &[usize],
    trials: u32,
    seed: u64,
) -> (bool, Option<FeasibleSchedule>) {
    let mut demands = demands.to_vec();
    demands.sort_unstable_by(|a, b| b.cmp(a));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for trial in 0..trials.max(1) {
        let mut pool = unmatched.to_vec();
        let mut avail = candidates.to_vec();
        let mut plan = Vec::with_capacity(demands.len());
        let mut ok = true;

        for &r in &demands {
            let feasible: Vec<usize> = avail
                .iter()
                .copied()
                .filter(|&i| pool.iter().filter(|&&u| matrix.approves(u, i)).count() >= r)
                .collect();
            if feasible.is_empty() {
                ok = false;
                break;
            }
            let pick = if trial == 0 {
                let best = feasible
                    .iter()
                    .map(|&i| pool.iter().filter(|&&u| matrix.approves(u, i)).count())
                    .max()
                    .unwrap();
                feasible
                    .iter()
                    .copied()
                    .filter(|&i| {
                        pool.iter().filter(|&&u| matrix.approves(u, i)).count() == best
                    })
                    .min()
                    .unwrap()
            } else {
                feasible[rng.random_range(0..feasible.len())]
            };
            avail.retain(|&i| i != pick);

            let approvers: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&u| matrix.approves(u, pick))
                .collect();
            let took: Vec<usize> = if trial == 0 {
                let mut ranked: Vec<(usize, usize)> = approvers
                    .iter()
                    .map(|&u| {
                        let degree = avail
                            .iter()
                            .filter(|&&i| matrix.approves(u, i))
                            .count();
                        (degree, u)
                    })
                    .collect();
                ranked.sort_unstable();
                ranked.into_iter().take(r).map(|(_, u)| u).collect()
            } else {
                let mut chosen: Vec<usize> = sample(&mut rng, approvers.len(), r)
                    .into_iter()
                    .map(|idx| approvers[idx])
                    .collect();
                chosen.sort_unstable();
                chosen
            };
            pool.retain(|u| !took.contains(u));
            plan.push((pick, took));
        }

        if ok {
            return (true, Some(FeasibleSchedule { assignments: plan }));
        }
    }
    (false, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupPartition;

    /// Three users, three opinions, approvals overlapping in a chain:
    /// u0 backs only opinion 0, u1 backs 0 and 1, u2 backs 1 and 2.
    fn chain_instance(k: usize) -> Instance {
        let m =
            ApprovalMatrix::from_rows(&[vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        Instance::new("chain", m, k)
    }

    /// Two camps over four opinions: opinions 0/1 are the majority camp's
    /// near-identical pair, 2/3 the minority camp's.
    fn two_camp_instance(k: usize) -> Instance {
        let m = ApprovalMatrix::from_rows(&[
            vec![1, 1, 0, 0],
            vec![1, 1, 0, 0],
            vec![0, 0, 1, 1],
        ])
        .unwrap();
        Instance::new("camps", m, k)
    }

    #[test]
    fn k_bounds_are_checked() {
        let inst = chain_instance(2);
        let cfg = SelectorConfig::new(Rule::Engagement, 4);
        assert!(matches!(
            select_engagement(&inst, &cfg),
            Err(Error::KTooLarge { k: 4, m: 3 })
        ));
        let cfg = SelectorConfig::new(Rule::Engagement, 0);
        assert!(matches!(select_engagement(&inst, &cfg), Err(Error::KZero)));
    }

    #[test]
    fn random_is_seed_deterministic_and_distinct() {
        let inst = chain_instance(2);
        let mut cfg = SelectorConfig::new(Rule::Random, 2);
        cfg.seed = 42;
        let a = select_random(&inst, &cfg).unwrap();
        let b = select_random(&inst, &cfg).unwrap();
        assert_eq!(a.opinions(), b.opinions());
        assert_eq!(a.opinions().len(), 2);
        assert_ne!(a.opinions()[0], a.opinions()[1]);
        assert_eq!(a.seed(), Some(42));
    }

    #[test]
    fn engagement_takes_top_approvals() {
        let inst = chain_instance(2);
        let cfg = SelectorConfig::new(Rule::Engagement, 2);
        let s = select_engagement(&inst, &cfg).unwrap();
        assert_eq!(s.opinions(), &[0, 1]);
    }

    #[test]
    fn bridging_needs_groups_and_maximizes_cga() {
        let inst = chain_instance(1);
        let cfg = SelectorConfig::new(Rule::Bridging, 1);
        assert!(matches!(
            select_bridging(&inst, &cfg),
            Err(Error::MissingPartition { .. })
        ));
        let inst = inst.with_groups(GroupPartition::new(vec![vec![0, 1], vec![2]], None).unwrap());
        let s = select_bridging(&inst, &cfg).unwrap();
        assert_eq!(s.opinions(), &[1]); // only opinion 1 has backing in both groups
    }

    #[test]
    fn diversity_avoids_duplicates() {
        // Opinions 0 and 1 are exact duplicates, 2 is far from both.
        let m = ApprovalMatrix::from_rows(&[
            vec![1, 1, 0],
            vec![1, 1, 0],
            vec![0, 0, 1],
            vec![0, 0, 1],
        ])
        .unwrap();
        let inst = Instance::new("dups", m, 2);
        let cfg = SelectorConfig::new(Rule::Diversity, 2);
        let index = DistanceIndex::build(inst.matrix(), cfg.epsilon);
        let s = select_diversity(&inst, &cfg, &index).unwrap();
        let picked_dups = s.opinions().iter().filter(|&&i| i < 2).count();
        assert_eq!(picked_dups, 1);
        assert!(s.opinions().contains(&2));
    }

    #[test]
    fn jr_takes_unanimous_opinion_at_k1() {
        let m = ApprovalMatrix::from_rows(&[vec![0, 1, 0], vec![0, 1, 0], vec![1, 1, 0]]).unwrap();
        let inst = Instance::new("unanimous", m, 1);
        let cfg = SelectorConfig::new(Rule::Jr, 1);
        let s = select_jr(&inst, &cfg).unwrap();
        assert_eq!(s.opinions(), &[1]);
    }

    #[test]
    fn jr_covers_both_camps() {
        let inst = two_camp_instance(3);
        for seed in 0..10 {
            let mut cfg = SelectorConfig::new(Rule::Jr, 3);
            cfg.seed = seed;
            let s = select_jr(&inst, &cfg).unwrap();
            assert!(s.opinions().contains(&0), "seed {seed}: {:?}", s.opinions());
            assert!(s.opinions().contains(&2), "seed {seed}: {:?}", s.opinions());
        }
    }

    #[test]
    fn bjr_on_chain_keeps_popular_pair() {
        let inst = chain_instance(2);
        let cfg = SelectorConfig::new(Rule::Bjr, 2);
        let (s, cert) = select_bjr(&inst, &cfg).unwrap();
        // Round 1: opinions 0 and 1 tie on two approvers, lowest index wins
        // and takes u0 and u1. Round 2: opinions 1 and 2 tie on u2's
        // approval, lowest index wins again.
        assert_eq!(s.opinions(), &[0, 1]);
        assert_eq!(cert.budgets(), &[2, 1]);
        assert_eq!(cert.assignment(), &[0, 0, 1]);
    }

    #[test]
    fn bjr_unanimous_divisible_case() {
        let m = ApprovalMatrix::from_rows(&[
            vec![0, 1, 0, 0],
            vec![0, 1, 0, 1],
            vec![1, 1, 0, 0],
            vec![0, 1, 1, 0],
        ])
        .unwrap();
        let inst = Instance::new("u", m, 2);
        let cfg = SelectorConfig::new(Rule::Bjr, 2);
        let (s, cert) = select_bjr(&inst, &cfg).unwrap();
        assert_eq!(cert.budgets(), &[2, 2]);
        assert_eq!(s.opinions()[0], 1); // unanimous opinion goes first
        assert_eq!(
            cert.assignment().iter().filter(|&&p| p == 1).count(),
            2
        );
    }

    #[test]
    fn diverse_bjr_swerves_to_the_distinct_opinion() {
        let inst = chain_instance(2);
        let mut cfg = SelectorConfig::new(Rule::DiverseBjr, 2);
        cfg.epsilon = 0.7;
        let index = DistanceIndex::build(inst.matrix(), cfg.epsilon);
        let (s, cert) = select_diverse_bjr(&inst, &cfg, &index).unwrap();
        // Round 1: 0 and 1 tie on coverage; 0 has one near-duplicate, 1 has
        // two, so 0 wins and takes u0, u1. Round 2: 1 and 2 tie on u2; 2 has
        // fewer near-duplicates.
        assert_eq!(s.opinions(), &[0, 2]);
        assert_eq!(cert.budgets(), &[2, 1]);
        assert_eq!(cert.assignment(), &[0, 0, 2]);
        assert_eq!(s.params().epsilon, Some(0.7));
    }

    #[test]
    fn diverse_bjr_k1_matches_bjr_round_one() {
        let inst = chain_instance(1);
        let mut cfg = SelectorConfig::new(Rule::DiverseBjr, 1);
        cfg.epsilon = 0.7;
        let index = DistanceIndex::build(inst.matrix(), cfg.epsilon);
        let (s, _) = select_diverse_bjr(&inst, &cfg, &index).unwrap();
        let (b, _) = select_bjr(&inst, &SelectorConfig::new(Rule::Bjr, 1)).unwrap();
        assert_eq!(s.opinions(), b.opinions());
    }

    #[test]
    fn diverse_bjr_at_epsilon_zero_matches_bjr() {
        // All columns distinct, several seeds: with no ε-neighbors anywhere
        // the diversity machinery must be inert.
        let m = ApprovalMatrix::from_rows(&[
            vec![1, 0, 0, 1, 1],
            vec![1, 1, 0, 0, 1],
            vec![0, 1, 1, 0, 1],
            vec![0, 0, 1, 1, 0],
            vec![1, 0, 1, 0, 1],
        ])
        .unwrap();
        let inst = Instance::new("distinct", m, 3);
        let index = DistanceIndex::build(inst.matrix(), 0.0);
        for seed in 0..20 {
            for k in 1..=4 {
                let mut cfg = SelectorConfig::new(Rule::DiverseBjr, k);
                cfg.seed = seed;
                cfg.epsilon = 0.0;
                let (d, _) = select_diverse_bjr(&inst, &cfg, &index).unwrap();
                let mut bcfg = SelectorConfig::new(Rule::Bjr, k);
                bcfg.seed = seed;
                let (b, _) = select_bjr(&inst, &bcfg).unwrap();
                assert_eq!(d.opinions(), b.opinions(), "k={k} seed={seed}");
            }
        }
    }

    #[test]
    fn certificates_are_balanced_on_random_instances() {
        use rand::RngCore;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..50 {
            let n = 2 + (rng.next_u64() % 9) as usize;
            let m = 2 + (rng.next_u64() % 7) as usize;
            let cells: Vec<u8> = (0..n * m).map(|_| (rng.next_u64() % 2) as u8).collect();
            let inst = Instance::new("r", ApprovalMatrix::new(n, m, cells).unwrap(), 1);
            let k = 1 + (rng.next_u64() as usize) % m.min(4);
            let mut cfg = SelectorConfig::new(Rule::Bjr, k);
            cfg.seed = trial;
            let (s, cert) = select_bjr(&inst, &cfg).unwrap();
            let floor = n / k;
            assert_eq!(cert.budgets().iter().sum::<usize>(), n);
            assert_eq!(cert.assignment().len(), n);
            for (t, &p) in s.opinions().iter().enumerate() {
                let assigned = cert.assignment().iter().filter(|&&q| q == p).count();
                assert_eq!(assigned, cert.budgets()[t]);
                assert!(cert.budgets()[t] == floor || cert.budgets()[t] == floor + 1);
            }
        }
    }

    #[test]
    fn greedy_certificate_for_fixed_slate() {
        let inst = chain_instance(2);
        let cert = greedy_certificate(inst.matrix(), &[0, 2]).unwrap();
        // u0 has only opinion 0 left once it's selected, so it ranks before
        // u1; both fit in the round-1 budget. u2 is the only approver of 2.
        assert_eq!(cert.budgets(), &[2, 1]);
        assert_eq!(cert.assignment(), &[0, 0, 2]);
        assert!(greedy_certificate(inst.matrix(), &[0, 0]).is_err());
        assert!(greedy_certificate(inst.matrix(), &[0, 9]).is_err());
    }

    #[test]
    fn greedy_certificate_completion_handles_non_approvers() {
        // u2 approves nothing in the slate and must still be assigned.
        let m = ApprovalMatrix::from_rows(&[vec![1, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let cert = greedy_certificate(&m, &[0]).unwrap();
        assert_eq!(cert.assignment(), &[0, 0, 0]);
        assert_eq!(cert.budgets(), &[3]);
    }

    #[test]
    fn feasibility_probe_finds_obvious_schedules() {
        let inst = chain_instance(2);
        let m = inst.matrix();
        let (ok, plan) = bjr_feasible(m, &[2], &[2], &[1], 5, 0);
        assert!(ok);
        assert_eq!(
            plan.unwrap().assignments,
            vec![(2, vec![2])]
        );
        // Opinion 0 has no approver among {u2}.
        let (ok, plan) = bjr_feasible(m, &[2], &[0], &[1], 5, 0);
        assert!(!ok);
        assert!(plan.is_none());
        // No demands left: trivially feasible.
        let (ok, _) = bjr_feasible(m, &[0, 1, 2], &[0, 1, 2], &[], 5, 0);
        assert!(ok);
    }

    #[test]
    fn feasibility_probe_serves_largest_demand_first() {
        // Opinion 1 is approved only by u2. Serving the demand list [1, 2]
        // in the given order would hand u2 (or u0) to opinion 0 first and
        // strand the demand of 2; sorting demands descending finds the
        // schedule (0 -> {u0, u1}, 1 -> {u2}).
        let m = ApprovalMatrix::from_rows(&[vec![1, 0], vec![1, 0], vec![1, 1]]).unwrap();
        let (ok, plan) = bjr_feasible(&m, &[0, 1, 2], &[0, 1], &[1, 2], 5, 0);
        assert!(ok);
        let plan = plan.unwrap();
        assert_eq!(plan.assignments[0], (0, vec![0, 1]));
        assert_eq!(plan.assignments[1], (1, vec![2]));
    }

    #[test]
    fn feasibility_probe_is_deterministic_per_seed() {
        let m = ApprovalMatrix::from_rows(&[
            vec![1, 1, 0, 0],
            vec![1, 0, 1, 0],
            vec![0, 1, 1, 1],
            vec![1, 1, 0, 1],
            vec![0, 0, 1, 1],
        ])
        .unwrap();
        let users: Vec<usize> = (0..5).collect();
        let cands: Vec<usize> = (0..4).collect();
        let a = bjr_feasible(&m, &users, &cands, &[2, 2, 1], 5, 123);
        let b = bjr_feasible(&m, &users, &cands, &[2, 2, 1], 5, 123);
        assert_eq!(a.0, b.0);
        assert_eq!(
            a.1.as_ref().map(|p| &p.assignments),
            b.1.as_ref().map(|p| &p.assignments)
        );
    }

    #[test]
    fn dispatcher_covers_every_rule() {
        let inst = chain_instance(2)
            .with_groups(GroupPartition::new(vec![vec![0, 1], vec![2]], None).unwrap());
        for rule in Rule::SELECTABLE {
            let mut cfg = SelectorConfig::new(rule, 2);
            cfg.epsilon = 0.7;
            let out = select(&inst, &cfg).unwrap();
            assert_eq!(out.selection.opinions().len(), 2);
            assert_eq!(out.selection.rule(), rule);
            let has_cert = matches!(rule, Rule::Bjr | Rule::DiverseBjr);
            assert_eq!(out.certificate.is_some(), has_cert);
        }
        assert!(select(&inst, &SelectorConfig::new(Rule::Manual, 2)).is_err());
    }
}
