//! Core data model: approval matrices, group partitions, instances, and the
//! records produced by selection (selections, assignment certificates).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary approval matrix over `n_users` rows and `n_opinions` columns,
/// stored row-major.
///
/// Cell `(u, i)` is 1 when user `u` approves opinion `i`, 0 otherwise. The
/// constructor only enforces the shape; cell values are diagnosed by
/// [`crate::data_io::validate_instance`] so that malformed hand-built data can
/// be reported instead of rejected at construction. Everything downstream
/// treats a cell as approval iff it equals 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApprovalMatrix {
    n_users: usize,
    n_opinions: usize,
    cells: Vec<u8>,
}

impl ApprovalMatrix {
    pub fn new(n_users: usize, n_opinions: usize, cells: Vec<u8>) -> Result<Self> {
        if n_users == 0 || n_opinions == 0 {
            return Err(Error::Config(
                "matrix must have at least one user and one opinion".into(),
            ));
        }
        let expected = n_users * n_opinions;
        if cells.len() != expected {
            return Err(Error::CellLength {
                got: cells.len(),
                expected,
                n: n_users,
                m: n_opinions,
            });
        }
        Ok(ApprovalMatrix {
            n_users,
            n_opinions,
            cells,
        })
    }

    /// Builds a matrix from per-user rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("matrix must have at least one user".into()));
        }
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Config("all rows must have the same length".into()));
        }
        let cells = rows.iter().flatten().copied().collect();
        ApprovalMatrix::new(rows.len(), m, cells)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_opinions(&self) -> usize {
        self.n_opinions
    }

    /// Raw row-major cell buffer.
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cell(&self, user: usize, opinion: usize) -> u8 {
        self.cells[user * self.n_opinions + opinion]
    }

    pub fn approves(&self, user: usize, opinion: usize) -> bool {
        self.cell(user, opinion) == 1
    }

    pub fn row(&self, user: usize) -> &[u8] {
        &self.cells[user * self.n_opinions..(user + 1) * self.n_opinions]
    }

    /// Users approving `opinion`, in ascending user order.
    pub fn approvers(&self, opinion: usize) -> Vec<usize> {
        (0..self.n_users)
            .filter(|&u| self.approves(u, opinion))
            .collect()
    }

    pub fn approval_count(&self, opinion: usize) -> usize {
        (0..self.n_users)
            .filter(|&u| self.approves(u, opinion))
            .count()
    }

    /// Opinions approved by `user`, in ascending opinion order.
    pub fn approved_by(&self, user: usize) -> Vec<usize> {
        self.row(user)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1)
            .map(|(i, _)| i)
            .collect()
    }

    /// True when `user` approves at least one opinion in `slate`.
    pub fn approves_any(&self, user: usize, slate: &[usize]) -> bool {
        slate.iter().any(|&i| self.approves(user, i))
    }

    /// Positions of cells that are neither 0 nor 1.
    pub fn non_binary_cells(&self) -> Vec<(usize, usize, u8)> {
        let mut out = Vec::new();
        for u in 0..self.n_users {
            for i in 0..self.n_opinions {
                let v = self.cell(u, i);
                if v > 1 {
                    out.push((u, i, v));
                }
            }
        }
        out
    }
}

/// Partition of users into labelled groups, stored as explicit member sets so
/// that malformed partitions (overlaps, uncovered users) can be represented
/// and diagnosed rather than silently repaired.
///
/// Serialized as `{"names": [...], "members": [[...], ...]}`; omitted or null
/// names are auto-generated on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionData")]
pub struct GroupPartition {
    names: Vec<String>,
    members: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct PartitionData {
    #[serde(default)]
    names: Option<Vec<String>>,
    members: Vec<Vec<usize>>,
}

impl TryFrom<PartitionData> for GroupPartition {
    type Error = Error;

    fn try_from(data: PartitionData) -> Result<Self> {
        GroupPartition::new(data.members, data.names)
    }
}

impl GroupPartition {
    /// `names` must match `members` in length; pass `None` to auto-name the
    /// groups `group-0`, `group-1`, ... Member lists are sorted and
    /// de-duplicated within each group.
    pub fn new(members: Vec<Vec<usize>>, names: Option<Vec<String>>) -> Result<Self> {
        let names = match names {
            Some(names) => {
                if names.len() != members.len() {
                    return Err(Error::Config(format!(
                        "{} group names for {} groups",
                        names.len(),
                        members.len()
                    )));
                }
                names
            }
            None => (0..members.len()).map(|g| format!("group-{g}")).collect(),
        };
        let members = members
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g.dedup();
                g
            })
            .collect();
        Ok(GroupPartition { names, members })
    }

    /// Groups users by label, in order of first appearance.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut names: Vec<String> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (u, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            match names.iter().position(|n| n == label) {
                Some(g) => members[g].push(u),
                None => {
                    names.push(label.to_string());
                    members.push(vec![u]);
                }
            }
        }
        GroupPartition { names, members }
    }

    pub fn n_groups(&self) -> usize {
        self.members.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn group(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    /// First group containing `user`, if any.
    pub fn group_of(&self, user: usize) -> Option<usize> {
        self.members.iter().position(|g| g.binary_search(&user).is_ok())
    }
}

/// A question: approval matrix plus default subset size and optional
/// side information (group partition, opinion texts).
///
/// The constructor is deliberately permissive — `k` out of range or a broken
/// partition are reported by [`crate::data_io::validate_instance`], which lets
/// the CLI diagnose bad files instead of refusing to load them.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    question_id: String,
    matrix: ApprovalMatrix,
    k: usize,
    groups: Option<GroupPartition>,
    opinion_texts: Option<Vec<String>>,
}

impl Instance {
    pub fn new(question_id: impl Into<String>, matrix: ApprovalMatrix, k: usize) -> Self {
        Instance {
            question_id: question_id.into(),
            matrix,
            k,
            groups: None,
            opinion_texts: None,
        }
    }

    pub fn with_groups(mut self, groups: GroupPartition) -> Self {
        self.groups = Some(groups);
        self
    }

    pub fn with_texts(mut self, texts: Vec<String>) -> Self {
        self.opinion_texts = Some(texts);
        self
    }

    pub fn question_id(&self) -> &str {
        &self.question_id
    }

    pub fn matrix(&self) -> &ApprovalMatrix {
        &self.matrix
    }

    /// Default subset size for this question; selectors take their own `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn groups(&self) -> Option<&GroupPartition> {
        self.groups.as_ref()
    }

    pub fn opinion_texts(&self) -> Option<&[String]> {
        self.opinion_texts.as_deref()
    }

    pub fn n_users(&self) -> usize {
        self.matrix.n_users()
    }

    pub fn n_opinions(&self) -> usize {
        self.matrix.n_opinions()
    }
}

/// Selection rules exposed by the library.
///
/// `Manual` tags slates supplied from outside (e.g. `verify --slate 0,2`) and
/// is not accepted by the selector dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Random,
    Engagement,
    Bridging,
    Diversity,
    Jr,
    Bjr,
    #[serde(alias = "diverse_bjr")]
    DiverseBjr,
    Manual,
}

impl Rule {
    /// Rules the selector dispatch accepts, in canonical order.
    pub const SELECTABLE: [Rule; 7] = [
        Rule::Random,
        Rule::Engagement,
        Rule::Bridging,
        Rule::Diversity,
        Rule::Jr,
        Rule::Bjr,
        Rule::DiverseBjr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::Random => "random",
            Rule::Engagement => "engagement",
            Rule::Bridging => "bridging",
            Rule::Diversity => "diversity",
            Rule::Jr => "jr",
            Rule::Bjr => "bjr",
            Rule::DiverseBjr => "diverse-bjr",
            Rule::Manual => "manual",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Rule::Random),
            "engagement" => Ok(Rule::Engagement),
            "bridging" => Ok(Rule::Bridging),
            "diversity" => Ok(Rule::Diversity),
            "jr" => Ok(Rule::Jr),
            "bjr" => Ok(Rule::Bjr),
            "diverse-bjr" | "diverse_bjr" => Ok(Rule::DiverseBjr),
            "manual" => Ok(Rule::Manual),
            other => Err(Error::UnknownRule(other.to_string())),
        }
    }
}

/// Parameters a selection was produced with, recorded for reproducibility.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RuleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_break: Option<String>,
}

impl RuleParams {
    pub(crate) fn lowest_index() -> Self {
        RuleParams {
            tie_break: Some("lowest-index".into()),
            ..RuleParams::default()
        }
    }
}

/// Result of running a selection rule: an ordered list of distinct opinion
/// indices plus the rule identity, seed, and parameters that produced it.
///
/// The order is the pick order of the producing rule (score order for the
/// score-based rules).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    opinions: Vec<usize>,
    rule: Rule,
    seed: Option<u64>,
    params: RuleParams,
}

impl Selection {
    pub fn new(
        opinions: Vec<usize>,
        rule: Rule,
        seed: Option<u64>,
        params: RuleParams,
    ) -> Result<Self> {
        let mut seen = opinions.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateOpinion { index: w[0] });
            }
        }
        Ok(Selection {
            opinions,
            rule,
            seed,
            params,
        })
    }

    /// Wraps an externally supplied slate (CLI `--slate`, FFI callers).
    pub fn manual(opinions: Vec<usize>) -> Result<Self> {
        Selection::new(opinions, Rule::Manual, None, RuleParams::default())
    }

    pub fn opinions(&self) -> &[usize] {
        &self.opinions
    }

    pub fn k(&self) -> usize {
        self.opinions.len()
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn params(&self) -> &RuleParams {
        &self.params
    }

    pub fn contains(&self, opinion: usize) -> bool {
        self.opinions.contains(&opinion)
    }

    /// Errors if any index is out of range for `matrix`.
    pub fn check_in_range(&self, matrix: &ApprovalMatrix) -> Result<()> {
        for &i in &self.opinions {
            if i >= matrix.n_opinions() {
                return Err(Error::OpinionOutOfRange {
                    index: i,
                    m: matrix.n_opinions(),
                });
            }
        }
        Ok(())
    }
}

/// Balanced user-to-opinion assignment backing a selection.
///
/// `assignment[u]` is the opinion index user `u` is mapped to; `budgets[t]`
/// is the assigned-count budget of the `t`-th opinion in the selection's
/// pick order. Structural soundness is re-checked by
/// [`crate::verify::check_bjr_certificate`], never assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentCertificate {
    assignment: Vec<usize>,
    budgets: Vec<usize>,
}

impl AssignmentCertificate {
    pub fn new(assignment: Vec<usize>, budgets: Vec<usize>) -> Self {
        AssignmentCertificate {
            assignment,
            budgets,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn budgets(&self) -> &[usize] {
        &self.budgets
    }

    pub fn assigned_to(&self, opinion: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == opinion)
            .map(|(u, _)| u)
            .collect()
    }
}

/// Per-round assignment budgets for `k` rounds over `n` users: the first
/// `n mod k` rounds get `ceil(n/k)`, the rest `floor(n/k)`; they sum to `n`.
pub fn budget_schedule(n_users: usize, k: usize) -> Vec<usize> {
    let floor = n_users / k;
    let rem = n_users % k;
    (0..k)
        .map(|t| if t < rem { floor + 1 } else { floor })
        .collect()
}
