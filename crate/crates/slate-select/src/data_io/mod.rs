//! Reading, writing, validating, and producing instances.
//!
//! The canonical on-disk form is a JSON object:
//!
//! ```json
//! {
//!   "question_id": "q1",
//!   "n": 3,
//!   "m": 3,
//!   "k_default": 2,
//!   "cells": [1, 0, 0, 1, 1, 0, 0, 1, 1],
//!   "groups": {"names": ["left", "right"], "members": [[0, 1], [2]]},
//!   "opinion_texts": null
//! }
//! ```
//!
//! `cells` is either the row-major bit array shown above or a per-opinion
//! list of approving users (`[[0, 1], [1, 2], [2]]`); files are always
//! written dense. `groups` and `opinion_texts` are nullable.

mod adapter;
mod fetch;
mod synthetic;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use adapter::{
    load_adapter_config, load_likert_votes, load_probability_votes, AdapterConfig, MissingPair,
    DEFAULT_APPROVAL_THRESHOLD, LEANING_LABELS, LIKERT_APPROVE, LIKERT_REJECT,
};
pub use fetch::{
    fetch_all, fetch_file, load_manifest, sha256_hex, verify_checksum, DatasetManifest,
    FetchOutcome, ManifestFile,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::error::{Error, Result};
use crate::metrics::unrepresented_overall;
use crate::model::{ApprovalMatrix, GroupPartition, Instance, Rule};
use crate::selectors::{select_random, SelectorConfig};

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    question_id: String,
    n: usize,
    m: usize,
    k_default: usize,
    cells: CellsRepr,
    #[serde(default)]
    groups: Option<GroupPartition>,
    #[serde(default)]
    opinion_texts: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CellsRepr {
    Dense(Vec<u8>),
    ApproverLists(Vec<Vec<usize>>),
}

/// Serializes an instance in the canonical JSON form (pretty-printed, dense
/// cells, trailing newline).
pub fn instance_to_json(instance: &Instance) -> String {
    let doc = InstanceJson {
        question_id: instance.question_id().to_string(),
        n: instance.n_users(),
        m: instance.n_opinions(),
        k_default: instance.k(),
        cells: CellsRepr::Dense(instance.matrix().cells().to_vec()),
        groups: instance.groups().cloned(),
        opinion_texts: instance.opinion_texts().map(|t| t.to_vec()),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance serializes");
    out.push('\n');
    out
}

/// Parses the canonical JSON form. Shape problems (cell count vs. `n`/`m`)
/// are hard errors; content problems (`k_default` out of range, broken
/// partitions) are left to [`validate_instance`] so they can be diagnosed.
pub fn instance_from_json(text: &str) -> Result<Instance> {
    let doc: InstanceJson = serde_json::from_str(text)?;
    let cells = match doc.cells {
        CellsRepr::Dense(cells) => cells,
        CellsRepr::ApproverLists(lists) => {
            if lists.len() != doc.m {
                return Err(Error::Config(format!(
                    "{} approver lists for m = {}",
                    lists.len(),
                    doc.m
                )));
            }
            let mut cells = vec![0u8; doc.n * doc.m];
            for (opinion, users) in lists.iter().enumerate() {
                for &u in users {
                    if u >= doc.n {
                        return Err(Error::UserOutOfRange {
                            index: u,
                            n: doc.n,
                        });
                    }
                    cells[u * doc.m + opinion] = 1;
                }
            }
            cells
        }
    };
    let matrix = ApprovalMatrix::new(doc.n, doc.m, cells)?;
    let mut instance = Instance::new(doc.question_id, matrix, doc.k_default);
    if let Some(groups) = doc.groups {
        instance = instance.with_groups(groups);
    }
    if let Some(texts) = doc.opinion_texts {
        instance = instance.with_texts(texts);
    }
    Ok(instance)
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_json(instance))?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(path, format!("cannot read: {e}")))?;
    instance_from_json(&text).map_err(|e| match e {
        Error::Json(inner) => Error::data(path, format!("invalid instance JSON: {inner}")),
        other => other,
    })
}

/// One broken invariant found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    NonBinaryCell { user: usize, opinion: usize, value: u8 },
    KOutOfRange { k: usize, m: usize },
    GroupUserOutOfRange { group: usize, user: usize },
    GroupOverlap { user: usize },
    UncoveredUser { user: usize },
    EmptyGroup { group: usize },
    TextCountMismatch { expected: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonBinaryCell {
                user,
                opinion,
                value,
            } => write!(f, "non-binary cell at user {user}, opinion {opinion}: {value}"),
            Violation::KOutOfRange { k, m } => write!(f, "k out of range: k = {k}, m = {m}"),
            Violation::GroupUserOutOfRange { group, user } => {
                write!(f, "group {group} references unknown user {user}")
            }
            Violation::GroupOverlap { user } => {
                write!(f, "overlap: user {user} appears in more than one group")
            }
            Violation::UncoveredUser { user } => write!(f, "uncovered user {user}"),
            Violation::EmptyGroup { group } => write!(f, "group {group} is empty"),
            Violation::TextCountMismatch { expected, actual } => {
                write!(f, "{actual} opinion texts for {expected} opinions")
            }
        }
    }
}

/// Everything [`validate_instance`] found; empty means the instance honours
/// all invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Diagnoses an instance: binary cells, `1 <= k <= m`, the partition (if
/// any) covering every user exactly once with no empty groups, and the text
/// count matching the opinion count. Returns findings rather than failing.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    let matrix = instance.matrix();

    for (user, opinion, value) in matrix.non_binary_cells() {
        violations.push(Violation::NonBinaryCell {
            user,
            opinion,
            value,
        });
    }
    if instance.k() == 0 || instance.k() > matrix.n_opinions() {
        violations.push(Violation::KOutOfRange {
            k: instance.k(),
            m: matrix.n_opinions(),
        });
    }
    if let Some(groups) = instance.groups() {
        let mut membership = vec![0usize; matrix.n_users()];
        for (g, members) in groups.members().iter().enumerate() {
            if members.is_empty() {
                violations.push(Violation::EmptyGroup { group: g });
            }
            for &u in members {
                if u >= matrix.n_users() {
                    violations.push(Violation::GroupUserOutOfRange { group: g, user: u });
                } else {
                    membership[u] += 1;
                }
            }
        }
        for (u, &count) in membership.iter().enumerate() {
            if count == 0 {
                violations.push(Violation::UncoveredUser { user: u });
            } else if count > 1 {
                violations.push(Violation::GroupOverlap { user: u });
            }
        }
    }
    if let Some(texts) = instance.opinion_texts() {
        if texts.len() != matrix.n_opinions() {
            violations.push(Violation::TextCountMismatch {
                expected: matrix.n_opinions(),
                actual: texts.len(),
            });
        }
    }
    ValidationReport { violations }
}

/// Subset size used by [`classify_question`].
pub const CLASSIFY_K: usize = 5;
/// Default number of random slates averaged by [`classify_question`].
pub const DEFAULT_CLASSIFY_SEEDS: u32 = 100;
/// Mean unrepresentation at or below this is a consensual question.
pub const CONSENSUAL_MAX: f64 = 5.0;
/// Mean unrepresentation at or above this is a controversial question.
pub const CONTROVERSIAL_MIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitLabel {
    Consensual,
    Controversial,
    Neither,
}

/// How a question behaves under small random slates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionSplit {
    pub label: SplitLabel,
    /// Mean unrepresented percentage over the sampled slates.
    pub mean_unrepresented: f64,
    pub k: usize,
    pub n_seeds: u32,
}

/// Averages the unrepresented percentage over `n_seeds` random slates of
/// size 5 (seeds `0..n_seeds`) and labels the question consensual
/// (mean <= 5), controversial (mean >= 20, e.g. a question nobody's slate
/// can cover), or neither. Both thresholds are inclusive.
pub fn classify_question(instance: &Instance, n_seeds: u32) -> Result<QuestionSplit> {
    if n_seeds == 0 {
        return Err(Error::Config("classification needs at least one seed".into()));
    }
    if instance.n_opinions() < CLASSIFY_K {
        return Err(Error::KTooLarge {
            k: CLASSIFY_K,
            m: instance.n_opinions(),
        });
    }
    let mut total = 0.0;
    for seed in 0..n_seeds {
        let mut cfg = SelectorConfig::new(Rule::Random, CLASSIFY_K);
        cfg.seed = seed as u64;
        let selection = select_random(instance, &cfg)?;
        total += unrepresented_overall(instance.matrix(), &selection)?;
    }
    let mean = total / n_seeds as f64;
    let label = if mean <= CONSENSUAL_MAX {
        SplitLabel::Consensual
    } else if mean >= CONTROVERSIAL_MIN {
        SplitLabel::Controversial
    } else {
        SplitLabel::Neither
    };
    Ok(QuestionSplit {
        label,
        mean_unrepresented: mean,
        k: CLASSIFY_K,
        n_seeds,
    })
}
