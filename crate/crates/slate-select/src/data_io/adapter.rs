//! CSV ingestion for the two supported vote formats, with a configurable
//! column mapping so repository-specific headers stay configuration rather
//! than code.
//!
//! *Probability votes*: long-form rows of (question?, user, opinion, value)
//! with `value` a probability in [0, 1], thresholded into approvals.
//! Optional sidecars add opinion texts (used to drop empty/duplicate
//! opinions) and per-user political-leaning labels (turned into a group
//! partition).
//!
//! *Likert votes*: long-form rows of (group, user, opinion, label) with a
//! 7-point agreement label; groups of exactly five users and five opinions
//! become independent 5x5 instances.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ApprovalMatrix, GroupPartition, Instance};

/// Values at or above the threshold count as approval; the default matches
/// the midpoint convention used throughout.
pub const DEFAULT_APPROVAL_THRESHOLD: f64 = 0.5;

/// The recognized political-leaning labels, in canonical group order.
pub const LEANING_LABELS: [&str; 5] = [
    "Moderate",
    "Slightly conservative",
    "Very conservative",
    "Slightly liberal",
    "Very liberal",
];

/// Likert labels mapped to approval.
pub const LIKERT_APPROVE: [&str; 3] = ["SOMEWHAT_AGREE", "AGREE", "STRONGLY_AGREE"];
/// Likert labels mapped to non-approval.
pub const LIKERT_REJECT: [&str; 4] = [
    "STRONGLY_DISAGREE",
    "DISAGREE",
    "SOMEWHAT_DISAGREE",
    "NEUTRAL",
];

/// What to do when a (user, opinion) pair never appears in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPair {
    /// Treat the missing pair as an explicit non-approval.
    Zero,
    /// Reject the file.
    Error,
}

/// Column-name mapping from a concrete CSV layout to the fields the loaders
/// need. Field defaults match the documented layouts; override any of them
/// via a JSON config file (see [`load_adapter_config`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterConfig {
    /// Column splitting a multi-question file; `None` reads the whole file
    /// as one question named after the file stem.
    pub question_col: Option<String>,
    pub user_col: String,
    pub opinion_col: String,
    pub value_col: String,
    /// Group column for the Likert format.
    pub group_col: String,
    /// Text column in the opinion-texts sidecar.
    pub text_col: String,
    /// Label column in the user-attributes sidecar.
    pub attribute_col: String,
    pub missing_pair: MissingPair,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            question_col: None,
            user_col: "user_id".into(),
            opinion_col: "opinion_id".into(),
            value_col: "value".into(),
            group_col: "group_id".into(),
            text_col: "text".into(),
            attribute_col: "political_leaning".into(),
            missing_pair: MissingPair::Zero,
        }
    }
}

pub fn load_adapter_config(path: &Path) -> Result<AdapterConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(path, format!("cannot read: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::data(path, format!("invalid adapter config: {e}")))
}

/// Keeps first-appearance order while interning string keys.
struct KeyOrder {
    order: Vec<String>,
    index: HashMap<String, usize>,
}

impl KeyOrder {
    fn new() -> Self {
        KeyOrder {
            order: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, key: &str) -> usize {
        match self.index.get(key) {
            Some(&i) => i,
            None => {
                let i = self.order.len();
                self.order.push(key.to_string());
                self.index.insert(key.to_string(), i);
                i
            }
        }
    }

    fn len(&self) -> usize {
        self.order.len()
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(path, format!("cannot open: {e}")))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::data(
            path,
            format!(
                "column `{name}` not found (headers: {})",
                headers.iter().collect::<Vec<_>>().join(", ")
            ),
        )
    })
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "question".into())
}

/// Accumulates one question's long-form votes before matrix assembly.
struct QuestionVotes {
    users: KeyOrder,
    opinions: KeyOrder,
    /// (user, opinion) -> cell value; duplicates are data errors.
    votes: HashMap<(usize, usize), u8>,
}

impl QuestionVotes {
    fn new() -> Self {
        QuestionVotes {
            users: KeyOrder::new(),
            opinions: KeyOrder::new(),
            votes: HashMap::new(),
        }
    }

    fn record(&mut self, user: &str, opinion: &str, cell: u8, line: u64, path: &Path) -> Result<()> {
        let u = self.users.intern(user);
        let o = self.opinions.intern(opinion);
        if self.votes.insert((u, o), cell).is_some() {
            return Err(Error::data(
                path,
                format!("line {line}: duplicate vote by `{user}` on `{opinion}`"),
            ));
        }
        Ok(())
    }

    /// Builds the matrix over the given opinion subset (columns in subset
    /// order).
    fn matrix(
        &self,
        keep_opinions: &[usize],
        missing: MissingPair,
        path: &Path,
    ) -> Result<ApprovalMatrix> {
        let n = self.users.len();
        let m = keep_opinions.len();
        let mut cells = vec![0u8; n * m];
        for u in 0..n {
            for (col, &o) in keep_opinions.iter().enumerate() {
                match self.votes.get(&(u, o)) {
                    Some(&v) => cells[u * m + col] = v,
                    None => {
                        if missing == MissingPair::Error {
                            return Err(Error::data(
                                path,
                                format!(
                                    "no vote by `{}` on `{}`",
                                    self.users.order[u], self.opinions.order[o]
                                ),
                            ));
                        }
                    }
                }
            }
        }
        ApprovalMatrix::new(n, m, cells)
    }
}

/// Loads probability-vote CSVs: one instance per question (or a single
/// instance when no question column is configured).
///
/// - `value` must parse as a probability in [0, 1]; a cell approves iff
///   `value >= threshold` (inclusive).
/// - With a texts sidecar, opinions whose text is missing, empty after
///   trimming, or a duplicate of an earlier opinion's text are dropped
///   before matrix construction.
/// - With an attributes sidecar, users get a partition by leaning label;
///   labels outside [`LEANING_LABELS`] and users without a label are data
///   errors. Groups follow the canonical label order, empty ones dropped.
pub fn load_probability_votes(
    votes_path: &Path,
    texts_path: Option<&Path>,
    attributes_path: Option<&Path>,
    adapter: &AdapterConfig,
    threshold: f64,
) -> Result<Vec<Instance>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "approval threshold {threshold} outside [0, 1]"
        )));
    }
    let mut reader = open_reader(votes_path)?;
    let headers = reader.headers()?.clone();
    let q_col = adapter
        .question_col
        .as_deref()
        .map(|name| column(&headers, name, votes_path))
        .transpose()?;
    let u_col = column(&headers, &adapter.user_col, votes_path)?;
    let o_col = column(&headers, &adapter.opinion_col, votes_path)?;
    let v_col = column(&headers, &adapter.value_col, votes_path)?;

    let single_id = file_stem(votes_path);
    let mut question_order: Vec<String> = Vec::new();
    let mut questions: HashMap<String, QuestionVotes> = HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx as u64 + 2; // header is line 1
        let qid = match q_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => single_id.clone(),
        };
        let value_text = record.get(v_col).unwrap_or("");
        let value: f64 = value_text.parse().map_err(|_| {
            Error::data(
                votes_path,
                format!("line {line}: value `{value_text}` is not a number"),
            )
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::data(
                votes_path,
                format!("line {line}: probability {value} outside [0, 1]"),
            ));
        }
        let cell = u8::from(value >= threshold);
        let q = questions.entry(qid.clone()).or_insert_with(|| {
            question_order.push(qid.clone());
            QuestionVotes::new()
        });
        q.record(
            record.get(u_col).unwrap_or(""),
            record.get(o_col).unwrap_or(""),
            cell,
            line,
            votes_path,
        )?;
    }
    if question_order.is_empty() {
        return Err(Error::data(votes_path, "no vote rows"));
    }

    let texts = texts_path
        .map(|p| read_text_sidecar(p, adapter))
        .transpose()?;
    let attributes = attributes_path
        .map(|p| read_attribute_sidecar(p, adapter))
        .transpose()?;

    let mut instances = Vec::with_capacity(question_order.len());
    for qid in &question_order {
        let q = &questions[qid];
        // Decide which opinions survive text-based dropping.
        let mut keep: Vec<usize> = Vec::new();
        let mut kept_texts: Vec<String> = Vec::new();
        match &texts {
            Some(map) => {
                let mut seen: Vec<String> = Vec::new();
                for (o, key) in q.opinions.order.iter().enumerate() {
                    let Some(text) = map.get(key) else { continue };
                    let trimmed = text.trim();
                    if trimmed.is_empty() || seen.iter().any(|s| s == trimmed) {
                        continue;
                    }
                    seen.push(trimmed.to_string());
                    keep.push(o);
                    kept_texts.push(text.clone());
                }
            }
            None => keep = (0..q.opinions.len()).collect(),
        }
        if keep.is_empty() {
            return Err(Error::data(
                votes_path,
                format!("question `{qid}`: no opinions left after text filtering"),
            ));
        }
        let matrix = q.matrix(&keep, adapter.missing_pair, votes_path)?;
        let k_default = matrix.n_opinions().min(5);
        let mut instance = Instance::new(qid.clone(), matrix, k_default);
        if texts.is_some() {
            instance = instance.with_texts(kept_texts);
        }
        if let Some(attr) = &attributes {
            instance = instance.with_groups(leaning_partition(q, attr, attributes_path.unwrap())?);
        }
        instances.push(instance);
    }
    Ok(instances)
}

fn read_text_sidecar(path: &Path, adapter: &AdapterConfig) -> Result<HashMap<String, String>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers()?.clone();
    let o_col = column(&headers, &adapter.opinion_col, path)?;
    let t_col = column(&headers, &adapter.text_col, path)?;
    let mut map = HashMap::new();
    for record in reader.records() {
        let record = record?;
        map.insert(
            record.get(o_col).unwrap_or("").to_string(),
            record.get(t_col).unwrap_or("").to_string(),
        );
    }
    Ok(map)
}

fn read_attribute_sidecar(path: &Path, adapter: &AdapterConfig) -> Result<HashMap<String, String>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers()?.clone();
    let u_col = column(&headers, &adapter.user_col, path)?;
    let a_col = column(&headers, &adapter.attribute_col, path)?;
    let mut map = HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let label = record.get(a_col).unwrap_or("").to_string();
        if !LEANING_LABELS.contains(&label.as_str()) {
            return Err(Error::data(
                path,
                format!(
                    "line {}: unknown leaning `{label}` (expected one of: {})",
                    idx as u64 + 2,
                    LEANING_LABELS.join(", ")
                ),
            ));
        }
        map.insert(record.get(u_col).unwrap_or("").to_string(), label);
    }
    Ok(map)
}

fn leaning_partition(
    q: &QuestionVotes,
    attributes: &HashMap<String, String>,
    path: &Path,
) -> Result<GroupPartition> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); LEANING_LABELS.len()];
    for (u, user) in q.users.order.iter().enumerate() {
        let label = attributes.get(user).ok_or_else(|| {
            Error::data(path, format!("user `{user}` has no leaning label"))
        })?;
        let g = LEANING_LABELS
            .iter()
            .position(|l| l == label)
            .expect("labels validated on read");
        members[g].push(u);
    }
    let (names, members): (Vec<String>, Vec<Vec<usize>>) = LEANING_LABELS
        .iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(name, m)| (name.to_string(), m))
        .unzip();
    GroupPartition::new(members, Some(names))
}

/// Loads Likert-vote CSVs: rows of (group, user, opinion, 7-point label).
/// Agreement labels ([`LIKERT_APPROVE`]) become approvals, the rest
/// ([`LIKERT_REJECT`]) non-approvals; anything else is a data error. Only
/// groups with exactly five users and five opinions are kept, one instance
/// per group in file order.
pub fn load_likert_votes(votes_path: &Path, adapter: &AdapterConfig) -> Result<Vec<Instance>> {
    let mut reader = open_reader(votes_path)?;
    let headers = reader.headers()?.clone();
    let g_col = column(&headers, &adapter.group_col, votes_path)?;
    let u_col = column(&headers, &adapter.user_col, votes_path)?;
    let o_col = column(&headers, &adapter.opinion_col, votes_path)?;
    let v_col = column(&headers, &adapter.value_col, votes_path)?;

    let mut group_order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, QuestionVotes> = HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx as u64 + 2;
        let label = record.get(v_col).unwrap_or("");
        let cell = if LIKERT_APPROVE.contains(&label) {
            1u8
        } else if LIKERT_REJECT.contains(&label) {
            0u8
        } else {
            return Err(Error::data(
                votes_path,
                format!("line {line}: unknown agreement label `{label}`"),
            ));
        };
        let gid = record.get(g_col).unwrap_or("").to_string();
        let g = groups.entry(gid.clone()).or_insert_with(|| {
            group_order.push(gid.clone());
            QuestionVotes::new()
        });
        g.record(
            record.get(u_col).unwrap_or(""),
            record.get(o_col).unwrap_or(""),
            cell,
            line,
            votes_path,
        )?;
    }

    let mut instances = Vec::new();
    for gid in &group_order {
        let g = &groups[gid];
        if g.users.len() != 5 || g.opinions.len() != 5 {
            continue;
        }
        let keep: Vec<usize> = (0..5).collect();
        let matrix = g.matrix(&keep, adapter.missing_pair, votes_path)?;
        instances.push(Instance::new(gid.clone(), matrix, 5));
    }
    Ok(instances)
}
