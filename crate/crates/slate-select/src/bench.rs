//! Desk-scale benchmark sweeps: run a set of selection rules over a set of
//! instances and slate sizes, score every run, and write long-form CSV plus
//! JSON results.
//!
//! Result rows are fully determined by the instances, the configuration, and
//! the seeds, and are emitted in a fixed sort order, so the CSV and JSON
//! outputs are byte-identical across runs. Wall-clock timings are inherently
//! unstable and therefore go to a separate `*_timings.csv` file that is
//! excluded from that guarantee.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::validate_instance;
use crate::distance::{DistanceIndex, DEFAULT_SELECTION_EPSILON};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::model::{Instance, Rule};
use crate::selectors::{
    select, select_diverse_bjr, select_diversity, SelectionOutcome, SelectorConfig,
    DEFAULT_FEASIBILITY_TRIALS,
};
use crate::verify::{check_bjr_certificate, check_jr, BjrCertCheck};

/// Bumped whenever the meaning or layout of result rows changes.
pub const RESULT_SCHEMA_VERSION: &str = "1";

/// Benchmark settings. Every field has a default, so a config file only needs
/// to name what it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Rules to run; defaults to every selectable rule.
    pub rules: Vec<Rule>,
    pub k_min: usize,
    pub k_max: usize,
    /// Neighborhood radius used by the diversity-aware selectors.
    pub selection_epsilon: f64,
    /// Neighborhood radius used when scoring redundancy.
    pub redundancy_epsilon: f64,
    /// Feasibility-probe trials per round for the assignment-based selectors.
    pub trials: u32,
    /// How many seeds the random baseline averages over.
    pub random_seeds: u64,
    /// First seed; seeded rules run at this seed, the random baseline at
    /// `base_seed..base_seed + random_seeds`.
    pub base_seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            rules: Rule::SELECTABLE.to_vec(),
            k_min: 1,
            k_max: 20,
            selection_epsilon: DEFAULT_SELECTION_EPSILON,
            redundancy_epsilon: DEFAULT_SELECTION_EPSILON,
            trials: DEFAULT_FEASIBILITY_TRIALS,
            random_seeds: 100,
            base_seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::Config("benchmark rule list is empty".into()));
        }
        if self.rules.contains(&Rule::Manual) {
            return Err(Error::Config(
                "the manual rule has no selector and cannot be benchmarked".into(),
            ));
        }
        if self.k_min == 0 {
            return Err(Error::Config("k_min must be at least 1".into()));
        }
        if self.k_min > self.k_max {
            return Err(Error::Config(format!(
                "k_min = {} exceeds k_max = {}",
                self.k_min, self.k_max
            )));
        }
        if self.random_seeds == 0 {
            return Err(Error::Config("random_seeds must be at least 1".into()));
        }
        for (name, eps) in [
            ("selection_epsilon", self.selection_epsilon),
            ("redundancy_epsilon", self.redundancy_epsilon),
        ] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::Config(format!("{name} = {eps} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One scored run: a rule applied to one instance at one slate size and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub question_id: String,
    pub rule: Rule,
    pub k: usize,
    /// Present only for rules whose output depends on the seed.
    pub seed: Option<u64>,
    /// Present only for rules that consult the neighborhood radius.
    pub selection_epsilon: Option<f64>,
    pub redundancy_epsilon: f64,
    pub opinions: Vec<usize>,
    pub u_all: f64,
    pub median_u: Option<f64>,
    pub consensus: Option<f64>,
    pub coverage_gap: f64,
    pub redundancy: f64,
    pub jr_satisfied: bool,
    /// For assignment-producing rules: whether the emitted certificate passes
    /// verification.
    pub bjr_certificate_ok: Option<bool>,
}

/// Wall-clock time of one selection call. Not deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub question_id: String,
    pub rule: Rule,
    pub k: usize,
    pub seed: Option<u64>,
    pub millis: f64,
}

/// A run that errored instead of producing a row. Failures are recorded and
/// reported; they do not abort the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub question_id: String,
    pub rule: Rule,
    pub k: usize,
    pub seed: Option<u64>,
    pub message: String,
}

/// Everything a sweep produced, before any files are written.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub config: BenchConfig,
    pub n_instances: usize,
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
    pub failures: Vec<FailureRow>,
    pub warnings: Vec<String>,
}

/// Per-rule means over all result rows, pooled across instances and slate
/// sizes. A coarse digest; per-cell detail lives in the rows themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub rule: Rule,
    pub runs: usize,
    pub mean_u_all: f64,
    pub mean_median_u: Option<f64>,
    pub mean_consensus: Option<f64>,
    pub mean_coverage_gap: f64,
    pub mean_redundancy: f64,
    pub jr_rate: f64,
    pub bjr_certificate_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub schema_version: String,
    pub config: BenchConfig,
    pub n_instances: usize,
    pub n_rows: usize,
    pub warnings: Vec<String>,
    pub failures: Vec<FailureRow>,
    pub aggregates: Vec<AggregateRow>,
}

struct Prepared<'a> {
    instance: &'a Instance,
    /// Index at the redundancy radius; also supplies distances for the
    /// coverage gap, which ignores the radius.
    met: DistanceIndex,
    /// Indexes at each selection radius the sweep will use.
    sel: Vec<(f64, DistanceIndex)>,
}

impl Prepared<'_> {
    fn index_for(&self, epsilon: f64) -> Result<&DistanceIndex> {
        self.sel
            .iter()
            .find(|(e, _)| *e == epsilon)
            .map(|(_, index)| index)
            .ok_or_else(|| {
                Error::Config(format!("no prepared distance index for epsilon = {epsilon}"))
            })
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    inst: usize,
    rule: Rule,
    k: usize,
    seed: u64,
    selection_epsilon: Option<f64>,
}

fn rule_uses_seed(rule: Rule) -> bool {
    matches!(
        rule,
        Rule::Random | Rule::Jr | Rule::Bjr | Rule::DiverseBjr
    )
}

fn prepare<'a>(
    instances: &'a [Instance],
    config: &BenchConfig,
    sel_epsilons: &[f64],
) -> Result<Vec<Prepared<'a>>> {
    instances
        .iter()
        .map(|instance| {
            let report = validate_instance(instance);
            if !report.ok() {
                let details: Vec<String> =
                    report.violations.iter().map(ToString::to_string).collect();
                return Err(Error::data(
                    instance.question_id(),
                    format!("instance failed validation: {}", details.join("; ")),
                ));
            }
            let met = DistanceIndex::build(instance.matrix(), config.redundancy_epsilon);
            let sel = sel_epsilons
                .iter()
                .map(|&eps| {
                    let index = if eps == config.redundancy_epsilon {
                        met.clone()
                    } else {
                        met.with_epsilon(eps)
                    };
                    (eps, index)
                })
                .collect();
            Ok(Prepared { instance, met, sel })
        })
        .collect()
}

/// Appends the usual per-instance warnings and returns the highest usable
/// slate size, or `None` when the range is empty for this instance.
fn k_range(instance: &Instance, config: &BenchConfig, warnings: &mut Vec<String>) -> Option<usize> {
    let m = instance.matrix().n_opinions();
    let k_hi = config.k_max.min(m);
    if config.k_max > m {
        warnings.push(format!(
            "question {}: slate sizes capped at the opinion count m = {m}",
            instance.question_id()
        ));
    }
    if config.k_min > k_hi {
        warnings.push(format!(
            "question {}: no slate sizes in [{}, {}] (m = {m})",
            instance.question_id(),
            config.k_min,
            config.k_max
        ));
        return None;
    }
    Some(k_hi)
}

/// Runs the configured rules over every instance and slate size.
pub fn run_benchmark(instances: &[Instance], config: &BenchConfig) -> Result<BenchOutcome> {
    config.validate()?;
    let needs_sel = config
        .rules
        .iter()
        .any(|r| matches!(r, Rule::Diversity | Rule::DiverseBjr));
    let sel_epsilons = if needs_sel {
        vec![config.selection_epsilon]
    } else {
        Vec::new()
    };
    let prepared = prepare(instances, config, &sel_epsilons)?;

    let mut warnings = Vec::new();
    let mut cells = Vec::new();
    for (idx, p) in prepared.iter().enumerate() {
        let Some(k_hi) = k_range(p.instance, config, &mut warnings) else {
            continue;
        };
        for &rule in &config.rules {
            for k in config.k_min..=k_hi {
                let selection_epsilon = matches!(rule, Rule::Diversity | Rule::DiverseBjr)
                    .then_some(config.selection_epsilon);
                if rule == Rule::Random {
                    for offset in 0..config.random_seeds {
                        cells.push(Cell {
                            inst: idx,
                            rule,
                            k,
                            seed: config.base_seed + offset,
                            selection_epsilon,
                        });
                    }
                } else {
                    cells.push(Cell {
                        inst: idx,
                        rule,
                        k,
                        seed: config.base_seed,
                        selection_epsilon,
                    });
                }
            }
        }
    }
    Ok(execute(&prepared, &cells, config, warnings))
}

/// Sweeps the diversity-aware assignment rule over a list of neighborhood
/// radii, with the plain assignment rule and the random baseline as fixed
/// comparators at every slate size.
pub fn run_epsilon_sweep(
    instances: &[Instance],
    config: &BenchConfig,
    epsilons: &[f64],
) -> Result<BenchOutcome> {
    config.validate()?;
    if epsilons.is_empty() {
        return Err(Error::Config("epsilon sweep needs at least one epsilon".into()));
    }
    for (i, &eps) in epsilons.iter().enumerate() {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Config(format!("epsilon = {eps} outside [0, 1]")));
        }
        if epsilons[..i].contains(&eps) {
            return Err(Error::Config(format!("duplicate epsilon = {eps} in sweep list")));
        }
    }
    let prepared = prepare(instances, config, epsilons)?;

    let mut warnings = Vec::new();
    let mut cells = Vec::new();
    for (idx, p) in prepared.iter().enumerate() {
        let Some(k_hi) = k_range(p.instance, config, &mut warnings) else {
            continue;
        };
        for k in config.k_min..=k_hi {
            for &eps in epsilons {
                cells.push(Cell {
                    inst: idx,
                    rule: Rule::DiverseBjr,
                    k,
                    seed: config.base_seed,
                    selection_epsilon: Some(eps),
                });
            }
            cells.push(Cell {
                inst: idx,
                rule: Rule::Bjr,
                k,
                seed: config.base_seed,
                selection_epsilon: None,
            });
            for offset in 0..config.random_seeds {
                cells.push(Cell {
                    inst: idx,
                    rule: Rule::Random,
                    k,
                    seed: config.base_seed + offset,
                    selection_epsilon: None,
                });
            }
        }
    }
    Ok(execute(&prepared, &cells, config, warnings))
}

fn execute(
    prepared: &[Prepared<'_>],
    cells: &[Cell],
    config: &BenchConfig,
    warnings: Vec<String>,
) -> BenchOutcome {
    let results: Vec<std::result::Result<(ResultRow, TimingRow), FailureRow>> = cells
        .par_iter()
        .map(|cell| run_cell(&prepared[cell.inst], cell, config))
        .collect();

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok((row, timing)) => {
                rows.push(row);
                timings.push(timing);
            }
            Err(failure) => failures.push(failure),
        }
    }
    rows.sort_by(row_order);
    timings.sort_by(|a, b| {
        (&a.question_id, a.rule.as_str(), a.k, a.seed)
            .cmp(&(&b.question_id, b.rule.as_str(), b.k, b.seed))
    });
    failures.sort_by(|a, b| {
        (&a.question_id, a.rule.as_str(), a.k, a.seed)
            .cmp(&(&b.question_id, b.rule.as_str(), b.k, b.seed))
    });
    BenchOutcome {
        config: config.clone(),
        n_instances: prepared.len(),
        rows,
        timings,
        failures,
        warnings,
    }
}

fn row_order(a: &ResultRow, b: &ResultRow) -> Ordering {
    (&a.question_id, a.rule.as_str(), a.k)
        .cmp(&(&b.question_id, b.rule.as_str(), b.k))
        .then_with(|| opt_f64_cmp(&a.selection_epsilon, &b.selection_epsilon))
        .then_with(|| a.seed.cmp(&b.seed))
}

fn opt_f64_cmp(a: &Option<f64>, b: &Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(y),
    }
}

fn run_cell(
    prepared: &Prepared<'_>,
    cell: &Cell,
    config: &BenchConfig,
) -> std::result::Result<(ResultRow, TimingRow), FailureRow> {
    let instance = prepared.instance;
    let seed_field = rule_uses_seed(cell.rule).then_some(cell.seed);
    let fail = |message: String| FailureRow {
        question_id: instance.question_id().to_string(),
        rule: cell.rule,
        k: cell.k,
        seed: seed_field,
        message,
    };

    let mut sc = SelectorConfig::new(cell.rule, cell.k);
    sc.seed = cell.seed;
    sc.trials = config.trials;
    if let Some(eps) = cell.selection_epsilon {
        sc.epsilon = eps;
    }

    let started = Instant::now();
    let outcome: Result<SelectionOutcome> = match cell.rule {
        Rule::Diversity => prepared.index_for(sc.epsilon).and_then(|index| {
            Ok(SelectionOutcome {
                selection: select_diversity(instance, &sc, index)?,
                certificate: None,
            })
        }),
        Rule::DiverseBjr => prepared.index_for(sc.epsilon).and_then(|index| {
            let (selection, certificate) = select_diverse_bjr(instance, &sc, index)?;
            Ok(SelectionOutcome {
                selection,
                certificate: Some(certificate),
            })
        }),
        _ => select(instance, &sc),
    };
    let outcome = outcome.map_err(|e| fail(e.to_string()))?;
    let millis = started.elapsed().as_secs_f64() * 1e3;

    let report = MetricsReport::compute(instance, &outcome.selection, &prepared.met)
        .map_err(|e| fail(e.to_string()))?;
    let jr = check_jr(instance, &outcome.selection).map_err(|e| fail(e.to_string()))?;
    let bjr_certificate_ok = match &outcome.certificate {
        Some(certificate) => {
            let check = check_bjr_certificate(instance, &outcome.selection, certificate)
                .map_err(|e| fail(e.to_string()))?;
            Some(matches!(check, BjrCertCheck::Satisfied))
        }
        None => None,
    };

    let row = ResultRow {
        question_id: instance.question_id().to_string(),
        rule: cell.rule,
        k: cell.k,
        seed: seed_field,
        selection_epsilon: cell.selection_epsilon,
        redundancy_epsilon: config.redundancy_epsilon,
        opinions: outcome.selection.opinions().to_vec(),
        u_all: report.u_all,
        median_u: report.median_u,
        consensus: report.consensus,
        coverage_gap: report.coverage_gap,
        redundancy: report.redundancy,
        jr_satisfied: jr.satisfied,
        bjr_certificate_ok,
    };
    let timing = TimingRow {
        question_id: instance.question_id().to_string(),
        rule: cell.rule,
        k: cell.k,
        seed: seed_field,
        millis,
    };
    Ok((row, timing))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Per-rule digest of an outcome.
pub fn summarize(outcome: &BenchOutcome) -> BenchSummary {
    let mut by_rule: BTreeMap<&'static str, (Rule, Vec<&ResultRow>)> = BTreeMap::new();
    for row in &outcome.rows {
        by_rule
            .entry(row.rule.as_str())
            .or_insert_with(|| (row.rule, Vec::new()))
            .1
            .push(row);
    }
    let aggregates = by_rule
        .into_values()
        .map(|(rule, rows)| {
            let runs = rows.len();
            let jr_rate =
                rows.iter().filter(|r| r.jr_satisfied).count() as f64 / runs as f64;
            let cert_flags: Vec<bool> =
                rows.iter().filter_map(|r| r.bjr_certificate_ok).collect();
            let bjr_certificate_rate = (!cert_flags.is_empty()).then(|| {
                cert_flags.iter().filter(|ok| **ok).count() as f64 / cert_flags.len() as f64
            });
            AggregateRow {
                rule,
                runs,
                mean_u_all: mean(rows.iter().map(|r| r.u_all)).unwrap_or(f64::NAN),
                mean_median_u: mean(rows.iter().filter_map(|r| r.median_u)),
                mean_consensus: mean(rows.iter().filter_map(|r| r.consensus)),
                mean_coverage_gap: mean(rows.iter().map(|r| r.coverage_gap)).unwrap_or(f64::NAN),
                mean_redundancy: mean(rows.iter().map(|r| r.redundancy)).unwrap_or(f64::NAN),
                jr_rate,
                bjr_certificate_rate,
            }
        })
        .collect();
    BenchSummary {
        schema_version: RESULT_SCHEMA_VERSION.to_string(),
        config: outcome.config.clone(),
        n_instances: outcome.n_instances,
        n_rows: outcome.rows.len(),
        warnings: outcome.warnings.clone(),
        failures: outcome.failures.clone(),
        aggregates,
    }
}

/// Long-form CSV: one line per (run, metric) pair, preceded by a schema
/// comment line. Boolean metrics are written as 1/0; absent fields are
/// skipped.
pub fn results_csv(outcome: &BenchOutcome) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "question_id",
        "rule",
        "k",
        "seed",
        "selection_epsilon",
        "redundancy_epsilon",
        "metric",
        "value",
    ])?;
    for row in &outcome.rows {
        let base = [
            row.question_id.clone(),
            row.rule.as_str().to_string(),
            row.k.to_string(),
            row.seed.map(|s| s.to_string()).unwrap_or_default(),
            row.selection_epsilon
                .map(|e| e.to_string())
                .unwrap_or_default(),
            row.redundancy_epsilon.to_string(),
        ];
        let mut metrics: Vec<(&str, f64)> = vec![("u_all", row.u_all)];
        if let Some(v) = row.median_u {
            metrics.push(("median_u", v));
        }
        if let Some(v) = row.consensus {
            metrics.push(("consensus", v));
        }
        metrics.push(("coverage_gap", row.coverage_gap));
        metrics.push(("redundancy", row.redundancy));
        metrics.push(("jr_satisfied", f64::from(u8::from(row.jr_satisfied))));
        if let Some(ok) = row.bjr_certificate_ok {
            metrics.push(("bjr_certificate_ok", f64::from(u8::from(ok))));
        }
        for (name, value) in metrics {
            let mut record = base.to_vec();
            record.push(name.to_string());
            record.push(value.to_string());
            wtr.write_record(&record)?;
        }
    }
    let body = wtr
        .into_inner()
        .expect("in-memory csv writer cannot fail to flush");
    let body = String::from_utf8(body).expect("csv output is utf-8");
    Ok(format!(
        "# slate-select results schema {RESULT_SCHEMA_VERSION}\n{body}"
    ))
}

#[derive(Serialize)]
struct ResultsDocument<'a> {
    schema_version: &'a str,
    config: &'a BenchConfig,
    rows: &'a [ResultRow],
}

/// The same rows as [`results_csv`], in wide JSON form with the config
/// embedded.
pub fn results_json(outcome: &BenchOutcome) -> Result<String> {
    let doc = ResultsDocument {
        schema_version: RESULT_SCHEMA_VERSION,
        config: &outcome.config,
        rows: &outcome.rows,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn timings_csv(outcome: &BenchOutcome) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["question_id", "rule", "k", "seed", "millis"])?;
    for t in &outcome.timings {
        wtr.write_record([
            t.question_id.clone(),
            t.rule.as_str().to_string(),
            t.k.to_string(),
            t.seed.map(|s| s.to_string()).unwrap_or_default(),
            format!("{:.3}", t.millis),
        ])?;
    }
    let body = wtr
        .into_inner()
        .expect("in-memory csv writer cannot fail to flush");
    Ok(String::from_utf8(body).expect("csv output is utf-8"))
}

/// Writes `{stem}.csv`, `{stem}.json`, `{stem}_summary.json`, and
/// `{stem}_timings.csv` under `out_dir`, creating it if needed. Returns the
/// paths written, in that order.
pub fn write_outputs(outcome: &BenchOutcome, out_dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, results_csv(outcome)?)?;
    let json_path = out_dir.join(format!("{stem}.json"));
    fs::write(&json_path, results_json(outcome)?)?;
    let summary_path = out_dir.join(format!("{stem}_summary.json"));
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summarize(outcome))? + "\n",
    )?;
    let timings_path = out_dir.join(format!("{stem}_timings.csv"));
    fs::write(&timings_path, timings_csv(outcome)?)?;
    Ok(vec![csv_path, json_path, summary_path, timings_path])
}
