//! Command-line front end: select slates, verify them, score them, run
//! benchmark sweeps, and convert raw vote exports into instance files.
//!
//! Exit codes: 0 on success (including help/version), 1 for bad requests
//! (unknown rules, out-of-range slates, bad flags), 2 for data or runtime
//! failures.

use std::fs;
use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use slate_select::bench::{self, BenchConfig, BenchOutcome};
use slate_select::data_io::{
    classify_question, fetch_all, load_adapter_config, load_likert_votes, load_manifest,
    load_probability_votes, read_instance, validate_instance, write_instance, AdapterConfig,
    FetchOutcome, SplitLabel, DEFAULT_APPROVAL_THRESHOLD, DEFAULT_CLASSIFY_SEEDS,
};
use slate_select::distance::{DistanceIndex, DEFAULT_SELECTION_EPSILON};
use slate_select::error::{Error, Result};
use slate_select::metrics::MetricsReport;
use slate_select::model::{AssignmentCertificate, Instance, Rule, Selection};
use slate_select::selectors::{
    greedy_certificate, select, SelectorConfig, DEFAULT_FEASIBILITY_TRIALS,
};
use slate_select::verify::{brute_force_bjr_exists, check_bjr_certificate, check_jr};

#[derive(Parser)]
#[command(
    name = "slate-select",
    version,
    about = "Select and audit small representative opinion slates from approval data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one selection rule on one instance file
    Select(SelectArgs),
    /// Sweep rules, slate sizes, and seeds over instance files
    Benchmark(BenchmarkArgs),
    /// Sweep the diverse assignment rule over neighborhood radii
    SweepEpsilon(SweepArgs),
    /// Check a slate for justified representation
    Verify(VerifyArgs),
    /// Score a slate against the slate-quality metrics
    Metrics(MetricsArgs),
    /// Convert CSV vote exports into canonical instance files
    Ingest(IngestArgs),
    /// Generate a planted-block synthetic instance file
    GenSynthetic(GenSyntheticArgs),
}

fn parse_rule(s: &str) -> Result<Rule> {
    s.parse()
}

#[derive(Args)]
struct SelectArgs {
    /// Instance JSON file
    #[arg(long)]
    input: PathBuf,
    /// Selection rule (random, engagement, bridging, diversity, jr, bjr, diverse-bjr)
    #[arg(long, value_parser = parse_rule)]
    rule: Rule,
    /// Slate size; defaults to the instance's k_default
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighborhood radius for the diversity-aware rules
    #[arg(long, default_value_t = DEFAULT_SELECTION_EPSILON)]
    epsilon: f64,
    /// Feasibility-probe trials per assignment round
    #[arg(long, default_value_t = DEFAULT_FEASIBILITY_TRIALS)]
    trials: u32,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance JSON file
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated opinion indices, e.g. "0,2"
    #[arg(long)]
    slate: String,
    /// Assignment-certificate JSON file; omitted, a greedy certificate is
    /// constructed for the slate
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Instance JSON file
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated opinion indices, e.g. "0,2"
    #[arg(long)]
    slate: String,
    /// Neighborhood radius for the redundancy metric
    #[arg(long, default_value_t = DEFAULT_SELECTION_EPSILON)]
    epsilon: f64,
    /// Also write the pairwise opinion-distance matrix to this CSV file
    #[arg(long)]
    export_distances: Option<PathBuf>,
}

#[derive(Args)]
struct BenchCommonArgs {
    /// Instance JSON file; repeat the flag for multiple instances
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Benchmark config JSON; the flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    selection_epsilon: Option<f64>,
    #[arg(long)]
    redundancy_epsilon: Option<f64>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    random_seeds: Option<u64>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Directory the result files are written to
    #[arg(long, default_value = "bench-out", env = "SLATE_SELECT_OUT_DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: BenchCommonArgs,
    /// Comma-separated rule list; defaults to every selectable rule
    #[arg(long)]
    rules: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: BenchCommonArgs,
    /// Comma-separated neighborhood radii to sweep, e.g. "0.0,0.2,0.4"
    #[arg(long)]
    epsilons: String,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum IngestFormat {
    /// One row per (user, opinion) with an agreement probability in [0, 1]
    Probability,
    /// One row per (user, opinion) with a 1-7 agreement level, in blocks of
    /// five users and five opinions
    Likert,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    format: IngestFormat,
    /// Votes CSV file
    #[arg(long)]
    votes: PathBuf,
    /// Opinion-text CSV sidecar (probability format only)
    #[arg(long)]
    texts: Option<PathBuf>,
    /// User-attribute CSV sidecar (probability format only)
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// Adapter config JSON mapping CSV column names
    #[arg(long)]
    adapter: Option<PathBuf>,
    /// Approval threshold for probability votes
    #[arg(long, default_value_t = DEFAULT_APPROVAL_THRESHOLD)]
    threshold: f64,
    /// Directory the instance files are written to
    #[arg(long, default_value = "ingest-out", env = "SLATE_SELECT_OUT_DIR")]
    out_dir: PathBuf,
    /// Dataset manifest to fetch before ingesting
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory fetched files land in
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
}

#[derive(Args)]
struct GenSyntheticArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    opinions: usize,
    #[arg(long)]
    groups: usize,
    /// In-block approval probability
    #[arg(long, default_value_t = 0.9)]
    cohesion: f64,
    /// Out-of-block approval probability
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; defaults to "<question id>.json"
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        process::exit(if err.is_usage() { 1 } else { 2 });
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Select(args) => run_select(args),
        Command::Benchmark(args) => run_benchmark(args),
        Command::SweepEpsilon(args) => run_sweep(args),
        Command::Verify(args) => run_verify(args),
        Command::Metrics(args) => run_metrics(args),
        Command::Ingest(args) => run_ingest(args),
        Command::GenSynthetic(args) => run_gen_synthetic(args),
    }
}

fn parse_slate(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let index = part
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("bad opinion index '{part}' in slate list")))?;
        out.push(index);
    }
    if out.is_empty() {
        return Err(Error::Config("slate list is empty".into()));
    }
    Ok(out)
}

fn run_select(args: SelectArgs) -> Result<()> {
    let instance = read_instance(&args.input)?;
    let mut config = SelectorConfig::new(args.rule, args.k.unwrap_or_else(|| instance.k()));
    config.seed = args.seed;
    config.epsilon = args.epsilon;
    config.trials = args.trials;
    let outcome = select(&instance, &config)?;

    #[derive(Serialize)]
    struct SelectOutput<'a> {
        selection: &'a Selection,
        certificate: Option<&'a AssignmentCertificate>,
    }
    let output = SelectOutput {
        selection: &outcome.selection,
        certificate: outcome.certificate.as_ref(),
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<()> {
    let instance = read_instance(&args.input)?;
    let opinions = parse_slate(&args.slate)?;
    let selection = Selection::manual(opinions.clone())?;
    selection.check_in_range(instance.matrix())?;

    let jr = check_jr(&instance, &selection)?;
    let (certificate, certificate_source) = match &args.certificate {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
            let cert: AssignmentCertificate = serde_json::from_str(&text).map_err(|e| {
                Error::data(path.display().to_string(), format!("bad certificate: {e}"))
            })?;
            (cert, "provided")
        }
        None => (
            greedy_certificate(instance.matrix(), selection.opinions())?,
            "greedy",
        ),
    };
    let certificate_check = check_bjr_certificate(&instance, &selection, &certificate)?;
    let exhaustive = match brute_force_bjr_exists(&instance, &selection) {
        Ok(exists) => serde_json::json!({
            "attempted": true,
            "balanced_assignment_exists": exists,
        }),
        Err(Error::EnumerationGuard { reason }) => serde_json::json!({
            "attempted": false,
            "reason": reason,
        }),
        Err(e) => return Err(e),
    };

    let report = serde_json::json!({
        "question_id": instance.question_id(),
        "slate": opinions,
        "k": selection.k(),
        "jr": jr,
        "certificate_source": certificate_source,
        "certificate": certificate,
        "bjr_certificate": certificate_check,
        "exhaustive_bjr": exhaustive,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run_metrics(args: MetricsArgs) -> Result<()> {
    let instance = read_instance(&args.input)?;
    let selection = Selection::manual(parse_slate(&args.slate)?)?;
    let index = DistanceIndex::build(instance.matrix(), args.epsilon);
    let report = MetricsReport::compute(&instance, &selection, &index)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &args.export_distances {
        index.write_csv(fs::File::create(path)?)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn load_instances(paths: &[PathBuf]) -> Result<Vec<Instance>> {
    paths.iter().map(|p| read_instance(p)).collect()
}

fn build_bench_config(common: &BenchCommonArgs, rules: Option<&str>) -> Result<BenchConfig> {
    let mut config: BenchConfig = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| {
                Error::data(path.display().to_string(), format!("bad benchmark config: {e}"))
            })?
        }
        None => BenchConfig::default(),
    };
    if let Some(list) = rules {
        config.rules = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(parse_rule)
            .collect::<Result<_>>()?;
    }
    if let Some(v) = common.k_min {
        config.k_min = v;
    }
    if let Some(v) = common.k_max {
        config.k_max = v;
    }
    if let Some(v) = common.selection_epsilon {
        config.selection_epsilon = v;
    }
    if let Some(v) = common.redundancy_epsilon {
        config.redundancy_epsilon = v;
    }
    if let Some(v) = common.trials {
        config.trials = v;
    }
    if let Some(v) = common.random_seeds {
        config.random_seeds = v;
    }
    if let Some(v) = common.base_seed {
        config.base_seed = v;
    }
    Ok(config)
}

fn report_outcome(outcome: &BenchOutcome, paths: &[PathBuf]) {
    for path in paths {
        println!("wrote {}", path.display());
    }
    println!(
        "instances: {}  rows: {}  failures: {}",
        outcome.n_instances,
        outcome.rows.len(),
        outcome.failures.len()
    );
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    for failure in &outcome.failures {
        eprintln!(
            "failed: {} {} k={}: {}",
            failure.question_id, failure.rule, failure.k, failure.message
        );
    }
}

fn run_benchmark(args: BenchmarkArgs) -> Result<()> {
    let config = build_bench_config(&args.common, args.rules.as_deref())?;
    let instances = load_instances(&args.common.inputs)?;
    let outcome = bench::run_benchmark(&instances, &config)?;
    let paths = bench::write_outputs(&outcome, &args.common.out_dir, "results")?;
    report_outcome(&outcome, &paths);
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let config = build_bench_config(&args.common, None)?;
    let epsilons = args
        .epsilons
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad epsilon '{s}' in sweep list")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let instances = load_instances(&args.common.inputs)?;
    let outcome = bench::run_epsilon_sweep(&instances, &config, &epsilons)?;
    let paths = bench::write_outputs(&outcome, &args.common.out_dir, "sweep")?;
    report_outcome(&outcome, &paths);
    Ok(())
}

fn sanitize_filename(id: &str) -> String {
    let mut out: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect();
    if out.is_empty() {
        out.push_str("question");
    }
    out
}

fn run_ingest(args: IngestArgs) -> Result<()> {
    if let Some(manifest_path) = &args.manifest {
        let manifest = load_manifest(manifest_path)?;
        for outcome in fetch_all(&manifest, &args.data_dir)? {
            match outcome {
                FetchOutcome::AlreadyPresent(p) => println!("present {}", p.display()),
                FetchOutcome::Downloaded(p) => println!("fetched {}", p.display()),
            }
        }
    }

    let adapter = match &args.adapter {
        Some(path) => load_adapter_config(path)?,
        None => AdapterConfig::default(),
    };
    let instances = match args.format {
        IngestFormat::Probability => load_probability_votes(
            &args.votes,
            args.texts.as_deref(),
            args.attributes.as_deref(),
            &adapter,
            args.threshold,
        )?,
        IngestFormat::Likert => load_likert_votes(&args.votes, &adapter)?,
    };
    if instances.is_empty() {
        return Err(Error::data(
            args.votes.display().to_string(),
            "no instances produced",
        ));
    }

    fs::create_dir_all(&args.out_dir)?;
    for instance in &instances {
        let report = validate_instance(instance);
        for violation in &report.violations {
            eprintln!("warning: {}: {violation}", instance.question_id());
        }
        let path = args
            .out_dir
            .join(format!("{}.json", sanitize_filename(instance.question_id())));
        write_instance(instance, &path)?;

        let m = instance.matrix().n_opinions();
        let groups = instance
            .groups()
            .map(|g| format!(" groups={}", g.n_groups()))
            .unwrap_or_default();
        let label = if m >= 5 {
            let split = classify_question(instance, DEFAULT_CLASSIFY_SEEDS)?;
            let name = match split.label {
                SplitLabel::Consensual => "consensual",
                SplitLabel::Controversial => "controversial",
                SplitLabel::Neither => "neither",
            };
            format!(
                "  {name} (mean unrepresented {:.1}%)",
                split.mean_unrepresented
            )
        } else {
            String::new()
        };
        println!(
            "wrote {}  n={} m={m} k={}{groups}{label}",
            path.display(),
            instance.matrix().n_users(),
            instance.k(),
        );
    }
    Ok(())
}

fn run_gen_synthetic(args: GenSyntheticArgs) -> Result<()> {
    let spec = slate_select::data_io::SyntheticSpec {
        n_users: args.users,
        n_opinions: args.opinions,
        n_groups: args.groups,
        cohesion: args.cohesion,
        noise: args.noise,
        seed: args.seed,
    };
    let instance = slate_select::data_io::generate_synthetic(&spec)?;
    let path = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.json", instance.question_id())));
    write_instance(&instance, &path)?;
    println!(
        "wrote {}  n={} m={} groups={}",
        path.display(),
        instance.matrix().n_users(),
        instance.matrix().n_opinions(),
        args.groups,
    );
    Ok(())
}
