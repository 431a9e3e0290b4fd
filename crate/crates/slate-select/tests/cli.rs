//! End-to-end runs of the compiled binary: happy paths for every
//! subcommand, the documented exit codes, and the output-directory
//! environment override.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slate_select::data_io::{instance_to_json, read_instance};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_slate-select"));
    // Keep the caller's environment from leaking an output directory in.
    cmd.env_remove("SLATE_SELECT_OUT_DIR");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary spawns")
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "exit {:?}, stderr:\n{}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn json_of(output: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_of(output)).expect("stdout is JSON")
}

fn write_chain(dir: &Path) -> PathBuf {
    let path = dir.join("chain.json");
    fs::write(&path, instance_to_json(&common::chain_instance())).expect("writable temp dir");
    path
}

#[test]
fn select_reproduces_the_documented_slates() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());

    let mut diverse = bin();
    diverse
        .arg("select")
        .args(["--rule", "diverse-bjr", "--k", "2", "--epsilon", "0.7"])
        .arg("--input")
        .arg(&input);
    let first = run(&mut diverse);
    let report = json_of(&first);
    assert_eq!(report["selection"]["opinions"], serde_json::json!([0, 2]));
    assert!(report["certificate"].is_object(), "assignment rules emit a certificate");

    // Same invocation, byte-identical output.
    let second = run(&mut diverse);
    assert_eq!(first.stdout, second.stdout);

    let balanced = run(bin()
        .arg("select")
        .args(["--rule", "bjr", "--k", "2"])
        .arg("--input")
        .arg(&input));
    let report = json_of(&balanced);
    assert_eq!(report["selection"]["opinions"], serde_json::json!([0, 1]));
}

#[test]
fn select_defaults_k_to_the_instance_default() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());
    let output = run(bin()
        .arg("select")
        .args(["--rule", "engagement"])
        .arg("--input")
        .arg(&input));
    let report = json_of(&output);
    assert_eq!(
        report["selection"]["opinions"].as_array().unwrap().len(),
        2,
        "chain instance declares k_default = 2"
    );
}

#[test]
fn verify_distinguishes_sound_and_blocked_slates() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());

    // {0, 1} admits a balanced assignment with no blocking coalition.
    let output = run(bin()
        .arg("verify")
        .args(["--slate", "0,1"])
        .arg("--input")
        .arg(&input));
    let report = json_of(&output);
    assert_eq!(report["jr"]["satisfied"], serde_json::json!(true));
    assert_eq!(report["certificate_source"], serde_json::json!("greedy"));
    assert_eq!(report["bjr_certificate"]["status"], serde_json::json!("satisfied"));
    assert_eq!(report["exhaustive_bjr"]["attempted"], serde_json::json!(true));
    assert_eq!(
        report["exhaustive_bjr"]["balanced_assignment_exists"],
        serde_json::json!(true)
    );

    // {0, 2} covers everyone (JR holds) yet the middle opinion's two
    // approvers form a blocking pair under every balanced assignment.
    let output = run(bin()
        .arg("verify")
        .args(["--slate", "0,2"])
        .arg("--input")
        .arg(&input));
    let report = json_of(&output);
    assert_eq!(report["jr"]["satisfied"], serde_json::json!(true));
    assert_eq!(report["bjr_certificate"]["status"], serde_json::json!("violated"));
    assert_eq!(report["bjr_certificate"]["opinion"], serde_json::json!(1));
    assert_eq!(report["bjr_certificate"]["blockers"], serde_json::json!([1, 2]));
    assert_eq!(
        report["exhaustive_bjr"]["balanced_assignment_exists"],
        serde_json::json!(false)
    );
}

#[test]
fn metrics_match_the_hand_computed_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());
    let distances = dir.path().join("distances.csv");
    let output = run(bin()
        .arg("metrics")
        .args(["--slate", "0,2", "--epsilon", "0.7"])
        .arg("--export-distances")
        .arg(&distances)
        .arg("--input")
        .arg(&input));
    let report = json_of(&output);
    assert_eq!(report["u_all"].as_f64(), Some(0.0));
    assert_eq!(report["coverage_gap"].as_f64(), Some(1.0 / 3.0));
    assert_eq!(report["redundancy"].as_f64(), Some(0.0));
    assert_eq!(report["redundancy_epsilon"].as_f64(), Some(0.7));
    assert!(report["median_u"].is_null(), "chain has no group partition");
    assert!(report["consensus"].is_null());

    let table = fs::read_to_string(&distances).expect("distance export written");
    assert!(table.starts_with("opinion,0,1,2"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn benchmark_writes_the_result_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let instance = dir.path().join("planted.json");
    run(bin()
        .arg("gen-synthetic")
        .args(["--users", "12", "--opinions", "6", "--groups", "2", "--seed", "7"])
        .arg("--out")
        .arg(&instance));
    assert!(instance.is_file(), "gen-synthetic writes the instance file");

    let mut dirs = Vec::new();
    for label in ["a", "b"] {
        let out_dir = dir.path().join(label);
        let output = run(bin()
            .arg("benchmark")
            .arg("--input")
            .arg(&instance)
            .args(["--rules", "engagement,jr,bjr", "--k-min", "1", "--k-max", "3"])
            .args(["--random-seeds", "2"])
            .arg("--out-dir")
            .arg(&out_dir));
        let text = stdout_of(&output);
        assert!(text.contains("rows: "), "summary line printed:\n{text}");
        dirs.push(out_dir);
    }

    for name in ["results.csv", "results.json", "results_summary.json", "results_timings.csv"] {
        assert!(dirs[0].join(name).is_file(), "{name} missing");
    }
    let csv = fs::read_to_string(dirs[0].join("results.csv")).unwrap();
    assert!(csv.starts_with("# slate-select results schema 1\n"));
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("question_id,rule,k,seed,selection_epsilon,redundancy_epsilon,metric,value"));

    // Two runs, byte-identical result files; timings are wall-clock and
    // deliberately exempt.
    for name in ["results.csv", "results.json", "results_summary.json"] {
        assert_eq!(
            fs::read(dirs[0].join(name)).unwrap(),
            fs::read(dirs[1].join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn sweep_epsilon_repeats_the_run_per_radius() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());
    let out_dir = dir.path().join("sweep");
    run(bin()
        .arg("sweep-epsilon")
        .arg("--input")
        .arg(&input)
        .args(["--epsilons", "0.0,0.7", "--k-min", "1", "--k-max", "2"])
        .args(["--random-seeds", "2"])
        .arg("--out-dir")
        .arg(&out_dir));

    let csv = fs::read_to_string(out_dir.join("sweep.csv")).expect("sweep csv written");
    let diverse_rows: Vec<&str> = csv.lines().filter(|l| l.contains("diverse-bjr")).collect();
    assert!(
        diverse_rows.iter().any(|l| l.contains(",0,")),
        "radius 0.0 swept"
    );
    assert!(
        diverse_rows.iter().any(|l| l.contains(",0.7,")),
        "radius 0.7 swept"
    );
    assert!(csv.contains(",bjr,"), "fixed comparator present");
    assert!(csv.contains(",random,"), "fixed comparator present");
}

#[test]
fn out_dir_environment_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());
    let out_dir = dir.path().join("from-env");
    run(bin()
        .arg("benchmark")
        .arg("--input")
        .arg(&input)
        .args(["--rules", "engagement", "--k-min", "1", "--k-max", "2"])
        .env("SLATE_SELECT_OUT_DIR", &out_dir));
    assert!(out_dir.join("results.csv").is_file(), "env override directs output");
}

#[test]
fn ingest_probability_votes_writes_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    fs::write(
        &votes,
        "question_id,user_id,opinion_id,value\n\
         q-a,u1,o1,0.9\n\
         q-a,u1,o2,0.1\n\
         q-a,u2,o1,0.2\n\
         q-a,u2,o2,0.8\n\
         q-b,u1,o1,1.0\n",
    )
    .unwrap();
    let adapter = dir.path().join("adapter.json");
    fs::write(&adapter, r#"{"question_col": "question_id"}"#).unwrap();
    let out_dir = dir.path().join("ingested");

    let output = run(bin()
        .arg("ingest")
        .args(["--format", "probability"])
        .arg("--votes")
        .arg(&votes)
        .arg("--adapter")
        .arg(&adapter)
        .arg("--out-dir")
        .arg(&out_dir));
    let text = stdout_of(&output);
    assert!(text.contains("wrote "), "per-instance summary printed:\n{text}");

    let first = read_instance(&out_dir.join("q-a.json")).expect("instance file readable");
    assert_eq!((first.n_users(), first.n_opinions()), (2, 2));
    assert!(first.matrix().approves(0, 0), "0.9 clears the approval threshold");
    assert!(!first.matrix().approves(0, 1), "0.1 does not");
    let second = read_instance(&out_dir.join("q-b.json")).expect("instance file readable");
    assert_eq!((second.n_users(), second.n_opinions()), (1, 1));
}

#[test]
fn ingest_likert_votes_yields_one_instance_per_block() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("likert.csv");
    let mut body = String::from("group_id,user_id,opinion_id,value\n");
    for block in ["g1", "g2"] {
        for user in 0..5 {
            for opinion in 0..5 {
                let label = if (user + opinion) % 2 == 0 { "AGREE" } else { "DISAGREE" };
                body.push_str(&format!("{block},u{user},s{opinion},{label}\n"));
            }
        }
    }
    fs::write(&votes, body).unwrap();
    let out_dir = dir.path().join("ingested");

    run(bin()
        .arg("ingest")
        .args(["--format", "likert"])
        .arg("--votes")
        .arg(&votes)
        .arg("--out-dir")
        .arg(&out_dir));

    for block in ["g1", "g2"] {
        let instance = read_instance(&out_dir.join(format!("{block}.json")))
            .expect("instance file readable");
        assert_eq!((instance.n_users(), instance.n_opinions()), (5, 5));
    }
}

#[test]
fn exit_codes_separate_usage_from_data_failures() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_chain(dir.path());

    // 0: help and version.
    assert_eq!(run(bin().arg("--help")).status.code(), Some(0));
    assert_eq!(run(bin().arg("--version")).status.code(), Some(0));

    // 1: bad requests — unknown flags or rules, impossible slates.
    assert_eq!(run(bin().arg("select").arg("--bogus")).status.code(), Some(1));
    assert_eq!(
        run(bin()
            .arg("select")
            .args(["--rule", "nope"])
            .arg("--input")
            .arg(&input))
        .status
        .code(),
        Some(1),
        "unknown rule is a usage error"
    );
    assert_eq!(
        run(bin()
            .arg("select")
            .args(["--rule", "jr", "--k", "9"])
            .arg("--input")
            .arg(&input))
        .status
        .code(),
        Some(1),
        "k beyond m is a usage error"
    );
    assert_eq!(
        run(bin()
            .arg("select")
            .args(["--rule", "bridging"])
            .arg("--input")
            .arg(&input))
        .status
        .code(),
        Some(1),
        "group-dependent rule without groups is a usage error"
    );
    assert_eq!(
        run(bin()
            .arg("verify")
            .args(["--slate", "0,9"])
            .arg("--input")
            .arg(&input))
        .status
        .code(),
        Some(1),
        "out-of-range slate is a usage error"
    );

    // 2: data failures — unreadable or malformed inputs.
    assert_eq!(
        run(bin()
            .arg("select")
            .args(["--rule", "jr", "--input", "/nonexistent/instance.json"]))
        .status
        .code(),
        Some(2),
        "missing instance file is a data error"
    );
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{not json").unwrap();
    assert_eq!(
        run(bin()
            .arg("select")
            .args(["--rule", "jr"])
            .arg("--input")
            .arg(&broken))
        .status
        .code(),
        Some(2),
        "malformed instance file is a data error"
    );
}
