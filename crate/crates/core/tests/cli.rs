//! End-to-end tests of the command-line surface: exit codes, output
//! determinism, DOT export, and JSON conformance to the shipped schema.

use std::path::{Path, PathBuf};

use clap::Parser;
use mpstcheck::cli::{run_to, Cli, EXIT_ACCEPT, EXIT_REJECT, EXIT_USAGE};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let cli = Cli::try_parse_from(std::iter::once("mpstcheck").chain(args.iter().copied()))
        .expect("argument parsing");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_to(cli, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn check_accepts_the_authorisation_protocol() {
    let path = corpus("oauth.mps");
    let (code, out, _) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ACCEPT);
    assert!(out.contains("accepted"), "{}", out);
}

#[test]
fn check_rejects_the_two_attempt_variant() {
    let path = corpus("oauth_two_attempts.mps");
    let (code, out, _) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_REJECT);
    assert!(out.contains("rejected"), "{}", out);
}

#[test]
fn compliance_reports_the_lock_witness() {
    let path = corpus("oauth_two_attempts.env");
    let (code, out, _) = run(&["compliance", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_REJECT);
    assert!(out.contains("witness (deadlock)"), "{}", out);
    assert!(out.contains("a : end"), "{}", out);
}

#[test]
fn compliance_accepts_the_protocol_environment() {
    let path = corpus("oauth.env");
    let (code, out, _) = run(&["compliance", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ACCEPT, "{}", out);
}

#[test]
fn closure_lists_leaves_and_exports_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot_path = dir.path().join("graph.dot");
    let path = corpus("oauth.env");
    let (code, out, _) = run(&[
        "closure",
        path.to_str().unwrap(),
        "--dot",
        dot_path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_ACCEPT);
    assert!(out.contains("leaf (consumed)"), "{}", out);
    let dot = std::fs::read_to_string(&dot_path).unwrap();
    assert!(dot.starts_with("digraph envs {"));
    assert!(dot.contains("->"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let oauth = corpus("oauth.mps").display().to_string();
    let env = corpus("oauth_two_attempts.env").display().to_string();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["check", &oauth],
        vec![
            "simulate",
            &oauth,
            "--seed",
            "11",
            "--max-steps",
            "20",
            "--trace",
        ],
        vec!["closure", &env],
    ];
    for args in invocations {
        let first = run(&args);
        let second = run(&args);
        assert_eq!(first, second, "non-deterministic output for {:?}", args);
    }
}

#[test]
fn parse_prints_canonical_form_that_reparses() {
    let path = corpus("oauth.mps");
    let (code, out, _) = run(&["parse", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ACCEPT);
    let reparsed = mpstcheck::parse::parse_file(&out).unwrap();
    let original = mpstcheck::parse::parse_file(&std::fs::read_to_string(&path).unwrap()).unwrap();
    // equal modulo source positions
    let strip = |f: &mpstcheck::parse::SourceFile| {
        f.decls
            .iter()
            .map(|d| (d.name.clone(), d.declared_type.clone(), d.body.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&reparsed), strip(&original));

    let path = corpus("oauth.env");
    let (code, out, _) = run(&["parse", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ACCEPT);
    let reparsed = mpstcheck::parse::parse_env(&out).unwrap();
    let original = mpstcheck::parse::parse_env(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(reparsed, original);
}

#[test]
fn non_contractive_type_is_rejected_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loop.env");
    std::fs::write(&path, "p : rec X . X\n").unwrap();
    let (code, _, err) = run(&["parse", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_REJECT);
    assert!(err.contains("contractive"), "{}", err);
}

#[test]
fn malformed_input_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mps");
    std::fs::write(&path, "participant p type q! proc 0").unwrap();
    let (code, _, err) = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("parse error"), "{}", err);

    let (code, _, _) = run(&["check", "/definitely/not/there.mps"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn oracle_and_label_order_flags_are_accepted() {
    let path = corpus("oauth.mps");
    for extra in [
        vec!["--oracle", "revlex"],
        vec!["--label-order", "syntactic"],
        vec!["--oracle", "revlex", "--label-order", "syntactic"],
    ] {
        let mut args = vec!["check", path.to_str().unwrap()];
        args.extend(extra);
        let (code, out, _) = run(&args);
        assert_eq!(code, EXIT_ACCEPT, "{:?}: {}", args, out);
    }
}

#[test]
fn simulate_trace_renders_actions_and_sessions() {
    let path = corpus("oauth.mps");
    let (code, out, _) = run(&[
        "simulate",
        path.to_str().unwrap(),
        "--seed",
        "3",
        "--max-steps",
        "6",
        "--trace",
    ]);
    assert_eq!(code, EXIT_ACCEPT);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.len() > 1);
    assert!(lines[0].contains(" ; "), "{}", lines[0]);
}

#[test]
fn debug_reach_reports_stuck_environments() {
    let path = corpus("oauth_two_attempts.env");
    let (code, out, _) = run(&["debug", "reach", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ACCEPT);
    assert!(out.contains("visited"), "{}", out);
    assert!(out.contains("a : end"), "{}", out);
}

fn schema_validator() -> jsonschema::Validator {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("docs/schema.json");
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn json_output_of_every_command_validates_against_the_schema() {
    let validator = schema_validator();
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.env");
    std::fs::write(&single, "p : end\n").unwrap();

    let invocations: Vec<Vec<String>> = vec![
        vec![
            "check".into(),
            corpus("oauth.mps").display().to_string(),
            "--json".into(),
        ],
        vec![
            "check".into(),
            corpus("oauth_two_attempts.mps").display().to_string(),
            "--json".into(),
        ],
        vec![
            "compliance".into(),
            corpus("oauth_two_attempts.env").display().to_string(),
            "--json".into(),
        ],
        vec![
            "compliance".into(),
            single.display().to_string(),
            "--json".into(),
        ],
        vec![
            "closure".into(),
            corpus("oauth.env").display().to_string(),
            "--json".into(),
        ],
        vec![
            "simulate".into(),
            corpus("oauth.mps").display().to_string(),
            "--seed".into(),
            "5".into(),
            "--max-steps".into(),
            "8".into(),
            "--json".into(),
        ],
        vec![
            "parse".into(),
            corpus("oauth.mps").display().to_string(),
            "--json".into(),
        ],
        vec![
            "parse".into(),
            corpus("locked.env").display().to_string(),
            "--json".into(),
        ],
        vec![
            "debug".into(),
            "reach".into(),
            corpus("mismatch.env").display().to_string(),
            "--json".into(),
        ],
    ];
    for args in invocations {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (_, out, err) = run(&argv);
        assert!(err.is_empty(), "stderr for {:?}: {}", args, err);
        let value: serde_json::Value =
            serde_json::from_str(&out).unwrap_or_else(|e| panic!("bad json for {:?}: {}", args, e));
        let errors: Vec<String> = validator
            .iter_errors(&value)
            .map(|e| e.to_string())
            .collect();
        assert!(
            errors.is_empty(),
            "schema violations for {:?}: {:?}",
            args,
            errors
        );
    }
}
