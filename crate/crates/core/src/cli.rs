//! Command-line front end: parsing, type checking, compliance, closure
//! exploration and simulation over `.mps` session files and `.env`
//! environment files.
//!
//! Exit codes: 0 accept, 1 reject (type error or non-compliance), 2
//! usage or parse error, 3 internal cap exceeded. Identical invocations
//! produce byte-identical output.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::brute::reachable_envs;
use crate::compliance::{closure, compliance, ClosureOpts, ComplianceError};
use crate::env_lts::{env_graph_dot, minimal_partition, LabelOrder, Oracle};
use crate::parse::{load_env, load_file, LoadError};
use crate::pretty::{print_env, print_process, print_session, print_type};
use crate::semantics::simulate;
use crate::typecheck::{check_file, CheckOptions, SessionCheckError};

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum OracleArg {
    Lex,
    Revlex,
}

impl From<OracleArg> for Oracle {
    fn from(a: OracleArg) -> Oracle {
        match a {
            OracleArg::Lex => Oracle::Lex,
            OracleArg::Revlex => Oracle::RevLex,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum LabelOrderArg {
    Lex,
    Syntactic,
}

impl From<LabelOrderArg> for LabelOrder {
    fn from(a: LabelOrderArg) -> LabelOrder {
        match a {
            LabelOrderArg::Lex => LabelOrder::Lex,
            LabelOrderArg::Syntactic => LabelOrder::Syntactic,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mpstcheck",
    version,
    about = "Type checker and compliance verifier for iso-recursive multiparty sessions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Type-check a session file: every thread against its declared type,
    /// then compliance of every minimal block of the declared environment.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "lex")]
        oracle: OracleArg,
        #[arg(long, value_enum, default_value = "lex")]
        label_order: LabelOrderArg,
        #[arg(long, default_value_t = 10_000)]
        universe_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Decide compliance of every minimal block of an environment file.
    Compliance {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "lex")]
        oracle: OracleArg,
        #[arg(long, value_enum, default_value = "lex")]
        label_order: LabelOrderArg,
        #[arg(long, default_value_t = 10_000)]
        universe_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// List every leaf of the closure of an environment; optionally export
    /// the non-deterministic transition graph as DOT.
    Closure {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "lex")]
        oracle: OracleArg,
        #[arg(long, value_enum, default_value = "lex")]
        label_order: LabelOrderArg,
        #[arg(long, default_value_t = 10_000)]
        universe_cap: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run a session under a seeded uniform scheduler.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        /// Print one `<action> ; <session>` line per step.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Parse a file and print its canonical form.
    Parse {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    #[command(hide = true)]
    Debug {
        #[command(subcommand)]
        command: DebugCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum DebugCommand {
    /// Exhaustive reachability over the non-deterministic environment LTS.
    Reach {
        file: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        cap: usize,
        #[arg(long)]
        json: bool,
    },
}

fn color_mode() -> bool {
    match std::env::var("MPS_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stdout().is_terminal(),
    }
}

fn paint(text: &str, good: bool, color: bool) -> String {
    if color {
        if good {
            format!("\x1b[32m{}\x1b[0m", text)
        } else {
            format!("\x1b[31m{}\x1b[0m", text)
        }
    } else {
        text.to_string()
    }
}

fn read_input(path: &Path, err: &mut dyn Write) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {}", path.display(), e);
        EXIT_USAGE
    })
}

fn load_error_exit(e: &LoadError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {}", e);
    match e {
        LoadError::Parse(_) => EXIT_USAGE,
        _ => EXIT_REJECT,
    }
}

fn compliance_error_exit(e: &ComplianceError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {}", e);
    match e {
        ComplianceError::UniverseCapExceeded { .. } => EXIT_CAP,
        ComplianceError::Env(_) => EXIT_REJECT,
    }
}

/// Run a parsed command line, writing to the given streams; returns the
/// exit code.
pub fn run_to(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Check {
            file,
            oracle,
            label_order,
            universe_cap,
            json,
        } => {
            let text = match read_input(&file, err) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let source = match load_file(&text) {
                Ok(f) => f,
                Err(e) => return load_error_exit(&e, err),
            };
            let closure_opts = ClosureOpts {
                universe_cap,
                label_order: label_order.into(),
            };
            let verdict = match check_file(
                &source,
                &oracle.into(),
                CheckOptions::default(),
                closure_opts,
            ) {
                Ok(v) => v,
                Err(SessionCheckError::Compliance(e)) => return compliance_error_exit(&e, err),
                Err(e) => {
                    let _ = writeln!(err, "error: {}", e);
                    return EXIT_REJECT;
                }
            };
            let code = if verdict.ok { EXIT_ACCEPT } else { EXIT_REJECT };
            if json {
                let mut v = verdict.to_json();
                v["command"] = json!("check");
                v["file"] = json!(file.display().to_string());
                v["exit"] = json!(code);
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap());
            } else {
                let color = color_mode();
                for t in &verdict.threads {
                    let status = if t.typed && t.well_formed {
                        paint("ok", true, color)
                    } else {
                        paint("failed", false, color)
                    };
                    let _ = writeln!(out, "thread {}: {}", t.participant, status);
                }
                for b in &verdict.blocks {
                    let names: Vec<String> = b.participants.iter().map(|p| p.to_string()).collect();
                    let _ = writeln!(
                        out,
                        "block {{{}}}: {} ({} configurations)",
                        names.join(", "),
                        paint(
                            if b.report.verdict {
                                "compliant"
                            } else {
                                "not compliant"
                            },
                            b.report.verdict,
                            color
                        ),
                        b.report.explored
                    );
                }
                for f in &verdict.failures {
                    let _ = writeln!(out, "failure: {}", f);
                }
                let _ = writeln!(
                    out,
                    "{}",
                    paint(
                        if verdict.ok { "accepted" } else { "rejected" },
                        verdict.ok,
                        color
                    )
                );
            }
            code
        }
        Command::Compliance {
            file,
            oracle,
            label_order,
            universe_cap,
            json,
        } => {
            let text = match read_input(&file, err) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let env = match load_env(&text) {
                Ok(d) => d,
                Err(e) => return load_error_exit(&e, err),
            };
            let blocks = match minimal_partition(&env) {
                Ok(b) => b,
                Err(e) => {
                    let _ = writeln!(err, "error: {}", e);
                    return EXIT_USAGE;
                }
            };
            let opts = ClosureOpts {
                universe_cap,
                label_order: label_order.into(),
            };
            let mut reports = Vec::new();
            for block in &blocks {
                match compliance(&oracle.into(), block, opts) {
                    Ok(r) => reports.push(r),
                    Err(e) => return compliance_error_exit(&e, err),
                }
            }
            let overall = reports.iter().all(|r| r.verdict);
            let code = if overall { EXIT_ACCEPT } else { EXIT_REJECT };
            if json {
                let v = json!({
                    "command": "compliance",
                    "file": file.display().to_string(),
                    "overall": overall,
                    "blocks": blocks.iter().zip(&reports).map(|(b, r)| {
                        let mut obj = r.to_json();
                        obj["participants"] = json!(b.participants().map(|p| p.to_string()).collect::<Vec<_>>());
                        obj
                    }).collect::<Vec<_>>(),
                    "exit": code,
                });
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap());
            } else {
                let color = color_mode();
                for (block, report) in blocks.iter().zip(&reports) {
                    let names: Vec<String> = block.participants().map(|p| p.to_string()).collect();
                    let _ = writeln!(
                        out,
                        "block {{{}}}: {} ({} configurations)",
                        names.join(", "),
                        paint(
                            if report.verdict {
                                "compliant"
                            } else {
                                "not compliant"
                            },
                            report.verdict,
                            color
                        ),
                        report.explored
                    );
                    let mut seen = std::collections::BTreeSet::new();
                    for witness in report.leaves.iter().filter(|l| l.is_error()) {
                        if !seen.insert(witness.env().clone()) {
                            continue;
                        }
                        let _ = writeln!(out, "  witness ({}):", witness.kind());
                        for line in print_env(witness.env()).lines() {
                            let _ = writeln!(out, "    {}", line);
                        }
                    }
                }
                let _ = writeln!(
                    out,
                    "{}",
                    paint(
                        if overall {
                            "compliant"
                        } else {
                            "not compliant"
                        },
                        overall,
                        color
                    )
                );
            }
            code
        }
        Command::Closure {
            file,
            oracle,
            label_order,
            universe_cap,
            json,
            dot,
        } => {
            let text = match read_input(&file, err) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let env = match load_env(&text) {
                Ok(d) => d,
                Err(e) => return load_error_exit(&e, err),
            };
            let opts = ClosureOpts {
                universe_cap,
                label_order: label_order.into(),
            };
            let report = match closure(&oracle.into(), &env, opts) {
                Ok(r) => r,
                Err(e) => return compliance_error_exit(&e, err),
            };
            if let Some(dot_path) = dot {
                let reach = match reachable_envs(&env, 50_000) {
                    Ok(r) => r,
                    Err(e) => {
                        let _ = writeln!(err, "error: {}", e);
                        return EXIT_CAP;
                    }
                };
                if let Err(e) = std::fs::write(&dot_path, env_graph_dot(&reach.edges)) {
                    let _ = writeln!(err, "error: cannot write {}: {}", dot_path.display(), e);
                    return EXIT_USAGE;
                }
            }
            let code = if report.verdict {
                EXIT_ACCEPT
            } else {
                EXIT_REJECT
            };
            if json {
                let mut v = report.to_json();
                v["command"] = json!("closure");
                v["file"] = json!(file.display().to_string());
                v["exit"] = json!(code);
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap());
            } else {
                let color = color_mode();
                let _ = writeln!(out, "explored {} configurations", report.explored);
                for leaf in &report.leaves {
                    let _ = writeln!(out, "leaf ({}):", leaf.kind());
                    for line in print_env(leaf.env()).lines() {
                        let _ = writeln!(out, "    {}", line);
                    }
                }
                let _ = writeln!(
                    out,
                    "{}",
                    paint(
                        if report.verdict {
                            "compliant"
                        } else {
                            "not compliant"
                        },
                        report.verdict,
                        color
                    )
                );
            }
            code
        }
        Command::Simulate {
            file,
            seed,
            max_steps,
            trace,
            json,
        } => {
            let text = match read_input(&file, err) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let source = match load_file(&text) {
                Ok(f) => f,
                Err(e) => return load_error_exit(&e, err),
            };
            let session = source.session();
            let run = simulate(&session, seed, max_steps);
            let ended = crate::semantics::is_ended(run.final_state());
            if json {
                let v = json!({
                    "command": "simulate",
                    "file": file.display().to_string(),
                    "seed": seed,
                    "steps": run.steps.iter().map(|(a, s)| {
                        json!({"action": a.to_string(), "session": print_session(s)})
                    }).collect::<Vec<_>>(),
                    "ended": ended,
                    "exit": EXIT_ACCEPT,
                });
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap());
            } else {
                if trace {
                    let rendered = run.render();
                    if !rendered.is_empty() {
                        let _ = writeln!(out, "{}", rendered);
                    }
                }
                let _ = writeln!(
                    out,
                    "{} steps; final state {}",
                    run.steps.len(),
                    if ended { "ended" } else { "not ended" }
                );
            }
            EXIT_ACCEPT
        }
        Command::Parse { file, json } => {
            let text = match read_input(&file, err) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let is_env = file.extension().map(|e| e == "env").unwrap_or(false);
            if is_env {
                let env = match load_env(&text) {
                    Ok(d) => d,
                    Err(e) => return load_error_exit(&e, err),
                };
                if json {
                    let v = json!({
                        "command": "parse",
                        "file": file.display().to_string(),
                        "kind": "env",
                        "pretty": print_env(&env),
                        "exit": EXIT_ACCEPT,
                    });
                    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap());
                } else {
                    let _ = writeln!(out, "{}", print_env(&env));
                }
            } else {
                let source = match load_file(&text) {
                    Ok(f) => f,
                    Err(e) => return load_error_exit(&e, err),
                };
                let decls: Vec<_> = source
                    .decls
                    .iter()
                    .map(|d| (d.name.clone(), d.declared_type.clone(), d.body.clone()))
                    .collect();
                if json {
                    let v = json!({
                        "command": "parse",
                        "file": file.display().to_string(),
                        "kind": "session",
                        "pretty": crate::pretty::print_source_file(&decls),
                        "exit": EXIT_ACCEPT,
                    });
                    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap());
                } else {
                    for (name, t, p) in &decls {
                        let _ = writeln!(out, "participant {}", name);
                        let _ = writeln!(out, "  type {}", print_type(t));
                        let _ = writeln!(out, "  proc {}", print_process(p));
                    }
                }
            }
            EXIT_ACCEPT
        }
        Command::Debug { command } => match command {
            DebugCommand::Reach { file, cap, json } => {
                let text = match read_input(&file, err) {
                    Ok(t) => t,
                    Err(code) => return code,
                };
                let env = match load_env(&text) {
                    Ok(d) => d,
                    Err(e) => return load_error_exit(&e, err),
                };
                let reach = match reachable_envs(&env, cap) {
                    Ok(r) => r,
                    Err(e) => {
                        let _ = writeln!(err, "error: {}", e);
                        return EXIT_CAP;
                    }
                };
                if json {
                    let v = json!({
                        "command": "debug-reach",
                        "file": file.display().to_string(),
                        "visited": reach.visited.len(),
                        "stuck": reach.stuck.iter().map(print_env).collect::<Vec<_>>(),
                        "exit": EXIT_ACCEPT,
                    });
                    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap());
                } else {
                    let _ = writeln!(out, "visited {} environments", reach.visited.len());
                    let _ = writeln!(out, "stuck {}:", reach.stuck.len());
                    for e in &reach.stuck {
                        for line in print_env(e).lines() {
                            let _ = writeln!(out, "    {}", line);
                        }
                        let _ = writeln!(out, "    --");
                    }
                }
                EXIT_ACCEPT
            }
        },
    }
}

/// Parse the process arguments and run; returns the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own help/usage text
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_ACCEPT
            };
        }
    };
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    run_to(cli, &mut out, &mut err)
}
