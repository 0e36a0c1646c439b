//! Pretty-printing of types, expressions, processes, environments and
//! sessions. Printing is total, deterministic, and inverse to the parser:
//! `parse(print(x)) = x` on ASTs.
//!
//! `rec X .` and the `else` branch of a conditional extend maximally to
//! the right, so a left summand whose rightmost spine ends in one of those
//! forms is parenthesized to stop it from swallowing the `+ ...` tail.

use std::fmt::Write;

use crate::syntax::{Expr, Process, Session, SessionType, TypeEnv};

pub fn print_type(t: &SessionType) -> String {
    let mut s = String::new();
    write_type_sum(&mut s, t);
    s
}

/// True when printing `t` without parentheses would leave a trailing
/// `rec`-body able to capture a following `+ ...`.
fn type_tail_open(t: &SessionType) -> bool {
    match t {
        SessionType::Mu { .. } => true,
        SessionType::Sum(..) => true,
        SessionType::Out { cont, .. } | SessionType::In { cont, .. } => match cont.as_ref() {
            SessionType::Sum(..) => false, // printed parenthesized
            c => type_tail_open(c),
        },
        SessionType::End | SessionType::Var(_) => false,
    }
}

fn write_type_sum(s: &mut String, t: &SessionType) {
    match t {
        SessionType::Sum(l, r) => {
            if type_tail_open(l) {
                s.push('(');
                write_type_sum(s, l);
                s.push_str(") + ");
            } else {
                write_type_atom(s, l);
                s.push_str(" + ");
            }
            write_type_sum(s, r);
        }
        _ => write_type_atom(s, t),
    }
}

fn write_type_atom(s: &mut String, t: &SessionType) {
    match t {
        SessionType::Out {
            peer,
            label,
            payload,
            cont,
        } => {
            let _ = write!(s, "{}!{}({}).", peer, label, payload);
            write_type_cont(s, cont);
        }
        SessionType::In {
            peer,
            label,
            payload,
            cont,
        } => {
            let _ = write!(s, "{}?{}({}).", peer, label, payload);
            write_type_cont(s, cont);
        }
        SessionType::Sum(..) => {
            s.push('(');
            write_type_sum(s, t);
            s.push(')');
        }
        SessionType::End => s.push_str("end"),
        SessionType::Mu { var, body } => {
            let _ = write!(s, "rec {} . ", var);
            write_type_sum(s, body);
        }
        SessionType::Var(v) => {
            let _ = write!(s, "{}", v);
        }
    }
}

fn write_type_cont(s: &mut String, cont: &SessionType) {
    match cont {
        SessionType::Sum(..) => {
            s.push('(');
            write_type_sum(s, cont);
            s.push(')');
        }
        _ => write_type_atom(s, cont),
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr_or(&mut s, e);
    s
}

fn write_expr_or(s: &mut String, e: &Expr) {
    match e {
        Expr::Or(a, b) => {
            write_expr_and(s, a);
            s.push_str(" or ");
            write_expr_or(s, b);
        }
        _ => write_expr_and(s, e),
    }
}

fn write_expr_and(s: &mut String, e: &Expr) {
    match e {
        Expr::And(a, b) => {
            write_expr_cmp(s, a);
            s.push_str(" and ");
            write_expr_and(s, b);
        }
        Expr::Or(..) => {
            s.push('(');
            write_expr_or(s, e);
            s.push(')');
        }
        _ => write_expr_cmp(s, e),
    }
}

fn write_expr_cmp(s: &mut String, e: &Expr) {
    match e {
        Expr::Lt(a, b) => {
            write_expr_unary(s, a);
            s.push_str(" < ");
            write_expr_unary(s, b);
        }
        Expr::Eq(a, b) => {
            write_expr_unary(s, a);
            s.push_str(" = ");
            write_expr_unary(s, b);
        }
        Expr::And(..) | Expr::Or(..) => {
            s.push('(');
            write_expr_or(s, e);
            s.push(')');
        }
        _ => write_expr_unary(s, e),
    }
}

fn write_expr_unary(s: &mut String, e: &Expr) {
    match e {
        Expr::Not(a) => {
            s.push_str("not ");
            write_expr_unary(s, a);
        }
        _ => write_expr_atom(s, e),
    }
}

fn write_expr_atom(s: &mut String, e: &Expr) {
    match e {
        Expr::Nat(n) => {
            let _ = write!(s, "{}", n);
        }
        // integers always carry an explicit sign; plain decimals are naturals
        Expr::Int(z) => {
            if *z < 0 {
                let _ = write!(s, "{}", z);
            } else {
                let _ = write!(s, "+{}", z);
            }
        }
        Expr::Str(text) => {
            s.push('"');
            for ch in text.chars() {
                match ch {
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    '\n' => s.push_str("\\n"),
                    '\t' => s.push_str("\\t"),
                    c => s.push(c),
                }
            }
            s.push('"');
        }
        Expr::Bool(true) => s.push_str("true"),
        Expr::Bool(false) => s.push_str("false"),
        Expr::Unit => s.push_str("()"),
        Expr::Var(x) => {
            let _ = write!(s, "{}", x);
        }
        _ => {
            s.push('(');
            write_expr_or(s, e);
            s.push(')');
        }
    }
}

pub fn print_process(p: &Process) -> String {
    let mut s = String::new();
    write_proc_sum(&mut s, p);
    s
}

fn proc_tail_open(p: &Process) -> bool {
    match p {
        Process::Mu { .. } | Process::If { .. } => true,
        Process::Sum(..) => true,
        Process::Send { cont, .. } | Process::Recv { cont, .. } => match cont.as_ref() {
            Process::Sum(..) => false,
            c => proc_tail_open(c),
        },
        Process::Inaction | Process::PVar(_) => false,
    }
}

fn write_proc_sum(s: &mut String, p: &Process) {
    match p {
        Process::Sum(l, r) => {
            if proc_tail_open(l) {
                s.push('(');
                write_proc_sum(s, l);
                s.push_str(") + ");
            } else {
                write_proc_atom(s, l);
                s.push_str(" + ");
            }
            write_proc_sum(s, r);
        }
        _ => write_proc_atom(s, p),
    }
}

fn write_proc_atom(s: &mut String, p: &Process) {
    match p {
        Process::Send {
            peer,
            label,
            expr,
            cont,
        } => {
            let _ = write!(s, "{}!{}<{}>.", peer, label, print_expr(expr));
            write_proc_cont(s, cont);
        }
        Process::Recv {
            peer,
            label,
            binder,
            cont,
        } => {
            let _ = write!(s, "{}?{}({}).", peer, label, binder);
            write_proc_cont(s, cont);
        }
        Process::Sum(..) => {
            s.push('(');
            write_proc_sum(s, p);
            s.push(')');
        }
        Process::Mu { pvar, body } => {
            let _ = write!(s, "rec {} . ", pvar);
            write_proc_sum(s, body);
        }
        Process::PVar(v) => {
            let _ = write!(s, "{}", v);
        }
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = write!(s, "if {} then ", print_expr(cond));
            write_proc_sum(s, then_branch);
            s.push_str(" else ");
            write_proc_sum(s, else_branch);
        }
        Process::Inaction => s.push('0'),
    }
}

fn write_proc_cont(s: &mut String, cont: &Process) {
    match cont {
        Process::Sum(..) => {
            s.push('(');
            write_proc_sum(s, cont);
            s.push(')');
        }
        _ => write_proc_atom(s, cont),
    }
}

/// One `participant : type` binding per line, in canonical participant
/// order.
pub fn print_env(d: &TypeEnv) -> String {
    let mut lines = Vec::new();
    for (p, t) in d.iter() {
        lines.push(format!("{} : {}", p, print_type(t)));
    }
    lines.join("\n")
}

/// A session as `p <| P || q <| Q || ...`, in thread order.
pub fn print_session(m: &Session) -> String {
    m.threads
        .iter()
        .map(|t| format!("{} <| {}", t.participant, print_process(&t.body)))
        .collect::<Vec<_>>()
        .join(" || ")
}

/// A session in the `.mps` file syntax.
pub fn print_source_file(decls: &[(crate::syntax::Participant, SessionType, Process)]) -> String {
    let mut out = String::new();
    for (p, t, body) in decls {
        let _ = writeln!(out, "participant {}", p);
        let _ = writeln!(out, "  type {}", print_type(t));
        let _ = writeln!(out, "  proc {}", print_process(body));
        out.push('\n');
    }
    out
}
