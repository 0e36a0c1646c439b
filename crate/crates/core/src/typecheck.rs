//! Sorting of expressions, iso-recursive typing of processes, and typing
//! of whole sessions through the minimal partition and the compliance
//! check.
//!
//! Process typing is a structural recursion with backtracking over the sum
//! rules. A recursive process is only typed by a recursive type, and its
//! body is checked against the explicit unfolding; a process variable must
//! match its bound recursive type syntactically. The search terminates by
//! the lexicographic measure (size of process, size of type): every rule
//! but the sum projections shrinks the process, and the projections shrink
//! the type.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::json;

use crate::compliance::{compliance, ClosureOpts, ClosureReport, ComplianceError};
use crate::env_lts::{minimal_partition, Oracle};
use crate::pretty::print_type;
use crate::syntax::{
    is_well_formed_type, unfold, Expr, Participant, ProcVar, Process, Session, SessionType, Sort,
    TypeEnv, VarName,
};

/// Typing context: value variables to sorts, process variables to
/// recursive types.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub sorts: BTreeMap<VarName, Sort>,
    pub procs: BTreeMap<ProcVar, SessionType>,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    pub fn with_sort(&self, x: VarName, s: Sort) -> Context {
        let mut next = self.clone();
        next.sorts.insert(x, s);
        next
    }

    pub fn with_proc(&self, chi: ProcVar, t: SessionType) -> Context {
        debug_assert!(t.is_mu(), "process variables bind recursive types only");
        let mut next = self.clone();
        next.procs.insert(chi, t);
        next
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SortError {
    #[error("S-Var: unbound variable `{0}`")]
    UnboundVar(VarName),
    #[error("S-Lt: `<` needs two operands of the same numeric sort, got {0} and {1}")]
    LtNotNumeric(Sort, Sort),
    #[error("S-Eq: `=` needs operands of equal sort, got {0} and {1}")]
    EqSortsDiffer(Sort, Sort),
    #[error("{rule}: operand must be bool, got {got}")]
    NotBool { rule: &'static str, got: Sort },
}

/// The unique sort of an expression under the context, or a failure.
pub fn sort_expr(ctx: &Context, e: &Expr) -> Result<Sort, SortError> {
    match e {
        Expr::Nat(_) => Ok(Sort::Nat),
        Expr::Int(_) => Ok(Sort::Int),
        Expr::Str(_) => Ok(Sort::Str),
        Expr::Bool(_) => Ok(Sort::Bool),
        Expr::Unit => Ok(Sort::Unit),
        Expr::Var(x) => ctx
            .sorts
            .get(x)
            .copied()
            .ok_or_else(|| SortError::UnboundVar(x.clone())),
        Expr::Lt(a, b) => {
            let (sa, sb) = (sort_expr(ctx, a)?, sort_expr(ctx, b)?);
            if sa == sb && matches!(sa, Sort::Nat | Sort::Int) {
                Ok(Sort::Bool)
            } else {
                Err(SortError::LtNotNumeric(sa, sb))
            }
        }
        Expr::Eq(a, b) => {
            let (sa, sb) = (sort_expr(ctx, a)?, sort_expr(ctx, b)?);
            if sa == sb {
                Ok(Sort::Bool)
            } else {
                Err(SortError::EqSortsDiffer(sa, sb))
            }
        }
        Expr::Not(a) => {
            let s = sort_expr(ctx, a)?;
            if s == Sort::Bool {
                Ok(Sort::Bool)
            } else {
                Err(SortError::NotBool {
                    rule: "S-Neg",
                    got: s,
                })
            }
        }
        Expr::And(a, b) | Expr::Or(a, b) => {
            let rule = if matches!(e, Expr::And(..)) {
                "S-And"
            } else {
                "S-Or"
            };
            for operand in [a, b] {
                let s = sort_expr(ctx, operand)?;
                if s != Sort::Bool {
                    return Err(SortError::NotBool { rule, got: s });
                }
            }
            Ok(Sort::Bool)
        }
    }
}

/// The typing rules, as recorded in derivation traces.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rule {
    TEnd,
    TRec,
    TVar,
    TInp,
    TOut,
    TSum,
    TSumL,
    TSumR,
    TIf,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::TEnd => "T-End",
            Rule::TRec => "T-Rec",
            Rule::TVar => "T-Var",
            Rule::TInp => "T-Inp",
            Rule::TOut => "T-Out",
            Rule::TSum => "T-Sum",
            Rule::TSumL => "T-Sum-L",
            Rule::TSumR => "T-Sum-R",
            Rule::TIf => "T-If",
        })
    }
}

/// The deepest failed alternative of a typing search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeFailure {
    pub rule: String,
    pub message: String,
    pub depth: usize,
}

impl fmt::Display for TypeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.message)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Route a prefix process directly to the unique sum summand carrying
    /// its label instead of blind left-right backtracking.
    pub fast_path: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { fast_path: true }
    }
}

/// Outcome of a process typing search: a pre-order rule trace on success,
/// the deepest failure otherwise.
pub type ProcResult = Result<Vec<Rule>, TypeFailure>;

struct ProcChecker {
    opts: CheckOptions,
    deepest: Option<TypeFailure>,
}

impl ProcChecker {
    fn fail(&mut self, depth: usize, rule: Rule, message: String) -> ProcResult {
        let failure = TypeFailure {
            rule: rule.to_string(),
            message,
            depth,
        };
        // first failure at the deepest point wins
        if self
            .deepest
            .as_ref()
            .map(|f| f.depth < depth)
            .unwrap_or(true)
        {
            self.deepest = Some(failure.clone());
        }
        Err(failure)
    }

    fn check(&mut self, ctx: &Context, p: &Process, t: &SessionType, depth: usize) -> ProcResult {
        match p {
            Process::Inaction => match t {
                SessionType::End => Ok(vec![Rule::TEnd]),
                SessionType::Sum(..) => self.try_sum_projections(ctx, p, t, depth),
                _ => self.fail(
                    depth,
                    Rule::TEnd,
                    format!("terminated process against non-end type {}", print_type(t)),
                ),
            },
            Process::Mu { pvar, body } => match t {
                SessionType::Mu { .. } => {
                    let unfolded = unfold(t).expect("mu unfolds");
                    // unfolding preserves well-formedness of load-checked types
                    debug_assert!(!is_well_formed_type(t) || is_well_formed_type(&unfolded));
                    let ctx2 = ctx.with_proc(pvar.clone(), t.clone());
                    let mut trace = vec![Rule::TRec];
                    trace.extend(self.check(&ctx2, body, &unfolded, depth + 1)?);
                    Ok(trace)
                }
                SessionType::Sum(..) => self.try_sum_projections(ctx, p, t, depth),
                _ => self.fail(
                    depth,
                    Rule::TRec,
                    format!(
                        "recursive process needs a recursive type, got {}",
                        print_type(t)
                    ),
                ),
            },
            Process::PVar(chi) => match ctx.procs.get(chi) {
                Some(bound) if bound == t => Ok(vec![Rule::TVar]),
                Some(_) if matches!(t, SessionType::Sum(..)) => {
                    self.try_sum_projections(ctx, p, t, depth)
                }
                Some(bound) => self.fail(
                    depth,
                    Rule::TVar,
                    format!(
                        "process variable `{}` is bound to {}, not {}",
                        chi,
                        print_type(bound),
                        print_type(t)
                    ),
                ),
                None => self.fail(
                    depth,
                    Rule::TVar,
                    format!("unbound process variable `{}`", chi),
                ),
            },
            Process::If {
                cond,
                then_branch,
                else_branch,
            } => {
                match sort_expr(ctx, cond) {
                    Ok(Sort::Bool) => {}
                    Ok(other) => {
                        return self.fail(
                            depth,
                            Rule::TIf,
                            format!("condition has sort {}, not bool", other),
                        )
                    }
                    Err(e) => return self.fail(depth, Rule::TIf, e.to_string()),
                }
                let mut trace = vec![Rule::TIf];
                trace.extend(self.check(ctx, then_branch, t, depth + 1)?);
                trace.extend(self.check(ctx, else_branch, t, depth + 1)?);
                Ok(trace)
            }
            Process::Sum(p1, p2) => match t {
                SessionType::Sum(t1, t2) => {
                    // T-Sum first: split both sums
                    let attempt: ProcResult = (|| {
                        let mut trace = vec![Rule::TSum];
                        trace.extend(self.check(ctx, p1, t1, depth + 1)?);
                        trace.extend(self.check(ctx, p2, t2, depth + 1)?);
                        Ok(trace)
                    })();
                    match attempt {
                        Ok(trace) => Ok(trace),
                        Err(_) => self.try_sum_projections(ctx, p, t, depth),
                    }
                }
                _ => self.fail(
                    depth,
                    Rule::TSum,
                    format!("sum process against non-sum type {}", print_type(t)),
                ),
            },
            Process::Send {
                peer,
                label,
                expr,
                cont,
            } => match t {
                SessionType::Out {
                    peer: tpeer,
                    label: tlabel,
                    payload,
                    cont: tcont,
                } => {
                    if peer != tpeer || label != tlabel {
                        return self.fail(
                            depth,
                            Rule::TOut,
                            format!(
                                "output `{}!{}` against type prefix `{}!{}`",
                                peer, label, tpeer, tlabel
                            ),
                        );
                    }
                    match sort_expr(ctx, expr) {
                        Ok(s) if s == *payload => {}
                        Ok(s) => {
                            return self.fail(
                                depth,
                                Rule::TOut,
                                format!("payload has sort {}, type expects {}", s, payload),
                            )
                        }
                        Err(e) => return self.fail(depth, Rule::TOut, e.to_string()),
                    }
                    let mut trace = vec![Rule::TOut];
                    trace.extend(self.check(ctx, cont, tcont, depth + 1)?);
                    Ok(trace)
                }
                SessionType::Sum(..) => self.route_prefix(ctx, p, label, t, depth),
                _ => self.fail(
                    depth,
                    Rule::TOut,
                    format!("output process against {}", print_type(t)),
                ),
            },
            Process::Recv {
                peer,
                label,
                binder,
                cont,
            } => match t {
                SessionType::In {
                    peer: tpeer,
                    label: tlabel,
                    payload,
                    cont: tcont,
                } => {
                    if peer != tpeer || label != tlabel {
                        return self.fail(
                            depth,
                            Rule::TInp,
                            format!(
                                "input `{}?{}` against type prefix `{}?{}`",
                                peer, label, tpeer, tlabel
                            ),
                        );
                    }
                    let ctx2 = ctx.with_sort(binder.clone(), *payload);
                    let mut trace = vec![Rule::TInp];
                    trace.extend(self.check(&ctx2, cont, tcont, depth + 1)?);
                    Ok(trace)
                }
                SessionType::Sum(..) => self.route_prefix(ctx, p, label, t, depth),
                _ => self.fail(
                    depth,
                    Rule::TInp,
                    format!("input process against {}", print_type(t)),
                ),
            },
        }
    }

    /// T-Sum-L then T-Sum-R.
    fn try_sum_projections(
        &mut self,
        ctx: &Context,
        p: &Process,
        t: &SessionType,
        depth: usize,
    ) -> ProcResult {
        let SessionType::Sum(t1, t2) = t else {
            unreachable!("projections need a sum type")
        };
        let left = (|| {
            let mut trace = vec![Rule::TSumL];
            trace.extend(self.check(ctx, p, t1, depth + 1)?);
            Ok(trace)
        })();
        if left.is_ok() {
            return left;
        }
        let mut trace = vec![Rule::TSumR];
        trace.extend(self.check(ctx, p, t2, depth + 1)?);
        Ok(trace)
    }

    /// For a prefix process against a well-formed sum: labels in the sum
    /// are unique, so descend straight to the summand carrying the label.
    /// Falls back to blind backtracking when disabled or the label is
    /// absent.
    fn route_prefix(
        &mut self,
        ctx: &Context,
        p: &Process,
        label: &crate::syntax::Label,
        t: &SessionType,
        depth: usize,
    ) -> ProcResult {
        if self.opts.fast_path {
            if let Some(steps) = route_to_label(t, label) {
                let mut trace = Vec::new();
                let mut current = t;
                for step in steps {
                    trace.push(step);
                    let SessionType::Sum(l, r) = current else {
                        unreachable!()
                    };
                    current = if step == Rule::TSumL { l } else { r };
                }
                trace.extend(self.check(ctx, p, current, depth + trace.len())?);
                return Ok(trace);
            }
            return self.fail(
                depth,
                Rule::TSumL,
                format!("no summand of {} carries label `{}`", print_type(t), label),
            );
        }
        self.try_sum_projections(ctx, p, t, depth)
    }
}

/// The T-Sum-L/T-Sum-R descent to the unique summand whose top prefix
/// carries `label`, when it exists.
fn route_to_label(t: &SessionType, label: &crate::syntax::Label) -> Option<Vec<Rule>> {
    match t {
        SessionType::Sum(l, r) => {
            if let Some(mut steps) = route_to_label(l, label) {
                steps.insert(0, Rule::TSumL);
                Some(steps)
            } else if let Some(mut steps) = route_to_label(r, label) {
                steps.insert(0, Rule::TSumR);
                Some(steps)
            } else {
                None
            }
        }
        SessionType::Out { label: tl, .. } | SessionType::In { label: tl, .. } => {
            if tl == label {
                Some(Vec::new())
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Whether `ctx |- p : t` is derivable; on success the pre-order trace of
/// applied rules, on failure the deepest failed alternative.
pub fn check_process(
    ctx: &Context,
    p: &Process,
    t: &SessionType,
    opts: CheckOptions,
) -> ProcResult {
    let mut checker = ProcChecker {
        opts,
        deepest: None,
    };
    match checker.check(ctx, p, t, 0) {
        Ok(trace) => Ok(trace),
        Err(shallow) => Err(checker.deepest.unwrap_or(shallow)),
    }
}

/// Per-thread outcome inside a session verdict.
#[derive(Clone, Debug)]
pub struct ThreadResult {
    pub participant: Participant,
    pub well_formed: bool,
    pub typed: bool,
    pub rule_trace: Vec<Rule>,
    pub failure: Option<String>,
}

/// Compliance outcome for one block of the minimal partition.
#[derive(Clone, Debug)]
pub struct BlockResult {
    pub participants: Vec<Participant>,
    pub report: ClosureReport,
}

/// A recorded typing failure with its source position when known.
#[derive(Clone, Debug)]
pub struct VerdictFailure {
    pub position: Option<usize>,
    pub rule: String,
    pub message: String,
}

impl fmt::Display for VerdictFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.position {
            write!(f, "line {}: {}: {}", line, self.rule, self.message)
        } else {
            write!(f, "{}: {}", self.rule, self.message)
        }
    }
}

/// The full outcome of typing a session.
#[derive(Clone, Debug)]
pub struct TypingVerdict {
    pub ok: bool,
    pub failures: Vec<VerdictFailure>,
    pub threads: Vec<ThreadResult>,
    pub blocks: Vec<BlockResult>,
}

impl TypingVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "ok": self.ok,
            "failures": self.failures.iter().map(|x| {
                json!({
                    "position": x.position,
                    "rule": x.rule,
                    "message": x.message,
                })
            }).collect::<Vec<_>>(),
            "threads": self.threads.iter().map(|t| {
                json!({
                    "participant": t.participant.to_string(),
                    "wellFormed": t.well_formed,
                    "typed": t.typed,
                    "ruleTrace": t.rule_trace.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                    "failure": t.failure,
                })
            }).collect::<Vec<_>>(),
            "blocks": self.blocks.iter().map(|b| {
                let mut obj = b.report.to_json();
                obj["participants"] = json!(b.participants.iter().map(|p| p.to_string()).collect::<Vec<_>>());
                obj
            }).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionCheckError {
    #[error("session participants {got:?} do not match declared environment domain {declared:?}")]
    ParticipantMismatch {
        got: Vec<String>,
        declared: Vec<String>,
    },
    #[error("{0}")]
    Compliance(#[from] ComplianceError),
}

/// Type-check a whole session: each thread against its declared
/// well-formed type, then compliance of every block of the declared
/// environment's minimal partition.
pub fn check_session(
    m: &Session,
    declared: &TypeEnv,
    omega: &Oracle,
    opts: CheckOptions,
    closure_opts: ClosureOpts,
) -> Result<TypingVerdict, SessionCheckError> {
    check_session_at(m, declared, omega, opts, closure_opts, &BTreeMap::new())
}

/// `check_session` with source positions for diagnostics.
pub fn check_session_at(
    m: &Session,
    declared: &TypeEnv,
    omega: &Oracle,
    opts: CheckOptions,
    closure_opts: ClosureOpts,
    positions: &BTreeMap<Participant, usize>,
) -> Result<TypingVerdict, SessionCheckError> {
    let session_parts: Vec<String> = m.participants().iter().map(|p| p.to_string()).collect();
    let declared_parts: Vec<String> = declared.participants().map(|p| p.to_string()).collect();
    {
        let mut sorted = session_parts.clone();
        sorted.sort();
        if sorted != declared_parts {
            return Err(SessionCheckError::ParticipantMismatch {
                got: sorted,
                declared: declared_parts,
            });
        }
    }

    let mut failures = Vec::new();
    let mut threads = Vec::new();
    for thread in &m.threads {
        let t = declared.get(&thread.participant).expect("domains match");
        let position = positions.get(&thread.participant).copied();
        let well_formed = is_well_formed_type(t);
        if !well_formed {
            failures.push(VerdictFailure {
                position,
                rule: "T-Thr".into(),
                message: format!(
                    "declared type of `{}` is not well-formed",
                    thread.participant
                ),
            });
        }
        let (typed, rule_trace, failure) =
            match check_process(&Context::new(), &thread.body, t, opts) {
                Ok(trace) => (true, trace, None),
                Err(f) => {
                    failures.push(VerdictFailure {
                        position,
                        rule: f.rule.clone(),
                        message: format!(
                            "`{}` is not typed by its declared type: {}",
                            thread.participant, f.message
                        ),
                    });
                    (false, Vec::new(), Some(f.to_string()))
                }
            };
        threads.push(ThreadResult {
            participant: thread.participant.clone(),
            well_formed,
            typed,
            rule_trace,
            failure,
        });
    }

    let mut blocks = Vec::new();
    let partition = minimal_partition(declared).map_err(ComplianceError::Env)?;
    for block in partition {
        let report = compliance(omega, &block, closure_opts)?;
        if !report.verdict {
            let witness = report
                .primary_witness()
                .map(|w| format!("{} at {}", w.kind(), crate::pretty::print_env(w.env())))
                .unwrap_or_else(|| "no witness".into());
            failures.push(VerdictFailure {
                position: None,
                rule: "T-Ses".into(),
                message: format!(
                    "block {{{}}} is not compliant: {}",
                    block
                        .participants()
                        .map(|p| p.to_string())
                        .collect::<Vec<_>>()
                        .join(", "),
                    witness
                ),
            });
        }
        blocks.push(BlockResult {
            participants: block.participants().cloned().collect(),
            report,
        });
    }

    let ok = failures.is_empty();
    Ok(TypingVerdict {
        ok,
        failures,
        threads,
        blocks,
    })
}

/// Convenience entry point for a parsed source file.
pub fn check_file(
    file: &crate::parse::SourceFile,
    omega: &Oracle,
    opts: CheckOptions,
    closure_opts: ClosureOpts,
) -> Result<TypingVerdict, SessionCheckError> {
    let positions: BTreeMap<Participant, usize> = file
        .decls
        .iter()
        .map(|d| (d.name.clone(), d.line))
        .collect();
    check_session_at(
        &file.session(),
        &file.declared_env(),
        omega,
        opts,
        closure_opts,
        &positions,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_fixtures as fix;
    use crate::syntax::TypeVar;

    fn ctx() -> Context {
        Context::new()
    }

    #[test]
    fn sorting_covers_the_rules() {
        assert_eq!(sort_expr(&ctx(), &Expr::Bool(true)), Ok(Sort::Bool));
        assert_eq!(sort_expr(&ctx(), &Expr::Nat(3)), Ok(Sort::Nat));
        assert_eq!(sort_expr(&ctx(), &Expr::Int(-3)), Ok(Sort::Int));
        assert_eq!(sort_expr(&ctx(), &Expr::str("s")), Ok(Sort::Str));
        assert_eq!(sort_expr(&ctx(), &Expr::Unit), Ok(Sort::Unit));

        let with_x = ctx().with_sort(VarName::new("x"), Sort::Str);
        assert_eq!(
            sort_expr(&with_x, &Expr::eq(Expr::var("x"), Expr::str("miau"))),
            Ok(Sort::Bool)
        );
        assert!(matches!(
            sort_expr(&ctx(), &Expr::lt(Expr::str("a"), Expr::str("b"))),
            Err(SortError::LtNotNumeric(..))
        ));
        assert!(matches!(
            sort_expr(&ctx(), &Expr::eq(Expr::Nat(1), Expr::Int(1))),
            Err(SortError::EqSortsDiffer(..))
        ));
        assert!(sort_expr(&ctx(), &Expr::var("y")).is_err());
    }

    #[test]
    fn inaction_types_at_end_only() {
        assert_eq!(
            check_process(
                &ctx(),
                &Process::Inaction,
                &SessionType::End,
                CheckOptions::default()
            ),
            Ok(vec![Rule::TEnd])
        );
        assert!(check_process(
            &ctx(),
            &Process::Inaction,
            &SessionType::out("p", "l", Sort::Nat, SessionType::End),
            CheckOptions::default()
        )
        .is_err());
    }

    #[test]
    fn pvar_requires_the_exact_recursive_type() {
        let bound = ctx().with_proc(ProcVar::new("X"), fix::t_a());
        assert_eq!(
            check_process(
                &bound,
                &Process::pvar("X"),
                &fix::t_a(),
                CheckOptions::default()
            ),
            Ok(vec![Rule::TVar])
        );
        // the unfolding is not the bound type
        let err = check_process(
            &bound,
            &Process::pvar("X"),
            &fix::t_star_a(),
            CheckOptions::default(),
        )
        .unwrap_err();
        assert!(err.rule.contains("T-Var") || err.rule.contains("T-Sum"));
    }

    #[test]
    fn corpus_threads_type_against_their_declared_types() {
        for (p, t) in [
            (fix::p_s(), fix::t_s()),
            (fix::p_c(), fix::t_c()),
            (fix::p_star_a(), fix::t_star_a()),
            (fix::p_dprime_a(), fix::t_dprime_a()),
            (fix::p_prime_a(), fix::t_prime_a()),
        ] {
            let r = check_process(&ctx(), &p, &t, CheckOptions::default());
            assert!(r.is_ok(), "{:?}", r);
        }
    }

    #[test]
    fn variant_server_derivation_uses_the_projection_rules() {
        let trace = check_process(
            &ctx(),
            &fix::variant_p_a(),
            &fix::variant_t(),
            CheckOptions::default(),
        )
        .unwrap();
        assert_eq!(trace[0], Rule::TRec);
        assert!(trace.contains(&Rule::TSum));
        assert!(trace.contains(&Rule::TIf));
        assert!(trace.contains(&Rule::TSumL));
        assert!(trace.contains(&Rule::TSumR));
        // the same derivation is found without the label routing
        let slow = check_process(
            &ctx(),
            &fix::variant_p_a(),
            &fix::variant_t(),
            CheckOptions { fast_path: false },
        )
        .unwrap();
        assert_eq!(trace, slow);
    }

    #[test]
    fn ill_typed_processes_report_the_deepest_failure() {
        // client sends a number where the type expects a string
        let bad = Process::mu(
            "X",
            Process::sum(
                Process::recv(
                    "s",
                    "login",
                    "x",
                    Process::sum(
                        Process::send("a", "pwd", Expr::Nat(4), Process::pvar("X")),
                        Process::send("a", "ssh", Expr::Unit, Process::pvar("X")),
                    ),
                ),
                Process::recv(
                    "s",
                    "cancel",
                    "x",
                    Process::send("a", "quit", Expr::Unit, Process::Inaction),
                ),
            ),
        );
        let err = check_process(&ctx(), &bad, &fix::t_c(), CheckOptions::default()).unwrap_err();
        assert_eq!(err.rule, "T-Out");
        assert!(err.message.contains("nat"), "{}", err.message);
    }

    #[test]
    fn oauth_session_is_accepted() {
        let verdict = check_session(
            &fix::oauth_session(),
            &fix::delta(),
            &Oracle::Lex,
            CheckOptions::default(),
            ClosureOpts::default(),
        )
        .unwrap();
        assert!(verdict.ok, "failures: {:?}", verdict.failures);
        assert!(verdict.blocks.iter().all(|b| b.report.verdict));
    }

    #[test]
    fn two_attempts_session_is_rejected_with_the_lock_witness() {
        let verdict = check_session(
            &fix::two_attempts_session(),
            &fix::delta_dprime(),
            &Oracle::Lex,
            CheckOptions::default(),
            ClosureOpts::default(),
        )
        .unwrap();
        assert!(!verdict.ok);
        // every thread still types; the block is the problem
        assert!(verdict.threads.iter().all(|t| t.typed));
        let lock_witness = verdict.blocks.iter().any(|b| {
            b.report.leaves.iter().any(|l| {
                matches!(l, crate::compliance::ClosureLeaf::StuckDeadlock { env, .. }
                    if *env == fix::delta_lock())
            })
        });
        assert!(lock_witness);
    }

    #[test]
    fn single_ended_thread_is_accepted() {
        let m = Session::new(vec![crate::syntax::Thread {
            participant: Participant::new("p"),
            body: Process::Inaction,
        }])
        .unwrap();
        let d = TypeEnv::from_pairs(vec![(Participant::new("p"), SessionType::End)]);
        let verdict = check_session(
            &m,
            &d,
            &Oracle::Lex,
            CheckOptions::default(),
            ClosureOpts::default(),
        )
        .unwrap();
        assert!(verdict.ok);
    }

    #[test]
    fn participant_mismatch_is_an_error() {
        let m = Session::new(vec![crate::syntax::Thread {
            participant: Participant::new("p"),
            body: Process::Inaction,
        }])
        .unwrap();
        let d = TypeEnv::from_pairs(vec![(Participant::new("q"), SessionType::End)]);
        assert!(matches!(
            check_session(
                &m,
                &d,
                &Oracle::Lex,
                CheckOptions::default(),
                ClosureOpts::default()
            ),
            Err(SessionCheckError::ParticipantMismatch { .. })
        ));
    }

    #[test]
    fn verdict_is_invariant_under_thread_permutation() {
        let m = fix::oauth_session();
        let mut rev = m.clone();
        rev.threads.reverse();
        let a = check_session(
            &m,
            &fix::delta(),
            &Oracle::Lex,
            CheckOptions::default(),
            ClosureOpts::default(),
        )
        .unwrap();
        let b = check_session(
            &rev,
            &fix::delta(),
            &Oracle::Lex,
            CheckOptions::default(),
            ClosureOpts::default(),
        )
        .unwrap();
        assert_eq!(a.ok, b.ok);
    }

    #[test]
    fn fast_path_agreement_on_corpus() {
        for (p, t) in [
            (fix::p_s(), fix::t_s()),
            (fix::p_c(), fix::t_c()),
            (fix::p_star_a(), fix::t_star_a()),
            (fix::variant_p_a(), fix::variant_t()),
        ] {
            let fast = check_process(&ctx(), &p, &t, CheckOptions { fast_path: true });
            let slow = check_process(&ctx(), &p, &t, CheckOptions { fast_path: false });
            assert_eq!(fast.is_ok(), slow.is_ok());
            if fast.is_ok() {
                assert!(slow.is_ok());
            }
        }
        let _ = TypeVar::new("X");
    }
}
