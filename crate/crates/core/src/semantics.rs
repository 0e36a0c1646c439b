//! Operational semantics of multiparty sessions: expression evaluation,
//! thread- and session-level labelled transitions, and a seeded simulator.
//!
//! Transition enumeration is deterministic: threads are scanned in session
//! order and sum branches left to right, so successor lists are reproducible
//! and traces can be frozen in tests. Structural congruence is realized by
//! matching threads by participant name instead of rewriting the thread
//! list, so thread order is preserved in successors.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pretty::print_session;
use crate::syntax::{
    substitute_proc, substitute_value, Expr, Label, Participant, Process, Session, Value, VarName,
};

/// Session-level action: an internal step or a synchronization
/// `l@p><q` between the receiver `p` and the sender `q`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SessionAction {
    Tau,
    Sync {
        label: Label,
        receiver: Participant,
        sender: Participant,
    },
}

impl fmt::Display for SessionAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionAction::Tau => f.write_str("tau"),
            SessionAction::Sync {
                label,
                receiver,
                sender,
            } => write!(f, "{}@{}><{}", label, receiver, sender),
        }
    }
}

/// Thread-level action. An input's value stays symbolic (`None`) until a
/// matching sender supplies it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ThreadAction {
    In {
        peer: Participant,
        label: Label,
        value: Option<Value>,
    },
    Out {
        peer: Participant,
        label: Label,
        value: Value,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}` in expression")]
    UnboundVar(VarName),
    #[error("operands of `{op}` have incompatible sorts")]
    SortMismatch { op: &'static str },
}

/// Big-step evaluation of a closed, well-sorted expression.
pub fn eval_expr(e: &Expr) -> Result<Value, EvalError> {
    match e {
        Expr::Nat(n) => Ok(Value::Nat(*n)),
        Expr::Int(z) => Ok(Value::Int(*z)),
        Expr::Str(s) => Ok(Value::Str(s.clone())),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Unit => Ok(Value::Unit),
        Expr::Var(x) => Err(EvalError::UnboundVar(x.clone())),
        Expr::Lt(a, b) => match (eval_expr(a)?, eval_expr(b)?) {
            (Value::Nat(x), Value::Nat(y)) => Ok(Value::Bool(x < y)),
            (Value::Int(x), Value::Int(y)) => Ok(Value::Bool(x < y)),
            _ => Err(EvalError::SortMismatch { op: "<" }),
        },
        Expr::Eq(a, b) => {
            let (va, vb) = (eval_expr(a)?, eval_expr(b)?);
            if va.sort() == vb.sort() {
                Ok(Value::Bool(va == vb))
            } else {
                Err(EvalError::SortMismatch { op: "=" })
            }
        }
        Expr::Not(a) => match eval_expr(a)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            _ => Err(EvalError::SortMismatch { op: "not" }),
        },
        Expr::And(a, b) => match (eval_expr(a)?, eval_expr(b)?) {
            (Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(x && y)),
            _ => Err(EvalError::SortMismatch { op: "and" }),
        },
        Expr::Or(a, b) => match (eval_expr(a)?, eval_expr(b)?) {
            (Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(x || y)),
            _ => Err(EvalError::SortMismatch { op: "or" }),
        },
    }
}

/// An input or output step a process can take, with enough residue to
/// build the successor once a value is known.
#[derive(Clone, Debug)]
enum IoStep {
    In {
        peer: Participant,
        label: Label,
        binder: VarName,
        cont: Process,
    },
    Out {
        peer: Participant,
        label: Label,
        value: Value,
        cont: Process,
    },
}

/// All input/output steps of a process body, scanning sum branches left to
/// right. Internal (tau) possibilities are enumerated separately.
fn io_steps(p: &Process) -> Vec<IoStep> {
    match p {
        Process::Send {
            peer,
            label,
            expr,
            cont,
        } => match eval_expr(expr) {
            Ok(value) => vec![IoStep::Out {
                peer: peer.clone(),
                label: label.clone(),
                value,
                cont: (**cont).clone(),
            }],
            Err(_) => Vec::new(),
        },
        Process::Recv {
            peer,
            label,
            binder,
            cont,
        } => vec![IoStep::In {
            peer: peer.clone(),
            label: label.clone(),
            binder: binder.clone(),
            cont: (**cont).clone(),
        }],
        Process::Sum(l, r) => {
            let mut steps = io_steps(l);
            steps.extend(io_steps(r));
            steps
        }
        _ => Vec::new(),
    }
}

/// Internal steps of a process body: unfolding a top-level recursion, or
/// resolving a conditional (also underneath sums, where taking the step
/// discards the sibling branches).
fn tau_steps(p: &Process) -> Vec<Process> {
    match p {
        Process::Mu { pvar, body } => {
            vec![substitute_proc(body, pvar, p)]
        }
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => match eval_expr(cond) {
            Ok(Value::Bool(true)) => vec![(**then_branch).clone()],
            Ok(Value::Bool(false)) => vec![(**else_branch).clone()],
            _ => Vec::new(),
        },
        Process::Sum(l, r) => {
            let mut steps = tau_steps(l);
            steps.extend(tau_steps(r));
            steps
        }
        _ => Vec::new(),
    }
}

/// One participant running a process; re-exported thread view used by the
/// transition functions.
pub use crate::syntax::Thread;

/// The input/output-labelled successors of a single thread. Input values
/// are symbolic until a matching sender resolves them, so the successor of
/// an input step is the continuation with the binder still pending; the
/// session-level rules perform the substitution.
pub fn thread_transitions(t: &Thread) -> Vec<(ThreadAction, Thread)> {
    io_steps(&t.body)
        .into_iter()
        .map(|step| match step {
            IoStep::In {
                peer,
                label,
                binder: _,
                cont,
            } => (
                ThreadAction::In {
                    peer,
                    label,
                    value: None,
                },
                Thread {
                    participant: t.participant.clone(),
                    body: cont,
                },
            ),
            IoStep::Out {
                peer,
                label,
                value,
                cont,
            } => (
                ThreadAction::Out { peer, label, value },
                Thread {
                    participant: t.participant.clone(),
                    body: cont,
                },
            ),
        })
        .collect()
}

/// The complete successor set of a closed session: internal steps
/// (recursion unfolding, conditional resolution) and synchronizations.
pub fn session_transitions(m: &Session) -> Vec<(SessionAction, Session)> {
    let mut out = Vec::new();
    // tau successors, thread by thread
    for t in &m.threads {
        for body in tau_steps(&t.body) {
            out.push((SessionAction::Tau, m.with_body(&t.participant, body)));
        }
    }
    // synchronizations: receiver thread i, sender thread j
    for ti in &m.threads {
        let ins: Vec<IoStep> = io_steps(&ti.body)
            .into_iter()
            .filter(|s| matches!(s, IoStep::In { .. }))
            .collect();
        if ins.is_empty() {
            continue;
        }
        for tj in &m.threads {
            if ti.participant == tj.participant {
                continue;
            }
            for inp in &ins {
                let IoStep::In {
                    peer: in_peer,
                    label: in_label,
                    binder,
                    cont: in_cont,
                } = inp
                else {
                    continue;
                };
                if in_peer != &tj.participant {
                    continue;
                }
                for outp in io_steps(&tj.body) {
                    let IoStep::Out {
                        peer: out_peer,
                        label: out_label,
                        value,
                        cont: out_cont,
                    } = outp
                    else {
                        continue;
                    };
                    if out_peer != ti.participant || &out_label != in_label {
                        continue;
                    }
                    let next = m
                        .with_body(&ti.participant, substitute_value(in_cont, binder, &value))
                        .with_body(&tj.participant, out_cont);
                    out.push((
                        SessionAction::Sync {
                            label: in_label.clone(),
                            receiver: ti.participant.clone(),
                            sender: tj.participant.clone(),
                        },
                        next,
                    ));
                }
            }
        }
    }
    out
}

/// Every thread has terminated.
pub fn is_ended(m: &Session) -> bool {
    m.threads.iter().all(|t| t.body.is_inaction())
}

/// A recorded execution: the steps taken and the states they lead to.
#[derive(Clone, Debug)]
pub struct Trace {
    pub start: Session,
    pub steps: Vec<(SessionAction, Session)>,
}

impl Trace {
    pub fn final_state(&self) -> &Session {
        self.steps.last().map(|(_, s)| s).unwrap_or(&self.start)
    }

    pub fn actions(&self) -> Vec<&SessionAction> {
        self.steps.iter().map(|(a, _)| a).collect()
    }

    /// One line per step: `<action> ; <pretty session>`.
    pub fn render(&self) -> String {
        self.steps
            .iter()
            .map(|(a, s)| format!("{} ; {}", a, print_session(s)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Run the session for at most `max_steps` steps, choosing uniformly among
/// the enabled transitions with a deterministic seeded generator. Stops
/// early when no transition is enabled.
pub fn simulate(m: &Session, seed: u64, max_steps: usize) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = m.clone();
    let mut steps = Vec::new();
    for _ in 0..max_steps {
        let succs = session_transitions(&current);
        if succs.is_empty() {
            break;
        }
        let idx = rng.gen_range(0..succs.len());
        let (action, next) = succs[idx].clone();
        steps.push((action, next.clone()));
        current = next;
    }
    Trace {
        start: m.clone(),
        steps,
    }
}

/// Participants that appear in the session.
pub fn session_participants(m: &Session) -> BTreeSet<Participant> {
    m.threads.iter().map(|t| t.participant.clone()).collect()
}
