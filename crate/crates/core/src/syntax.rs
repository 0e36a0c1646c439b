//! Inductive syntax of sorts, session types, expressions, processes,
//! sessions and type environments, together with substitution and the
//! well-formedness predicates (contractiveness, closedness, uniform sums).
//!
//! Equality everywhere is syntactic: a recursive type `mu X.T` is *not*
//! equal to its unfolding `T{mu X.T/X}` unless the two terms coincide
//! symbol by symbol. All values are immutable; every operation is a pure
//! function.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! name_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

name_type! {
    /// A named endpoint of a multiparty session (lowercase identifier).
    Participant
}
name_type! {
    /// A communication label (lowercase identifier).
    Label
}
name_type! {
    /// A recursion variable in types (uppercase identifier).
    TypeVar
}
name_type! {
    /// A recursion variable in processes (uppercase identifier).
    ProcVar
}
name_type! {
    /// A value variable bound by an input prefix (lowercase identifier).
    VarName
}

/// Base payload sorts.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Sort {
    Nat,
    Int,
    Str,
    Bool,
    Unit,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Nat => "nat",
            Sort::Int => "int",
            Sort::Str => "str",
            Sort::Bool => "bool",
            Sort::Unit => "unit",
        })
    }
}

/// Polarity of a communication prefix: `!` for output, `?` for input.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Polarity {
    Send,
    Recv,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Send => "!",
            Polarity::Recv => "?",
        })
    }
}

/// Iso-recursive session types.
///
/// `Sum` is kept binary; n-ary branching and selection are right-nested
/// sums. `Mu(X, T)` binds `X` in `T`; unfolding is an explicit operation
/// and never happens implicitly during equality checks.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SessionType {
    Out {
        peer: Participant,
        label: Label,
        payload: Sort,
        cont: Box<SessionType>,
    },
    In {
        peer: Participant,
        label: Label,
        payload: Sort,
        cont: Box<SessionType>,
    },
    Sum(Box<SessionType>, Box<SessionType>),
    End,
    Mu {
        var: TypeVar,
        body: Box<SessionType>,
    },
    Var(TypeVar),
}

impl SessionType {
    pub fn out(
        peer: impl Into<String>,
        label: impl Into<String>,
        payload: Sort,
        cont: SessionType,
    ) -> SessionType {
        SessionType::Out {
            peer: Participant::new(peer),
            label: Label::new(label),
            payload,
            cont: Box::new(cont),
        }
    }

    pub fn inp(
        peer: impl Into<String>,
        label: impl Into<String>,
        payload: Sort,
        cont: SessionType,
    ) -> SessionType {
        SessionType::In {
            peer: Participant::new(peer),
            label: Label::new(label),
            payload,
            cont: Box::new(cont),
        }
    }

    pub fn sum(l: SessionType, r: SessionType) -> SessionType {
        SessionType::Sum(Box::new(l), Box::new(r))
    }

    /// Right-nested sum of one or more alternatives.
    pub fn sum_all(mut parts: Vec<SessionType>) -> SessionType {
        let last = parts.pop().expect("sum_all needs at least one summand");
        parts
            .into_iter()
            .rev()
            .fold(last, |acc, t| SessionType::sum(t, acc))
    }

    pub fn mu(var: impl Into<String>, body: SessionType) -> SessionType {
        SessionType::Mu {
            var: TypeVar::new(var),
            body: Box::new(body),
        }
    }

    pub fn var(v: impl Into<String>) -> SessionType {
        SessionType::Var(TypeVar::new(v))
    }

    pub fn is_end(&self) -> bool {
        matches!(self, SessionType::End)
    }

    pub fn is_mu(&self) -> bool {
        matches!(self, SessionType::Mu { .. })
    }

    /// The summands of a sum tree, left to right. A non-sum is its own
    /// singleton summand.
    pub fn summands(&self) -> Vec<&SessionType> {
        let mut out = Vec::new();
        fn walk<'a>(t: &'a SessionType, out: &mut Vec<&'a SessionType>) {
            match t {
                SessionType::Sum(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }
}

/// Expressions occurring in output payloads and conditionals.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Expr {
    Nat(u64),
    Int(i64),
    Str(String),
    Bool(bool),
    Unit,
    Var(VarName),
    Lt(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn lt(a: Expr, b: Expr) -> Expr {
        Expr::Lt(Box::new(a), Box::new(b))
    }
    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::Eq(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }
    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    pub fn var(v: impl Into<String>) -> Expr {
        Expr::Var(VarName::new(v))
    }

    pub fn str(s: impl Into<String>) -> Expr {
        Expr::Str(s.into())
    }

    /// Free value variables of the expression.
    pub fn free_vars(&self) -> BTreeSet<VarName> {
        let mut acc = BTreeSet::new();
        fn walk(e: &Expr, acc: &mut BTreeSet<VarName>) {
            match e {
                Expr::Var(x) => {
                    acc.insert(x.clone());
                }
                Expr::Lt(a, b) | Expr::Eq(a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                    walk(a, acc);
                    walk(b, acc);
                }
                Expr::Not(a) => walk(a, acc),
                _ => {}
            }
        }
        walk(self, &mut acc);
        acc
    }
}

/// The literal subset of expressions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Nat(u64),
    Int(i64),
    Str(String),
    Bool(bool),
    Unit,
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Nat(_) => Sort::Nat,
            Value::Int(_) => Sort::Int,
            Value::Str(_) => Sort::Str,
            Value::Bool(_) => Sort::Bool,
            Value::Unit => Sort::Unit,
        }
    }

    pub fn into_expr(self) -> Expr {
        match self {
            Value::Nat(n) => Expr::Nat(n),
            Value::Int(z) => Expr::Int(z),
            Value::Str(s) => Expr::Str(s),
            Value::Bool(b) => Expr::Bool(b),
            Value::Unit => Expr::Unit,
        }
    }

    pub fn from_expr(e: &Expr) -> Option<Value> {
        match e {
            Expr::Nat(n) => Some(Value::Nat(*n)),
            Expr::Int(z) => Some(Value::Int(*z)),
            Expr::Str(s) => Some(Value::Str(s.clone())),
            Expr::Bool(b) => Some(Value::Bool(*b)),
            Expr::Unit => Some(Value::Unit),
            _ => None,
        }
    }
}

/// Process terms. `Recv` binds `binder` in its continuation, `Mu` binds
/// `pvar` in its body.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Process {
    Send {
        peer: Participant,
        label: Label,
        expr: Expr,
        cont: Box<Process>,
    },
    Recv {
        peer: Participant,
        label: Label,
        binder: VarName,
        cont: Box<Process>,
    },
    Sum(Box<Process>, Box<Process>),
    Mu {
        pvar: ProcVar,
        body: Box<Process>,
    },
    PVar(ProcVar),
    If {
        cond: Expr,
        then_branch: Box<Process>,
        else_branch: Box<Process>,
    },
    Inaction,
}

impl Process {
    pub fn send(
        peer: impl Into<String>,
        label: impl Into<String>,
        expr: Expr,
        cont: Process,
    ) -> Process {
        Process::Send {
            peer: Participant::new(peer),
            label: Label::new(label),
            expr,
            cont: Box::new(cont),
        }
    }

    pub fn recv(
        peer: impl Into<String>,
        label: impl Into<String>,
        binder: impl Into<String>,
        cont: Process,
    ) -> Process {
        Process::Recv {
            peer: Participant::new(peer),
            label: Label::new(label),
            binder: VarName::new(binder),
            cont: Box::new(cont),
        }
    }

    pub fn sum(l: Process, r: Process) -> Process {
        Process::Sum(Box::new(l), Box::new(r))
    }

    pub fn sum_all(mut parts: Vec<Process>) -> Process {
        let last = parts.pop().expect("sum_all needs at least one summand");
        parts
            .into_iter()
            .rev()
            .fold(last, |acc, p| Process::sum(p, acc))
    }

    pub fn mu(pvar: impl Into<String>, body: Process) -> Process {
        Process::Mu {
            pvar: ProcVar::new(pvar),
            body: Box::new(body),
        }
    }

    pub fn pvar(v: impl Into<String>) -> Process {
        Process::PVar(ProcVar::new(v))
    }

    pub fn if_then_else(cond: Expr, t: Process, e: Process) -> Process {
        Process::If {
            cond,
            then_branch: Box::new(t),
            else_branch: Box::new(e),
        }
    }

    pub fn is_inaction(&self) -> bool {
        matches!(self, Process::Inaction)
    }

    /// Free process variables.
    pub fn free_pvars(&self) -> BTreeSet<ProcVar> {
        fn walk(p: &Process, bound: &mut Vec<ProcVar>, acc: &mut BTreeSet<ProcVar>) {
            match p {
                Process::PVar(x) => {
                    if !bound.contains(x) {
                        acc.insert(x.clone());
                    }
                }
                Process::Mu { pvar, body } => {
                    bound.push(pvar.clone());
                    walk(body, bound, acc);
                    bound.pop();
                }
                Process::Send { cont, .. } | Process::Recv { cont, .. } => walk(cont, bound, acc),
                Process::Sum(l, r) => {
                    walk(l, bound, acc);
                    walk(r, bound, acc);
                }
                Process::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    walk(then_branch, bound, acc);
                    walk(else_branch, bound, acc);
                }
                Process::Inaction => {}
            }
        }
        let mut acc = BTreeSet::new();
        walk(self, &mut Vec::new(), &mut acc);
        acc
    }

    /// Free value variables.
    pub fn free_vars(&self) -> BTreeSet<VarName> {
        fn walk(p: &Process, bound: &mut Vec<VarName>, acc: &mut BTreeSet<VarName>) {
            match p {
                Process::Send { expr, cont, .. } => {
                    for x in expr.free_vars() {
                        if !bound.contains(&x) {
                            acc.insert(x);
                        }
                    }
                    walk(cont, bound, acc);
                }
                Process::Recv { binder, cont, .. } => {
                    bound.push(binder.clone());
                    walk(cont, bound, acc);
                    bound.pop();
                }
                Process::Sum(l, r) => {
                    walk(l, bound, acc);
                    walk(r, bound, acc);
                }
                Process::Mu { body, .. } => walk(body, bound, acc),
                Process::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    for x in cond.free_vars() {
                        if !bound.contains(&x) {
                            acc.insert(x);
                        }
                    }
                    walk(then_branch, bound, acc);
                    walk(else_branch, bound, acc);
                }
                Process::PVar(_) | Process::Inaction => {}
            }
        }
        let mut acc = BTreeSet::new();
        walk(self, &mut Vec::new(), &mut acc);
        acc
    }

    /// A process is closed when it has neither free value variables nor
    /// free process variables.
    pub fn is_closed(&self) -> bool {
        self.free_pvars().is_empty() && self.free_vars().is_empty()
    }
}

/// One participant running a process.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Thread {
    pub participant: Participant,
    pub body: Process,
}

/// A multiparty session: an ordered parallel composition of threads with
/// pairwise distinct participants. Ordering is the file order; structural
/// congruence (permutation of threads) is a separate relation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Session {
    pub threads: Vec<Thread>,
}

impl Session {
    pub fn new(threads: Vec<Thread>) -> Result<Session, SyntaxError> {
        let mut seen = BTreeSet::new();
        for t in &threads {
            if !seen.insert(t.participant.clone()) {
                return Err(SyntaxError::DuplicateParticipant(t.participant.clone()));
            }
        }
        Ok(Session { threads })
    }

    pub fn participants(&self) -> Vec<Participant> {
        self.threads.iter().map(|t| t.participant.clone()).collect()
    }

    pub fn thread(&self, p: &Participant) -> Option<&Thread> {
        self.threads.iter().find(|t| &t.participant == p)
    }

    /// Structural congruence: equality modulo permutation of threads.
    pub fn congruent(&self, other: &Session) -> bool {
        self.canonical() == other.canonical()
    }

    /// Threads sorted by participant name; used as a canonical key when
    /// deduplicating sessions up to congruence.
    pub fn canonical(&self) -> Session {
        let mut threads = self.threads.clone();
        threads.sort_by(|a, b| a.participant.cmp(&b.participant));
        Session { threads }
    }

    pub fn with_body(&self, p: &Participant, body: Process) -> Session {
        let threads = self
            .threads
            .iter()
            .map(|t| {
                if &t.participant == p {
                    Thread {
                        participant: t.participant.clone(),
                        body: body.clone(),
                    }
                } else {
                    t.clone()
                }
            })
            .collect();
        Session { threads }
    }
}

/// A session environment: a finite map from participants to session types
/// with canonical (sorted) iteration order. Equality is pointwise and
/// syntactic, which is what revisit detection during closure relies on.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TypeEnv {
    bindings: BTreeMap<Participant, SessionType>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn from_pairs(pairs: Vec<(Participant, SessionType)>) -> TypeEnv {
        TypeEnv {
            bindings: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, p: Participant, t: SessionType) {
        self.bindings.insert(p, t);
    }

    pub fn get(&self, p: &Participant) -> Option<&SessionType> {
        self.bindings.get(p)
    }

    pub fn contains(&self, p: &Participant) -> bool {
        self.bindings.contains_key(p)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Participant, &SessionType)> {
        self.bindings.iter()
    }

    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.bindings.keys()
    }

    /// A copy with the binding for `p` replaced by `t`.
    pub fn updated(&self, p: &Participant, t: SessionType) -> TypeEnv {
        let mut next = self.clone();
        next.bindings.insert(p.clone(), t);
        next
    }

    /// All bindings are `end`.
    pub fn is_consumed(&self) -> bool {
        self.bindings.values().all(|t| t.is_end())
    }

    /// The restriction to non-`end` bindings.
    pub fn non_ended(&self) -> TypeEnv {
        TypeEnv {
            bindings: self
                .bindings
                .iter()
                .filter(|(_, t)| !t.is_end())
                .map(|(p, t)| (p.clone(), t.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(Participant, SessionType)> for TypeEnv {
    fn from_iter<I: IntoIterator<Item = (Participant, SessionType)>>(iter: I) -> Self {
        TypeEnv {
            bindings: iter.into_iter().collect(),
        }
    }
}

/// Errors raised by structural operations in this module.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("duplicate participant {0} in session")]
    DuplicateParticipant(Participant),
    #[error("cannot unfold non-recursive type")]
    NotRecursive,
    #[error("top participant undefined for this type shape")]
    TopUndefined,
}

/// Capture-free substitution of the free occurrences of `var` in `body`
/// with the closed type `replacement`.
pub fn substitute_type(
    body: &SessionType,
    var: &TypeVar,
    replacement: &SessionType,
) -> SessionType {
    match body {
        SessionType::Out {
            peer,
            label,
            payload,
            cont,
        } => SessionType::Out {
            peer: peer.clone(),
            label: label.clone(),
            payload: *payload,
            cont: Box::new(substitute_type(cont, var, replacement)),
        },
        SessionType::In {
            peer,
            label,
            payload,
            cont,
        } => SessionType::In {
            peer: peer.clone(),
            label: label.clone(),
            payload: *payload,
            cont: Box::new(substitute_type(cont, var, replacement)),
        },
        SessionType::Sum(l, r) => SessionType::sum(
            substitute_type(l, var, replacement),
            substitute_type(r, var, replacement),
        ),
        SessionType::End => SessionType::End,
        SessionType::Mu { var: v, body: b } => {
            if v == var {
                // var is shadowed; no free occurrences below.
                SessionType::Mu {
                    var: v.clone(),
                    body: b.clone(),
                }
            } else {
                SessionType::Mu {
                    var: v.clone(),
                    body: Box::new(substitute_type(b, var, replacement)),
                }
            }
        }
        SessionType::Var(v) => {
            if v == var {
                replacement.clone()
            } else {
                SessionType::Var(v.clone())
            }
        }
    }
}

/// One unfolding step of a recursive type: `mu X.T` becomes `T{mu X.T/X}`.
pub fn unfold(t: &SessionType) -> Result<SessionType, SyntaxError> {
    match t {
        SessionType::Mu { var, body } => Ok(substitute_type(body, var, t)),
        _ => Err(SyntaxError::NotRecursive),
    }
}

/// Substitution of free occurrences of the process variable `pvar` in
/// `body` with the closed process `replacement`.
pub fn substitute_proc(body: &Process, pvar: &ProcVar, replacement: &Process) -> Process {
    match body {
        Process::Send {
            peer,
            label,
            expr,
            cont,
        } => Process::Send {
            peer: peer.clone(),
            label: label.clone(),
            expr: expr.clone(),
            cont: Box::new(substitute_proc(cont, pvar, replacement)),
        },
        Process::Recv {
            peer,
            label,
            binder,
            cont,
        } => Process::Recv {
            peer: peer.clone(),
            label: label.clone(),
            binder: binder.clone(),
            cont: Box::new(substitute_proc(cont, pvar, replacement)),
        },
        Process::Sum(l, r) => Process::sum(
            substitute_proc(l, pvar, replacement),
            substitute_proc(r, pvar, replacement),
        ),
        Process::Mu { pvar: v, body: b } => {
            if v == pvar {
                Process::Mu {
                    pvar: v.clone(),
                    body: b.clone(),
                }
            } else {
                Process::Mu {
                    pvar: v.clone(),
                    body: Box::new(substitute_proc(b, pvar, replacement)),
                }
            }
        }
        Process::PVar(v) => {
            if v == pvar {
                replacement.clone()
            } else {
                Process::PVar(v.clone())
            }
        }
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => Process::If {
            cond: cond.clone(),
            then_branch: Box::new(substitute_proc(then_branch, pvar, replacement)),
            else_branch: Box::new(substitute_proc(else_branch, pvar, replacement)),
        },
        Process::Inaction => Process::Inaction,
    }
}

fn substitute_expr(e: &Expr, var: &VarName, v: &Value) -> Expr {
    match e {
        Expr::Var(x) if x == var => v.clone().into_expr(),
        Expr::Lt(a, b) => Expr::lt(substitute_expr(a, var, v), substitute_expr(b, var, v)),
        Expr::Eq(a, b) => Expr::eq(substitute_expr(a, var, v), substitute_expr(b, var, v)),
        Expr::Not(a) => Expr::not(substitute_expr(a, var, v)),
        Expr::And(a, b) => Expr::and(substitute_expr(a, var, v), substitute_expr(b, var, v)),
        Expr::Or(a, b) => Expr::or(substitute_expr(a, var, v), substitute_expr(b, var, v)),
        other => other.clone(),
    }
}

/// Substitution of free occurrences of the value variable `var` in `body`
/// with the value `v`.
pub fn substitute_value(body: &Process, var: &VarName, v: &Value) -> Process {
    match body {
        Process::Send {
            peer,
            label,
            expr,
            cont,
        } => Process::Send {
            peer: peer.clone(),
            label: label.clone(),
            expr: substitute_expr(expr, var, v),
            cont: Box::new(substitute_value(cont, var, v)),
        },
        Process::Recv {
            peer,
            label,
            binder,
            cont,
        } => {
            if binder == var {
                // binder shadows var; continuation untouched
                body.clone()
            } else {
                Process::Recv {
                    peer: peer.clone(),
                    label: label.clone(),
                    binder: binder.clone(),
                    cont: Box::new(substitute_value(cont, var, v)),
                }
            }
        }
        Process::Sum(l, r) => {
            Process::sum(substitute_value(l, var, v), substitute_value(r, var, v))
        }
        Process::Mu { pvar, body: b } => Process::Mu {
            pvar: pvar.clone(),
            body: Box::new(substitute_value(b, var, v)),
        },
        Process::PVar(x) => Process::PVar(x.clone()),
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => Process::If {
            cond: substitute_expr(cond, var, v),
            then_branch: Box::new(substitute_value(then_branch, var, v)),
            else_branch: Box::new(substitute_value(else_branch, var, v)),
        },
        Process::Inaction => Process::Inaction,
    }
}

/// Contractiveness: every type variable occurs guarded by an input or
/// output prefix, i.e. no subterm of shape `mu X1...mu Xn.X1`.
pub fn is_contractive(t: &SessionType) -> bool {
    // unguarded: variables reachable from t without crossing a prefix
    fn unguarded(t: &SessionType, acc: &mut BTreeSet<TypeVar>) {
        match t {
            SessionType::Var(v) => {
                acc.insert(v.clone());
            }
            SessionType::Sum(l, r) => {
                unguarded(l, acc);
                unguarded(r, acc);
            }
            SessionType::Mu { body, .. } => unguarded(body, acc),
            _ => {}
        }
    }
    fn walk(t: &SessionType) -> bool {
        match t {
            SessionType::Mu { var, body } => {
                let mut u = BTreeSet::new();
                unguarded(body, &mut u);
                if u.contains(var) {
                    return false;
                }
                walk(body)
            }
            SessionType::Sum(l, r) => walk(l) && walk(r),
            SessionType::Out { cont, .. } | SessionType::In { cont, .. } => walk(cont),
            _ => true,
        }
    }
    walk(t)
}

/// Free type variables.
pub fn free_type_vars(t: &SessionType) -> BTreeSet<TypeVar> {
    fn walk(t: &SessionType, bound: &mut Vec<TypeVar>, acc: &mut BTreeSet<TypeVar>) {
        match t {
            SessionType::Var(v) => {
                if !bound.contains(v) {
                    acc.insert(v.clone());
                }
            }
            SessionType::Mu { var, body } => {
                bound.push(var.clone());
                walk(body, bound, acc);
                bound.pop();
            }
            SessionType::Sum(l, r) => {
                walk(l, bound, acc);
                walk(r, bound, acc);
            }
            SessionType::Out { cont, .. } | SessionType::In { cont, .. } => walk(cont, bound, acc),
            SessionType::End => {}
        }
    }
    let mut acc = BTreeSet::new();
    walk(t, &mut Vec::new(), &mut acc);
    acc
}

pub fn is_closed(t: &SessionType) -> bool {
    free_type_vars(t).is_empty()
}

/// The multiset of labels of the top prefixes of a sum tree; empty for
/// non-prefix, non-sum shapes.
pub fn labels_multiset(t: &SessionType) -> Vec<Label> {
    match t {
        SessionType::Out { label, .. } | SessionType::In { label, .. } => vec![label.clone()],
        SessionType::Sum(l, r) => {
            let mut ls = labels_multiset(l);
            ls.extend(labels_multiset(r));
            ls
        }
        _ => Vec::new(),
    }
}

/// The polarity of a type, defined only for prefixes and for sums whose
/// summands agree.
pub fn polarity(t: &SessionType) -> Option<Polarity> {
    match t {
        SessionType::Out { .. } => Some(Polarity::Send),
        SessionType::In { .. } => Some(Polarity::Recv),
        SessionType::Sum(l, r) => match (polarity(l), polarity(r)) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        },
        _ => None,
    }
}

/// The peer participant of a type, defined only for prefixes and for sums
/// whose summands agree.
pub fn participant_of(t: &SessionType) -> Option<Participant> {
    match t {
        SessionType::Out { peer, .. } | SessionType::In { peer, .. } => Some(peer.clone()),
        SessionType::Sum(l, r) => match (participant_of(l), participant_of(r)) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        },
        _ => None,
    }
}

/// A sum is uniform when its label multiset has no duplicates and both
/// polarity and peer participant are defined (hence agree across summands).
pub fn is_uniform_sum(t: &SessionType) -> bool {
    let labels = labels_multiset(t);
    let distinct: BTreeSet<&Label> = labels.iter().collect();
    distinct.len() == labels.len() && polarity(t).is_some() && participant_of(t).is_some()
}

/// Well-behavedness: every sum subterm is uniform.
pub fn is_well_behaved(t: &SessionType) -> bool {
    match t {
        SessionType::Out { cont, .. } | SessionType::In { cont, .. } => is_well_behaved(cont),
        SessionType::Sum(l, r) => is_uniform_sum(t) && is_well_behaved(l) && is_well_behaved(r),
        SessionType::End | SessionType::Var(_) => true,
        SessionType::Mu { body, .. } => is_well_behaved(body),
    }
}

/// Well-formedness: contractive, closed, and well-behaved.
pub fn is_well_formed_type(t: &SessionType) -> bool {
    is_contractive(t) && is_closed(t) && is_well_behaved(t)
}

/// A type environment is well-formed when every binding is.
pub fn is_well_formed_env(d: &TypeEnv) -> bool {
    d.iter().all(|(_, t)| is_well_formed_type(t))
}

/// All participants mentioned in a type.
pub fn parties(t: &SessionType) -> BTreeSet<Participant> {
    let mut acc = BTreeSet::new();
    fn walk(t: &SessionType, acc: &mut BTreeSet<Participant>) {
        match t {
            SessionType::Out { peer, cont, .. } | SessionType::In { peer, cont, .. } => {
                acc.insert(peer.clone());
                walk(cont, acc);
            }
            SessionType::Sum(l, r) => {
                walk(l, acc);
                walk(r, acc);
            }
            SessionType::Mu { body, .. } => walk(body, acc),
            SessionType::End | SessionType::Var(_) => {}
        }
    }
    walk(t, &mut acc);
    acc
}

/// Domain of the environment plus all participants mentioned by its types.
pub fn parties_env(d: &TypeEnv) -> BTreeSet<Participant> {
    let mut acc = BTreeSet::new();
    for (p, t) in d.iter() {
        acc.insert(p.clone());
        acc.extend(parties(t));
    }
    acc
}

/// A label paired with its payload sort.
pub type TaggedLabel = (Label, Sort);

/// The tagged labels of the top prefixes of a type: `{l@S}` for a prefix,
/// the union over a sum, empty otherwise. Not recursive into continuations.
pub fn tagged_labels(t: &SessionType) -> BTreeSet<TaggedLabel> {
    match t {
        SessionType::Out { label, payload, .. } | SessionType::In { label, payload, .. } => {
            [(label.clone(), *payload)].into_iter().collect()
        }
        SessionType::Sum(l, r) => {
            let mut s = tagged_labels(l);
            s.extend(tagged_labels(r));
            s
        }
        _ => BTreeSet::new(),
    }
}

/// The unguarded peer of a prefix or sum; `top(T1+T2) = top(T1)`.
/// Undefined for `end`, `mu` and variables.
pub fn top(t: &SessionType) -> Option<Participant> {
    match t {
        SessionType::Out { peer, .. } | SessionType::In { peer, .. } => Some(peer.clone()),
        SessionType::Sum(l, _) => top(l),
        _ => None,
    }
}
