//! The recursive OAuth/ssh authorisation protocol used throughout the test
//! suite, built directly as ASTs: a service `s`, a client `c` and an
//! authorisation server `a`, plus the two-attempt server variant that
//! deadlocks and the one-attempt password-checking variant.

use crate::syntax::{
    substitute_proc, substitute_type, Expr, Participant, ProcVar, Process, Session, SessionType,
    Sort, Thread, TypeEnv, TypeVar,
};

/// `Ts = mu X.( c!login(unit).a?auth(bool).X + c!cancel(unit).end )`
pub fn t_s() -> SessionType {
    SessionType::mu(
        "X",
        SessionType::sum(
            SessionType::out(
                "c",
                "login",
                Sort::Unit,
                SessionType::inp("a", "auth", Sort::Bool, SessionType::var("X")),
            ),
            SessionType::out("c", "cancel", Sort::Unit, SessionType::End),
        ),
    )
}

/// `Tc = mu X.( s?login(unit).(a!pwd(str).X + a!ssh(unit).X) + s?cancel(unit).a!quit(unit).end )`
pub fn t_c() -> SessionType {
    SessionType::mu(
        "X",
        SessionType::sum(
            SessionType::inp(
                "s",
                "login",
                Sort::Unit,
                SessionType::sum(
                    SessionType::out("a", "pwd", Sort::Str, SessionType::var("X")),
                    SessionType::out("a", "ssh", Sort::Unit, SessionType::var("X")),
                ),
            ),
            SessionType::inp(
                "s",
                "cancel",
                Sort::Unit,
                SessionType::out("a", "quit", Sort::Unit, SessionType::End),
            ),
        ),
    )
}

/// The open recursion body of the server:
/// `Ra = c?pwd(str).s!auth(bool).X + c?ssh(unit).s!auth(bool).X + c?quit(unit).end`
pub fn r_a() -> SessionType {
    SessionType::sum_all(vec![
        SessionType::inp(
            "c",
            "pwd",
            Sort::Str,
            SessionType::out("s", "auth", Sort::Bool, SessionType::var("X")),
        ),
        SessionType::inp(
            "c",
            "ssh",
            Sort::Unit,
            SessionType::out("s", "auth", Sort::Bool, SessionType::var("X")),
        ),
        SessionType::inp("c", "quit", Sort::Unit, SessionType::End),
    ])
}

/// `Ta = mu X.Ra`
pub fn t_a() -> SessionType {
    SessionType::mu("X", r_a())
}

/// `T*a = Ra{Ta/X}`, the once-unfolded server type.
pub fn t_star_a() -> SessionType {
    substitute_type(&r_a(), &TypeVar::new("X"), &t_a())
}

/// `T'a`: one further ssh attempt allowed, then end.
pub fn t_prime_a() -> SessionType {
    SessionType::mu(
        "X",
        SessionType::sum_all(vec![
            SessionType::inp(
                "c",
                "pwd",
                Sort::Str,
                SessionType::out("s", "auth", Sort::Bool, SessionType::var("X")),
            ),
            SessionType::inp(
                "c",
                "ssh",
                Sort::Unit,
                SessionType::out("s", "auth", Sort::Bool, SessionType::End),
            ),
            SessionType::inp("c", "quit", Sort::Unit, SessionType::End),
        ]),
    )
}

/// `T''a`: two ssh attempts in total, then the server stops.
pub fn t_dprime_a() -> SessionType {
    SessionType::sum_all(vec![
        SessionType::inp(
            "c",
            "pwd",
            Sort::Str,
            SessionType::out("s", "auth", Sort::Bool, t_a()),
        ),
        SessionType::inp(
            "c",
            "ssh",
            Sort::Unit,
            SessionType::out("s", "auth", Sort::Bool, t_prime_a()),
        ),
        SessionType::inp("c", "quit", Sort::Unit, SessionType::End),
    ])
}

/// `Delta = { s: Ts, c: Tc, a: T*a }` — the accepted environment.
pub fn delta() -> TypeEnv {
    TypeEnv::from_pairs(vec![
        (Participant::new("s"), t_s()),
        (Participant::new("c"), t_c()),
        (Participant::new("a"), t_star_a()),
    ])
}

/// `Delta'' = { s: Ts, c: Tc, a: T''a }` — the rejected environment.
pub fn delta_dprime() -> TypeEnv {
    TypeEnv::from_pairs(vec![
        (Participant::new("s"), t_s()),
        (Participant::new("c"), t_c()),
        (Participant::new("a"), t_dprime_a()),
    ])
}

/// `Delta_lock = { s: a?auth(bool).Ts, c: a!pwd(str).Tc + a!ssh(unit).Tc, a: end }`
pub fn delta_lock() -> TypeEnv {
    TypeEnv::from_pairs(vec![
        (
            Participant::new("s"),
            SessionType::inp("a", "auth", Sort::Bool, t_s()),
        ),
        (
            Participant::new("c"),
            SessionType::sum(
                SessionType::out("a", "pwd", Sort::Str, t_c()),
                SessionType::out("a", "ssh", Sort::Unit, t_c()),
            ),
        ),
        (Participant::new("a"), SessionType::End),
    ])
}

/// `Delta_end = { s: end, c: end, a: end }`
pub fn delta_end() -> TypeEnv {
    TypeEnv::from_pairs(vec![
        (Participant::new("s"), SessionType::End),
        (Participant::new("c"), SessionType::End),
        (Participant::new("a"), SessionType::End),
    ])
}

/// `Ps = mu X.( c!login<()>.a?auth(x).X + c!cancel<()>.0 )`
pub fn p_s() -> Process {
    Process::mu(
        "X",
        Process::sum(
            Process::send(
                "c",
                "login",
                Expr::Unit,
                Process::recv("a", "auth", "x", Process::pvar("X")),
            ),
            Process::send("c", "cancel", Expr::Unit, Process::Inaction),
        ),
    )
}

/// `Pc = mu X.( s?login(x).(a!pwd<"fido">.X + a!ssh<()>.X) + s?cancel(x).a!quit<()>.0 )`
pub fn p_c() -> Process {
    Process::mu(
        "X",
        Process::sum(
            Process::recv(
                "s",
                "login",
                "x",
                Process::sum(
                    Process::send("a", "pwd", Expr::str("fido"), Process::pvar("X")),
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
    )
}

/// The open recursion body of the server process:
/// `Qa = c?pwd(x).s!auth<false>.X + c?ssh(x).s!auth<true>.X + c?quit(x).0`
pub fn q_a() -> Process {
    Process::sum_all(vec![
        Process::recv(
            "c",
            "pwd",
            "x",
            Process::send("s", "auth", Expr::Bool(false), Process::pvar("X")),
        ),
        Process::recv(
            "c",
            "ssh",
            "x",
            Process::send("s", "auth", Expr::Bool(true), Process::pvar("X")),
        ),
        Process::recv("c", "quit", "x", Process::Inaction),
    ])
}

/// `P*a = Qa{mu X.Qa/X}`, the once-unrolled server.
pub fn p_star_a() -> Process {
    let mu_qa = Process::mu("X", q_a());
    substitute_proc(&q_a(), &ProcVar::new("X"), &mu_qa)
}

/// The accepted session `M = s <| Ps || c <| Pc || a <| P*a`.
pub fn oauth_session() -> Session {
    Session::new(vec![
        Thread {
            participant: Participant::new("s"),
            body: p_s(),
        },
        Thread {
            participant: Participant::new("c"),
            body: p_c(),
        },
        Thread {
            participant: Participant::new("a"),
            body: p_star_a(),
        },
    ])
    .expect("distinct participants")
}

/// A server process typed by `T'a`.
pub fn p_prime_a() -> Process {
    Process::mu(
        "X",
        Process::sum_all(vec![
            Process::recv(
                "c",
                "pwd",
                "x",
                Process::send("s", "auth", Expr::Bool(false), Process::pvar("X")),
            ),
            Process::recv(
                "c",
                "ssh",
                "x",
                Process::send("s", "auth", Expr::Bool(true), Process::Inaction),
            ),
            Process::recv("c", "quit", "x", Process::Inaction),
        ]),
    )
}

/// A server process typed by `T''a` (two ssh attempts, then stop).
pub fn p_dprime_a() -> Process {
    Process::sum_all(vec![
        Process::recv(
            "c",
            "pwd",
            "x",
            Process::send("s", "auth", Expr::Bool(false), Process::mu("X", q_a())),
        ),
        Process::recv(
            "c",
            "ssh",
            "x",
            Process::send("s", "auth", Expr::Bool(true), p_prime_a()),
        ),
        Process::recv("c", "quit", "x", Process::Inaction),
    ])
}

/// The rejected session: `s <| Ps || c <| Pc || a <| P''a`, declared at
/// `Delta''`.
pub fn two_attempts_session() -> Session {
    Session::new(vec![
        Thread {
            participant: Participant::new("s"),
            body: p_s(),
        },
        Thread {
            participant: Participant::new("c"),
            body: p_c(),
        },
        Thread {
            participant: Participant::new("a"),
            body: p_dprime_a(),
        },
    ])
    .expect("distinct participants")
}

/// The password-checking variant of the authorisation server:
/// `Pa = mu X.( c?pwd(x).Check + c?ssh(x).s!auth<true>.X + c?quit(x).0 )`
/// where `Check = if x = "miau" then s!auth<true>.X else s!fail<()>.0`.
pub fn variant_p_a() -> Process {
    let check = Process::if_then_else(
        Expr::eq(Expr::var("x"), Expr::str("miau")),
        Process::send("s", "auth", Expr::Bool(true), Process::pvar("X")),
        Process::send("s", "fail", Expr::Unit, Process::Inaction),
    );
    Process::mu(
        "X",
        Process::sum(
            Process::recv("c", "pwd", "x", check),
            Process::sum(
                Process::recv(
                    "c",
                    "ssh",
                    "x",
                    Process::send("s", "auth", Expr::Bool(true), Process::pvar("X")),
                ),
                Process::recv("c", "quit", "x", Process::Inaction),
            ),
        ),
    )
}

/// The declared type of the variant server: `mu X.(T' + T'')` with
/// `T' = c?pwd(str).(s!auth(bool).X + s!fail(unit).end)` and
/// `T'' = c?ssh(unit).s!auth(bool).X + c?quit(unit).end`.
pub fn variant_t() -> SessionType {
    let t_prime = SessionType::inp(
        "c",
        "pwd",
        Sort::Str,
        SessionType::sum(
            SessionType::out("s", "auth", Sort::Bool, SessionType::var("X")),
            SessionType::out("s", "fail", Sort::Unit, SessionType::End),
        ),
    );
    let t_dprime = SessionType::sum(
        SessionType::inp(
            "c",
            "ssh",
            Sort::Unit,
            SessionType::out("s", "auth", Sort::Bool, SessionType::var("X")),
        ),
        SessionType::inp("c", "quit", Sort::Unit, SessionType::End),
    );
    SessionType::mu("X", SessionType::sum(t_prime, t_dprime))
}
