//! Multiparty session types with iso-recursive recursion.
//!
//! The crate provides the syntax of session types and processes, a textual
//! surface language, the operational semantics of sessions, labelled
//! transition systems over type environments, a terminating closure
//! computation deciding environment compliance, and a session type checker
//! built on top of it. Deadlock-freedom of a type environment is decided by
//! exploring the deterministic, oracle-driven reduction of the environment
//! and classifying every final configuration.

pub mod brute;
pub mod cli;
pub mod compliance;
pub mod corpus_fixtures;
pub mod env_lts;
pub mod parse;
pub mod pretty;
pub mod semantics;
pub mod syntax;
pub mod typecheck;

pub use syntax::{
    Expr, Label, Participant, ProcVar, Process, Session, SessionType, Sort, Thread, TypeEnv,
    TypeVar, Value, VarName,
};
