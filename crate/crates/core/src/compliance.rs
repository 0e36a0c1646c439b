//! The terminating closure computation over the deterministic environment
//! reduction, and the compliance verdict derived from it.
//!
//! Starting from a minimal well-formed environment, `closure` explores the
//! binary tree whose nodes are environments: one child is the redex of the
//! deterministic step, the other (when present) the sum continuation
//! carrying the discarded branches. Every leaf is classified: fully
//! consumed, stuck without being consumed (a deadlock), a revisit of an
//! environment already on the current path (a fixpoint loop), a
//! communication mismatch, or a loss of minimality. The environment is
//! compliant when no leaf is an error and every loop leaf is sound.
//!
//! Termination holds because every environment met during exploration
//! draws its types from the finite per-participant redex universe and no
//! path ever revisits an environment.

use std::collections::HashSet;
use std::fmt;

use serde_json::json;

use crate::env_lts::{
    det_step, env_transitions, is_minimal, EnvAction, EnvError, LabelOrder, Oracle, OracleReply,
    Remnant, SumContinuation,
};
use crate::pretty::print_env;
use crate::syntax::{participant_of, polarity, tagged_labels, Participant, SessionType, TypeEnv};

/// All type redexes reachable from each participant's declared type:
/// unfoldings of recursions, continuations of prefixes, and every sub-sum
/// obtained by repeatedly deleting one branch. Closed under the type
/// transition relation, so every environment met during closure draws its
/// bindings from this map.
#[derive(Clone, Debug)]
pub struct RedexUniverse {
    per_participant:
        std::collections::BTreeMap<Participant, std::collections::BTreeSet<SessionType>>,
}

impl RedexUniverse {
    pub fn types_of(&self, p: &Participant) -> Option<&std::collections::BTreeSet<SessionType>> {
        self.per_participant.get(p)
    }

    pub fn contains_env(&self, d: &TypeEnv) -> bool {
        d.iter().all(|(p, t)| {
            self.per_participant
                .get(p)
                .map(|set| set.contains(t))
                .unwrap_or(false)
        })
    }

    pub fn total_types(&self) -> usize {
        self.per_participant.values().map(|s| s.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplianceError {
    #[error("redex universe for `{participant}` exceeded the cap of {cap} types")]
    UniverseCapExceeded {
        participant: Participant,
        cap: usize,
    },
    #[error("{0}")]
    Env(#[from] EnvError),
}

/// Saturate the per-participant redex sets, bounded by `cap` types per
/// participant.
pub fn redex_universe(d: &TypeEnv, cap: usize) -> Result<RedexUniverse, ComplianceError> {
    let mut per_participant = std::collections::BTreeMap::new();
    for (p, t) in d.iter() {
        let mut set = std::collections::BTreeSet::new();
        let mut work = vec![t.clone()];
        while let Some(next) = work.pop() {
            if !set.insert(next.clone()) {
                continue;
            }
            if set.len() > cap {
                return Err(ComplianceError::UniverseCapExceeded {
                    participant: p.clone(),
                    cap,
                });
            }
            for (_, cont, rem) in crate::env_lts::type_transitions(&next) {
                work.push(cont);
                if let Remnant::Type(r) = rem {
                    work.push(r);
                }
            }
        }
        per_participant.insert(p.clone(), set);
    }
    Ok(RedexUniverse { per_participant })
}

/// Whether a path entry was the redex of the step or the discarded-branch
/// continuation spawned by it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BranchTag {
    Taken,
    Remnant,
}

/// One step of the path leading to a leaf.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PathStep {
    pub action: EnvAction,
    pub tag: BranchTag,
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            BranchTag::Taken => write!(f, "{}", self.action),
            BranchTag::Remnant => write!(f, "~{}", self.action),
        }
    }
}

/// The path from the root environment to a leaf: the environments visited
/// and the steps between them (`envs.len() == steps.len()`; `envs[i]` is
/// the environment *before* `steps[i]`).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Path {
    pub envs: Vec<TypeEnv>,
    pub steps: Vec<PathStep>,
}

impl Path {
    pub fn actions(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.to_string()).collect()
    }
}

/// Classification of a final configuration of the closure exploration.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClosureLeaf {
    /// Every binding is `end`.
    Consumed { env: TypeEnv },
    /// No deterministic step and not consumed.
    StuckDeadlock { env: TypeEnv, path: Path },
    /// The environment already occurs on the current path.
    FixpointLoop { env: TypeEnv, path: Path },
    /// The scheduled pair cannot synchronize.
    Mismatch {
        env: TypeEnv,
        path: Path,
        pair: (Participant, Participant),
    },
    /// The environment fell apart into independent blocks.
    NotMinimal { env: TypeEnv, path: Path },
}

impl ClosureLeaf {
    pub fn kind(&self) -> &'static str {
        match self {
            ClosureLeaf::Consumed { .. } => "consumed",
            ClosureLeaf::StuckDeadlock { .. } => "deadlock",
            ClosureLeaf::FixpointLoop { .. } => "fixpoint",
            ClosureLeaf::Mismatch { .. } => "mismatch",
            ClosureLeaf::NotMinimal { .. } => "not-minimal",
        }
    }

    pub fn env(&self) -> &TypeEnv {
        match self {
            ClosureLeaf::Consumed { env }
            | ClosureLeaf::StuckDeadlock { env, .. }
            | ClosureLeaf::FixpointLoop { env, .. }
            | ClosureLeaf::Mismatch { env, .. }
            | ClosureLeaf::NotMinimal { env, .. } => env,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(
            self,
            ClosureLeaf::StuckDeadlock { .. }
                | ClosureLeaf::Mismatch { .. }
                | ClosureLeaf::NotMinimal { .. }
        )
    }
}

/// The outcome of a closure run: every leaf in depth-first order, the
/// number of configurations explored, and the verdict.
#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub leaves: Vec<ClosureLeaf>,
    pub explored: usize,
    pub verdict: bool,
}

impl ClosureReport {
    /// The first error leaf in depth-first order, if any.
    pub fn primary_witness(&self) -> Option<&ClosureLeaf> {
        self.leaves.iter().find(|l| l.is_error())
    }

    pub fn consumed_envs(&self) -> std::collections::BTreeSet<&TypeEnv> {
        self.leaves
            .iter()
            .filter_map(|l| match l {
                ClosureLeaf::Consumed { env } => Some(env),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "verdict": self.verdict,
            "explored": self.explored,
            "leaves": self.leaves.iter().map(|l| {
                let path = match l {
                    ClosureLeaf::Consumed { .. } => Vec::new(),
                    ClosureLeaf::StuckDeadlock { path, .. }
                    | ClosureLeaf::FixpointLoop { path, .. }
                    | ClosureLeaf::Mismatch { path, .. }
                    | ClosureLeaf::NotMinimal { path, .. } => path.actions(),
                };
                let mut obj = json!({
                    "kind": l.kind(),
                    "env": print_env(l.env()),
                    "path": path,
                });
                if let ClosureLeaf::Mismatch { pair, .. } = l {
                    obj["pair"] = json!([pair.0.to_string(), pair.1.to_string()]);
                }
                obj
            }).collect::<Vec<_>>(),
        })
    }
}

/// Options for the closure exploration.
#[derive(Clone, Copy, Debug)]
pub struct ClosureOpts {
    pub universe_cap: usize,
    pub label_order: LabelOrder,
}

impl Default for ClosureOpts {
    fn default() -> Self {
        ClosureOpts {
            universe_cap: 10_000,
            label_order: LabelOrder::Lex,
        }
    }
}

/// The first mismatching pair of the environment, in canonical order:
/// two participants whose types are sums of prefixes facing each other
/// with equal polarity, or with no common tagged label.
pub fn is_mismatch(d: &TypeEnv) -> Option<(Participant, Participant)> {
    for (p, tp) in d.iter() {
        for (q, tq) in d.iter() {
            if p >= q {
                continue;
            }
            if mismatching_pair(tp, tq, p, q) {
                return Some((p.clone(), q.clone()));
            }
        }
    }
    None
}

fn mismatching_pair(tp: &SessionType, tq: &SessionType, p: &Participant, q: &Participant) -> bool {
    // both types must be sums of prefixes pointed at each other
    if participant_of(tp) != Some(q.clone()) || participant_of(tq) != Some(p.clone()) {
        return false;
    }
    mismatch2(tp, tq)
}

/// The type-level half of the mismatch test: assumes the two types face
/// each other and checks equal polarity or an empty tagged-label
/// intersection (labels intersect only when both name and sort agree).
pub fn mismatch2(t1: &SessionType, t2: &SessionType) -> bool {
    match (polarity(t1), polarity(t2)) {
        (Some(a), Some(b)) => {
            a == b
                || tagged_labels(t1)
                    .intersection(&tagged_labels(t2))
                    .next()
                    .is_none()
        }
        _ => false,
    }
}

/// All bindings are `end`.
pub fn is_consumed(d: &TypeEnv) -> bool {
    d.is_consumed()
}

/// No transition under the non-deterministic LTS and not consumed.
pub fn is_deadlock(d: &TypeEnv) -> bool {
    env_transitions(d).is_empty() && !is_consumed(d)
}

/// A mismatch or a deadlock.
pub fn is_error(d: &TypeEnv) -> bool {
    is_mismatch(d).is_some() || is_deadlock(d)
}

struct Explorer<'a> {
    oracle: &'a Oracle,
    opts: ClosureOpts,
    universe: RedexUniverse,
    leaves: Vec<ClosureLeaf>,
    explored: usize,
    path_envs: Vec<TypeEnv>,
    path_steps: Vec<PathStep>,
    on_path: HashSet<TypeEnv>,
    product_bound: usize,
}

impl Explorer<'_> {
    fn snapshot_path(&self) -> Path {
        Path {
            envs: self.path_envs.clone(),
            steps: self.path_steps.clone(),
        }
    }

    fn explore(&mut self, env: TypeEnv) -> Result<(), ComplianceError> {
        self.explored += 1;
        // every reachable environment stays inside the saturated universe,
        // and revisit-free paths cannot outgrow its product space
        assert!(
            self.universe.contains_env(&env),
            "environment escaped the redex universe"
        );
        debug_assert!(self.path_envs.len() <= self.product_bound);
        if !is_minimal(&env) {
            self.leaves.push(ClosureLeaf::NotMinimal {
                env,
                path: self.snapshot_path(),
            });
            return Ok(());
        }
        if self.on_path.contains(&env) {
            // the revisited environment stepped before, so the oracle is
            // defined on it and it is not a mismatch
            let reply = self.oracle.reply(&env);
            assert!(
                !matches!(reply, OracleReply::Ret0),
                "loop leaf with an undefined oracle"
            );
            assert!(is_mismatch(&env).is_none(), "loop leaf with a mismatch");
            self.leaves.push(ClosureLeaf::FixpointLoop {
                env,
                path: self.snapshot_path(),
            });
            return Ok(());
        }
        match det_step(self.oracle, &env, self.opts.label_order) {
            Err(EnvError::MismatchDetected { pair, .. }) => {
                assert!(
                    is_mismatch(&env).is_some(),
                    "mismatch leaf without a mismatching pair"
                );
                self.leaves.push(ClosureLeaf::Mismatch {
                    env,
                    path: self.snapshot_path(),
                    pair,
                });
                Ok(())
            }
            Err(other) => Err(other.into()),
            Ok(None) => {
                if is_consumed(&env) {
                    self.leaves.push(ClosureLeaf::Consumed { env });
                } else {
                    assert!(
                        env_transitions(&env).is_empty(),
                        "stuck leaf with a non-deterministic transition"
                    );
                    self.leaves.push(ClosureLeaf::StuckDeadlock {
                        env,
                        path: self.snapshot_path(),
                    });
                }
                Ok(())
            }
            Ok(Some((action, redex, continuation))) => {
                self.on_path.insert(env.clone());
                self.path_envs.push(env.clone());

                self.path_steps.push(PathStep {
                    action: action.clone(),
                    tag: BranchTag::Taken,
                });
                self.explore(redex)?;
                self.path_steps.pop();

                if let SumContinuation::Env(rest) = continuation {
                    self.path_steps.push(PathStep {
                        action,
                        tag: BranchTag::Remnant,
                    });
                    self.explore(rest)?;
                    self.path_steps.pop();
                }

                self.path_envs.pop();
                self.on_path.remove(&env);
                Ok(())
            }
        }
    }
}

/// Depth-first exploration of every configuration reachable from `d`
/// under the deterministic reduction, including the sum continuations.
pub fn closure(
    omega: &Oracle,
    d: &TypeEnv,
    opts: ClosureOpts,
) -> Result<ClosureReport, ComplianceError> {
    let universe = redex_universe(d, opts.universe_cap)?;
    let product_bound = d
        .iter()
        .map(|(p, _)| universe.types_of(p).map(|s| s.len()).unwrap_or(1))
        .fold(1usize, |acc, n| acc.saturating_mul(n.max(1)));
    let mut explorer = Explorer {
        oracle: omega,
        opts,
        universe,
        leaves: Vec::new(),
        explored: 0,
        path_envs: Vec::new(),
        path_steps: Vec::new(),
        on_path: HashSet::new(),
        product_bound,
    };
    explorer.explore(d.clone())?;
    let verdict = explorer.leaves.iter().all(|l| !l.is_error());
    Ok(ClosureReport {
        leaves: explorer.leaves,
        explored: explorer.explored,
        verdict,
    })
}

/// The compliance verdict for a minimal well-formed environment: the
/// closure report with the verdict already folded in; on a negative
/// verdict the report carries at least one concrete witness leaf.
pub fn compliance(
    omega: &Oracle,
    d: &TypeEnv,
    opts: ClosureOpts,
) -> Result<ClosureReport, ComplianceError> {
    let report = closure(omega, d, opts)?;
    debug_assert!(report.verdict || report.primary_witness().is_some());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_fixtures as fix;
    use crate::syntax::{Sort, TypeEnv};

    fn p(name: &str) -> Participant {
        Participant::new(name)
    }

    fn env(pairs: Vec<(&str, SessionType)>) -> TypeEnv {
        pairs
            .into_iter()
            .map(|(n, t)| (Participant::new(n), t))
            .collect()
    }

    #[test]
    fn universe_of_a_one_loop_type_has_two_elements() {
        let t = SessionType::mu(
            "X",
            SessionType::out("q", "l", Sort::Nat, SessionType::var("X")),
        );
        let d = env(vec![("p", t.clone())]);
        let u = redex_universe(&d, 100).unwrap();
        let expected: std::collections::BTreeSet<SessionType> =
            [t.clone(), SessionType::out("q", "l", Sort::Nat, t.clone())]
                .into_iter()
                .collect();
        assert_eq!(u.types_of(&p("p")), Some(&expected));
    }

    #[test]
    fn universe_of_end_is_singleton() {
        let d = env(vec![("p", SessionType::End)]);
        let u = redex_universe(&d, 100).unwrap();
        assert_eq!(u.types_of(&p("p")).unwrap().len(), 1);
    }

    #[test]
    fn universe_of_the_server_contains_the_hand_saturated_redexes() {
        let u = redex_universe(&fix::delta(), 10_000).unwrap();
        let a_types = u.types_of(&p("a")).unwrap();
        assert!(a_types.contains(&fix::t_star_a()));
        assert!(a_types.contains(&fix::t_a()));
        assert!(a_types.contains(&SessionType::out("s", "auth", Sort::Bool, fix::t_a())));
        assert!(a_types.contains(&SessionType::End));
    }

    #[test]
    fn universe_cap_is_enforced() {
        let err = redex_universe(&fix::delta(), 2).unwrap_err();
        assert!(matches!(
            err,
            ComplianceError::UniverseCapExceeded { cap: 2, .. }
        ));
    }

    #[test]
    fn closure_of_delta_is_compliant_with_one_consumed_leaf() {
        for oracle in [Oracle::Lex, Oracle::RevLex] {
            let report = closure(&oracle, &fix::delta(), ClosureOpts::default()).unwrap();
            assert!(report.verdict, "oracle {:?}", oracle);
            let consumed = report.consumed_envs();
            assert_eq!(consumed.len(), 1);
            assert!(consumed.contains(&fix::delta_end()));
            assert!(report.leaves.iter().all(|l| matches!(
                l,
                ClosureLeaf::Consumed { .. } | ClosureLeaf::FixpointLoop { .. }
            )));
            assert!(report
                .leaves
                .iter()
                .any(|l| matches!(l, ClosureLeaf::FixpointLoop { .. })));
        }
    }

    #[test]
    fn closure_of_delta_dprime_finds_the_lock() {
        for oracle in [Oracle::Lex, Oracle::RevLex] {
            let report = closure(&oracle, &fix::delta_dprime(), ClosureOpts::default()).unwrap();
            assert!(!report.verdict);
            let lock_found = report.leaves.iter().any(|l| {
                matches!(l, ClosureLeaf::StuckDeadlock { env, .. } if *env == fix::delta_lock())
            });
            assert!(lock_found, "Delta_lock not among the deadlock leaves");
        }
    }

    #[test]
    fn closure_of_the_consumed_env_is_a_single_leaf() {
        let report = closure(&Oracle::Lex, &fix::delta_end(), ClosureOpts::default()).unwrap();
        assert_eq!(report.leaves.len(), 1);
        assert!(matches!(report.leaves[0], ClosureLeaf::Consumed { .. }));
        assert!(report.verdict);
    }

    #[test]
    fn mismatch_detection_follows_the_four_cases() {
        // sort clash on the only label
        let d = env(vec![
            ("p", SessionType::out("q", "l", Sort::Nat, SessionType::End)),
            ("q", SessionType::inp("p", "l", Sort::Int, SessionType::End)),
        ]);
        assert_eq!(is_mismatch(&d), Some((p("p"), p("q"))));

        // matching pair
        let d = env(vec![
            ("p", SessionType::inp("q", "l", Sort::Nat, SessionType::End)),
            ("q", SessionType::out("p", "l", Sort::Nat, SessionType::End)),
        ]);
        assert_eq!(is_mismatch(&d), None);

        // both sending
        let d = env(vec![
            ("p", SessionType::out("q", "l", Sort::Nat, SessionType::End)),
            ("q", SessionType::out("p", "l", Sort::Nat, SessionType::End)),
        ]);
        assert!(is_mismatch(&d).is_some());

        // both receiving
        let d = env(vec![
            ("p", SessionType::inp("q", "l", Sort::Nat, SessionType::End)),
            ("q", SessionType::inp("p", "l", Sort::Nat, SessionType::End)),
        ]);
        assert!(is_mismatch(&d).is_some());

        // the accepted protocol env is not a mismatch: the only unguarded
        // sum faces a recursive type
        assert_eq!(is_mismatch(&fix::delta()), None);
    }

    #[test]
    fn deadlock_classification() {
        assert!(is_deadlock(&fix::delta_lock()));
        assert!(!is_deadlock(&fix::delta_end())); // consumed
        assert!(!is_deadlock(&fix::delta())); // can step
        assert!(is_error(&fix::delta_lock()));
        assert!(!is_error(&fix::delta()));
    }

    #[test]
    fn compliance_verdicts_on_the_corpus() {
        let ok = compliance(&Oracle::Lex, &fix::delta(), ClosureOpts::default()).unwrap();
        assert!(ok.verdict);
        let bad = compliance(&Oracle::Lex, &fix::delta_dprime(), ClosureOpts::default()).unwrap();
        assert!(!bad.verdict);
        assert!(bad.primary_witness().is_some());
        let single = compliance(
            &Oracle::Lex,
            &env(vec![("p", SessionType::End)]),
            ClosureOpts::default(),
        )
        .unwrap();
        assert!(single.verdict);
    }

    #[test]
    fn mismatch2_compares_types_directly() {
        let sel = SessionType::sum(
            SessionType::out("q", "a", Sort::Nat, SessionType::End),
            SessionType::out("q", "b", Sort::Nat, SessionType::End),
        );
        let bra_ok = SessionType::sum(
            SessionType::inp("p", "a", Sort::Nat, SessionType::End),
            SessionType::inp("p", "b", Sort::Nat, SessionType::End),
        );
        let bra_disjoint = SessionType::inp("p", "z", Sort::Nat, SessionType::End);
        assert!(!mismatch2(&sel, &bra_ok));
        assert!(mismatch2(&sel, &bra_disjoint));
        assert!(mismatch2(&sel, &sel));
        // undefined polarity (recursive type) is not a mismatch shape
        assert!(!mismatch2(&fix::t_a(), &sel));
    }

    #[test]
    fn report_json_has_the_contract_fields() {
        let report = closure(&Oracle::Lex, &fix::delta_dprime(), ClosureOpts::default()).unwrap();
        let v = report.to_json();
        assert!(v["verdict"].is_boolean());
        assert!(v["explored"].is_u64());
        let leaves = v["leaves"].as_array().unwrap();
        assert!(!leaves.is_empty());
        for leaf in leaves {
            assert!(leaf["kind"].is_string());
            assert!(leaf["env"].is_string());
            assert!(leaf["path"].is_array());
        }
    }
}
