//! Brute-force reference computations used as independent test oracles:
//! exhaustive reachability over the non-deterministic environment LTS,
//! exhaustive session-state exploration, and a seeded generator of random
//! protocol environments.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compliance::{is_consumed, is_mismatch};
use crate::env_lts::{env_transitions, is_minimal, EnvAction};
use crate::semantics::{is_ended, session_transitions, SessionAction};
use crate::syntax::{
    is_well_formed_env, Participant, Process, Session, SessionType, Sort, TypeEnv,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("reachable set exceeded the cap of {cap} environments")]
pub struct CapExceeded {
    pub cap: usize,
}

/// The reachable fragment of the non-deterministic LTS: every visited
/// environment, the transition-free ones, and the edges between them.
#[derive(Clone, Debug, Default)]
pub struct ReachSet {
    pub visited: BTreeSet<TypeEnv>,
    pub stuck: BTreeSet<TypeEnv>,
    pub edges: Vec<(TypeEnv, EnvAction, TypeEnv)>,
}

/// Breadth-first closure of `env_transitions` with syntactic-equality
/// deduplication, bounded by `cap` visited environments.
pub fn reachable_envs(d: &TypeEnv, cap: usize) -> Result<ReachSet, CapExceeded> {
    let mut out = ReachSet::default();
    let mut queue = VecDeque::new();
    out.visited.insert(d.clone());
    queue.push_back(d.clone());
    while let Some(env) = queue.pop_front() {
        let succs = env_transitions(&env);
        if succs.is_empty() {
            out.stuck.insert(env.clone());
        }
        for (action, next) in succs {
            out.edges.push((env.clone(), action, next.clone()));
            if out.visited.insert(next.clone()) {
                if out.visited.len() > cap {
                    return Err(CapExceeded { cap });
                }
                queue.push_back(next);
            }
        }
    }
    Ok(out)
}

/// The reference verdict: no reachable environment is a communication
/// mismatch, and no transition-free reachable environment fails to be
/// consumed.
pub fn reference_verdict(d: &TypeEnv, cap: usize) -> Result<bool, CapExceeded> {
    let reach = reachable_envs(d, cap)?;
    let no_mismatch = reach.visited.iter().all(|e| is_mismatch(e).is_none());
    let no_deadlock = reach.stuck.iter().all(is_consumed);
    Ok(no_mismatch && no_deadlock)
}

/// Classification of an explored session state.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StateTag {
    Ended,
    StuckNonEnded,
    Live,
}

/// All session states reachable within the given number of communications.
/// Depth counts synchronizations only; internal unfolding and conditional
/// steps are free. States are deduplicated up to structural congruence.
#[derive(Clone, Debug, Default)]
pub struct SessionReach {
    pub states: Vec<(Session, StateTag)>,
}

impl SessionReach {
    pub fn stuck_non_ended(&self) -> impl Iterator<Item = &Session> {
        self.states
            .iter()
            .filter(|(_, t)| *t == StateTag::StuckNonEnded)
            .map(|(s, _)| s)
    }

    pub fn contains(&self, m: &Session) -> bool {
        let key = m.canonical();
        self.states.iter().any(|(s, _)| s.canonical() == key)
    }
}

/// Exhaustive exploration of a closed session to the given sync depth.
/// Intended for desk-scale inputs: exploration refuses to grow past
/// 100,000 distinct states.
pub fn explore_session(m: &Session, depth: usize) -> SessionReach {
    const STATE_CAP: usize = 100_000;
    let mut best: HashMap<Session, usize> = HashMap::new();
    let mut queue: VecDeque<(Session, usize)> = VecDeque::new();
    best.insert(m.canonical(), 0);
    queue.push_back((m.clone(), 0));
    let mut reach = SessionReach::default();
    let mut recorded: BTreeSet<Session> = BTreeSet::new();
    while let Some((state, cost)) = queue.pop_front() {
        assert!(
            best.len() <= STATE_CAP,
            "session exploration exceeded the desk-scale bound"
        );
        let key = state.canonical();
        if *best.get(&key).unwrap_or(&usize::MAX) < cost {
            continue;
        }
        let succs = session_transitions(&state);
        if recorded.insert(key) {
            let tag = if is_ended(&state) {
                StateTag::Ended
            } else if succs.is_empty() {
                StateTag::StuckNonEnded
            } else {
                StateTag::Live
            };
            reach.states.push((state.clone(), tag));
        }
        for (action, next) in succs {
            let step = match action {
                SessionAction::Tau => 0,
                SessionAction::Sync { .. } => 1,
            };
            let next_cost = cost + step;
            if next_cost > depth {
                continue;
            }
            let nkey = next.canonical();
            if *best.get(&nkey).unwrap_or(&usize::MAX) <= next_cost {
                continue;
            }
            best.insert(nkey, next_cost);
            if step == 0 {
                queue.push_front((next, next_cost));
            } else {
                queue.push_back((next, next_cost));
            }
        }
    }
    reach
}

/// A random interaction script between two participants, later projected
/// onto the two endpoint types.
#[derive(Clone, Debug)]
enum Dialog {
    End,
    LoopVar,
    Msg {
        hub_sends: bool,
        label: String,
        sort: Sort,
        cont: Box<Dialog>,
    },
    Branch {
        hub_sends: bool,
        arms: Vec<(String, Sort, Dialog)>,
    },
    Loop {
        body: Box<Dialog>,
    },
}

/// Faults injected into an otherwise dual pair of projections. Every
/// fault surfaces as a mismatch or a deadlock under both the closure and
/// the reachability reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fault {
    None,
    SortClash,
    LabelClash,
    PolarityFlip,
    PrematureEnd,
}

const LABELS: &[&str] = &["a", "b", "c"];
const SORTS: &[Sort] = &[Sort::Nat, Sort::Int, Sort::Str, Sort::Bool, Sort::Unit];

fn gen_leaf(rng: &mut ChaCha8Rng, in_loop: bool) -> Dialog {
    if in_loop && rng.gen_bool(0.7) {
        Dialog::LoopVar
    } else {
        Dialog::End
    }
}

fn gen_dialog(rng: &mut ChaCha8Rng, budget: usize, in_loop: bool) -> Dialog {
    if budget == 0 || rng.gen_bool(0.1) {
        return gen_leaf(rng, in_loop);
    }
    // recursion probability 0.4; loops are not nested and their bodies
    // start with a prefix, so projections stay contractive
    if !in_loop && rng.gen_bool(0.4) {
        return Dialog::Loop {
            body: Box::new(gen_step(rng, budget - 1, true)),
        };
    }
    gen_step(rng, budget, in_loop)
}

/// A dialog that starts with a message or a branching point.
fn gen_step(rng: &mut ChaCha8Rng, budget: usize, in_loop: bool) -> Dialog {
    let hub_sends = rng.gen_bool(0.5);
    let next_budget = budget.saturating_sub(1);
    if budget > 1 && rng.gen_bool(0.35) {
        // both sides of a branching point carry the same arm labels
        let arm_count = rng.gen_range(2..=LABELS.len());
        let mut labels: Vec<&str> = LABELS.to_vec();
        for i in (1..labels.len()).rev() {
            let j = rng.gen_range(0..=i);
            labels.swap(i, j);
        }
        let arms = labels
            .into_iter()
            .take(arm_count)
            .map(|l| {
                let sort = SORTS[rng.gen_range(0..SORTS.len())];
                (l.to_string(), sort, gen_dialog(rng, next_budget, in_loop))
            })
            .collect();
        Dialog::Branch { hub_sends, arms }
    } else {
        let label = LABELS[rng.gen_range(0..LABELS.len())].to_string();
        let sort = SORTS[rng.gen_range(0..SORTS.len())];
        Dialog::Msg {
            hub_sends,
            label,
            sort,
            cont: Box::new(gen_dialog(rng, next_budget, in_loop)),
        }
    }
}

/// Constructor nesting depth of a type.
fn type_depth(t: &SessionType) -> usize {
    match t {
        SessionType::Out { cont, .. } | SessionType::In { cont, .. } => 1 + type_depth(cont),
        SessionType::Sum(l, r) => 1 + type_depth(l).max(type_depth(r)),
        SessionType::Mu { body, .. } => 1 + type_depth(body),
        SessionType::End | SessionType::Var(_) => 0,
    }
}

/// Project a dialog onto the hub-side type; `k` is what the hub does after
/// the dialog ends.
fn project_hub(d: &Dialog, partner: &str, k: &SessionType) -> SessionType {
    match d {
        Dialog::End => k.clone(),
        Dialog::LoopVar => SessionType::var("X"),
        Dialog::Msg {
            hub_sends,
            label,
            sort,
            cont,
        } => {
            let below = project_hub(cont, partner, k);
            if *hub_sends {
                SessionType::out(partner, label.as_str(), *sort, below)
            } else {
                SessionType::inp(partner, label.as_str(), *sort, below)
            }
        }
        Dialog::Branch { hub_sends, arms } => SessionType::sum_all(
            arms.iter()
                .map(|(l, s, cont)| {
                    let below = project_hub(cont, partner, k);
                    if *hub_sends {
                        SessionType::out(partner, l.as_str(), *s, below)
                    } else {
                        SessionType::inp(partner, l.as_str(), *s, below)
                    }
                })
                .collect(),
        ),
        Dialog::Loop { body } => SessionType::mu("X", project_hub(body, partner, k)),
    }
}

/// Project a dialog onto the partner-side type (the dual of the hub's
/// view).
fn project_partner(d: &Dialog, hub: &str) -> SessionType {
    match d {
        Dialog::End => SessionType::End,
        Dialog::LoopVar => SessionType::var("X"),
        Dialog::Msg {
            hub_sends,
            label,
            sort,
            cont,
        } => {
            let below = project_partner(cont, hub);
            if *hub_sends {
                SessionType::inp(hub, label.as_str(), *sort, below)
            } else {
                SessionType::out(hub, label.as_str(), *sort, below)
            }
        }
        Dialog::Branch { hub_sends, arms } => SessionType::sum_all(
            arms.iter()
                .map(|(l, s, cont)| {
                    let below = project_partner(cont, hub);
                    if *hub_sends {
                        SessionType::inp(hub, l.as_str(), *s, below)
                    } else {
                        SessionType::out(hub, l.as_str(), *s, below)
                    }
                })
                .collect(),
        ),
        Dialog::Loop { body } => SessionType::mu("X", project_partner(body, hub)),
    }
}

/// Apply a fault to the partner-side projection. Faults touch singleton
/// messages only, so that an injected incompatibility shows up as a plain
/// facing-pair mismatch (or a missing partner) rather than deep inside a
/// branch.
fn inject_fault(t: &SessionType, fault: Fault, rng: &mut ChaCha8Rng) -> SessionType {
    match fault {
        Fault::None => t.clone(),
        _ => {
            let count = count_singleton_prefixes(t);
            if count == 0 {
                return t.clone();
            }
            let target = rng.gen_range(0..count);
            let mut seen = 0usize;
            rewrite_singleton(t, fault, target, &mut seen)
        }
    }
}

/// Singleton prefixes are prefixes that are not direct summands of a sum.
fn count_singleton_prefixes(t: &SessionType) -> usize {
    fn walk(t: &SessionType, under_sum: bool) -> usize {
        match t {
            SessionType::Out { cont, .. } | SessionType::In { cont, .. } => {
                (!under_sum) as usize + walk(cont, false)
            }
            SessionType::Sum(l, r) => walk(l, true) + walk(r, true),
            SessionType::Mu { body, .. } => walk(body, false),
            _ => 0,
        }
    }
    walk(t, false)
}

fn rewrite_singleton(
    t: &SessionType,
    fault: Fault,
    target: usize,
    seen: &mut usize,
) -> SessionType {
    fn walk(
        t: &SessionType,
        under_sum: bool,
        fault: Fault,
        target: usize,
        seen: &mut usize,
    ) -> SessionType {
        match t {
            SessionType::Out {
                peer,
                label,
                payload,
                cont,
            }
            | SessionType::In {
                peer,
                label,
                payload,
                cont,
            } => {
                let is_out = matches!(t, SessionType::Out { .. });
                let mut hit = false;
                if !under_sum {
                    hit = *seen == target;
                    *seen += 1;
                }
                if hit {
                    match fault {
                        Fault::SortClash => {
                            let new_sort = SORTS
                                .iter()
                                .copied()
                                .find(|s| *s != *payload)
                                .unwrap_or(Sort::Nat);
                            return rebuild(
                                is_out,
                                peer,
                                label.as_str(),
                                new_sort,
                                (**cont).clone(),
                            );
                        }
                        Fault::LabelClash => {
                            let new_label = if label.as_str() == "z" { "y" } else { "z" };
                            return rebuild(is_out, peer, new_label, *payload, (**cont).clone());
                        }
                        Fault::PolarityFlip => {
                            return rebuild(
                                !is_out,
                                peer,
                                label.as_str(),
                                *payload,
                                (**cont).clone(),
                            );
                        }
                        Fault::PrematureEnd => return SessionType::End,
                        Fault::None => {}
                    }
                }
                let below = walk(cont, false, fault, target, seen);
                rebuild(is_out, peer, label.as_str(), *payload, below)
            }
            SessionType::Sum(l, r) => SessionType::sum(
                walk(l, true, fault, target, seen),
                walk(r, true, fault, target, seen),
            ),
            SessionType::Mu { var, body } => SessionType::Mu {
                var: var.clone(),
                body: Box::new(walk(body, false, fault, target, seen)),
            },
            other => other.clone(),
        }
    }
    fn rebuild(
        is_out: bool,
        peer: &Participant,
        label: &str,
        sort: Sort,
        cont: SessionType,
    ) -> SessionType {
        if is_out {
            SessionType::out(peer.as_str(), label, sort, cont)
        } else {
            SessionType::inp(peer.as_str(), label, sort, cont)
        }
    }
    walk(t, false, fault, target, seen)
}

/// A randomly generated minimal well-formed environment with at most
/// three participants and type depth at most six.
///
/// Instances are protocol-shaped: a hub participant `p` runs one dialog
/// with each partner in turn, and every partner's type mentions only the
/// hub, so the environment and all its redexes stay minimal. Half of the
/// instances carry an injected fault (a sort clash, a label clash, a
/// polarity flip or a premature termination), which both the closure and
/// the reachability reference classify as an error when it is reachable.
pub fn random_minimal_env(seed: u64) -> TypeEnv {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let two_partners = rng.gen_bool(0.5);
        let partners: &[&str] = if two_partners { &["q", "r"] } else { &["q"] };
        let budget = if two_partners {
            2
        } else {
            rng.gen_range(2..=4)
        };
        let dialogs: Vec<Dialog> = partners
            .iter()
            .map(|_| gen_dialog(&mut rng, budget, false))
            .collect();
        // hub runs the dialogs back to back
        let mut hub_type = SessionType::End;
        for (partner, dialog) in partners.iter().zip(&dialogs).rev() {
            hub_type = project_hub(dialog, partner, &hub_type);
        }
        let fault = match rng.gen_range(0..8) {
            0 => Fault::SortClash,
            1 => Fault::LabelClash,
            2 => Fault::PolarityFlip,
            3 => Fault::PrematureEnd,
            _ => Fault::None,
        };
        let faulty_partner = rng.gen_range(0..partners.len());
        let mut pairs = vec![(Participant::new("p"), hub_type)];
        for (i, (partner, dialog)) in partners.iter().zip(&dialogs).enumerate() {
            let mut t = project_partner(dialog, "p");
            if i == faulty_partner {
                t = inject_fault(&t, fault, &mut rng);
            }
            pairs.push((Participant::new(*partner), t));
        }
        let env: TypeEnv = pairs.into_iter().collect();
        let depth = env.iter().map(|(_, t)| type_depth(t)).max().unwrap_or(0);
        if depth <= 6 && is_well_formed_env(&env) && is_minimal(&env) {
            return env;
        }
    }
    // if every retry was rejected, fall back to a trivial instance
    TypeEnv::from_pairs(vec![(Participant::new("p"), SessionType::End)])
}

/// A session whose threads mirror the given environment: each type is
/// erased to a process that sends fresh literals and receives blindly.
/// Used to exercise session-level exploration on generated environments.
pub fn session_of_env(d: &TypeEnv) -> Session {
    fn erase(t: &SessionType) -> Process {
        match t {
            SessionType::Out {
                peer,
                label,
                payload,
                cont,
            } => Process::send(
                peer.as_str(),
                label.as_str(),
                sample_value(*payload),
                erase(cont),
            ),
            SessionType::In {
                peer, label, cont, ..
            } => Process::recv(peer.as_str(), label.as_str(), "x", erase(cont)),
            SessionType::Sum(l, r) => Process::sum(erase(l), erase(r)),
            SessionType::End => Process::Inaction,
            SessionType::Mu { var, body } => Process::mu(var.as_str(), erase(body)),
            SessionType::Var(v) => Process::pvar(v.as_str()),
        }
    }
    fn sample_value(s: Sort) -> crate::syntax::Expr {
        use crate::syntax::Expr;
        match s {
            Sort::Nat => Expr::Nat(1),
            Sort::Int => Expr::Int(-1),
            Sort::Str => Expr::str("v"),
            Sort::Bool => Expr::Bool(true),
            Sort::Unit => Expr::Unit,
        }
    }
    Session::new(
        d.iter()
            .map(|(p, t)| crate::syntax::Thread {
                participant: p.clone(),
                body: erase(t),
            })
            .collect(),
    )
    .expect("environment domains are duplicate-free")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compliance::{compliance, ClosureOpts};
    use crate::corpus_fixtures as fix;
    use crate::env_lts::Oracle;

    #[test]
    fn reachability_of_the_rejected_env_contains_the_lock() {
        let reach = reachable_envs(&fix::delta_dprime(), 50_000).unwrap();
        assert!(reach.stuck.contains(&fix::delta_lock()));
    }

    #[test]
    fn reachability_of_the_consumed_env_is_trivial() {
        let reach = reachable_envs(&fix::delta_end(), 50_000).unwrap();
        assert_eq!(reach.visited.len(), 1);
        assert!(reach.stuck.contains(&fix::delta_end()));
    }

    #[test]
    fn accepted_env_gets_stuck_only_when_consumed() {
        let reach = reachable_envs(&fix::delta(), 50_000).unwrap();
        assert_eq!(
            reach.stuck.iter().collect::<Vec<_>>(),
            vec![&fix::delta_end()]
        );
    }

    #[test]
    fn reference_verdicts_on_the_corpus() {
        assert!(reference_verdict(&fix::delta(), 50_000).unwrap());
        assert!(!reference_verdict(&fix::delta_dprime(), 50_000).unwrap());
        let single = TypeEnv::from_pairs(vec![(Participant::new("p"), SessionType::End)]);
        assert!(reference_verdict(&single, 50_000).unwrap());
    }

    #[test]
    fn cap_is_reported() {
        assert!(matches!(
            reachable_envs(&fix::delta(), 3),
            Err(CapExceeded { cap: 3 })
        ));
    }

    #[test]
    fn session_exploration_tags_states() {
        let m = fix::oauth_session();
        let reach = explore_session(&m, 3);
        // the post-login state of the worked example is reached
        let m3 = {
            use crate::syntax::{Expr, Process};
            Session::new(vec![
                crate::syntax::Thread {
                    participant: Participant::new("s"),
                    body: Process::recv("a", "auth", "x", fix::p_s()),
                },
                crate::syntax::Thread {
                    participant: Participant::new("c"),
                    body: Process::sum(
                        Process::send("a", "pwd", Expr::str("fido"), fix::p_c()),
                        Process::send("a", "ssh", Expr::Unit, fix::p_c()),
                    ),
                },
                crate::syntax::Thread {
                    participant: Participant::new("a"),
                    body: fix::p_star_a(),
                },
            ])
            .unwrap()
        };
        assert!(reach.contains(&m3));
        assert!(reach.stuck_non_ended().next().is_none());
    }

    #[test]
    fn ended_session_explores_to_a_single_state() {
        let m = Session::new(vec![crate::syntax::Thread {
            participant: Participant::new("p"),
            body: Process::Inaction,
        }])
        .unwrap();
        let reach = explore_session(&m, 5);
        assert_eq!(reach.states.len(), 1);
        assert_eq!(reach.states[0].1, StateTag::Ended);
    }

    #[test]
    fn two_attempts_session_reaches_a_stuck_state() {
        let reach = explore_session(&fix::two_attempts_session(), 12);
        assert!(reach.stuck_non_ended().next().is_some());
    }

    #[test]
    fn generated_envs_are_well_formed_and_minimal() {
        for seed in 0..50 {
            let env = random_minimal_env(seed);
            assert!(is_well_formed_env(&env), "seed {}", seed);
            assert!(is_minimal(&env), "seed {}", seed);
            assert!(env.len() <= 3);
        }
    }

    #[test]
    fn generated_envs_exercise_both_verdicts() {
        let mut trues = 0;
        let mut falses = 0;
        for seed in 0..60 {
            let env = random_minimal_env(seed);
            match reference_verdict(&env, 50_000) {
                Ok(true) => trues += 1,
                Ok(false) => falses += 1,
                Err(_) => {}
            }
        }
        assert!(trues > 5, "only {} compliant instances", trues);
        assert!(falses > 5, "only {} erroneous instances", falses);
    }

    #[test]
    fn closure_and_reference_agree_on_a_quick_sample() {
        for seed in 0..40 {
            let env = random_minimal_env(seed);
            let reference = reference_verdict(&env, 50_000).unwrap();
            let report = compliance(&Oracle::Lex, &env, ClosureOpts::default()).unwrap();
            assert_eq!(
                report.verdict,
                reference,
                "seed {}: closure {} vs reference {} on\n{}",
                seed,
                report.verdict,
                reference,
                crate::pretty::print_env(&env)
            );
        }
    }
}
