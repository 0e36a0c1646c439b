//! Transition systems over session types and type environments.
//!
//! Three layers:
//! - the non-deterministic environment LTS (tau unfoldings and label
//!   synchronizations), used to define deadlocks and as the reference
//!   semantics;
//! - the semi-algorithmic type transitions, which additionally return the
//!   *remnant* of a sum (the branches discarded by firing one of them);
//! - the deterministic reduction `det_step`, driven by a fair oracle and a
//!   label scheduling policy, which also produces the *sum continuation*
//!   environment to be explored later by the closure.
//!
//! Values are abstracted to sorts throughout: only `label@sort` matters
//! for synchronization, which keeps every transition relation finite.

use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{
    is_well_formed_env, parties, substitute_type, top, Label, Participant, Polarity, SessionType,
    Sort, TypeEnv,
};

/// Environment-level action: a participant-decorated internal step
/// `tau@p`, or a synchronization `l@p><q` (receiver `p`, sender `q`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EnvAction {
    TauAt {
        participant: Participant,
    },
    Sync {
        label: Label,
        receiver: Participant,
        sender: Participant,
    },
}

impl fmt::Display for EnvAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvAction::TauAt { participant } => write!(f, "tau@{}", participant),
            EnvAction::Sync {
                label,
                receiver,
                sender,
            } => write!(f, "{}@{}><{}", label, receiver, sender),
        }
    }
}

/// What a sum leaves behind when one branch fires: nothing, or the
/// remaining branches folded back into a type.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Remnant {
    Hole,
    Type(SessionType),
}

impl Remnant {
    /// Sum of remnants; `Hole` is the neutral element.
    pub fn plus(self, other: Remnant) -> Remnant {
        match (self, other) {
            (Remnant::Hole, r) | (r, Remnant::Hole) => r,
            (Remnant::Type(a), Remnant::Type(b)) => Remnant::Type(SessionType::sum(a, b)),
        }
    }
}

/// The environment carrying the discarded branches of a synchronization,
/// or a placeholder when at least one side had nothing left.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SumContinuation {
    EnvHole,
    Env(TypeEnv),
}

/// A prefix firing of a type: direction, peer, label and payload sort.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PrefixAction {
    pub polarity: Polarity,
    pub peer: Participant,
    pub label: Label,
    pub sort: Sort,
}

/// A type-level step: unfolding a recursion, or firing a prefix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TypeAction {
    Tau,
    Prefix(PrefixAction),
}

/// Every enabled step of a type, with its continuation and the remnant of
/// the sum it fired from.
pub fn type_transitions(t: &SessionType) -> Vec<(TypeAction, SessionType, Remnant)> {
    match t {
        SessionType::Out {
            peer,
            label,
            payload,
            cont,
        } => vec![(
            TypeAction::Prefix(PrefixAction {
                polarity: Polarity::Send,
                peer: peer.clone(),
                label: label.clone(),
                sort: *payload,
            }),
            (**cont).clone(),
            Remnant::Hole,
        )],
        SessionType::In {
            peer,
            label,
            payload,
            cont,
        } => vec![(
            TypeAction::Prefix(PrefixAction {
                polarity: Polarity::Recv,
                peer: peer.clone(),
                label: label.clone(),
                sort: *payload,
            }),
            (**cont).clone(),
            Remnant::Hole,
        )],
        SessionType::Sum(l, r) => {
            let mut out = Vec::new();
            for (a, cont, rem) in type_transitions(l) {
                if matches!(a, TypeAction::Tau) {
                    continue; // recursion cannot occur inside well-formed sums
                }
                out.push((a, cont, rem.plus(Remnant::Type((**r).clone()))));
            }
            for (a, cont, rem) in type_transitions(r) {
                if matches!(a, TypeAction::Tau) {
                    continue;
                }
                out.push((a, cont, Remnant::Type((**l).clone()).plus(rem)));
            }
            out
        }
        SessionType::Mu { var, body } => vec![(
            TypeAction::Tau,
            substitute_type(body, var, t),
            Remnant::Hole,
        )],
        SessionType::End | SessionType::Var(_) => Vec::new(),
    }
}

/// The non-deterministic successor set of an environment: every tau
/// unfolding and every matched synchronization. A sync on `l` between
/// receiver `p` and sender `q` exists iff `p`'s type fires an input
/// `q?l(S)` and `q`'s type fires an output `p!l(S)` on the same label and
/// sort.
pub fn env_transitions(d: &TypeEnv) -> Vec<(EnvAction, TypeEnv)> {
    let mut out = Vec::new();
    for (p, t) in d.iter() {
        if t.is_mu() {
            let unfolded = type_transitions(t)
                .into_iter()
                .find(|(a, _, _)| matches!(a, TypeAction::Tau))
                .map(|(_, c, _)| c)
                .expect("mu type always unfolds");
            out.push((
                EnvAction::TauAt {
                    participant: p.clone(),
                },
                d.updated(p, unfolded),
            ));
        }
    }
    for (p, tp) in d.iter() {
        for (q, tq) in d.iter() {
            if p == q {
                continue;
            }
            // p receives from q, q sends to p
            for (ap, cp, _) in type_transitions(tp) {
                let TypeAction::Prefix(inp) = ap else {
                    continue;
                };
                if inp.polarity != Polarity::Recv || &inp.peer != q {
                    continue;
                }
                for (aq, cq, _) in type_transitions(tq) {
                    let TypeAction::Prefix(outp) = aq else {
                        continue;
                    };
                    if outp.polarity != Polarity::Send
                        || &outp.peer != p
                        || outp.label != inp.label
                        || outp.sort != inp.sort
                    {
                        continue;
                    }
                    out.push((
                        EnvAction::Sync {
                            label: inp.label.clone(),
                            receiver: p.clone(),
                            sender: q.clone(),
                        },
                        d.updated(p, cp.clone()).updated(q, cq.clone()),
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("environment has no bindings")]
    EmptyEnvironment,
    #[error("communication mismatch between {} and {}", pair.0, pair.1)]
    MismatchDetected {
        env: Box<TypeEnv>,
        pair: (Participant, Participant),
    },
    #[error("oracle reply violates fairness on this environment")]
    OracleNotFair { env: Box<TypeEnv> },
}

/// The blocks of the minimal partition: connected components of the
/// "shares a party" relation over non-ended bindings. A binding belongs to
/// a component when its party set (its own name plus every participant its
/// type mentions) intersects the component's. All `end`-typed bindings are
/// attached to the first block; an all-`end` environment is one block.
pub fn minimal_partition(d: &TypeEnv) -> Result<Vec<TypeEnv>, EnvError> {
    if d.is_empty() {
        return Err(EnvError::EmptyEnvironment);
    }
    let live: Vec<(&Participant, &SessionType)> = d.iter().filter(|(_, t)| !t.is_end()).collect();
    let mut blocks: Vec<(BTreeSet<Participant>, Vec<Participant>)> = Vec::new();
    for (p, t) in live {
        let mut ps: BTreeSet<Participant> = parties(t);
        ps.insert(p.clone());
        let mut members = vec![p.clone()];
        // merge every block sharing a party
        let mut rest = Vec::new();
        for (bps, bmembers) in blocks.into_iter() {
            if bps.intersection(&ps).next().is_some() {
                ps.extend(bps);
                members.extend(bmembers);
            } else {
                rest.push((bps, bmembers));
            }
        }
        rest.push((ps, members));
        blocks = rest;
    }
    blocks.sort_by(|a, b| a.1.iter().min().cmp(&b.1.iter().min()));
    let ended: Vec<Participant> = d
        .iter()
        .filter(|(_, t)| t.is_end())
        .map(|(p, _)| p.clone())
        .collect();
    if blocks.is_empty() {
        return Ok(vec![d.clone()]);
    }
    let mut envs: Vec<TypeEnv> = blocks
        .iter()
        .map(|(_, members)| {
            members
                .iter()
                .map(|p| (p.clone(), d.get(p).unwrap().clone()))
                .collect()
        })
        .collect();
    for p in ended {
        let t = d.get(&p).unwrap().clone();
        envs[0].insert(p, t);
    }
    Ok(envs)
}

/// True when the non-ended bindings form at most one connected block.
pub fn is_minimal(d: &TypeEnv) -> bool {
    match minimal_partition(d) {
        Ok(blocks) => blocks.len() <= 1,
        Err(_) => true, // empty environment has nothing to split
    }
}

/// What a scheduling oracle answers for an environment: a communicating
/// pair, a participant to unfold, or nothing.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OracleReply {
    Ret2(Participant, Participant),
    Ret1(Participant),
    Ret0,
}

/// The built-in deterministic scheduling oracles. Both are fair by
/// construction: `Ret1` is only answered for a recursive binding, `Ret2`
/// only for a mutual-top pair, and `Ret0` only when neither exists.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Oracle {
    /// Ascending scan: first recursive participant, else the least
    /// mutual-top pair.
    Lex,
    /// Descending scan: last recursive participant, else the greatest
    /// mutual-top pair.
    RevLex,
}

impl Oracle {
    pub fn name(&self) -> &'static str {
        match self {
            Oracle::Lex => "lex",
            Oracle::RevLex => "revlex",
        }
    }

    pub fn reply(&self, d: &TypeEnv) -> OracleReply {
        let mus: Vec<&Participant> = d
            .iter()
            .filter(|(_, t)| t.is_mu())
            .map(|(p, _)| p)
            .collect();
        let chosen_mu = match self {
            Oracle::Lex => mus.first(),
            Oracle::RevLex => mus.last(),
        };
        if let Some(p) = chosen_mu {
            return OracleReply::Ret1((*p).clone());
        }
        let mut pairs = mutual_top_pairs(d);
        if pairs.is_empty() {
            return OracleReply::Ret0;
        }
        let (p, q) = match self {
            Oracle::Lex => pairs.remove(0),
            Oracle::RevLex => pairs.pop().unwrap(),
        };
        OracleReply::Ret2(p, q)
    }
}

/// All pairs `(p, q)` with `p < q`, `top(d(p)) = q` and `top(d(q)) = p`,
/// in ascending order.
pub fn mutual_top_pairs(d: &TypeEnv) -> Vec<(Participant, Participant)> {
    let mut pairs = Vec::new();
    for (p, tp) in d.iter() {
        for (q, tq) in d.iter() {
            if p >= q {
                continue;
            }
            if top(tp) == Some(q.clone()) && top(tq) == Some(p.clone()) {
                pairs.push((p.clone(), q.clone()));
            }
        }
    }
    pairs
}

/// Checks the three fairness clauses of a reply against an environment.
pub fn reply_is_fair(d: &TypeEnv, reply: &OracleReply) -> bool {
    match reply {
        OracleReply::Ret2(p, q) => {
            p != q
                && d.get(p).map(top) == Some(Some(q.clone()))
                && d.get(q).map(top) == Some(Some(p.clone()))
        }
        OracleReply::Ret1(p) => d.get(p).map(|t| t.is_mu()).unwrap_or(false),
        OracleReply::Ret0 => d.iter().all(|(_, t)| !t.is_mu()) && mutual_top_pairs(d).is_empty(),
    }
}

/// How the synchronized label is chosen from the common tagged labels of a
/// pair.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum LabelOrder {
    /// Lexicographic order on label names.
    #[default]
    Lex,
    /// Left-to-right occurrence order in the receiving type.
    Syntactic,
}

impl LabelOrder {
    pub fn name(&self) -> &'static str {
        match self {
            LabelOrder::Lex => "lex",
            LabelOrder::Syntactic => "syntactic",
        }
    }
}

/// Labels of the top prefixes of `t` in occurrence order, leftmost first.
fn occurrence_labels(t: &SessionType) -> Vec<(Label, Sort)> {
    t.summands()
        .iter()
        .filter_map(|s| match s {
            SessionType::Out { label, payload, .. } | SessionType::In { label, payload, .. } => {
                Some((label.clone(), *payload))
            }
            _ => None,
        })
        .collect()
}

/// The scheduled label for a receiver/sender pair: the first common tagged
/// label under the configured order, if any.
fn schedule_label(
    receiver_type: &SessionType,
    sender_type: &SessionType,
    order: LabelOrder,
) -> Option<(Label, Sort)> {
    let recv_labels = crate::syntax::tagged_labels(receiver_type);
    let send_labels = crate::syntax::tagged_labels(sender_type);
    match order {
        LabelOrder::Lex => recv_labels.intersection(&send_labels).next().cloned(),
        LabelOrder::Syntactic => occurrence_labels(receiver_type)
            .into_iter()
            .find(|tl| send_labels.contains(tl)),
    }
}

/// Fire the prefix `polarity peer!label(sort)` in `t`, returning the
/// continuation and the remnant of discarded branches.
fn fire_prefix(
    t: &SessionType,
    polarity: Polarity,
    peer: &Participant,
    label: &Label,
    sort: Sort,
) -> Option<(SessionType, Remnant)> {
    type_transitions(t).into_iter().find_map(|(a, cont, rem)| {
        let TypeAction::Prefix(pa) = a else {
            return None;
        };
        if pa.polarity == polarity && &pa.peer == peer && &pa.label == label && pa.sort == sort {
            Some((cont, rem))
        } else {
            None
        }
    })
}

/// One deterministic reduction of a minimal environment under a fair
/// oracle.
///
/// Returns `None` when the oracle answers `Ret0` (the environment is
/// stuck). On `Ret1(p)` the recursion of `p` unfolds with an empty sum
/// continuation. On `Ret2(p, q)` the pair synchronizes on the first common
/// tagged label under `order`; the sum continuation carries both remnants
/// when neither side exhausted its sum. A pair with equal polarities or no
/// common tagged label is a communication mismatch and is reported as an
/// error, as is any oracle reply that violates fairness.
pub fn det_step(
    omega: &Oracle,
    d: &TypeEnv,
    order: LabelOrder,
) -> Result<Option<(EnvAction, TypeEnv, SumContinuation)>, EnvError> {
    det_step_reply(&omega.reply(d), d, order)
}

/// `det_step` against an explicit oracle reply; the fairness of the reply
/// is re-checked defensively.
pub fn det_step_reply(
    reply: &OracleReply,
    d: &TypeEnv,
    order: LabelOrder,
) -> Result<Option<(EnvAction, TypeEnv, SumContinuation)>, EnvError> {
    if !reply_is_fair(d, reply) {
        return Err(EnvError::OracleNotFair {
            env: Box::new(d.clone()),
        });
    }
    match reply {
        OracleReply::Ret0 => Ok(None),
        OracleReply::Ret1(p) => {
            let t = d.get(p).expect("fairness checked");
            let unfolded = type_transitions(t)
                .into_iter()
                .find(|(a, _, _)| matches!(a, TypeAction::Tau))
                .map(|(_, c, _)| c)
                .expect("mu type unfolds");
            Ok(Some((
                EnvAction::TauAt {
                    participant: p.clone(),
                },
                d.updated(p, unfolded),
                SumContinuation::EnvHole,
            )))
        }
        OracleReply::Ret2(p, q) => {
            let tp = d.get(p).expect("fairness checked").clone();
            let tq = d.get(q).expect("fairness checked").clone();
            let (pol_p, pol_q) = (crate::syntax::polarity(&tp), crate::syntax::polarity(&tq));
            let (receiver, sender, t_recv, t_send) = match (pol_p, pol_q) {
                (Some(Polarity::Recv), Some(Polarity::Send)) => (p, q, tp.clone(), tq.clone()),
                (Some(Polarity::Send), Some(Polarity::Recv)) => (q, p, tq.clone(), tp.clone()),
                _ => {
                    // both selecting or both branching toward each other
                    return Err(EnvError::MismatchDetected {
                        env: Box::new(d.clone()),
                        pair: (p.clone(), q.clone()),
                    });
                }
            };
            let Some((label, sort)) = schedule_label(&t_recv, &t_send, order) else {
                // no common tagged label: empty intersection or sort clash
                return Err(EnvError::MismatchDetected {
                    env: Box::new(d.clone()),
                    pair: (p.clone(), q.clone()),
                });
            };
            let (recv_cont, recv_rem) = fire_prefix(&t_recv, Polarity::Recv, sender, &label, sort)
                .expect("scheduled label fires on the receiver");
            let (send_cont, send_rem) =
                fire_prefix(&t_send, Polarity::Send, receiver, &label, sort)
                    .expect("scheduled label fires on the sender");
            let next = d.updated(receiver, recv_cont).updated(sender, send_cont);
            let continuation = match (recv_rem, send_rem) {
                (Remnant::Type(tr), Remnant::Type(ts)) => {
                    SumContinuation::Env(d.updated(receiver, tr).updated(sender, ts))
                }
                _ => SumContinuation::EnvHole,
            };
            Ok(Some((
                EnvAction::Sync {
                    label,
                    receiver: receiver.clone(),
                    sender: sender.clone(),
                },
                next,
                continuation,
            )))
        }
    }
}

/// DOT rendering of the non-deterministic transition graph rooted at the
/// given edges; nodes are pretty-printed environments.
pub fn env_graph_dot(edges: &[(TypeEnv, EnvAction, TypeEnv)]) -> String {
    use std::collections::BTreeMap;
    let mut ids: BTreeMap<&TypeEnv, usize> = BTreeMap::new();
    let mut order: Vec<&TypeEnv> = Vec::new();
    for (a, _, b) in edges {
        for e in [a, b] {
            if !ids.contains_key(e) {
                ids.insert(e, order.len());
                order.push(e);
            }
        }
    }
    let mut out = String::from(
        "digraph envs {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n",
    );
    for e in &order {
        let label = crate::pretty::print_env(e)
            .replace('\\', "\\\\")
            .replace('"', "\\\"");
        let label = label.replace('\n', "\\l");
        out.push_str(&format!("  n{} [label=\"{}\\l\"];\n", ids[*e], label));
    }
    for (a, act, b) in edges {
        out.push_str(&format!(
            "  n{} -> n{} [label=\"{}\"];\n",
            ids[&a], ids[&b], act
        ));
    }
    out.push_str("}\n");
    out
}

/// Well-formedness of every binding; callers of the deterministic system
/// are expected to have established this.
pub fn check_well_formed(d: &TypeEnv) -> bool {
    is_well_formed_env(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_fixtures as fix;
    use crate::syntax::unfold;

    fn p(name: &str) -> Participant {
        Participant::new(name)
    }

    #[test]
    fn sum_firing_folds_the_remnant() {
        // T1 + T2 + T3, firing the middle branch leaves T1 + T3
        let t1 = SessionType::out("r", "a", Sort::Nat, SessionType::End);
        let t2 = SessionType::out("r", "b", Sort::Nat, SessionType::End);
        let t3 = SessionType::out("r", "c", Sort::Nat, SessionType::End);
        let sum = SessionType::sum_all(vec![t1.clone(), t2.clone(), t3.clone()]);
        let fired = type_transitions(&sum)
            .into_iter()
            .find(|(a, _, _)| matches!(a, TypeAction::Prefix(pa) if pa.label.as_str() == "b"))
            .unwrap();
        assert_eq!(
            fired.2,
            Remnant::Type(SessionType::sum(t1.clone(), t3.clone()))
        );

        // a mu type makes a single tau step with an empty remnant
        let mu = fix::t_a();
        let steps = type_transitions(&mu);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0, TypeAction::Tau);
        assert_eq!(steps[0].1, fix::t_star_a());
        assert_eq!(steps[0].2, Remnant::Hole);

        // a singleton prefix leaves a hole
        let single = SessionType::out("q", "l", Sort::Bool, SessionType::End);
        assert_eq!(type_transitions(&single)[0].2, Remnant::Hole);
    }

    #[test]
    fn remnant_plus_is_associative_with_hole_identity() {
        let t = |l: &str| SessionType::out("r", l, Sort::Nat, SessionType::End);
        let a = Remnant::Type(t("a"));
        let b = Remnant::Type(t("b"));
        let c = Remnant::Type(t("c"));
        assert_eq!(Remnant::Hole.plus(a.clone()), a);
        assert_eq!(a.clone().plus(Remnant::Hole), a);
        // sum trees are sugar for the flat alternative list, so the law is
        // associativity of the summand sequence
        let left = a.clone().plus(b.clone()).plus(c.clone());
        let right = a.clone().plus(b.clone().plus(c.clone()));
        let (Remnant::Type(lt), Remnant::Type(rt)) = (left, right) else {
            panic!("both groupings produce types")
        };
        assert_eq!(lt.summands(), rt.summands());
    }

    /// Delta2 of the worked protocol: both s and c unfolded.
    fn delta2() -> TypeEnv {
        let t_star_s = unfold(&fix::t_s()).unwrap();
        let t_star_c = unfold(&fix::t_c()).unwrap();
        TypeEnv::from_pairs(vec![
            (p("s"), t_star_s),
            (p("c"), t_star_c),
            (p("a"), fix::t_star_a()),
        ])
    }

    #[test]
    fn delta2_has_exactly_the_login_and_cancel_syncs() {
        let syncs: Vec<EnvAction> = env_transitions(&delta2())
            .into_iter()
            .filter(|(a, _)| matches!(a, EnvAction::Sync { .. }))
            .map(|(a, _)| a)
            .collect();
        assert_eq!(syncs.len(), 2);
        assert!(syncs.contains(&EnvAction::Sync {
            label: Label::new("login"),
            receiver: p("c"),
            sender: p("s"),
        }));
        assert!(syncs.contains(&EnvAction::Sync {
            label: Label::new("cancel"),
            receiver: p("c"),
            sender: p("s"),
        }));
    }

    #[test]
    fn ended_and_locked_envs_have_no_transitions() {
        assert!(env_transitions(&fix::delta_end()).is_empty());
        assert!(env_transitions(&fix::delta_lock()).is_empty());
    }

    #[test]
    fn self_communication_never_synchronizes() {
        // a type pointed at its own participant is permanently stuck
        let d = TypeEnv::from_pairs(vec![(
            p("p"),
            SessionType::out("p", "l", Sort::Nat, SessionType::End),
        )]);
        assert!(env_transitions(&d).is_empty());
        assert!(mutual_top_pairs(&d).is_empty());
        assert_eq!(Oracle::Lex.reply(&d), OracleReply::Ret0);
        assert_eq!(det_step(&Oracle::Lex, &d, LabelOrder::Lex), Ok(None));
    }

    #[test]
    fn minimal_partition_splits_independent_pairs() {
        // p-q and r-s talk among themselves; t and u are ended
        let s = Sort::Nat;
        let d = TypeEnv::from_pairs(vec![
            (p("p"), SessionType::out("q", "l1", s, SessionType::End)),
            (p("q"), SessionType::inp("p", "l1", s, SessionType::End)),
            (p("r"), SessionType::out("s", "l2", s, SessionType::End)),
            (p("s"), SessionType::inp("r", "l2", s, SessionType::End)),
            (p("t"), SessionType::End),
            (p("u"), SessionType::End),
        ]);
        assert!(!is_minimal(&d));
        let blocks = minimal_partition(&d).unwrap();
        assert_eq!(blocks.len(), 2);
        // non-ended content matches the two communicating pairs
        let live0 = blocks[0].non_ended();
        let live1 = blocks[1].non_ended();
        let live0: Vec<&str> = live0.participants().map(|x| x.as_str()).collect();
        let live1: Vec<&str> = live1.participants().map(|x| x.as_str()).collect();
        assert_eq!(live0, vec!["p", "q"]);
        assert_eq!(live1, vec!["r", "s"]);
        // ended bindings land in the first block
        assert!(blocks[0].contains(&p("t")) && blocks[0].contains(&p("u")));
        assert!(!blocks[1].contains(&p("t")));
    }

    #[test]
    fn chained_participants_are_minimal() {
        let s = Sort::Nat;
        let d = TypeEnv::from_pairs(vec![
            (
                p("p"),
                SessionType::out(
                    "q",
                    "l1",
                    s,
                    SessionType::inp("t", "l2", s, SessionType::End),
                ),
            ),
            (
                p("q"),
                SessionType::inp(
                    "p",
                    "l1",
                    s,
                    SessionType::out("s", "l2", s, SessionType::End),
                ),
            ),
            (p("t"), SessionType::out("p", "l2", s, SessionType::End)),
            (p("s"), SessionType::inp("q", "l2", s, SessionType::End)),
        ]);
        assert!(is_minimal(&d));
        assert_eq!(minimal_partition(&d).unwrap().len(), 1);
    }

    #[test]
    fn singleton_and_empty_environments() {
        let d = TypeEnv::from_pairs(vec![(p("p"), SessionType::End)]);
        assert!(is_minimal(&d));
        assert_eq!(minimal_partition(&d).unwrap().len(), 1);
        assert_eq!(
            minimal_partition(&TypeEnv::new()),
            Err(EnvError::EmptyEnvironment)
        );
    }

    #[test]
    fn default_oracle_follows_the_ascending_scan() {
        // on Delta: a's type is a sum, c's the first recursive binding
        assert_eq!(Oracle::Lex.reply(&fix::delta()), OracleReply::Ret1(p("c")));
        assert_eq!(
            Oracle::RevLex.reply(&fix::delta()),
            OracleReply::Ret1(p("s"))
        );
        assert_eq!(Oracle::Lex.reply(&fix::delta_end()), OracleReply::Ret0);
        // s and c both top-point at a, whose type is end: stuck
        assert_eq!(Oracle::Lex.reply(&fix::delta_lock()), OracleReply::Ret0);
    }

    #[test]
    fn built_in_oracles_are_fair_on_corpus_envs() {
        for d in [
            fix::delta(),
            fix::delta_dprime(),
            fix::delta_lock(),
            fix::delta_end(),
            delta2(),
        ] {
            for o in [Oracle::Lex, Oracle::RevLex] {
                assert!(reply_is_fair(&d, &o.reply(&d)), "unfair on {:?}", o);
            }
        }
    }

    #[test]
    fn det_step_on_delta2_picks_cancel_first() {
        // lexicographic schedule: cancel < login
        let d2 = delta2();
        assert_eq!(Oracle::Lex.reply(&d2), OracleReply::Ret2(p("c"), p("s")));
        let (action, next, cont) = det_step(&Oracle::Lex, &d2, LabelOrder::Lex)
            .unwrap()
            .unwrap();
        assert_eq!(
            action,
            EnvAction::Sync {
                label: Label::new("cancel"),
                receiver: p("c"),
                sender: p("s"),
            }
        );
        // redex: s ended, c about to quit, a unchanged
        assert_eq!(next.get(&p("s")), Some(&SessionType::End));
        assert_eq!(
            next.get(&p("c")),
            Some(&SessionType::out("a", "quit", Sort::Unit, SessionType::End))
        );
        assert_eq!(next.get(&p("a")), Some(&fix::t_star_a()));
        // sum continuation: both login branches retained
        let SumContinuation::Env(rem) = cont else {
            panic!("expected an environment continuation")
        };
        assert_eq!(
            rem.get(&p("s")),
            Some(&SessionType::out(
                "c",
                "login",
                Sort::Unit,
                SessionType::inp("a", "auth", Sort::Bool, fix::t_s())
            ))
        );
        assert_eq!(
            rem.get(&p("c")),
            Some(&SessionType::inp(
                "s",
                "login",
                Sort::Unit,
                SessionType::sum(
                    SessionType::out("a", "pwd", Sort::Str, fix::t_c()),
                    SessionType::out("a", "ssh", Sort::Unit, fix::t_c()),
                )
            ))
        );
        assert_eq!(rem.get(&p("a")), Some(&fix::t_star_a()));
    }

    #[test]
    fn det_step_is_none_on_stuck_envs_and_detects_mismatches() {
        assert_eq!(
            det_step(&Oracle::Lex, &fix::delta_end(), LabelOrder::Lex),
            Ok(None)
        );
        assert_eq!(
            det_step(&Oracle::Lex, &fix::delta_lock(), LabelOrder::Lex),
            Ok(None)
        );

        // both sending toward each other
        let s = Sort::Nat;
        let d = TypeEnv::from_pairs(vec![
            (p("p"), SessionType::out("q", "l", s, SessionType::End)),
            (p("q"), SessionType::out("p", "l", s, SessionType::End)),
        ]);
        let err = det_step(&Oracle::Lex, &d, LabelOrder::Lex).unwrap_err();
        assert!(matches!(err, EnvError::MismatchDetected { .. }));

        // sort clash empties the tagged intersection
        let d = TypeEnv::from_pairs(vec![
            (
                p("p"),
                SessionType::out("q", "l", Sort::Nat, SessionType::End),
            ),
            (
                p("q"),
                SessionType::inp("p", "l", Sort::Int, SessionType::End),
            ),
        ]);
        let err = det_step(&Oracle::Lex, &d, LabelOrder::Lex).unwrap_err();
        assert!(matches!(err, EnvError::MismatchDetected { .. }));
    }

    #[test]
    fn det_step_rejects_unfair_replies() {
        let reply = OracleReply::Ret1(p("a")); // a's type is not recursive in Delta
        let err = det_step_reply(&reply, &fix::delta(), LabelOrder::Lex).unwrap_err();
        assert!(matches!(err, EnvError::OracleNotFair { .. }));
    }

    #[test]
    fn det_step_matches_some_nondeterministic_transition() {
        // simulation direction on corpus envs and their immediate redexes
        let mut frontier = vec![fix::delta(), fix::delta_dprime(), delta2()];
        for _ in 0..3 {
            let mut next = Vec::new();
            for d in &frontier {
                if let Ok(Some((action, redex, _))) = det_step(&Oracle::Lex, d, LabelOrder::Lex) {
                    let nd = env_transitions(d);
                    assert!(
                        nd.iter().any(|(a, e)| *a == action && *e == redex),
                        "det step not among non-deterministic successors"
                    );
                    next.push(redex);
                }
            }
            frontier = next;
        }
    }

    #[test]
    fn syntactic_label_order_follows_occurrence() {
        let d2 = delta2();
        let (action, _, _) = det_step(&Oracle::Lex, &d2, LabelOrder::Syntactic)
            .unwrap()
            .unwrap();
        // the receiver c lists login before cancel
        assert_eq!(
            action,
            EnvAction::Sync {
                label: Label::new("login"),
                receiver: p("c"),
                sender: p("s"),
            }
        );
    }

    #[test]
    fn dot_export_renders_nodes_and_edges() {
        let d = delta2();
        let edges: Vec<(TypeEnv, EnvAction, TypeEnv)> = env_transitions(&d)
            .into_iter()
            .map(|(a, e)| (d.clone(), a, e))
            .collect();
        let dot = env_graph_dot(&edges);
        assert!(dot.starts_with("digraph envs {"));
        assert!(dot.contains("login@c><s"));
        assert!(dot.contains("cancel@c><s"));
    }
}
