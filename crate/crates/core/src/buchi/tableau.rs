//! Tableau (expand/cover) translation from LTL to a generalized Büchi
//! automaton, counter-based degeneralization and a bisimulation quotient.

use std::collections::{BTreeMap, BTreeSet};

use super::{lasso_product_accepts, BuchiAutomaton, Guard, StateId, Transition};
use crate::ltl::{Formula, LassoWord};

type FSet = BTreeSet<Formula>;
/// Successor classes of a state, keyed by its own class.
type Signature = (usize, BTreeSet<(Guard, usize)>);

/// Automaton with one acceptance set per until subformula. State 0 is the
/// single initial pseudo-state; it has no incoming transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedBuchi {
    atoms: BTreeSet<String>,
    transitions: Vec<Vec<Transition>>,
    initial: BTreeSet<StateId>,
    acceptance: Vec<BTreeSet<StateId>>,
}

impl GeneralizedBuchi {
    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn acceptance_sets(&self) -> &[BTreeSet<StateId>] {
        &self.acceptance
    }

    pub fn accepts_lasso(&self, w: &LassoWord) -> bool {
        lasso_product_accepts(&self.transitions, &self.initial, &self.acceptance, w)
    }

    /// Counter construction: copy `k` waits for a visit to set `k`, then
    /// moves on to copy `k + 1 mod K`; accepting states are set 0 in copy 0.
    pub fn degeneralize(&self) -> BuchiAutomaton {
        let k = self.acceptance.len();
        let n = self.num_states();
        if k <= 1 {
            let accepting = match self.acceptance.first() {
                Some(set) => set.clone(),
                None => (0..n).collect(),
            };
            let edges = self.edges().map(|(s, g, t)| (s, g.clone(), t));
            return BuchiAutomaton::new(
                self.atoms.clone(),
                n,
                edges,
                self.initial.clone(),
                accepting,
            )
            .expect("tableau output is well-formed");
        }
        let id = |q: StateId, c: usize| q * k + c;
        let mut edges = Vec::new();
        for (q, g, t) in self.edges() {
            for c in 0..k {
                let next = if self.acceptance[c].contains(&q) {
                    (c + 1) % k
                } else {
                    c
                };
                edges.push((id(q, c), g.clone(), id(t, next)));
            }
        }
        let initial = self.initial.iter().map(|&q| id(q, 0)).collect();
        let accepting = self.acceptance[0].iter().map(|&q| id(q, 0)).collect();
        BuchiAutomaton::new(self.atoms.clone(), n * k, edges, initial, accepting)
            .expect("tableau output is well-formed")
    }

    fn edges(&self) -> impl Iterator<Item = (StateId, &Guard, StateId)> {
        self.transitions
            .iter()
            .enumerate()
            .flat_map(|(s, ts)| ts.iter().map(move |t| (s, &t.guard, t.target)))
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    new: FSet,
    old: FSet,
    next: FSet,
}

#[derive(Default)]
struct Tableau {
    nodes: Vec<Node>,
    index: BTreeMap<(FSet, FSet), usize>,
}

impl Tableau {
    fn expand(&mut self, mut node: Node) {
        let Some(eta) = node.new.pop_first() else {
            let key = (node.old.clone(), node.next.clone());
            if let Some(&id) = self.index.get(&key) {
                self.nodes[id].incoming.extend(node.incoming);
                return;
            }
            let id = self.nodes.len();
            self.index.insert(key, id);
            let next = node.next.clone();
            self.nodes.push(node);
            self.expand(Node {
                incoming: [id].into(),
                new: next,
                old: FSet::new(),
                next: FSet::new(),
            });
            return;
        };
        if node.old.contains(&eta) {
            return self.expand(node);
        }
        match &eta {
            Formula::False => {}
            Formula::True => {
                node.old.insert(eta);
                self.expand(node);
            }
            Formula::Atom(_) | Formula::Not(_) => {
                let negation = match &eta {
                    Formula::Not(a) => (**a).clone(),
                    other => Formula::not(other.clone()),
                };
                if !node.old.contains(&negation) {
                    node.old.insert(eta);
                    self.expand(node);
                }
            }
            Formula::And(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                node.old.insert(eta);
                node.new.insert(a);
                node.new.insert(b);
                self.expand(node);
            }
            Formula::Next(a) => {
                let a = (**a).clone();
                node.old.insert(eta);
                node.next.insert(a);
                self.expand(node);
            }
            Formula::Or(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                node.old.insert(eta);
                let mut left = node.clone();
                left.new.insert(a);
                node.new.insert(b);
                self.expand(left);
                self.expand(node);
            }
            Formula::Until(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                let mut left = node.clone();
                left.new.insert(a);
                left.next.insert(eta.clone());
                left.old.insert(eta.clone());
                node.new.insert(b);
                node.old.insert(eta);
                self.expand(left);
                self.expand(node);
            }
            Formula::Release(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                let mut left = node.clone();
                left.new.insert(b.clone());
                left.next.insert(eta.clone());
                left.old.insert(eta.clone());
                node.new.insert(a);
                node.new.insert(b);
                node.old.insert(eta);
                self.expand(left);
                self.expand(node);
            }
            Formula::Implies(..) | Formula::Eventually(_) | Formula::Always(_) => {
                unreachable!("input is in negation normal form")
            }
        }
    }
}

fn untils(f: &Formula, out: &mut BTreeSet<(Formula, Formula)>) {
    if let Formula::Until(_, b) = f {
        out.insert((f.clone(), (**b).clone()));
    }
    for c in f.children() {
        untils(c, out);
    }
}

fn node_guard(old: &FSet) -> Guard {
    let mut g = Guard::top();
    for f in old {
        match f {
            Formula::Atom(a) => {
                g.pos.insert(a.clone());
            }
            Formula::Not(inner) => {
                if let Formula::Atom(a) = &**inner {
                    g.neg.insert(a.clone());
                }
            }
            _ => {}
        }
    }
    g
}

/// Generalized Büchi automaton for `f` (any syntax; converted to NNF first).
pub fn ltl_to_gba(f: &Formula) -> GeneralizedBuchi {
    let nnf = f.to_nnf();
    let mut tab = Tableau::default();
    tab.expand(Node {
        incoming: [INIT].into(),
        new: [nnf.clone()].into(),
        old: FSet::new(),
        next: FSet::new(),
    });

    // canonical numbering: pseudo-initial state 0, tableau nodes sorted by
    // (old, next)
    let mut order: Vec<usize> = (0..tab.nodes.len()).collect();
    order.sort_by(|&x, &y| {
        let (nx, ny) = (&tab.nodes[x], &tab.nodes[y]);
        (&nx.old, &nx.next).cmp(&(&ny.old, &ny.next))
    });
    let mut rank = vec![0; tab.nodes.len()];
    for (r, &node) in order.iter().enumerate() {
        rank[node] = r + 1;
    }
    let state_of = |raw: usize| if raw == INIT { 0 } else { rank[raw] };

    let n = tab.nodes.len() + 1;
    let mut transitions = vec![Vec::new(); n];
    for (raw, node) in tab.nodes.iter().enumerate() {
        let guard = node_guard(&node.old);
        for &src in &node.incoming {
            transitions[state_of(src)].push(Transition {
                guard: guard.clone(),
                target: state_of(raw),
            });
        }
    }
    for ts in &mut transitions {
        ts.sort_by(|a, b| (a.target, &a.guard).cmp(&(b.target, &b.guard)));
        ts.dedup();
    }

    let mut us = BTreeSet::new();
    untils(&nnf, &mut us);
    let acceptance = us
        .iter()
        .map(|(u, rhs)| {
            tab.nodes
                .iter()
                .enumerate()
                .filter(|(_, node)| !node.old.contains(u) || node.old.contains(rhs))
                .map(|(raw, _)| state_of(raw))
                .collect()
        })
        .collect();

    GeneralizedBuchi {
        atoms: f.atoms(),
        transitions,
        initial: [0].into(),
        acceptance,
    }
}

/// Büchi automaton accepting exactly the words satisfying `f`.
pub fn ltl_to_buchi(f: &Formula) -> BuchiAutomaton {
    reduce(&trim(&ltl_to_gba(f).degeneralize()))
}

/// Drops states unreachable from the initial set.
fn trim(a: &BuchiAutomaton) -> BuchiAutomaton {
    let mut seen = vec![false; a.num_states()];
    let mut stack: Vec<StateId> = a.initial().iter().copied().collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(s) = stack.pop() {
        for t in a.transitions_from(s) {
            if !seen[t.target] && t.guard.is_satisfiable() {
                seen[t.target] = true;
                stack.push(t.target);
            }
        }
    }
    let keep: Vec<StateId> = (0..a.num_states()).filter(|&s| seen[s]).collect();
    let mut map = vec![usize::MAX; a.num_states()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = new;
    }
    let edges: Vec<_> = keep
        .iter()
        .flat_map(|&s| {
            a.transitions_from(s)
                .iter()
                .filter(|t| seen[t.target] && t.guard.is_satisfiable())
                .map(|t| (map[s], t.guard.clone(), map[t.target]))
                .collect::<Vec<_>>()
        })
        .collect();
    BuchiAutomaton::new(
        a.atoms().clone(),
        keep.len(),
        edges,
        a.initial().iter().map(|&s| map[s]).collect(),
        a.accepting()
            .iter()
            .filter(|&&s| seen[s])
            .map(|&s| map[s])
            .collect(),
    )
    .expect("trim preserves well-formedness")
}

/// Quotient by the coarsest bisimulation that respects acceptance.
fn reduce(a: &BuchiAutomaton) -> BuchiAutomaton {
    let n = a.num_states();
    let mut class: Vec<usize> = (0..n).map(|s| usize::from(a.is_accepting(s))).collect();
    let mut count = class.iter().collect::<BTreeSet<_>>().len();
    loop {
        let sigs: Vec<(usize, BTreeSet<(Guard, usize)>)> = (0..n)
            .map(|s| {
                let out = a
                    .transitions_from(s)
                    .iter()
                    .map(|t| (t.guard.clone(), class[t.target]))
                    .collect();
                (class[s], out)
            })
            .collect();
        // number classes by first occurrence so the result is deterministic
        let mut ids: BTreeMap<&Signature, usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(n);
        for sig in &sigs {
            let fresh = ids.len();
            next.push(*ids.entry(sig).or_insert(fresh));
        }
        let new_count = ids.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let mut edges = BTreeSet::new();
    for s in 0..n {
        for t in a.transitions_from(s) {
            edges.insert((class[s], t.guard.clone(), class[t.target]));
        }
    }
    BuchiAutomaton::new(
        a.atoms().clone(),
        count,
        edges,
        a.initial().iter().map(|&s| class[s]).collect(),
        a.accepting().iter().map(|&s| class[s]).collect(),
    )
    .expect("quotient preserves well-formedness")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{eval_lasso, letter, parse_ltl_unchecked, Letter};

    fn f(s: &str) -> Formula {
        parse_ltl_unchecked(s).unwrap()
    }

    fn word(stem: Vec<Letter>, period: Vec<Letter>) -> LassoWord {
        LassoWord::new(stem, period).unwrap()
    }

    #[test]
    fn true_is_single_universal_state() {
        let a = ltl_to_buchi(&Formula::True);
        assert_eq!(a.num_states(), 1);
        assert_eq!(a.initial(), &BTreeSet::from([0]));
        assert!(a.is_accepting(0));
        assert_eq!(a.transitions_from(0).len(), 1);
        assert_eq!(a.transitions_from(0)[0].guard, Guard::top());
    }

    #[test]
    fn false_has_empty_language() {
        let a = ltl_to_buchi(&f("false"));
        assert!(a.find_accepting_lasso().is_none());
        assert!(!a.accepts_lasso(&word(vec![], vec![Letter::new()])));
    }

    #[test]
    fn infinitely_often_matches_semantics() {
        let a = ltl_to_buchi(&f("G F a"));
        assert!(a.accepts_lasso(&word(vec![Letter::new()], vec![letter(["a"])])));
        assert!(!a.accepts_lasso(&word(vec![Letter::new()], vec![Letter::new()])));
    }

    #[test]
    fn degeneralization_with_two_sets() {
        let formula = f("G F a & G F b");
        let gba = ltl_to_gba(&formula);
        assert!(gba.acceptance_sets().len() >= 2);
        let ba = gba.degeneralize();
        for (period, expect) in [
            (vec![letter(["a"]), letter(["b"])], true),
            (vec![letter(["a"])], false),
            (vec![letter(["a", "b"])], true),
            (vec![letter(["b"]), Letter::new()], false),
        ] {
            let w = word(vec![], period);
            assert_eq!(gba.accepts_lasso(&w), expect);
            assert_eq!(ba.accepts_lasso(&w), expect);
            assert_eq!(eval_lasso(&formula, &w), expect);
        }
    }

    #[test]
    fn numbering_is_deterministic() {
        let a1 = ltl_to_buchi(&f("F m2 & G F (r2 & X b2)"));
        let a2 = ltl_to_buchi(&f("F m2 & G F (r2 & X b2)"));
        assert_eq!(a1, a2);
        assert_eq!(a1.to_text(), a2.to_text());
    }
}
