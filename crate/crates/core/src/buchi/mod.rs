//! Nondeterministic Büchi automata over letters `2^Ψ`, with transitions
//! labelled by conjunctions of required and forbidden atoms.

mod emptiness;
mod tableau;

use std::collections::BTreeSet;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::ltl::{Formula, LassoWord, Letter};

pub use tableau::{ltl_to_buchi, ltl_to_gba, GeneralizedBuchi};

pub type StateId = usize;

/// Conjunction of required (`pos`) and forbidden (`neg`) atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Guard {
    pub pos: BTreeSet<String>,
    pub neg: BTreeSet<String>,
}

impl Guard {
    pub fn top() -> Self {
        Self::default()
    }

    pub fn new<I, J, S, R>(pos: I, neg: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = R>,
        S: Into<String>,
        R: Into<String>,
    {
        Self {
            pos: pos.into_iter().map(Into::into).collect(),
            neg: neg.into_iter().map(Into::into).collect(),
        }
    }

    pub fn matches(&self, letter: &Letter) -> bool {
        self.pos.iter().all(|a| letter.contains(a)) && !self.neg.iter().any(|a| letter.contains(a))
    }

    pub fn is_satisfiable(&self) -> bool {
        self.pos.is_disjoint(&self.neg)
    }

    /// Smallest letter satisfying the guard.
    pub fn minimal_letter(&self) -> Letter {
        self.pos.clone()
    }

    fn atoms(&self) -> impl Iterator<Item = &String> {
        self.pos.iter().chain(&self.neg)
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pos.is_empty() && self.neg.is_empty() {
            return write!(f, "true");
        }
        let lits: Vec<String> = self
            .pos
            .iter()
            .cloned()
            .chain(self.neg.iter().map(|a| format!("!{a}")))
            .collect();
        write!(f, "{}", lits.join(" & "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub guard: Guard,
    pub target: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuchiError {
    #[error("state {0} out of range")]
    UnknownState(StateId),
    #[error("guard references undeclared atom `{0}`")]
    UndeclaredAtom(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAutomaton {
    atoms: BTreeSet<String>,
    transitions: Vec<Vec<Transition>>,
    initial: BTreeSet<StateId>,
    accepting: BTreeSet<StateId>,
}

impl BuchiAutomaton {
    pub fn new(
        atoms: BTreeSet<String>,
        num_states: usize,
        edges: impl IntoIterator<Item = (StateId, Guard, StateId)>,
        initial: BTreeSet<StateId>,
        accepting: BTreeSet<StateId>,
    ) -> Result<Self, BuchiError> {
        let mut transitions = vec![Vec::new(); num_states];
        for (from, guard, target) in edges {
            for s in [from, target] {
                if s >= num_states {
                    return Err(BuchiError::UnknownState(s));
                }
            }
            if let Some(a) = guard.atoms().find(|a| !atoms.contains(*a)) {
                return Err(BuchiError::UndeclaredAtom(a.clone()));
            }
            transitions[from].push(Transition { guard, target });
        }
        if let Some(&s) = initial.iter().chain(&accepting).find(|&&s| s >= num_states) {
            return Err(BuchiError::UnknownState(s));
        }
        Ok(Self {
            atoms,
            transitions,
            initial,
            accepting,
        })
    }

    /// One accepting state with a `true` self-loop.
    pub fn universal(atoms: BTreeSet<String>) -> Self {
        Self::new(atoms, 1, [(0, Guard::top(), 0)], [0].into(), [0].into())
            .expect("well-formed by construction")
    }

    /// One initial state without transitions.
    pub fn empty_language(atoms: BTreeSet<String>) -> Self {
        Self::new(atoms, 1, [], [0].into(), BTreeSet::new()).expect("well-formed by construction")
    }

    pub fn atoms(&self) -> &BTreeSet<String> {
        &self.atoms
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> &BTreeSet<StateId> {
        &self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<StateId> {
        &self.accepting
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting.contains(&s)
    }

    pub fn transitions_from(&self, s: StateId) -> &[Transition] {
        &self.transitions[s]
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    /// Membership of `stem · period^ω`.
    pub fn accepts_lasso(&self, w: &LassoWord) -> bool {
        let sets = [self.accepting.clone()];
        lasso_product_accepts(&self.transitions, &self.initial, &sets, w)
    }

    /// Nonemptiness witness via nested depth-first search.
    pub fn find_accepting_lasso(&self) -> Option<Lasso> {
        emptiness::nested_dfs(self)
    }

    /// Textual dump for inspection:
    ///
    /// ```text
    /// buchi
    /// atoms <a> <b> ...
    /// states <n>
    /// initial <ids...>
    /// accepting <ids...>
    /// trans <from> <to> <guard>
    /// ```
    ///
    /// Guards print as `true` or `a & b & !c`.
    pub fn to_text(&self) -> String {
        let join = |it: &BTreeSet<StateId>| {
            it.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::from("buchi\n");
        out += &format!(
            "atoms {}\nstates {}\ninitial {}\naccepting {}\n",
            self.atoms.iter().cloned().collect::<Vec<_>>().join(" "),
            self.num_states(),
            join(&self.initial),
            join(&self.accepting)
        );
        for (s, ts) in self.transitions.iter().enumerate() {
            for t in ts {
                out += &format!("trans {s} {} {}\n", t.target, t.guard);
            }
        }
        out
    }
}

/// Shared membership check: the product of the automaton with the lasso
/// positions accepts iff some reachable nontrivial SCC meets every
/// acceptance set.
pub(crate) fn lasso_product_accepts(
    transitions: &[Vec<Transition>],
    initial: &BTreeSet<StateId>,
    acceptance: &[BTreeSet<StateId>],
    w: &LassoWord,
) -> bool {
    let npos = w.positions();
    let id = |q: StateId, p: usize| q * npos + p;
    let mut graph: DiGraph<(StateId, usize), ()> = DiGraph::new();
    let mut index = vec![None::<NodeIndex>; transitions.len() * npos];
    let mut stack = Vec::new();
    for &q in initial {
        let n = graph.add_node((q, 0));
        index[id(q, 0)] = Some(n);
        stack.push((q, 0));
    }
    while let Some((q, p)) = stack.pop() {
        let from = index[id(q, p)].expect("visited");
        let letter = w.letter_at(p);
        let np = w.succ(p);
        for t in &transitions[q] {
            if !t.guard.matches(letter) {
                continue;
            }
            let to = match index[id(t.target, np)] {
                Some(n) => n,
                None => {
                    let n = graph.add_node((t.target, np));
                    index[id(t.target, np)] = Some(n);
                    stack.push((t.target, np));
                    n
                }
            };
            graph.update_edge(from, to, ());
        }
    }
    tarjan_scc(&graph).into_iter().any(|scc| {
        let nontrivial = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        nontrivial
            && acceptance
                .iter()
                .all(|set| scc.iter().any(|&n| set.contains(&graph[n].0)))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub from: StateId,
    pub letter: Letter,
    pub to: StateId,
}

/// Accepting run `stem · cycle^ω` of an automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<Step>,
    pub cycle: Vec<Step>,
}

impl Lasso {
    pub fn word(&self) -> LassoWord {
        let letters = |steps: &[Step]| steps.iter().map(|s| s.letter.clone()).collect();
        LassoWord::new(letters(&self.stem), letters(&self.cycle)).expect("cycle is nonempty")
    }

    /// Checks the structural invariants against the automaton it came from.
    pub fn is_valid_for(&self, a: &BuchiAutomaton) -> bool {
        let Some(first) = self.cycle.first() else {
            return false;
        };
        let start = self.stem.first().map_or(first.from, |s| s.from);
        let stem_end = self.stem.last().map_or(start, |s| s.to);
        let chained = |steps: &[Step]| steps.windows(2).all(|w| w[0].to == w[1].from);
        let step_ok = |s: &Step| {
            a.transitions_from(s.from)
                .iter()
                .any(|t| t.target == s.to && t.guard.matches(&s.letter))
        };
        a.initial().contains(&start)
            && stem_end == first.from
            && self.cycle.last().map(|s| s.to) == Some(first.from)
            && chained(&self.stem)
            && chained(&self.cycle)
            && self.stem.iter().chain(&self.cycle).all(step_ok)
            && self.cycle.iter().any(|s| a.is_accepting(s.from))
    }
}

/// Convenience: `ltl_to_buchi(f).accepts_lasso(w)`.
pub fn formula_accepts(f: &Formula, w: &LassoWord) -> bool {
    ltl_to_buchi(f).accepts_lasso(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::letter;

    fn atoms(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn universal_and_empty() {
        let w = LassoWord::new(vec![letter(["a"])], vec![Letter::new()]).unwrap();
        assert!(BuchiAutomaton::universal(atoms(&["a"])).accepts_lasso(&w));
        assert!(!BuchiAutomaton::empty_language(atoms(&["a"])).accepts_lasso(&w));
        assert!(BuchiAutomaton::empty_language(atoms(&[]))
            .find_accepting_lasso()
            .is_none());
    }

    #[test]
    fn construction_validates() {
        assert_eq!(
            BuchiAutomaton::new(
                atoms(&["a"]),
                1,
                [(0, Guard::new(["b"], [] as [&str; 0]), 0)],
                [0].into(),
                [].into()
            ),
            Err(BuchiError::UndeclaredAtom("b".into()))
        );
        assert_eq!(
            BuchiAutomaton::new(atoms(&[]), 1, [(0, Guard::top(), 3)], [0].into(), [].into()),
            Err(BuchiError::UnknownState(3))
        );
    }

    #[test]
    fn guard_matching() {
        let g = Guard::new(["a"], ["b"]);
        assert!(g.matches(&letter(["a", "c"])));
        assert!(!g.matches(&letter(["a", "b"])));
        assert!(!g.matches(&letter(["c"])));
        assert_eq!(g.to_string(), "a & !b");
        assert!(!Guard::new(["a"], ["a"]).is_satisfiable());
    }

    #[test]
    fn text_export() {
        let text = BuchiAutomaton::universal(atoms(&["a"])).to_text();
        assert_eq!(
            text,
            "buchi\natoms a\nstates 1\ninitial 0\naccepting 0\ntrans 0 0 true\n"
        );
    }
}
