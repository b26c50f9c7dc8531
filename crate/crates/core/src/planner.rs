//! Per-agent discrete plan synthesis: transition system over points of
//! interest, product with the formula's Büchi automaton, and extraction of a
//! prefix–suffix plan of `(point, services)` pairs.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::buchi::{ltl_to_buchi, BuchiAutomaton};
use crate::ltl::{eval_lasso, Formula, LassoWord, Letter};

/// Name used for the artificial initial state `c_{i,0}`.
pub const INITIAL_STATE: &str = "c0";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("duplicate point id `{0}`")]
    DuplicatePoint(String),
    #[error("point id `{0}` is reserved for the initial state")]
    ReservedPoint(String),
    #[error("at least one point of interest is required")]
    NoPoints,
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("plan suffix must be nonempty")]
    EmptySuffix,
}

/// Motion abstraction of one agent: states are the points of interest plus
/// the initial state (index 0); every ordered pair of states is a transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    names: Vec<String>,
    labels: Vec<BTreeSet<String>>,
}

impl TransitionSystem {
    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_points(&self) -> usize {
        self.names.len() - 1
    }

    /// Point ids in declaration order (excluding the initial state).
    pub fn points(&self) -> &[String] {
        &self.names[1..]
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn label(&self, s: usize) -> &BTreeSet<String> {
        &self.labels[s]
    }

    pub fn point_index(&self, id: &str) -> Option<usize> {
        self.names
            .iter()
            .skip(1)
            .position(|n| n == id)
            .map(|p| p + 1)
    }

    pub fn label_of(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.point_index(id).map(|s| &self.labels[s])
    }

    /// The complete relation over all states, initial state included.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.num_states();
        (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)))
    }
}

/// Builds the transition system from labelled points. `initial_at` names the
/// point the agent starts on, if any; the initial state then inherits its
/// label, otherwise it is unlabelled.
pub fn build_transition_system(
    points: &[(String, BTreeSet<String>)],
    initial_at: Option<&str>,
) -> Result<TransitionSystem, PlannerError> {
    if points.is_empty() {
        return Err(PlannerError::NoPoints);
    }
    let mut names = vec![INITIAL_STATE.to_string()];
    let mut labels = vec![BTreeSet::new()];
    for (id, label) in points {
        if id == INITIAL_STATE {
            return Err(PlannerError::ReservedPoint(id.clone()));
        }
        if names.contains(id) {
            return Err(PlannerError::DuplicatePoint(id.clone()));
        }
        names.push(id.clone());
        labels.push(label.clone());
    }
    if let Some(p) = initial_at {
        let idx = names
            .iter()
            .skip(1)
            .position(|n| n == p)
            .ok_or_else(|| PlannerError::UnknownPoint(p.to_string()))?;
        labels[0] = labels[idx + 1].clone();
    }
    Ok(TransitionSystem { names, labels })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub point: String,
    pub services: BTreeSet<String>,
}

impl PlanStep {
    pub fn new<I, S>(point: impl Into<String>, services: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            point: point.into(),
            services: services.into_iter().map(Into::into).collect(),
        }
    }
}

/// `prefix · suffix^ω`, with a nonempty suffix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrefixSuffixPlan {
    prefix: Vec<PlanStep>,
    suffix: Vec<PlanStep>,
}

impl PrefixSuffixPlan {
    pub fn new(prefix: Vec<PlanStep>, suffix: Vec<PlanStep>) -> Result<Self, PlannerError> {
        if suffix.is_empty() {
            return Err(PlannerError::EmptySuffix);
        }
        Ok(Self { prefix, suffix })
    }

    pub fn prefix(&self) -> &[PlanStep] {
        &self.prefix
    }

    pub fn suffix(&self) -> &[PlanStep] {
        &self.suffix
    }

    /// `l`: number of prefix steps.
    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    /// `L`: total number of distinct steps.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.suffix.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Step by 1-based index `s ∈ [1, L]`.
    pub fn step(&self, s: usize) -> &PlanStep {
        assert!((1..=self.len()).contains(&s), "plan index {s} out of range");
        if s <= self.prefix.len() {
            &self.prefix[s - 1]
        } else {
            &self.suffix[s - 1 - self.prefix.len()]
        }
    }

    /// Step index after `s`, wrapping from the last step back to the first
    /// suffix step.
    pub fn next_index(&self, s: usize) -> usize {
        if s < self.len() {
            s + 1
        } else {
            self.prefix.len() + 1
        }
    }

    /// The `k`-th step (0-based) of the infinite unrolled plan.
    pub fn unrolled(&self, k: usize) -> &PlanStep {
        if k < self.prefix.len() {
            &self.prefix[k]
        } else {
            &self.suffix[(k - self.prefix.len()) % self.suffix.len()]
        }
    }

    /// Service word `σ_prefix · (σ_suffix)^ω`.
    pub fn word(&self) -> LassoWord {
        let letters = |steps: &[PlanStep]| steps.iter().map(|s| s.services.clone()).collect();
        LassoWord::new(letters(&self.prefix), letters(&self.suffix)).expect("suffix is nonempty")
    }

    /// Every step names a point of `ts` and only uses services available there.
    pub fn respects(&self, ts: &TransitionSystem) -> bool {
        self.prefix.iter().chain(&self.suffix).all(|s| {
            ts.label_of(&s.point)
                .is_some_and(|label| s.services.is_subset(label))
        })
    }
}

impl fmt::Display for PrefixSuffixPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |steps: &[PlanStep]| {
            steps
                .iter()
                .map(|s| {
                    let sv: Vec<_> = s.services.iter().cloned().collect();
                    format!("({},{{{}}})", s.point, sv.join(","))
                })
                .collect::<String>()
        };
        write!(f, "{}({})^w", show(&self.prefix), show(&self.suffix))
    }
}

/// True iff the plan's service word satisfies `f`.
pub fn verify_plan(plan: &PrefixSuffixPlan, f: &Formula) -> bool {
    eval_lasso(f, &plan.word())
}

struct Product<'a> {
    ts: &'a TransitionSystem,
    nq: usize,
    /// Successors per product node as `(node, services)`, ordered by
    /// (point, automaton state).
    succ: Vec<Vec<(usize, Letter)>>,
    accepting: Vec<bool>,
    initial: Vec<usize>,
}

impl<'a> Product<'a> {
    fn new(ts: &'a TransitionSystem, a: &BuchiAutomaton) -> Self {
        let nq = a.num_states();
        let n = ts.num_states() * nq;
        let mut succ = vec![Vec::new(); n];
        for c in 0..ts.num_states() {
            for q in 0..nq {
                let out = &mut succ[c * nq + q];
                // the initial state is never re-entered
                for c2 in 1..ts.num_states() {
                    let avail = ts.label(c2);
                    let mut best: Vec<Option<Letter>> = vec![None; nq];
                    for t in a.transitions_from(q) {
                        if !t.guard.is_satisfiable() || !t.guard.pos.is_subset(avail) {
                            continue;
                        }
                        let sigma = t.guard.minimal_letter();
                        let slot = &mut best[t.target];
                        let better = match slot {
                            None => true,
                            Some(cur) => (sigma.len(), &sigma) < (cur.len(), &*cur),
                        };
                        if better {
                            *slot = Some(sigma);
                        }
                    }
                    for (q2, sigma) in best.into_iter().enumerate() {
                        if let Some(sigma) = sigma {
                            out.push((c2 * nq + q2, sigma));
                        }
                    }
                }
            }
        }
        let accepting = (0..n).map(|node| a.is_accepting(node % nq)).collect();
        let initial = a.initial().iter().copied().collect();
        Self {
            ts,
            nq,
            succ,
            accepting,
            initial,
        }
    }

    fn step_of(&self, node: usize, services: &Letter) -> PlanStep {
        PlanStep {
            point: self.ts.state_name(node / self.nq).to_string(),
            services: services.clone(),
        }
    }

    /// BFS from `sources`; returns distance and the `(parent, services)` edge
    /// used to reach each node.
    fn bfs(&self, sources: &[usize]) -> (Vec<usize>, Vec<Option<(usize, Letter)>>) {
        let n = self.succ.len();
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![None; n];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] == usize::MAX {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for (v, sigma) in &self.succ[u] {
                if dist[*v] == usize::MAX {
                    dist[*v] = dist[u] + 1;
                    parent[*v] = Some((u, sigma.clone()));
                    queue.push_back(*v);
                }
            }
        }
        (dist, parent)
    }

    /// Shortest cycle through `node` as a list of `(node_entered, services)`
    /// edges ending back at `node`.
    fn shortest_cycle(&self, node: usize) -> Option<Vec<(usize, Letter)>> {
        let starts: Vec<usize> = self.succ[node].iter().map(|(v, _)| *v).collect();
        let (dist, parent) = self.bfs(&starts);
        if dist[node] == usize::MAX {
            return None;
        }
        // walk back from `node` to the root it was reached from
        let mut rev = Vec::new();
        let mut cur = node;
        while let Some((p, sigma)) = &parent[cur] {
            rev.push((cur, sigma.clone()));
            cur = *p;
        }
        // `cur` is a root; find the edge node -> cur
        let sigma0 = self.succ[node]
            .iter()
            .find(|(v, _)| *v == cur)
            .map(|(_, s)| s.clone())
            .expect("root is a successor");
        let mut cycle = vec![(cur, sigma0)];
        cycle.extend(rev.into_iter().rev());
        Some(cycle)
    }
}

/// Searches the product of the transition system with the Büchi automaton of
/// `f` for an accepting lasso and projects it onto `(point, services)`
/// steps. Candidates are shortest cycles through each reachable accepting
/// product state, entered at each of their states along a shortest path; the
/// plan with the fewest steps wins, then the one with the fewest empty
/// service sets, then the first in product-state order (point order, then
/// automaton state id). Returns `None` iff no accepting run exists.
pub fn synthesize_plan(ts: &TransitionSystem, f: &Formula) -> Option<PrefixSuffixPlan> {
    let automaton = ltl_to_buchi(f);
    let product = Product::new(ts, &automaton);
    let (dist, parent) = product.bfs(&product.initial);

    let mut best: Option<((usize, usize), PrefixSuffixPlan)> = None;
    for node in 0..product.succ.len() {
        if !product.accepting[node] || dist[node] == usize::MAX || node / product.nq == 0 {
            continue;
        }
        let Some(cycle) = product.shortest_cycle(node) else {
            continue;
        };
        for entry_pos in 0..cycle.len() {
            let entry = cycle[entry_pos].0;
            if dist[entry] == usize::MAX {
                continue;
            }
            let mut prefix = Vec::new();
            let mut cur = entry;
            while let Some((p, sigma)) = &parent[cur] {
                prefix.push(product.step_of(cur, sigma));
                cur = *p;
            }
            prefix.reverse();
            let mut suffix: Vec<PlanStep> = cycle[entry_pos + 1..]
                .iter()
                .chain(&cycle[..=entry_pos])
                .map(|(v, sigma)| product.step_of(*v, sigma))
                .collect();
            // fold prefix steps that repeat the end of the cycle into the cycle
            while !prefix.is_empty() && prefix.last() == suffix.last() {
                prefix.pop();
                suffix.rotate_right(1);
            }
            let plan = PrefixSuffixPlan::new(prefix, suffix).expect("cycle is nonempty");
            let empties = plan
                .prefix()
                .iter()
                .chain(plan.suffix())
                .filter(|s| s.services.is_empty())
                .count();
            let score = (plan.len(), empties);
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((score, plan));
            }
        }
    }
    best.map(|(_, plan)| plan)
}
