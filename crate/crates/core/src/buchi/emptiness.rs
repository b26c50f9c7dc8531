//! Nested depth-first search (Courcoubetis–Vardi–Wolper–Yannakakis).
//!
//! The outer search runs in post-order; each accepting state it finishes
//! seeds an inner search for a cycle back to itself. Inner visited marks are
//! shared across seeds.

use super::{BuchiAutomaton, Lasso, StateId, Step};

struct Frame {
    state: StateId,
    next_edge: usize,
}

pub(super) fn nested_dfs(a: &BuchiAutomaton) -> Option<Lasso> {
    let n = a.num_states();
    let mut outer = vec![false; n];
    let mut inner = vec![false; n];
    for &init in a.initial() {
        if outer[init] {
            continue;
        }
        outer[init] = true;
        let mut stack = vec![Frame {
            state: init,
            next_edge: 0,
        }];
        let mut path: Vec<Step> = Vec::new();
        while let Some(top) = stack.last_mut() {
            let edges = a.transitions_from(top.state);
            if top.next_edge < edges.len() {
                let t = &edges[top.next_edge];
                top.next_edge += 1;
                if outer[t.target] || !t.guard.is_satisfiable() {
                    continue;
                }
                outer[t.target] = true;
                path.push(Step {
                    from: top.state,
                    letter: t.guard.minimal_letter(),
                    to: t.target,
                });
                stack.push(Frame {
                    state: t.target,
                    next_edge: 0,
                });
                continue;
            }
            let done = top.state;
            if a.is_accepting(done) {
                if let Some(cycle) = cycle_through(a, done, &mut inner) {
                    return Some(Lasso { stem: path, cycle });
                }
            }
            stack.pop();
            path.pop();
        }
    }
    None
}

fn cycle_through(a: &BuchiAutomaton, seed: StateId, visited: &mut [bool]) -> Option<Vec<Step>> {
    let mut stack = vec![Frame {
        state: seed,
        next_edge: 0,
    }];
    let mut path: Vec<Step> = Vec::new();
    while let Some(top) = stack.last_mut() {
        let edges = a.transitions_from(top.state);
        if top.next_edge >= edges.len() {
            stack.pop();
            path.pop();
            continue;
        }
        let t = &edges[top.next_edge];
        top.next_edge += 1;
        if !t.guard.is_satisfiable() {
            continue;
        }
        let step = Step {
            from: top.state,
            letter: t.guard.minimal_letter(),
            to: t.target,
        };
        if t.target == seed {
            path.push(step);
            return Some(path);
        }
        if !visited[t.target] {
            visited[t.target] = true;
            path.push(step);
            stack.push(Frame {
                state: t.target,
                next_edge: 0,
            });
        }
    }
    None
}
