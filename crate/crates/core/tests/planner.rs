mod common;

use std::collections::BTreeSet;

use common::random_formula;
use ltlcoord::ltl::{parse_ltl, Alphabet, Formula};
use ltlcoord::planner::{
    build_transition_system, synthesize_plan, verify_plan, PlanStep, PrefixSuffixPlan,
    TransitionSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn team5_ts(i: usize) -> TransitionSystem {
    let s = |p: &str| -> BTreeSet<String> { [format!("{p}{i}")].into() };
    build_transition_system(
        &[
            ("c1".into(), s("r")),
            ("c2".into(), s("b")),
            ("c3".into(), s("g")),
            ("c4".into(), s("m")),
        ],
        None,
    )
    .unwrap()
}

fn team5_formula(i: usize) -> Formula {
    let text = match i {
        1 => "G F (r1 & X (g1 & X (m1 & X b1)))",
        2 => "F m2 & G F (r2 & X b2)",
        3 => "F m3 & G F (r3 & X b3)",
        4 => "G F (g4 & X (b4 & X (m4 & X g4)))",
        5 => "r5 & G F (b5 & X (m5 & X g5))",
        _ => unreachable!(),
    };
    let alpha = Alphabet::new(["r", "b", "g", "m"].map(|p| format!("{p}{i}")));
    parse_ltl(text, &alpha).unwrap()
}

fn step(p: &str, s: &str) -> PlanStep {
    PlanStep::new(p, [s])
}

fn published_plan(i: usize) -> PrefixSuffixPlan {
    let (prefix, suffix) = match i {
        1 => (
            vec![],
            vec![
                step("c1", "r1"),
                step("c3", "g1"),
                step("c4", "m1"),
                step("c2", "b1"),
            ],
        ),
        2 => (
            vec![step("c2", "b2"), step("c4", "m2")],
            vec![step("c1", "r2"), step("c2", "b2")],
        ),
        3 => (
            vec![step("c4", "m3"), step("c3", "g3")],
            vec![step("c1", "r3"), step("c2", "b3")],
        ),
        4 => (
            vec![],
            vec![
                step("c3", "g4"),
                step("c2", "b4"),
                step("c4", "m4"),
                step("c3", "g4"),
            ],
        ),
        5 => (
            vec![step("c1", "r5")],
            vec![step("c4", "m5"), step("c3", "g5"), step("c2", "b5")],
        ),
        _ => unreachable!(),
    };
    PrefixSuffixPlan::new(prefix, suffix).unwrap()
}

#[test]
fn scenario_plans_are_valid() {
    for i in 1..=5 {
        let ts = team5_ts(i);
        let f = team5_formula(i);
        let plan = synthesize_plan(&ts, &f).expect("feasible");
        println!("agent {i}: {plan}");
        assert!(verify_plan(&plan, &f), "agent {i}: {plan}");
        assert!(plan.respects(&ts));
        assert!(verify_plan(&published_plan(i), &f), "published plan {i}");
        assert!(published_plan(i).respects(&ts));
    }
}

/// Every plan with prefix length ≤ 2 and suffix length 1..=2 over the given
/// transition system, for brute-force satisfiability.
fn all_small_plans(ts: &TransitionSystem) -> Vec<PrefixSuffixPlan> {
    let mut choices = Vec::new();
    for p in ts.points() {
        let label: Vec<String> = ts.label_of(p).unwrap().iter().cloned().collect();
        for mask in 0..(1u32 << label.len()) {
            let services = label
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, s)| s.clone());
            choices.push(PlanStep::new(p.clone(), services));
        }
    }
    let mut seqs: Vec<Vec<PlanStep>> = vec![vec![]];
    let mut by_len = vec![seqs.clone()];
    for _ in 0..2 {
        seqs = seqs
            .iter()
            .flat_map(|s| {
                choices.iter().map(move |c| {
                    let mut t = s.clone();
                    t.push(c.clone());
                    t
                })
            })
            .collect();
        by_len.push(seqs.clone());
    }
    let mut out = Vec::new();
    for prefix_len in 0..=2 {
        for suffix_len in 1..=2 {
            for p in &by_len[prefix_len] {
                for s in &by_len[suffix_len] {
                    out.push(PrefixSuffixPlan::new(p.clone(), s.clone()).unwrap());
                }
            }
        }
    }
    out
}

fn random_ts(rng: &mut ChaCha8Rng) -> TransitionSystem {
    let k = rng.gen_range(1..=3);
    let points: Vec<(String, BTreeSet<String>)> = (0..k)
        .map(|p| {
            let label = common::ATOMS
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|s| s.to_string())
                .collect();
            (format!("p{p}"), label)
        })
        .collect();
    build_transition_system(&points, None).unwrap()
}

#[test]
fn synthesis_is_sound_and_complete_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut feasible = 0;
    for _ in 0..150 {
        let ts = random_ts(&mut rng);
        let f = random_formula(&mut rng, 3);
        let brute = all_small_plans(&ts)
            .into_iter()
            .any(|p| verify_plan(&p, &f));
        let plan = synthesize_plan(&ts, &f);
        if let Some(plan) = &plan {
            assert!(verify_plan(plan, &f), "{f}: {plan}");
            assert!(plan.respects(&ts));
        }
        if brute {
            feasible += 1;
            assert!(
                plan.is_some(),
                "{f} is satisfiable on the TS but no plan found"
            );
        }
    }
    assert!(feasible > 30);
}

#[test]
fn synthesis_is_deterministic() {
    for i in 1..=5 {
        let a = synthesize_plan(&team5_ts(i), &team5_formula(i));
        let b = synthesize_plan(&team5_ts(i), &team5_formula(i));
        assert_eq!(a, b);
    }
}

#[test]
fn plans_never_revisit_the_initial_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let ts = random_ts(&mut rng);
        let f = random_formula(&mut rng, 3);
        if let Some(plan) = synthesize_plan(&ts, &f) {
            assert!(plan
                .prefix()
                .iter()
                .chain(plan.suffix())
                .all(|s| s.point != ltlcoord::planner::INITIAL_STATE));
        }
    }
}

#[test]
fn unavailable_service_is_infeasible() {
    let ts = team5_ts(1);
    let f = ltlcoord::ltl::parse_ltl_unchecked("F (r1 & g1)").unwrap();
    assert_eq!(synthesize_plan(&ts, &f), None);
}
