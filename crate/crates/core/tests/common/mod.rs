#![allow(dead_code)]

use ltlcoord::ltl::{Formula, LassoWord, Letter};
use rand::Rng;

pub const ATOMS: [&str; 3] = ["a", "b", "c"];

/// Random formula in user syntax with depth at most `depth`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.1) {
            Formula::True
        } else {
            Formula::atom(ATOMS[rng.gen_range(0..ATOMS.len())])
        };
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::next(sub(rng)),
        5 | 6 => Formula::until(sub(rng), sub(rng)),
        7 => Formula::eventually(sub(rng)),
        _ => Formula::always(sub(rng)),
    }
}

pub fn random_letter<R: Rng>(rng: &mut R) -> Letter {
    ATOMS
        .iter()
        .filter(|_| rng.gen_bool(0.5))
        .map(|s| s.to_string())
        .collect()
}

/// Random lasso with stem length 0..=4 and period length 1..=4.
pub fn random_word<R: Rng>(rng: &mut R) -> LassoWord {
    let stem = (0..rng.gen_range(0..=4))
        .map(|_| random_letter(rng))
        .collect();
    let period = (0..rng.gen_range(1..=4))
        .map(|_| random_letter(rng))
        .collect();
    LassoWord::new(stem, period).unwrap()
}

use ltlcoord::controller::{AgentGains, ControlContext, TeamParams, UncertaintyBound};

pub const RADIUS: f64 = 1.0;
pub const D_CON: f64 = 4.0;

/// Connected, collision-free placement of `n` unit spheres with sensing
/// range 4: each new agent lands 2.3–3.7 from an earlier one and at least
/// 2.2 from all of them.
pub fn random_team<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut x: Vec<Vec<f64>> = vec![(0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()];
    while x.len() < n {
        let anchor = x[rng.gen_range(0..x.len())].clone();
        let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if len < 1e-3 {
            continue;
        }
        let r = rng.gen_range(2.3..3.7);
        let p: Vec<f64> = anchor
            .iter()
            .zip(&dir)
            .map(|(a, d)| a + r * d / len)
            .collect();
        let clear = x
            .iter()
            .all(|q| q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 2.2 * 2.2);
        if clear {
            x.push(p);
        }
    }
    x
}

pub fn team_params(n: usize, dim: usize) -> TeamParams<f64> {
    TeamParams {
        radii: vec![RADIUS; n],
        d_con: vec![D_CON; n],
        gravity: vec![vec![0.0; dim]; n],
        fbar: vec![UncertaintyBound::Norm; n],
        agent_gains: vec![
            AgentGains {
                mu_c: 3.0,
                mu: 25.0,
                mu_a: 0.1
            };
            n
        ],
        mu_col: 0.1,
        mu_con: 0.1,
        beta_bar_col: 1.0,
        beta_bar_con: 1.0,
    }
}

pub fn random_context<R: Rng>(
    rng: &mut R,
    n: usize,
    dim: usize,
) -> (ControlContext<f64>, Vec<Vec<f64>>) {
    let x = random_team(rng, n, dim);
    let ctx = ControlContext::new(team_params(n, dim), &x).expect("generated team is admissible");
    (ctx, x)
}

pub fn fixture_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/team5.scenario")
}
