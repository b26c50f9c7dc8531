mod common;

use common::{random_formula, random_word};
use ltlcoord::buchi::{ltl_to_buchi, ltl_to_gba};
use ltlcoord::ltl::{eval_lasso, parse_ltl_unchecked, LassoWord};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn automaton_agrees_with_lasso_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut disagreements = Vec::new();
    for _ in 0..2000 {
        let f = random_formula(&mut rng, 4);
        let a = ltl_to_buchi(&f);
        for _ in 0..3 {
            let w = random_word(&mut rng);
            if a.accepts_lasso(&w) != eval_lasso(&f, &w) {
                disagreements.push((f.to_string(), w.clone()));
            }
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:?}");
}

#[test]
fn degeneralization_preserves_language() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let f = random_formula(&mut rng, 4);
        let gba = ltl_to_gba(&f);
        let ba = gba.degeneralize();
        for _ in 0..4 {
            let w = random_word(&mut rng);
            assert_eq!(gba.accepts_lasso(&w), ba.accepts_lasso(&w), "{f} on {w:?}");
        }
    }
}

#[test]
fn witnesses_are_accepted() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let f = random_formula(&mut rng, 4);
        let a = ltl_to_buchi(&f);
        match a.find_accepting_lasso() {
            Some(lasso) => {
                assert!(lasso.is_valid_for(&a), "{f}");
                let w = lasso.word();
                assert!(a.accepts_lasso(&w), "{f}");
                assert!(eval_lasso(&f, &w), "{f}");
            }
            None => {
                // empty language: no random word may satisfy the formula
                for _ in 0..20 {
                    assert!(!eval_lasso(&f, &random_word(&mut rng)), "{f}");
                }
            }
        }
    }
}

fn arb_seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #[test]
    fn rewrites_preserve_semantics(seed in arb_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, 4);
        let core = f.to_core();
        let nnf = core.to_nnf();
        prop_assert!(core.is_core());
        prop_assert!(nnf.is_nnf());
        for _ in 0..4 {
            let w = random_word(&mut rng);
            let expect = eval_lasso(&f, &w);
            prop_assert_eq!(eval_lasso(&core, &w), expect);
            prop_assert_eq!(eval_lasso(&nnf, &w), expect);
            prop_assert_eq!(eval_lasso(&f.to_nnf(), &w), expect);
        }
    }

    #[test]
    fn printer_round_trips(seed in arb_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, 5);
        prop_assert_eq!(parse_ltl_unchecked(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn period_doubling_and_rotation(seed in arb_seed()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, 4);
        let w = random_word(&mut rng);
        let expect = eval_lasso(&f, &w);

        let doubled: Vec<_> = w.period().iter().chain(w.period()).cloned().collect();
        let wd = LassoWord::new(w.stem().to_vec(), doubled).unwrap();
        prop_assert_eq!(eval_lasso(&f, &wd), expect);

        // move the first period letter into the stem and rotate the period
        let mut stem = w.stem().to_vec();
        stem.push(w.period()[0].clone());
        let mut period = w.period()[1..].to_vec();
        period.push(w.period()[0].clone());
        let wr = LassoWord::new(stem, period).unwrap();
        prop_assert_eq!(eval_lasso(&f, &wr), expect);
    }
}
