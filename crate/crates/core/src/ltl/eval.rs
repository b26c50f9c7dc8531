use super::{Formula, LassoWord};

/// Decides `stem · period^ω ⊨ f`.
///
/// Every subformula is evaluated at each of the `|stem| + |period|` distinct
/// positions. Until is the least fixpoint of `b ∨ (a ∧ X(a U b))` over the
/// lasso successor relation, release the greatest fixpoint of its dual.
pub fn eval_lasso(f: &Formula, w: &LassoWord) -> bool {
    positions(f, w)[0]
}

fn positions(f: &Formula, w: &LassoWord) -> Vec<bool> {
    let n = w.positions();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(a) => (0..n).map(|p| w.letter_at(p).contains(a)).collect(),
        Formula::Not(a) => positions(a, w).into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => zip(positions(a, w), positions(b, w), |x, y| x && y),
        Formula::Or(a, b) => zip(positions(a, w), positions(b, w), |x, y| x || y),
        Formula::Implies(a, b) => zip(positions(a, w), positions(b, w), |x, y| !x || y),
        Formula::Next(a) => {
            let inner = positions(a, w);
            (0..n).map(|p| inner[w.succ(p)]).collect()
        }
        Formula::Until(a, b) => until(&positions(a, w), &positions(b, w), w),
        Formula::Eventually(a) => until(&vec![true; n], &positions(a, w), w),
        Formula::Release(a, b) => release(&positions(a, w), &positions(b, w), w),
        Formula::Always(a) => release(&vec![false; n], &positions(a, w), w),
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

fn until(a: &[bool], b: &[bool], w: &LassoWord) -> Vec<bool> {
    let mut val = b.to_vec();
    loop {
        let mut changed = false;
        // sweep backwards so that stem values settle in one pass once the
        // period is stable
        for p in (0..val.len()).rev() {
            if !val[p] && a[p] && val[w.succ(p)] {
                val[p] = true;
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}

fn release(a: &[bool], b: &[bool], w: &LassoWord) -> Vec<bool> {
    let mut val = b.to_vec();
    loop {
        let mut changed = false;
        for p in (0..val.len()).rev() {
            if val[p] && !a[p] && !val[w.succ(p)] {
                val[p] = false;
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{letter, parse_ltl_unchecked, Letter};

    fn empty() -> Letter {
        Letter::new()
    }

    fn word(stem: Vec<Letter>, period: Vec<Letter>) -> LassoWord {
        LassoWord::new(stem, period).unwrap()
    }

    fn f(s: &str) -> Formula {
        parse_ltl_unchecked(s).unwrap()
    }

    #[test]
    fn true_holds_everywhere() {
        assert!(eval_lasso(&Formula::True, &word(vec![], vec![empty()])));
        assert!(eval_lasso(
            &Formula::True,
            &word(vec![letter(["a"])], vec![letter(["b"])])
        ));
    }

    #[test]
    fn infinitely_often() {
        let w = word(vec![empty()], vec![letter(["a"])]);
        assert!(eval_lasso(&f("G F a"), &w));
        let w = word(vec![letter(["a"])], vec![empty()]);
        assert!(!eval_lasso(&f("G F a"), &w));
        assert!(eval_lasso(&f("F G !a"), &w));
    }

    #[test]
    fn next_moves_one_position() {
        let w = word(vec![letter(["a"])], vec![empty()]);
        assert!(!eval_lasso(&f("X a"), &w));
        assert!(eval_lasso(&f("a & X !a"), &w));
    }

    #[test]
    fn until_needs_witness() {
        // a forever, b never: a U b fails, a R ... handled via G
        let w = word(vec![], vec![letter(["a"])]);
        assert!(!eval_lasso(&f("a U b"), &w));
        assert!(eval_lasso(&f("G a"), &w));
        let w = word(vec![letter(["a"]), letter(["a"])], vec![letter(["b"])]);
        assert!(eval_lasso(&f("a U b"), &w));
        assert!(!eval_lasso(&f("a U X X X c"), &w));
    }

    #[test]
    fn release_semantics() {
        let r = Formula::release(Formula::atom("a"), Formula::atom("b"));
        // b holds forever
        assert!(eval_lasso(&r, &word(vec![], vec![letter(["b"])])));
        // b until (and including) a
        assert!(eval_lasso(
            &r,
            &word(vec![letter(["b"]), letter(["a", "b"])], vec![empty()])
        ));
        // b drops before a
        assert!(!eval_lasso(
            &r,
            &word(vec![letter(["b"]), empty()], vec![letter(["a"])])
        ));
    }

    #[test]
    fn sequential_pattern_on_period() {
        let w = word(
            vec![],
            vec![
                letter(["r1"]),
                letter(["g1"]),
                letter(["m1"]),
                letter(["b1"]),
            ],
        );
        assert!(eval_lasso(&f("G F (r1 & X (g1 & X (m1 & X b1)))"), &w));
        assert!(!eval_lasso(&f("G F (r1 & X m1)"), &w));
    }
}
