//! Linear temporal logic over finite sets of atomic propositions.
//!
//! Concrete syntax (ASCII):
//!
//! | token   | meaning        |
//! |---------|----------------|
//! | `true`, `false` | constants (`false` is read as `!true`) |
//! | `!`     | negation       |
//! | `&`     | conjunction    |
//! | `\|`    | disjunction    |
//! | `->`    | implication    |
//! | `X`     | next           |
//! | `U`     | until          |
//! | `F`     | eventually     |
//! | `G`     | always         |
//!
//! Precedence from tightest to loosest: unary operators, `U`, `&`, `|`, `->`.
//! `U` and `->` associate to the right, `&` and `|` to the left. Atom names
//! are identifiers `[A-Za-z_][A-Za-z0-9_]*` other than the keywords above.
//!
//! Release (`R`) exists only internally, as the dual of until in negation
//! normal form.

mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::eval_lasso;
pub use parse::{parse_ltl, parse_ltl_unchecked, LtlError};

/// A service/proposition name owned by one agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicProposition {
    pub name: String,
    pub owner: usize,
}

impl AtomicProposition {
    pub fn new(name: impl Into<String>, owner: usize) -> Self {
        Self {
            name: name.into(),
            owner,
        }
    }
}

/// The declared proposition names a formula may mention.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet(BTreeSet<String>);

impl Alphabet {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(names.into_iter().map(Into::into).collect())
    }

    pub fn from_props<'a>(props: impl IntoIterator<Item = &'a AtomicProposition>) -> Self {
        Self::new(props.into_iter().map(|p| p.name.clone()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A letter of the word: the set of propositions that hold at one position.
pub type Letter = BTreeSet<String>;

pub fn letter<I, S>(names: I) -> Letter
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(Into::into).collect()
}

/// LTL abstract syntax tree.
///
/// The core grammar is `True`, `Atom`, `Not`, `And`, `Next`, `Until`; `Or`,
/// `Implies`, `Eventually` and `Always` are kept as written and removed by
/// [`Formula::to_core`]. `False` and `Release` only appear after
/// [`Formula::to_nnf`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

use Formula::*;

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Self {
        Release(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Self {
        Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Self {
        Always(Box::new(f))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            True | False | Atom(_) => vec![],
            Not(a) | Next(a) | Eventually(a) | Always(a) => vec![a],
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => vec![a, b],
        }
    }

    /// Atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Atom(a) = self {
            out.insert(a.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn is_core(&self) -> bool {
        let here = matches!(
            self,
            True | Atom(_) | Not(_) | And(_, _) | Next(_) | Until(_, _)
        );
        here && self.children().iter().all(|c| c.is_core())
    }

    /// Rewrites derived operators into `{true, atom, !, &, X, U}`.
    pub fn to_core(&self) -> Formula {
        match self {
            True => True,
            False => Formula::not(True),
            Atom(a) => Atom(a.clone()),
            Not(a) => Formula::not(a.to_core()),
            And(a, b) => Formula::and(a.to_core(), b.to_core()),
            Or(a, b) => Formula::not(Formula::and(
                Formula::not(a.to_core()),
                Formula::not(b.to_core()),
            )),
            Implies(a, b) => Formula::not(Formula::and(a.to_core(), Formula::not(b.to_core()))),
            Next(a) => Formula::next(a.to_core()),
            Until(a, b) => Formula::until(a.to_core(), b.to_core()),
            Release(a, b) => Formula::not(Formula::until(
                Formula::not(a.to_core()),
                Formula::not(b.to_core()),
            )),
            Eventually(a) => Formula::until(True, a.to_core()),
            Always(a) => Formula::not(Formula::until(True, Formula::not(a.to_core()))),
        }
    }

    /// Negation normal form: negations only on atoms, over
    /// `{true, false, atom, !atom, &, |, X, U, R}`.
    pub fn to_nnf(&self) -> Formula {
        self.nnf(false)
    }

    fn nnf(&self, neg: bool) -> Formula {
        match (self, neg) {
            (True, false) | (False, true) => True,
            (True, true) | (False, false) => False,
            (Atom(a), false) => Atom(a.clone()),
            (Atom(a), true) => Formula::not(Atom(a.clone())),
            (Not(a), _) => a.nnf(!neg),
            (And(a, b), false) => Formula::and(a.nnf(false), b.nnf(false)),
            (And(a, b), true) => Formula::or(a.nnf(true), b.nnf(true)),
            (Or(a, b), false) => Formula::or(a.nnf(false), b.nnf(false)),
            (Or(a, b), true) => Formula::and(a.nnf(true), b.nnf(true)),
            (Implies(a, b), false) => Formula::or(a.nnf(true), b.nnf(false)),
            (Implies(a, b), true) => Formula::and(a.nnf(false), b.nnf(true)),
            (Next(a), _) => Formula::next(a.nnf(neg)),
            (Until(a, b), false) => Formula::until(a.nnf(false), b.nnf(false)),
            (Until(a, b), true) => Formula::release(a.nnf(true), b.nnf(true)),
            (Release(a, b), false) => Formula::release(a.nnf(false), b.nnf(false)),
            (Release(a, b), true) => Formula::until(a.nnf(true), b.nnf(true)),
            (Eventually(a), false) => Formula::until(True, a.nnf(false)),
            (Eventually(a), true) => Formula::release(False, a.nnf(true)),
            (Always(a), false) => Formula::release(False, a.nnf(false)),
            (Always(a), true) => Formula::until(True, a.nnf(true)),
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Not(a) => matches!(**a, Atom(_)),
            Implies(..) | Eventually(_) | Always(_) => false,
            _ => self.children().iter().all(|c| c.is_nnf()),
        }
    }
}

/// Fully parenthesised printer; its output parses back to the same tree for
/// every formula written in user syntax (no `False`/`Release` nodes).
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(a) => write!(f, "{a}"),
            Not(a) => write!(f, "!{a}"),
            Next(a) => write!(f, "X {a}"),
            Eventually(a) => write!(f, "F {a}"),
            Always(a) => write!(f, "G {a}"),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            Until(a, b) => write!(f, "({a} U {b})"),
            Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

/// Ultimately periodic word `stem · period^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LassoWord {
    stem: Vec<Letter>,
    period: Vec<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lasso period must contain at least one letter")]
pub struct EmptyPeriod;

impl LassoWord {
    pub fn new(stem: Vec<Letter>, period: Vec<Letter>) -> Result<Self, EmptyPeriod> {
        if period.is_empty() {
            return Err(EmptyPeriod);
        }
        Ok(Self { stem, period })
    }

    pub fn stem(&self) -> &[Letter] {
        &self.stem
    }

    pub fn period(&self) -> &[Letter] {
        &self.period
    }

    /// Number of distinct positions, `|stem| + |period|`.
    pub fn positions(&self) -> usize {
        self.stem.len() + self.period.len()
    }

    pub fn letter_at(&self, pos: usize) -> &Letter {
        if pos < self.stem.len() {
            &self.stem[pos]
        } else {
            &self.period[(pos - self.stem.len()) % self.period.len()]
        }
    }

    /// Successor of a lasso position; the last period position loops back.
    pub fn succ(&self, pos: usize) -> usize {
        if pos + 1 < self.positions() {
            pos + 1
        } else {
            self.stem.len()
        }
    }

    /// True if every letter only uses names from `alphabet`.
    pub fn within(&self, alphabet: &Alphabet) -> bool {
        self.stem
            .iter()
            .chain(&self.period)
            .all(|l| l.iter().all(|a| alphabet.contains(a)))
    }
}
