use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::term::{Atom, CmpOp, Guard, Substitution, Symbol, Term};

/// Window function selector. `TimeInf` only arises from reading a body
/// `@T a` as `[inf t] @T a` in the incremental encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum WindowSpec {
    Time(u64),
    Tuple(u64),
    TimeInf,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Modality {
    Diamond,
    Box,
    At(Term),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtendedAtom {
    Plain(Atom),
    At(Term, Atom),
    Window(WindowSpec, Modality, Atom),
}

impl ExtendedAtom {
    pub fn atom(&self) -> &Atom {
        match self {
            ExtendedAtom::Plain(a) | ExtendedAtom::At(_, a) | ExtendedAtom::Window(_, _, a) => a,
        }
    }

    /// The time term of an `@`-atom or a windowed `@` modality.
    pub fn time_term(&self) -> Option<&Term> {
        match self {
            ExtendedAtom::At(t, _) => Some(t),
            ExtendedAtom::Window(_, Modality::At(t), _) => Some(t),
            _ => None,
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.atom()
            .variables()
            .chain(self.time_term().and_then(Term::as_var))
    }

    pub fn is_window(&self) -> bool {
        matches!(self, ExtendedAtom::Window(..))
    }

    pub fn substitute(&self, subst: &Substitution) -> ExtendedAtom {
        match self {
            ExtendedAtom::Plain(a) => ExtendedAtom::Plain(a.substitute(subst)),
            ExtendedAtom::At(t, a) => ExtendedAtom::At(t.substitute(subst), a.substitute(subst)),
            ExtendedAtom::Window(w, m, a) => {
                let m = match m {
                    Modality::At(t) => Modality::At(t.substitute(subst)),
                    m => m.clone(),
                };
                ExtendedAtom::Window(*w, m, a.substitute(subst))
            }
        }
    }
}

impl fmt::Debug for ExtendedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtendedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedAtom::Plain(a) => write!(f, "{a}"),
            ExtendedAtom::At(t, a) => write!(f, "@{t} {a}"),
            ExtendedAtom::Window(w, m, a) => {
                match w {
                    WindowSpec::Time(n) => write!(f, "[{n} t] ")?,
                    WindowSpec::Tuple(n) => write!(f, "[{n} #] ")?,
                    WindowSpec::TimeInf => f.write_str("[inf t] ")?,
                }
                match m {
                    Modality::Diamond => f.write_str("<> ")?,
                    Modality::Box => f.write_str("[] ")?,
                    Modality::At(t) => write!(f, "@{t} ")?,
                }
                write!(f, "{a}")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Plain(Atom),
    At(Term, Atom),
}

impl Head {
    pub fn atom(&self) -> &Atom {
        match self {
            Head::Plain(a) | Head::At(_, a) => a,
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        let time = match self {
            Head::At(t, _) => t.as_var(),
            Head::Plain(_) => None,
        };
        self.atom().variables().chain(time)
    }

    pub fn substitute(&self, subst: &Substitution) -> Head {
        match self {
            Head::Plain(a) => Head::Plain(a.substitute(subst)),
            Head::At(t, a) => Head::At(t.substitute(subst), a.substitute(subst)),
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::Plain(a) => write!(f, "{a}"),
            Head::At(t, a) => write!(f, "@{t} {a}"),
        }
    }
}

impl fmt::Debug for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `head :- pos..., not neg..., guards...`
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LarsRule {
    pub head: Head,
    pub pos: Vec<ExtendedAtom>,
    pub neg: Vec<ExtendedAtom>,
    pub guards: Vec<Guard>,
}

impl LarsRule {
    pub fn new(head: Head, pos: Vec<ExtendedAtom>, neg: Vec<ExtendedAtom>) -> Self {
        LarsRule {
            head,
            pos,
            neg,
            guards: Vec::new(),
        }
    }

    pub fn with_guards(mut self, guards: Vec<Guard>) -> Self {
        self.guards = guards;
        self
    }

    /// Body atoms with their position label: positive first, then negative.
    pub fn body(&self) -> impl Iterator<Item = (BodyPos, &ExtendedAtom)> {
        self.pos
            .iter()
            .enumerate()
            .map(|(i, e)| (BodyPos::Pos(i), e))
            .chain(self.neg.iter().enumerate().map(|(i, e)| (BodyPos::Neg(i), e)))
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut vars: BTreeSet<Symbol> = self.head.variables().cloned().collect();
        for (_, e) in self.body() {
            vars.extend(e.variables().cloned());
        }
        for g in &self.guards {
            vars.extend(g.variables().cloned());
        }
        vars
    }

    pub fn is_ground(&self) -> bool {
        self.variables().is_empty()
    }

    pub fn substitute(&self, subst: &Substitution) -> LarsRule {
        LarsRule {
            head: self.head.substitute(subst),
            pos: self.pos.iter().map(|e| e.substitute(subst)).collect(),
            neg: self.neg.iter().map(|e| e.substitute(subst)).collect(),
            guards: self.guards.iter().map(|g| g.substitute(subst)).collect(),
        }
    }

    /// Variables not bound by a positive body atom or an equality chain
    /// rooted in one.
    pub fn unsafe_variables(&self) -> BTreeSet<Symbol> {
        let mut bound: BTreeSet<Symbol> = self
            .pos
            .iter()
            .flat_map(|e| e.variables().cloned())
            .collect();
        loop {
            let mut changed = false;
            for g in self.guards.iter().filter(|g| g.op == CmpOp::Eq) {
                let lv = g.lhs.term.as_var();
                let rv = g.rhs.term.as_var();
                let l_ok = lv.is_none_or(|v| bound.contains(v));
                let r_ok = rv.is_none_or(|v| bound.contains(v));
                if l_ok && !r_ok {
                    changed |= bound.insert(rv.unwrap().clone());
                } else if r_ok && !l_ok {
                    changed |= bound.insert(lv.unwrap().clone());
                }
            }
            if !changed {
                break;
            }
        }
        self.variables()
            .into_iter()
            .filter(|v| !bound.contains(v))
            .collect()
    }
}

impl fmt::Display for LarsRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if first {
                first = false;
                f.write_str(" :- ")
            } else {
                f.write_str(", ")
            }
        };
        for e in &self.pos {
            sep(f)?;
            write!(f, "{e}")?;
        }
        for e in &self.neg {
            sep(f)?;
            write!(f, "not {e}")?;
        }
        for g in &self.guards {
            sep(f)?;
            write!(f, "{g}")?;
        }
        f.write_str(".")
    }
}

impl fmt::Debug for LarsRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Position of an extended atom in a rule body.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BodyPos {
    Pos(usize),
    Neg(usize),
}

impl fmt::Display for BodyPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyPos::Pos(i) => write!(f, "p{i}"),
            BodyPos::Neg(i) => write!(f, "n{i}"),
        }
    }
}

/// Rules plus static background facts and the declared extensional
/// predicates (name to arity).
#[derive(Clone, Default, PartialEq, Eq)]
pub struct LarsProgram {
    pub rules: Vec<LarsRule>,
    pub background: BTreeSet<Atom>,
    pub extensional: BTreeMap<Symbol, usize>,
}

impl LarsProgram {
    pub fn new(rules: Vec<LarsRule>) -> Self {
        LarsProgram {
            rules,
            ..Default::default()
        }
    }

    pub fn with_extensional(mut self, name: &str, arity: usize) -> Self {
        self.extensional.insert(Symbol::new(name), arity);
        self
    }

    pub fn with_background(mut self, atoms: impl IntoIterator<Item = Atom>) -> Self {
        self.background.extend(atoms);
        self
    }

    pub fn is_extensional(&self, pred: &Symbol) -> bool {
        self.extensional.contains_key(pred)
    }

    pub fn head_predicates(&self) -> BTreeSet<Symbol> {
        self.rules
            .iter()
            .map(|r| r.head.atom().predicate.clone())
            .collect()
    }

    /// Predicates that occur only as background facts: never derived,
    /// never streamed.
    pub fn background_predicates(&self) -> BTreeSet<Symbol> {
        let heads = self.head_predicates();
        self.background
            .iter()
            .map(|a| a.predicate.clone())
            .filter(|p| !heads.contains(p) && !self.is_extensional(p))
            .collect()
    }

    /// Every predicate (with arity) occurring in a rule.
    pub fn rule_predicates(&self) -> BTreeSet<(Symbol, usize)> {
        let mut preds = BTreeSet::new();
        for r in &self.rules {
            let a = r.head.atom();
            preds.insert((a.predicate.clone(), a.arity()));
            for (_, e) in r.body() {
                let a = e.atom();
                preds.insert((a.predicate.clone(), a.arity()));
            }
        }
        preds
    }

    /// Largest time window length and tuple window size; `None` stands for
    /// an unbounded look-back (`@`-atoms in bodies). Zero if no window of
    /// that kind occurs.
    pub fn max_window_lengths(&self) -> (Option<u64>, u64) {
        let mut time = Some(0u64);
        let mut tuple = 0u64;
        for r in &self.rules {
            for (_, e) in r.body() {
                match e {
                    ExtendedAtom::At(..) | ExtendedAtom::Window(WindowSpec::TimeInf, ..) => time = None,
                    ExtendedAtom::Window(WindowSpec::Time(n), ..) => time = time.map(|t| t.max(*n)),
                    ExtendedAtom::Window(WindowSpec::Tuple(n), ..) => tuple = tuple.max(*n),
                    ExtendedAtom::Plain(_) => {}
                }
            }
        }
        (time, tuple)
    }
}

impl fmt::Display for LarsProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, k) in &self.extensional {
            writeln!(f, "#ext {p}/{k}.")?;
        }
        for a in &self.background {
            writeln!(f, "#background {a}.")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for LarsProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
