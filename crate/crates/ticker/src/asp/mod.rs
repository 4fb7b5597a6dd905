//! Normal logic programs: rules with comparison guards, a grounder and an
//! answer-set solver.

mod ground;
mod solve;

use std::collections::HashMap;
use std::fmt;

use crate::model::{Atom, Guard};

pub use ground::{ground_program, Grounder, RuleDelta, TemplateId};
pub use solve::{
    answer_sets, answer_sets_with, is_answer_set, least_model_stratified, stratify, Solver, SolveError, Strata,
    Stratification, DEFAULT_BUDGET,
};

/// `head :- pos, not neg, guards.` Possibly non-ground.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AspRule {
    pub head: Atom,
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
    pub guards: Vec<Guard>,
}

impl AspRule {
    pub fn fact(head: Atom) -> Self {
        AspRule::new(head, vec![], vec![])
    }

    pub fn new(head: Atom, pos: Vec<Atom>, neg: Vec<Atom>) -> Self {
        AspRule {
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

    pub fn is_fact(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty() && self.guards.is_empty()
    }

    pub fn is_ground(&self) -> bool {
        self.head.is_ground()
            && self.pos.iter().all(Atom::is_ground)
            && self.neg.iter().all(Atom::is_ground)
            && self.guards.iter().all(|g| g.variables().next().is_none())
    }
}

impl fmt::Display for AspRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        let body = self
            .pos
            .iter()
            .map(|a| a.to_string())
            .chain(self.neg.iter().map(|a| format!("not {a}")))
            .chain(self.guards.iter().map(|g| g.to_string()));
        for (i, lit) in body.enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            f.write_str(&lit)?;
        }
        f.write_str(".")
    }
}

impl fmt::Debug for AspRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Default, PartialEq, Eq)]
pub struct AspProgram {
    pub rules: Vec<AspRule>,
}

impl AspProgram {
    pub fn new(rules: Vec<AspRule>) -> Self {
        AspProgram { rules }
    }

    pub fn push(&mut self, r: AspRule) {
        self.rules.push(r);
    }
}

impl fmt::Display for AspProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for AspProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Extend<AspRule> for AspProgram {
    fn extend<I: IntoIterator<Item = AspRule>>(&mut self, iter: I) {
        self.rules.extend(iter);
    }
}

impl FromIterator<AspRule> for AspProgram {
    fn from_iter<I: IntoIterator<Item = AspRule>>(iter: I) -> Self {
        AspProgram {
            rules: iter.into_iter().collect(),
        }
    }
}

pub type AtomId = u32;

/// Interning table for ground atoms. Ids are dense and never reused.
#[derive(Clone, Default)]
pub struct AtomTable {
    atoms: Vec<Atom>,
    ids: HashMap<Atom, AtomId>,
}

impl AtomTable {
    pub fn intern(&mut self, a: Atom) -> AtomId {
        if let Some(id) = self.ids.get(&a) {
            return *id;
        }
        let id = self.atoms.len() as AtomId;
        self.atoms.push(a.clone());
        self.ids.insert(a, id);
        id
    }

    pub fn get(&self, a: &Atom) -> Option<AtomId> {
        self.ids.get(a).copied()
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id as usize]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// A ground normal rule over interned atoms.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GroundRule {
    pub head: AtomId,
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

impl GroundRule {
    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        std::iter::once(self.head)
            .chain(self.pos.iter().copied())
            .chain(self.neg.iter().copied())
    }

    pub fn display<'a>(&'a self, table: &'a AtomTable) -> impl fmt::Display + 'a {
        DisplayRule { rule: self, table }
    }
}

struct DisplayRule<'a> {
    rule: &'a GroundRule,
    table: &'a AtomTable,
}

impl fmt::Display for DisplayRule<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.rule;
        write!(f, "{}", self.table.atom(r.head))?;
        let mut first = true;
        let lits = r
            .pos
            .iter()
            .map(|a| (false, *a))
            .chain(r.neg.iter().map(|a| (true, *a)));
        for (neg, a) in lits {
            f.write_str(if first { " :- " } else { ", " })?;
            first = false;
            if neg {
                f.write_str("not ")?;
            }
            write!(f, "{}", self.table.atom(a))?;
        }
        f.write_str(".")
    }
}

/// Ground rules together with the table their atoms live in.
#[derive(Clone, Default)]
pub struct GroundProgram {
    pub atoms: AtomTable,
    pub rules: Vec<GroundRule>,
}

impl GroundProgram {
    /// Builds a ground program from ground [`AspRule`]s. Guards must
    /// already be variable free; false guards drop the rule.
    pub fn from_rules<'a>(rules: impl IntoIterator<Item = &'a AspRule>) -> Self {
        let mut p = GroundProgram::default();
        for r in rules {
            if let Some(g) = p.intern_rule(r) {
                p.rules.push(g);
            }
        }
        p
    }

    fn intern_rule(&mut self, r: &AspRule) -> Option<GroundRule> {
        let empty = Default::default();
        for g in &r.guards {
            if g.eval(&empty) != crate::model::GuardEval::True {
                return None;
            }
        }
        Some(GroundRule {
            head: self.atoms.intern(r.head.clone()),
            pos: r.pos.iter().map(|a| self.atoms.intern(a.clone())).collect(),
            neg: r.neg.iter().map(|a| self.atoms.intern(a.clone())).collect(),
        })
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        self.atoms.atom(id)
    }

    /// The atoms of a model given as ids.
    pub fn resolve(&self, ids: &[AtomId]) -> std::collections::BTreeSet<Atom> {
        ids.iter().map(|id| self.atoms.atom(*id).clone()).collect()
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{}", r.display(&self.atoms))?;
        }
        Ok(())
    }
}
