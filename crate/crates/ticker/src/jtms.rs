//! Justification-based truth maintenance over ground normal rules.
//!
//! Every node is in or out. In-nodes carry a supporting rule whose
//! positive body is in and whose negative body is out; supports are
//! well-founded. An update relabels only the nodes that depend on a
//! changed rule; choices among the remaining unknown nodes are settled by
//! the answer-set search, preferring the previous labels.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::asp::{AtomId, AtomTable, GroundRule, RuleDelta, SolveError, Solver, DEFAULT_BUDGET};

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TmsError {
    #[error("no admissible model; {} nodes unresolved", unresolved.len())]
    NoAdmissibleModel { unresolved: Vec<AtomId> },
    #[error("relabeling budget exhausted; {} nodes unresolved", unresolved.len())]
    Budget { unresolved: Vec<AtomId> },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Valid,
    Invalid,
    Open,
}

#[derive(Default)]
pub struct Jtms {
    rules: Vec<GroundRule>,
    alive: Vec<bool>,
    ids: HashMap<GroundRule, u32>,
    free: Vec<u32>,
    just: Vec<Vec<u32>>,
    consumers: Vec<Vec<u32>>,
    label: Vec<bool>,
    support: Vec<u32>,
    unknown: Vec<bool>,
    budget: u64,
    dirty: bool,
    global_solves: u64,
}

impl Jtms {
    pub fn new() -> Self {
        Jtms {
            budget: DEFAULT_BUDGET,
            ..Default::default()
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// True after a failed update: the labels are those of the last
    /// consistent state and the next update re-solves from scratch.
    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    /// Number of updates that fell back to solving the whole network.
    pub fn global_solves(&self) -> u64 {
        self.global_solves
    }

    pub fn is_in(&self, a: AtomId) -> bool {
        self.label.get(a as usize).copied().unwrap_or(false)
    }

    /// The in-nodes, sorted.
    pub fn model(&self) -> Vec<AtomId> {
        (0..self.label.len() as AtomId).filter(|a| self.label[*a as usize]).collect()
    }

    pub fn support(&self, a: AtomId) -> Option<&GroundRule> {
        match self.support.get(a as usize) {
            Some(&s) if s != NONE => Some(&self.rules[s as usize]),
            _ => None,
        }
    }

    pub fn rules(&self) -> impl Iterator<Item = &GroundRule> {
        self.rules.iter().zip(&self.alive).filter(|(_, a)| **a).map(|(r, _)| r)
    }

    pub fn rule_count(&self) -> usize {
        self.ids.len()
    }

    pub fn add_rule(&mut self, table: &AtomTable, r: GroundRule) -> Result<(), TmsError> {
        self.update(
            table,
            &RuleDelta {
                added: vec![r],
                removed: vec![],
            },
        )
    }

    pub fn remove_rule(&mut self, table: &AtomTable, r: &GroundRule) -> Result<(), TmsError> {
        self.update(
            table,
            &RuleDelta {
                added: vec![],
                removed: vec![r.clone()],
            },
        )
    }

    /// Applies a batch of rule changes and relabels. On error the labels
    /// stay as they were and the network is marked dirty.
    pub fn update(&mut self, table: &AtomTable, delta: &RuleDelta) -> Result<(), TmsError> {
        self.grow(table.len());
        let mut seeds = Vec::new();
        for r in &delta.removed {
            let Some(&id) = self.ids.get(r) else { continue };
            if self.support[r.head as usize] == id {
                seeds.push(r.head);
            }
            self.unlink(id);
        }
        for r in &delta.added {
            if self.ids.contains_key(r) {
                continue;
            }
            let id = self.link(r.clone());
            if !self.label[r.head as usize] && self.status(id) != Status::Invalid {
                seeds.push(r.head);
            }
        }
        if self.dirty {
            return self.solve_globally(table);
        }
        if seeds.is_empty() {
            return Ok(());
        }
        let affected = self.closure(seeds);
        let saved: Vec<(AtomId, bool, u32)> = affected
            .iter()
            .map(|a| (*a, self.label[*a as usize], self.support[*a as usize]))
            .collect();
        match self.relabel(table, &affected) {
            Ok(()) => Ok(()),
            Err(RelabelFailure::NoModel) => {
                for (a, l, s) in saved {
                    self.label[a as usize] = l;
                    self.support[a as usize] = s;
                    self.unknown[a as usize] = false;
                }
                self.solve_globally(table)
            }
            Err(RelabelFailure::Budget) => {
                for (a, l, s) in saved {
                    self.label[a as usize] = l;
                    self.support[a as usize] = s;
                    self.unknown[a as usize] = false;
                }
                self.dirty = true;
                Err(TmsError::Budget { unresolved: affected })
            }
        }
    }

    fn grow(&mut self, n: usize) {
        if self.label.len() < n {
            self.label.resize(n, false);
            self.support.resize(n, NONE);
            self.unknown.resize(n, false);
            self.just.resize_with(n, Vec::new);
            self.consumers.resize_with(n, Vec::new);
        }
    }

    fn link(&mut self, r: GroundRule) -> u32 {
        let id = match self.free.pop() {
            Some(id) => {
                self.rules[id as usize] = r.clone();
                self.alive[id as usize] = true;
                id
            }
            None => {
                self.rules.push(r.clone());
                self.alive.push(true);
                (self.rules.len() - 1) as u32
            }
        };
        self.just[r.head as usize].push(id);
        let mut body: Vec<AtomId> = r.pos.iter().chain(&r.neg).copied().collect();
        body.sort_unstable();
        body.dedup();
        for a in body {
            self.consumers[a as usize].push(id);
        }
        self.ids.insert(r, id);
        id
    }

    fn unlink(&mut self, id: u32) {
        let r = std::mem::take(&mut self.rules[id as usize]);
        let remove = |list: &mut Vec<u32>| {
            if let Some(i) = list.iter().position(|x| *x == id) {
                list.swap_remove(i);
            }
        };
        remove(&mut self.just[r.head as usize]);
        let mut body: Vec<AtomId> = r.pos.iter().chain(&r.neg).copied().collect();
        body.sort_unstable();
        body.dedup();
        for a in body {
            remove(&mut self.consumers[a as usize]);
        }
        if self.support[r.head as usize] == id {
            self.support[r.head as usize] = NONE;
        }
        self.alive[id as usize] = false;
        self.ids.remove(&r);
        self.free.push(id);
    }

    /// Validity of a rule under the known labels.
    fn status(&self, id: u32) -> Status {
        let r = &self.rules[id as usize];
        let mut open = false;
        for a in &r.pos {
            let a = *a as usize;
            if self.unknown[a] {
                open = true;
            } else if !self.label[a] {
                return Status::Invalid;
            }
        }
        for a in &r.neg {
            let a = *a as usize;
            if self.unknown[a] {
                open = true;
            } else if self.label[a] {
                return Status::Invalid;
            }
        }
        if open {
            Status::Open
        } else {
            Status::Valid
        }
    }

    /// Nodes whose label may depend on the seeds: in-nodes through their
    /// support, out-nodes through any justification.
    fn closure(&mut self, seeds: Vec<AtomId>) -> Vec<AtomId> {
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in seeds {
            if !self.unknown[s as usize] {
                self.unknown[s as usize] = true;
                out.push(s);
                queue.push_back(s);
            }
        }
        while let Some(a) = queue.pop_front() {
            for &rid in &self.consumers[a as usize] {
                let h = self.rules[rid as usize].head as usize;
                if self.unknown[h] {
                    continue;
                }
                if !self.label[h] || self.support[h] == rid {
                    self.unknown[h] = true;
                    out.push(h as AtomId);
                    queue.push_back(h as AtomId);
                }
            }
        }
        out
    }

    fn relabel(&mut self, table: &AtomTable, affected: &[AtomId]) -> Result<(), RelabelFailure> {
        let previous: HashMap<AtomId, bool> = affected.iter().map(|a| (*a, self.label[*a as usize])).collect();
        for a in affected {
            self.support[*a as usize] = NONE;
        }
        self.propagate(affected.iter().copied());
        let open: Vec<AtomId> = affected.iter().copied().filter(|a| self.unknown[*a as usize]).collect();
        if open.is_empty() {
            return Ok(());
        }
        let mut residual = Vec::new();
        for &a in &open {
            for &rid in &self.just[a as usize] {
                if self.status(rid) == Status::Invalid {
                    continue;
                }
                let r = &self.rules[rid as usize];
                let keep = |x: &AtomId| self.unknown[*x as usize];
                residual.push(GroundRule {
                    head: a,
                    pos: r.pos.iter().copied().filter(keep).collect(),
                    neg: r.neg.iter().copied().filter(keep).collect(),
                });
            }
        }
        let mut solver = Solver::new(table, &residual)
            .with_budget(self.budget)
            .prefer(|a| previous.get(&a).copied());
        let models = match solver.solve(1) {
            Ok(m) => m,
            Err(SolveError::Budget(_)) => return Err(RelabelFailure::Budget),
        };
        let Some(m) = models.into_iter().next() else {
            return Err(RelabelFailure::NoModel);
        };
        for &a in &open {
            self.label[a as usize] = false;
        }
        for a in m {
            self.label[a as usize] = true;
        }
        for &a in &open {
            self.unknown[a as usize] = false;
        }
        self.assign_supports(&open);
        Ok(())
    }

    /// Labels unknown nodes whose status follows from known labels, until
    /// nothing changes.
    fn propagate(&mut self, start: impl Iterator<Item = AtomId>) {
        let mut queue: VecDeque<AtomId> = start.collect();
        while let Some(a) = queue.pop_front() {
            if !self.unknown[a as usize] {
                continue;
            }
            let mut support = NONE;
            let mut all_invalid = true;
            for &rid in &self.just[a as usize] {
                match self.status(rid) {
                    Status::Valid => {
                        support = rid;
                        break;
                    }
                    Status::Open => all_invalid = false,
                    Status::Invalid => {}
                }
            }
            if support == NONE && !all_invalid {
                continue;
            }
            self.unknown[a as usize] = false;
            self.label[a as usize] = support != NONE;
            self.support[a as usize] = support;
            for &rid in &self.consumers[a as usize] {
                let h = self.rules[rid as usize].head;
                if self.unknown[h as usize] {
                    queue.push_back(h);
                }
            }
        }
    }

    /// Well-founded supports for the in-nodes among `nodes`, whose labels
    /// form an answer set together with the rest of the network.
    fn assign_supports(&mut self, nodes: &[AtomId]) {
        let mut pending: Vec<AtomId> = nodes.iter().copied().filter(|a| self.label[*a as usize]).collect();
        for a in &pending {
            self.support[*a as usize] = NONE;
            self.unknown[*a as usize] = true;
        }
        loop {
            let before = pending.len();
            pending.retain(|&a| {
                let found = self.just[a as usize]
                    .iter()
                    .copied()
                    .find(|rid| self.status(*rid) == Status::Valid);
                match found {
                    Some(rid) => {
                        self.support[a as usize] = rid;
                        self.unknown[a as usize] = false;
                        false
                    }
                    None => true,
                }
            });
            if pending.is_empty() || pending.len() == before {
                break;
            }
        }
        debug_assert!(pending.is_empty(), "in-nodes without well-founded support");
        for a in pending {
            self.unknown[a as usize] = false;
        }
    }

    fn solve_globally(&mut self, table: &AtomTable) -> Result<(), TmsError> {
        self.global_solves += 1;
        let rules: Vec<GroundRule> = self.rules().cloned().collect();
        let label = &self.label;
        let mut solver = Solver::new(table, &rules)
            .with_budget(self.budget)
            .prefer(|a| label.get(a as usize).copied());
        let all: Vec<AtomId> = (0..self.label.len() as AtomId).collect();
        match solver.solve(1) {
            Err(SolveError::Budget(_)) => {
                self.dirty = true;
                Err(TmsError::Budget { unresolved: all })
            }
            Ok(models) => match models.into_iter().next() {
                None => {
                    self.dirty = true;
                    Err(TmsError::NoAdmissibleModel { unresolved: all })
                }
                Some(m) => {
                    self.label.iter_mut().for_each(|l| *l = false);
                    self.support.iter_mut().for_each(|s| *s = NONE);
                    for a in m {
                        self.label[a as usize] = true;
                    }
                    self.assign_supports(&all);
                    self.dirty = false;
                    Ok(())
                }
            },
        }
    }

    /// One line per node: atom, label and supporting rule.
    pub fn dump(&self, table: &AtomTable) -> String {
        let mut out = String::new();
        for a in 0..self.label.len().min(table.len()) {
            if self.just[a].is_empty() && !self.label[a] {
                continue;
            }
            let label = if self.label[a] { "in" } else { "out" };
            let support = match self.support(a as AtomId) {
                Some(r) => r.display(table).to_string(),
                None => "-".to_string(),
            };
            out.push_str(&format!("{} {label} {support}\n", table.atom(a as AtomId)));
        }
        out
    }
}

enum RelabelFailure {
    NoModel,
    Budget,
}

impl fmt::Debug for Jtms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jtms")
            .field("rules", &self.ids.len())
            .field("in", &self.model().len())
            .field("dirty", &self.dirty)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::{is_answer_set, GroundProgram};
    use crate::model::Atom;

    struct Net {
        table: AtomTable,
        tms: Jtms,
    }

    impl Net {
        fn new() -> Self {
            Net {
                table: AtomTable::default(),
                tms: Jtms::new(),
            }
        }

        fn rule(&mut self, head: &str, pos: &[&str], neg: &[&str]) -> GroundRule {
            let mut id = |s: &str| self.table.intern(Atom::prop(s));
            GroundRule {
                head: id(head),
                pos: pos.iter().map(|s| id(s)).collect(),
                neg: neg.iter().map(|s| id(s)).collect(),
            }
        }

        fn add(&mut self, head: &str, pos: &[&str], neg: &[&str]) -> Result<(), TmsError> {
            let r = self.rule(head, pos, neg);
            let res = self.tms.add_rule(&self.table, r);
            self.check(&res);
            res
        }

        fn remove(&mut self, head: &str, pos: &[&str], neg: &[&str]) -> Result<(), TmsError> {
            let r = self.rule(head, pos, neg);
            let res = self.tms.remove_rule(&self.table, &r);
            self.check(&res);
            res
        }

        fn check(&self, res: &Result<(), TmsError>) {
            if res.is_ok() {
                let p = GroundProgram {
                    atoms: self.table.clone(),
                    rules: self.tms.rules().cloned().collect(),
                };
                assert!(is_answer_set(&p, &p.resolve(&self.tms.model())), "{}", self.tms.dump(&self.table));
            }
        }

        fn model(&self) -> Vec<String> {
            self.tms.model().iter().map(|a| self.table.atom(*a).to_string()).collect()
        }
    }

    #[test]
    fn add_and_remove() {
        let mut n = Net::new();
        assert!(n.model().is_empty());
        n.add("a", &[], &["b"]).unwrap();
        assert_eq!(n.model(), ["a"]);
        n.add("b", &[], &[]).unwrap();
        assert_eq!(n.model(), ["b"]);
        n.remove("b", &[], &[]).unwrap();
        assert_eq!(n.model(), ["a"]);
        n.remove("a", &[], &["b"]).unwrap();
        assert!(n.model().is_empty());
        n.remove("zzz", &[], &[]).unwrap();
    }

    #[test]
    fn odd_loop_is_reported() {
        let mut n = Net::new();
        n.add("c", &[], &[]).unwrap();
        let err = n.add("a", &[], &["a"]).unwrap_err();
        assert!(matches!(err, TmsError::NoAdmissibleModel { .. }));
        assert!(n.tms.is_dirty());
        assert_eq!(n.model(), ["c"]);
        n.remove("a", &[], &["a"]).unwrap();
        assert!(!n.tms.is_dirty());
        assert_eq!(n.model(), ["c"]);
    }

    #[test]
    fn three_way_choice_is_deterministic() {
        let mut n = Net::new();
        n.add("a", &[], &["b", "c"]).unwrap();
        n.add("b", &[], &["a", "c"]).unwrap();
        n.add("c", &[], &["a", "b"]).unwrap();
        assert_eq!(n.model(), ["a"]);
    }

    #[test]
    fn unfounded_loop_stays_out() {
        let mut n = Net::new();
        n.add("a", &["b"], &[]).unwrap();
        n.add("b", &["a"], &[]).unwrap();
        assert!(n.model().is_empty());
        n.add("b", &[], &["c"]).unwrap();
        assert_eq!(n.model(), ["a", "b"]);
        n.add("c", &[], &[]).unwrap();
        assert_eq!(n.model(), ["c"]);
    }

    #[test]
    fn inertia_keeps_untouched_choice() {
        let mut n = Net::new();
        n.add("p", &[], &["q"]).unwrap();
        n.add("q", &[], &["p"]).unwrap();
        n.add("x", &[], &["y"]).unwrap();
        n.add("y", &[], &["x"]).unwrap();
        let before = n.model();
        // An unrelated fact leaves both choices alone.
        n.add("z", &[], &[]).unwrap();
        let mut expected = before.clone();
        expected.push("z".into());
        assert_eq!(n.model(), expected);
        // Forcing the other branch of one choice keeps the other.
        n.add("q", &[], &[]).unwrap();
        let m = n.model();
        assert!(m.contains(&"q".to_string()) && !m.contains(&"p".to_string()));
        assert!(before.contains(&"x".to_string()) == m.contains(&"x".to_string()));
    }

    #[test]
    fn support_switches_to_alternative() {
        let mut n = Net::new();
        n.add("a", &[], &[]).unwrap();
        n.add("b", &[], &[]).unwrap();
        n.add("h", &["a"], &[]).unwrap();
        n.add("h", &["b"], &[]).unwrap();
        n.add("g", &["h"], &[]).unwrap();
        n.remove("a", &[], &[]).unwrap();
        assert_eq!(n.model(), ["b", "h", "g"]);
        let h = n.table.get(&Atom::prop("h")).unwrap();
        assert_eq!(n.tms.support(h).unwrap().display(&n.table).to_string(), "h :- b.");
    }
}
