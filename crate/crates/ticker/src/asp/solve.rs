//! Answer sets of ground normal programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use super::{AtomId, AtomTable, GroundProgram, GroundRule};
use crate::model::{Atom, Symbol};

/// Default number of search steps (decisions plus propagation rounds).
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("search budget of {0} steps exhausted")]
    Budget(u64),
}

/// Stratum per predicate; negative dependencies point strictly downwards.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stratification {
    pub strata: BTreeMap<Symbol, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strata {
    Stratified(Stratification),
    /// Predicates of a dependency cycle through negation.
    NotStratified { cycle: Vec<Symbol> },
}

impl Strata {
    pub fn is_stratified(&self) -> bool {
        matches!(self, Strata::Stratified(_))
    }
}

pub fn stratify(p: &GroundProgram) -> Strata {
    let mut edges: BTreeSet<(Symbol, Symbol, bool)> = BTreeSet::new();
    let mut preds: BTreeSet<Symbol> = BTreeSet::new();
    let pred = |a: AtomId| p.atoms.atom(a).predicate.clone();
    for r in &p.rules {
        let h = pred(r.head);
        preds.insert(h.clone());
        for a in &r.pos {
            edges.insert((h.clone(), pred(*a), false));
        }
        for a in &r.neg {
            edges.insert((h.clone(), pred(*a), true));
        }
    }
    for (_, b, _) in &edges {
        preds.insert(b.clone());
    }
    let mut g: DiGraph<Symbol, bool> = DiGraph::new();
    let nodes: BTreeMap<Symbol, NodeIndex> = preds.iter().map(|s| (s.clone(), g.add_node(s.clone()))).collect();
    for (h, b, neg) in &edges {
        g.add_edge(nodes[h], nodes[b], *neg);
    }
    // Dependencies come first in Tarjan's output.
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; g.node_count()];
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            comp[n.index()] = i;
        }
    }
    let mut level = vec![0usize; sccs.len()];
    for (i, scc) in sccs.iter().enumerate() {
        let mut l = 0;
        for n in scc {
            for e in g.edges(*n) {
                use petgraph::visit::EdgeRef;
                let c = comp[e.target().index()];
                let neg = *e.weight();
                if c == i {
                    if neg {
                        let mut cycle: Vec<Symbol> = scc.iter().map(|n| g[*n].clone()).collect();
                        cycle.sort();
                        return Strata::NotStratified { cycle };
                    }
                    continue;
                }
                l = l.max(level[c] + usize::from(neg));
            }
        }
        level[i] = l;
    }
    Strata::Stratified(Stratification {
        strata: nodes.iter().map(|(s, n)| (s.clone(), level[comp[n.index()]])).collect(),
    })
}

/// The unique answer set of a stratified program, as sorted atom ids.
pub fn least_model_stratified(p: &GroundProgram, s: &Stratification) -> Vec<AtomId> {
    let n = p.atoms.len();
    let stratum = |a: AtomId| s.strata.get(&p.atoms.atom(a).predicate).copied().unwrap_or(0);
    let mut by_stratum: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut watch: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut rule_stratum = vec![0; p.rules.len()];
    for (i, r) in p.rules.iter().enumerate() {
        let l = stratum(r.head);
        rule_stratum[i] = l;
        by_stratum.entry(l).or_default().push(i);
        for a in &r.pos {
            watch[*a as usize].push(i);
        }
    }
    let mut truth = vec![false; n];
    let mut missing = vec![0u32; p.rules.len()];
    let mut queue: Vec<AtomId> = Vec::new();
    for (level, rules) in &by_stratum {
        for &i in rules {
            let r = &p.rules[i];
            if r.neg.iter().any(|a| truth[*a as usize]) {
                missing[i] = u32::MAX;
                continue;
            }
            missing[i] = r.pos.iter().filter(|a| !truth[**a as usize]).count() as u32;
        }
        for &i in rules {
            let h = p.rules[i].head;
            if missing[i] == 0 && !truth[h as usize] {
                truth[h as usize] = true;
                queue.push(h);
            }
        }
        while let Some(a) = queue.pop() {
            for &i in &watch[a as usize] {
                if rule_stratum[i] != *level || missing[i] == u32::MAX {
                    continue;
                }
                missing[i] -= 1;
                let h = p.rules[i].head;
                if missing[i] == 0 && !truth[h as usize] {
                    truth[h as usize] = true;
                    queue.push(h);
                }
            }
        }
    }
    (0..n as AtomId).filter(|a| truth[*a as usize]).collect()
}

/// Up to `limit` answer sets in the deterministic search order, with the
/// default budget.
pub fn answer_sets(p: &GroundProgram, limit: usize) -> Result<Vec<BTreeSet<Atom>>, SolveError> {
    answer_sets_with(p, limit, DEFAULT_BUDGET)
}

pub fn answer_sets_with(p: &GroundProgram, limit: usize, budget: u64) -> Result<Vec<BTreeSet<Atom>>, SolveError> {
    if limit == 0 {
        return Ok(Vec::new());
    }
    let models = match stratify(p) {
        Strata::Stratified(s) => vec![least_model_stratified(p, &s)],
        Strata::NotStratified { .. } => Solver::new(&p.atoms, &p.rules).with_budget(budget).solve(limit)?,
    };
    Ok(models.iter().map(|m| p.resolve(m)).collect())
}

/// Reduct check: `m` is the least model of the rules whose negative body
/// avoids `m`.
pub fn is_answer_set(p: &GroundProgram, m: &BTreeSet<Atom>) -> bool {
    let mut ids = Vec::with_capacity(m.len());
    for a in m {
        match p.atoms.get(a) {
            Some(id) => ids.push(id),
            None => return false,
        }
    }
    let mut inm = vec![false; p.atoms.len()];
    for id in &ids {
        inm[*id as usize] = true;
    }
    let reduct: Vec<&GroundRule> = p
        .rules
        .iter()
        .filter(|r| !r.neg.iter().any(|a| inm[*a as usize]))
        .collect();
    let least = least_model(p.atoms.len(), &reduct);
    least == inm
}

fn least_model(n: usize, rules: &[&GroundRule]) -> Vec<bool> {
    let mut truth = vec![false; n];
    let mut watch: HashMap<AtomId, Vec<usize>> = HashMap::new();
    let mut missing: Vec<usize> = rules.iter().map(|r| r.pos.len()).collect();
    let mut queue = Vec::new();
    for (i, r) in rules.iter().enumerate() {
        for a in &r.pos {
            watch.entry(*a).or_default().push(i);
        }
        if r.pos.is_empty() && !truth[r.head as usize] {
            truth[r.head as usize] = true;
            queue.push(r.head);
        }
    }
    while let Some(a) = queue.pop() {
        for &i in watch.get(&a).map(Vec::as_slice).unwrap_or(&[]) {
            missing[i] -= 1;
            let h = rules[i].head;
            if missing[i] == 0 && !truth[h as usize] {
                truth[h as usize] = true;
                queue.push(h);
            }
        }
    }
    truth
}

struct LocalRule {
    head: u32,
    pos: Vec<u32>,
    neg: Vec<u32>,
}

const UNSET: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

/// Backtracking search over the atoms that occur negatively. Each branch
/// fixes their truth values; lower and upper bounds (least models of the
/// rules that are surely or possibly applicable) force further values and
/// detect conflicts. A total branch yields exactly one answer set.
pub struct Solver {
    atoms: Vec<AtomId>,
    rules: Vec<LocalRule>,
    watch: Vec<Vec<u32>>,
    decisions: Vec<u32>,
    prefer: Vec<bool>,
    budget: u64,
    steps: u64,
}

impl Solver {
    pub fn new(table: &AtomTable, rules: &[GroundRule]) -> Self {
        let mut local: HashMap<AtomId, u32> = HashMap::new();
        let mut atoms = Vec::new();
        let mut id = |a: AtomId| {
            *local.entry(a).or_insert_with(|| {
                atoms.push(a);
                (atoms.len() - 1) as u32
            })
        };
        let rules: Vec<LocalRule> = rules
            .iter()
            .map(|r| LocalRule {
                head: id(r.head),
                pos: r.pos.iter().map(|a| id(*a)).collect(),
                neg: r.neg.iter().map(|a| id(*a)).collect(),
            })
            .collect();
        let mut watch = vec![Vec::new(); atoms.len()];
        let mut negative = vec![false; atoms.len()];
        for (i, r) in rules.iter().enumerate() {
            for a in &r.pos {
                watch[*a as usize].push(i as u32);
            }
            for a in &r.neg {
                negative[*a as usize] = true;
            }
        }
        let mut decisions: Vec<u32> = (0..atoms.len() as u32).filter(|a| negative[*a as usize]).collect();
        decisions.sort_by(|a, b| table.atom(atoms[*a as usize]).cmp(table.atom(atoms[*b as usize])));
        let prefer = vec![true; atoms.len()];
        Solver {
            atoms,
            rules,
            watch,
            decisions,
            prefer,
            budget: DEFAULT_BUDGET,
            steps: 0,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Phase to try first per atom; `None` keeps the default (true).
    pub fn prefer(mut self, phase: impl Fn(AtomId) -> Option<bool>) -> Self {
        for (i, a) in self.atoms.iter().enumerate() {
            if let Some(p) = phase(*a) {
                self.prefer[i] = p;
            }
        }
        self
    }

    /// Steps used by the last call to [`Solver::solve`].
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Up to `limit` answer sets as sorted atom ids.
    pub fn solve(&mut self, limit: usize) -> Result<Vec<Vec<AtomId>>, SolveError> {
        self.steps = 0;
        let mut out = Vec::new();
        if limit == 0 {
            return Ok(out);
        }
        let n = self.atoms.len();
        let mut assign = vec![UNSET; n];
        let mut trail: Vec<u32> = Vec::new();
        // (atom, second branch taken, trail length before the decision)
        let mut stack: Vec<(u32, bool, usize)> = Vec::new();
        loop {
            self.tick()?;
            if let Some(lower) = self.propagate(&mut assign, &mut trail)? {
                match self.decisions.iter().find(|d| assign[**d as usize] == UNSET) {
                    Some(&d) => {
                        stack.push((d, false, trail.len()));
                        assign[d as usize] = if self.prefer[d as usize] { TRUE } else { FALSE };
                        trail.push(d);
                        continue;
                    }
                    None => {
                        let mut m: Vec<AtomId> = (0..n).filter(|a| lower[*a]).map(|a| self.atoms[a]).collect();
                        m.sort_unstable();
                        out.push(m);
                        if out.len() >= limit {
                            return Ok(out);
                        }
                    }
                }
            }
            loop {
                let Some((d, second, len)) = stack.pop() else { return Ok(out) };
                for a in trail.drain(len..) {
                    assign[a as usize] = UNSET;
                }
                if !second {
                    stack.push((d, true, len));
                    assign[d as usize] = if self.prefer[d as usize] { FALSE } else { TRUE };
                    trail.push(d);
                    break;
                }
            }
        }
    }

    fn tick(&mut self) -> Result<(), SolveError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(SolveError::Budget(self.budget))
        } else {
            Ok(())
        }
    }

    /// Alternating bound computation; returns the lower bound, or `None` on
    /// a conflict.
    fn propagate(&mut self, assign: &mut [i8], trail: &mut Vec<u32>) -> Result<Option<Vec<bool>>, SolveError> {
        let n = self.atoms.len();
        let mut lower = vec![false; n];
        loop {
            let upper = self.least(|a| assign[a] == TRUE || lower[a]);
            let new_lower = self.least(|a| !(assign[a] == FALSE || !upper[a]));
            lower = new_lower;
            let mut forced = false;
            for &d in &self.decisions {
                let d = d as usize;
                match assign[d] {
                    TRUE if !upper[d] => return Ok(None),
                    FALSE if lower[d] => return Ok(None),
                    UNSET if lower[d] => {
                        assign[d] = TRUE;
                        trail.push(d as u32);
                        forced = true;
                    }
                    UNSET if !upper[d] => {
                        assign[d] = FALSE;
                        trail.push(d as u32);
                        forced = true;
                    }
                    _ => {}
                }
            }
            if !forced {
                return Ok(Some(lower));
            }
            self.tick()?;
        }
    }

    /// Least model of the rules none of whose negative atoms is `blocked`.
    fn least(&self, blocked: impl Fn(usize) -> bool) -> Vec<bool> {
        let n = self.atoms.len();
        let mut truth = vec![false; n];
        let mut missing: Vec<u32> = Vec::with_capacity(self.rules.len());
        let mut queue = Vec::new();
        for r in &self.rules {
            if r.neg.iter().any(|a| blocked(*a as usize)) {
                missing.push(u32::MAX);
                continue;
            }
            missing.push(r.pos.len() as u32);
            if r.pos.is_empty() && !truth[r.head as usize] {
                truth[r.head as usize] = true;
                queue.push(r.head);
            }
        }
        while let Some(a) = queue.pop() {
            for &i in &self.watch[a as usize] {
                let m = &mut missing[i as usize];
                if *m == u32::MAX {
                    continue;
                }
                *m -= 1;
                let h = self.rules[i as usize].head;
                if *m == 0 && !truth[h as usize] {
                    truth[h as usize] = true;
                    queue.push(h);
                }
            }
        }
        truth
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::{ground_program, AspProgram, AspRule};

    fn prog(text: &str) -> GroundProgram {
        let p = crate::parser::parse_program(text).unwrap();
        let rules = p.rules.iter().map(|r| {
            let h = r.head.atom().clone();
            AspRule::new(
                h,
                r.pos.iter().map(|e| e.atom().clone()).collect(),
                r.neg.iter().map(|e| e.atom().clone()).collect(),
            )
            .with_guards(r.guards.clone())
        });
        ground_program(&AspProgram::new(rules.collect()))
    }

    fn names(models: Vec<BTreeSet<Atom>>) -> Vec<Vec<String>> {
        models
            .into_iter()
            .map(|m| m.into_iter().map(|a| a.to_string()).collect())
            .collect()
    }

    #[test]
    fn stratification() {
        let p = prog("b :- not a. a :- c.");
        let Strata::Stratified(s) = stratify(&p) else { panic!() };
        assert!(s.strata[&Symbol::new("b")] > s.strata[&Symbol::new("a")]);
        let p = prog("a :- not b. b :- not a.");
        assert_eq!(
            stratify(&p),
            Strata::NotStratified {
                cycle: vec![Symbol::new("a"), Symbol::new("b")]
            }
        );
    }

    #[test]
    fn three_way_choice() {
        let p = prog("a :- not b, not c. b :- not a, not c. c :- not a, not b.");
        assert_eq!(names(answer_sets(&p, 10).unwrap()), vec![vec!["a"], vec!["b"], vec!["c"]]);
    }

    #[test]
    fn odd_loop_has_no_model() {
        assert!(answer_sets(&prog("a :- not a."), 10).unwrap().is_empty());
    }

    #[test]
    fn unfounded_loop_is_false() {
        let p = prog("a :- a.");
        assert_eq!(names(answer_sets(&p, 10).unwrap()), vec![Vec::<String>::new()]);
        let a: BTreeSet<Atom> = [Atom::prop("a")].into();
        assert!(!is_answer_set(&p, &a));
    }

    #[test]
    fn reduct_check() {
        let p = prog("a :- not b.");
        assert!(is_answer_set(&p, &[Atom::prop("a")].into()));
        assert!(!is_answer_set(&p, &[Atom::prop("b")].into()));
    }

    #[test]
    fn preferred_phase_changes_first_model() {
        let p = prog("a :- not b. b :- not a.");
        let b = p.atoms.get(&Atom::prop("a")).unwrap();
        let mut s = Solver::new(&p.atoms, &p.rules).prefer(|x| (x == b).then_some(false));
        let first = s.solve(1).unwrap();
        assert_eq!(p.resolve(&first[0]), [Atom::prop("b")].into());
    }

    #[test]
    fn budget_is_reported() {
        let text: String = (0..12).map(|i| format!("a{i} :- not b{i}. b{i} :- not a{i}. ")).collect();
        let p = prog(&text);
        assert_eq!(answer_sets_with(&p, usize::MAX, 50), Err(SolveError::Budget(50)));
        assert_eq!(answer_sets(&p, usize::MAX).unwrap().len(), 4096);
    }
}
