//! Bottom-up grounding over the set of possibly true atoms.
//!
//! Non-ground templates are instantiated semi-naively: whenever an atom
//! becomes possible (some live ground rule has it as head) every template
//! mentioning its predicate positively is joined against it. Variable-free
//! templates are instantiated unconditionally, so pinned rules cost a
//! single lookup. Templates can be added and removed at any time; ground
//! rules are reference counted across templates, and an atom losing its last
//! supporting rule retracts every instance that used it positively.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::{AspProgram, AspRule, AtomId, AtomTable, GroundProgram, GroundRule};
use crate::model::{Atom, CmpOp, Constant, Guard, Symbol, Term};

pub type TemplateId = u64;
type RuleId = u32;

#[derive(Clone, Debug)]
enum Slot {
    Const(Constant),
    Var(usize),
}

#[derive(Clone, Debug)]
struct CAtom {
    pred: Symbol,
    args: Vec<Slot>,
}

#[derive(Clone, Debug)]
struct CExpr {
    slot: Slot,
    offset: i64,
}

#[derive(Clone, Debug)]
struct CGuard {
    lhs: CExpr,
    op: CmpOp,
    rhs: CExpr,
}

enum Value {
    Known(Constant),
    Unbound,
    Invalid,
}

enum Check {
    True,
    False,
    Bind(usize, Constant),
    Pending,
}

type Binding = Vec<Option<Constant>>;

impl CExpr {
    fn value(&self, b: &Binding) -> Value {
        let base = match &self.slot {
            Slot::Const(c) => c.clone(),
            Slot::Var(v) => match &b[*v] {
                Some(c) => c.clone(),
                None => return Value::Unbound,
            },
        };
        match (base, self.offset) {
            (c, 0) => Value::Known(c),
            (Constant::Int(i), k) => Value::Known(Constant::Int(i + k)),
            (Constant::Sym(_), _) => Value::Invalid,
        }
    }
}

impl CGuard {
    fn check(&self, b: &Binding) -> Check {
        let bind = |side: &CExpr, c: Constant| match (&side.slot, side.offset, &c) {
            (_, _, Constant::Int(i)) if *i < 0 => Check::False,
            (Slot::Var(v), 0, _) => Check::Bind(*v, c),
            _ => Check::Pending,
        };
        match (self.lhs.value(b), self.rhs.value(b)) {
            (Value::Invalid, _) | (_, Value::Invalid) => Check::False,
            (Value::Known(l), Value::Known(r)) => {
                if self.op.holds(l.cmp(&r)) {
                    Check::True
                } else {
                    Check::False
                }
            }
            (Value::Unbound, Value::Known(r)) if self.op == CmpOp::Eq => bind(&self.lhs, r),
            (Value::Known(l), Value::Unbound) if self.op == CmpOp::Eq => bind(&self.rhs, l),
            _ => Check::Pending,
        }
    }
}

impl CAtom {
    fn matches(&self, a: &Atom, b: &mut Binding) -> bool {
        if a.predicate != self.pred || a.args.len() != self.args.len() {
            return false;
        }
        for (s, t) in self.args.iter().zip(&a.args) {
            let Term::Const(c) = t else { return false };
            match s {
                Slot::Const(k) => {
                    if k != c {
                        return false;
                    }
                }
                Slot::Var(v) => match &b[*v] {
                    Some(k) => {
                        if k != c {
                            return false;
                        }
                    }
                    None => b[*v] = Some(c.clone()),
                },
            }
        }
        true
    }

    fn instantiate(&self, b: &Binding) -> Option<Atom> {
        let args = self
            .args
            .iter()
            .map(|s| match s {
                Slot::Const(c) => Some(Term::Const(c.clone())),
                Slot::Var(v) => b[*v].clone().map(Term::Const),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Atom::new(self.pred.clone(), args))
    }

    fn bound_args(&self, b: &Binding) -> usize {
        self.args
            .iter()
            .filter(|s| match s {
                Slot::Const(_) => true,
                Slot::Var(v) => b[*v].is_some(),
            })
            .count()
    }

    fn trigger(&self) -> TriggerKey {
        let first = self.args.iter().enumerate().find_map(|(i, s)| match s {
            Slot::Const(c) => Some((i, c.clone())),
            Slot::Var(_) => None,
        });
        (self.pred.clone(), self.args.len(), first)
    }
}

type TriggerKey = (Symbol, usize, Option<(usize, Constant)>);

struct Template {
    head: CAtom,
    pos: Vec<CAtom>,
    neg: Vec<CAtom>,
    guards: Vec<CGuard>,
    vars: usize,
    instances: HashSet<RuleId>,
}

impl Template {
    fn compile(r: &AspRule) -> Template {
        let mut names: BTreeMap<Symbol, usize> = BTreeMap::new();
        let mut slot = |t: &Term| match t {
            Term::Const(c) => Slot::Const(c.clone()),
            Term::Var(v) => {
                let n = names.len();
                Slot::Var(*names.entry(v.clone()).or_insert(n))
            }
        };
        let mut atom = |a: &Atom| CAtom {
            pred: a.predicate.clone(),
            args: a.args.iter().map(&mut slot).collect(),
        };
        let pos: Vec<CAtom> = r.pos.iter().map(&mut atom).collect();
        let head = atom(&r.head);
        let neg = r.neg.iter().map(&mut atom).collect();
        let guards = r
            .guards
            .iter()
            .map(|g: &Guard| CGuard {
                lhs: CExpr {
                    slot: slot(&g.lhs.term),
                    offset: g.lhs.offset,
                },
                op: g.op,
                rhs: CExpr {
                    slot: slot(&g.rhs.term),
                    offset: g.rhs.offset,
                },
            })
            .collect();
        assert!(pos.len() <= 64, "rule bodies are limited to 64 positive atoms");
        Template {
            head,
            pos,
            neg,
            guards,
            vars: names.len(),
            instances: HashSet::new(),
        }
    }

    fn is_ground(&self) -> bool {
        self.vars == 0
    }
}

#[derive(Default)]
struct PredIndex {
    all: BTreeSet<AtomId>,
    by_arg: Vec<HashMap<Constant, BTreeSet<AtomId>>>,
}

/// An instance found by a join, not yet interned.
struct Found {
    head: Atom,
    pos: Vec<AtomId>,
    neg: Vec<Atom>,
}

/// Net change of the live ground rules since the last [`Grounder::drain`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleDelta {
    pub added: Vec<GroundRule>,
    pub removed: Vec<GroundRule>,
}

impl RuleDelta {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

#[derive(Default)]
pub struct Grounder {
    table: AtomTable,
    templates: HashMap<TemplateId, Template>,
    next_template: TemplateId,
    triggers: HashMap<TriggerKey, Vec<(TemplateId, usize)>>,
    index: HashMap<(Symbol, usize), PredIndex>,
    support: Vec<u32>,
    uses: Vec<Vec<(TemplateId, RuleId)>>,
    rules: Vec<GroundRule>,
    refs: Vec<u32>,
    rule_ids: HashMap<GroundRule, RuleId>,
    free: Vec<RuleId>,
    journal: HashMap<RuleId, bool>,
    queue: VecDeque<AtomId>,
}

impl Grounder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &AtomTable {
        &self.table
    }

    pub fn intern(&mut self, a: Atom) -> AtomId {
        let id = self.table.intern(a);
        if self.support.len() < self.table.len() {
            self.support.resize(self.table.len(), 0);
            self.uses.resize_with(self.table.len(), Vec::new);
        }
        id
    }

    /// True if some live ground rule derives `a`.
    pub fn is_possible(&self, a: &Atom) -> bool {
        self.table
            .get(a)
            .is_some_and(|id| self.support[id as usize] > 0)
    }

    pub fn template_count(&self) -> usize {
        self.templates.len()
    }

    /// Live ground rules, in creation order.
    pub fn live_rules(&self) -> impl Iterator<Item = &GroundRule> {
        self.rules
            .iter()
            .zip(&self.refs)
            .filter(|(_, n)| **n > 0)
            .map(|(r, _)| r)
    }

    /// A snapshot of the live rules as a standalone program.
    pub fn program(&self) -> GroundProgram {
        GroundProgram {
            atoms: self.table.clone(),
            rules: self.live_rules().cloned().collect(),
        }
    }

    /// Live ground instances of a template, in rule id order.
    pub fn instances(&self, id: TemplateId) -> Vec<&GroundRule> {
        let Some(t) = self.templates.get(&id) else { return Vec::new() };
        let mut ids: Vec<RuleId> = t.instances.iter().copied().collect();
        ids.sort_unstable();
        ids.into_iter().map(|rid| &self.rules[rid as usize]).collect()
    }

    pub fn add_template(&mut self, r: &AspRule) -> TemplateId {
        let id = self.next_template;
        self.next_template += 1;
        let t = Template::compile(r);
        if !t.is_ground() {
            for (i, a) in t.pos.iter().enumerate() {
                self.triggers.entry(a.trigger()).or_default().push((id, i));
            }
        }
        let mut found = Vec::new();
        if t.is_ground() {
            let b = Binding::new();
            let holds = t.guards.iter().all(|g| matches!(g.check(&b), Check::True));
            if holds {
                let pos = t.pos.iter().map(|a| a.instantiate(&b).expect("ground"));
                found.push(Found {
                    head: t.head.instantiate(&b).expect("ground"),
                    pos: pos.map(|a| self.intern(a)).collect(),
                    neg: t.neg.iter().map(|a| a.instantiate(&b).expect("ground")).collect(),
                });
            }
        } else {
            join(&t, &self.index, &self.table, None, &mut found);
        }
        self.templates.insert(id, t);
        for f in found {
            self.add_instance(id, f);
        }
        self.propagate();
        id
    }

    pub fn remove_template(&mut self, id: TemplateId) {
        let Some(t) = self.templates.remove(&id) else { return };
        if !t.is_ground() {
            for a in &t.pos {
                let key = a.trigger();
                if let Some(list) = self.triggers.get_mut(&key) {
                    list.retain(|(tid, _)| *tid != id);
                    if list.is_empty() {
                        self.triggers.remove(&key);
                    }
                }
            }
        }
        let mut lost = Vec::new();
        let mut instances: Vec<RuleId> = t.instances.into_iter().collect();
        instances.sort_unstable();
        for rid in instances {
            self.release(rid, &mut lost);
        }
        self.retract(lost);
    }

    /// Net rule changes since the previous call. Dead rule ids are recycled
    /// here, so the result is stable.
    pub fn drain(&mut self) -> RuleDelta {
        let mut touched: Vec<(RuleId, bool)> = self.journal.drain().collect();
        touched.sort_unstable();
        let mut delta = RuleDelta::default();
        for (rid, before) in touched {
            let now = self.refs[rid as usize] > 0;
            match (before, now) {
                (false, true) => delta.added.push(self.rules[rid as usize].clone()),
                (true, false) => delta.removed.push(self.rules[rid as usize].clone()),
                _ => {}
            }
            if !now {
                self.rule_ids.remove(&self.rules[rid as usize]);
                self.free.push(rid);
            }
        }
        delta
    }

    fn add_instance(&mut self, tid: TemplateId, f: Found) {
        let rule = GroundRule {
            head: self.intern(f.head),
            pos: f.pos,
            neg: f.neg.into_iter().map(|a| self.intern(a)).collect(),
        };
        let rid = match self.rule_ids.get(&rule) {
            Some(rid) => *rid,
            None => {
                let rid = match self.free.pop() {
                    Some(rid) => {
                        self.rules[rid as usize] = rule.clone();
                        rid
                    }
                    None => {
                        self.rules.push(rule.clone());
                        self.refs.push(0);
                        (self.rules.len() - 1) as RuleId
                    }
                };
                self.rule_ids.insert(rule, rid);
                rid
            }
        };
        let t = self.templates.get_mut(&tid).expect("live template");
        if !t.instances.insert(rid) {
            return;
        }
        if !t.is_ground() {
            for i in 0..self.rules[rid as usize].pos.len() {
                let a = self.rules[rid as usize].pos[i] as usize;
                self.uses[a].push((tid, rid));
                let n = self.uses[a].len();
                if n >= 64 && n.is_power_of_two() {
                    self.compact_uses(a as AtomId);
                }
            }
        }
        let n = &mut self.refs[rid as usize];
        *n += 1;
        if *n == 1 {
            self.journal.entry(rid).or_insert(false);
            let head = self.rules[rid as usize].head;
            self.support[head as usize] += 1;
            if self.support[head as usize] == 1 {
                self.index_insert(head);
                self.queue.push_back(head);
            }
        }
    }

    fn compact_uses(&mut self, a: AtomId) {
        let templates = &self.templates;
        let rules = &self.rules;
        self.uses[a as usize].retain(|(tid, rid)| {
            templates.get(tid).is_some_and(|t| t.instances.contains(rid)) && rules[*rid as usize].pos.contains(&a)
        });
    }

    fn release(&mut self, rid: RuleId, lost: &mut Vec<AtomId>) {
        let n = &mut self.refs[rid as usize];
        *n -= 1;
        if *n == 0 {
            self.journal.entry(rid).or_insert(true);
            let head = self.rules[rid as usize].head;
            self.support[head as usize] -= 1;
            if self.support[head as usize] == 0 {
                self.index_remove(head);
                lost.push(head);
            }
        }
    }

    fn retract(&mut self, mut lost: Vec<AtomId>) {
        while let Some(a) = lost.pop() {
            for (tid, rid) in std::mem::take(&mut self.uses[a as usize]) {
                let Some(t) = self.templates.get_mut(&tid) else { continue };
                if self.rules[rid as usize].pos.contains(&a) && t.instances.remove(&rid) {
                    self.release(rid, &mut lost);
                }
            }
        }
    }

    fn propagate(&mut self) {
        while let Some(a) = self.queue.pop_front() {
            if self.support[a as usize] == 0 {
                continue;
            }
            let atom = self.table.atom(a).clone();
            let mut hits: Vec<(TemplateId, usize)> = Vec::new();
            let arity = atom.args.len();
            if let Some(list) = self.triggers.get(&(atom.predicate.clone(), arity, None)) {
                hits.extend(list);
            }
            for (i, t) in atom.args.iter().enumerate() {
                let Term::Const(c) = t else { continue };
                if let Some(list) = self.triggers.get(&(atom.predicate.clone(), arity, Some((i, c.clone())))) {
                    hits.extend(list);
                }
            }
            hits.sort_unstable();
            for (tid, pos) in hits {
                let mut found = Vec::new();
                let Some(t) = self.templates.get(&tid) else { continue };
                join(t, &self.index, &self.table, Some((pos, a)), &mut found);
                for f in found {
                    self.add_instance(tid, f);
                }
            }
        }
    }

    fn index_insert(&mut self, id: AtomId) {
        let a = self.table.atom(id);
        let e = self
            .index
            .entry((a.predicate.clone(), a.args.len()))
            .or_insert_with(|| PredIndex {
                all: BTreeSet::new(),
                by_arg: vec![HashMap::new(); a.args.len()],
            });
        e.all.insert(id);
        for (i, t) in a.args.iter().enumerate() {
            if let Term::Const(c) = t {
                e.by_arg[i].entry(c.clone()).or_default().insert(id);
            }
        }
    }

    fn index_remove(&mut self, id: AtomId) {
        let a = self.table.atom(id);
        let Some(e) = self.index.get_mut(&(a.predicate.clone(), a.args.len())) else { return };
        e.all.remove(&id);
        for (i, t) in a.args.iter().enumerate() {
            if let Term::Const(c) = t {
                if let Some(s) = e.by_arg[i].get_mut(c) {
                    s.remove(&id);
                    if s.is_empty() {
                        e.by_arg[i].remove(c);
                    }
                }
            }
        }
    }
}

fn join(
    t: &Template,
    index: &HashMap<(Symbol, usize), PredIndex>,
    table: &AtomTable,
    delta: Option<(usize, AtomId)>,
    out: &mut Vec<Found>,
) {
    let mut b: Binding = vec![None; t.vars];
    let mut ids = vec![0; t.pos.len()];
    let mut done = 0u64;
    if let Some((i, a)) = delta {
        if !t.pos[i].matches(table.atom(a), &mut b) {
            return;
        }
        ids[i] = a;
        done |= 1 << i;
    }
    search(t, index, table, b, &mut ids, done, 0, out);
}

#[allow(clippy::too_many_arguments)]
fn search(
    t: &Template,
    index: &HashMap<(Symbol, usize), PredIndex>,
    table: &AtomTable,
    mut b: Binding,
    ids: &mut Vec<AtomId>,
    done: u64,
    mut guards_done: u64,
    out: &mut Vec<Found>,
) {
    let mut progress = true;
    while progress {
        progress = false;
        for (i, g) in t.guards.iter().enumerate() {
            if guards_done >> i & 1 == 1 {
                continue;
            }
            match g.check(&b) {
                Check::True => guards_done |= 1 << i,
                Check::False => return,
                Check::Bind(v, c) => {
                    b[v] = Some(c);
                    guards_done |= 1 << i;
                    progress = true;
                }
                Check::Pending => {}
            }
        }
    }
    let next = (0..t.pos.len())
        .filter(|j| done >> j & 1 == 0)
        .max_by_key(|j| (t.pos[*j].bound_args(&b), std::cmp::Reverse(*j)));
    let Some(j) = next else {
        if guards_done.count_ones() as usize != t.guards.len() {
            return;
        }
        let head = t.head.instantiate(&b);
        let neg = t.neg.iter().map(|a| a.instantiate(&b)).collect::<Option<Vec<_>>>();
        if let (Some(head), Some(neg)) = (head, neg) {
            out.push(Found {
                head,
                pos: ids.clone(),
                neg,
            });
        }
        return;
    };
    let a = &t.pos[j];
    let Some(pi) = index.get(&(a.pred.clone(), a.args.len())) else { return };
    let bound = a.args.iter().enumerate().find_map(|(k, s)| match s {
        Slot::Const(c) => Some((k, c.clone())),
        Slot::Var(v) => b[*v].clone().map(|c| (k, c)),
    });
    let candidates = match bound {
        Some((k, c)) => match pi.by_arg[k].get(&c) {
            Some(s) => s,
            None => return,
        },
        None => &pi.all,
    };
    for id in candidates {
        let mut b2 = b.clone();
        if a.matches(table.atom(*id), &mut b2) {
            ids[j] = *id;
            search(t, index, table, b2, ids, done | 1 << j, guards_done, out);
        }
    }
}

/// Grounds a whole program at once.
pub fn ground_program(p: &AspProgram) -> GroundProgram {
    let mut g = Grounder::new();
    for r in &p.rules {
        g.add_template(r);
    }
    g.program()
}
