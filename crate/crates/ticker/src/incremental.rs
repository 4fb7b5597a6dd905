//! Incremental encoding: annotated rules, pre-grounding, tick increments
//! and the incremental program.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::asp::{AspRule, GroundProgram, GroundRule, Grounder, RuleDelta, TemplateId};
use crate::encode::{
    base_rule, bridge_rules, bridged_predicates, pinned, tick, tick_pinned, AuxNames, Fresh, WindowNames,
};
use crate::model::{
    Atom, ExtendedAtom, GuardEval, LarsProgram, LarsRule, Modality, Substitution, Symbol, Term, Tick,
    TickStream, WindowSpec,
};

/// A natural number or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    Fin(u64),
    Inf,
}

impl Ext {
    fn plus(self, k: u64) -> Ext {
        match self {
            Ext::Fin(d) => Ext::Fin(d + k),
            Ext::Inf => Ext::Inf,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(n) => write!(f, "{n}"),
            Ext::Inf => f.write_str("inf"),
        }
    }
}

/// A duration or an expiration tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Annotation {
    pub time: Ext,
    pub count: Ext,
}

impl Annotation {
    pub const FOREVER: Annotation = Annotation {
        time: Ext::Inf,
        count: Ext::Inf,
    };

    pub fn time(n: u64) -> Self {
        Annotation {
            time: Ext::Fin(n),
            count: Ext::Inf,
        }
    }

    pub fn count(n: u64) -> Self {
        Annotation {
            time: Ext::Inf,
            count: Ext::Fin(n),
        }
    }

    /// Expiration of a rule with this duration created at `k`.
    pub fn after(self, k: Tick) -> Annotation {
        Annotation {
            time: self.time.plus(k.time),
            count: self.count.plus(k.count),
        }
    }

    pub fn is_expired_at(self, k: Tick) -> bool {
        self.time <= Ext::Fin(k.time) || self.count <= Ext::Fin(k.count)
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.time, self.count)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AnnotatedRule {
    pub annotation: Annotation,
    pub rule: AspRule,
}

impl AnnotatedRule {
    pub fn new(annotation: Annotation, rule: AspRule) -> Self {
        AnnotatedRule { annotation, rule }
    }
}

impl fmt::Display for AnnotatedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.annotation, self.rule)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreGroundError {
    #[error("variable {variable} of rule {rule} (`{text}`) occurs in a window atom but in no guard atom")]
    UnguardedVariable { rule: usize, text: String, variable: Symbol },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IncrementalError {
    #[error("tick {next} does not follow {prev}")]
    NotAdjacent { prev: Tick, next: Tick },
    #[error("tick {0} is a count increment and needs exactly one signal")]
    MissingSignal(Tick),
    #[error("tick {0} is a time increment and takes no signal")]
    UnexpectedSignal(Tick),
    #[error("the first tick carries no signal")]
    SignalAtStart,
    #[error(transparent)]
    PreGround(#[from] PreGroundError),
}

/// Rule instances with the variables in the scope of windows instantiated
/// from guard atoms. Each instance keeps the number of its source rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreGrounding {
    pub instances: Vec<(usize, LarsRule)>,
}

fn window_scope(r: &LarsRule) -> BTreeSet<Symbol> {
    let mut vars = BTreeSet::new();
    for (_, e) in r.body() {
        match e {
            ExtendedAtom::Window(..) | ExtendedAtom::At(..) => {
                vars.extend(e.atom().variables().cloned());
            }
            ExtendedAtom::Plain(_) => {}
        }
    }
    vars
}

/// Guard atoms are plain positive atoms over background-only predicates.
fn guard_atoms<'a>(r: &'a LarsRule, background: &BTreeSet<Symbol>) -> Vec<&'a Atom> {
    r.pos
        .iter()
        .filter_map(|e| match e {
            ExtendedAtom::Plain(a) if background.contains(&a.predicate) => Some(a),
            _ => None,
        })
        .collect()
}

/// Instantiates window variables from guard atoms over the background
/// facts and resolves comparison guards that became ground. With
/// `require_guards`, a window variable without a guard atom is an error;
/// otherwise it is left to the grounder.
pub fn pre_ground(p: &LarsProgram, require_guards: bool) -> Result<PreGrounding, PreGroundError> {
    let background = p.background_predicates();
    let mut facts: HashMap<&Symbol, Vec<&Atom>> = HashMap::new();
    for a in &p.background {
        facts.entry(&a.predicate).or_default().push(a);
    }
    let mut instances = Vec::new();
    for (i, r) in p.rules.iter().enumerate() {
        let scope = window_scope(r);
        let guards: Vec<&Atom> = guard_atoms(r, &background)
            .into_iter()
            .filter(|a| a.variables().any(|v| scope.contains(v)))
            .collect();
        let covered: BTreeSet<&Symbol> = guards.iter().flat_map(|a| a.variables()).collect();
        if require_guards {
            if let Some(v) = scope.iter().find(|v| !covered.contains(v)) {
                return Err(PreGroundError::UnguardedVariable {
                    rule: i,
                    text: r.to_string(),
                    variable: v.clone(),
                });
            }
        }
        let mut substs = vec![Substitution::new()];
        for g in &guards {
            let mut next = Vec::new();
            for s in &substs {
                for f in facts.get(&g.predicate).into_iter().flatten() {
                    let mut s2 = s.clone();
                    if g.match_ground(f, &mut s2) {
                        next.push(s2);
                    }
                }
            }
            substs = next;
        }
        for s in substs {
            if let Some(inst) = resolve_guards(r.substitute(&s)) {
                instances.push((i, inst));
            }
        }
    }
    Ok(PreGrounding { instances })
}

/// Drops satisfied ground comparisons; `None` if one fails.
fn resolve_guards(mut r: LarsRule) -> Option<LarsRule> {
    let empty = Substitution::new();
    let mut kept = Vec::new();
    for g in r.guards {
        if g.variables().next().is_some() {
            kept.push(g);
            continue;
        }
        match g.eval(&empty) {
            GuardEval::True => {}
            _ => return None,
        }
    }
    r.guards = kept;
    Some(r)
}

struct WindowAtom {
    names: WindowNames,
    spec: WindowSpec,
    modality: Modality,
    atom: Atom,
    fresh_d: Term,
}

struct Instance {
    windows: Vec<WindowAtom>,
}

/// Generates the annotated incremental rules of a program.
pub struct IncrementalEncoder {
    bridged: Vec<(Symbol, usize)>,
    instances: Vec<Instance>,
    static_rules: Vec<AspRule>,
}

impl IncrementalEncoder {
    pub fn new(p: &LarsProgram, pre: &PreGrounding) -> Self {
        let mut instances = Vec::new();
        let mut static_rules: Vec<AspRule> = p.background.iter().cloned().map(AspRule::fact).collect();
        let mut seen = BTreeSet::new();
        for (index, r) in &pre.instances {
            let mut fresh = Fresh::new(r);
            let mut windows = Vec::new();
            let mut push = |rule: AspRule| {
                if seen.insert(rule.clone()) {
                    static_rules.push(rule);
                }
            };
            push(base_rule(*index, r));
            for (pos, e) in r.body() {
                let ExtendedAtom::Window(spec, m, a) = e else { continue };
                let names = AuxNames::window(*index, pos, *spec, m, &a.predicate);
                if matches!(m, Modality::Box) {
                    push(AspRule::new(
                        Atom::new(names.omega.clone(), a.args.clone()),
                        vec![a.clone()],
                        vec![Atom::new(names.spoil.clone(), a.args.clone())],
                    ));
                }
                windows.push(WindowAtom {
                    names,
                    spec: *spec,
                    modality: m.clone(),
                    atom: a.clone(),
                    fresh_d: fresh.var("D"),
                });
            }
            instances.push(Instance { windows });
        }
        IncrementalEncoder {
            bridged: bridged_predicates(p).into_iter().collect(),
            instances,
            static_rules,
        }
    }

    /// Rules with duration (inf,inf) that do not depend on the tick:
    /// background facts, base rules and the static box rules.
    pub fn static_rules(&self) -> impl Iterator<Item = AnnotatedRule> + '_ {
        self.static_rules
            .iter()
            .map(|r| AnnotatedRule::new(Annotation::FOREVER, r.clone()))
    }

    /// Stream facts of tick `k` with signal `sig`.
    pub fn facts(&self, k: Tick, sig: Option<&Atom>) -> Vec<AspRule> {
        let (t, c) = (Term::int(k.time as i64), Term::int(k.count as i64));
        let mut out = vec![AspRule::fact(tick(t.clone(), c.clone()))];
        if let Some(a) = sig {
            out.push(AspRule::fact(pinned(&a.predicate, &a.args, [t.clone()])));
            out.push(AspRule::fact(tick_pinned(&a.predicate, &a.args, t, c)));
        }
        out
    }

    /// Rules pinned to time `t`. They are identical for every tick at `t`,
    /// so they are needed once per time point.
    pub fn time_rules(&self, t: u64) -> Vec<AnnotatedRule> {
        let tt = Term::int(t as i64);
        let mut out = Vec::new();
        for (pred, arity) in &self.bridged {
            for r in bridge_rules(pred, *arity, tt.clone(), false) {
                out.push(AnnotatedRule::new(Annotation::time(1), r));
            }
        }
        for inst in &self.instances {
            for w in &inst.windows {
                match (w.spec, &w.modality) {
                    (WindowSpec::Time(_) | WindowSpec::TimeInf, Modality::At(_) | Modality::Diamond) => {
                        let Some((head, body)) = pin_at(w, &tt, |a| pinned(&a.predicate, &a.args, [tt.clone()]))
                        else {
                            continue;
                        };
                        let d = match w.spec {
                            WindowSpec::Time(n) => Annotation::time(n + 1),
                            _ => Annotation::FOREVER,
                        };
                        out.push(AnnotatedRule::new(d, AspRule::new(head, vec![body], vec![])));
                    }
                    (WindowSpec::Time(n), Modality::Box) if n >= 1 && t >= 1 => {
                        out.push(AnnotatedRule::new(Annotation::time(n), box_spoil(w, t)));
                    }
                    (WindowSpec::TimeInf, Modality::Box) if t >= 1 => {
                        out.push(AnnotatedRule::new(Annotation::FOREVER, box_spoil(w, t)));
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// Rules pinned to tick `k`: tuple windows.
    pub fn tick_rules(&self, k: Tick, sig: Option<&Atom>) -> Vec<AnnotatedRule> {
        let (t, c) = (Term::int(k.time as i64), Term::int(k.count as i64));
        let mut out = Vec::new();
        for inst in &self.instances {
            for w in &inst.windows {
                let WindowSpec::Tuple(n) = w.spec else { continue };
                let d = Annotation::count(n);
                let a = &w.atom;
                let matches = sig.is_some_and(|s| s.predicate == a.predicate && s.arity() == a.arity());
                match &w.modality {
                    Modality::At(_) | Modality::Diamond => {
                        if !matches {
                            continue;
                        }
                        let Some((head, body)) =
                            pin_at(w, &t, |a| tick_pinned(&a.predicate, &a.args, t.clone(), c.clone()))
                        else {
                            continue;
                        };
                        out.push(AnnotatedRule::new(d, AspRule::new(head, vec![body], vec![])));
                    }
                    Modality::Box => {
                        let x = &a.args;
                        let spoil = Atom::new(w.names.spoil.clone(), x.clone());
                        let covt = Atom::new(w.names.covers_time.clone(), vec![t.clone()]);
                        let covc = |c: Term| Atom::new(w.names.covers_count.clone(), vec![c]);
                        let inw = Atom::new(w.names.in_window.clone(), x.iter().cloned().chain([t.clone()]).collect());
                        out.push(AnnotatedRule::new(
                            d,
                            AspRule::new(
                                spoil.clone(),
                                vec![a.clone(), tick(t.clone(), c.clone()), covt.clone()],
                                vec![pinned(&a.predicate, x, [t.clone()])],
                            ),
                        ));
                        out.push(AnnotatedRule::new(
                            d,
                            AspRule::new(
                                spoil,
                                vec![tick_pinned(&a.predicate, x, t.clone(), w.fresh_d.clone()), covt.clone()],
                                vec![covc(w.fresh_d.clone()), inw.clone()],
                            ),
                        ));
                        if matches {
                            out.push(AnnotatedRule::new(
                                d,
                                AspRule::new(inw, vec![tick_pinned(&a.predicate, x, t.clone(), c.clone())], vec![]),
                            ));
                        }
                        out.push(AnnotatedRule::new(
                            d,
                            AspRule::new(covt, vec![tick(t.clone(), c.clone())], vec![]),
                        ));
                        out.push(AnnotatedRule::new(
                            d,
                            AspRule::new(covc(c.clone()), vec![tick(t.clone(), c.clone())], vec![]),
                        ));
                    }
                }
            }
        }
        out
    }

    /// All incremental rules of tick `k` with their durations: stream
    /// facts, bridge rules, base rules and window rules.
    pub fn incremental_rules(&self, k: Tick, sig: Option<&Atom>) -> Vec<AnnotatedRule> {
        let mut out: Vec<AnnotatedRule> = self
            .facts(k, sig)
            .into_iter()
            .map(|r| AnnotatedRule::new(Annotation::FOREVER, r))
            .collect();
        out.extend(self.time_rules(k.time));
        out.extend(self.static_rules());
        out.extend(self.tick_rules(k, sig));
        out
    }
}

/// Head and body of a pinned `@`/`◇` window rule. `None` if a constant
/// `@`-time differs from `t`.
fn pin_at(w: &WindowAtom, t: &Term, body: impl Fn(&Atom) -> Atom) -> Option<(Atom, Atom)> {
    let mut s = Substitution::new();
    let a = match &w.modality {
        Modality::At(Term::Var(v)) => {
            s.insert(v.clone(), t.as_const().expect("pinned time").clone());
            w.atom.substitute(&s)
        }
        Modality::At(c) if c != t => return None,
        _ => w.atom.clone(),
    };
    let mut args = a.args.clone();
    if matches!(w.modality, Modality::At(_)) {
        args.push(t.clone());
    }
    Some((Atom::new(w.names.omega.clone(), args), body(&a)))
}

fn box_spoil(w: &WindowAtom, t: u64) -> AspRule {
    let a = &w.atom;
    AspRule::new(
        Atom::new(w.names.spoil.clone(), a.args.clone()),
        vec![a.clone()],
        vec![pinned(&a.predicate, &a.args, [Term::int(t as i64 - 1)])],
    )
}

/// Largest time window (`None` for unbounded) and tuple window lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cutoff {
    pub time: Option<u64>,
    pub count: u64,
}

impl Cutoff {
    pub fn of(p: &LarsProgram) -> Self {
        let (time, count) = p.max_window_lengths();
        Cutoff { time, count }
    }

    /// True if no window at `now` can see the facts of tick `k`.
    pub fn is_outdated(self, k: Tick, now: Tick) -> bool {
        let Some(n) = self.time else { return false };
        k.time + n < now.time && k.count + self.count < now.count + 1
    }
}

/// Rule changes of one tick increment.
#[derive(Clone, Debug, Default)]
pub struct TickUpdate {
    /// New incremental rules with expiration ticks.
    pub added: Vec<AnnotatedRule>,
    pub expired: Vec<AnnotatedRule>,
    /// Net change of the ground program.
    pub delta: RuleDelta,
}

struct FactEntry {
    template: TemplateId,
    refs: u32,
}

/// Cumulative incremental rules with their groundings.
pub struct IncrementalState {
    encoder: IncrementalEncoder,
    grounder: Grounder,
    pi: HashMap<AnnotatedRule, TemplateId>,
    by_time: BTreeMap<u64, Vec<AnnotatedRule>>,
    by_count: BTreeMap<u64, Vec<AnnotatedRule>>,
    facts: HashMap<AspRule, FactEntry>,
    history: VecDeque<(Tick, Vec<AspRule>)>,
    cutoff: Option<Cutoff>,
    current: Option<Tick>,
}

impl IncrementalState {
    pub fn new(p: &LarsProgram, pre: &PreGrounding) -> Self {
        IncrementalState {
            encoder: IncrementalEncoder::new(p, pre),
            grounder: Grounder::new(),
            pi: HashMap::new(),
            by_time: BTreeMap::new(),
            by_count: BTreeMap::new(),
            facts: HashMap::new(),
            history: VecDeque::new(),
            cutoff: None,
            current: None,
        }
    }

    /// Drops stream facts no window can reach anymore.
    pub fn with_gc(mut self, p: &LarsProgram) -> Self {
        self.cutoff = Some(Cutoff::of(p));
        self
    }

    pub fn current_tick(&self) -> Option<Tick> {
        self.current
    }

    pub fn grounder(&self) -> &Grounder {
        &self.grounder
    }

    /// The incremental program at the current tick.
    pub fn program(&self) -> GroundProgram {
        self.grounder.program()
    }

    pub fn live_rules(&self) -> impl Iterator<Item = &GroundRule> {
        self.grounder.live_rules()
    }

    /// Advances to tick `k`, which must be the first tick or a time or
    /// count increment of the current one.
    pub fn increment_tick(&mut self, k: Tick, sig: Option<&Atom>) -> Result<TickUpdate, IncrementalError> {
        let new_time = match self.current {
            None => {
                if sig.is_some() {
                    return Err(IncrementalError::SignalAtStart);
                }
                true
            }
            Some(prev) if k == prev.time_increment() => {
                if sig.is_some() {
                    return Err(IncrementalError::UnexpectedSignal(k));
                }
                true
            }
            Some(prev) if k == prev.count_increment() => {
                if sig.is_none() {
                    return Err(IncrementalError::MissingSignal(k));
                }
                false
            }
            Some(prev) => return Err(IncrementalError::NotAdjacent { prev, next: k }),
        };
        let first = self.current.is_none();
        self.current = Some(k);
        let mut update = TickUpdate::default();

        let facts = self.encoder.facts(k, sig);
        for f in &facts {
            if let Some(e) = self.facts.get_mut(f) {
                e.refs += 1;
                continue;
            }
            let template = self.grounder.add_template(f);
            self.facts.insert(f.clone(), FactEntry { template, refs: 1 });
            update.added.push(AnnotatedRule::new(Annotation::FOREVER, f.clone()));
        }
        if self.cutoff.is_some() {
            self.history.push_back((k, facts));
        }
        let mut rules = Vec::new();
        if first {
            rules.extend(self.encoder.static_rules());
        }
        if new_time {
            rules.extend(self.encoder.time_rules(k.time));
        }
        rules.extend(self.encoder.tick_rules(k, sig));
        for r in rules {
            let r = AnnotatedRule::new(r.annotation.after(k), r.rule);
            if self.pi.contains_key(&r) {
                continue;
            }
            let id = self.grounder.add_template(&r.rule);
            if let Ext::Fin(t) = r.annotation.time {
                self.by_time.entry(t).or_default().push(r.clone());
            }
            if let Ext::Fin(c) = r.annotation.count {
                self.by_count.entry(c).or_default().push(r.clone());
            }
            self.pi.insert(r.clone(), id);
            update.added.push(r);
        }

        let mut expired: Vec<AnnotatedRule> = Vec::new();
        while let Some(e) = self.by_time.first_entry() {
            if *e.key() > k.time {
                break;
            }
            expired.extend(e.remove());
        }
        while let Some(e) = self.by_count.first_entry() {
            if *e.key() > k.count {
                break;
            }
            expired.extend(e.remove());
        }
        for r in expired {
            if let Some(id) = self.pi.remove(&r) {
                self.grounder.remove_template(id);
                update.expired.push(r);
            }
        }
        self.collect_garbage(k);
        update.delta = self.grounder.drain();
        Ok(update)
    }

    fn collect_garbage(&mut self, now: Tick) {
        let Some(cut) = self.cutoff else { return };
        while let Some((k, _)) = self.history.front() {
            if !cut.is_outdated(*k, now) {
                break;
            }
            let (_, facts) = self.history.pop_front().expect("nonempty");
            for f in facts {
                let e = self.facts.get_mut(&f).expect("recorded fact");
                e.refs -= 1;
                if e.refs == 0 {
                    let e = self.facts.remove(&f).expect("recorded fact");
                    self.grounder.remove_template(e.template);
                }
            }
        }
    }

    /// Advances through every tick of `d` after the current one.
    pub fn feed(&mut self, d: &TickStream) -> Result<(), IncrementalError> {
        for (k, sig) in d.iter() {
            if self.current.is_some_and(|c| (k.time, k.count) <= (c.time, c.count)) {
                continue;
            }
            self.increment_tick(k, sig)?;
        }
        Ok(())
    }

    /// Incremental rules with expiration ticks, one `[exp t,c] rule` per
    /// line, sorted.
    pub fn dump_rules(&self) -> String {
        let mut lines: Vec<String> = self
            .facts
            .keys()
            .map(|f| format!("[exp {}] {f}", Annotation::FOREVER))
            .chain(self.pi.keys().map(|r| format!("[exp {}] {}", r.annotation, r.rule)))
            .collect();
        lines.sort();
        lines.join("\n")
    }

    /// Ground rules with the latest expiration of the rules they stem
    /// from.
    pub fn dump_ground(&self) -> String {
        let table = self.grounder.atoms();
        let mut exp: BTreeMap<String, Annotation> = BTreeMap::new();
        let sources = self
            .facts
            .values()
            .map(|e| (Annotation::FOREVER, e.template))
            .chain(self.pi.iter().map(|(r, id)| (r.annotation, *id)));
        for (a, id) in sources {
            for g in self.grounder.instances(id) {
                let e = exp.entry(g.display(table).to_string()).or_insert(a);
                *e = (*e).max(a);
            }
        }
        exp.into_iter()
            .map(|(r, a)| format!("[exp {a}] {r}"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// The incremental program of `p` for `d` at its last tick.
pub fn incremental_program(p: &LarsProgram, d: &TickStream) -> Result<GroundProgram, IncrementalError> {
    let pre = pre_ground(p, false)?;
    let mut s = IncrementalState::new(p, &pre);
    s.feed(d)?;
    Ok(s.program())
}
