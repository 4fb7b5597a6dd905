//! Reference semantics: window functions, satisfaction of extended atoms,
//! the reduct, and a brute-force answer-stream enumerator used as an
//! oracle in tests.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{
    underlying_stream, Atom, Constant, ExtendedAtom, GuardEval, Head, LarsProgram, LarsRule, Modality, Stream,
    StreamError, Substitution, Symbol, Term, Tick, TickStream, WindowSpec,
};

/// `τ_n(s, t)`: the substream on `[max(t1, t-n), t]`.
pub fn time_window(s: &Stream, t: u64, n: u64) -> Result<Stream, StreamError> {
    check_time(s, t)?;
    Ok(s.restrict(s.start.max(t.saturating_sub(n)), t))
}

/// `τ_n(s, k)` over a tick stream: ticks with time in `[max(t1, t-n), t]`
/// up to `k`.
pub fn tick_time_window(s: &TickStream, k: Tick, n: u64) -> Result<TickStream, StreamError> {
    let i = s.position(k).ok_or(StreamError::UnknownTick(k))?;
    let lo = s.first().time.max(k.time.saturating_sub(n));
    let from = s.ticks()[..=i].partition_point(|x| x.time < lo);
    Ok(s.prefix(k)?.suffix_from(from))
}

/// `#_n(s, k)`: ticks with count in `[max(c1, c-n+1), c]` up to `k`.
pub fn tuple_window(s: &TickStream, k: Tick, n: u64) -> Result<TickStream, StreamError> {
    if n == 0 {
        return Err(StreamError::ZeroTupleWindow);
    }
    let i = s.position(k).ok_or(StreamError::UnknownTick(k))?;
    let lo = s.first().count.max((k.count + 1).saturating_sub(n));
    let from = s.ticks()[..=i].partition_point(|x| x.count < lo);
    Ok(s.prefix(k)?.suffix_from(from))
}

fn check_time(s: &Stream, t: u64) -> Result<(), StreamError> {
    if s.contains_time(t) {
        Ok(())
    } else {
        Err(StreamError::OutsideTimeline {
            time: t,
            start: s.start,
            end: s.end,
        })
    }
}

/// How tuple windows count atoms of an interpretation stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TupleCounting {
    /// Only stream data is counted, in arrival order. This is what the
    /// encodings implement.
    #[default]
    DataOnly,
    /// Inferred atoms are counted too, after the data of their time point
    /// and in atom order.
    AllAtoms,
}

/// An interpretation stream together with the arrival order used by tuple
/// windows and the background facts.
#[derive(Clone, Debug)]
pub struct Interpretation {
    pub stream: Stream,
    pub order: TickStream,
    pub background: BTreeSet<Atom>,
    pub counting: TupleCounting,
}

impl Interpretation {
    /// The data stream itself, extended with time increments up to `t`.
    pub fn from_data(data: &TickStream, t: u64, background: BTreeSet<Atom>) -> Self {
        Self::with_inferences(data, t, background, &BTreeMap::new(), TupleCounting::DataOnly)
    }

    /// Data plus inferred atoms per time point.
    pub fn with_inferences(
        data: &TickStream,
        t: u64,
        background: BTreeSet<Atom>,
        inferred: &BTreeMap<u64, BTreeSet<Atom>>,
        counting: TupleCounting,
    ) -> Self {
        let mut d = data.clone();
        d.advance(t, []);
        let mut stream = underlying_stream(&d);
        for (u, atoms) in inferred {
            for a in atoms {
                stream.insert(*u, a.clone()).expect("inferences lie in the timeline");
            }
        }
        let order = match counting {
            TupleCounting::DataOnly => d,
            TupleCounting::AllAtoms => {
                let mut o = TickStream::starting_at(d.first());
                let mut by_time: BTreeMap<u64, Vec<Atom>> = BTreeMap::new();
                for (k, a) in d.iter() {
                    if let Some(a) = a {
                        by_time.entry(k.time).or_default().push(a.clone());
                    }
                }
                for (u, atoms) in inferred {
                    by_time.entry(*u).or_default().extend(atoms.iter().cloned());
                }
                for (u, atoms) in by_time {
                    o.advance(u, atoms);
                }
                o.advance(t, []);
                o
            }
        };
        Interpretation {
            stream,
            order,
            background,
            counting,
        }
    }

    fn holds_in(&self, s: &Stream, u: u64, a: &Atom) -> bool {
        s.holds(u, a) || self.background.contains(a)
    }

    /// The substream selected by `spec` at time `t`.
    pub fn window(&self, spec: WindowSpec, t: u64) -> Stream {
        match spec {
            WindowSpec::Time(n) => time_window(&self.stream, t, n).expect("t in timeline"),
            WindowSpec::TimeInf => self.stream.restrict(self.stream.start, t),
            WindowSpec::Tuple(n) => {
                let k = self.order.prefix_until_time(t).last();
                let w = tuple_window(&self.order, k, n).expect("k is a tick of the order");
                let t0 = w.first().time;
                let mut out = underlying_stream(&w);
                out.end = t;
                if self.counting == TupleCounting::DataOnly {
                    let data = underlying_stream(&self.order);
                    for (u, atoms) in self.stream.restrict(t0, t).points() {
                        for a in atoms.iter().filter(|a| !data.holds(u, a)) {
                            out.insert(u, a.clone()).expect("u in window");
                        }
                    }
                }
                out
            }
        }
    }
}

fn time_value(t: &Term) -> Option<u64> {
    match t.as_const()? {
        Constant::Int(i) if *i >= 0 => Some(*i as u64),
        _ => None,
    }
}

/// `M, t ⊨ e` for a ground extended atom.
pub fn satisfies(m: &Interpretation, t: u64, e: &ExtendedAtom) -> bool {
    match e {
        ExtendedAtom::Plain(a) => m.holds_in(&m.stream, t, a),
        ExtendedAtom::At(tt, a) => match time_value(tt) {
            Some(u) => m.stream.contains_time(u) && m.holds_in(&m.stream, u, a),
            None => false,
        },
        ExtendedAtom::Window(spec, modality, a) => {
            let w = m.window(*spec, t);
            match modality {
                Modality::Diamond => (w.start..=w.end).any(|u| m.holds_in(&w, u, a)),
                Modality::Box => (w.start..=w.end).all(|u| m.holds_in(&w, u, a)),
                Modality::At(tt) => match time_value(tt) {
                    Some(u) => w.contains_time(u) && m.holds_in(&w, u, a),
                    None => false,
                },
            }
        }
    }
}

/// `M, t ⊨ β(r)`.
pub fn body_holds(m: &Interpretation, t: u64, r: &LarsRule) -> bool {
    r.pos.iter().all(|e| satisfies(m, t, e)) && !r.neg.iter().any(|e| satisfies(m, t, e))
}

/// `M, t ⊨ H(r)`.
pub fn head_holds(m: &Interpretation, t: u64, h: &Head) -> bool {
    match h {
        Head::Plain(a) => satisfies(m, t, &ExtendedAtom::Plain(a.clone())),
        Head::At(tt, a) => satisfies(m, t, &ExtendedAtom::At(tt.clone(), a.clone())),
    }
}

/// `P^{M,t}`: the ground rules whose body holds.
pub fn reduct<'a>(rules: &'a [LarsRule], m: &Interpretation, t: u64) -> Vec<&'a LarsRule> {
    rules.iter().filter(|r| body_holds(m, t, r)).collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle infeasible: {candidates} candidate inferences exceed the cap of {cap}")]
    Infeasible { candidates: usize, cap: usize },
    #[error("evaluation time {t} precedes the end of the data stream at {end}")]
    TimeBeforeData { t: u64, end: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    /// Maximum number of candidate intensional `@`-atoms.
    pub cap: usize,
    pub counting: TupleCounting,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            cap: 24,
            counting: TupleCounting::DataOnly,
        }
    }
}

/// All ground instances of `p` over the constants of `p`, its background,
/// the data, and the time points `0..=t`. Comparison guards are resolved;
/// instances with a plain background atom outside the background are
/// dropped.
pub fn ground_lars(p: &LarsProgram, data: &TickStream, t: u64) -> Vec<LarsRule> {
    let mut domain: BTreeSet<Constant> = (0..=t as i64).map(Constant::Int).collect();
    let collect = |domain: &mut BTreeSet<Constant>, a: &Atom| {
        domain.extend(a.args.iter().filter_map(Term::as_const).cloned());
    };
    for r in &p.rules {
        collect(&mut domain, r.head.atom());
        for (_, e) in r.body() {
            collect(&mut domain, e.atom());
            if let Some(Term::Const(c)) = e.time_term() {
                domain.insert(c.clone());
            }
        }
        for g in &r.guards {
            for side in [&g.lhs.term, &g.rhs.term] {
                if let Term::Const(c) = side {
                    domain.insert(c.clone());
                }
            }
        }
    }
    for a in &p.background {
        collect(&mut domain, a);
    }
    for (_, a) in data.iter() {
        if let Some(a) = a {
            collect(&mut domain, a);
        }
    }
    let domain: Vec<Constant> = domain.into_iter().collect();
    let background_preds = p.background_predicates();
    let mut out = Vec::new();
    for r in &p.rules {
        let vars: Vec<Symbol> = r.variables().into_iter().collect();
        let mut subst = Substitution::new();
        enumerate(r, &vars, &domain, &mut subst, &mut |s| {
            let g = LarsRule {
                guards: Vec::new(),
                ..r.substitute(s)
            };
            let background_ok = g.pos.iter().all(|e| match e {
                ExtendedAtom::Plain(a) if background_preds.contains(&a.predicate) => p.background.contains(a),
                _ => true,
            });
            if background_ok {
                out.push(g);
            }
        });
    }
    out.sort();
    out.dedup();
    out
}

fn enumerate(
    r: &LarsRule,
    vars: &[Symbol],
    domain: &[Constant],
    subst: &mut Substitution,
    emit: &mut dyn FnMut(&Substitution),
) {
    for g in &r.guards {
        let ready = g.variables().all(|v| subst.contains_key(v));
        if ready && g.eval(subst) != GuardEval::True {
            return;
        }
    }
    let Some((v, rest)) = vars.split_first() else {
        emit(subst);
        return;
    };
    for c in domain {
        subst.insert(v.clone(), c.clone());
        enumerate(r, rest, domain, subst, emit);
    }
    subst.remove(v);
}

/// All answer streams of `p` for `data` at `t` with the default
/// configuration.
pub fn answer_streams_bruteforce(
    p: &LarsProgram,
    data: &TickStream,
    t: u64,
) -> Result<BTreeSet<Stream>, OracleError> {
    answer_streams_with(p, data, t, OracleConfig::default())
}

/// All answer streams by enumerating every set of candidate inferences and
/// testing minimality against every proper subset.
///
/// Candidates are the head atoms of ground rules whose positive body can
/// hold when every candidate is assumed true (a monotone over-approximation
/// under data-only tuple counting).
pub fn answer_streams_with(
    p: &LarsProgram,
    data: &TickStream,
    t: u64,
    cfg: OracleConfig,
) -> Result<BTreeSet<Stream>, OracleError> {
    if t < data.last().time {
        return Err(OracleError::TimeBeforeData {
            t,
            end: data.last().time,
        });
    }
    let rules = ground_lars(p, data, t);
    let base = Interpretation::from_data(data, t, p.background.clone());
    let start = base.stream.start;
    let head_key = |h: &Head| -> Option<(u64, Atom)> {
        let (u, a) = match h {
            Head::Plain(a) => (Some(t), a),
            Head::At(tt, a) => (time_value(tt), a),
        };
        let u = u.filter(|u| (start..=t).contains(u))?;
        let ok = !p.is_extensional(&a.predicate) && !base.holds_in(&base.stream, u, a);
        ok.then(|| (u, a.clone()))
    };

    let candidates: BTreeSet<(u64, Atom)> = match cfg.counting {
        TupleCounting::DataOnly => {
            let sym: Vec<SymRule> = rules.iter().map(|r| symbolic_rule(r, &base, t)).collect();
            let mut possible: BTreeSet<(u64, Atom)> = BTreeSet::new();
            let mut fired = vec![false; sym.len()];
            loop {
                let mut changed = false;
                for (i, r) in sym.iter().enumerate() {
                    if fired[i] || !r.pos.iter().all(|l| l.possible(&possible)) {
                        continue;
                    }
                    fired[i] = true;
                    if let Some(k) = head_key(&rules[i].head) {
                        changed |= possible.insert(k);
                    }
                }
                if !changed {
                    break;
                }
            }
            possible
        }
        TupleCounting::AllAtoms => rules.iter().filter_map(|r| head_key(&r.head)).collect(),
    };
    if candidates.len() > cfg.cap.min(63) {
        return Err(OracleError::Infeasible {
            candidates: candidates.len(),
            cap: cfg.cap,
        });
    }
    let candidates: Vec<(u64, Atom)> = candidates.into_iter().collect();
    let index: BTreeMap<&(u64, Atom), usize> = candidates.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let to_stream = |mask: u64| -> Stream {
        let mut s = base.stream.clone();
        for (i, (u, a)) in candidates.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.insert(*u, a.clone()).expect("candidate in timeline");
            }
        }
        s
    };

    let accepted: Vec<u64> = match cfg.counting {
        TupleCounting::DataOnly => {
            let compiled: Vec<CompiledRule> = rules
                .iter()
                .map(|r| symbolic_rule(r, &base, t).compile(&index))
                .filter(|r| !r.pos.iter().any(|l| matches!(l, Lit::Const(false) | Lit::Any(0))))
                .collect();
            let mut out = Vec::new();
            for mask in 0..(1u64 << candidates.len()) {
                if !compiled.iter().all(|r| r.satisfied(mask)) {
                    continue;
                }
                let red: Vec<&CompiledRule> = compiled.iter().filter(|r| r.body(mask)).collect();
                if proper_subsets(mask).all(|sub| !red.iter().all(|r| r.satisfied(sub))) {
                    out.push(mask);
                }
            }
            out
        }
        TupleCounting::AllAtoms => {
            let interp = |mask: u64| {
                let mut inferred: BTreeMap<u64, BTreeSet<Atom>> = BTreeMap::new();
                for (i, (u, a)) in candidates.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        inferred.entry(*u).or_default().insert(a.clone());
                    }
                }
                Interpretation::with_inferences(data, t, p.background.clone(), &inferred, TupleCounting::AllAtoms)
            };
            let models_of = |rs: &[&LarsRule], mask: u64| {
                let m = interp(mask);
                rs.iter().all(|r| !body_holds(&m, t, r) || head_holds(&m, t, &r.head))
            };
            let all: Vec<&LarsRule> = rules.iter().collect();
            let mut out = Vec::new();
            for mask in 0..(1u64 << candidates.len()) {
                if !models_of(&all, mask) {
                    continue;
                }
                let m = interp(mask);
                let red = reduct(&rules, &m, t);
                if proper_subsets(mask).all(|sub| !models_of(&red, sub)) {
                    out.push(mask);
                }
            }
            out
        }
    };
    Ok(accepted.into_iter().map(to_stream).collect())
}

fn proper_subsets(mask: u64) -> impl Iterator<Item = u64> {
    let mut sub = mask;
    let mut done = mask == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        sub = sub.wrapping_sub(1) & mask;
        if sub == 0 {
            done = true;
        }
        Some(sub)
    })
}

/// A ground literal in terms of the points `(time, atom)` not already fixed
/// by data or background.
enum SymLit {
    Const(bool),
    Any(Vec<(u64, Atom)>),
    All(Vec<(u64, Atom)>),
}

impl SymLit {
    fn possible(&self, set: &BTreeSet<(u64, Atom)>) -> bool {
        match self {
            SymLit::Const(b) => *b,
            SymLit::Any(ks) => ks.iter().any(|k| set.contains(k)),
            SymLit::All(ks) => ks.iter().all(|k| set.contains(k)),
        }
    }

    fn compile(&self, index: &BTreeMap<&(u64, Atom), usize>) -> Lit {
        match self {
            SymLit::Const(b) => Lit::Const(*b),
            SymLit::Any(ks) => Lit::Any(ks.iter().filter_map(|k| index.get(k)).fold(0, |m, i| m | 1 << i)),
            SymLit::All(ks) => {
                let mut bits = 0u64;
                for k in ks {
                    match index.get(k) {
                        Some(i) => bits |= 1 << i,
                        None => return Lit::Const(false),
                    }
                }
                Lit::All(bits)
            }
        }
    }
}

struct SymRule {
    head: SymLit,
    pos: Vec<SymLit>,
    neg: Vec<SymLit>,
}

impl SymRule {
    fn compile(&self, index: &BTreeMap<&(u64, Atom), usize>) -> CompiledRule {
        CompiledRule {
            head: self.head.compile(index),
            pos: self.pos.iter().map(|l| l.compile(index)).collect(),
            neg: self.neg.iter().map(|l| l.compile(index)).collect(),
        }
    }
}

/// Truth of a ground literal as a function of the candidate bit mask.
#[derive(Clone, Copy, Debug)]
enum Lit {
    Const(bool),
    Any(u64),
    All(u64),
}

impl Lit {
    fn eval(self, m: u64) -> bool {
        match self {
            Lit::Const(b) => b,
            Lit::Any(bits) => m & bits != 0,
            Lit::All(bits) => m & bits == bits,
        }
    }
}

struct CompiledRule {
    head: Lit,
    pos: Vec<Lit>,
    neg: Vec<Lit>,
}

impl CompiledRule {
    fn body(&self, m: u64) -> bool {
        self.pos.iter().all(|l| l.eval(m)) && !self.neg.iter().any(|l| l.eval(m))
    }

    fn satisfied(&self, m: u64) -> bool {
        !self.body(m) || self.head.eval(m)
    }
}

fn symbolic_rule(r: &LarsRule, base: &Interpretation, t: u64) -> SymRule {
    let point = |w: &Stream, u: u64, a: &Atom| -> Option<(u64, Atom)> {
        (!base.holds_in(w, u, a)).then(|| (u, a.clone()))
    };
    let single = |p: Option<(u64, Atom)>| match p {
        None => SymLit::Const(true),
        Some(k) => SymLit::All(vec![k]),
    };
    let at = |w: &Stream, tt: &Term, a: &Atom| match time_value(tt) {
        Some(u) if w.contains_time(u) => single(point(w, u, a)),
        _ => SymLit::Const(false),
    };
    let lit = |e: &ExtendedAtom| -> SymLit {
        match e {
            ExtendedAtom::Plain(a) => single(point(&base.stream, t, a)),
            ExtendedAtom::At(tt, a) => at(&base.stream, tt, a),
            ExtendedAtom::Window(spec, modality, a) => {
                let w = base.window(*spec, t);
                let mut keys = Vec::new();
                for u in w.start..=w.end {
                    match point(&w, u, a) {
                        None if *modality == Modality::Diamond => return SymLit::Const(true),
                        None => {}
                        Some(k) => keys.push(k),
                    }
                }
                match modality {
                    Modality::At(tt) => at(&w, tt, a),
                    Modality::Diamond => SymLit::Any(keys),
                    Modality::Box => SymLit::All(keys),
                }
            }
        }
    };
    let head = match &r.head {
        Head::Plain(a) => single(point(&base.stream, t, a)),
        Head::At(tt, a) => at(&base.stream, tt, a),
    };
    SymRule {
        head,
        pos: r.pos.iter().map(lit).collect(),
        neg: r.neg.iter().map(lit).collect(),
    }
}
