//! Static encoding of a LARS program at a fixed time point, the stream
//! encoding, and the read-back of answer sets.

use std::collections::BTreeSet;

use crate::asp::{AspProgram, AspRule};
use crate::model::{
    Atom, BodyPos, CmpOp, Constant, Expr, ExtendedAtom, Guard, Head, LarsProgram, LarsRule, Modality, Stream,
    Symbol, Term, TickStream, WindowSpec,
};
use crate::parser::RESERVED_PREDICATES;

/// Predicate names introduced by the encodings. User predicates never
/// contain `_`, so every name built here is fresh.
pub struct AuxNames;

impl AuxNames {
    pub fn at(pred: &Symbol) -> Symbol {
        format!("{pred}_at").into()
    }

    pub fn tick(pred: &Symbol) -> Symbol {
        format!("{pred}_tick").into()
    }

    pub fn window(rule: usize, pos: BodyPos, spec: WindowSpec, modality: &Modality, pred: &Symbol) -> WindowNames {
        let spec = match spec {
            WindowSpec::Time(n) => format!("t{n}"),
            WindowSpec::Tuple(n) => format!("c{n}"),
            WindowSpec::TimeInf => "inf".to_string(),
        };
        let m = match modality {
            Modality::Diamond => "dia",
            Modality::Box => "box",
            Modality::At(_) => "at",
        };
        let key = format!("{rule}_{pos}_{spec}_{m}_{pred}");
        WindowNames {
            omega: format!("w_{key}").into(),
            spoil: format!("spoil_{key}").into(),
            covers_time: format!("covt_{key}").into(),
            covers_count: format!("covc_{key}").into(),
            in_window: format!("inw_{key}").into(),
        }
    }

    /// Encoding-internal predicates: anything with `_`, plus `now`, `cnt`
    /// and `tick`.
    pub fn is_auxiliary(pred: &str) -> bool {
        pred.contains('_') || RESERVED_PREDICATES.contains(&pred)
    }

    /// `p` for a time-pinned predicate `p_at` of a user predicate `p`.
    pub fn unpin(pred: &str) -> Option<&str> {
        pred.strip_suffix("_at").filter(|p| !p.is_empty() && !p.contains('_'))
    }
}

/// Fresh predicates of one window atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowNames {
    pub omega: Symbol,
    pub spoil: Symbol,
    pub covers_time: Symbol,
    pub covers_count: Symbol,
    pub in_window: Symbol,
}

pub(crate) fn pinned(pred: &Symbol, args: &[Term], extra: impl IntoIterator<Item = Term>) -> Atom {
    let mut args = args.to_vec();
    args.extend(extra);
    Atom::new(AuxNames::at(pred), args)
}

pub(crate) fn tick_pinned(pred: &Symbol, args: &[Term], t: Term, c: Term) -> Atom {
    let mut args = args.to_vec();
    args.push(t);
    args.push(c);
    Atom::new(AuxNames::tick(pred), args)
}

pub(crate) fn now(t: Term) -> Atom {
    Atom::new("now", vec![t])
}

pub(crate) fn cnt(c: Term) -> Atom {
    Atom::new("cnt", vec![c])
}

pub(crate) fn tick(t: Term, c: Term) -> Atom {
    Atom::new("tick", vec![t, c])
}

pub(crate) fn names_of(rule: usize, pos: BodyPos, e: &ExtendedAtom) -> Option<WindowNames> {
    match e {
        ExtendedAtom::Window(spec, m, a) => Some(AuxNames::window(rule, pos, *spec, m, &a.predicate)),
        _ => None,
    }
}

/// The ordinary atom standing for an extended atom.
pub fn atm(rule: usize, pos: BodyPos, e: &ExtendedAtom) -> Atom {
    match e {
        ExtendedAtom::Plain(a) => a.clone(),
        ExtendedAtom::At(t, a) => pinned(&a.predicate, &a.args, [t.clone()]),
        ExtendedAtom::Window(_, m, a) => {
            let names = names_of(rule, pos, e).expect("window atom");
            let mut args = a.args.clone();
            if let Modality::At(t) = m {
                args.push(t.clone());
            }
            Atom::new(names.omega, args)
        }
    }
}

pub fn head_atom(h: &Head) -> Atom {
    match h {
        Head::Plain(a) => a.clone(),
        Head::At(t, a) => pinned(&a.predicate, &a.args, [t.clone()]),
    }
}

/// `atm(h) :- atm(e1), ..., not atm(em), guards.` for rule number `index`.
pub fn base_rule(index: usize, r: &LarsRule) -> AspRule {
    AspRule {
        head: head_atom(&r.head),
        pos: r
            .pos
            .iter()
            .enumerate()
            .map(|(i, e)| atm(index, BodyPos::Pos(i), e))
            .collect(),
        neg: r
            .neg
            .iter()
            .enumerate()
            .map(|(i, e)| atm(index, BodyPos::Neg(i), e))
            .collect(),
        guards: r.guards.clone(),
    }
}

/// Variable names that avoid the variables of a rule.
pub struct Fresh {
    taken: BTreeSet<Symbol>,
}

impl Fresh {
    pub fn new(r: &LarsRule) -> Self {
        Fresh { taken: r.variables() }
    }

    pub fn var(&mut self, base: &str) -> Term {
        let mut name = base.to_string();
        let mut i = 1;
        while self.taken.contains(name.as_str()) {
            name = format!("{base}{i}");
            i += 1;
        }
        let s = Symbol::from(name);
        self.taken.insert(s.clone());
        Term::Var(s)
    }
}

fn guard(l: Expr, op: CmpOp, r: Expr) -> Guard {
    Guard::new(l, op, r)
}

fn var(t: &Term) -> Expr {
    Expr::term(t.clone())
}

/// Rules deriving the encoded atom of window atom `e` at body position
/// `pos` of rule `index`.
pub fn window_rules(index: usize, pos: BodyPos, e: &ExtendedAtom, fresh: &mut Fresh) -> Vec<AspRule> {
    let ExtendedAtom::Window(spec, m, a) = e else { return Vec::new() };
    let names = names_of(index, pos, e).expect("window atom");
    let x = &a.args;
    let omega = |extra: Option<Term>| Atom::new(names.omega.clone(), x.iter().cloned().chain(extra).collect());
    let spoil = Atom::new(names.spoil.clone(), x.clone());
    let static_rule = || AspRule::new(omega(None), vec![a.clone()], vec![spoil.clone()]);
    let mut out = Vec::new();
    match (spec, m) {
        (WindowSpec::Time(n), Modality::At(_) | Modality::Diamond) => {
            let nn = fresh.var("N");
            let t = match m {
                Modality::At(t) => t.clone(),
                _ => fresh.var("T"),
            };
            let head = omega(matches!(m, Modality::At(_)).then(|| t.clone()));
            for i in 0..=*n {
                out.push(
                    AspRule::new(head.clone(), vec![now(nn.clone()), pinned(&a.predicate, x, [t.clone()])], vec![])
                        .with_guards(vec![guard(var(&t), CmpOp::Eq, Expr::minus(nn.clone(), i as i64))]),
                );
            }
        }
        (WindowSpec::Time(n), Modality::Box) => {
            let nn = fresh.var("N");
            let t = fresh.var("T");
            out.push(static_rule());
            for i in 1..=*n {
                out.push(
                    AspRule::new(spoil.clone(), vec![a.clone(), now(nn.clone())], vec![pinned(&a.predicate, x, [t.clone()])])
                        .with_guards(vec![guard(var(&t), CmpOp::Eq, Expr::minus(nn.clone(), i as i64))]),
                );
            }
        }
        (WindowSpec::Tuple(n), Modality::At(_) | Modality::Diamond) => {
            let c = fresh.var("C");
            let d = fresh.var("D");
            let t = match m {
                Modality::At(t) => t.clone(),
                _ => fresh.var("T"),
            };
            let head = omega(matches!(m, Modality::At(_)).then(|| t.clone()));
            for j in 0..*n {
                out.push(
                    AspRule::new(
                        head.clone(),
                        vec![cnt(c.clone()), tick_pinned(&a.predicate, x, t.clone(), d.clone())],
                        vec![],
                    )
                    .with_guards(vec![guard(var(&d), CmpOp::Eq, Expr::minus(c.clone(), j as i64))]),
                );
            }
        }
        (WindowSpec::Tuple(n), Modality::Box) => {
            let c = fresh.var("C");
            let t = fresh.var("T");
            let d = fresh.var("D");
            let d2 = fresh.var("D'");
            let back = (*n as i64) - 1;
            let inw = Atom::new(names.in_window.clone(), x.iter().cloned().chain([t.clone()]).collect());
            out.push(static_rule());
            out.push(
                AspRule::new(
                    spoil.clone(),
                    vec![a.clone(), cnt(c.clone()), tick(t.clone(), d.clone())],
                    vec![pinned(&a.predicate, x, [t.clone()])],
                )
                .with_guards(vec![
                    guard(Expr::minus(c.clone(), back), CmpOp::Le, var(&d)),
                    guard(var(&d), CmpOp::Le, var(&c)),
                ]),
            );
            out.push(
                AspRule::new(
                    spoil.clone(),
                    vec![
                        a.clone(),
                        cnt(c.clone()),
                        tick(t.clone(), d.clone()),
                        tick_pinned(&a.predicate, x, t.clone(), d2.clone()),
                    ],
                    vec![inw.clone()],
                )
                .with_guards(vec![
                    guard(var(&d), CmpOp::Eq, Expr::minus(c.clone(), back)),
                    guard(var(&d2), CmpOp::Lt, var(&d)),
                ]),
            );
            out.push(
                AspRule::new(
                    inw,
                    vec![cnt(c.clone()), tick_pinned(&a.predicate, x, t.clone(), d.clone())],
                    vec![],
                )
                .with_guards(vec![guard(var(&d), CmpOp::Ge, Expr::minus(c.clone(), back))]),
            );
        }
        (WindowSpec::TimeInf, Modality::At(_) | Modality::Diamond) => {
            let t = match m {
                Modality::At(t) => t.clone(),
                _ => fresh.var("T"),
            };
            let head = omega(matches!(m, Modality::At(_)).then(|| t.clone()));
            out.push(AspRule::new(head, vec![pinned(&a.predicate, x, [t])], vec![]));
        }
        (WindowSpec::TimeInf, Modality::Box) => {
            let nn = fresh.var("N");
            let t = fresh.var("T");
            let d = fresh.var("D");
            out.push(static_rule());
            out.push(
                AspRule::new(
                    spoil.clone(),
                    vec![a.clone(), now(nn.clone()), tick(t.clone(), d)],
                    vec![pinned(&a.predicate, x, [t.clone()])],
                )
                .with_guards(vec![guard(var(&t), CmpOp::Lt, var(&nn))]),
            );
        }
    }
    out
}

/// Base rule followed by the window rules of every body atom.
pub fn lars_to_asp_rules(index: usize, r: &LarsRule) -> Vec<AspRule> {
    let mut fresh = Fresh::new(r);
    let mut out = vec![base_rule(index, r)];
    for (pos, e) in r.body() {
        out.extend(window_rules(index, pos, e, &mut fresh));
    }
    out
}

/// Predicates that get bridge rules: every rule or extensional predicate
/// except those only ever given as background facts.
pub fn bridged_predicates(p: &LarsProgram) -> BTreeSet<(Symbol, usize)> {
    let background = p.background_predicates();
    let mut preds = p.rule_predicates();
    preds.extend(p.extensional.iter().map(|(s, k)| (s.clone(), *k)));
    preds.retain(|(s, _)| !background.contains(s));
    preds
}

/// The two bridge rules of a predicate, with the time variable `n` (a
/// variable for the static encoding, a constant once pinned).
pub fn bridge_rules(pred: &Symbol, arity: usize, n: Term, with_now: bool) -> [AspRule; 2] {
    let x: Vec<Term> = (1..=arity).map(|i| Term::var(&format!("X{i}"))).collect();
    let plain = Atom::new(pred.clone(), x.clone());
    let at = pinned(pred, &x, [n.clone()]);
    let now_atom: Vec<Atom> = if with_now { vec![now(n)] } else { vec![] };
    [
        AspRule::new(plain.clone(), now_atom.iter().cloned().chain([at.clone()]).collect(), vec![]),
        AspRule::new(at, now_atom.into_iter().chain([plain]).collect(), vec![]),
    ]
}

/// Bridge rules, rule encodings, background facts and `now(t)`.
pub fn lars_to_asp(p: &LarsProgram, t: u64) -> AspProgram {
    let mut out = AspProgram::default();
    for (pred, arity) in bridged_predicates(p) {
        out.extend(bridge_rules(&pred, arity, Term::var("N"), true));
    }
    for (i, r) in p.rules.iter().enumerate() {
        out.extend(lars_to_asp_rules(i, r));
    }
    out.extend(p.background.iter().cloned().map(AspRule::fact));
    out.push(AspRule::fact(now(Term::int(t as i64))));
    out
}

/// Facts for a data tick stream: time- and tick-pinned signals, `tick(t,c)`
/// per tick and `cnt` of the last tick. Data streams carry extensional
/// atoms only.
pub fn encode_stream(d: &TickStream) -> Vec<AspRule> {
    let mut out = Vec::new();
    for (k, sig) in d.iter() {
        let (t, c) = (Term::int(k.time as i64), Term::int(k.count as i64));
        out.push(AspRule::fact(tick(t.clone(), c.clone())));
        if let Some(a) = sig {
            out.push(AspRule::fact(pinned(&a.predicate, &a.args, [t.clone()])));
            out.push(AspRule::fact(tick_pinned(&a.predicate, &a.args, t, c)));
        }
    }
    out.push(AspRule::fact(cnt(Term::int(d.last().count as i64))));
    out
}

/// Static encoding plus stream facts: the one-shot program at the last
/// tick of `d`, evaluated at time `t`.
pub fn one_shot_program(p: &LarsProgram, d: &TickStream, t: u64) -> AspProgram {
    let mut prog = lars_to_asp(p, t);
    prog.extend(encode_stream(d));
    prog
}

/// Plain user atoms of an answer set: the atoms that hold now, minus
/// background-only predicates.
pub fn strip_auxiliary(answer: &BTreeSet<Atom>, p: &LarsProgram) -> BTreeSet<Atom> {
    let background = p.background_predicates();
    answer
        .iter()
        .filter(|a| !AuxNames::is_auxiliary(a.predicate.as_str()) && !background.contains(&a.predicate))
        .cloned()
        .collect()
}

/// The stream over `[start, t]` an answer set encodes: pinned atoms at
/// their time, plain atoms at `t`.
pub fn read_back(answer: &BTreeSet<Atom>, p: &LarsProgram, start: u64, t: u64) -> Stream {
    let mut s = Stream::new(start, t);
    for a in answer {
        if let Some(pred) = AuxNames::unpin(a.predicate.as_str()) {
            let Some((last, args)) = a.args.split_last() else { continue };
            if let Term::Const(Constant::Int(u)) = last {
                if *u >= 0 && (start..=t).contains(&(*u as u64)) {
                    s.insert(*u as u64, Atom::new(pred, args.to_vec())).expect("inside the timeline");
                }
            }
        }
    }
    for a in strip_auxiliary(answer, p) {
        s.insert(t, a).expect("inside the timeline");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::{answer_sets, ground_program};
    use crate::model::sorted_ordering;
    use crate::parser::parse_program;

    fn lines(p: &AspProgram) -> Vec<String> {
        p.rules.iter().map(|r| r.to_string()).collect()
    }

    #[test]
    fn diamond_window_encoding_text() {
        let p = parse_program("#ext a/1. b(X) :- [2 t] <> a(X).").unwrap();
        let text = lars_to_asp(&p, 7).to_string();
        assert_eq!(
            text,
            "\
a(X1) :- now(N), a_at(X1,N).
a_at(X1,N) :- now(N), a(X1).
b(X1) :- now(N), b_at(X1,N).
b_at(X1,N) :- now(N), b(X1).
b(X) :- w_0_p0_t2_dia_a(X).
w_0_p0_t2_dia_a(X) :- now(N), a_at(X,T), T = N.
w_0_p0_t2_dia_a(X) :- now(N), a_at(X,T), T = N - 1.
w_0_p0_t2_dia_a(X) :- now(N), a_at(X,T), T = N - 2.
now(7).
"
        );
    }

    #[test]
    fn empty_program_is_now_only() {
        assert_eq!(lines(&lars_to_asp(&LarsProgram::default(), 3)), vec!["now(3)."]);
    }

    #[test]
    fn at_head_is_pinned() {
        let p = parse_program("#ext a/0. @T b :- @T a.").unwrap();
        assert_eq!(base_rule(0, &p.rules[0]).to_string(), "b_at(T) :- a_at(T).");
    }

    #[test]
    fn stream_encoding() {
        let s = Stream::new(0, 4).with(3, [Atom::prop("a"), Atom::prop("b")]);
        let d = sorted_ordering(&s);
        let facts: BTreeSet<String> = encode_stream(&d).iter().map(|r| r.to_string()).collect();
        let expected: BTreeSet<String> = [
            "a_at(3).", "b_at(3).", "a_tick(3,1).", "b_tick(3,2).", "cnt(2).", "tick(0,0).", "tick(1,0).",
            "tick(2,0).", "tick(3,0).", "tick(3,1).", "tick(3,2).", "tick(4,2).",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(facts, expected);
    }

    #[test]
    fn one_shot_answer_set() {
        let p = parse_program("#ext a/1. b(X) :- [2 t] <> a(X).").unwrap();
        let mut d = TickStream::new();
        d.advance(5, [Atom::new("a", vec![Term::sym("y")])]);
        d.advance(7, []);
        let g = ground_program(&one_shot_program(&p, &d, 7));
        let models = answer_sets(&g, 2).unwrap();
        assert_eq!(models.len(), 1);
        let m: BTreeSet<String> = models[0].iter().map(|a| a.to_string()).collect();
        for a in ["a_at(y,5)", "a_tick(y,5,1)", "b_at(y,7)", "b(y)", "w_0_p0_t2_dia_a(y)", "now(7)", "cnt(1)"] {
            assert!(m.contains(a), "{a} missing from {m:?}");
        }
        assert_eq!(strip_auxiliary(&models[0], &p), [Atom::new("b", vec![Term::sym("y")])].into());
    }

    #[test]
    fn tuple_box_spoils_by_count() {
        // Ticks (3,1) a, (3,2) b, (4,3) a: the window of two tuples starts
        // at count 2 within time 3, so the earlier `a` is cut off.
        let p = parse_program("#ext a/0. #ext b/0. c :- [2 #] [] a.").unwrap();
        let mut d = TickStream::new();
        d.advance(3, [Atom::prop("a"), Atom::prop("b")]);
        d.advance(4, [Atom::prop("a")]);
        let g = ground_program(&one_shot_program(&p, &d, 4));
        let m = &answer_sets(&g, 2).unwrap()[0];
        assert!(m.contains(&Atom::prop("spoil_0_p0_c2_box_a")));
        assert!(!m.contains(&Atom::prop("c")));
    }

    #[test]
    fn tuple_box_with_repeated_atom_at_cut() {
        // a at counts 1 and 2 of time 3, then a at (4,3): the window of two
        // tuples covers a(3,2) and a(4,3), so [] a holds.
        let p = parse_program("#ext a/0. c :- [2 #] [] a.").unwrap();
        let mut d = TickStream::new();
        d.advance(3, [Atom::prop("a"), Atom::prop("a")]);
        d.advance(4, [Atom::prop("a")]);
        let g = ground_program(&one_shot_program(&p, &d, 4));
        let m = &answer_sets(&g, 2).unwrap()[0];
        assert!(m.contains(&Atom::prop("c")), "{m:?}");
    }

    #[test]
    fn read_back_pins() {
        let p = parse_program("#ext a/1. b(X) :- [2 t] <> a(X).").unwrap();
        let answer: BTreeSet<Atom> = [
            Atom::new("a_at", vec![Term::sym("y"), Term::int(5)]),
            Atom::new("b", vec![Term::sym("y")]),
            Atom::new("b_at", vec![Term::sym("y"), Term::int(7)]),
            Atom::new("now", vec![Term::int(7)]),
        ]
        .into();
        let s = read_back(&answer, &p, 0, 7);
        let expected = Stream::new(0, 7)
            .with(5, [Atom::new("a", vec![Term::sym("y")])])
            .with(7, [Atom::new("b", vec![Term::sym("y")])]);
        assert_eq!(s, expected);
    }
}
