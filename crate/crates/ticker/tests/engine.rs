mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ticker::asp::{answer_sets, is_answer_set};
use ticker::encode::strip_auxiliary;
use ticker::engine::{Engine, EngineConfig, EngineError, Mode, Outcome, Strategy};
use ticker::model::{Atom, LarsProgram, Term};
use ticker::parser::parse_program;

const STRATEGIES: [Strategy; 2] = [Strategy::OneShot, Strategy::Incremental];

fn a(name: &str, c: &str) -> Atom {
    Atom::new(name, vec![Term::sym(c)])
}

fn engine(text: &str, s: Strategy, m: Mode) -> Engine {
    Engine::create(EngineConfig::new(parse_program(text).unwrap()).strategy(s).mode(m)).unwrap()
}

fn lines(e: &mut Engine, until: u64) -> Vec<String> {
    (e.current_time()..=until).map(|t| e.evaluate(t).unwrap().to_string()).collect()
}

#[test]
fn diamond_answer_over_time() {
    for s in STRATEGIES {
        for m in [Mode::Push, Mode::Pull] {
            let mut e = engine("#ext a/1. b(X) :- [2 t] <> a(X).", s, m);
            e.append(5, [a("a", "y")]).unwrap();
            let got = lines(&mut e, 8);
            assert_eq!(got, ["@5 model: a(y) b(y)", "@6 model: b(y)", "@7 model: b(y)", "@8 model:"], "{s:?} {m:?}");
        }
    }
}

#[test]
fn append_builds_ticks() {
    let mut e = engine("#ext a/1. b(X) :- [2 #] <> a(X).", Strategy::OneShot, Mode::Pull);
    e.append(5, [a("a", "y")]).unwrap();
    assert_eq!(e.stream().unwrap().last().to_string(), "(5,1)");
    e.append(5, []).unwrap();
    assert_eq!(e.stream().unwrap().len(), 7);
    e.append(6, [a("a", "x"), a("a", "z")]).unwrap();
    let s = e.stream().unwrap();
    assert_eq!(s.last().to_string(), "(6,3)");
    assert_eq!(s.signal(s.last()), Some(&a("a", "z")));
    assert!(matches!(e.append(2, []), Err(EngineError::TimeRegression { .. })));
    assert!(matches!(e.append(7, [a("b", "x")]), Err(EngineError::NotExtensional(_))));
    assert_eq!(e.evaluate(6).unwrap().to_string(), "@6 model: a(x) a(z) b(x) b(z)");
}

#[test]
fn empty_program() {
    for s in STRATEGIES {
        let mut e = engine("", s, Mode::Pull);
        assert_eq!(e.evaluate(0).unwrap().outcome, Outcome::Model(BTreeSet::new()));
    }
}

#[test]
fn tuple_window_over_data_only() {
    // Tuple windows count stream data only, so the inference b does not
    // push a out of the window.
    for s in STRATEGIES {
        let mut e = engine("#ext a/0. b :- [1 #] <> a.", s, Mode::Push);
        e.append(0, [Atom::prop("a")]).unwrap();
        assert_eq!(e.evaluate(0).unwrap().to_string(), "@0 model: a b");
        assert_eq!(e.evaluate(1).unwrap().to_string(), "@1 model: b");
    }
}

#[test]
fn odd_loop_mid_stream() {
    for s in STRATEGIES {
        for m in [Mode::Push, Mode::Pull] {
            let mut e = engine("#ext e/0. x :- e, not x. y :- [3 t] <> e.", s, m);
            e.append(2, [Atom::prop("e")]).unwrap();
            let got = lines(&mut e, 4);
            assert_eq!(got, ["@2 no-model", "@3 model: y", "@4 model: y"], "{s:?} {m:?}");
        }
    }
}

#[test]
fn unguarded_window_variable_in_strict_mode() {
    let p = parse_program("#ext a/1. b(X) :- [2 t] <> a(X).").unwrap();
    let cfg = EngineConfig::new(p).strict_guards(true);
    assert!(matches!(Engine::create(cfg.clone()), Err(EngineError::PreGround(_))));
    assert!(Engine::create(cfg.strict_guards(false)).is_ok());
    let bad = parse_program("b :- [2 #] <> c. c :- b.").unwrap();
    assert!(matches!(Engine::create(EngineConfig::new(bad)), Err(EngineError::Invalid(_))));
}

fn schedule(rng: &mut ChaCha8Rng, tp: u64) -> Vec<(u64, Vec<Atom>)> {
    (0..tp)
        .map(|t| {
            let n = rng.gen_range(0..=2);
            let atoms = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        Atom::prop("e")
                    } else {
                        a("a", ["x", "y", "z"][rng.gen_range(0..3)])
                    }
                })
                .collect();
            (t, atoms)
        })
        .collect()
}

fn run(p: &LarsProgram, s: Strategy, m: Mode, gc: bool, sched: &[(u64, Vec<Atom>)]) -> Vec<Outcome> {
    let mut e = Engine::create(EngineConfig::new(p.clone()).strategy(s).mode(m).gc(gc)).unwrap();
    sched
        .iter()
        .map(|(t, atoms)| {
            e.append(*t, atoms.clone()).unwrap();
            e.evaluate(*t).unwrap().outcome
        })
        .collect()
}

/// Every strategy, mode and GC setting returns an answer of the one-shot
/// program; where the answer is unique they all coincide.
#[test]
fn strategies_and_modes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..300 {
        let p = common::random_program(&mut rng);
        let sched = schedule(&mut rng, 8);
        let reference = run(&p, Strategy::OneShot, Mode::Pull, false, &sched);
        let mut stream = ticker::model::TickStream::new();
        let mut all: Vec<BTreeSet<BTreeSet<Atom>>> = Vec::new();
        for (t, atoms) in &sched {
            stream.advance(*t, atoms.clone());
            let g = ticker::asp::ground_program(&ticker::encode::one_shot_program(&p, &stream, *t));
            all.push(answer_sets(&g, usize::MAX).unwrap().iter().map(|m| strip_auxiliary(m, &p)).collect());
        }
        for s in STRATEGIES {
            for m in [Mode::Push, Mode::Pull] {
                for gc in [false, true] {
                    let got = run(&p, s, m, gc, &sched);
                    for (i, o) in got.iter().enumerate() {
                        match o {
                            Outcome::Model(x) => assert!(all[i].contains(x), "case {case} {s:?} {m:?} {gc} @{i}\n{p}"),
                            Outcome::NoModel => assert!(all[i].is_empty(), "case {case} @{i}\n{p}"),
                            Outcome::Unknown(u) => panic!("case {case}: {u:?}"),
                        }
                        if all[i].len() == 1 {
                            assert_eq!(o, &reference[i], "case {case} {s:?} {m:?} {gc} @{i}\n{p}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn network_is_an_answer_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let p = common::random_program(&mut rng);
        let mut e = Engine::create(EngineConfig::new(p.clone())).unwrap();
        for (t, atoms) in schedule(&mut rng, 8) {
            e.append(t, atoms).unwrap();
            if let Outcome::Model(_) = e.evaluate(t).unwrap().outcome {
                let (g, m) = e.network().unwrap();
                assert!(is_answer_set(&g, &g.resolve(&m)));
            }
        }
    }
}
