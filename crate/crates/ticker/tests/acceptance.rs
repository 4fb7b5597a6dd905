//! Acceptance run: one pass/fail line per criterion.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ticker::asp::{answer_sets, ground_program, stratify, GroundProgram};
use ticker::bench::{benchmark, BenchConfig};
use ticker::encode::{encode_stream, lars_to_asp, one_shot_program, strip_auxiliary};
use ticker::engine::{Engine, EngineConfig, Mode, Outcome, Strategy};
use ticker::incremental::{incremental_program, pre_ground, Cutoff, IncrementalState};
use ticker::jtms::{Jtms, TmsError};
use ticker::model::{
    sorted_ordering, underlying_stream, Atom, ExtendedAtom, LarsProgram, Modality, Stream, Term, Tick, TickStream,
    WindowSpec,
};
use ticker::parser::parse_program;
use ticker::scenario::{generate, Setup};
use ticker::semantics::{answer_streams_bruteforce, satisfies, time_window, tuple_window, Interpretation};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const PROGRAMS: usize = 600;

fn models(g: &GroundProgram, p: &LarsProgram) -> BTreeSet<BTreeSet<Atom>> {
    answer_sets(g, usize::MAX)
        .unwrap()
        .iter()
        .map(|m| strip_auxiliary(m, p))
        .collect()
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checked, mut skipped, mut multi) = (0, 0, 0);
    for case in 0..PROGRAMS {
        let p = common::random_program(&mut rng);
        let d = common::random_stream(&mut rng, 8);
        let t = d.last().time;
        let st = common::static_streams(&p, &d).unwrap();
        let inc = common::streams_of(&incremental_program(&p, &d).unwrap(), &p, t).unwrap();
        ensure!(st == inc, "case {case}: static and incremental differ\n{p}\n{d}");
        match answer_streams_bruteforce(&p, &d, t) {
            Ok(o) => {
                ensure!(st == o, "case {case}: encodings and oracle differ\n{p}\n{d}");
                checked += 1;
            }
            Err(_) => skipped += 1,
        }
        multi += (st.len() > 1) as usize;
    }
    ensure!(checked >= 500, "only {checked} programs reached the oracle");
    Ok(format!("{checked} programs, {skipped} beyond the oracle, {multi} with several answers"))
}

fn per_tick_equality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ticks = 0;
    for case in 0..PROGRAMS {
        let p = common::random_program(&mut rng);
        let d = common::random_stream(&mut rng, 8);
        let mut inc = IncrementalState::new(&p, &pre_ground(&p, false).unwrap());
        for &k in d.ticks() {
            inc.increment_tick(k, d.signal(k)).unwrap();
            let prefix = d.prefix(k).unwrap();
            let st = common::static_streams(&p, &prefix).unwrap();
            let it = common::streams_of(&inc.program(), &p, k.time).unwrap();
            ensure!(st == it, "case {case} at {k}\n{p}\n{prefix}");
            if let Ok(o) = answer_streams_bruteforce(&p, &prefix, k.time) {
                ensure!(st == o, "oracle, case {case} at {k}\n{p}\n{prefix}");
            }
            ticks += 1;
        }
    }
    Ok(format!("{ticks} ticks over {PROGRAMS} programs"))
}

fn tms_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut ticks, mut none) = (0, 0);
    for case in 0..PROGRAMS {
        let p = common::random_program(&mut rng);
        let d = common::random_stream(&mut rng, 8);
        let mut inc = IncrementalState::new(&p, &pre_ground(&p, false).unwrap());
        let mut tms = Jtms::new();
        for &k in d.ticks() {
            let up = inc.increment_tick(k, d.signal(k)).unwrap();
            let res = tms.update(inc.grounder().atoms(), &up.delta);
            let g = inc.program();
            match res {
                Ok(()) => {
                    let m = g.resolve(&tms.model());
                    ensure!(
                        ticker::asp::is_answer_set(&g, &m),
                        "case {case} at {k}: labels are no answer set\n{p}"
                    );
                }
                Err(TmsError::NoAdmissibleModel { .. }) => {
                    ensure!(answer_sets(&g, 1).unwrap().is_empty(), "case {case} at {k}: model missed\n{p}");
                    none += 1;
                }
                Err(e) => return Err(format!("case {case} at {k}: {e}")),
            }
            ticks += 1;
        }
    }
    let p = parse_program("#ext e/0. x :- e, not x.").unwrap();
    for s in [Strategy::Incremental, Strategy::OneShot] {
        let mut e = Engine::create(EngineConfig::new(p.clone()).strategy(s)).unwrap();
        e.append(1, [Atom::prop("e")]).unwrap();
        let r = e.evaluate(1).unwrap();
        ensure!(r.outcome == Outcome::NoModel, "{s:?}: odd loop gave {r}");
        let r = e.evaluate(2).unwrap();
        ensure!(r.model().is_some_and(|m| m.is_empty()), "{s:?}: no recovery, {r}");
    }
    Ok(format!("{ticks} ticks, {none} without answer set"))
}

fn cutoff_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut ticks, mut cut_ticks) = (0, 0);
    for case in 0..PROGRAMS {
        let p = common::random_program(&mut rng);
        let d = common::random_stream(&mut rng, 20);
        let pre = pre_ground(&p, false).unwrap();
        let mut full = IncrementalState::new(&p, &pre);
        let mut gc = IncrementalState::new(&p, &pre).with_gc(&p);
        let cut = Cutoff::of(&p);
        for &k in d.ticks() {
            full.increment_tick(k, d.signal(k)).unwrap();
            gc.increment_tick(k, d.signal(k)).unwrap();
            let prefix = d.prefix(k).unwrap();
            let keep = prefix.ticks().partition_point(|x| cut.is_outdated(*x, k));
            let truncated = prefix.suffix_from(keep);
            let reference = models(&full.program(), &p);
            ensure!(models(&gc.program(), &p) == reference, "case {case} at {k}: collected state differs\n{p}\n{d}");
            let g = ground_program(&one_shot_program(&p, &truncated, k.time));
            ensure!(models(&g, &p) == reference, "case {case} at {k}: truncated stream differs\n{p}\n{d}");
            cut_ticks += (keep > 0) as usize;
            ticks += 1;
        }
    }
    ensure!(cut_ticks > 0, "no instance was truncated");
    Ok(format!("{ticks} ticks, {cut_ticks} with a truncated stream"))
}

fn ax(c: &str) -> Atom {
    Atom::new("a", vec![Term::sym(c)])
}

fn strings<T: ToString>(xs: impl IntoIterator<Item = T>) -> BTreeSet<String> {
    xs.into_iter().map(|x| x.to_string()).collect()
}

fn goldens() -> Check {
    // Window contents over a stream with a(x) at 35 and 39, a(y), a(z) at 37.
    let s = Stream::new(35, 41).with(35, [ax("x")]).with(37, [ax("y"), ax("z")]).with(39, [ax("x")]);
    ensure!(
        time_window(&s, 40, 3).unwrap() == Stream::new(37, 40).with(37, [ax("y"), ax("z")]).with(39, [ax("x")]),
        "time window"
    );
    let o = sorted_ordering(&s);
    let k = o.prefix_until_time(40).last();
    let w = underlying_stream(&tuple_window(&o, k, 2).unwrap());
    ensure!(w == Stream::new(37, 40).with(37, [ax("z")]).with(39, [ax("x")]), "tuple window: {w}");

    // Satisfaction of window atoms.
    let m = Interpretation::from_data(&o, 41, BTreeSet::new());
    let dia = ExtendedAtom::Window(WindowSpec::Time(3), Modality::Diamond, ax("x"));
    let at = ExtendedAtom::Window(WindowSpec::Time(3), Modality::At(Term::int(37)), ax("y"));
    let bx = ExtendedAtom::Window(WindowSpec::Tuple(1), Modality::Box, ax("x"));
    ensure!(satisfies(&m, 40, &dia) && satisfies(&m, 40, &at), "diamond and at");
    ensure!(satisfies(&m, 35, &bx) && satisfies(&m, 39, &bx) && !satisfies(&m, 40, &bx), "box");

    // Tick construction and stream encoding.
    let mut d = TickStream::new();
    d.advance(3, [Atom::prop("a"), Atom::prop("b")]);
    d.advance(4, []);
    let got: Vec<(u64, u64)> = d.ticks().iter().map(|k| (k.time, k.count)).collect();
    ensure!(got == [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (3, 2), (4, 2)], "ticks {got:?}");
    ensure!(
        underlying_stream(&d) == Stream::new(0, 4).with(3, [Atom::prop("a"), Atom::prop("b")]),
        "underlying stream"
    );
    let facts = strings(encode_stream(&d));
    let expected = strings([
        "a_at(3).", "b_at(3).", "a_tick(3,1).", "b_tick(3,2).", "cnt(2).", "tick(0,0).", "tick(1,0).", "tick(2,0).",
        "tick(3,0).", "tick(3,1).", "tick(3,2).", "tick(4,2).",
    ]);
    ensure!(facts == expected, "stream encoding {facts:?}");

    // Static encoding text and its answer set.
    let p = parse_program("#ext a/1. b(X) :- [2 t] <> a(X).").unwrap();
    let text = lars_to_asp(&p, 7).to_string();
    let expected = "\
a(X1) :- now(N), a_at(X1,N).
a_at(X1,N) :- now(N), a(X1).
b(X1) :- now(N), b_at(X1,N).
b_at(X1,N) :- now(N), b(X1).
b(X) :- w_0_p0_t2_dia_a(X).
w_0_p0_t2_dia_a(X) :- now(N), a_at(X,T), T = N.
w_0_p0_t2_dia_a(X) :- now(N), a_at(X,T), T = N - 1.
w_0_p0_t2_dia_a(X) :- now(N), a_at(X,T), T = N - 2.
now(7).
";
    ensure!(text == expected, "encoding text:\n{text}");
    let mut d = TickStream::new();
    d.advance(5, [ax("y")]);
    d.advance(7, []);
    let ms = answer_sets(&ground_program(&one_shot_program(&p, &d, 7)), 2).unwrap();
    ensure!(ms.len() == 1, "{} answer sets", ms.len());
    let m = strings(&ms[0]);
    let expected = strings([
        "a_at(y,5)", "a_tick(y,5,1)", "b(y)", "b_at(y,7)", "w_0_p0_t2_dia_a(y)", "now(7)", "cnt(1)", "tick(0,0)",
        "tick(1,0)", "tick(2,0)", "tick(3,0)", "tick(4,0)", "tick(5,0)", "tick(5,1)", "tick(6,1)", "tick(7,1)",
    ]);
    ensure!(m == expected, "answer set {m:?}");

    // Rule expiration at (7,1) -> (8,1).
    let mut s = IncrementalState::new(&p, &pre_ground(&p, false).unwrap());
    let mut d = TickStream::new();
    d.advance(5, [ax("y")]);
    d.advance(7, []);
    s.feed(&d).unwrap();
    let u = s.increment_tick(Tick::new(8, 1), None).unwrap();
    let expired = strings(u.expired.iter().map(|r| &r.rule));
    let expected = strings([
        "a(X1) :- a_at(X1,7).",
        "a_at(X1,7) :- a(X1).",
        "b(X1) :- b_at(X1,7).",
        "b_at(X1,7) :- b(X1).",
        "w_0_p0_t2_dia_a(X) :- a_at(X,5).",
    ]);
    ensure!(expired == expected, "expired {expired:?}");
    let added = strings(&u.added);
    let expected = strings([
        "[9,inf] a(X1) :- a_at(X1,8).",
        "[9,inf] a_at(X1,8) :- a(X1).",
        "[9,inf] b(X1) :- b_at(X1,8).",
        "[9,inf] b_at(X1,8) :- b(X1).",
        "[11,inf] w_0_p0_t2_dia_a(X) :- a_at(X,8).",
        "[inf,inf] tick(8,1).",
    ]);
    ensure!(added == expected, "added {added:?}");

    // Tuple box spoiled by count.
    let p = parse_program("#ext a/0. #ext b/0. c :- [2 #] [] a.").unwrap();
    let mut d = TickStream::new();
    d.advance(3, [Atom::prop("a"), Atom::prop("b")]);
    d.advance(4, [Atom::prop("a")]);
    let m = &answer_sets(&ground_program(&one_shot_program(&p, &d, 4)), 2).unwrap()[0];
    ensure!(m.contains(&Atom::prop("spoil_0_p0_c2_box_a")) && !m.contains(&Atom::prop("c")), "tuple box {m:?}");

    // Pre-grounding over background guards.
    let p = parse_program("#ext alpha/1. #background value(0..30). @T high :- value(V), [4 t] @T alpha(V), V >= 18.")
        .unwrap();
    let pre = pre_ground(&p, true).unwrap();
    ensure!(pre.instances.len() == 13, "{} instances", pre.instances.len());
    Ok("windows, satisfaction, ticks, encodings, expiration, spoiling, pre-grounding".into())
}

fn run_models(p: &LarsProgram, points: &[Vec<Atom>], s: Strategy, verify: bool) -> Result<Vec<Outcome>, String> {
    let mut e = Engine::create(EngineConfig::new(p.clone()).strategy(s).mode(Mode::Push).gc(true)).unwrap();
    let mut out = Vec::new();
    for (t, atoms) in points.iter().enumerate() {
        e.append(t as u64, atoms.iter().cloned()).unwrap();
        let r = e.evaluate(t as u64).unwrap();
        if verify && r.model().is_some() {
            ensure!(e.verify() == Some(true), "{s:?} at {t}: model does not verify");
        }
        out.push(r.outcome);
    }
    Ok(out)
}

fn scenarios() -> Check {
    for setup in [Setup::A1, Setup::A2] {
        for seed in 1..=5 {
            let (p, sched) = generate(setup, 20, 100, seed);
            let mut d = TickStream::new();
            for (t, atoms) in sched.points.iter().enumerate() {
                d.advance(t as u64, atoms.iter().cloned());
                let g = ground_program(&one_shot_program(&p, &d, t as u64));
                ensure!(stratify(&g).is_stratified(), "{setup} seed {seed}: not stratified at {t}");
            }
            let a = run_models(&p, &sched.points, Strategy::OneShot, false)?;
            let b = run_models(&p, &sched.points, Strategy::Incremental, false)?;
            if let Some(t) = (0..a.len()).find(|t| a[*t] != b[*t]) {
                return Err(format!("{setup} seed {seed} at {t}: {:?} vs {:?}", a[t], b[t]));
            }
            ensure!(a.iter().all(|o| matches!(o, Outcome::Model(_))), "{setup} seed {seed}: missing model");
        }
    }
    let mut verified = 0;
    for setup in [Setup::B1, Setup::B2] {
        for seed in 1..=3 {
            let (p, sched) = generate(setup, 20, 100, seed);
            for s in [Strategy::OneShot, Strategy::Incremental] {
                let out = run_models(&p, &sched.points, s, true)?;
                verified += out.iter().filter(|o| matches!(o, Outcome::Model(_))).count();
            }
        }
    }
    Ok(format!("A1/A2 seeds 1-5 stratified and equal over 100 points; {verified} scenario B models verified"))
}

fn performance() -> Check {
    let total = |s: Strategy, n: u64| -> Result<f64, String> {
        let r = benchmark(&BenchConfig::new(Setup::A1, s, n, 100)).map_err(|e| e.to_string())?;
        ensure!(!r.flagged, "{s:?} n={n}: unknown evaluations");
        Ok(r.t_total)
    };
    let (o20, o80) = (total(Strategy::OneShot, 20)?, total(Strategy::OneShot, 80)?);
    let (i20, i80) = (total(Strategy::Incremental, 20)?, total(Strategy::Incremental, 80)?);
    let detail = format!(
        "oneshot {o20:.3}s -> {o80:.3}s (x{:.2}), incremental {i20:.3}s -> {i80:.3}s (x{:.2})",
        o80 / o20,
        i80 / i20
    );
    ensure!(o80 / o20 >= 1.8, "oneshot ratio below 1.8: {detail}");
    ensure!(i80 / i20 <= 1.5, "incremental ratio above 1.5: {detail}");
    ensure!(i80 < o80, "incremental not faster at n=80: {detail}");
    Ok(detail)
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("per-tick static/incremental equality", per_tick_equality),
        ("truth maintenance soundness", tms_soundness),
        ("cut-off invariance", cutoff_invariance),
        ("worked-example goldens", goldens),
        ("scenario correctness", scenarios),
        ("performance trend", performance),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {n} {name}: pass ({detail}; {secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({why}; {secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
