//! Benchmark workloads: a caching-strategy selector (scenario A) and
//! content retrieval over the Abilene topology (scenario B).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Atom, LarsProgram, Term};
use crate::parser::parse_program;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setup {
    /// Scenario A with time windows in the abstraction rules.
    A1,
    /// Scenario A with tuple windows in the abstraction rules.
    A2,
    /// Scenario B, sparse signals.
    B1,
    /// Scenario B, dense signals.
    B2,
}

impl FromStr for Setup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "A1" => Ok(Setup::A1),
            "A2" => Ok(Setup::A2),
            "B1" => Ok(Setup::B1),
            "B2" => Ok(Setup::B2),
            _ => Err(format!("unknown setup `{s}`; expected A1, A2, B1 or B2")),
        }
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Signal atoms per time point `0..tp`, in arrival order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub points: Vec<Vec<Atom>>,
}

impl Schedule {
    pub fn tp(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn signals(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    /// Signal lines `<time> <atom>`.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (t, atoms) in self.points.iter().enumerate() {
            for a in atoms {
                out.push_str(&format!("{t} {a}\n"));
            }
        }
        out
    }
}

/// Generates the program and signals of `setup` for window size `n` over
/// `tp` time points.
pub fn generate(setup: Setup, n: u64, tp: u64, seed: u64) -> (LarsProgram, Schedule) {
    match setup {
        Setup::A1 | Setup::A2 => generate_scenario_a(setup, n, tp, seed),
        Setup::B1 | Setup::B2 => generate_scenario_b(setup, n, tp, seed),
    }
}

pub fn scenario_a_program(setup: Setup, n: u64) -> LarsProgram {
    let w = match setup {
        Setup::A1 => format!("[{n} t]"),
        _ => format!("[{n} #]"),
    };
    let text = format!(
        "\
#ext alpha/1.
#background value(0..30).
@T high :- value(V), {w} @T alpha(V), 18 <= V.
@T mid :- value(V), {w} @T alpha(V), 12 <= V, V < 18.
@T low :- value(V), {w} @T alpha(V), V < 12.
lfu :- [{n} t] [] high.
lru :- [{n} t] [] mid.
fifo :- [{n} t] [] low.
done :- lfu.
done :- lru.
done :- fifo.
random :- not done.
"
    );
    parse_program(&text).expect("scenario A parses")
}

/// Value bands of the modes high, mid and low.
const BANDS: [(i64, i64); 3] = [(18, 30), (12, 17), (0, 11)];

/// Scenario A: one `alpha(V)` per time point; a random mode is chosen and
/// kept for `2n` points, with `V` uniform in the mode's band.
pub fn generate_scenario_a(setup: Setup, n: u64, tp: u64, seed: u64) -> (LarsProgram, Schedule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hold = (2 * n).max(1);
    let mut band = BANDS[0];
    let points = (0..tp)
        .map(|t| {
            if t % hold == 0 {
                band = *BANDS.choose(&mut rng).expect("nonempty");
            }
            let v = rng.gen_range(band.0..=band.1);
            vec![Atom::new("alpha", vec![Term::int(v)])]
        })
        .collect();
    (scenario_a_program(setup, n), Schedule { points })
}

pub const NODES: i64 = 11;
pub const ITEMS: [&str; 2] = ["i1", "i2"];
pub const LEVELS: i64 = 3;

/// Undirected Abilene edges.
pub const ABILENE: [(i64, i64); 14] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (0, 10),
    (1, 10),
    (2, 8),
    (3, 7),
];

pub fn scenario_b_program(n: u64) -> LarsProgram {
    let mut text = format!(
        "\
#ext req/2. #ext cache/2. #ext down/1. #ext qLev/2.
#background node(0..{}). #background lev(0..{}).
#background item(i1). #background item(i2).
",
        NODES - 1,
        LEVELS - 1
    );
    for (x, y) in ABILENE {
        text.push_str(&format!("#background edge({x},{y}). #background edge({y},{x}).\n"));
    }
    text.push_str(&format!(
        "\
need(I,N) :- item(I), node(N), [{n} t] <> req(I,N).
avail(I,N) :- item(I), node(N), [{n} t] <> cache(I,N).
get(I,N,M) :- source(I,N,M), not nGet(I,N,M).
nGet(I,N,M) :- node(M), get(I,N,M2), M != M2.
nGet(I,N,M) :- source(I,N,M), source(I,N,M2), M != M2, qual(M,L), qual(M2,L2), L < L2.
source(I,N,M) :- need(I,N), not avail(I,N), avail(I,M), reach(N,M).
reach(N,M) :- conn(N,M).
reach(N,M) :- reach(N,M2), conn(M2,M), M2 != M, N != M.
conn(N,M) :- edge(N,M), not [{n} t] [] down(M).
qual(N,L) :- node(N), lev(L), lev(L2), L2 < L, [{n} t] <> qLev(N,L), not [{n} t] <> qLev(N,L2).
"
    ));
    parse_program(&text).expect("scenario B parses")
}

fn node(rng: &mut ChaCha8Rng) -> Term {
    Term::int(rng.gen_range(0..NODES))
}

fn item(rng: &mut ChaCha8Rng) -> Term {
    Term::sym(ITEMS.choose(rng).expect("nonempty"))
}

/// Scenario B signals.
///
/// B1, per time point: each item is requested at a random node with
/// probability 0.1; one cache entry, and one down node, each with
/// probability 0.1; every node reports a new quality level with
/// probability `3/n` (all nodes report at time 0).
///
/// B2, per time point: each item is requested with probability 0.5 at
/// 1 to 3 nodes; 1 to 3 cache entries; every node reports a level with
/// probability 0.25, keeping the previous one with probability 0.9; with
/// probability `1/n` a random node goes down for `1.5 n` points.
pub fn generate_scenario_b(setup: Setup, n: u64, tp: u64, seed: u64) -> (LarsProgram, Schedule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_f = n.max(1) as f64;
    let mut level: Vec<i64> = (0..NODES).map(|_| rng.gen_range(0..LEVELS)).collect();
    let mut down_until: Vec<u64> = vec![0; NODES as usize];
    let mut points = Vec::with_capacity(tp as usize);
    for t in 0..tp {
        let mut atoms = Vec::new();
        match setup {
            Setup::B2 => {
                for i in ITEMS {
                    if rng.gen_bool(0.5) {
                        for _ in 0..rng.gen_range(1..=3) {
                            atoms.push(Atom::new("req", vec![Term::sym(i), node(&mut rng)]));
                        }
                    }
                }
                for _ in 0..rng.gen_range(1..=3) {
                    atoms.push(Atom::new("cache", vec![item(&mut rng), node(&mut rng)]));
                }
                for (m, l) in level.iter_mut().enumerate() {
                    if rng.gen_bool(0.25) {
                        if !rng.gen_bool(0.9) {
                            *l = rng.gen_range(0..LEVELS);
                        }
                        atoms.push(Atom::new("qLev", vec![Term::int(m as i64), Term::int(*l)]));
                    }
                }
                if rng.gen_bool((1.0 / n_f).min(1.0)) {
                    let m = rng.gen_range(0..NODES) as usize;
                    down_until[m] = down_until[m].max(t + (1.5 * n_f).ceil() as u64);
                }
                for (m, until) in down_until.iter().enumerate() {
                    if t < *until {
                        atoms.push(Atom::new("down", vec![Term::int(m as i64)]));
                    }
                }
            }
            _ => {
                for i in ITEMS {
                    if rng.gen_bool(0.1) {
                        atoms.push(Atom::new("req", vec![Term::sym(i), node(&mut rng)]));
                    }
                }
                if rng.gen_bool(0.1) {
                    atoms.push(Atom::new("cache", vec![item(&mut rng), node(&mut rng)]));
                }
                if rng.gen_bool(0.1) {
                    atoms.push(Atom::new("down", vec![node(&mut rng)]));
                }
                for (m, l) in level.iter_mut().enumerate() {
                    if t == 0 || rng.gen_bool((3.0 / n_f).min(1.0)) {
                        if t > 0 {
                            *l = rng.gen_range(0..LEVELS);
                        }
                        atoms.push(Atom::new("qLev", vec![Term::int(m as i64), Term::int(*l)]));
                    }
                }
            }
        }
        points.push(atoms);
    }
    (scenario_b_program(n), Schedule { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_program;

    #[test]
    fn programs_validate() {
        for s in [Setup::A1, Setup::A2, Setup::B1, Setup::B2] {
            let (p, d) = generate(s, 5, 20, 1);
            assert!(validate_program(&p).is_ok(), "{s}: {}", validate_program(&p));
            assert_eq!(d.tp(), 20);
            assert_eq!(p.rules.len(), 10);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for s in [Setup::A1, Setup::B1, Setup::B2] {
            assert_eq!(generate(s, 4, 30, 3).1, generate(s, 4, 30, 3).1);
            assert_ne!(generate(s, 4, 30, 3).1, generate(s, 4, 30, 4).1);
        }
    }

    #[test]
    fn scenario_a_rules() {
        let p = scenario_a_program(Setup::A2, 7);
        assert_eq!(p.rules[3].to_string(), "lfu :- [7 t] [] high.");
        assert_eq!(p.rules[0].to_string(), "@T high :- value(V), [7 #] @T alpha(V), 18 <= V.");
        let p = scenario_a_program(Setup::A1, 7);
        assert_eq!(p.rules[2].to_string(), "@T low :- value(V), [7 t] @T alpha(V), V < 12.");
    }

    #[test]
    fn scenario_a_modes_hold() {
        let (_, d) = generate_scenario_a(Setup::A1, 3, 60, 2);
        for chunk in d.points.chunks(6) {
            let vs: Vec<i64> = chunk
                .iter()
                .map(|a| match &a[0].args[0] {
                    Term::Const(crate::model::Constant::Int(v)) => *v,
                    _ => unreachable!(),
                })
                .collect();
            assert!(BANDS.iter().any(|(lo, hi)| vs.iter().all(|v| lo <= v && v <= hi)), "{vs:?}");
        }
    }

    #[test]
    fn scenario_b_rules() {
        let p = scenario_b_program(4);
        assert_eq!(
            p.rules[7].to_string(),
            "reach(N,M) :- reach(N,M2), conn(M2,M), M2 != M, N != M."
        );
        assert_eq!(p.rules[8].to_string(), "conn(N,M) :- edge(N,M), not [4 t] [] down(M).");
        assert_eq!(p.background.len(), 11 + 3 + 2 + 28);
    }
}
