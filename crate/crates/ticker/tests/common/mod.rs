//! Random small programs and streams, plus the three ways of computing
//! answer streams that the cross-checks compare.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ticker::asp::{answer_sets, ground_program, GroundProgram, SolveError};
use ticker::encode::{one_shot_program, read_back};
use ticker::model::{validate_program, Atom, LarsProgram, Stream, Term, TickStream};
use ticker::parser::{parse_program, parse_rule};

const CONSTANTS: [&str; 3] = ["x", "y", "z"];

/// (name, arity, extensional)
const PREDICATES: [(&str, usize, bool); 5] = [
    ("a", 1, true),
    ("e", 0, true),
    ("p", 1, false),
    ("q", 0, false),
    ("r", 1, false),
];

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    constants: usize,
    heads: Vec<(&'static str, usize)>,
}

impl Gen<'_> {
    fn arg(&mut self) -> String {
        if self.rng.gen_bool(0.7) {
            "X".into()
        } else {
            CONSTANTS[self.rng.gen_range(0..self.constants)].into()
        }
    }

    /// Extensional with probability `ext`, otherwise the head of some rule.
    fn atom(&mut self, ext: f64) -> String {
        let pred = if self.rng.gen_bool(ext) {
            let e: Vec<_> = PREDICATES.iter().filter(|p| p.2).collect();
            let (n, a, _) = **e.choose(self.rng).unwrap();
            (n, a)
        } else {
            *self.heads.choose(self.rng).unwrap()
        };
        self.atom_of(pred)
    }

    fn atom_of(&mut self, (name, arity): (&str, usize)) -> String {
        if arity == 0 {
            name.to_string()
        } else {
            format!("{name}({})", self.arg())
        }
    }

    fn time(&mut self) -> String {
        if self.rng.gen_bool(0.8) {
            "T".into()
        } else {
            self.rng.gen_range(0..6).to_string()
        }
    }

    fn extended(&mut self, ext: f64) -> String {
        match self.rng.gen_range(0..10) {
            0..=1 => self.atom(ext),
            2 => format!("@{} {}", self.time(), self.atom(ext)),
            k => {
                let tuple = k >= 8;
                let spec = if tuple {
                    format!("[{} #]", self.rng.gen_range(1..=3))
                } else if self.rng.gen_bool(0.1) {
                    "[inf t]".to_string()
                } else {
                    format!("[{} t]", self.rng.gen_range(0..=3))
                };
                let modality = match self.rng.gen_range(0..5) {
                    0..=1 => "<>".to_string(),
                    2 => "[]".to_string(),
                    _ => format!("@{}", self.time()),
                };
                format!("{spec} {modality} {}", self.atom(if tuple { 1.0 } else { ext }))
            }
        }
    }

    /// `pred` under a time window, `@` or plain.
    fn temporal_of(&mut self, pred: (&str, usize)) -> String {
        let a = self.atom_of(pred);
        match self.rng.gen_range(0..6) {
            0..=2 => a,
            3 => format!("[{} t] <> {a}", self.rng.gen_range(0..=2)),
            4 => format!("[{} t] [] {a}", self.rng.gen_range(0..=2)),
            _ => format!("@{} {a}", self.time()),
        }
    }

    fn rule(&mut self, head: (&str, usize), against: Option<(&str, usize)>) -> String {
        let npos = if self.rng.gen_bool(0.65) { 1 } else { 2 };
        let nneg = self.rng.gen_range(0..=1);
        let mut body: Vec<String> = (0..npos).map(|_| self.extended(0.65)).collect();
        if against.is_some() {
            let spec = if self.rng.gen_bool(0.7) { "t" } else { "#" };
            body[0] = format!("[{} {spec}] <> {}", self.rng.gen_range(1..=3), self.atom(1.0));
        }
        match against {
            Some(other) => body.push(format!("not {}", self.temporal_of(other))),
            None => body.extend((0..nneg).map(|_| format!("not {}", self.extended(0.3)))),
        }
        let (name, arity) = head;
        let mut head = if arity == 0 {
            name.to_string()
        } else {
            format!("{name}({})", self.arg())
        };
        if self.rng.gen_bool(0.25) {
            head = format!("@T {head}");
        }
        let text = format!("{head} :- {}.", body.join(", "));
        let unsafe_vars = parse_rule(&text).unwrap().unsafe_variables();
        if unsafe_vars.is_empty() {
            return text;
        }
        let k = self.rng.gen_range(0..=3);
        let binder = match (unsafe_vars.contains("X"), unsafe_vars.contains("T")) {
            (true, true) => format!("[{k} t] @T a(X)"),
            (true, false) if self.rng.gen_bool(0.5) => "a(X)".to_string(),
            (true, false) => format!("[{k} t] <> a(X)"),
            _ => format!("[{k} t] @T e"),
        };
        body.insert(0, binder);
        format!("{head} :- {}.", body.join(", "))
    }
}

/// A validated program of at most four rules over at most three constants.
pub fn random_program(rng: &mut ChaCha8Rng) -> LarsProgram {
    let intensional: Vec<(&str, usize)> = PREDICATES.iter().filter(|p| !p.2).map(|p| (p.0, p.1)).collect();
    loop {
        let constants = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=4);
        let mut heads: Vec<(&str, usize)> = (0..n).map(|_| *intensional.choose(rng).unwrap()).collect();
        let choice = n >= 2 && rng.gen_bool(0.5);
        if choice {
            let first = heads[0];
            heads[1] = **intensional.iter().filter(|h| **h != first).collect::<Vec<_>>().choose(rng).unwrap();
        }
        let mut g = Gen {
            rng,
            constants,
            heads: heads.clone(),
        };
        let mut text = String::from("#ext a/1. #ext e/0.\n");
        for (i, h) in heads.iter().enumerate() {
            let against = match i {
                0 if choice => Some(heads[1]),
                1 if choice => Some(heads[0]),
                _ => None,
            };
            text.push_str(&g.rule(*h, against));
            text.push('\n');
        }
        let p = parse_program(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        let rep = validate_program(&p);
        if rep.is_ok() {
            return p;
        }
        if std::env::var("GEN_DEBUG").is_ok() {
            eprintln!("REJECT {text} {rep}");
        }
    }
}

/// A data tick stream of at most `max_ticks` ticks from `(0,0)`.
pub fn random_stream(rng: &mut ChaCha8Rng, max_ticks: usize) -> TickStream {
    let mut d = TickStream::new();
    let n = rng.gen_range(1..=max_ticks);
    for _ in 1..n {
        if rng.gen_bool(0.4) {
            d.push_time();
        } else if rng.gen_bool(0.3) {
            d.push_atom(Atom::prop("e"));
        } else {
            let c = CONSTANTS[rng.gen_range(0..3)];
            d.push_atom(Atom::new("a", vec![Term::sym(c)]));
        }
    }
    d
}

pub fn streams_of(g: &GroundProgram, p: &LarsProgram, t: u64) -> Result<BTreeSet<Stream>, SolveError> {
    Ok(answer_sets(g, usize::MAX)?
        .iter()
        .map(|m| read_back(m, p, 0, t))
        .collect())
}

/// Answer streams through the static encoding.
pub fn static_streams(p: &LarsProgram, d: &TickStream) -> Result<BTreeSet<Stream>, SolveError> {
    let t = d.last().time;
    streams_of(&ground_program(&one_shot_program(p, d, t)), p, t)
}
