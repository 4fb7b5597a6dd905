//! The append/evaluate interface over the two reasoning strategies.
//!
//! ```
//! use ticker::engine::{Engine, EngineConfig, Outcome, Strategy};
//! use ticker::model::{Atom, Term};
//! use ticker::parser::parse_program;
//!
//! let p = parse_program("#ext a/1. b(X) :- [2 t] <> a(X).").unwrap();
//! let mut e = Engine::create(EngineConfig::new(p).strategy(Strategy::Incremental)).unwrap();
//! e.append(5, [Atom::new("a", vec![Term::sym("y")])]).unwrap();
//! let r = e.evaluate(7).unwrap();
//! assert_eq!(r.outcome, Outcome::Model([Atom::new("b", vec![Term::sym("y")])].into()));
//! assert_eq!(r.to_string(), "@7 model: b(y)");
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::asp::{answer_sets_with, ground_program, is_answer_set, GroundRule, RuleDelta, SolveError, DEFAULT_BUDGET};
use crate::encode::{one_shot_program, strip_auxiliary};
use crate::incremental::{pre_ground, Cutoff, IncrementalError, IncrementalState, PreGroundError};
use crate::jtms::{Jtms, TmsError};
use crate::model::{validate_program, Atom, LarsProgram, TickStream};
use crate::parser::format_model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Solve the static encoding from scratch.
    OneShot,
    #[default]
    Incremental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// A model is prepared after every append.
    #[default]
    Push,
    /// Models are computed on evaluate only.
    Pull,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub program: LarsProgram,
    pub strategy: Strategy,
    pub mode: Mode,
    /// Search steps per solver call.
    pub budget: u64,
    /// Forget stream data outside every window.
    pub gc: bool,
    /// Reject window variables not bound by background guards.
    pub strict_guards: bool,
}

impl EngineConfig {
    pub fn new(program: LarsProgram) -> Self {
        EngineConfig {
            program,
            strategy: Strategy::default(),
            mode: Mode::default(),
            budget: DEFAULT_BUDGET,
            gc: false,
            strict_guards: false,
        }
    }

    pub fn strategy(mut self, s: Strategy) -> Self {
        self.strategy = s;
        self
    }

    pub fn mode(mut self, m: Mode) -> Self {
        self.mode = m;
        self
    }

    pub fn budget(mut self, b: u64) -> Self {
        self.budget = b;
        self
    }

    pub fn gc(mut self, on: bool) -> Self {
        self.gc = on;
        self
    }

    pub fn strict_guards(mut self, on: bool) -> Self {
        self.strict_guards = on;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unknown {
    Budget,
    /// The network is inconsistent and the last consistent labels are
    /// kept.
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Model(BTreeSet<Atom>),
    NoModel,
    Unknown(Unknown),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineResult {
    pub time: u64,
    pub outcome: Outcome,
}

impl EngineResult {
    pub fn model(&self) -> Option<&BTreeSet<Atom>> {
        match &self.outcome {
            Outcome::Model(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for EngineResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Unknown(u) => write!(f, "@{} unknown: {u:?}", self.time),
            o => f.write_str(&format_model(
                self.time,
                match o {
                    Outcome::Model(m) => Some(m),
                    _ => None,
                },
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid program:\n{0}")]
    Invalid(String),
    #[error(transparent)]
    PreGround(#[from] PreGroundError),
    #[error("time {requested} is before the current time {current}")]
    TimeRegression { requested: u64, current: u64 },
    #[error("`{0}` is not an extensional atom of the program")]
    NotExtensional(Atom),
    #[error(transparent)]
    Incremental(#[from] IncrementalError),
}

enum Backend {
    OneShot {
        stream: TickStream,
        answer: Option<BTreeSet<Atom>>,
    },
    Incremental {
        state: Box<IncrementalState>,
        tms: Jtms,
        pending: Pending,
    },
}

/// Net rule change not yet applied to the network.
#[derive(Default)]
struct Pending {
    added: HashSet<GroundRule>,
    removed: HashSet<GroundRule>,
}

impl Pending {
    fn merge(&mut self, d: RuleDelta) {
        for r in d.removed {
            if !self.added.remove(&r) {
                self.removed.insert(r);
            }
        }
        for r in d.added {
            if !self.removed.remove(&r) {
                self.added.insert(r);
            }
        }
    }

    fn take(&mut self) -> RuleDelta {
        let mut added: Vec<GroundRule> = self.added.drain().collect();
        let mut removed: Vec<GroundRule> = self.removed.drain().collect();
        added.sort();
        removed.sort();
        RuleDelta { added, removed }
    }
}

pub struct Engine {
    program: LarsProgram,
    mode: Mode,
    budget: u64,
    cutoff: Option<Cutoff>,
    backend: Backend,
    time: u64,
    /// Push mode: the model prepared at the current tick.
    prepared: Option<EngineResult>,
}

impl Engine {
    /// A validated engine at tick `(0,0)`.
    pub fn create(config: EngineConfig) -> Result<Engine, EngineError> {
        let report = validate_program(&config.program);
        if !report.is_ok() {
            return Err(EngineError::Invalid(report.to_string()));
        }
        let p = config.program;
        let cutoff = config.gc.then(|| Cutoff::of(&p));
        let backend = match config.strategy {
            Strategy::OneShot => Backend::OneShot {
                stream: TickStream::new(),
                answer: None,
            },
            Strategy::Incremental => {
                let pre = pre_ground(&p, config.strict_guards)?;
                let mut state = IncrementalState::new(&p, &pre);
                if config.gc {
                    state = state.with_gc(&p);
                }
                Backend::Incremental {
                    state: Box::new(state),
                    tms: Jtms::new().with_budget(config.budget),
                    pending: Pending::default(),
                }
            }
        };
        let mut e = Engine {
            program: p,
            mode: config.mode,
            budget: config.budget,
            cutoff,
            backend,
            time: 0,
            prepared: None,
        };
        let first = TickStream::new();
        e.tick(first.first(), None)?;
        if e.mode == Mode::Push {
            e.prepared = Some(e.compute());
        }
        Ok(e)
    }

    pub fn program(&self) -> &LarsProgram {
        &self.program
    }

    pub fn current_time(&self) -> u64 {
        self.time
    }

    /// Adds time increments up to `time`, then one count increment per
    /// atom in order.
    pub fn append(&mut self, time: u64, atoms: impl IntoIterator<Item = Atom>) -> Result<(), EngineError> {
        if time < self.time {
            return Err(EngineError::TimeRegression {
                requested: time,
                current: self.time,
            });
        }
        let atoms: Vec<Atom> = atoms.into_iter().collect();
        for a in &atoms {
            if self.program.extensional.get(&a.predicate) != Some(&a.arity()) || !a.is_ground() {
                return Err(EngineError::NotExtensional(a.clone()));
            }
        }
        let before = self.current_tick();
        while self.time < time {
            let k = self.current_tick().time_increment();
            self.tick(k, None)?;
        }
        for a in atoms {
            let k = self.current_tick().count_increment();
            self.tick(k, Some(a))?;
        }
        if self.mode == Mode::Push && (self.current_tick() != before || self.prepared.is_none()) {
            self.prepared = Some(self.compute());
        }
        Ok(())
    }

    /// The model at `time`, after advancing to it.
    pub fn evaluate(&mut self, time: u64) -> Result<EngineResult, EngineError> {
        self.append(time, [])?;
        match (&self.prepared, self.mode) {
            (Some(r), Mode::Push) => Ok(r.clone()),
            _ => Ok(self.compute()),
        }
    }

    fn current_tick(&self) -> crate::model::Tick {
        match &self.backend {
            Backend::OneShot { stream, .. } => stream.last(),
            Backend::Incremental { state, .. } => state.current_tick().expect("started at (0,0)"),
        }
    }

    fn tick(&mut self, k: crate::model::Tick, sig: Option<Atom>) -> Result<(), EngineError> {
        self.time = k.time;
        let push = self.mode == Mode::Push;
        match &mut self.backend {
            Backend::OneShot { stream, .. } => {
                if stream.last() != k {
                    match sig {
                        Some(a) => stream.push_atom(a),
                        None => stream.push_time(),
                    };
                }
                if let Some(cut) = self.cutoff {
                    let keep = stream.ticks().partition_point(|t| cut.is_outdated(*t, k));
                    if keep > 0 {
                        *stream = stream.suffix_from(keep);
                    }
                }
            }
            Backend::Incremental { state, tms, pending } => {
                let up = state.increment_tick(k, sig.as_ref())?;
                pending.merge(up.delta);
                if push {
                    let d = pending.take();
                    let _ = tms.update(state.grounder().atoms(), &d);
                }
            }
        }
        Ok(())
    }

    fn compute(&mut self) -> EngineResult {
        let time = self.time;
        let outcome = match &mut self.backend {
            Backend::OneShot { stream, answer } => {
                let g = ground_program(&one_shot_program(&self.program, stream, time));
                *answer = None;
                match answer_sets_with(&g, 1, self.budget) {
                    Ok(models) => match models.into_iter().next() {
                        Some(m) => {
                            let out = Outcome::Model(strip_auxiliary(&m, &self.program));
                            *answer = Some(m);
                            out
                        }
                        None => Outcome::NoModel,
                    },
                    Err(SolveError::Budget(_)) => Outcome::Unknown(Unknown::Budget),
                }
            }
            Backend::Incremental { state, tms, pending } => {
                let table = state.grounder().atoms();
                let d = pending.take();
                let res = if d.is_empty() && !tms.is_dirty() {
                    Ok(())
                } else {
                    tms.update(table, &d)
                };
                match res {
                    Ok(()) if !tms.is_dirty() => {
                        let atoms: BTreeSet<Atom> = tms.model().iter().map(|a| table.atom(*a).clone()).collect();
                        Outcome::Model(strip_auxiliary(&atoms, &self.program))
                    }
                    Ok(()) => Outcome::Unknown(Unknown::Inconsistent),
                    Err(TmsError::NoAdmissibleModel { .. }) => Outcome::NoModel,
                    Err(TmsError::Budget { .. }) => Outcome::Unknown(Unknown::Budget),
                }
            }
        };
        EngineResult { time, outcome }
    }

    /// The current ground program of the incremental strategy together
    /// with the network's in-atoms.
    pub fn network(&self) -> Option<(crate::asp::GroundProgram, Vec<crate::asp::AtomId>)> {
        match &self.backend {
            Backend::Incremental { state, tms, .. } => Some((state.program(), tms.model())),
            Backend::OneShot { .. } => None,
        }
    }

    /// Checks the full answer behind the last model against the current
    /// ground program; `None` if there is no model.
    pub fn verify(&self) -> Option<bool> {
        match &self.backend {
            Backend::OneShot { stream, answer } => {
                let m = answer.as_ref()?;
                let g = ground_program(&one_shot_program(&self.program, stream, self.time));
                Some(is_answer_set(&g, m))
            }
            Backend::Incremental { state, tms, .. } => {
                if tms.is_dirty() {
                    return None;
                }
                let g = state.program();
                Some(is_answer_set(&g, &g.resolve(&tms.model())))
            }
        }
    }

    /// The tick stream the one-shot strategy currently encodes.
    pub fn stream(&self) -> Option<&TickStream> {
        match &self.backend {
            Backend::OneShot { stream, .. } => Some(stream),
            Backend::Incremental { .. } => None,
        }
    }
}
