use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::term::Atom;

/// A position in a stream: time and cumulative atom count.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Tick {
    pub time: u64,
    pub count: u64,
}

impl Tick {
    pub const fn new(time: u64, count: u64) -> Self {
        Tick { time, count }
    }

    pub fn time_increment(self) -> Tick {
        Tick::new(self.time + 1, self.count)
    }

    pub fn count_increment(self) -> Tick {
        Tick::new(self.time, self.count + 1)
    }
}

impl fmt::Display for Tick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.time, self.count)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("tick {next} is neither the time nor the count increment of {prev}")]
    NotAdjacent { prev: Tick, next: Tick },
    #[error("count increment {0} carries no atom")]
    MissingAtom(Tick),
    #[error("time increment {0} carries an atom")]
    UnexpectedAtom(Tick),
    #[error("tick stream is empty")]
    Empty,
    #[error("atom order at time {time} does not list exactly the atoms of the stream")]
    OrderMismatch { time: u64 },
    #[error("time {time} is outside the timeline [{start},{end}]")]
    OutsideTimeline { time: u64, start: u64, end: u64 },
    #[error("tick {0} is not part of the stream")]
    UnknownTick(Tick),
    #[error("window size must be at least 1")]
    ZeroTupleWindow,
}

/// A timeline `[start, end]` with a set of ground atoms per time point.
/// Only nonempty time points are stored, so equality is structural.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stream {
    pub start: u64,
    pub end: u64,
    eval: BTreeMap<u64, BTreeSet<Atom>>,
}

impl Stream {
    pub fn new(start: u64, end: u64) -> Self {
        assert!(start <= end, "timeline must be nonempty");
        Stream {
            start,
            end,
            eval: BTreeMap::new(),
        }
    }

    /// Adds `atom` at `time`; times outside the timeline are rejected.
    pub fn insert(&mut self, time: u64, atom: Atom) -> Result<(), StreamError> {
        if !self.contains_time(time) {
            return Err(StreamError::OutsideTimeline {
                time,
                start: self.start,
                end: self.end,
            });
        }
        self.eval.entry(time).or_default().insert(atom);
        Ok(())
    }

    pub fn with(mut self, time: u64, atoms: impl IntoIterator<Item = Atom>) -> Self {
        for a in atoms {
            self.insert(time, a).expect("time within timeline");
        }
        self
    }

    pub fn contains_time(&self, t: u64) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn at(&self, t: u64) -> impl Iterator<Item = &Atom> {
        self.eval.get(&t).into_iter().flatten()
    }

    pub fn holds(&self, t: u64, atom: &Atom) -> bool {
        self.eval.get(&t).is_some_and(|s| s.contains(atom))
    }

    /// Nonempty time points with their atoms.
    pub fn points(&self) -> impl Iterator<Item = (u64, &BTreeSet<Atom>)> {
        self.eval.iter().map(|(t, s)| (*t, s))
    }

    /// Tuple size: number of (atom, time) pairs.
    pub fn size(&self) -> usize {
        self.eval.values().map(BTreeSet::len).sum()
    }

    /// Restriction to `[start, end]`.
    pub fn restrict(&self, start: u64, end: u64) -> Stream {
        Stream {
            start,
            end,
            eval: self
                .eval
                .range(start..=end)
                .map(|(t, s)| (*t, s.clone()))
                .collect(),
        }
    }

    /// Substream relation: contained timeline and pointwise contained sets.
    pub fn is_substream_of(&self, other: &Stream) -> bool {
        other.start <= self.start
            && self.end <= other.end
            && self
                .eval
                .iter()
                .all(|(t, s)| other.eval.get(t).is_some_and(|o| s.is_subset(o)))
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "([{},{}], {{", self.start, self.end)?;
        for (i, (t, s)) in self.eval.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let atoms: Vec<String> = s.iter().map(ToString::to_string).collect();
            write!(f, "{t} -> {{{}}}", atoms.join(","))?;
        }
        f.write_str("})")
    }
}

impl fmt::Debug for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A tick pattern with at most one atom per tick: exactly one on count
/// increments, none on time increments (the first tick carries none).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TickStream {
    ticks: Vec<Tick>,
    signals: Vec<Option<Atom>>,
}

impl TickStream {
    /// The trivial stream at `(0,0)`.
    pub fn new() -> Self {
        Self::starting_at(Tick::new(0, 0))
    }

    pub fn starting_at(first: Tick) -> Self {
        TickStream {
            ticks: vec![first],
            signals: vec![None],
        }
    }

    /// Builds a tick stream from explicit ticks and signals, checking the
    /// tick-pattern and evaluation invariants.
    pub fn from_parts(ticks: Vec<Tick>, signals: Vec<Option<Atom>>) -> Result<Self, StreamError> {
        if ticks.is_empty() || ticks.len() != signals.len() {
            return Err(StreamError::Empty);
        }
        if signals[0].is_some() {
            return Err(StreamError::UnexpectedAtom(ticks[0]));
        }
        for i in 1..ticks.len() {
            let (prev, next) = (ticks[i - 1], ticks[i]);
            if next == prev.count_increment() {
                if signals[i].is_none() {
                    return Err(StreamError::MissingAtom(next));
                }
            } else if next == prev.time_increment() {
                if signals[i].is_some() {
                    return Err(StreamError::UnexpectedAtom(next));
                }
            } else {
                return Err(StreamError::NotAdjacent { prev, next });
            }
        }
        Ok(TickStream { ticks, signals })
    }

    pub fn first(&self) -> Tick {
        self.ticks[0]
    }

    pub fn last(&self) -> Tick {
        *self.ticks.last().expect("tick streams are nonempty")
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn push_time(&mut self) -> Tick {
        let t = self.last().time_increment();
        self.ticks.push(t);
        self.signals.push(None);
        t
    }

    pub fn push_atom(&mut self, atom: Atom) -> Tick {
        let t = self.last().count_increment();
        self.ticks.push(t);
        self.signals.push(Some(atom));
        t
    }

    /// Appends time increments up to `time`, then one count increment per
    /// atom in order.
    pub fn advance(&mut self, time: u64, atoms: impl IntoIterator<Item = Atom>) {
        while self.last().time < time {
            self.push_time();
        }
        for a in atoms {
            self.push_atom(a);
        }
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    /// `(tick, signal)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (Tick, Option<&Atom>)> {
        self.ticks
            .iter()
            .copied()
            .zip(self.signals.iter().map(Option::as_ref))
    }

    pub fn signal(&self, k: Tick) -> Option<&Atom> {
        let i = self.position(k)?;
        self.signals[i].as_ref()
    }

    pub fn position(&self, k: Tick) -> Option<usize> {
        self.ticks.binary_search(&k).ok()
    }

    /// Prefix up to and including tick `k`.
    pub fn prefix(&self, k: Tick) -> Result<TickStream, StreamError> {
        let i = self.position(k).ok_or(StreamError::UnknownTick(k))?;
        Ok(TickStream {
            ticks: self.ticks[..=i].to_vec(),
            signals: self.signals[..=i].to_vec(),
        })
    }

    /// Prefix containing every tick with time at most `t`.
    pub fn prefix_until_time(&self, t: u64) -> TickStream {
        let n = self.ticks.partition_point(|k| k.time <= t).max(1);
        TickStream {
            ticks: self.ticks[..n].to_vec(),
            signals: self.signals[..n].to_vec(),
        }
    }

    /// Suffix starting at index `from`; the first tick keeps its signal.
    pub fn suffix_from(&self, from: usize) -> TickStream {
        TickStream {
            ticks: self.ticks[from..].to_vec(),
            signals: self.signals[from..].to_vec(),
        }
    }
}

impl Default for TickStream {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Display for TickStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, (k, s)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
            if let Some(a) = s {
                write!(f, ":{a}")?;
            }
        }
        f.write_str(">")
    }
}

impl fmt::Debug for TickStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The stream a tick stream refines: timeline from the first to the last
/// tick time, atoms unioned per time point.
pub fn underlying_stream(s: &TickStream) -> Stream {
    let mut out = Stream::new(s.first().time, s.last().time);
    for (k, a) in s.iter() {
        if let Some(a) = a {
            out.insert(k.time, a.clone()).expect("tick times lie in the timeline");
        }
    }
    out
}

/// The canonical ordering of `s`: a time increment per time point after
/// the first, then one count increment per atom in the order given.
/// `order(t)` must list each atom of `s` at `t` exactly once.
pub fn ordering_of<F>(s: &Stream, mut order: F) -> Result<TickStream, StreamError>
where
    F: FnMut(u64) -> Vec<Atom>,
{
    let mut out = TickStream::starting_at(Tick::new(s.start, 0));
    for t in s.start..=s.end {
        if t > s.start {
            out.push_time();
        }
        let atoms = order(t);
        let expected: BTreeSet<&Atom> = s.at(t).collect();
        let given: BTreeSet<&Atom> = atoms.iter().collect();
        if given != expected || atoms.len() != expected.len() {
            return Err(StreamError::OrderMismatch { time: t });
        }
        for a in atoms {
            out.push_atom(a);
        }
    }
    Ok(out)
}

/// Ordering using the atoms' natural (sorted) order at every time point.
pub fn sorted_ordering(s: &Stream) -> TickStream {
    ordering_of(s, |t| s.at(t).cloned().collect()).expect("sorted order lists every atom")
}
