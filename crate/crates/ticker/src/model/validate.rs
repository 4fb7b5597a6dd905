use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::program::{ExtendedAtom, LarsProgram, Modality, WindowSpec};
use super::term::Symbol;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// A tuple window over a predicate that is not declared extensional.
    TupleWindowOnIntensional { rule: usize, predicate: Symbol },
    /// A declared extensional predicate occurs in a rule head.
    ExtensionalHead { rule: usize, predicate: Symbol },
    /// A positive dependency cycle passes through a time-window box atom.
    TimeBoxCycle { predicates: Vec<Symbol> },
    /// Background predicates may only be accessed by plain atoms.
    BackgroundInTemporalAtom { rule: usize, predicate: Symbol },
    /// A variable not bound by the positive body.
    UnsafeVariable { rule: usize, variable: Symbol },
    /// Time windows need n >= 0, tuple windows n >= 1.
    InvalidWindowSize { rule: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TupleWindowOnIntensional { rule, predicate } => {
                write!(f, "rule {rule}: tuple window over non-extensional predicate `{predicate}`")
            }
            Violation::ExtensionalHead { rule, predicate } => {
                write!(f, "rule {rule}: extensional predicate `{predicate}` in head")
            }
            Violation::TimeBoxCycle { predicates } => {
                let names: Vec<_> = predicates.iter().map(Symbol::as_str).collect();
                write!(
                    f,
                    "positive dependency cycle through a time-window box atom: {{{}}}",
                    names.join(", ")
                )
            }
            Violation::BackgroundInTemporalAtom { rule, predicate } => {
                write!(f, "rule {rule}: background predicate `{predicate}` under @ or a window")
            }
            Violation::UnsafeVariable { rule, variable } => {
                write!(f, "rule {rule}: unsafe variable `{variable}`")
            }
            Violation::InvalidWindowSize { rule } => {
                write!(f, "rule {rule}: tuple windows need size >= 1")
            }
        }
    }
}

/// Result of [`validate_program`]; empty means the program is accepted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the structural restrictions of plain LARS. Pure; the report is
/// sorted so it does not depend on rule order beyond rule indices.
pub fn validate_program(p: &LarsProgram) -> ValidationReport {
    let mut violations = BTreeSet::new();
    let background = p.background_predicates();

    for (i, r) in p.rules.iter().enumerate() {
        let head = &r.head.atom().predicate;
        if p.is_extensional(head) {
            violations.insert(Violation::ExtensionalHead {
                rule: i,
                predicate: head.clone(),
            });
        }
        for (_, e) in r.body() {
            let pred = &e.atom().predicate;
            if let ExtendedAtom::Window(spec, _, _) = e {
                if let WindowSpec::Tuple(n) = spec {
                    if *n == 0 {
                        violations.insert(Violation::InvalidWindowSize { rule: i });
                    }
                    if !p.is_extensional(pred) {
                        violations.insert(Violation::TupleWindowOnIntensional {
                            rule: i,
                            predicate: pred.clone(),
                        });
                    }
                }
            }
            if !matches!(e, ExtendedAtom::Plain(_)) && background.contains(pred) {
                violations.insert(Violation::BackgroundInTemporalAtom {
                    rule: i,
                    predicate: pred.clone(),
                });
            }
        }
        for v in r.unsafe_variables() {
            violations.insert(Violation::UnsafeVariable { rule: i, variable: v });
        }
    }

    for predicates in time_box_cycles(p) {
        violations.insert(Violation::TimeBoxCycle { predicates });
    }

    ValidationReport {
        violations: violations.into_iter().collect(),
    }
}

/// Predicate-level positive dependency graph; returns the strongly connected
/// components that contain an edge through a time-window box atom.
fn time_box_cycles(p: &LarsProgram) -> Vec<Vec<Symbol>> {
    let mut graph: DiGraph<Symbol, bool> = DiGraph::new();
    let mut nodes: BTreeMap<Symbol, NodeIndex> = BTreeMap::new();
    let mut node = |g: &mut DiGraph<Symbol, bool>, s: &Symbol| {
        *nodes.entry(s.clone()).or_insert_with(|| g.add_node(s.clone()))
    };
    let mut box_edges = Vec::new();
    for r in &p.rules {
        let h = node(&mut graph, &r.head.atom().predicate);
        for e in &r.pos {
            let b = node(&mut graph, &e.atom().predicate);
            let time_box = matches!(
                e,
                ExtendedAtom::Window(WindowSpec::Time(_) | WindowSpec::TimeInf, Modality::Box, _)
            );
            graph.add_edge(h, b, time_box);
            if time_box {
                box_edges.push((h, b));
            }
        }
    }
    let mut component = vec![usize::MAX; graph.node_count()];
    let sccs = tarjan_scc(&graph);
    for (ci, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = ci;
        }
    }
    let mut flagged = BTreeSet::new();
    for (h, b) in box_edges {
        if component[h.index()] == component[b.index()] {
            flagged.insert(component[h.index()]);
        }
    }
    flagged
        .into_iter()
        .map(|ci| {
            let mut preds: Vec<Symbol> = sccs[ci].iter().map(|n| graph[*n].clone()).collect();
            preds.sort();
            preds
        })
        .collect()
}
