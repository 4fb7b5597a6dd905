//! Stream reasoning over rule programs with sliding windows.
//!
//! [`engine::Engine`] is the entry point. It evaluates a program either by
//! solving an answer-set encoding from scratch at every step, or
//! incrementally with a truth maintenance network ([`jtms`]).

pub mod asp;
pub mod bench;
pub mod encode;
pub mod engine;
pub mod incremental;
pub mod jtms;
pub mod model;
pub mod parser;
pub mod scenario;
pub mod semantics;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/intro.md")]
mod book_intro {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/programs.md")]
mod book_programs {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/streams.md")]
mod book_streams {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/one-shot.md")]
mod book_one_shot {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/incremental.md")]
mod book_incremental {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/truth-maintenance.md")]
mod book_truth_maintenance {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/benchmarks.md")]
mod book_benchmarks {}
