//! Atoms, rules, programs and streams.

mod program;
mod stream;
mod term;
mod validate;

pub use program::{BodyPos, ExtendedAtom, Head, LarsProgram, LarsRule, Modality, WindowSpec};
pub use stream::{ordering_of, sorted_ordering, underlying_stream, Stream, StreamError, Tick, TickStream};
pub use term::{Atom, CmpOp, Constant, Expr, Guard, GuardEval, Substitution, Symbol, Term};
pub use validate::{validate_program, ValidationReport, Violation};
