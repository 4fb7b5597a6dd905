use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// An interned-by-refcount name: predicate symbols, symbolic constants and
/// variable names.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        self.as_str()
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A ground value. Integers order before symbols.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Int(i64),
    Sym(Symbol),
}

impl Constant {
    pub fn sym(s: &str) -> Self {
        Constant::Sym(Symbol::new(s))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Constant::Int(i) => Some(*i),
            Constant::Sym(_) => None,
        }
    }
}

impl fmt::Debug for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(i) => write!(f, "{i}"),
            Constant::Sym(s) => write!(f, "{s}"),
        }
    }
}

/// A constant or a variable. Variables start with an uppercase letter.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Constant),
    Var(Symbol),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Symbol::new(name))
    }

    pub fn sym(name: &str) -> Self {
        Term::Const(Constant::sym(name))
    }

    pub fn int(i: i64) -> Self {
        Term::Const(Constant::Int(i))
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn as_const(&self) -> Option<&Constant> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn substitute(&self, subst: &Substitution) -> Term {
        match self {
            Term::Var(v) => match subst.get(v) {
                Some(c) => Term::Const(c.clone()),
                None => self.clone(),
            },
            Term::Const(_) => self.clone(),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
        }
    }
}

impl From<Constant> for Term {
    fn from(c: Constant) -> Self {
        Term::Const(c)
    }
}

pub type Substitution = BTreeMap<Symbol, Constant>;

/// `predicate(args...)`. Ground iff every argument is a constant.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<Symbol>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    /// Proposition without arguments.
    pub fn prop(predicate: &str) -> Self {
        Atom::new(predicate, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn substitute(&self, subst: &Substitution) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.substitute(subst)).collect(),
        }
    }

    /// Matches a ground atom against this (possibly non-ground) pattern,
    /// extending `subst`. Returns false and leaves `subst` in an unspecified
    /// state on mismatch.
    pub fn match_ground(&self, ground: &Atom, subst: &mut Substitution) -> bool {
        if self.predicate != ground.predicate || self.args.len() != ground.args.len() {
            return false;
        }
        for (pat, val) in self.args.iter().zip(&ground.args) {
            let Term::Const(val) = val else { return false };
            match pat {
                Term::Const(c) => {
                    if c != val {
                        return false;
                    }
                }
                Term::Var(v) => match subst.get(v) {
                    Some(bound) => {
                        if bound != val {
                            return false;
                        }
                    }
                    None => {
                        subst.insert(v.clone(), val.clone());
                    }
                },
            }
        }
        true
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
        }
    }
}

/// A term with an optional integer offset: `X`, `7`, `N - 2`, `C - 3 + 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr {
    pub term: Term,
    pub offset: i64,
}

impl Expr {
    pub fn term(term: Term) -> Self {
        Expr { term, offset: 0 }
    }

    pub fn minus(term: Term, k: i64) -> Self {
        Expr { term, offset: -k }
    }

    /// Value under `subst`; `None` if unbound or if an offset is applied
    /// to a symbolic constant.
    pub fn eval(&self, subst: &Substitution) -> Option<Constant> {
        let base = match &self.term {
            Term::Const(c) => c.clone(),
            Term::Var(v) => subst.get(v)?.clone(),
        };
        if self.offset == 0 {
            return Some(base);
        }
        match base {
            Constant::Int(i) => Some(Constant::Int(i + self.offset)),
            Constant::Sym(_) => None,
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term)?;
        match self.offset.cmp(&0) {
            Ordering::Less => write!(f, " - {}", -self.offset),
            Ordering::Greater => write!(f, " + {}", self.offset),
            Ordering::Equal => Ok(()),
        }
    }
}

/// Outcome of evaluating a guard under a partial substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardEval {
    True,
    False,
    /// `Var = expr` with `Var` unbound and `expr` evaluable.
    Binds(Symbol, Constant),
    Pending,
}

/// Built-in comparison used as a body guard.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Guard {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl Guard {
    pub fn new(lhs: Expr, op: CmpOp, rhs: Expr) -> Self {
        Guard { lhs, op, rhs }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.lhs.term.as_var().into_iter().chain(self.rhs.term.as_var())
    }

    /// Evaluates the guard. An equality whose one side is a bare unbound
    /// variable binds it; binding to a negative integer fails, since times
    /// and counts are naturals.
    pub fn eval(&self, subst: &Substitution) -> GuardEval {
        let l = self.lhs.eval(subst);
        let r = self.rhs.eval(subst);
        match (l, r) {
            (Some(l), Some(r)) => {
                if self.op.holds(l.cmp(&r)) {
                    GuardEval::True
                } else {
                    GuardEval::False
                }
            }
            (None, Some(r)) if self.op == CmpOp::Eq => binding(&self.lhs, r),
            (Some(l), None) if self.op == CmpOp::Eq => binding(&self.rhs, l),
            _ => GuardEval::Pending,
        }
    }

    pub fn substitute(&self, subst: &Substitution) -> Guard {
        Guard {
            lhs: Expr {
                term: self.lhs.term.substitute(subst),
                offset: self.lhs.offset,
            },
            op: self.op,
            rhs: Expr {
                term: self.rhs.term.substitute(subst),
                offset: self.rhs.offset,
            },
        }
    }
}

fn binding(side: &Expr, value: Constant) -> GuardEval {
    match (&side.term, side.offset) {
        (Term::Var(v), 0) => match value {
            Constant::Int(i) if i < 0 => GuardEval::False,
            value => GuardEval::Binds(v.clone(), value),
        },
        _ => GuardEval::Pending,
    }
}

impl fmt::Debug for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}
