//! Surface syntax for programs and signal lines, and model formatting.
//!
//! ```text
//! #ext alpha/1.
//! #background value(0..30).
//! @T high :- value(V), [20 #] @T alpha(V), V >= 18.
//! lfu :- [20 t] [] high.
//! random :- not done.
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{
    Atom, CmpOp, Constant, Expr, ExtendedAtom, Guard, Head, LarsProgram, LarsRule, Modality, Symbol, Term,
    WindowSpec,
};

/// Predicates the encodings reserve for themselves.
pub const RESERVED_PREDICATES: [&str; 3] = ["now", "cnt", "tick"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// One input signal: a ground extensional atom arriving at `time`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalEvent {
    pub time: u64,
    pub atom: Atom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    If,
    Dot,
    DotDot,
    Comma,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Diamond,
    At,
    Slash,
    Hash,
    Directive(String),
    Cmp(CmpOp),
    Minus,
    Plus,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::If => f.write_str("`:-`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::DotDot => f.write_str("`..`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Diamond => f.write_str("`<>`"),
            Tok::At => f.write_str("`@`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Hash => f.write_str("`#`"),
            Tok::Directive(d) => write!(f, "`#{d}`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
            Tok::Minus => f.write_str("`-`"),
            Tok::Plus => f.write_str("`+`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let err = |message: String| ParseError {
                line: li + 1,
                col,
                message,
            };
            if c == '%' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (tok, len) = if c.is_ascii_lowercase() {
                let end = scan(&chars, i, |c| c.is_ascii_alphanumeric() || c == '_');
                let word: String = chars[i..end].iter().collect();
                if word.contains('_') {
                    return Err(err(format!("`_` is reserved for generated names: `{word}`")));
                }
                (Tok::Ident(word), end - i)
            } else if c.is_ascii_uppercase() {
                let end = scan(&chars, i, |c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
                (Tok::Var(chars[i..end].iter().collect()), end - i)
            } else if c.is_ascii_digit() {
                let end = scan(&chars, i, |c| c.is_ascii_digit());
                let digits: String = chars[i..end].iter().collect();
                let v = digits
                    .parse::<i64>()
                    .map_err(|_| err(format!("integer out of range: {digits}")))?;
                (Tok::Int(v), end - i)
            } else if c == '#' {
                let end = scan(&chars, i + 1, |c| c.is_ascii_alphabetic());
                if end > i + 1 {
                    let word: String = chars[i + 1..end].iter().collect();
                    (Tok::Directive(word), end - i)
                } else {
                    (Tok::Hash, 1)
                }
            } else {
                match (c, next) {
                    (':', Some('-')) => (Tok::If, 2),
                    ('.', Some('.')) => (Tok::DotDot, 2),
                    ('.', _) => (Tok::Dot, 1),
                    (',', _) => (Tok::Comma, 1),
                    ('(', _) => (Tok::LParen, 1),
                    (')', _) => (Tok::RParen, 1),
                    ('[', _) => (Tok::LBrack, 1),
                    (']', _) => (Tok::RBrack, 1),
                    ('<', Some('>')) => (Tok::Diamond, 2),
                    ('<', Some('=')) => (Tok::Cmp(CmpOp::Le), 2),
                    ('<', _) => (Tok::Cmp(CmpOp::Lt), 1),
                    ('>', Some('=')) => (Tok::Cmp(CmpOp::Ge), 2),
                    ('>', _) => (Tok::Cmp(CmpOp::Gt), 1),
                    ('!', Some('=')) => (Tok::Cmp(CmpOp::Ne), 2),
                    ('=', _) => (Tok::Cmp(CmpOp::Eq), 1),
                    ('@', _) => (Tok::At, 1),
                    ('/', _) => (Tok::Slash, 1),
                    ('-', _) => (Tok::Minus, 1),
                    ('+', _) => (Tok::Plus, 1),
                    _ => return Err(err(format!("unexpected character `{c}`"))),
                }
            };
            out.push(Spanned {
                tok,
                line: li + 1,
                col,
            });
            i += len;
        }
    }
    Ok(out)
}

fn scan(chars: &[char], from: usize, ok: impl Fn(char) -> bool) -> usize {
    let mut j = from;
    while j < chars.len() && ok(chars[j]) {
        j += 1;
    }
    j
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        let toks = lex(text)?;
        let lines = text.lines().count().max(1);
        let last_len = text.lines().last().map_or(0, |l| l.chars().count());
        Ok(Parser {
            toks,
            pos: 0,
            end: (lines, last_len + 1),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = match self.toks.get(self.pos) {
            Some(s) => (s.line, s.col),
            None => self.end,
        };
        Err(ParseError {
            line,
            col,
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, wanted: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.unexpected(wanted)
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn program(&mut self) -> PResult<LarsProgram> {
        let mut p = LarsProgram::default();
        while !self.at_end() {
            match self.peek() {
                Some(Tok::Directive(d)) if d == "ext" => {
                    self.bump();
                    let name = self.predicate_name()?;
                    self.expect(&Tok::Slash, "`/`")?;
                    let arity = match self.bump() {
                        Some(Tok::Int(k)) if k >= 0 => k as usize,
                        _ => {
                            self.pos -= 1;
                            return self.unexpected("an arity");
                        }
                    };
                    self.expect(&Tok::Dot, "`.`")?;
                    p.extensional.insert(name, arity);
                }
                Some(Tok::Directive(d)) if d == "background" => {
                    self.bump();
                    let atoms = self.background_atoms()?;
                    self.expect(&Tok::Dot, "`.`")?;
                    p.background.extend(atoms);
                }
                Some(Tok::Directive(d)) => {
                    let d = d.clone();
                    return self.error(format!("unknown directive `#{d}`"));
                }
                _ => p.rules.push(self.rule()?),
            }
        }
        Ok(p)
    }

    fn predicate_name(&mut self) -> PResult<Symbol> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                if RESERVED_PREDICATES.contains(&s.as_str()) {
                    return self.error(format!("`{s}` is a reserved predicate"));
                }
                let s = Symbol::new(s);
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a predicate name"),
        }
    }

    /// `p(c, 0..3)` expands integer intervals into one atom per value.
    fn background_atoms(&mut self) -> PResult<Vec<Atom>> {
        let name = self.predicate_name()?;
        let mut choices: Vec<Vec<Constant>> = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                let c = match self.bump() {
                    Some(Tok::Ident(s)) => vec![Constant::sym(&s)],
                    Some(Tok::Int(lo)) => {
                        if self.eat(&Tok::DotDot) {
                            match self.bump() {
                                Some(Tok::Int(hi)) => (lo..=hi).map(Constant::Int).collect(),
                                _ => {
                                    self.pos -= 1;
                                    return self.unexpected("an interval bound");
                                }
                            }
                        } else {
                            vec![Constant::Int(lo)]
                        }
                    }
                    _ => {
                        self.pos -= 1;
                        return self.unexpected("a constant");
                    }
                };
                choices.push(c);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen, "`)`")?;
        }
        let mut atoms = vec![Vec::new()];
        for options in &choices {
            let mut next = Vec::with_capacity(atoms.len() * options.len());
            for prefix in &atoms {
                for c in options {
                    let mut args: Vec<Term> = prefix.clone();
                    args.push(Term::Const(c.clone()));
                    next.push(args);
                }
            }
            atoms = next;
        }
        Ok(atoms.into_iter().map(|args| Atom::new(name.clone(), args)).collect())
    }

    fn rule(&mut self) -> PResult<LarsRule> {
        let head = if self.eat(&Tok::At) {
            let t = self.term()?;
            Head::At(t, self.atom()?)
        } else {
            if !matches!(self.peek(), Some(Tok::Ident(_))) {
                if self.peek() == Some(&Tok::If) {
                    return self.error("rules need a head; constraints are not supported");
                }
                return self.unexpected("a rule head");
            }
            Head::Plain(self.atom()?)
        };
        let mut rule = LarsRule::new(head, Vec::new(), Vec::new());
        if self.eat(&Tok::If) {
            loop {
                self.literal(&mut rule)?;
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::Dot, "`,` or `.`")?;
        Ok(rule)
    }

    fn literal(&mut self, rule: &mut LarsRule) -> PResult<()> {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "not")
            && !matches!(self.peek_at(1), Some(Tok::LParen | Tok::Comma | Tok::Dot | Tok::Cmp(_)))
        {
            self.bump();
            let e = self.extended_atom()?;
            rule.neg.push(e);
            return Ok(());
        }
        let is_guard = match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Var(_) | Tok::Int(_)), _) => true,
            (Some(Tok::Ident(_)), Some(Tok::Cmp(_) | Tok::Minus | Tok::Plus)) => true,
            _ => false,
        };
        if is_guard {
            let lhs = self.expr()?;
            let op = match self.bump() {
                Some(Tok::Cmp(op)) => op,
                _ => {
                    self.pos -= 1;
                    return self.unexpected("a comparison operator");
                }
            };
            let rhs = self.expr()?;
            rule.guards.push(Guard::new(lhs, op, rhs));
        } else {
            let e = self.extended_atom()?;
            rule.pos.push(e);
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = Expr::term(self.term()?);
        loop {
            let sign = if self.eat(&Tok::Minus) {
                -1
            } else if self.eat(&Tok::Plus) {
                1
            } else {
                break;
            };
            match self.bump() {
                Some(Tok::Int(k)) => e.offset += sign * k,
                _ => {
                    self.pos -= 1;
                    return self.unexpected("an integer offset");
                }
            }
        }
        Ok(e)
    }

    fn extended_atom(&mut self) -> PResult<ExtendedAtom> {
        if self.eat(&Tok::At) {
            let t = self.term()?;
            return Ok(ExtendedAtom::At(t, self.atom()?));
        }
        if self.eat(&Tok::LBrack) {
            let spec = match self.bump() {
                Some(Tok::Int(n)) if n >= 0 => {
                    let n = n as u64;
                    match self.bump() {
                        Some(Tok::Ident(s)) if s == "t" => WindowSpec::Time(n),
                        Some(Tok::Hash) => WindowSpec::Tuple(n),
                        _ => {
                            self.pos -= 1;
                            return self.unexpected("`t` or `#`");
                        }
                    }
                }
                Some(Tok::Ident(s)) if s == "inf" => {
                    match self.bump() {
                        Some(Tok::Ident(s)) if s == "t" => {}
                        _ => {
                            self.pos -= 1;
                            return self.unexpected("`t`");
                        }
                    }
                    WindowSpec::TimeInf
                }
                _ => {
                    self.pos -= 1;
                    return self.unexpected("a window size");
                }
            };
            self.expect(&Tok::RBrack, "`]`")?;
            let modality = if self.eat(&Tok::Diamond) {
                Modality::Diamond
            } else if self.peek() == Some(&Tok::LBrack) && self.peek_at(1) == Some(&Tok::RBrack) {
                self.pos += 2;
                Modality::Box
            } else if self.eat(&Tok::At) {
                Modality::At(self.term()?)
            } else {
                return self.unexpected("`<>`, `[]` or `@T`");
            };
            return Ok(ExtendedAtom::Window(spec, modality, self.atom()?));
        }
        Ok(ExtendedAtom::Plain(self.atom()?))
    }

    fn atom(&mut self) -> PResult<Atom> {
        let name = self.predicate_name()?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen, "`,` or `)`")?;
        }
        Ok(Atom::new(name, args))
    }

    fn term(&mut self) -> PResult<Term> {
        match self.bump() {
            Some(Tok::Var(v)) => Ok(Term::var(&v)),
            Some(Tok::Ident(s)) => Ok(Term::sym(&s)),
            Some(Tok::Int(i)) => Ok(Term::int(i)),
            _ => {
                self.pos -= 1;
                self.unexpected("a term")
            }
        }
    }
}

/// Parses program text. Structural restrictions are checked separately by
/// [`crate::model::validate_program`].
pub fn parse_program(text: &str) -> Result<LarsProgram, ParseError> {
    Parser::new(text)?.program()
}

/// Parses one rule, e.g. `b(X) :- [2 t] <> a(X).`
pub fn parse_rule(text: &str) -> Result<LarsRule, ParseError> {
    let mut p = Parser::new(text)?;
    let r = p.rule()?;
    if !p.at_end() {
        return p.unexpected("end of input");
    }
    Ok(r)
}

/// Parses `<time> <atom>`. The predicate must be declared extensional in
/// `program` with matching arity.
pub fn parse_signal(line: &str, program: &LarsProgram) -> Result<SignalEvent, ParseError> {
    let mut p = Parser::new(line)?;
    let time = match p.bump() {
        Some(Tok::Int(t)) if t >= 0 => t as u64,
        _ => {
            p.pos = p.pos.saturating_sub(1);
            return p.unexpected("a time point");
        }
    };
    let start = p.pos;
    let atom = p.atom()?;
    if !p.at_end() {
        return p.unexpected("end of line");
    }
    let fail = |message: String| {
        let s = &p.toks[start];
        Err(ParseError {
            line: s.line,
            col: s.col,
            message,
        })
    };
    if !atom.is_ground() {
        return fail(format!("signal `{atom}` is not ground"));
    }
    match program.extensional.get(&atom.predicate) {
        None => fail(format!("`{}` is not declared extensional", atom.predicate)),
        Some(&k) if k != atom.arity() => fail(format!(
            "`{}` has arity {k}, signal has {}",
            atom.predicate,
            atom.arity()
        )),
        Some(_) => Ok(SignalEvent { time, atom }),
    }
}

/// `@<time> model: a b(x)` with atoms sorted by their text, or
/// `@<time> no-model`.
pub fn format_model(time: u64, model: Option<&BTreeSet<Atom>>) -> String {
    match model {
        None => format!("@{time} no-model"),
        Some(m) => {
            let mut atoms: Vec<String> = m.iter().map(ToString::to_string).collect();
            atoms.sort();
            let mut line = format!("@{time} model:");
            for a in atoms {
                line.push(' ');
                line.push_str(&a);
            }
            line
        }
    }
}
