//! Temporal formulas: a CTL surface language, its normalization into the
//! EX/EG/EU kernel, and the LTL safety fragment.
//!
//! Surface syntax, loosest binding first:
//!
//! ```text
//! f := f -> f                      (right associative)
//!    | f '|' f | f & f
//!    | !f | AG f | AF f | AX f | EG f | EF f | EX f
//!    | E[ f U f ] | A[ f U f ]
//!    | ( f ) | true | false | <proposition>
//! ```
//!
//! Propositions are `[A-Za-z0-9_=]+` (so `home=empty` is one atom). The
//! safety fragment is `G p` and `G (p -> X q)` with `p`, `q` propositional.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("column {column}: {message}")]
pub struct FormulaError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    EX(Box<Formula>),
    EF(Box<Formula>),
    EG(Box<Formula>),
    EU(Box<Formula>, Box<Formula>),
    AX(Box<Formula>),
    AF(Box<Formula>),
    AG(Box<Formula>),
    AU(Box<Formula>, Box<Formula>),
}

/// Shorthand constructors.
impl Formula {
    pub fn atom(p: impl Into<String>) -> Formula {
        Formula::Atom(p.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn ex(f: Formula) -> Formula {
        Formula::EX(Box::new(f))
    }

    pub fn ef(f: Formula) -> Formula {
        Formula::EF(Box::new(f))
    }

    pub fn eg(f: Formula) -> Formula {
        Formula::EG(Box::new(f))
    }

    pub fn eu(a: Formula, b: Formula) -> Formula {
        Formula::EU(Box::new(a), Box::new(b))
    }

    pub fn ax(f: Formula) -> Formula {
        Formula::AX(Box::new(f))
    }

    pub fn af(f: Formula) -> Formula {
        Formula::AF(Box::new(f))
    }

    pub fn ag(f: Formula) -> Formula {
        Formula::AG(Box::new(f))
    }

    pub fn au(a: Formula, b: Formula) -> Formula {
        Formula::AU(Box::new(a), Box::new(b))
    }
}

impl Formula {
    pub fn parse(text: &str) -> Result<Formula, FormulaError> {
        let toks = lex(text)?;
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            end: text.len() + 1,
        };
        let f = p.implication()?;
        p.finish()?;
        Ok(f)
    }

    /// True if no temporal operator occurs.
    pub fn is_propositional(&self) -> bool {
        use Formula::*;
        match self {
            True | False | Atom(_) => true,
            Not(a) => a.is_propositional(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        use Formula::*;
        match self {
            True | False => {}
            Atom(p) => {
                out.insert(p);
            }
            Not(a) | EX(a) | EF(a) | EG(a) | AX(a) | AF(a) | AG(a) => a.collect_atoms(out),
            And(a, b) | Or(a, b) | Implies(a, b) | EU(a, b) | AU(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Nesting depth of operators (atoms and constants have depth 0).
    pub fn depth(&self) -> usize {
        use Formula::*;
        match self {
            True | False | Atom(_) => 0,
            Not(a) | EX(a) | EF(a) | EG(a) | AX(a) | AF(a) | AG(a) => 1 + a.depth(),
            And(a, b) | Or(a, b) | Implies(a, b) | EU(a, b) | AU(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Evaluates a propositional formula against a set of true atoms.
    /// Temporal operators are not allowed here.
    pub fn eval_propositional(&self, holds: &dyn Fn(&str) -> bool) -> bool {
        use Formula::*;
        match self {
            True => true,
            False => false,
            Atom(p) => holds(p),
            Not(a) => !a.eval_propositional(holds),
            And(a, b) => a.eval_propositional(holds) && b.eval_propositional(holds),
            Or(a, b) => a.eval_propositional(holds) || b.eval_propositional(holds),
            Implies(a, b) => !a.eval_propositional(holds) || b.eval_propositional(holds),
            _ => panic!("temporal operator in propositional context: {self}"),
        }
    }

    /// Rewrites into the EX/EG/EU kernel.
    pub fn normalize(&self) -> Kernel {
        use Formula::*;
        let n = |f: &Formula| Box::new(f.normalize());
        let not = |k: Kernel| Kernel::Not(Box::new(k));
        let and = |a: Kernel, b: Kernel| Kernel::And(Box::new(a), Box::new(b));
        let or = |a: Kernel, b: Kernel| not(and(not(a), not(b)));
        match self {
            True => Kernel::True,
            False => not(Kernel::True),
            Atom(p) => Kernel::Atom(p.clone()),
            Not(a) => Kernel::Not(n(a)),
            And(a, b) => Kernel::And(n(a), n(b)),
            Or(a, b) => or(a.normalize(), b.normalize()),
            Implies(a, b) => or(not(a.normalize()), b.normalize()),
            EX(a) => Kernel::EX(n(a)),
            EG(a) => Kernel::EG(n(a)),
            EU(a, b) => Kernel::EU(n(a), n(b)),
            EF(a) => Kernel::EU(Box::new(Kernel::True), n(a)),
            AX(a) => not(Kernel::EX(Box::new(not(a.normalize())))),
            AF(a) => not(Kernel::EG(Box::new(not(a.normalize())))),
            AG(a) => not(Kernel::EU(
                Box::new(Kernel::True),
                Box::new(not(a.normalize())),
            )),
            AU(a, b) => {
                // A[a U b] = !(E[!b U (!a & !b)] | EG !b)
                let nb = not(b.normalize());
                let na = not(a.normalize());
                not(or(
                    Kernel::EU(Box::new(nb.clone()), Box::new(and(na, nb.clone()))),
                    Kernel::EG(Box::new(nb)),
                ))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(p) => write!(f, "{p}"),
            Not(a) => write!(f, "!{}", Unary(a)),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            EX(a) => write!(f, "EX {}", Unary(a)),
            EF(a) => write!(f, "EF {}", Unary(a)),
            EG(a) => write!(f, "EG {}", Unary(a)),
            AX(a) => write!(f, "AX {}", Unary(a)),
            AF(a) => write!(f, "AF {}", Unary(a)),
            AG(a) => write!(f, "AG {}", Unary(a)),
            EU(a, b) => write!(f, "E[ {a} U {b} ]"),
            AU(a, b) => write!(f, "A[ {a} U {b} ]"),
        }
    }
}

/// Operand of a prefix operator. Binary operators already print their own
/// parentheses, so nothing extra is needed.
struct Unary<'a>(&'a Formula);

impl fmt::Display for Unary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The CTL kernel every formula normalizes into.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Kernel {
    True,
    Atom(String),
    Not(Box<Kernel>),
    And(Box<Kernel>, Box<Kernel>),
    EX(Box<Kernel>),
    EG(Box<Kernel>),
    EU(Box<Kernel>, Box<Kernel>),
}

/// Formulas of the LTL safety fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SafetyFormula {
    /// `G p`
    Always(Formula),
    /// `G (p -> X q)`
    AlwaysNext { pre: Formula, post: Formula },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SafetyError {
    #[error(transparent)]
    Syntax(#[from] FormulaError),
    #[error("unsupported formula shape: {0}")]
    UnsupportedFormulaShape(String),
}

impl SafetyFormula {
    pub fn parse(text: &str) -> Result<SafetyFormula, SafetyError> {
        let toks = lex(text)?;
        let end = text.len() + 1;
        let unsupported = || {
            SafetyError::UnsupportedFormulaShape(format!(
                "expected 'G p' or 'G (p -> X q)', found '{}'",
                text.trim()
            ))
        };
        match toks.first() {
            Some((_, Tok::Ident(g))) if g == "G" => {}
            _ => return Err(unsupported()),
        }
        let mut body = &toks[1..];
        if body.is_empty() {
            return Err(FormulaError {
                column: end,
                message: "expected formula after 'G'".into(),
            }
            .into());
        }
        // drop one pair of parentheses wrapping the whole body
        if matches!(body.first(), Some((_, Tok::LParen)))
            && matches!(body.last(), Some((_, Tok::RParen)))
            && closing_paren(body, 0) == Some(body.len() - 1)
        {
            body = &body[1..body.len() - 1];
        }
        let mut depth = 0i32;
        let mut split = None;
        for (i, (_, t)) in body.iter().enumerate() {
            match t {
                Tok::LParen | Tok::LBracket => depth += 1,
                Tok::RParen | Tok::RBracket => depth -= 1,
                Tok::Arrow if depth == 0 => {
                    if matches!(body.get(i + 1), Some((_, Tok::Ident(x))) if x == "X") {
                        split = Some(i);
                    }
                    break;
                }
                _ => {}
            }
        }
        let parse_slice = |slice: &[(usize, Tok)]| -> Result<Formula, SafetyError> {
            let mut p = Parser {
                toks: slice,
                pos: 0,
                end,
            };
            let f = p.implication()?;
            p.finish()?;
            if f.is_propositional() {
                Ok(f)
            } else {
                Err(unsupported())
            }
        };
        match split {
            Some(i) => Ok(SafetyFormula::AlwaysNext {
                pre: parse_slice(&body[..i])?,
                post: parse_slice(&body[i + 2..])?,
            }),
            None => Ok(SafetyFormula::Always(parse_slice(body)?)),
        }
    }

    pub fn atoms(&self) -> BTreeSet<&str> {
        match self {
            SafetyFormula::Always(p) => p.atoms(),
            SafetyFormula::AlwaysNext { pre, post } => {
                let mut a = pre.atoms();
                a.extend(post.atoms());
                a
            }
        }
    }
}

impl fmt::Display for SafetyFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SafetyFormula::Always(p) => write!(f, "G {p}"),
            SafetyFormula::AlwaysNext { pre, post } => write!(f, "G ({pre} -> X {post})"),
        }
    }
}

fn closing_paren(toks: &[(usize, Tok)], open: usize) -> Option<usize> {
    let mut depth = 0;
    for (i, (_, t)) in toks.iter().enumerate().skip(open) {
        match t {
            Tok::LParen => depth += 1,
            Tok::RParen => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Not,
    And,
    Or,
    Arrow,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let col = i + 1;
        let tok = match c {
            c if c.is_whitespace() => continue,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '-' => {
                if matches!(chars.peek(), Some((_, '>'))) {
                    chars.next();
                    Tok::Arrow
                } else {
                    return Err(FormulaError {
                        column: col,
                        message: "expected '->'".into(),
                    });
                }
            }
            c if is_ident_char(c) => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, d)) = chars.peek() {
                    if !is_ident_char(d) {
                        break;
                    }
                    end = j + d.len_utf8();
                    chars.next();
                }
                Tok::Ident(text[i..end].to_string())
            }
            other => {
                return Err(FormulaError {
                    column: col,
                    message: format!("unexpected character '{other}'"),
                })
            }
        };
        out.push((col, tok));
    }
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '='
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn finish(&self) -> Result<(), FormulaError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => self.error("unexpected trailing input"),
        }
    }

    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.implication()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                let next_is_bracket =
                    matches!(self.toks.get(self.pos + 1), Some((_, Tok::LBracket)));
                self.pos += 1;
                let op: Option<fn(Formula) -> Formula> = match name.as_str() {
                    "AG" => Some(Formula::ag),
                    "AF" => Some(Formula::af),
                    "AX" => Some(Formula::ax),
                    "EG" => Some(Formula::eg),
                    "EF" => Some(Formula::ef),
                    "EX" => Some(Formula::ex),
                    _ => None,
                };
                if let Some(op) = op {
                    return Ok(op(self.unary()?));
                }
                match name.as_str() {
                    "E" | "A" if next_is_bracket => {
                        self.pos += 1;
                        let lhs = self.implication()?;
                        match self.peek() {
                            Some(Tok::Ident(u)) if u == "U" => self.pos += 1,
                            _ => return self.error("expected 'U'"),
                        }
                        let rhs = self.implication()?;
                        self.expect(Tok::RBracket, "']'")?;
                        Ok(if name == "E" {
                            Formula::eu(lhs, rhs)
                        } else {
                            Formula::au(lhs, rhs)
                        })
                    }
                    "true" | "TRUE" => Ok(Formula::True),
                    "false" | "FALSE" => Ok(Formula::False),
                    "U" => {
                        self.pos -= 1;
                        self.error("'U' outside E[ .. ] or A[ .. ]")
                    }
                    _ => Ok(Formula::Atom(name)),
                }
            }
            Some(_) => self.error("expected a formula"),
            None => self.error("unexpected end of formula"),
        }
    }
}
