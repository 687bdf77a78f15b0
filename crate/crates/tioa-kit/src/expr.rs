//! Operator expressions over automaton names.
//!
//! Precedence, tightest first: `\\` (quotient), `&&` (conjunction), `||`
//! (composition). All three are left-associative. `prune(e)` and parentheses
//! group.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Name(String),
    Comp(Box<Expr>, Box<Expr>),
    Conj(Box<Expr>, Box<Expr>),
    Quot(Box<Expr>, Box<Expr>),
    Prune(Box<Expr>),
}

impl Expr {
    /// Automaton names in order of first appearance.
    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Name(n) => {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
            Expr::Comp(a, b) | Expr::Conj(a, b) | Expr::Quot(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Expr::Prune(e) => e.collect(out),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Name(n) => f.write_str(n),
            Expr::Comp(a, b) => write!(f, "({a} || {b})"),
            Expr::Conj(a, b) => write!(f, "({a} && {b})"),
            Expr::Quot(a, b) => write!(f, "({a} \\\\ {b})"),
            Expr::Prune(e) => write!(f, "prune({e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub detail: String,
    /// Byte offset in the parsed text.
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.detail, self.offset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Comp,
    Conj,
    Quot,
    LParen,
    RParen,
    Le,
    EqEq,
}

pub(crate) fn lex(src: &str, base: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        let at = base + i;
        let two = src.get(i..i + 2).unwrap_or("");
        if c.is_whitespace() {
            i += 1;
        } else if two == "||" {
            out.push((Tok::Comp, at));
            i += 2;
        } else if two == "&&" {
            out.push((Tok::Conj, at));
            i += 2;
        } else if two == "<=" {
            out.push((Tok::Le, at));
            i += 2;
        } else if two == "==" {
            out.push((Tok::EqEq, at));
            i += 2;
        } else if c == '\\' {
            // `\\` as written in the model language; a single backslash is accepted too
            i += if two == "\\\\" { 2 } else { 1 };
            out.push((Tok::Quot, at));
        } else if c == '(' {
            out.push((Tok::LParen, at));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, at));
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || matches!(b[i], b'_' | b'.')) {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), at));
        } else {
            return Err(ParseError { detail: format!("unexpected character `{c}`"), offset: at });
        }
    }
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    pub(crate) fn new(toks: Vec<(Tok, usize)>, end: usize) -> Parser {
        Parser { toks, pos: 0, end }
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    pub(crate) fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn done(&self) -> bool {
        self.pos == self.toks.len()
    }

    fn err<T>(&self, what: &str) -> Result<T, ParseError> {
        let found = match self.peek() {
            Some(t) => format!("{t:?}"),
            None => "end of input".into(),
        };
        Err(ParseError { detail: format!("expected {what}, found {found}"), offset: self.offset() })
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.conj()?;
        while self.eat(&Tok::Comp) {
            e = Expr::Comp(Box::new(e), Box::new(self.conj()?));
        }
        Ok(e)
    }

    fn conj(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.quot()?;
        while self.eat(&Tok::Conj) {
            e = Expr::Conj(Box::new(e), Box::new(self.quot()?));
        }
        Ok(e)
    }

    fn quot(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while self.eat(&Tok::Quot) {
            e = Expr::Quot(Box::new(e), Box::new(self.atom()?));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return self.err("`)`");
                }
                Ok(e)
            }
            Some(Tok::Ident(n)) => {
                self.pos += 1;
                if n == "prune" && self.eat(&Tok::LParen) {
                    let e = self.expr()?;
                    if !self.eat(&Tok::RParen) {
                        return self.err("`)`");
                    }
                    return Ok(Expr::Prune(Box::new(e)));
                }
                Ok(Expr::Name(n))
            }
            _ => self.err("an automaton name, `(` or `prune(`"),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(lex(src, 0)?, src.len());
    let e = p.expr()?;
    if !p.done() {
        return p.err("an operator or end of input");
    }
    Ok(e)
}
