//! Guard and invariant expressions over clocks with integer constants.
//!
//! ```text
//! expr   := term ('||' term)*
//! term   := factor ('&&' factor)*
//! factor := '!' factor | '(' expr ')' | 'true' | 'false' | ident rel int
//! rel    := '<' | '<=' | '>' | '>=' | '=='
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::zones::{Bound, Clocks, Federation, Q};

use super::{ModelError, ModelErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::Eq => "==",
        }
    }

    pub fn holds<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Gt => a > b,
            Rel::Ge => a >= b,
            Rel::Eq => a == b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    False,
    Atom { clock: String, rel: Rel, value: i32 },
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
}

impl Guard {
    pub fn atom(clock: impl Into<String>, rel: Rel, value: i32) -> Guard {
        Guard::Atom { clock: clock.into(), rel, value }
    }

    /// Conjunction with constant folding.
    pub fn and(a: Guard, b: Guard) -> Guard {
        match (a, b) {
            (Guard::False, _) | (_, Guard::False) => Guard::False,
            (Guard::True, g) | (g, Guard::True) => g,
            (a, b) if a == b => a,
            (a, b) => Guard::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Guard, b: Guard) -> Guard {
        match (a, b) {
            (Guard::True, _) | (_, Guard::True) => Guard::True,
            (Guard::False, g) | (g, Guard::False) => g,
            (a, b) if a == b => a,
            (a, b) => Guard::Or(Box::new(a), Box::new(b)),
        }
    }

    pub fn all(gs: impl IntoIterator<Item = Guard>) -> Guard {
        gs.into_iter().fold(Guard::True, Guard::and)
    }

    pub fn any(gs: impl IntoIterator<Item = Guard>) -> Guard {
        gs.into_iter().fold(Guard::False, Guard::or)
    }

    /// Negation pushed down to the atoms.
    pub fn negate(&self) -> Guard {
        match self {
            Guard::True => Guard::False,
            Guard::False => Guard::True,
            Guard::Atom { clock, rel, value } => {
                let c = clock.clone();
                match rel {
                    Rel::Lt => Guard::atom(c, Rel::Ge, *value),
                    Rel::Le => Guard::atom(c, Rel::Gt, *value),
                    Rel::Gt => Guard::atom(c, Rel::Le, *value),
                    Rel::Ge => Guard::atom(c, Rel::Lt, *value),
                    Rel::Eq => Guard::or(
                        Guard::atom(c.clone(), Rel::Lt, *value),
                        Guard::atom(c, Rel::Gt, *value),
                    ),
                }
            }
            Guard::And(a, b) => Guard::or(a.negate(), b.negate()),
            Guard::Or(a, b) => Guard::and(a.negate(), b.negate()),
            Guard::Not(g) => (**g).clone(),
        }
    }

    /// `g[r := 0]`: atoms over reset clocks are evaluated at 0.
    pub fn zero_subst<S: AsRef<str>>(&self, resets: &[S]) -> Guard {
        let reset = |c: &str| resets.iter().any(|r| r.as_ref() == c);
        match self {
            Guard::True | Guard::False => self.clone(),
            Guard::Atom { clock, rel, value } => {
                if reset(clock) {
                    if rel.holds(0, *value) {
                        Guard::True
                    } else {
                        Guard::False
                    }
                } else {
                    self.clone()
                }
            }
            Guard::And(a, b) => Guard::and(a.zero_subst(resets), b.zero_subst(resets)),
            Guard::Or(a, b) => Guard::or(a.zero_subst(resets), b.zero_subst(resets)),
            Guard::Not(g) => match g.zero_subst(resets) {
                Guard::True => Guard::False,
                Guard::False => Guard::True,
                h => Guard::Not(Box::new(h)),
            },
        }
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Guard {
        match self {
            Guard::True | Guard::False => self.clone(),
            Guard::Atom { clock, rel, value } => Guard::atom(f(clock), *rel, *value),
            Guard::And(a, b) => Guard::And(Box::new(a.rename(f)), Box::new(b.rename(f))),
            Guard::Or(a, b) => Guard::Or(Box::new(a.rename(f)), Box::new(b.rename(f))),
            Guard::Not(g) => Guard::Not(Box::new(g.rename(f))),
        }
    }

    pub fn clocks(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_clocks(&mut out);
        out
    }

    fn collect_clocks<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Atom { clock, .. } => {
                out.insert(clock);
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.collect_clocks(out);
                b.collect_clocks(out);
            }
            Guard::Not(g) => g.collect_clocks(out),
        }
    }

    pub fn max_constant(&self) -> i32 {
        match self {
            Guard::True | Guard::False => 0,
            Guard::Atom { value, .. } => *value,
            Guard::And(a, b) | Guard::Or(a, b) => a.max_constant().max(b.max_constant()),
            Guard::Not(g) => g.max_constant(),
        }
    }

    /// True when the guard denotes a convex set (a conjunction of atoms).
    pub fn is_conjunctive(&self) -> bool {
        match self {
            Guard::True | Guard::False | Guard::Atom { .. } => true,
            Guard::And(a, b) => a.is_conjunctive() && b.is_conjunctive(),
            Guard::Or(..) => false,
            Guard::Not(g) => matches!(&**g, Guard::Atom { rel, .. } if *rel != Rel::Eq),
        }
    }

    /// Evaluate at a concrete valuation. Unknown clocks make the atom false.
    pub fn eval(&self, val: &dyn Fn(&str) -> Option<Q>) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Atom { clock, rel, value } => match val(clock) {
                Some(v) => rel.holds(v, Q::from_integer(*value as i64)),
                None => false,
            },
            Guard::And(a, b) => a.eval(val) && b.eval(val),
            Guard::Or(a, b) => a.eval(val) || b.eval(val),
            Guard::Not(g) => !g.eval(val),
        }
    }

    /// Compile to a federation over `clocks`; unknown clocks are an error.
    pub fn compile(&self, clocks: &Clocks) -> Result<Federation, ModelError> {
        Ok(match self {
            Guard::True => Federation::universe(clocks),
            Guard::False => Federation::empty(clocks),
            Guard::Atom { clock, rel, value } => {
                let idx = clocks.iter().position(|c| c == clock).ok_or_else(|| {
                    ModelError::new(ModelErrorKind::UnknownName, format!("unknown clock `{clock}`"))
                })?;
                let v = *value;
                match rel {
                    Rel::Lt => Federation::bound(clocks, idx, true, Bound::lt(v)),
                    Rel::Le => Federation::bound(clocks, idx, true, Bound::le(v)),
                    Rel::Gt => Federation::bound(clocks, idx, false, Bound::lt(-v)),
                    Rel::Ge => Federation::bound(clocks, idx, false, Bound::le(-v)),
                    Rel::Eq => Federation::bound(clocks, idx, true, Bound::le(v))
                        .intersect(&Federation::bound(clocks, idx, false, Bound::le(-v))),
                }
            }
            Guard::And(a, b) => a.compile(clocks)?.intersect(&b.compile(clocks)?),
            Guard::Or(a, b) => a.compile(clocks)?.union(&b.compile(clocks)?),
            Guard::Not(g) => g.compile(clocks)?.complement(),
        })
    }

    /// Parse the guard syntax. The empty string is `true`.
    pub fn parse(src: &str) -> Result<Guard, ModelError> {
        let tokens = lex(src)?;
        if tokens.is_empty() {
            return Ok(Guard::True);
        }
        let mut p = Parser { src, tokens, pos: 0 };
        let g = p.expr()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(p.error(t.col, format!("unexpected `{}`", t.text)));
        }
        Ok(g)
    }

    fn prec(&self) -> u8 {
        match self {
            Guard::Or(..) => 0,
            Guard::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_child(&self, parent: u8, right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prec();
        if p < parent || (right && p == parent && p < 2) {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => write!(f, "true"),
            Guard::False => write!(f, "false"),
            Guard::Atom { clock, rel, value } => write!(f, "{clock} {} {value}", rel.symbol()),
            Guard::And(a, b) => {
                a.fmt_child(1, false, f)?;
                write!(f, " && ")?;
                b.fmt_child(1, true, f)
            }
            Guard::Or(a, b) => {
                a.fmt_child(0, false, f)?;
                write!(f, " || ")?;
                b.fmt_child(0, true, f)
            }
            Guard::Not(g) => match &**g {
                Guard::Not(_) | Guard::True | Guard::False => write!(f, "!{g}"),
                _ => write!(f, "!({g})"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    col: usize,
}

fn syntax(src: &str, col: usize, msg: impl Into<String>) -> ModelError {
    ModelError::new(ModelErrorKind::GuardSyntax, format!("{} in `{src}` at column {}", msg.into(), col + 1))
}

fn lex(src: &str) -> Result<Vec<Token>, ModelError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '_' | '.' | '\'')) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(text.clone()), text, col: start });
            continue;
        }
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                return Err(syntax(src, start, "rational constants are not supported"));
            }
            let text: String = chars[start..i].iter().collect();
            let v: i64 = text.parse().map_err(|_| syntax(src, start, "constant out of range"))?;
            out.push(Token { tok: Tok::Int(v), text, col: start });
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = match two.as_str() {
            "&&" => Some("&&"),
            "||" => Some("||"),
            "<=" => Some("<="),
            ">=" => Some(">="),
            "==" => Some("=="),
            _ => None,
        };
        if let Some(s) = sym {
            out.push(Token { tok: Tok::Sym(s), text: s.into(), col: start });
            i += 2;
            continue;
        }
        let one = match c {
            '!' => "!",
            '(' => "(",
            ')' => ")",
            '<' => "<",
            '>' => ">",
            '-' => return Err(syntax(src, start, "negative constants are not supported")),
            _ => return Err(syntax(src, start, format!("unexpected character `{c}`"))),
        };
        out.push(Token { tok: Tok::Sym(one), text: one.into(), col: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, col: usize, msg: impl Into<String>) -> ModelError {
        syntax(self.src, col, msg)
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn end_col(&self) -> usize {
        self.src.chars().count()
    }

    fn expr(&mut self) -> Result<Guard, ModelError> {
        let mut g = self.term()?;
        while self.peek_sym("||") {
            self.pos += 1;
            let r = self.term()?;
            g = Guard::Or(Box::new(g), Box::new(r));
        }
        Ok(g)
    }

    fn term(&mut self) -> Result<Guard, ModelError> {
        let mut g = self.factor()?;
        while self.peek_sym("&&") {
            self.pos += 1;
            let r = self.factor()?;
            g = Guard::And(Box::new(g), Box::new(r));
        }
        Ok(g)
    }

    fn factor(&mut self) -> Result<Guard, ModelError> {
        let Some(t) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error(self.end_col(), "unexpected end of input"));
        };
        self.pos += 1;
        match t.tok {
            Tok::Sym("!") => Ok(Guard::Not(Box::new(self.factor()?))),
            Tok::Sym("(") => {
                let g = self.expr()?;
                if !self.peek_sym(")") {
                    let col = self.tokens.get(self.pos).map(|t| t.col).unwrap_or(self.end_col());
                    return Err(self.error(col, "expected `)`"));
                }
                self.pos += 1;
                Ok(g)
            }
            Tok::Ident(name) if name == "true" => Ok(Guard::True),
            Tok::Ident(name) if name == "false" => Ok(Guard::False),
            Tok::Ident(name) => {
                let rel = match self.tokens.get(self.pos).map(|t| &t.tok) {
                    Some(Tok::Sym("<")) => Rel::Lt,
                    Some(Tok::Sym("<=")) => Rel::Le,
                    Some(Tok::Sym(">")) => Rel::Gt,
                    Some(Tok::Sym(">=")) => Rel::Ge,
                    Some(Tok::Sym("==")) => Rel::Eq,
                    _ => {
                        let col = self.tokens.get(self.pos).map(|t| t.col).unwrap_or(self.end_col());
                        return Err(self.error(col, format!("expected a comparison after `{name}`")));
                    }
                };
                self.pos += 1;
                match self.tokens.get(self.pos).cloned() {
                    Some(Token { tok: Tok::Int(v), col, .. }) => {
                        self.pos += 1;
                        let v = i32::try_from(v)
                            .ok()
                            .filter(|v| *v <= 1_000_000)
                            .ok_or_else(|| self.error(col, "constant out of range"))?;
                        Ok(Guard::atom(name, rel, v))
                    }
                    Some(t) => Err(self.error(t.col, "expected an integer constant")),
                    None => Err(self.error(self.end_col(), "expected an integer constant")),
                }
            }
            _ => Err(self.error(t.col, format!("unexpected `{}`", t.text))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zones::clocks_of;

    #[test]
    fn precedence_and_printing() {
        let g = Guard::parse("x < 2 || y >= 3 && !(x == 1)").unwrap();
        assert!(matches!(g, Guard::Or(..)));
        assert_eq!(g.to_string(), "x < 2 || y >= 3 && !(x == 1)");
        let g = Guard::parse("(x < 2 || y > 1) && z <= 4").unwrap();
        assert_eq!(g.to_string(), "(x < 2 || y > 1) && z <= 4");
        let g = Guard::parse("a < 1 && (b < 1 && c < 1)").unwrap();
        assert_eq!(Guard::parse(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn syntax_errors_have_columns() {
        let e = Guard::parse("x <= 2.5").unwrap_err();
        assert_eq!(e.kind, ModelErrorKind::GuardSyntax);
        assert!(e.detail.contains("rational"), "{}", e.detail);
        let e = Guard::parse("x <= ").unwrap_err();
        assert!(e.detail.contains("column 6"), "{}", e.detail);
        assert!(Guard::parse("x ! 3").is_err());
        assert!(Guard::parse("(x < 3").is_err());
        assert!(Guard::parse("x < 3 y").is_err());
    }

    #[test]
    fn zero_substitution() {
        let g = Guard::parse("x <= 2 && y > 3").unwrap();
        assert_eq!(g.zero_subst(&["x"]), Guard::parse("y > 3").unwrap());
        assert_eq!(g.zero_subst(&["y"]), Guard::False);
        let g = Guard::parse("!(x > 1)").unwrap();
        assert_eq!(g.zero_subst(&["x"]), Guard::True);
    }

    #[test]
    fn negation_is_exact() {
        let c = clocks_of(&["x", "y"]);
        for src in ["x == 2", "x < 1 || y >= 3", "x <= 2 && !(y < 1)"] {
            let g = Guard::parse(src).unwrap();
            let a = g.negate().compile(&c).unwrap();
            let b = g.compile(&c).unwrap().complement();
            assert!(a.equals(&b), "{src}");
        }
    }

    #[test]
    fn conjunctive_detection() {
        assert!(Guard::parse("x <= 2 && !(y < 1)").unwrap().is_conjunctive());
        assert!(!Guard::parse("x <= 2 || y < 1").unwrap().is_conjunctive());
        assert!(!Guard::parse("!(x == 1)").unwrap().is_conjunctive());
    }
}
