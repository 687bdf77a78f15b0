//! Queries: `kind: operands`.
//!
//! ```text
//! refinement: E <= E        consistency: E        implementation: E
//! local-consistency: E      bisim: E == E         get: E        prune: E
//! ```

use std::fmt;

use crate::expr::{lex, Expr, ParseError, Parser, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Refinement(Expr, Expr),
    Consistency(Expr),
    Implementation(Expr),
    LocalConsistency(Expr),
    Bisim(Expr, Expr),
    Get(Expr),
    Prune(Expr),
}

impl Query {
    pub fn kind(&self) -> &'static str {
        match self {
            Query::Refinement(..) => "refinement",
            Query::Consistency(_) => "consistency",
            Query::Implementation(_) => "implementation",
            Query::LocalConsistency(_) => "local-consistency",
            Query::Bisim(..) => "bisim",
            Query::Get(_) => "get",
            Query::Prune(_) => "prune",
        }
    }

    pub fn operands(&self) -> Vec<&Expr> {
        match self {
            Query::Refinement(a, b) | Query::Bisim(a, b) => vec![a, b],
            Query::Consistency(e)
            | Query::Implementation(e)
            | Query::LocalConsistency(e)
            | Query::Get(e)
            | Query::Prune(e) => vec![e],
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Refinement(a, b) => write!(f, "refinement: {a} <= {b}"),
            Query::Bisim(a, b) => write!(f, "bisim: {a} == {b}"),
            other => write!(f, "{}: {}", other.kind(), other.operands()[0]),
        }
    }
}

pub fn parse_query(src: &str) -> Result<Query, ParseError> {
    let Some(colon) = src.find(':') else {
        return Err(ParseError { detail: "expected `kind: expression`".into(), offset: 0 });
    };
    let kind = src[..colon].trim();
    let body = &src[colon + 1..];
    let mut p = Parser::new(lex(body, colon + 1)?, src.len());
    let binary = |p: &mut Parser, sep: Tok, what: &str| -> Result<(Expr, Expr), ParseError> {
        let a = p.expr()?;
        if !p.eat(&sep) {
            return Err(ParseError { detail: format!("expected `{what}`"), offset: p.offset() });
        }
        Ok((a, p.expr()?))
    };
    let q = match kind {
        "refinement" => {
            let (a, b) = binary(&mut p, Tok::Le, "<=")?;
            Query::Refinement(a, b)
        }
        "bisim" => {
            let (a, b) = binary(&mut p, Tok::EqEq, "==")?;
            Query::Bisim(a, b)
        }
        "consistency" => Query::Consistency(p.expr()?),
        "implementation" => Query::Implementation(p.expr()?),
        "local-consistency" => Query::LocalConsistency(p.expr()?),
        "get" => Query::Get(p.expr()?),
        "prune" => Query::Prune(p.expr()?),
        other => {
            return Err(ParseError { detail: format!("unknown query kind `{other}`"), offset: 0 });
        }
    };
    if !p.done() {
        return Err(ParseError { detail: "trailing input".into(), offset: p.offset() });
    }
    Ok(q)
}
