//! Evaluation of expressions, by the symbolic engine and by the oracle.

use std::collections::BTreeMap;
use std::fmt;

use tioa_core::analysis::{prune_adversarial, AnalysisError};
use tioa_core::model::{parse_models, ModelError};
use tioa_core::operators::{self, OpError, OpOptions};
use tioa_core::oracle::{Limits, OracleError, ProductKind, SemExpr};
use tioa_core::{System, Tioa};

use crate::expr::{Expr, ParseError};

/// A machine-readable failure: `{"error": {"kind", "detail", "location"}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: String,
    pub detail: String,
    pub location: Option<String>,
}

impl CliError {
    pub fn new(kind: &str, detail: impl Into<String>) -> CliError {
        CliError { kind: kind.into(), detail: detail.into(), location: None }
    }

    pub fn at(mut self, location: impl Into<String>) -> CliError {
        self.location = Some(location.into());
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"error": {"kind": self.kind, "detail": self.detail, "location": self.location}})
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError { kind: e.kind.as_str().into(), detail: e.detail, location: e.location }
    }
}

impl From<OpError> for CliError {
    fn from(e: OpError) -> Self {
        match e {
            OpError::Alphabet(d) => CliError::new("alphabet", d),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Alphabet(d) => CliError::new("alphabet", d),
            AnalysisError::Inconsistent(n) => CliError::new("inconsistent", format!("`{n}` has no consistent initial state")),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::SizeGuard(d) => CliError::new("size-guard", d),
            OracleError::Alphabet(d) => CliError::new("alphabet", d),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::new("query-syntax", e.detail).at(format!("offset {}", e.offset))
    }
}

/// A materialized expression: syntactic guards as long as no pruning is
/// involved, compiled federations afterwards.
#[derive(Debug, Clone)]
pub enum Value {
    Syntactic(Tioa),
    Semantic(System),
}

impl Value {
    pub fn system(&self) -> Result<System, CliError> {
        match self {
            Value::Syntactic(t) => Ok(t.compile()?),
            Value::Semantic(s) => Ok(s.clone()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Value::Syntactic(t) => &t.name,
            Value::Semantic(s) => &s.name,
        }
    }
}

/// The automata of a model file, by name.
#[derive(Debug, Clone)]
pub struct Models {
    pub automata: BTreeMap<String, Tioa>,
}

impl Models {
    pub fn parse(src: &str) -> Result<Models, CliError> {
        let list = parse_models(src)?;
        let mut automata = BTreeMap::new();
        for t in list {
            t.compile()?;
            automata.insert(t.name.clone(), t);
        }
        Ok(Models { automata })
    }

    pub fn get(&self, name: &str) -> Result<&Tioa, CliError> {
        self.automata
            .get(name)
            .ok_or_else(|| CliError::new("unknown-name", format!("no automaton named `{name}`")).at(name.to_string()))
    }

    /// Engine-side materialization.
    pub fn materialize(&self, e: &Expr, opts: OpOptions) -> Result<Value, CliError> {
        match e {
            Expr::Name(n) => Ok(Value::Syntactic(self.get(n)?.clone())),
            Expr::Comp(a, b) | Expr::Conj(a, b) | Expr::Quot(a, b) => {
                let (x, y) = (self.materialize(a, opts)?, self.materialize(b, opts)?);
                let op = |p: &Tioa, q: &Tioa| match e {
                    Expr::Comp(..) => operators::composition(p, q, opts),
                    Expr::Conj(..) => operators::conjunction(p, q, opts),
                    _ => operators::quotient(p, q, opts),
                };
                let ops = |p: &System, q: &System| match e {
                    Expr::Comp(..) => operators::composition(p, q, opts),
                    Expr::Conj(..) => operators::conjunction(p, q, opts),
                    _ => operators::quotient(p, q, opts),
                };
                Ok(match (&x, &y) {
                    (Value::Syntactic(p), Value::Syntactic(q)) => Value::Syntactic(op(p, q)?),
                    _ => Value::Semantic(ops(&x.system()?, &y.system()?)?),
                })
            }
            Expr::Prune(inner) => {
                let v = self.materialize(inner, opts)?;
                let mut s = prune_adversarial(&v.system()?)?.system();
                s.name = format!("prune({})", v.name());
                if opts.reach_prune {
                    s = operators::prune_unreachable(&s);
                }
                Ok(Value::Semantic(s))
            }
        }
    }

    /// Oracle-side semantics. Conjunction, composition and pruning are the
    /// transition-system constructions; a quotient is taken as the semantics
    /// of the engine's quotient automaton, since the transition-system
    /// quotient has no `i_new` and only matches it up to pruning.
    pub fn semantics(&self, e: &Expr, opts: OpOptions, limits: Limits) -> Result<SemExpr, CliError> {
        Ok(match e {
            Expr::Name(n) => SemExpr::leaf(self.get(n)?.clone()),
            Expr::Comp(a, b) => {
                SemExpr::product(self.semantics(a, opts, limits)?, self.semantics(b, opts, limits)?, ProductKind::Composition)?
            }
            Expr::Conj(a, b) => {
                SemExpr::product(self.semantics(a, opts, limits)?, self.semantics(b, opts, limits)?, ProductKind::Conjunction)?
            }
            Expr::Quot(..) => match self.materialize(e, opts)? {
                Value::Syntactic(t) => SemExpr::leaf(t),
                Value::Semantic(s) => SemExpr::system(s),
            },
            Expr::Prune(inner) => SemExpr::pruned(self.semantics(inner, opts, limits)?, limits)?,
        })
    }
}
