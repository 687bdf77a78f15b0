//! Running one query and rendering its JSON report.

use std::fmt::Display;
use std::time::Instant;

use serde_json::{json, Value as Json};
use tioa_core::analysis::{
    self, inconsistent_states, is_implementation, is_locally_consistent, immediate_errors, Counterexample, StateSet,
    Verdict, Witness,
};
use tioa_core::operators::OpOptions;
use tioa_core::oracle::{self, Limits};
use tioa_core::semantics::reachable;
use tioa_core::{Automaton, System};

use crate::dot::to_dot;
use crate::eval::{CliError, Models, Value};
use crate::query::{parse_query, Query};

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub ops: OpOptions,
    /// Cross-check with the region oracle under these limits.
    pub oracle: Option<Limits>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { ops: OpOptions::default(), oracle: None }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// 0 holds, 1 fails, 2 error.
    pub code: i32,
    pub report: Json,
    /// DOT renderings of the materialized operands.
    pub dots: Vec<String>,
}

impl Outcome {
    fn error(e: CliError) -> Outcome {
        Outcome { code: 2, report: e.to_json(), dots: Vec::new() }
    }

    /// The report on one line with sorted keys.
    pub fn line(&self) -> String {
        serde_json::to_string(&self.report).expect("report serialization cannot fail")
    }
}

pub fn automaton_json<G: Display>(a: &Automaton<G>) -> Json {
    json!({
        "name": a.name,
        "clocks": a.clocks.to_vec(),
        "inputs": a.alphabet.inputs,
        "outputs": a.alphabet.outputs,
        "locations": a.locations.iter().enumerate().map(|(i, l)| json!({
            "id": l.id,
            "initial": i == a.initial,
            "invariant": l.invariant.to_string(),
        })).collect::<Vec<_>>(),
        "edges": a.edges.iter().map(|e| json!({
            "source": a.location_id(e.source),
            "action": e.action,
            "guard": e.guard.to_string(),
            "resets": e.resets,
            "target": a.location_id(e.target),
        })).collect::<Vec<_>>(),
    })
}

fn states_json(s: &StateSet) -> Json {
    let map: serde_json::Map<String, Json> =
        s.ids.iter().zip(&s.sets).map(|(id, f)| (id.clone(), Json::String(f.to_string()))).collect();
    Json::Object(map)
}

fn cex_json(c: &Counterexample) -> Json {
    json!({
        "steps": c.steps.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "state": c.state,
        "reason": c.reason,
    })
}

fn dot_of(v: &Value) -> String {
    match v {
        Value::Syntactic(t) => to_dot(t),
        Value::Semantic(s) => to_dot(s),
    }
}

struct Body {
    holds: bool,
    witness: Option<Json>,
    counterexample: Option<Json>,
    symbolic_states: usize,
    fixpoint_iterations: usize,
}

impl From<Verdict> for Body {
    fn from(v: Verdict) -> Body {
        let witness = v.witness.map(|w| match w {
            Witness::Relation(r) => Json::Array(
                r.iter().map(|p| json!({"left": p.left, "right": p.right, "zone": p.zone.to_string()})).collect(),
            ),
            Witness::States(s) => states_json(&s),
        });
        Body {
            holds: v.holds,
            witness,
            counterexample: v.counterexample.as_ref().map(cex_json),
            symbolic_states: v.stats.symbolic_states,
            fixpoint_iterations: v.stats.fixpoint_iterations,
        }
    }
}

fn locations(sys: &System) -> Json {
    json!({"locations": sys.locations.iter().map(|l| l.id.clone()).collect::<Vec<_>>()})
}

fn engine(models: &Models, q: &Query, vals: &[Value], opts: RunOptions) -> Result<Body, CliError> {
    let sys0 = vals[0].system()?;
    Ok(match q {
        Query::Refinement(..) => analysis::refinement(&sys0, &vals[1].system()?)?.into(),
        Query::Bisim(..) => analysis::bisimilar(&sys0, &vals[1].system()?).into(),
        Query::Consistency(_) => analysis::consistency(&sys0).into(),
        Query::LocalConsistency(_) => {
            let holds = is_locally_consistent(&sys0);
            let states = reachable(&sys0).states.len();
            Body {
                holds,
                witness: holds.then(|| locations(&sys0)),
                counterexample: (!holds).then(|| json!({"immediate_errors": states_json(&immediate_errors(&sys0))})),
                symbolic_states: states,
                fixpoint_iterations: 0,
            }
        }
        Query::Implementation(_) => {
            let r = is_implementation(&sys0);
            let holds = r.is_implementation();
            let violations: Vec<Json> = r
                .violations
                .iter()
                .map(|v| json!({"location": v.location, "region": v.region.to_string(), "reason": v.kind.to_string()}))
                .collect();
            Body {
                holds,
                witness: holds.then(|| locations(&sys0)),
                counterexample: (!holds).then(|| json!({"violations": violations})),
                symbolic_states: reachable(&sys0).states.len(),
                fixpoint_iterations: 0,
            }
        }
        Query::Get(_) => Body {
            holds: true,
            witness: Some(match &vals[0] {
                Value::Syntactic(t) => automaton_json(t),
                Value::Semantic(s) => automaton_json(s),
            }),
            counterexample: None,
            symbolic_states: reachable(&sys0).states.len(),
            fixpoint_iterations: 0,
        },
        Query::Prune(e) => {
            let iterations = inconsistent_states(&sys0).iterations();
            let pruned = models.materialize(&crate::expr::Expr::Prune(Box::new(e.clone())), opts.ops)?.system()?;
            Body {
                holds: true,
                witness: Some(automaton_json(&pruned)),
                counterexample: None,
                symbolic_states: reachable(&pruned).states.len(),
                fixpoint_iterations: iterations,
            }
        }
    })
}

/// The oracle's verdict. For `get` and `prune` this is bisimilarity of the
/// engine's automaton with the oracle's own construction.
fn oracle_holds(models: &Models, q: &Query, opts: RunOptions, limits: Limits) -> Result<bool, CliError> {
    let sem = |e| models.semantics(e, opts.ops, limits);
    Ok(match q {
        Query::Refinement(a, b) => oracle::refines(&sem(a)?, &sem(b)?, limits)?,
        Query::Bisim(a, b) => oracle::bisimilar(&sem(a)?, &sem(b)?, limits)?,
        Query::Consistency(e) => oracle::consistent(&sem(e)?, limits)?,
        Query::LocalConsistency(e) => oracle::locally_consistent(&sem(e)?, limits)?,
        Query::Implementation(e) => oracle::implementation(&sem(e)?, limits)?,
        Query::Get(e) => {
            let built = oracle_leaf(models.materialize(e, opts.ops)?);
            oracle::bisimilar(&built, &sem(e)?, limits)?
        }
        Query::Prune(e) => {
            let p = crate::expr::Expr::Prune(Box::new(e.clone()));
            let built = oracle_leaf(models.materialize(&p, opts.ops)?);
            oracle::bisimilar(&built, &sem(&p)?, limits)?
        }
    })
}

fn oracle_leaf(v: Value) -> oracle::SemExpr {
    match v {
        Value::Syntactic(t) => oracle::SemExpr::leaf(t),
        Value::Semantic(s) => oracle::SemExpr::system(s),
    }
}

fn run_parsed(models: &Models, q: &Query, opts: RunOptions) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let vals = q.operands().into_iter().map(|e| models.materialize(e, opts.ops)).collect::<Result<Vec<_>, _>>()?;
    let body = engine(models, q, &vals, opts)?;
    let mut report = json!({
        "query": q.to_string(),
        "holds": body.holds,
    });
    let obj = report.as_object_mut().unwrap();
    if let Some(w) = body.witness {
        obj.insert("witness".into(), w);
    }
    if let Some(c) = body.counterexample {
        obj.insert("counterexample".into(), c);
    }
    if let Some(limits) = opts.oracle {
        let o = oracle_holds(models, q, opts, limits)?;
        if o != body.holds {
            return Err(CliError::new(
                "oracle-disagreement",
                format!("engine says {}, region oracle says {}", body.holds, o),
            )
            .at(q.to_string()));
        }
        obj.insert("oracle".into(), json!({"holds": o}));
    }
    obj.insert(
        "stats".into(),
        json!({
            "symbolic_states": body.symbolic_states,
            "fixpoint_iterations": body.fixpoint_iterations,
            "wall_ms": start.elapsed().as_millis() as u64,
        }),
    );
    let code = if body.holds { 0 } else { 1 };
    Ok(Outcome { code, report, dots: vals.iter().map(dot_of).collect() })
}

/// Parse and run one query.
pub fn run_query(models: &Models, query: &str, opts: RunOptions) -> Outcome {
    let q = match parse_query(query) {
        Ok(q) => q,
        Err(e) => return Outcome::error(e.into()),
    };
    run_parsed(models, &q, opts).unwrap_or_else(Outcome::error)
}

/// A report with the timing field removed, for comparisons.
pub fn without_timing(mut report: Json) -> Json {
    if let Some(stats) = report.get_mut("stats").and_then(Json::as_object_mut) {
        stats.remove("wall_ms");
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models() -> Models {
        Models::parse(include_str!("../../../corpus/university.json")).unwrap()
    }

    #[test]
    fn refinement_report() {
        let o = run_query(&models(), "refinement: Machine2 <= Machine", RunOptions::default());
        assert_eq!(o.code, 0);
        assert_eq!(o.report["holds"], true);
        assert!(o.report["witness"].is_array());
        assert_eq!(o.dots.len(), 2);
        let o = run_query(&models(), "refinement: Machine <= Machine2", RunOptions::default());
        assert_eq!(o.code, 1);
        assert!(o.report["counterexample"]["steps"].is_array());
    }

    #[test]
    fn errors_are_structured() {
        let o = run_query(&models(), "consistency: Machine &&", RunOptions::default());
        assert_eq!(o.code, 2);
        assert_eq!(o.report["error"]["kind"], "query-syntax");
        assert_eq!(o.report["error"]["location"], "offset 23");
        let o = run_query(&models(), "get: Nobody", RunOptions::default());
        assert_eq!(o.report["error"]["kind"], "unknown-name");
        let o = run_query(&models(), "refinement: Machine <= Spec", RunOptions::default());
        assert_eq!(o.code, 2);
        assert_eq!(o.report["error"]["kind"], "alphabet");
    }

    #[test]
    fn get_and_prune_emit_automata() {
        let o = run_query(&models(), "get: HalfAdm1 && HalfAdm2", RunOptions::default());
        assert_eq!(o.code, 0);
        assert_eq!(o.report["witness"]["locations"].as_array().unwrap().len(), 4);
        let o = run_query(&models(), "prune: PartiallyInconsistent", RunOptions::default());
        assert_eq!(o.code, 0);
        assert_eq!(o.report["witness"]["name"], "prune(PartiallyInconsistent)");
        let o = run_query(&models(), "prune: Inconsistent", RunOptions::default());
        assert_eq!(o.report["error"]["kind"], "inconsistent");
    }

    #[test]
    fn oracle_cross_check() {
        let opts = RunOptions { oracle: Some(Limits::EXTENDED), ..RunOptions::default() };
        for q in [
            "refinement: Machine2 <= Machine",
            "consistency: Inconsistent",
            "local-consistency: Machine",
            "implementation: MachineImpl",
            "get: HalfAdm1 && HalfAdm2",
            "prune: PartiallyInconsistent",
        ] {
            let o = run_query(&models(), q, opts);
            assert!(o.code < 2, "{q}: {}", o.line());
            assert_eq!(o.report["oracle"]["holds"], o.report["holds"]);
        }
    }
}
