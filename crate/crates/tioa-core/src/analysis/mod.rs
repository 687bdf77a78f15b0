//! Error states, the consistency fixpoint, adversarial pruning, local
//! consistency and implementation checks. Refinement and bisimulation live in
//! [`game`].

mod game;

use std::fmt;

use thiserror::Error;

use crate::model::{check_input_enabled, System};
use crate::semantics::PrunedSpec;
use crate::zones::{choose_delay, Federation, Q};

pub use game::{bisimilar, refinement, PairState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("alphabet mismatch: {0}")]
    Alphabet(String),
    #[error("specification `{0}` is inconsistent")]
    Inconsistent(String),
}

/// A federation per location of one automaton.
#[derive(Debug, Clone)]
pub struct StateSet {
    pub ids: Vec<String>,
    pub sets: Vec<Federation>,
}

impl StateSet {
    pub fn empty(sys: &System) -> StateSet {
        StateSet {
            ids: sys.locations.iter().map(|l| l.id.clone()).collect(),
            sets: vec![Federation::empty(&sys.clocks); sys.locations.len()],
        }
    }

    /// Every state, i.e. each location's invariant.
    pub fn full(sys: &System) -> StateSet {
        StateSet {
            ids: sys.locations.iter().map(|l| l.id.clone()).collect(),
            sets: sys.locations.iter().map(|l| l.invariant.clone()).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&Federation> {
        self.ids.iter().position(|x| x == id).map(|k| &self.sets[k])
    }

    pub fn is_empty(&self) -> bool {
        self.sets.iter().all(Federation::is_empty)
    }

    pub fn union(&self, o: &StateSet) -> StateSet {
        self.zip(o, Federation::union)
    }

    pub fn intersect(&self, o: &StateSet) -> StateSet {
        self.zip(o, Federation::intersect)
    }

    pub fn subtract(&self, o: &StateSet) -> StateSet {
        self.zip(o, Federation::subtract)
    }

    pub fn is_subset(&self, o: &StateSet) -> bool {
        self.sets.iter().zip(&o.sets).all(|(a, b)| a.is_subset(b))
    }

    pub fn equals(&self, o: &StateSet) -> bool {
        self.sets.iter().zip(&o.sets).all(|(a, b)| a.equals(b))
    }

    /// Locations with a non-empty set.
    pub fn locations(&self) -> Vec<&str> {
        self.ids.iter().zip(&self.sets).filter(|(_, s)| !s.is_empty()).map(|(i, _)| i.as_str()).collect()
    }

    fn zip(&self, o: &StateSet, f: impl Fn(&Federation, &Federation) -> Federation) -> StateSet {
        StateSet { ids: self.ids.clone(), sets: self.sets.iter().zip(&o.sets).map(|(a, b)| f(a, b)).collect() }
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (id, s) in self.ids.iter().zip(&self.sets) {
            if s.is_empty() {
                continue;
            }
            if !first {
                write!(f, "; ")?;
            }
            first = false;
            write!(f, "{id}: {s}")?;
        }
        if first {
            write!(f, "{{}}")?;
        }
        Ok(())
    }
}

/// One step of a concrete trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Delay(Q),
    Action { name: String, output: bool },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Delay(d) => write!(f, "{d}"),
            Step::Action { name, output: true } => write!(f, "{name}!"),
            Step::Action { name, output: false } => write!(f, "{name}?"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub steps: Vec<Step>,
    /// Human-readable description of the final state.
    pub state: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub enum Witness {
    /// Symbolic state pairs of a simulation or bisimulation relation.
    Relation(Vec<PairState>),
    /// The consistent states.
    States(StateSet),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub symbolic_states: usize,
    pub fixpoint_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub counterexample: Option<Counterexample>,
    pub stats: Stats,
}

impl Verdict {
    fn pass(witness: Witness, stats: Stats) -> Verdict {
        Verdict { holds: true, witness: Some(witness), counterexample: None, stats }
    }

    fn fail(cex: Counterexample, stats: Stats) -> Verdict {
        Verdict { holds: false, witness: None, counterexample: Some(cex), stats }
    }
}

pub(crate) fn describe(ids: &[&str], clocks: &[String], v: &[Q]) -> String {
    let vals: Vec<String> = clocks.iter().zip(v).map(|(c, x)| format!("{c}={x}")).collect();
    format!("({}) [{}]", ids.join(", "), vals.join(", "))
}

/// Per-location sets of valuations with an edge of the given direction whose
/// target state lies in `x`.
fn pre_edges(sys: &System, x: &StateSet, outputs: bool) -> Vec<Federation> {
    let mut out = vec![Federation::empty(&sys.clocks); sys.locations.len()];
    for e in &sys.edges {
        if sys.alphabet.is_output(&e.action) != outputs {
            continue;
        }
        let tgt = x.sets[e.target].intersect(sys.inv(e.target));
        if tgt.is_empty() {
            continue;
        }
        let pre = e.guard.intersect(&tgt.reset_preimage_idx(&sys.reset_indices(e)));
        out[e.source] = out[e.source].union(&pre.intersect(sys.inv(e.source)));
    }
    out
}

/// States with an input transition into `x`.
pub fn ipred(sys: &System, x: &StateSet) -> StateSet {
    StateSet { ids: x.ids.clone(), sets: pre_edges(sys, x, false) }
}

/// States with an output transition into `x`.
pub fn opred(sys: &System, x: &StateSet) -> StateSet {
    StateSet { ids: x.ids.clone(), sets: pre_edges(sys, x, true) }
}

/// States that can delay into `x` while the states strictly before the end of
/// the delay avoid `y`.
pub fn timed_pred(sys: &System, x: &StateSet, y: &StateSet) -> StateSet {
    let sets = (0..sys.locations.len())
        .map(|l| {
            let inv = sys.inv(l);
            x.sets[l].intersect(inv).pred_t(&y.sets[l].union(&inv.complement()))
        })
        .collect();
    StateSet { ids: x.ids.clone(), sets }
}

/// Delay-bounded states from which every reachable output is disabled or
/// leads into `x`.
pub fn error_states(sys: &System, x: &StateSet) -> StateSet {
    let escape = opred(sys, &StateSet::full(sys).subtract(x));
    let sets = (0..sys.locations.len())
        .map(|l| {
            let inv = sys.inv(l);
            let not_inv = inv.complement();
            let bounded = not_inv.down().intersect(inv);
            bounded.subtract(&escape.sets[l].intersect(inv).pred_t(&not_inv))
        })
        .collect();
    StateSet { ids: x.ids.clone(), sets }
}

pub fn immediate_errors(sys: &System) -> StateSet {
    error_states(sys, &StateSet::empty(sys))
}

/// `err(X) ∪ Pred_t(X ∪ ipred(X), opred(not X))`.
pub fn pi(sys: &System, x: &StateSet) -> StateSet {
    let good = x.union(&ipred(sys, x));
    let bad = opred(sys, &StateSet::full(sys).subtract(x));
    error_states(sys, x).union(&timed_pred(sys, &good, &bad))
}

#[derive(Debug, Clone)]
pub struct Incons {
    pub set: StateSet,
    /// `levels[k]` is the k-th iterate starting from the empty set; the last
    /// entry is the fixpoint.
    pub levels: Vec<StateSet>,
}

impl Incons {
    pub fn iterations(&self) -> usize {
        self.levels.len() - 1
    }
}

pub fn inconsistent_states(sys: &System) -> Incons {
    let mut levels = vec![StateSet::empty(sys)];
    loop {
        let cur = levels.last().unwrap();
        let next = pi(sys, cur).union(cur);
        if next.equals(cur) {
            break;
        }
        levels.push(next);
    }
    Incons { set: levels.last().unwrap().clone(), levels }
}

/// Each location's invariant minus the inconsistent states.
pub fn consistent_states(sys: &System) -> StateSet {
    StateSet::full(sys).subtract(&inconsistent_states(sys).set)
}

pub fn is_consistent(sys: &System) -> bool {
    consistency(sys).holds
}

/// Consistency with either the consistent states or a trace by which the
/// environment drives the initial state into an error.
pub fn consistency(sys: &System) -> Verdict {
    let inc = inconsistent_states(sys);
    let zero = vec![Q::from_integer(0); sys.clocks.len()];
    let stats = Stats { symbolic_states: sys.locations.len(), fixpoint_iterations: inc.iterations() };
    if !sys.inv(sys.initial).contains(&zero) {
        let state = describe(&[sys.location_id(sys.initial)], &sys.clocks, &zero);
        let cex = Counterexample { steps: vec![], state, reason: "initial valuation violates the invariant".into() };
        return Verdict::fail(cex, stats);
    }
    if inc.set.sets[sys.initial].contains(&zero) {
        return Verdict::fail(consistency_trace(sys, &inc.levels, zero), stats);
    }
    Verdict::pass(Witness::States(StateSet::full(sys).subtract(&inc.set)), stats)
}

fn level_of(levels: &[StateSet], l: usize, v: &[Q]) -> usize {
    levels.iter().position(|s| s.sets[l].contains(v)).expect("state is not inconsistent")
}

fn consistency_trace(sys: &System, levels: &[StateSet], mut v: Vec<Q>) -> Counterexample {
    let mut l = sys.initial;
    let mut steps = Vec::new();
    loop {
        let k = level_of(levels, l, &v);
        let below = &levels[k - 1];
        let here = |l: usize, v: &[Q]| describe(&[sys.location_id(l)], &sys.clocks, v);
        if error_states(sys, below).sets[l].contains(&v) {
            let reason = if k == 1 {
                "time cannot pass forever and no output is ever enabled".to_string()
            } else {
                "time cannot pass forever and every output leads to an inconsistent state".to_string()
            };
            return Counterexample { steps, state: here(l, &v), reason };
        }
        let ip = ipred(sys, below);
        let bad = opred(sys, &StateSet::full(sys).subtract(below));
        let inv = sys.inv(l);
        let target = below.sets[l].union(&ip.sets[l]).intersect(inv);
        let avoid = bad.sets[l].union(&inv.complement());
        let d = choose_delay(&v, &target, &avoid).expect("no delay into the predecessor set");
        for x in &mut v {
            *x += d;
        }
        steps.push(Step::Delay(d));
        if below.sets[l].contains(&v) {
            continue;
        }
        let (e, w) = sys
            .edges_from(l)
            .filter(|(_, e)| sys.alphabet.is_input(&e.action) && e.guard.contains(&v))
            .map(|(_, e)| {
                let mut w = v.clone();
                for r in sys.reset_indices(e) {
                    w[r] = Q::from_integer(0);
                }
                (e, w)
            })
            .find(|(e, w)| below.sets[e.target].contains(w) && sys.inv(e.target).contains(w))
            .expect("no input into a lower level");
        steps.push(Step::Action { name: e.action.clone(), output: false });
        l = e.target;
        v = w;
    }
}

/// Restrict to the consistent states.
pub fn prune_adversarial(sys: &System) -> Result<PrunedSpec, AnalysisError> {
    let cons = consistent_states(sys);
    let zero = vec![Q::from_integer(0); sys.clocks.len()];
    if !cons.sets[sys.initial].contains(&zero) {
        return Err(AnalysisError::Inconsistent(sys.name.clone()));
    }
    Ok(PrunedSpec { base: sys.clone(), cons: cons.sets })
}

/// Every state can delay forever or delay to an enabled output.
pub fn is_locally_consistent(sys: &System) -> bool {
    immediate_errors(sys).is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// An output is enabled where a positive delay is still possible.
    OutputUrgency { action: String },
    /// Time is bounded and no output is reachable.
    IndependentProgress,
    /// An input has no transition.
    InputEnabledness { action: String },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::OutputUrgency { action } => write!(f, "output urgency violated by {action}!"),
            ViolationKind::IndependentProgress => write!(f, "independent progress violated"),
            ViolationKind::InputEnabledness { action } => write!(f, "input {action}? not enabled"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub location: String,
    pub region: Federation,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone)]
pub struct ImplReport {
    pub violations: Vec<Violation>,
}

impl ImplReport {
    pub fn is_implementation(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn is_implementation(sys: &System) -> ImplReport {
    let mut violations = Vec::new();
    let imerr = immediate_errors(sys);
    for (l, loc) in sys.locations.iter().enumerate() {
        let inv = &loc.invariant;
        let can_delay = inv.pred_t_strict(&inv.complement());
        for o in &sys.alphabet.outputs {
            let en = sys
                .edges_on(l, o)
                .fold(Federation::empty(&sys.clocks), |acc, (_, e)| acc.union(&sys.enabled(e)));
            let bad = en.intersect(&can_delay).intersect(inv);
            if !bad.is_empty() {
                violations.push(Violation {
                    location: loc.id.clone(),
                    region: bad,
                    kind: ViolationKind::OutputUrgency { action: o.clone() },
                });
            }
        }
        if !imerr.sets[l].is_empty() {
            violations.push(Violation {
                location: loc.id.clone(),
                region: imerr.sets[l].clone(),
                kind: ViolationKind::IndependentProgress,
            });
        }
    }
    for g in check_input_enabled(sys) {
        violations.push(Violation {
            location: g.location,
            region: g.missing,
            kind: ViolationKind::InputEnabledness { action: g.action },
        });
    }
    ImplReport { violations }
}

#[cfg(test)]
mod tests;
