//! Timed I/O automata, their JSON model format and well-formedness checks.

mod guard;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::zones::{clocks_of, Clocks, Federation};

pub use guard::{Guard, Rel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelErrorKind {
    Schema,
    GuardSyntax,
    UnknownName,
    Duplicate,
    Alphabet,
    NonConjunctiveInvariant,
    InitialInvariant,
    Nondeterminism,
    MissingInitial,
}

impl ModelErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelErrorKind::Schema => "schema",
            ModelErrorKind::GuardSyntax => "guard-syntax",
            ModelErrorKind::UnknownName => "unknown-name",
            ModelErrorKind::Duplicate => "duplicate",
            ModelErrorKind::Alphabet => "alphabet",
            ModelErrorKind::NonConjunctiveInvariant => "non-conjunctive-invariant",
            ModelErrorKind::InitialInvariant => "initial-invariant",
            ModelErrorKind::Nondeterminism => "nondeterminism",
            ModelErrorKind::MissingInitial => "missing-initial",
        }
    }
}

impl fmt::Display for ModelErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model error with the place in the input it refers to.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ModelError {
    pub kind: ModelErrorKind,
    pub detail: String,
    pub location: Option<String>,
}

impl ModelError {
    pub fn new(kind: ModelErrorKind, detail: impl Into<String>) -> ModelError {
        ModelError { kind, detail: detail.into(), location: None }
    }

    pub fn at(mut self, loc: impl Into<String>) -> ModelError {
        let loc = loc.into();
        self.location = Some(match self.location.take() {
            Some(inner) => format!("{loc}, {inner}"),
            None => loc,
        });
        self
    }
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)?;
        if let Some(l) = &self.location {
            write!(f, " (at {l})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alphabet {
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(inputs: &[S], outputs: &[S]) -> Alphabet {
        Alphabet {
            inputs: inputs.iter().map(|s| s.as_ref().to_string()).collect(),
            outputs: outputs.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn actions(&self) -> BTreeSet<String> {
        self.inputs.union(&self.outputs).cloned().collect()
    }

    pub fn contains(&self, a: &str) -> bool {
        self.inputs.contains(a) || self.outputs.contains(a)
    }

    pub fn is_input(&self, a: &str) -> bool {
        self.inputs.contains(a)
    }

    pub fn is_output(&self, a: &str) -> bool {
        self.outputs.contains(a)
    }
}

#[derive(Debug, Clone)]
pub struct Location<G> {
    pub id: String,
    pub invariant: G,
}

#[derive(Debug, Clone)]
pub struct Edge<G> {
    pub source: usize,
    pub action: String,
    pub guard: G,
    pub resets: Vec<String>,
    pub target: usize,
}

/// Automaton whose guards and invariants are formulas of type `G`.
///
/// [`Tioa`] keeps the syntactic guards of a model; [`System`] carries
/// compiled federations and may have non-convex invariants (pruned specs).
#[derive(Debug, Clone)]
pub struct Automaton<G> {
    pub name: String,
    pub clocks: Clocks,
    pub alphabet: Alphabet,
    pub locations: Vec<Location<G>>,
    pub initial: usize,
    pub edges: Vec<Edge<G>>,
}

pub type Tioa = Automaton<Guard>;
pub type System = Automaton<Federation>;

impl<G> Automaton<G> {
    pub fn location_index(&self, id: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.id == id)
    }

    pub fn location_id(&self, l: usize) -> &str {
        &self.locations[l].id
    }

    pub fn clock_index(&self, c: &str) -> Option<usize> {
        self.clocks.iter().position(|x| x == c)
    }

    pub fn edges_from(&self, l: usize) -> impl Iterator<Item = (usize, &Edge<G>)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.source == l)
    }

    pub fn edges_on<'a>(&'a self, l: usize, a: &'a str) -> impl Iterator<Item = (usize, &'a Edge<G>)> {
        self.edges_from(l).filter(move |(_, e)| e.action == a)
    }

    /// Indices of edges grouped per source location, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.locations.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.source].push(k);
        }
        adj
    }
}

/// Operations the specification operators need from a guard representation.
pub trait Formula: Clone + fmt::Display {
    fn top(clocks: &Clocks) -> Self;
    fn bottom(clocks: &Clocks) -> Self;
    fn conj(&self, o: &Self) -> Self;
    fn disj(&self, o: &Self) -> Self;
    fn negation(&self, clocks: &Clocks) -> Self;
    /// `g[r := 0]`.
    fn zero_subst(&self, resets: &[String], clocks: &Clocks) -> Self;
    /// Move into `target` with clock `c` renamed to `rename(c)`.
    fn embed(&self, rename: &dyn Fn(&str) -> String, target: &Clocks) -> Self;
    fn is_bottom(&self) -> bool;
}

impl Formula for Guard {
    fn top(_: &Clocks) -> Self {
        Guard::True
    }
    fn bottom(_: &Clocks) -> Self {
        Guard::False
    }
    fn conj(&self, o: &Self) -> Self {
        Guard::and(self.clone(), o.clone())
    }
    fn disj(&self, o: &Self) -> Self {
        Guard::or(self.clone(), o.clone())
    }
    fn negation(&self, _: &Clocks) -> Self {
        self.negate()
    }
    fn zero_subst(&self, resets: &[String], _: &Clocks) -> Self {
        Guard::zero_subst(self, resets)
    }
    fn embed(&self, rename: &dyn Fn(&str) -> String, _: &Clocks) -> Self {
        self.rename(rename)
    }
    fn is_bottom(&self) -> bool {
        *self == Guard::False
    }
}

impl Formula for Federation {
    fn top(clocks: &Clocks) -> Self {
        Federation::universe(clocks)
    }
    fn bottom(clocks: &Clocks) -> Self {
        Federation::empty(clocks)
    }
    fn conj(&self, o: &Self) -> Self {
        self.intersect(o)
    }
    fn disj(&self, o: &Self) -> Self {
        self.union(o)
    }
    fn negation(&self, _: &Clocks) -> Self {
        self.complement()
    }
    fn zero_subst(&self, resets: &[String], _: &Clocks) -> Self {
        let idx = self.indices(resets).expect("reset of an unknown clock");
        self.reset_preimage_idx(&idx)
    }
    fn embed(&self, rename: &dyn Fn(&str) -> String, target: &Clocks) -> Self {
        let map: Vec<usize> = self
            .clocks()
            .iter()
            .map(|c| {
                let n = rename(c);
                target.iter().position(|t| *t == n).expect("embedding target lacks a clock")
            })
            .collect();
        self.lift(&map, target)
    }
    fn is_bottom(&self) -> bool {
        self.is_empty()
    }
}

impl Tioa {
    /// Compile guards and invariants to federations. Location and edge
    /// indices are preserved.
    pub fn compile(&self) -> Result<System, ModelError> {
        let mut locations = Vec::with_capacity(self.locations.len());
        for l in &self.locations {
            let inv = l
                .invariant
                .compile(&self.clocks)
                .map_err(|e| e.at(format!("automaton {}, location {}", self.name, l.id)))?;
            locations.push(Location { id: l.id.clone(), invariant: inv });
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            let g = e
                .guard
                .compile(&self.clocks)
                .map_err(|err| err.at(format!("automaton {}, edge #{k}", self.name)))?;
            edges.push(Edge {
                source: e.source,
                action: e.action.clone(),
                guard: g,
                resets: e.resets.clone(),
                target: e.target,
            });
        }
        Ok(System {
            name: self.name.clone(),
            clocks: self.clocks.clone(),
            alphabet: self.alphabet.clone(),
            locations,
            initial: self.initial,
            edges,
        })
    }

    /// Names, alphabet, conjunctive invariants, initial invariant, determinism.
    pub fn validate(&self) -> Result<(), ModelError> {
        let here = format!("automaton {}", self.name);
        let err = |kind, detail: String| Err(ModelError::new(kind, detail).at(here.clone()));
        let mut seen = BTreeSet::new();
        for c in self.clocks.iter() {
            if !seen.insert(c) {
                return err(ModelErrorKind::Duplicate, format!("clock `{c}` declared twice"));
            }
        }
        let mut ids = BTreeSet::new();
        for l in &self.locations {
            if !ids.insert(&l.id) {
                return err(ModelErrorKind::Duplicate, format!("location `{}` declared twice", l.id));
            }
        }
        if let Some(a) = self.alphabet.inputs.intersection(&self.alphabet.outputs).next() {
            return err(ModelErrorKind::Alphabet, format!("action `{a}` is both input and output"));
        }
        if self.initial >= self.locations.len() {
            return err(ModelErrorKind::MissingInitial, "no initial location".into());
        }
        let known = |c: &str| self.clocks.iter().any(|x| x == c);
        for l in &self.locations {
            if let Some(c) = l.invariant.clocks().into_iter().find(|c| !known(c)) {
                return err(ModelErrorKind::UnknownName, format!("unknown clock `{c}` in invariant of `{}`", l.id));
            }
            if !l.invariant.is_conjunctive() {
                return err(
                    ModelErrorKind::NonConjunctiveInvariant,
                    format!("invariant of `{}` is not a conjunction: {}", l.id, l.invariant),
                );
            }
        }
        for (k, e) in self.edges.iter().enumerate() {
            let at = |d: String| ModelError::new(ModelErrorKind::UnknownName, d).at(format!("{here}, edge #{k}"));
            if !self.alphabet.contains(&e.action) {
                return Err(at(format!("action `{}` is not in the alphabet", e.action)));
            }
            if let Some(c) = e.guard.clocks().into_iter().find(|c| !known(c)) {
                return Err(at(format!("unknown clock `{c}` in guard")));
            }
            if let Some(c) = e.resets.iter().find(|c| !known(c)) {
                return Err(at(format!("unknown clock `{c}` in resets")));
            }
        }
        let sys = self.compile()?;
        if !sys.locations[sys.initial].invariant.contains_zero() {
            return err(
                ModelErrorKind::InitialInvariant,
                format!("initial location `{}` does not admit the zero valuation", sys.location_id(sys.initial)),
            );
        }
        sys.check_determinism()
    }
}

impl System {
    pub fn inv(&self, l: usize) -> &Federation {
        &self.locations[l].invariant
    }

    /// Valuations from which the edge can fire: guard holds and the target
    /// invariant holds after the resets.
    pub fn enabled(&self, e: &Edge<Federation>) -> Federation {
        let idx = self.reset_indices(e);
        e.guard.intersect(&self.inv(e.target).reset_preimage_idx(&idx))
    }

    pub fn reset_indices(&self, e: &Edge<Federation>) -> Vec<usize> {
        e.resets.iter().map(|r| self.clock_index(r).expect("reset of unknown clock")).collect()
    }

    /// Per-clock maximal constants, index 0 being the reference clock.
    pub fn max_constants(&self) -> Vec<i32> {
        let mut m = vec![0; self.clocks.len() + 1];
        for l in &self.locations {
            l.invariant.max_constants(&mut m);
        }
        for e in &self.edges {
            e.guard.max_constants(&mut m);
        }
        m
    }

    pub fn check_determinism(&self) -> Result<(), ModelError> {
        let en: Vec<Federation> = self.edges.iter().map(|e| self.enabled(e)).collect();
        for (i, a) in self.edges.iter().enumerate() {
            for (j, b) in self.edges.iter().enumerate().skip(i + 1) {
                if a.source != b.source || a.action != b.action {
                    continue;
                }
                let ra: BTreeSet<&String> = a.resets.iter().collect();
                let rb: BTreeSet<&String> = b.resets.iter().collect();
                if ra == rb && a.target == b.target {
                    continue;
                }
                if en[i].intersects(&en[j]) {
                    return Err(ModelError::new(
                        ModelErrorKind::Nondeterminism,
                        format!(
                            "edges #{i} and #{j} on `{}` from `{}` are both enabled on {}",
                            a.action,
                            self.location_id(a.source),
                            en[i].intersect(&en[j])
                        ),
                    )
                    .at(format!("automaton {}", self.name)));
                }
            }
        }
        Ok(())
    }
}

/// Valuations inside a location invariant where an input has no transition.
#[derive(Debug, Clone)]
pub struct InputGap {
    pub location: String,
    pub action: String,
    pub missing: Federation,
}

/// Report every (location, input) pair that is not enabled on the whole
/// location invariant.
pub fn check_input_enabled(sys: &System) -> Vec<InputGap> {
    let mut gaps = Vec::new();
    for (l, loc) in sys.locations.iter().enumerate() {
        for i in &sys.alphabet.inputs {
            let mut en = Federation::empty(&sys.clocks);
            for (_, e) in sys.edges_on(l, i) {
                en = en.union(&sys.enabled(e));
            }
            let missing = loc.invariant.subtract(&en);
            if !missing.is_empty() {
                gaps.push(InputGap { location: loc.id.clone(), action: i.clone(), missing });
            }
        }
    }
    gaps
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    automata: Vec<AutomatonJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomatonJson {
    name: String,
    #[serde(default)]
    clocks: Vec<String>,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
    locations: Vec<LocationJson>,
    #[serde(default)]
    edges: Vec<EdgeJson>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationJson {
    id: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    initial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    invariant: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    source: String,
    action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    resets: Vec<String>,
    target: String,
}

fn from_json(a: AutomatonJson) -> Result<Tioa, ModelError> {
    let here = format!("automaton {}", a.name);
    let mut locations = Vec::new();
    let mut initial = None;
    for l in &a.locations {
        let inv = Guard::parse(l.invariant.as_deref().unwrap_or(""))
            .map_err(|e| e.at(format!("{here}, location {}", l.id)))?;
        if l.initial {
            if initial.is_some() {
                return Err(ModelError::new(ModelErrorKind::Duplicate, "more than one initial location").at(here));
            }
            initial = Some(locations.len());
        }
        locations.push(Location { id: l.id.clone(), invariant: inv });
    }
    let initial = initial.ok_or_else(|| ModelError::new(ModelErrorKind::MissingInitial, "no initial location").at(here.clone()))?;
    let index: BTreeMap<&str, usize> = a.locations.iter().enumerate().map(|(k, l)| (l.id.as_str(), k)).collect();
    let mut edges = Vec::new();
    for (k, e) in a.edges.iter().enumerate() {
        let at = format!("{here}, edge #{k}");
        let find = |id: &str| {
            index.get(id).copied().ok_or_else(|| {
                ModelError::new(ModelErrorKind::UnknownName, format!("unknown location `{id}`")).at(at.clone())
            })
        };
        let guard = Guard::parse(e.guard.as_deref().unwrap_or("")).map_err(|err| err.at(at.clone()))?;
        edges.push(Edge {
            source: find(&e.source)?,
            action: e.action.clone(),
            guard,
            resets: e.resets.clone(),
            target: find(&e.target)?,
        });
    }
    let t = Tioa {
        name: a.name,
        clocks: clocks_of(&a.clocks),
        alphabet: Alphabet::new(&a.inputs, &a.outputs),
        locations,
        initial,
        edges,
    };
    t.validate()?;
    Ok(t)
}

fn to_json(t: &Tioa) -> AutomatonJson {
    let opt = |g: &Guard| if *g == Guard::True { None } else { Some(g.to_string()) };
    AutomatonJson {
        name: t.name.clone(),
        clocks: t.clocks.to_vec(),
        inputs: t.alphabet.inputs.iter().cloned().collect(),
        outputs: t.alphabet.outputs.iter().cloned().collect(),
        locations: t
            .locations
            .iter()
            .enumerate()
            .map(|(k, l)| LocationJson { id: l.id.clone(), initial: k == t.initial, invariant: opt(&l.invariant) })
            .collect(),
        edges: t
            .edges
            .iter()
            .map(|e| EdgeJson {
                source: t.location_id(e.source).to_string(),
                action: e.action.clone(),
                guard: opt(&e.guard),
                resets: e.resets.clone(),
                target: t.location_id(e.target).to_string(),
            })
            .collect(),
    }
}

/// Parse and validate every automaton of a model file.
pub fn parse_models(src: &str) -> Result<Vec<Tioa>, ModelError> {
    let file: ModelFile = serde_json::from_str(src).map_err(|e| {
        ModelError::new(ModelErrorKind::Schema, e.to_string()).at(format!("line {}, column {}", e.line(), e.column()))
    })?;
    let mut names = BTreeSet::new();
    let mut out = Vec::new();
    for a in file.automata {
        if !names.insert(a.name.clone()) {
            return Err(ModelError::new(ModelErrorKind::Duplicate, format!("automaton `{}` declared twice", a.name)));
        }
        out.push(from_json(a)?);
    }
    Ok(out)
}

/// Serialize automata back into the model format.
pub fn serialize_models(ts: &[Tioa]) -> String {
    let file = ModelFile { automata: ts.iter().map(to_json).collect() };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MACHINE: &str = r#"{"automata":[{"name":"M","clocks":["y"],"inputs":["coin"],"outputs":["cof","tea"],
      "locations":[{"id":"idle","initial":true},{"id":"busy","invariant":"y <= 6"}],
      "edges":[{"source":"idle","action":"coin","resets":["y"],"target":"busy"},
               {"source":"busy","action":"cof","guard":"y >= 4","target":"idle"},
               {"source":"busy","action":"tea","target":"idle"},
               {"source":"idle","action":"tea","guard":"y >= 2","target":"idle"},
               {"source":"busy","action":"coin","target":"busy"}]}]}"#;

    #[test]
    fn parse_and_roundtrip() {
        let ms = parse_models(MACHINE).unwrap();
        assert_eq!(ms[0].locations.len(), 2);
        assert_eq!(ms[0].edges.len(), 5);
        let again = parse_models(&serialize_models(&ms)).unwrap();
        assert_eq!(serialize_models(&again), serialize_models(&ms));
    }

    #[test]
    fn nondeterminism_is_rejected() {
        let src = MACHINE.replace(
            r#"{"source":"busy","action":"coin","target":"busy"}"#,
            r#"{"source":"busy","action":"coin","target":"busy"},{"source":"busy","action":"coin","target":"idle"}"#,
        );
        let e = parse_models(&src).unwrap_err();
        assert_eq!(e.kind, ModelErrorKind::Nondeterminism);
        assert!(e.location.unwrap().contains("automaton M"));
    }

    #[test]
    fn schema_and_name_errors() {
        assert_eq!(parse_models("{\"automata\": 3}").unwrap_err().kind, ModelErrorKind::Schema);
        let src = MACHINE.replace(r#""target":"busy"}]"#, r#""target":"nowhere"}]"#);
        let e = parse_models(&src).unwrap_err();
        assert_eq!(e.kind, ModelErrorKind::UnknownName);
        assert!(e.location.unwrap().contains("edge #4"));
        let src = MACHINE.replace(r#""invariant":"y <= 6""#, r#""invariant":"y <= 6 || y > 8""#);
        assert_eq!(parse_models(&src).unwrap_err().kind, ModelErrorKind::NonConjunctiveInvariant);
        let src = MACHINE.replace(r#"{"id":"idle","initial":true}"#, r#"{"id":"idle","initial":true,"invariant":"y > 1"}"#);
        assert_eq!(parse_models(&src).unwrap_err().kind, ModelErrorKind::InitialInvariant);
        let src = MACHINE.replace(r#""outputs":["cof","tea"]"#, r#""outputs":["cof","tea","coin"]"#);
        assert_eq!(parse_models(&src).unwrap_err().kind, ModelErrorKind::Alphabet);
    }

    #[test]
    fn input_gaps() {
        let ms = parse_models(MACHINE).unwrap();
        assert!(check_input_enabled(&ms[0].compile().unwrap()).is_empty());
        let src = MACHINE.replace(r#",
               {"source":"busy","action":"coin","target":"busy"}"#, "");
        assert_ne!(src, MACHINE);
        let ms = parse_models(&src).unwrap();
        let gaps = check_input_enabled(&ms[0].compile().unwrap());
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].location, "busy");
    }
}
