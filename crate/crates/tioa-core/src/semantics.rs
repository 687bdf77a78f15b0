//! Symbolic semantics: symbolic states, delay and discrete successors and
//! forward zone-graph exploration.

use std::collections::{BTreeSet, VecDeque};

use crate::model::{Location, System};
use crate::zones::Federation;

#[derive(Debug, Clone)]
pub struct SymbolicState {
    pub location: usize,
    pub zone: Federation,
}

/// An automaton together with its consistent states per location.
#[derive(Debug, Clone)]
pub struct PrunedSpec {
    pub base: System,
    pub cons: Vec<Federation>,
}

impl PrunedSpec {
    pub fn cons_of(&self, id: &str) -> Option<&Federation> {
        self.base.location_index(id).map(|l| &self.cons[l])
    }

    /// The pruned semantics as an automaton: each invariant becomes the cons
    /// set and guards are restricted to the source's cons set.
    pub fn system(&self) -> System {
        let mut s = self.base.clone();
        s.locations = self
            .base
            .locations
            .iter()
            .zip(&self.cons)
            .map(|(l, c)| Location { id: l.id.clone(), invariant: c.clone() })
            .collect();
        for e in &mut s.edges {
            e.guard = e.guard.intersect(&self.cons[e.source]);
        }
        s
    }
}

/// `(l0, {0})`, or `None` when the zero valuation violates `Inv(l0)`.
pub fn initial_state(sys: &System) -> Option<SymbolicState> {
    let z = Federation::zero(&sys.clocks).intersect(sys.inv(sys.initial));
    (!z.is_empty()).then_some(SymbolicState { location: sys.initial, zone: z })
}

/// Every valuation reachable from the zone by a delay whose whole path stays
/// inside `inv`.
pub fn delay_closure(zone: &Federation, inv: &Federation) -> Federation {
    zone.intersect(inv).post_avoiding(&inv.complement())
}

pub fn delay_successor(s: &SymbolicState, inv: &Federation) -> SymbolicState {
    SymbolicState { location: s.location, zone: delay_closure(&s.zone, inv) }
}

/// One successor per edge labelled `a` that can fire from the state.
pub fn discrete_successors(sys: &System, s: &SymbolicState, a: &str) -> Vec<(usize, SymbolicState)> {
    let mut out = Vec::new();
    for (k, e) in sys.edges_on(s.location, a) {
        let z = s.zone.intersect(&e.guard);
        if z.is_empty() {
            continue;
        }
        let z = z.reset_idx(&sys.reset_indices(e)).intersect(sys.inv(e.target));
        if !z.is_empty() {
            out.push((k, SymbolicState { location: e.target, zone: z }));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Reach {
    pub states: Vec<SymbolicState>,
    /// Per location, union of the explored zones.
    pub passed: Vec<Federation>,
    /// Edges that fire from some explored state.
    pub fired: BTreeSet<usize>,
}

impl Reach {
    pub fn locations(&self) -> BTreeSet<usize> {
        self.states.iter().map(|s| s.location).collect()
    }
}

/// Breadth-first zone-graph exploration with extrapolation and subsumption
/// against the union of the zones already stored for a location.
pub fn reachable(sys: &System) -> Reach {
    let max = sys.max_constants();
    let mut passed: Vec<Federation> = vec![Federation::empty(&sys.clocks); sys.locations.len()];
    let mut states = Vec::new();
    let mut fired = BTreeSet::new();
    let mut waiting = VecDeque::new();
    let adj = sys.adjacency();
    let push = |s: SymbolicState, passed: &mut Vec<Federation>, waiting: &mut VecDeque<usize>, states: &mut Vec<SymbolicState>| {
        let z = delay_closure(&s.zone, sys.inv(s.location)).extrapolate(&max);
        if z.is_empty() || z.is_subset(&passed[s.location]) {
            return;
        }
        passed[s.location] = passed[s.location].union(&z);
        states.push(SymbolicState { location: s.location, zone: z });
        waiting.push_back(states.len() - 1);
    };
    if let Some(s0) = initial_state(sys) {
        push(s0, &mut passed, &mut waiting, &mut states);
    }
    while let Some(k) = waiting.pop_front() {
        let s = states[k].clone();
        for &ei in &adj[s.location] {
            let e = &sys.edges[ei];
            let z = s.zone.intersect(&e.guard);
            if z.is_empty() {
                continue;
            }
            let z = z.reset_idx(&sys.reset_indices(e)).intersect(sys.inv(e.target));
            if z.is_empty() {
                continue;
            }
            fired.insert(ei);
            push(SymbolicState { location: e.target, zone: z }, &mut passed, &mut waiting, &mut states);
        }
    }
    Reach { states, passed, fired }
}

/// Keep only reachable locations and edges that fire from a reachable state.
pub fn restrict_to_reachable<G: Clone>(
    a: &crate::model::Automaton<G>,
    reach: &Reach,
) -> crate::model::Automaton<G> {
    let keep = reach.locations();
    let mut map = vec![usize::MAX; a.locations.len()];
    let mut locations = Vec::new();
    for (l, loc) in a.locations.iter().enumerate() {
        if keep.contains(&l) {
            map[l] = locations.len();
            locations.push(loc.clone());
        }
    }
    let edges = a
        .edges
        .iter()
        .enumerate()
        .filter(|(k, _)| reach.fired.contains(k))
        .map(|(_, e)| {
            let mut e = e.clone();
            e.source = map[e.source];
            e.target = map[e.target];
            e
        })
        .collect();
    crate::model::Automaton {
        name: a.name.clone(),
        clocks: a.clocks.clone(),
        alphabet: a.alphabet.clone(),
        locations,
        initial: map[a.initial],
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_models;
    use crate::zones::{clocks_of, Bound};

    const MACHINE: &str = r#"{"automata":[{"name":"M","clocks":["y"],"inputs":["coin"],"outputs":["cof","tea"],
      "locations":[{"id":"idle","initial":true},{"id":"busy","invariant":"y <= 6"}],
      "edges":[{"source":"idle","action":"coin","resets":["y"],"target":"busy"},
               {"source":"busy","action":"cof","guard":"y >= 4","target":"idle"},
               {"source":"busy","action":"tea","target":"idle"},
               {"source":"idle","action":"tea","guard":"y >= 2","target":"idle"},
               {"source":"busy","action":"coin","target":"busy"}]}]}"#;

    fn machine() -> System {
        parse_models(MACHINE).unwrap()[0].compile().unwrap()
    }

    #[test]
    fn initial_and_delay() {
        let m = machine();
        let s0 = initial_state(&m).unwrap();
        assert_eq!(s0.location, 0);
        assert!(s0.zone.equals(&Federation::zero(&m.clocks)));
        let busy = SymbolicState { location: 1, zone: Federation::zero(&m.clocks) };
        let d = delay_successor(&busy, m.inv(1));
        assert!(d.zone.equals(m.inv(1)));
        let full = Federation::universe(&m.clocks);
        assert!(delay_successor(&s0, &full).zone.equals(&s0.zone.up()));
    }

    #[test]
    fn delay_does_not_jump_gaps() {
        let c = clocks_of(&["x"]);
        let inv = Federation::bound(&c, 0, true, Bound::le(2)).union(&Federation::bound(&c, 0, false, Bound::le(-3)));
        let one = Federation::bound(&c, 0, true, Bound::le(1)).intersect(&Federation::bound(&c, 0, false, Bound::le(-1)));
        let r = delay_closure(&one, &inv);
        let expect = Federation::bound(&c, 0, false, Bound::le(-1)).intersect(&Federation::bound(&c, 0, true, Bound::le(2)));
        assert!(r.equals(&expect));
    }

    #[test]
    fn discrete_examples() {
        let m = machine();
        let busy = SymbolicState { location: 1, zone: m.inv(1).clone() };
        let succ = discrete_successors(&m, &busy, "cof");
        assert_eq!(succ.len(), 1);
        let (_, s) = &succ[0];
        assert_eq!(s.location, 0);
        let expect = Federation::bound(&m.clocks, 0, false, Bound::le(-4)).intersect(m.inv(1));
        assert!(s.zone.equals(&expect));
        let idle = SymbolicState { location: 0, zone: Federation::zero(&m.clocks) };
        assert!(discrete_successors(&m, &idle, "cof").is_empty());
    }

    #[test]
    fn machine_reachability() {
        let r = reachable(&machine());
        assert_eq!(r.states.len(), 2);
        assert_eq!(r.fired.len(), 5);
    }

    #[test]
    fn single_location() {
        let src = r#"{"automata":[{"name":"One","locations":[{"id":"a","initial":true}]}]}"#;
        let t = parse_models(src).unwrap()[0].compile().unwrap();
        assert_eq!(reachable(&t).states.len(), 1);
    }
}
