//! Refinement and bisimulation by forward exploration of the joint zone graph.
//!
//! Both checks rely on determinism: every move of one side has at most one
//! matching move of the other, so the reachable joint states form the only
//! candidate relation, and the check fails exactly when a joint state is
//! reachable from which one side has a move the other cannot match.

use std::collections::VecDeque;

use crate::model::{Alphabet, System};
use crate::operators::join_clocks;
use crate::semantics::delay_closure;
use crate::zones::{choose_delay, Clocks, Federation, Q};

use super::{describe, AnalysisError, Counterexample, Stats, Step, Verdict, Witness};

/// A symbolic state of the joint exploration.
#[derive(Debug, Clone)]
pub struct PairState {
    pub left: String,
    pub right: String,
    pub zone: Federation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Refine,
    Bisim,
}

struct LiftedEdge {
    source: usize,
    action: String,
    guard: Federation,
    resets: Vec<usize>,
    target: usize,
}

struct Side<'a> {
    sys: &'a System,
    inv: Vec<Federation>,
    edges: Vec<LiftedEdge>,
}

impl<'a> Side<'a> {
    fn new(sys: &'a System, names: &[String], clocks: &Clocks) -> Side<'a> {
        let map: Vec<usize> = names.iter().map(|n| clocks.iter().position(|c| c == n).unwrap()).collect();
        let lift = |f: &Federation| f.lift(&map, clocks);
        let edges = sys
            .edges
            .iter()
            .map(|e| LiftedEdge {
                source: e.source,
                action: e.action.clone(),
                guard: lift(&e.guard),
                resets: sys.reset_indices(e).into_iter().map(|k| map[k]).collect(),
                target: e.target,
            })
            .collect();
        Side { sys, inv: sys.locations.iter().map(|l| lift(&l.invariant)).collect(), edges }
    }

    fn edges_on(&self, l: usize, a: &str) -> Vec<usize> {
        (0..self.edges.len()).filter(|&k| self.edges[k].source == l && self.edges[k].action == a).collect()
    }

    fn enabled(&self, k: usize) -> Federation {
        let e = &self.edges[k];
        e.guard.intersect(&self.inv[e.target].reset_preimage_idx(&e.resets))
    }

    fn enabled_on(&self, l: usize, a: &str, clocks: &Clocks) -> Federation {
        self.edges_on(l, a).into_iter().fold(Federation::empty(clocks), |acc, k| acc.union(&self.enabled(k)))
    }
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Sync(usize, usize),
    Left(usize),
    Right(usize),
}

#[derive(Debug, Clone)]
enum Bad {
    /// The named side can delay while the other cannot follow.
    Delay { left_moves: bool },
    /// The named side can take the action, the other cannot.
    Action { action: String, output: bool, left_moves: bool },
}

struct JointLoc {
    inv: Federation,
    moves: Vec<(Move, String, bool)>,
    bad: Vec<(Bad, Federation)>,
}

struct Game<'a> {
    a: Side<'a>,
    b: Side<'a>,
    clocks: Clocks,
    locs: Vec<JointLoc>,
    nb: usize,
}

struct Node {
    la: usize,
    lb: usize,
    zone: Federation,
    parent: Option<(usize, usize)>,
}

fn delay_bad(from: &Federation, other: &Federation) -> Federation {
    from.subtract(other).pred_t(&from.complement())
}

impl<'a> Game<'a> {
    fn new(a: &'a System, b: &'a System, mode: Mode) -> Game<'a> {
        let (clocks, ra, rb) = join_clocks(&a.clocks, &b.clocks);
        let sa = Side::new(a, &ra, &clocks);
        let sb = Side::new(b, &rb, &clocks);
        let (xa, xb) = (&a.alphabet, &b.alphabet);
        let mut locs = Vec::new();
        for la in 0..a.locations.len() {
            for lb in 0..b.locations.len() {
                let mut moves = Vec::new();
                let mut bad = vec![(Bad::Delay { left_moves: true }, delay_bad(&sa.inv[la], &sb.inv[lb]))];
                if mode == Mode::Bisim {
                    bad.push((Bad::Delay { left_moves: false }, delay_bad(&sb.inv[lb], &sa.inv[la])));
                }
                let sync = |act: &str, output: bool, moves: &mut Vec<(Move, String, bool)>| {
                    for ka in sa.edges_on(la, act) {
                        for kb in sb.edges_on(lb, act) {
                            moves.push((Move::Sync(ka, kb), act.to_string(), output));
                        }
                    }
                };
                let ea = |act: &str| sa.enabled_on(la, act, &clocks);
                let eb = |act: &str| sb.enabled_on(lb, act, &clocks);
                let left_only = |act: &str, output: bool, moves: &mut Vec<(Move, String, bool)>| {
                    for ka in sa.edges_on(la, act) {
                        moves.push((Move::Left(ka), act.to_string(), output));
                    }
                };
                let right_only = |act: &str, output: bool, moves: &mut Vec<(Move, String, bool)>| {
                    for kb in sb.edges_on(lb, act) {
                        moves.push((Move::Right(kb), act.to_string(), output));
                    }
                };
                match mode {
                    Mode::Refine => {
                        for i in &xb.inputs {
                            if xa.inputs.contains(i) {
                                let f = eb(i).subtract(&ea(i));
                                bad.push((Bad::Action { action: i.clone(), output: false, left_moves: false }, f));
                                sync(i, false, &mut moves);
                            } else {
                                right_only(i, false, &mut moves);
                            }
                        }
                        for o in &xa.outputs {
                            if xb.outputs.contains(o) {
                                let f = ea(o).subtract(&eb(o));
                                bad.push((Bad::Action { action: o.clone(), output: true, left_moves: true }, f));
                                sync(o, true, &mut moves);
                            } else {
                                left_only(o, true, &mut moves);
                            }
                        }
                    }
                    Mode::Bisim => {
                        for act in xa.actions() {
                            let output = xa.is_output(&act);
                            if xb.contains(&act) {
                                let (fa, fb) = (ea(&act), eb(&act));
                                bad.push((
                                    Bad::Action { action: act.clone(), output, left_moves: true },
                                    fa.subtract(&fb),
                                ));
                                bad.push((
                                    Bad::Action { action: act.clone(), output: xb.is_output(&act), left_moves: false },
                                    fb.subtract(&fa),
                                ));
                                sync(&act, output, &mut moves);
                            } else {
                                left_only(&act, output, &mut moves);
                            }
                        }
                        for act in xb.actions() {
                            if !xa.contains(&act) {
                                right_only(&act, xb.is_output(&act), &mut moves);
                            }
                        }
                    }
                }
                bad.retain(|(_, f)| !f.is_empty());
                locs.push(JointLoc { inv: sa.inv[la].intersect(&sb.inv[lb]), moves, bad });
            }
        }
        let nb = b.locations.len();
        Game { a: sa, b: sb, clocks, locs, nb }
    }

    fn jl(&self, la: usize, lb: usize) -> &JointLoc {
        &self.locs[la * self.nb + lb]
    }

    fn target(&self, la: usize, lb: usize, m: Move) -> (usize, usize) {
        match m {
            Move::Sync(ka, kb) => (self.a.edges[ka].target, self.b.edges[kb].target),
            Move::Left(ka) => (self.a.edges[ka].target, lb),
            Move::Right(kb) => (la, self.b.edges[kb].target),
        }
    }

    fn guard_and_resets(&self, m: Move) -> (Federation, Vec<usize>) {
        match m {
            Move::Sync(ka, kb) => {
                let (ea, eb) = (&self.a.edges[ka], &self.b.edges[kb]);
                let mut r = ea.resets.clone();
                r.extend(eb.resets.iter().copied());
                (ea.guard.intersect(&eb.guard), r)
            }
            Move::Left(ka) => (self.a.edges[ka].guard.clone(), self.a.edges[ka].resets.clone()),
            Move::Right(kb) => (self.b.edges[kb].guard.clone(), self.b.edges[kb].resets.clone()),
        }
    }

    fn post(&self, zone: &Federation, la: usize, lb: usize, m: Move) -> Federation {
        let (g, r) = self.guard_and_resets(m);
        let (ta, tb) = self.target(la, lb, m);
        zone.intersect(&g).reset_idx(&r).intersect(&self.jl(ta, tb).inv)
    }

    fn initial(&self) -> Federation {
        Federation::zero(&self.clocks).intersect(&self.jl(self.a.sys.initial, self.b.sys.initial).inv)
    }

    fn max_constants(&self) -> Vec<i32> {
        let mut m = vec![0; self.clocks.len() + 1];
        for jl in &self.locs {
            jl.inv.max_constants(&mut m);
        }
        for e in self.a.edges.iter().chain(&self.b.edges) {
            e.guard.max_constants(&mut m);
        }
        m
    }

    fn run(&self) -> Verdict {
        let max = self.max_constants();
        let mut passed = vec![Federation::empty(&self.clocks); self.locs.len()];
        let mut nodes: Vec<Node> = Vec::new();
        let mut waiting = VecDeque::new();
        let mut pops = 0;
        let z0 = self.initial();
        let start = |sys: &System| crate::semantics::initial_state(sys).is_some();
        let (sa, sb) = (start(self.a.sys), start(self.b.sys));
        if sa != sb {
            let who = if sa { self.b.sys } else { self.a.sys };
            let zero = vec![Q::from_integer(0); who.clocks.len()];
            let cex = Counterexample {
                steps: vec![],
                state: describe(&[who.location_id(who.initial)], &who.clocks, &zero),
                reason: format!("initial valuation of {} violates its invariant", who.name),
            };
            return Verdict::fail(cex, Stats { symbolic_states: 0, fixpoint_iterations: 0 });
        }
        let mut pending = vec![(self.a.sys.initial, self.b.sys.initial, z0, None)];
        loop {
            for (la, lb, z, parent) in pending.drain(..) {
                let jl = self.jl(la, lb);
                let z = delay_closure(&z, &jl.inv).extrapolate(&max);
                let slot = la * self.nb + lb;
                if z.is_empty() || z.is_subset(&passed[slot]) {
                    continue;
                }
                passed[slot] = passed[slot].union(&z);
                nodes.push(Node { la, lb, zone: z, parent });
                let k = nodes.len() - 1;
                if let Some(bad) = jl.bad.iter().position(|(_, f)| f.intersects(&nodes[k].zone)) {
                    let stats = Stats { symbolic_states: nodes.len(), fixpoint_iterations: pops };
                    return Verdict::fail(self.counterexample(&nodes, k, bad), stats);
                }
                waiting.push_back(k);
            }
            let Some(k) = waiting.pop_front() else { break };
            pops += 1;
            let (la, lb) = (nodes[k].la, nodes[k].lb);
            for (mi, (m, _, _)) in self.jl(la, lb).moves.iter().enumerate() {
                let z = self.post(&nodes[k].zone, la, lb, *m);
                if !z.is_empty() {
                    let (ta, tb) = self.target(la, lb, *m);
                    pending.push((ta, tb, z, Some((k, mi))));
                }
            }
        }
        let rel = nodes
            .iter()
            .map(|n| PairState {
                left: self.a.sys.location_id(n.la).to_string(),
                right: self.b.sys.location_id(n.lb).to_string(),
                zone: n.zone.clone(),
            })
            .collect();
        Verdict::pass(Witness::Relation(rel), Stats { symbolic_states: nodes.len(), fixpoint_iterations: pops })
    }

    /// Concrete trace to the bad set of node `k`: exact zones are recomputed
    /// along the discrete path, narrowed backwards to the states that lead to
    /// the bad set, and walked forwards with simple rational delays.
    fn counterexample(&self, nodes: &[Node], k: usize, bad: usize) -> Counterexample {
        let mut path = vec![k];
        while let Some((p, _)) = nodes[*path.last().unwrap()].parent {
            path.push(p);
        }
        path.reverse();
        let locs: Vec<(usize, usize)> = path.iter().map(|&i| (nodes[i].la, nodes[i].lb)).collect();
        let moves: Vec<usize> = path[1..].iter().map(|&i| nodes[i].parent.unwrap().1).collect();
        let mv = |step: usize| self.jl(locs[step].0, locs[step].1).moves[moves[step]].clone();

        // Exact forward zones: before and after the delay at each step.
        let mut before = vec![self.initial()];
        let mut after = Vec::new();
        for step in 0..locs.len() {
            let (la, lb) = locs[step];
            after.push(delay_closure(&before[step], &self.jl(la, lb).inv));
            if step + 1 < locs.len() {
                before.push(self.post(&after[step], la, lb, mv(step).0));
            }
        }
        let n = locs.len() - 1;
        let (kind, bad_set) = &self.jl(locs[n].0, locs[n].1).bad[bad];

        // Backward: reach[step] are the post-delay states that lead to the bad set.
        let mut reach = vec![Federation::empty(&self.clocks); locs.len()];
        reach[n] = after[n].intersect(bad_set);
        assert!(!reach[n].is_empty(), "exact path misses the bad set");
        for step in (0..n).rev() {
            let nxt = &self.jl(locs[step + 1].0, locs[step + 1].1).inv;
            let entry = before[step + 1].intersect(&reach[step + 1].pred_t(&nxt.complement()));
            let (g, r) = self.guard_and_resets(mv(step).0);
            reach[step] = after[step].intersect(&g).intersect(&entry.reset_preimage_idx(&r));
        }

        let mut v = vec![Q::from_integer(0); self.clocks.len()];
        let mut steps = Vec::new();
        for step in 0..=n {
            let (la, lb) = locs[step];
            let inv = &self.jl(la, lb).inv;
            let d = choose_delay(&v, &reach[step], &inv.complement()).expect("no delay along the trace");
            advance(&mut v, d);
            steps.push(Step::Delay(d));
            if step < n {
                let (m, action, output) = mv(step);
                steps.push(Step::Action { name: action, output });
                for r in self.guard_and_resets(m).1 {
                    v[r] = Q::from_integer(0);
                }
            }
        }
        let (la, lb) = locs[n];
        let state = describe(
            &[self.a.sys.location_id(la), self.b.sys.location_id(lb)],
            &self.clocks,
            &v,
        );
        let (left, right) = (&self.a.sys.name, &self.b.sys.name);
        let reason = match kind {
            Bad::Delay { left_moves } => {
                let (from, to) = if *left_moves { (&self.a.inv[la], &self.b.inv[lb]) } else { (&self.b.inv[lb], &self.a.inv[la]) };
                let d = choose_delay(&v, &from.subtract(to), &from.complement()).expect("no violating delay");
                steps.push(Step::Delay(d));
                let (x, y) = if *left_moves { (left, right) } else { (right, left) };
                format!("{x} can delay {d} but {y} cannot")
            }
            Bad::Action { action, output, left_moves } => {
                steps.push(Step::Action { name: action.clone(), output: *output });
                let (x, y) = if *left_moves { (left, right) } else { (right, left) };
                let sfx = if *output { "!" } else { "?" };
                format!("{x} can take {action}{sfx} but {y} cannot")
            }
        };
        Counterexample { steps, state, reason }
    }
}

fn advance(v: &mut [Q], d: Q) {
    for x in v {
        *x += d;
    }
}

fn check_refinement_alphabets(s: &Alphabet, t: &Alphabet) -> Result<(), AnalysisError> {
    if let Some(a) = s.inputs.difference(&t.inputs).next() {
        return Err(AnalysisError::Alphabet(format!("input `{a}` of the refining side is not an input of the refined side")));
    }
    if let Some(a) = t.outputs.difference(&s.outputs).next() {
        return Err(AnalysisError::Alphabet(format!("output `{a}` of the refined side is not an output of the refining side")));
    }
    if let Some(a) = t.inputs.difference(&s.inputs).find(|a| s.outputs.contains(*a)) {
        return Err(AnalysisError::Alphabet(format!("`{a}` is an input of the refined side and an output of the refining side")));
    }
    Ok(())
}

/// `s <= t`: alternating timed simulation of `t` by `s`.
pub fn refinement(s: &System, t: &System) -> Result<Verdict, AnalysisError> {
    check_refinement_alphabets(&s.alphabet, &t.alphabet)?;
    Ok(Game::new(s, t, Mode::Refine).run())
}

/// Timed bisimulation; actions outside the other side's alphabet move one
/// side only.
pub fn bisimilar(a: &System, b: &System) -> Verdict {
    Game::new(a, b, Mode::Bisim).run()
}
