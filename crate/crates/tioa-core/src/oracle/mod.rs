//! Region-graph oracle working on concrete rational states.
//!
//! Every system is seen as a timed transition system ([`Tiots`]) and explored
//! one region at a time: a state is replaced by the canonical point of its
//! region, delays are sampled once per region on the delay ray and the
//! semantic definitions (error states, timed predecessors, refinement and
//! bisimulation relations) are evaluated over the resulting finite graph.
//! None of this code shares the symbolic engine's zone algorithms.

mod dynamic;
mod systems;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::Alphabet;
use crate::zones::Q;

pub use dynamic::{SemExpr, SemState};
pub use systems::{Evaluable, Product, ProductKind, Pruned, QState, Quotient, TState, TioaSem};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("alphabet mismatch: {0}")]
    Alphabet(String),
}

/// Bounds on what the oracle agrees to explore.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_clocks: usize,
    pub max_constant: i32,
    pub max_nodes: usize,
}

impl Limits {
    pub const DEFAULT: Limits = Limits { max_clocks: 4, max_constant: 10, max_nodes: 200_000 };
    pub const EXTENDED: Limits = Limits { max_clocks: 8, max_constant: 24, max_nodes: 2_000_000 };

    fn check(&self, what: &str, max: &[i32]) -> Result<(), OracleError> {
        if max.len() > self.max_clocks {
            return Err(OracleError::SizeGuard(format!("{what} has {} clocks (limit {})", max.len(), self.max_clocks)));
        }
        if let Some(&c) = max.iter().find(|&&c| c > self.max_constant) {
            return Err(OracleError::SizeGuard(format!("{what} uses constant {c} (limit {})", self.max_constant)));
        }
        Ok(())
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits::DEFAULT
    }
}

/// A timed input/output transition system with deterministic moves.
pub trait Tiots {
    type State: Clone + fmt::Debug;
    fn alphabet(&self) -> &Alphabet;
    /// Maximal constant per clock; its length is the number of clocks.
    fn max_constants(&self) -> Vec<i32>;
    fn initial(&self) -> Option<Self::State>;
    fn delay(&self, s: &Self::State, d: Q) -> Option<Self::State>;
    fn step(&self, s: &Self::State, a: &str) -> Option<Self::State>;
    /// Discrete part of the state.
    fn loc_key(&self, s: &Self::State) -> String;
    fn valuation(&self, s: &Self::State) -> Vec<Q>;
    fn with_valuation(&self, s: &Self::State, v: &[Q]) -> Self::State;
    /// One state per discrete location, with the zero valuation.
    fn locations(&self) -> Vec<Self::State>;
    /// Whether a delay by `d + e` is a delay by `d` followed by `e`.
    fn additive(&self) -> bool {
        true
    }
}

/// Region of a valuation: per clock the integer part and the rank of its
/// fractional part (0 when the fraction is zero). Clocks above their maximal
/// constant are stored as `(max + 1, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region(pub Vec<(i64, usize)>);

fn floor(q: &Q) -> i64 {
    q.floor().to_integer()
}

impl Region {
    pub fn of(v: &[Q], max: &[i32]) -> Region {
        let mut fracs: Vec<Q> = v
            .iter()
            .zip(max)
            .filter(|(x, &m)| **x <= Q::from_integer(m as i64))
            .map(|(x, _)| x - x.floor())
            .filter(|f| !f.is_zero())
            .collect();
        fracs.sort();
        fracs.dedup();
        Region(
            v.iter()
                .zip(max)
                .map(|(x, &m)| {
                    if *x > Q::from_integer(m as i64) {
                        return (m as i64 + 1, 0);
                    }
                    let f = x - x.floor();
                    let rank = if f.is_zero() { 0 } else { fracs.binary_search(&f).unwrap() + 1 };
                    (floor(x), rank)
                })
                .collect(),
        )
    }

    /// The canonical point: fractional parts `rank / (k + 1)`.
    pub fn point(&self) -> Vec<Q> {
        let k = self.0.iter().map(|&(_, r)| r).max().unwrap_or(0) as i64;
        self.0.iter().map(|&(n, r)| Q::from_integer(n) + Q::new(r as i64, k + 1)).collect()
    }

    /// All regions over clocks with the given maximal constants.
    pub fn all(max: &[i32]) -> Vec<Region> {
        // per clock: (int, fractional?) choices
        let mut shapes: Vec<Vec<(i64, bool)>> = vec![vec![]];
        for &m in max {
            let mut opts = Vec::new();
            for n in 0..=m as i64 {
                opts.push((n, false));
                if n < m as i64 {
                    opts.push((n, true));
                }
            }
            opts.push((m as i64 + 1, false));
            shapes = shapes
                .into_iter()
                .flat_map(|s| {
                    opts.iter().map(move |o| {
                        let mut s = s.clone();
                        s.push(*o);
                        s
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for s in shapes {
            let frac: Vec<usize> = (0..s.len()).filter(|&i| s[i].1).collect();
            for ranks in weak_orders(frac.len()) {
                let mut r: Vec<(i64, usize)> = s.iter().map(|&(n, _)| (n, 0)).collect();
                for (j, &i) in frac.iter().enumerate() {
                    r[i].1 = ranks[j];
                }
                out.push(Region(r));
            }
        }
        out
    }
}

/// Rank vectors with values in `1..=k` using every rank, for `n` items.
fn weak_orders(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            let k = cur.iter().copied().max().unwrap_or(0);
            if (1..=k).all(|r| cur.contains(&r)) {
                out.push(cur.clone());
            }
            return;
        }
        for r in 1..=n {
            cur.push(r);
            go(n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::new(), &mut out);
    out
}

/// One delay per region crossed by the ray from `v`: every integer crossing
/// (a point sample, `true`) and a point strictly inside each gap (`false`).
pub fn delay_samples(v: &[Q], max: &[i32]) -> Vec<(Q, bool)> {
    let mut ev = vec![Q::zero()];
    for (x, &m) in v.iter().zip(max) {
        let mut n = floor(x) + 1;
        while n <= m as i64 {
            ev.push(Q::from_integer(n) - x);
            n += 1;
        }
    }
    ev.sort();
    ev.dedup();
    let mut out = Vec::new();
    for (j, t) in ev.iter().enumerate() {
        out.push((*t, true));
        match ev.get(j + 1) {
            Some(u) => out.push(((t + u) / Q::from_integer(2), false)),
            None => out.push((t + Q::one(), false)),
        }
    }
    out
}

pub type Key = (String, Region);

fn canon<T: Tiots>(t: &T, max: &[i32], s: &T::State) -> (Key, T::State) {
    let r = Region::of(&t.valuation(s), max);
    let s2 = t.with_valuation(s, &r.point());
    ((t.loc_key(s), r), s2)
}

#[derive(Debug, Clone)]
pub struct Node<S> {
    pub key: Key,
    pub state: S,
    /// Successor per action of [`Graph::actions`].
    pub act: Vec<Option<usize>>,
    /// Successor per delay sample, with the sample's point flag.
    pub delays: Vec<(bool, Option<usize>)>,
}

/// Region graph of one transition system.
#[derive(Debug, Clone)]
pub struct Graph<S> {
    pub actions: Vec<String>,
    pub outputs: Vec<bool>,
    pub inputs: Vec<bool>,
    pub nodes: Vec<Node<S>>,
    pub index: HashMap<Key, usize>,
    pub initial: Option<usize>,
}

impl<S> Graph<S> {
    pub fn keys(&self) -> BTreeSet<Key> {
        self.index.keys().cloned().collect()
    }
}

fn explore<T: Tiots>(t: &T, seeds: Vec<T::State>, limits: Limits, what: &str) -> Result<Graph<T::State>, OracleError> {
    let max = t.max_constants();
    limits.check(what, &max)?;
    let actions: Vec<String> = t.alphabet().actions().into_iter().collect();
    let mut g = Graph {
        outputs: actions.iter().map(|a| t.alphabet().is_output(a)).collect(),
        inputs: actions.iter().map(|a| t.alphabet().is_input(a)).collect(),
        actions,
        nodes: Vec::new(),
        index: HashMap::new(),
        initial: None,
    };
    let mut queue = VecDeque::new();
    let intern = |g: &mut Graph<T::State>, queue: &mut VecDeque<usize>, s: &T::State| -> Result<usize, OracleError> {
        let (key, s) = canon(t, &max, s);
        if let Some(&k) = g.index.get(&key) {
            return Ok(k);
        }
        if g.nodes.len() >= limits.max_nodes {
            return Err(OracleError::SizeGuard(format!("{what}: more than {} region nodes", limits.max_nodes)));
        }
        g.index.insert(key.clone(), g.nodes.len());
        g.nodes.push(Node { key, state: s, act: vec![], delays: vec![] });
        queue.push_back(g.nodes.len() - 1);
        Ok(g.nodes.len() - 1)
    };
    let mut first = true;
    for s in seeds {
        let k = intern(&mut g, &mut queue, &s)?;
        if first {
            g.initial = Some(k);
            first = false;
        }
    }
    while let Some(k) = queue.pop_front() {
        let s = g.nodes[k].state.clone();
        let mut act = Vec::with_capacity(g.actions.len());
        for a in g.actions.clone() {
            act.push(match t.step(&s, &a) {
                Some(s2) => Some(intern(&mut g, &mut queue, &s2)?),
                None => None,
            });
        }
        let mut delays = Vec::new();
        for (d, point) in delay_samples(&t.valuation(&s), &max) {
            delays.push((
                point,
                match t.delay(&s, d) {
                    Some(s2) => Some(intern(&mut g, &mut queue, &s2)?),
                    None => None,
                },
            ));
        }
        g.nodes[k].act = act;
        g.nodes[k].delays = delays;
    }
    Ok(g)
}

/// Region graph reachable from the initial state, under [`Limits::DEFAULT`].
pub fn region_graph<T: Tiots>(t: &T) -> Result<Graph<T::State>, OracleError> {
    explore(t, t.initial().into_iter().collect(), Limits::DEFAULT, "system")
}

pub fn reachable_graph<T: Tiots>(t: &T, limits: Limits) -> Result<Graph<T::State>, OracleError> {
    explore(t, t.initial().into_iter().collect(), limits, "system")
}

/// Region graph over every location and every region.
pub fn full_graph<T: Tiots>(t: &T, limits: Limits) -> Result<Graph<T::State>, OracleError> {
    let max = t.max_constants();
    limits.check("system", &max)?;
    let mut seeds = Vec::new();
    for s in t.locations() {
        for r in Region::all(&max) {
            seeds.push(t.with_valuation(&s, &r.point()));
        }
    }
    // keep the initial state first so that `initial` is meaningful
    let mut all: Vec<T::State> = t.initial().into_iter().collect();
    all.extend(seeds);
    explore(t, all, limits, "system")
}

/// Action transitions projected on discrete locations.
pub fn action_projection<S>(g: &Graph<S>) -> BTreeSet<(String, String, String)> {
    let mut out = BTreeSet::new();
    for n in &g.nodes {
        for (a, succ) in g.actions.iter().zip(&n.act) {
            if let Some(m) = succ {
                out.insert((n.key.0.clone(), a.clone(), g.nodes[*m].key.0.clone()));
            }
        }
    }
    out
}

impl<S> Graph<S> {
    fn outs_ok(&self, n: usize, x: &[bool]) -> bool {
        self.nodes[n]
            .act
            .iter()
            .zip(&self.outputs)
            .all(|(s, &o)| !o || s.map_or(true, |m| x[m]))
    }

    /// `err(X)`: some delay is impossible and every output after every
    /// possible delay is blocked or leads into `X`.
    pub fn err(&self, x: &[bool]) -> Vec<bool> {
        (0..self.nodes.len())
            .map(|q| {
                let ds = &self.nodes[q].delays;
                ds.iter().any(|(_, s)| s.is_none()) && ds.iter().all(|(_, s)| s.map_or(true, |m| self.outs_ok(m, x)))
            })
            .collect()
    }

    fn pred(&self, x: &[bool], outputs: bool) -> Vec<bool> {
        (0..self.nodes.len())
            .map(|q| {
                self.nodes[q]
                    .act
                    .iter()
                    .enumerate()
                    .any(|(i, s)| (if outputs { self.outputs[i] } else { self.inputs[i] }) && s.is_some_and(|m| x[m]))
            })
            .collect()
    }

    pub fn ipred(&self, x: &[bool]) -> Vec<bool> {
        self.pred(x, false)
    }

    pub fn opred(&self, x: &[bool]) -> Vec<bool> {
        self.pred(x, true)
    }

    /// States that reach `X` by a delay whose states before the end avoid `Y`.
    pub fn pred_t(&self, x: &[bool], y: &[bool]) -> Vec<bool> {
        (0..self.nodes.len())
            .map(|q| {
                let mut clean = true;
                for &(point, s) in &self.nodes[q].delays {
                    if let Some(m) = s {
                        if clean && x[m] && (point || !y[m]) {
                            return true;
                        }
                        if y[m] {
                            clean = false;
                        }
                    }
                }
                false
            })
            .collect()
    }

    pub fn pi(&self, x: &[bool]) -> Vec<bool> {
        let e = self.err(x);
        let target: Vec<bool> = x.iter().zip(self.ipred(x)).map(|(a, b)| *a || b).collect();
        let neg: Vec<bool> = x.iter().map(|b| !b).collect();
        let avoid = self.opred(&neg);
        let p = self.pred_t(&target, &avoid);
        e.iter().zip(p).map(|(a, b)| *a || b).collect()
    }

    /// Least fixpoint of `π`.
    pub fn incons(&self) -> Vec<bool> {
        let mut x = vec![false; self.nodes.len()];
        loop {
            let y = self.pi(&x);
            if y == x {
                return x;
            }
            x = y;
        }
    }

    pub fn cons_keys(&self) -> BTreeSet<Key> {
        let inc = self.incons();
        self.nodes.iter().zip(inc).filter(|(_, b)| !b).map(|(n, _)| n.key.clone()).collect()
    }
}

pub fn consistent<T: Tiots>(t: &T, limits: Limits) -> Result<bool, OracleError> {
    let g = reachable_graph(t, limits)?;
    let Some(i) = g.initial else { return Ok(false) };
    Ok(!g.incons()[i])
}

/// Immediate errors, `err(∅)`: some delay is impossible and no output is
/// enabled after any possible delay.
pub fn immediate_errors<S>(g: &Graph<S>) -> Vec<bool> {
    g.err(&vec![false; g.nodes.len()])
}

/// States of the graph that satisfy their invariant, i.e. can delay by 0.
pub fn live<S>(g: &Graph<S>) -> Vec<bool> {
    g.nodes.iter().map(|n| n.delays.first().is_some_and(|(_, s)| s.is_some())).collect()
}

/// Every state satisfying its invariant allows independent progress.
pub fn locally_consistent<T: Tiots>(t: &T, limits: Limits) -> Result<bool, OracleError> {
    let g = full_graph(t, limits)?;
    Ok(!immediate_errors(&g).iter().zip(live(&g)).any(|(e, l)| *e && l))
}

/// Output urgency, independent progress and input enabledness on every
/// state satisfying its invariant.
pub fn implementation<T: Tiots>(t: &T, limits: Limits) -> Result<bool, OracleError> {
    let g = full_graph(t, limits)?;
    let im = immediate_errors(&g);
    let live = live(&g);
    for (k, n) in g.nodes.iter().enumerate() {
        if !live[k] {
            continue;
        }
        let output = n.act.iter().zip(&g.outputs).any(|(s, &o)| o && s.is_some());
        let delays = n.delays.iter().skip(1).any(|(_, s)| s.is_some());
        let input_gap = n.act.iter().zip(&g.inputs).any(|(s, &i)| i && s.is_none());
        if (output && delays) || im[k] || input_gap {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rel {
    Refine,
    Bisim,
}

/// Joint region graph of two systems with the obligations of a relation.
struct PairGame<'a, A: Tiots, B: Tiots> {
    a: &'a A,
    b: &'a B,
    max: Vec<i32>,
    split: usize,
    index: HashMap<(String, String, Region), usize>,
    states: Vec<(A::State, B::State)>,
}

enum Move {
    /// Left must move; right must follow.
    Both(String),
    /// Right must move; left must follow.
    BothRev(String),
    Left(String),
    Right(String),
    DelayLeft,
    DelayRight,
}

impl<'a, A: Tiots, B: Tiots> PairGame<'a, A, B> {
    fn new(a: &'a A, b: &'a B) -> Self {
        let mut max = a.max_constants();
        let split = max.len();
        max.extend(b.max_constants());
        PairGame { a, b, max, split, index: HashMap::new(), states: vec![] }
    }

    fn intern(&mut self, sa: &A::State, sb: &B::State, queue: &mut VecDeque<usize>, limits: Limits) -> Result<usize, OracleError> {
        let mut v = self.a.valuation(sa);
        v.extend(self.b.valuation(sb));
        let r = Region::of(&v, &self.max);
        let p = r.point();
        let key = (self.a.loc_key(sa), self.b.loc_key(sb), r);
        if let Some(&k) = self.index.get(&key) {
            return Ok(k);
        }
        if self.states.len() >= limits.max_nodes {
            return Err(OracleError::SizeGuard(format!("pair graph: more than {} region nodes", limits.max_nodes)));
        }
        let sa = self.a.with_valuation(sa, &p[..self.split]);
        let sb = self.b.with_valuation(sb, &p[self.split..]);
        self.index.insert(key, self.states.len());
        self.states.push((sa, sb));
        queue.push_back(self.states.len() - 1);
        Ok(self.states.len() - 1)
    }

    fn moves(&self, rel: Rel) -> Vec<Move> {
        let (x, y) = (self.a.alphabet(), self.b.alphabet());
        let mut m = Vec::new();
        match rel {
            Rel::Refine => {
                for i in &y.inputs {
                    if x.inputs.contains(i) {
                        m.push(Move::BothRev(i.clone()));
                    } else {
                        m.push(Move::Right(i.clone()));
                    }
                }
                for o in &x.outputs {
                    if y.outputs.contains(o) {
                        m.push(Move::Both(o.clone()));
                    } else {
                        m.push(Move::Left(o.clone()));
                    }
                }
                m.push(Move::DelayLeft);
            }
            Rel::Bisim => {
                for a in x.actions() {
                    if y.contains(&a) {
                        m.push(Move::Both(a.clone()));
                        m.push(Move::BothRev(a));
                    } else {
                        m.push(Move::Left(a));
                    }
                }
                for a in y.actions() {
                    if !x.contains(&a) {
                        m.push(Move::Right(a));
                    }
                }
                m.push(Move::DelayLeft);
                m.push(Move::DelayRight);
            }
        }
        m
    }

    /// Explore from the initial pair and decide whether it survives the
    /// greatest fixpoint.
    fn solve(&mut self, rel: Rel, limits: Limits) -> Result<bool, OracleError> {
        limits.check("pair", &self.max)?;
        let (Some(a0), Some(b0)) = (self.a.initial(), self.b.initial()) else {
            return Ok(self.a.initial().is_none() && self.b.initial().is_none());
        };
        let moves = self.moves(rel);
        let additive = self.a.additive() && self.b.additive();
        let mut queue = VecDeque::new();
        self.intern(&a0, &b0, &mut queue, limits)?;
        // Losing pairs are propagated backwards as soon as they are found;
        // the exploration stops once the initial pair loses.
        let mut preds: Vec<Vec<usize>> = Vec::new();
        let mut alive: Vec<bool> = Vec::new();
        while let Some(k) = queue.pop_front() {
            if alive.get(k) == Some(&false) {
                continue;
            }
            let (sa, sb) = self.states[k].clone();
            let mut obl = Vec::new();
            for m in &moves {
                match m {
                    Move::Both(a) => {
                        if let Some(sa2) = self.a.step(&sa, a) {
                            obl.push(match self.b.step(&sb, a) {
                                Some(sb2) => Some(self.intern(&sa2, &sb2, &mut queue, limits)?),
                                None => None,
                            });
                        }
                    }
                    Move::BothRev(a) => {
                        if let Some(sb2) = self.b.step(&sb, a) {
                            obl.push(match self.a.step(&sa, a) {
                                Some(sa2) => Some(self.intern(&sa2, &sb2, &mut queue, limits)?),
                                None => None,
                            });
                        }
                    }
                    Move::Left(a) => {
                        if let Some(sa2) = self.a.step(&sa, a) {
                            obl.push(Some(self.intern(&sa2, &sb, &mut queue, limits)?));
                        }
                    }
                    Move::Right(a) => {
                        if let Some(sb2) = self.b.step(&sb, a) {
                            obl.push(Some(self.intern(&sa, &sb2, &mut queue, limits)?));
                        }
                    }
                    Move::DelayLeft | Move::DelayRight => {
                        let mut v = self.a.valuation(&sa);
                        v.extend(self.b.valuation(&sb));
                        // For additive systems longer delays decompose into the
                        // gap after the current point and the next crossing.
                        let samples = delay_samples(&v, &self.max);
                        let upto = if additive { samples.len().min(3) } else { samples.len() };
                        for &(d, _) in &samples[1..upto] {
                            let (da, db) = (self.a.delay(&sa, d), self.b.delay(&sb, d));
                            let leader = if matches!(m, Move::DelayLeft) { da.is_some() } else { db.is_some() };
                            if !leader {
                                continue;
                            }
                            obl.push(match (da, db) {
                                (Some(x), Some(y)) => Some(self.intern(&x, &y, &mut queue, limits)?),
                                _ => None,
                            });
                        }
                    }
                }
            }
            preds.resize(self.states.len(), Vec::new());
            alive.resize(self.states.len(), true);
            let mut lost = false;
            for o in obl {
                match o {
                    Some(m) => {
                        preds[m].push(k);
                        lost |= !alive[m];
                    }
                    None => lost = true,
                }
            }
            if lost {
                alive[k] = false;
                let mut dead = vec![k];
                while let Some(m) = dead.pop() {
                    for &p in &preds[m] {
                        if alive[p] {
                            alive[p] = false;
                            dead.push(p);
                        }
                    }
                }
                if !alive[0] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn refinement_alphabets(s: &Alphabet, t: &Alphabet) -> Result<(), OracleError> {
    let ok = s.inputs.is_subset(&t.inputs)
        && t.outputs.is_subset(&s.outputs)
        && s.inputs.is_disjoint(&t.outputs)
        && s.outputs.is_disjoint(&t.inputs);
    if ok {
        Ok(())
    } else {
        Err(OracleError::Alphabet("refinement requires inputs(S) ⊆ inputs(T), outputs(T) ⊆ outputs(S) and no input/output clash".into()))
    }
}

/// `s <= t` decided on the joint region graph.
pub fn refines<S: Tiots, T: Tiots>(s: &S, t: &T, limits: Limits) -> Result<bool, OracleError> {
    refinement_alphabets(s.alphabet(), t.alphabet())?;
    PairGame::new(s, t).solve(Rel::Refine, limits)
}

pub fn bisimilar<A: Tiots, B: Tiots>(a: &A, b: &B, limits: Limits) -> Result<bool, OracleError> {
    PairGame::new(a, b).solve(Rel::Bisim, limits)
}

#[cfg(test)]
mod tests;
