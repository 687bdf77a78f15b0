//! Concrete semantics of automata and of the operators on transition systems.

use std::collections::HashSet;

use num_traits::Zero;

use super::{delay_samples, reachable_graph, Key, Limits, OracleError, Region, Tiots};
use crate::model::{Alphabet, Automaton, Guard};
use crate::zones::{Federation, Q};

/// Formulas that can be evaluated at a concrete valuation.
pub trait Evaluable: Clone {
    fn holds(&self, clocks: &[String], v: &[Q]) -> bool;
    fn constants(&self, clocks: &[String], acc: &mut [i32]);
}

impl Evaluable for Guard {
    fn holds(&self, clocks: &[String], v: &[Q]) -> bool {
        self.eval(&|c| clocks.iter().position(|x| x == c).map(|i| v[i]))
    }

    fn constants(&self, clocks: &[String], acc: &mut [i32]) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Atom { clock, value, .. } => {
                if let Some(i) = clocks.iter().position(|x| x == clock) {
                    acc[i] = acc[i].max(*value);
                }
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.constants(clocks, acc);
                b.constants(clocks, acc);
            }
            Guard::Not(g) => g.constants(clocks, acc),
        }
    }
}

impl Evaluable for Federation {
    fn holds(&self, _: &[String], v: &[Q]) -> bool {
        self.contains(v)
    }

    fn constants(&self, clocks: &[String], acc: &mut [i32]) {
        let mut m = vec![0; clocks.len() + 1];
        self.max_constants(&mut m);
        for (a, c) in acc.iter_mut().zip(&m[1..]) {
            *a = (*a).max(*c);
        }
    }
}

/// `⟦A⟧`: states are a location and any valuation.
#[derive(Debug, Clone)]
pub struct TioaSem<G> {
    pub aut: Automaton<G>,
    max: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TState {
    pub loc: usize,
    pub v: Vec<Q>,
}

impl<G: Evaluable> TioaSem<G> {
    pub fn new(aut: Automaton<G>) -> Self {
        let mut max = vec![0; aut.clocks.len()];
        for l in &aut.locations {
            l.invariant.constants(&aut.clocks, &mut max);
        }
        for e in &aut.edges {
            e.guard.constants(&aut.clocks, &mut max);
        }
        TioaSem { aut, max }
    }

    fn inv_holds(&self, l: usize, v: &[Q]) -> bool {
        self.aut.locations[l].invariant.holds(&self.aut.clocks, v)
    }
}

fn shifted(v: &[Q], d: Q) -> Vec<Q> {
    v.iter().map(|x| x + d).collect()
}

impl<G: Evaluable + std::fmt::Debug> Tiots for TioaSem<G> {
    type State = TState;

    fn alphabet(&self) -> &Alphabet {
        &self.aut.alphabet
    }

    fn max_constants(&self) -> Vec<i32> {
        self.max.clone()
    }

    /// `None` when the zero valuation violates the initial invariant.
    fn initial(&self) -> Option<TState> {
        let v = vec![Q::zero(); self.aut.clocks.len()];
        self.inv_holds(self.aut.initial, &v).then_some(TState { loc: self.aut.initial, v })
    }

    fn delay(&self, s: &TState, d: Q) -> Option<TState> {
        if d < Q::zero() {
            return None;
        }
        // the invariant can only change truth value at integer crossings
        let mut pts = vec![Q::zero(), d];
        for (x, &m) in s.v.iter().zip(&self.max) {
            let mut n = x.floor().to_integer() + 1;
            while n <= m as i64 + 1 && Q::from_integer(n) - x < d {
                pts.push(Q::from_integer(n) - x);
                n += 1;
            }
        }
        pts.sort();
        pts.dedup();
        let mids: Vec<Q> = pts.windows(2).map(|w| (w[0] + w[1]) / Q::from_integer(2)).collect();
        if pts.iter().chain(&mids).all(|t| self.inv_holds(s.loc, &shifted(&s.v, *t))) {
            Some(TState { loc: s.loc, v: shifted(&s.v, d) })
        } else {
            None
        }
    }

    fn step(&self, s: &TState, a: &str) -> Option<TState> {
        for (_, e) in self.aut.edges_on(s.loc, a) {
            if !e.guard.holds(&self.aut.clocks, &s.v) {
                continue;
            }
            let mut v = s.v.clone();
            for r in &e.resets {
                if let Some(i) = self.aut.clock_index(r) {
                    v[i] = Q::zero();
                }
            }
            if self.inv_holds(e.target, &v) {
                return Some(TState { loc: e.target, v });
            }
        }
        None
    }

    fn loc_key(&self, s: &TState) -> String {
        self.aut.location_id(s.loc).to_string()
    }

    fn valuation(&self, s: &TState) -> Vec<Q> {
        s.v.clone()
    }

    fn with_valuation(&self, s: &TState, v: &[Q]) -> TState {
        TState { loc: s.loc, v: v.to_vec() }
    }

    fn locations(&self) -> Vec<TState> {
        (0..self.aut.locations.len())
            .map(|loc| TState { loc, v: vec![Q::zero(); self.aut.clocks.len()] })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductKind {
    Conjunction,
    Composition,
}

/// `⟦A⟧ ∧ ⟦B⟧` or `⟦A⟧ ∥ ⟦B⟧`: shared actions synchronise, the others
/// interleave and delays synchronise.
#[derive(Debug, Clone)]
pub struct Product<A, B> {
    pub left: A,
    pub right: B,
    alphabet: Alphabet,
    split: usize,
}

impl<A: Tiots, B: Tiots> Product<A, B> {
    pub fn new(left: A, right: B, kind: ProductKind) -> Result<Self, OracleError> {
        let (x, y) = (left.alphabet().clone(), right.alphabet().clone());
        let alphabet = match kind {
            ProductKind::Conjunction => {
                if !x.inputs.is_disjoint(&y.outputs) || !x.outputs.is_disjoint(&y.inputs) {
                    return Err(OracleError::Alphabet("conjunction of an input with an output".into()));
                }
                Alphabet {
                    inputs: x.inputs.union(&y.inputs).cloned().collect(),
                    outputs: x.outputs.union(&y.outputs).cloned().collect(),
                }
            }
            ProductKind::Composition => {
                if !x.outputs.is_disjoint(&y.outputs) {
                    return Err(OracleError::Alphabet("composition of two outputs".into()));
                }
                let outputs: std::collections::BTreeSet<String> = x.outputs.union(&y.outputs).cloned().collect();
                Alphabet {
                    inputs: x.inputs.union(&y.inputs).filter(|a| !outputs.contains(*a)).cloned().collect(),
                    outputs,
                }
            }
        };
        let split = left.max_constants().len();
        Ok(Product { left, right, alphabet, split })
    }
}

impl<A: Tiots, B: Tiots> Tiots for Product<A, B> {
    type State = (A::State, B::State);

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn max_constants(&self) -> Vec<i32> {
        let mut m = self.left.max_constants();
        m.extend(self.right.max_constants());
        m
    }

    fn initial(&self) -> Option<Self::State> {
        Some((self.left.initial()?, self.right.initial()?))
    }

    fn delay(&self, s: &Self::State, d: Q) -> Option<Self::State> {
        Some((self.left.delay(&s.0, d)?, self.right.delay(&s.1, d)?))
    }

    fn step(&self, s: &Self::State, a: &str) -> Option<Self::State> {
        let (l, r) = (self.left.alphabet().contains(a), self.right.alphabet().contains(a));
        match (l, r) {
            (true, true) => Some((self.left.step(&s.0, a)?, self.right.step(&s.1, a)?)),
            (true, false) => Some((self.left.step(&s.0, a)?, s.1.clone())),
            (false, true) => Some((s.0.clone(), self.right.step(&s.1, a)?)),
            (false, false) => None,
        }
    }

    fn loc_key(&self, s: &Self::State) -> String {
        format!("({},{})", self.left.loc_key(&s.0), self.right.loc_key(&s.1))
    }

    fn valuation(&self, s: &Self::State) -> Vec<Q> {
        let mut v = self.left.valuation(&s.0);
        v.extend(self.right.valuation(&s.1));
        v
    }

    fn with_valuation(&self, s: &Self::State, v: &[Q]) -> Self::State {
        (self.left.with_valuation(&s.0, &v[..self.split]), self.right.with_valuation(&s.1, &v[self.split..]))
    }

    fn additive(&self) -> bool {
        self.left.additive() && self.right.additive()
    }

    fn locations(&self) -> Vec<Self::State> {
        let rs = self.right.locations();
        self.left
            .locations()
            .into_iter()
            .flat_map(|l| rs.iter().map(move |r| (l.clone(), r.clone())))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum QState<T, S> {
    Pair(T, S),
    Universal,
    Error,
}

/// `⟦T⟧ \\ ⟦S⟧` with a universal and an error state.
#[derive(Debug, Clone)]
pub struct Quotient<T, S> {
    pub t: T,
    pub s: S,
    alphabet: Alphabet,
    split: usize,
    dim: usize,
}

impl<T: Tiots, S: Tiots> Quotient<T, S> {
    pub fn new(t: T, s: S) -> Result<Self, OracleError> {
        let (ta, sa) = (t.alphabet().clone(), s.alphabet().clone());
        if !sa.outputs.is_disjoint(&ta.inputs) {
            return Err(OracleError::Alphabet("an output of the divisor is an input of the dividend".into()));
        }
        let alphabet = Alphabet {
            inputs: ta.inputs.union(&sa.outputs).cloned().collect(),
            outputs: ta
                .outputs
                .difference(&sa.outputs)
                .chain(sa.inputs.difference(&ta.inputs))
                .cloned()
                .collect(),
        };
        let split = t.max_constants().len();
        let dim = split + s.max_constants().len();
        Ok(Quotient { t, s, alphabet, split, dim })
    }
}

impl<T: Tiots, S: Tiots> Tiots for Quotient<T, S> {
    type State = QState<T::State, S::State>;

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn max_constants(&self) -> Vec<i32> {
        let mut m = self.t.max_constants();
        m.extend(self.s.max_constants());
        m
    }

    fn initial(&self) -> Option<Self::State> {
        Some(QState::Pair(self.t.initial()?, self.s.initial()?))
    }

    fn delay(&self, q: &Self::State, d: Q) -> Option<Self::State> {
        match q {
            QState::Pair(t, s) => match self.s.delay(s, d) {
                None => Some(QState::Universal),
                Some(s2) => Some(QState::Pair(self.t.delay(t, d)?, s2)),
            },
            QState::Universal => Some(QState::Universal),
            QState::Error => d.is_zero().then_some(QState::Error),
        }
    }

    fn step(&self, q: &Self::State, a: &str) -> Option<Self::State> {
        let (ta, sa) = (self.t.alphabet(), self.s.alphabet());
        match q {
            QState::Universal => self.alphabet.contains(a).then_some(QState::Universal),
            QState::Error => self.alphabet.is_input(a).then_some(QState::Error),
            QState::Pair(t, s) => {
                let s2 = if sa.contains(a) { self.s.step(s, a) } else { None };
                if sa.is_output(a) && s2.is_none() {
                    return Some(QState::Universal);
                }
                match (ta.contains(a), sa.contains(a)) {
                    (true, true) => match self.t.step(t, a) {
                        Some(t2) => Some(QState::Pair(t2, s2?)),
                        None if sa.is_output(a) && ta.is_output(a) => Some(QState::Error),
                        None => None,
                    },
                    (false, true) => Some(QState::Pair(t.clone(), s2?)),
                    (true, false) => Some(QState::Pair(self.t.step(t, a)?, s.clone())),
                    (false, false) => None,
                }
            }
        }
    }

    fn loc_key(&self, q: &Self::State) -> String {
        match q {
            QState::Pair(t, s) => format!("({},{})", self.t.loc_key(t), self.s.loc_key(s)),
            QState::Universal => "u".into(),
            QState::Error => "e".into(),
        }
    }

    fn valuation(&self, q: &Self::State) -> Vec<Q> {
        match q {
            QState::Pair(t, s) => {
                let mut v = self.t.valuation(t);
                v.extend(self.s.valuation(s));
                v
            }
            _ => vec![Q::zero(); self.dim],
        }
    }

    fn with_valuation(&self, q: &Self::State, v: &[Q]) -> Self::State {
        match q {
            QState::Pair(t, s) => {
                QState::Pair(self.t.with_valuation(t, &v[..self.split]), self.s.with_valuation(s, &v[self.split..]))
            }
            other => other.clone(),
        }
    }

    fn additive(&self) -> bool {
        false
    }

    fn locations(&self) -> Vec<Self::State> {
        let ss = self.s.locations();
        let mut out: Vec<Self::State> = self
            .t
            .locations()
            .into_iter()
            .flat_map(|t| ss.iter().map(move |s| QState::Pair(t.clone(), s.clone())))
            .collect();
        out.push(QState::Universal);
        out.push(QState::Error);
        out
    }
}

/// Adversarial pruning: only consistent states remain, and a delay must stay
/// consistent along its whole path.
#[derive(Debug, Clone)]
pub struct Pruned<T> {
    pub inner: T,
    max: Vec<i32>,
    cons: HashSet<Key>,
}

impl<T: Tiots> Pruned<T> {
    pub fn new(inner: T, limits: Limits) -> Result<Self, OracleError> {
        let g = reachable_graph(&inner, limits)?;
        let cons = g.cons_keys().into_iter().collect();
        let max = inner.max_constants();
        Ok(Pruned { inner, max, cons })
    }

    pub fn is_cons(&self, s: &T::State) -> bool {
        let key = (self.inner.loc_key(s), Region::of(&self.inner.valuation(s), &self.max));
        self.cons.contains(&key)
    }

    pub fn cons_len(&self) -> usize {
        self.cons.len()
    }
}

impl<T: Tiots> Tiots for Pruned<T> {
    type State = T::State;

    fn alphabet(&self) -> &Alphabet {
        self.inner.alphabet()
    }

    fn max_constants(&self) -> Vec<i32> {
        self.max.clone()
    }

    fn initial(&self) -> Option<T::State> {
        self.inner.initial().filter(|s| self.is_cons(s))
    }

    fn delay(&self, s: &T::State, d: Q) -> Option<T::State> {
        if !self.is_cons(s) {
            return None;
        }
        let s2 = self.inner.delay(s, d).filter(|s2| self.is_cons(s2))?;
        for (t, _) in delay_samples(&self.inner.valuation(s), &self.max) {
            if t < d && !self.inner.delay(s, t).is_some_and(|m| self.is_cons(&m)) {
                return None;
            }
        }
        Some(s2)
    }

    fn step(&self, s: &T::State, a: &str) -> Option<T::State> {
        if !self.is_cons(s) {
            return None;
        }
        self.inner.step(s, a).filter(|s2| self.is_cons(s2))
    }

    fn loc_key(&self, s: &T::State) -> String {
        self.inner.loc_key(s)
    }

    fn valuation(&self, s: &T::State) -> Vec<Q> {
        self.inner.valuation(s)
    }

    fn with_valuation(&self, s: &T::State, v: &[Q]) -> T::State {
        self.inner.with_valuation(s, v)
    }

    fn additive(&self) -> bool {
        self.inner.additive()
    }

    fn locations(&self) -> Vec<T::State> {
        self.inner.locations()
    }
}
