//! Operator expressions over automata as a single transition-system type.

use super::{Limits, OracleError, Product, ProductKind, Pruned, QState, Quotient, TState, TioaSem, Tiots};
use crate::model::{Alphabet, Guard, System};
use crate::zones::Federation;
use crate::zones::Q;

#[derive(Debug, Clone)]
pub enum SemExpr {
    Leaf(TioaSem<Guard>),
    /// A compiled automaton, for results that only exist as federations.
    System(TioaSem<Federation>),
    Product(Box<Product<SemExpr, SemExpr>>),
    Quotient(Box<Quotient<SemExpr, SemExpr>>),
    Pruned(Box<Pruned<SemExpr>>),
}

#[derive(Debug, Clone)]
pub enum SemState {
    Leaf(TState),
    Pair(Box<(SemState, SemState)>),
    Quot(Box<QState<SemState, SemState>>),
}

impl SemExpr {
    pub fn leaf(t: crate::model::Tioa) -> SemExpr {
        SemExpr::Leaf(TioaSem::new(t))
    }

    pub fn system(s: System) -> SemExpr {
        SemExpr::System(TioaSem::new(s))
    }

    pub fn product(a: SemExpr, b: SemExpr, kind: ProductKind) -> Result<SemExpr, OracleError> {
        Ok(SemExpr::Product(Box::new(Product::new(a, b, kind)?)))
    }

    pub fn quotient(t: SemExpr, s: SemExpr) -> Result<SemExpr, OracleError> {
        Ok(SemExpr::Quotient(Box::new(Quotient::new(t, s)?)))
    }

    pub fn pruned(e: SemExpr, limits: Limits) -> Result<SemExpr, OracleError> {
        Ok(SemExpr::Pruned(Box::new(Pruned::new(e, limits)?)))
    }
}

fn pair(s: &SemState) -> (SemState, SemState) {
    match s {
        SemState::Pair(p) => (**p).clone(),
        _ => unreachable!("state shape does not match its expression"),
    }
}

fn quot(s: &SemState) -> QState<SemState, SemState> {
    match s {
        SemState::Quot(q) => (**q).clone(),
        _ => unreachable!("state shape does not match its expression"),
    }
}

fn leaf(s: &SemState) -> &TState {
    match s {
        SemState::Leaf(t) => t,
        _ => unreachable!("state shape does not match its expression"),
    }
}

fn wrap_pair(p: (SemState, SemState)) -> SemState {
    SemState::Pair(Box::new(p))
}

fn wrap_quot(q: QState<SemState, SemState>) -> SemState {
    SemState::Quot(Box::new(q))
}

impl Tiots for SemExpr {
    type State = SemState;

    fn alphabet(&self) -> &Alphabet {
        match self {
            SemExpr::Leaf(t) => t.alphabet(),
            SemExpr::System(t) => t.alphabet(),
            SemExpr::Product(p) => p.alphabet(),
            SemExpr::Quotient(q) => q.alphabet(),
            SemExpr::Pruned(p) => p.alphabet(),
        }
    }

    fn max_constants(&self) -> Vec<i32> {
        match self {
            SemExpr::Leaf(t) => t.max_constants(),
            SemExpr::System(t) => t.max_constants(),
            SemExpr::Product(p) => p.max_constants(),
            SemExpr::Quotient(q) => q.max_constants(),
            SemExpr::Pruned(p) => p.max_constants(),
        }
    }

    fn initial(&self) -> Option<SemState> {
        match self {
            SemExpr::Leaf(t) => t.initial().map(SemState::Leaf),
            SemExpr::System(t) => t.initial().map(SemState::Leaf),
            SemExpr::Product(p) => p.initial().map(wrap_pair),
            SemExpr::Quotient(q) => q.initial().map(wrap_quot),
            SemExpr::Pruned(p) => p.initial(),
        }
    }

    fn delay(&self, s: &SemState, d: Q) -> Option<SemState> {
        match self {
            SemExpr::Leaf(t) => t.delay(leaf(s), d).map(SemState::Leaf),
            SemExpr::System(t) => t.delay(leaf(s), d).map(SemState::Leaf),
            SemExpr::Product(p) => p.delay(&pair(s), d).map(wrap_pair),
            SemExpr::Quotient(q) => q.delay(&quot(s), d).map(wrap_quot),
            SemExpr::Pruned(p) => p.delay(s, d),
        }
    }

    fn step(&self, s: &SemState, a: &str) -> Option<SemState> {
        match self {
            SemExpr::Leaf(t) => t.step(leaf(s), a).map(SemState::Leaf),
            SemExpr::System(t) => t.step(leaf(s), a).map(SemState::Leaf),
            SemExpr::Product(p) => p.step(&pair(s), a).map(wrap_pair),
            SemExpr::Quotient(q) => q.step(&quot(s), a).map(wrap_quot),
            SemExpr::Pruned(p) => p.step(s, a),
        }
    }

    fn loc_key(&self, s: &SemState) -> String {
        match self {
            SemExpr::Leaf(t) => t.loc_key(leaf(s)),
            SemExpr::System(t) => t.loc_key(leaf(s)),
            SemExpr::Product(p) => p.loc_key(&pair(s)),
            SemExpr::Quotient(q) => q.loc_key(&quot(s)),
            SemExpr::Pruned(p) => p.loc_key(s),
        }
    }

    fn valuation(&self, s: &SemState) -> Vec<Q> {
        match self {
            SemExpr::Leaf(t) => t.valuation(leaf(s)),
            SemExpr::System(t) => t.valuation(leaf(s)),
            SemExpr::Product(p) => p.valuation(&pair(s)),
            SemExpr::Quotient(q) => q.valuation(&quot(s)),
            SemExpr::Pruned(p) => p.valuation(s),
        }
    }

    fn with_valuation(&self, s: &SemState, v: &[Q]) -> SemState {
        match self {
            SemExpr::Leaf(t) => SemState::Leaf(t.with_valuation(leaf(s), v)),
            SemExpr::System(t) => SemState::Leaf(t.with_valuation(leaf(s), v)),
            SemExpr::Product(p) => wrap_pair(p.with_valuation(&pair(s), v)),
            SemExpr::Quotient(q) => wrap_quot(q.with_valuation(&quot(s), v)),
            SemExpr::Pruned(p) => p.with_valuation(s, v),
        }
    }

    fn additive(&self) -> bool {
        match self {
            SemExpr::Leaf(_) | SemExpr::System(_) => true,
            SemExpr::Product(p) => p.additive(),
            SemExpr::Quotient(_) => false,
            SemExpr::Pruned(p) => p.additive(),
        }
    }

    fn locations(&self) -> Vec<SemState> {
        match self {
            SemExpr::Leaf(t) => t.locations().into_iter().map(SemState::Leaf).collect(),
            SemExpr::System(t) => t.locations().into_iter().map(SemState::Leaf).collect(),
            SemExpr::Product(p) => p.locations().into_iter().map(wrap_pair).collect(),
            SemExpr::Quotient(q) => q.locations().into_iter().map(wrap_quot).collect(),
            SemExpr::Pruned(p) => p.locations(),
        }
    }
}
