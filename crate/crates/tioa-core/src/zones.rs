//! Difference bound matrices and federations (finite unions of zones) over a
//! named, ordered clock list.
//!
//! Index 0 of every matrix is the reference clock; clock `k` of the list sits
//! at index `k + 1`. Entry `(i, j)` bounds the difference `x_i - x_j`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::Zero;
use thiserror::Error;

/// Exact rational used for concrete valuations and delays.
pub type Q = Ratio<i64>;

/// Shared, ordered clock list.
pub type Clocks = Arc<[String]>;

pub fn clocks_of<S: AsRef<str>>(names: &[S]) -> Clocks {
    names.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().into()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZoneError {
    #[error("clock lists differ: [{left}] vs [{right}]")]
    ClockMismatch { left: String, right: String },
    #[error("unknown clock `{0}`")]
    UnknownClock(String),
}

/// Upper bound `≺ c` on a clock difference, or infinity.
///
/// Encoded as `2c` for `< c` and `2c + 1` for `<= c`, so the derived order is
/// the bound order and `(c, <)` sorts before `(c, <=)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i32);

impl Bound {
    pub const INF: Bound = Bound(i32::MAX);
    pub const LE_ZERO: Bound = Bound(1);
    pub const LT_ZERO: Bound = Bound(0);

    pub const fn le(c: i32) -> Bound {
        Bound(c * 2 + 1)
    }

    pub const fn lt(c: i32) -> Bound {
        Bound(c * 2)
    }

    pub fn new(c: i32, strict: bool) -> Bound {
        if strict {
            Bound::lt(c)
        } else {
            Bound::le(c)
        }
    }

    pub fn is_inf(self) -> bool {
        self == Bound::INF
    }

    pub fn value(self) -> Option<i32> {
        if self.is_inf() {
            None
        } else {
            Some(self.0 >> 1)
        }
    }

    pub fn is_strict(self) -> bool {
        !self.is_inf() && self.0 & 1 == 0
    }

    /// Saturating sum; strictness is the OR of both sides.
    pub fn add(self, o: Bound) -> Bound {
        if self.is_inf() || o.is_inf() {
            return Bound::INF;
        }
        Bound((((self.0 >> 1) + (o.0 >> 1)) << 1) | (self.0 & o.0 & 1))
    }

    /// Bound on the reversed difference describing the complement:
    /// `not (a - b ≺ c)` is `b - a ≺' -c` with flipped strictness.
    pub fn complement(self) -> Bound {
        debug_assert!(!self.is_inf());
        Bound(1 - self.0)
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            None => write!(f, "inf"),
            Some(c) if self.is_strict() => write!(f, "<{c}"),
            Some(c) => write!(f, "<={c}"),
        }
    }
}

/// Interval of non-negative delays, used for concrete trace construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Q,
    pub lo_open: bool,
    /// `None` means unbounded above.
    pub hi: Option<(Q, bool)>,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        match &self.hi {
            None => false,
            Some((h, open)) => match self.lo.cmp(h) {
                Ordering::Less => false,
                Ordering::Equal => self.lo_open || *open,
                Ordering::Greater => true,
            },
        }
    }

    pub fn contains(&self, d: &Q) -> bool {
        let above = if self.lo_open { *d > self.lo } else { *d >= self.lo };
        let below = match &self.hi {
            None => true,
            Some((h, open)) => {
                if *open {
                    d < h
                } else {
                    d <= h
                }
            }
        };
        above && below
    }

    /// Value with the smallest denominator in the interval; ties go to the
    /// smallest value.
    pub fn simplest(&self) -> Option<Q> {
        if self.is_empty() {
            return None;
        }
        let mut den = 1i64;
        loop {
            let scaled = self.lo * Q::from_integer(den);
            let mut num = scaled.ceil().to_integer();
            if self.lo_open && Q::from_integer(num) == scaled {
                num += 1;
            }
            let cand = Q::new(num, den);
            if self.contains(&cand) {
                return Some(cand);
            }
            den += 1;
        }
    }
}

/// Canonical DBM. An instance is never empty: operations that may produce the
/// empty zone return `Option`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    m: Vec<Bound>,
}

impl Dbm {
    /// All non-negative valuations.
    pub fn universe(clocks: usize) -> Dbm {
        let dim = clocks + 1;
        let mut m = vec![Bound::INF; dim * dim];
        for j in 0..dim {
            m[j] = Bound::LE_ZERO;
            m[j * dim + j] = Bound::LE_ZERO;
        }
        Dbm { dim, m }
    }

    /// The single valuation where every clock is 0.
    pub fn zero(clocks: usize) -> Dbm {
        let dim = clocks + 1;
        Dbm { dim, m: vec![Bound::LE_ZERO; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.dim + j] = b;
    }

    /// Build from raw constraints; returns `None` if they are unsatisfiable.
    pub fn from_constraints(
        clocks: usize,
        cons: impl IntoIterator<Item = (usize, usize, Bound)>,
    ) -> Option<Dbm> {
        let mut d = Dbm::universe(clocks);
        for (i, j, b) in cons {
            if b < d.get(i, j) {
                d.set(i, j, b);
            }
        }
        d.close().then_some(d)
    }

    /// Floyd-Warshall closure. Returns false on a negative cycle.
    pub fn close(&mut self) -> bool {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.get(i, k);
                if ik.is_inf() {
                    continue;
                }
                for j in 0..n {
                    let s = ik.add(self.get(k, j));
                    if s < self.get(i, j) {
                        self.set(i, j, s);
                    }
                }
            }
            if self.get(k, k) < Bound::LE_ZERO {
                return false;
            }
        }
        (0..n).all(|i| self.get(i, i) >= Bound::LE_ZERO)
    }

    /// Tighten `x_i - x_j` to `b`, keeping the matrix canonical.
    pub fn constrain(&mut self, i: usize, j: usize, b: Bound) -> bool {
        if b >= self.get(i, j) {
            return true;
        }
        if b.add(self.get(j, i)) < Bound::LE_ZERO {
            return false;
        }
        self.set(i, j, b);
        let n = self.dim;
        for k in 0..n {
            let ki = self.get(k, i);
            if ki.is_inf() {
                continue;
            }
            let kij = ki.add(b);
            for l in 0..n {
                let s = kij.add(self.get(j, l));
                if s < self.get(k, l) {
                    self.set(k, l, s);
                }
            }
        }
        true
    }

    pub fn is_subset(&self, o: &Dbm) -> bool {
        self.m.iter().zip(&o.m).all(|(a, b)| a <= b)
    }

    pub fn intersect(&self, o: &Dbm) -> Option<Dbm> {
        let mut r = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && o.get(i, j) < r.get(i, j) && !r.constrain(i, j, o.get(i, j)) {
                    return None;
                }
            }
        }
        Some(r)
    }

    pub fn up(&mut self) {
        for i in 1..self.dim {
            self.set(i, 0, Bound::INF);
        }
    }

    pub fn down(&mut self) {
        for j in 1..self.dim {
            let mut b = Bound::LE_ZERO;
            for i in 1..self.dim {
                b = b.min(self.get(i, j));
            }
            self.set(0, j, b);
        }
        let ok = self.close();
        debug_assert!(ok);
    }

    pub fn reset(&mut self, x: usize) {
        for j in 0..self.dim {
            let b0j = self.get(0, j);
            let bj0 = self.get(j, 0);
            self.set(x, j, b0j);
            self.set(j, x, bj0);
        }
        self.set(x, x, Bound::LE_ZERO);
    }

    /// Remove every constraint on `x` (existential projection, keeping x >= 0).
    pub fn free(&mut self, x: usize) {
        for j in 0..self.dim {
            if j != x {
                self.set(x, j, Bound::INF);
                let bj0 = self.get(j, 0);
                self.set(j, x, bj0);
            }
        }
    }

    /// Classical per-clock maximal-constant extrapolation. `max[0]` is ignored.
    pub fn extrapolate(&mut self, max: &[i32]) {
        let n = self.dim;
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if i > 0 && !b.is_inf() && b > Bound::le(max[i]) {
                    self.set(i, j, Bound::INF);
                    changed = true;
                } else if j > 0 && b < Bound::lt(-max[j]) {
                    self.set(i, j, Bound::lt(-max[j]));
                    changed = true;
                }
            }
        }
        if changed {
            let ok = self.close();
            debug_assert!(ok);
        }
    }

    /// `{ b + t | b in self }` (forward) or `{ b - t | b in self } ∩ R>=0`
    /// (backward), with `t > 0` when `strict` and `t >= 0` otherwise.
    pub fn shift(&self, forward: bool, strict: bool) -> Option<Dbm> {
        let n = self.dim;
        let t = n;
        let e_dim = n + 1;
        let mut e = Dbm { dim: e_dim, m: vec![Bound::INF; e_dim * e_dim] };
        for i in 0..e_dim {
            e.set(i, i, Bound::LE_ZERO);
        }
        for j in 1..n {
            e.set(0, j, Bound::LE_ZERO);
        }
        for i in 1..n {
            for j in 1..n {
                if i != j {
                    e.set(i, j, self.get(i, j));
                }
            }
            e.set(i, t, self.get(i, 0));
            e.set(t, i, self.get(0, i));
        }
        let tb = if strict { Bound::LT_ZERO } else { Bound::LE_ZERO };
        if forward {
            e.set(0, t, tb);
        } else {
            e.set(t, 0, tb);
        }
        if !e.close() {
            return None;
        }
        let mut m = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                m.push(e.get(i, j));
            }
        }
        Some(Dbm { dim: n, m })
    }

    /// `self \ o` as a list of pairwise disjoint zones.
    pub fn subtract(&self, o: &Dbm) -> Vec<Dbm> {
        if self.intersect(o).is_none() {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut rest = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = o.get(i, j);
                if i == j || b.is_inf() || b >= rest.get(i, j) {
                    continue;
                }
                let mut piece = rest.clone();
                if piece.constrain(j, i, b.complement()) {
                    out.push(piece);
                }
                if !rest.constrain(i, j, b) {
                    return out;
                }
            }
        }
        out
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        let val = |i: usize| if i == 0 { Q::zero() } else { v[i - 1] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = self.get(i, j);
                if i == j || b.is_inf() {
                    continue;
                }
                let diff = val(i) - val(j);
                let c = Q::from_integer(b.value().unwrap() as i64);
                if diff > c || (b.is_strict() && diff == c) {
                    return false;
                }
            }
        }
        true
    }

    /// Delays `d >= 0` with `v + d` inside the zone.
    pub fn delay_interval(&self, v: &[Q]) -> Option<Interval> {
        let n = self.dim;
        for i in 1..n {
            for j in 1..n {
                let b = self.get(i, j);
                if i == j || b.is_inf() {
                    continue;
                }
                let diff = v[i - 1] - v[j - 1];
                let c = Q::from_integer(b.value().unwrap() as i64);
                if diff > c || (b.is_strict() && diff == c) {
                    return None;
                }
            }
        }
        let mut iv = Interval { lo: Q::zero(), lo_open: false, hi: None };
        for i in 1..n {
            let up = self.get(i, 0);
            if let Some(c) = up.value() {
                let h = Q::from_integer(c as i64) - v[i - 1];
                let tighter = match &iv.hi {
                    None => true,
                    Some((oh, oo)) => h < *oh || (h == *oh && up.is_strict() && !oo),
                };
                if tighter {
                    iv.hi = Some((h, up.is_strict()));
                }
            }
            let low = self.get(0, i);
            if let Some(c) = low.value() {
                let l = -Q::from_integer(c as i64) - v[i - 1];
                if l > iv.lo || (l == iv.lo && low.is_strict()) {
                    iv.lo = l;
                    iv.lo_open = low.is_strict();
                }
            }
        }
        (!iv.is_empty()).then_some(iv)
    }

    fn fmt_with(&self, clocks: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let name = |i: usize| clocks[i - 1].as_str();
        for i in 1..self.dim {
            let up = self.get(i, 0);
            let low = self.get(0, i);
            if let (Some(u), Some(l)) = (up.value(), low.value()) {
                if u == -l && !up.is_strict() && !low.is_strict() {
                    parts.push(format!("{} == {}", name(i), u));
                    continue;
                }
            }
            if low != Bound::LE_ZERO {
                let l = -low.value().unwrap();
                let op = if low.is_strict() { ">" } else { ">=" };
                parts.push(format!("{} {} {}", name(i), op, l));
            }
            if let Some(u) = up.value() {
                let op = if up.is_strict() { "<" } else { "<=" };
                parts.push(format!("{} {} {}", name(i), op, u));
            }
        }
        for i in 1..self.dim {
            for j in 1..self.dim {
                let b = self.get(i, j);
                if i == j || b.is_inf() || b >= self.get(i, 0).add(self.get(0, j)) {
                    continue;
                }
                let op = if b.is_strict() { "<" } else { "<=" };
                parts.push(format!("{} - {} {} {}", name(i), name(j), op, b.value().unwrap()));
            }
        }
        if parts.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", parts.join(" && "))
        }
    }
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..self.dim).map(|i| format!("x{i}")).collect();
        self.fmt_with(&names, f)
    }
}

/// Outcome of comparing two federations as sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    Subset,
    Superset,
    Incomparable,
}

/// Finite union of canonical, non-empty DBMs over one clock list.
///
/// The zone list is not a normal form; compare with [`Federation::relation`]
/// or [`Federation::equals`].
#[derive(Clone)]
pub struct Federation {
    clocks: Clocks,
    zones: Vec<Dbm>,
}

fn same_clocks(a: &Clocks, b: &Clocks) -> bool {
    Arc::ptr_eq(a, b) || a[..] == b[..]
}

impl Federation {
    pub fn empty(clocks: &Clocks) -> Federation {
        Federation { clocks: clocks.clone(), zones: Vec::new() }
    }

    pub fn universe(clocks: &Clocks) -> Federation {
        Federation { clocks: clocks.clone(), zones: vec![Dbm::universe(clocks.len())] }
    }

    pub fn zero(clocks: &Clocks) -> Federation {
        Federation { clocks: clocks.clone(), zones: vec![Dbm::zero(clocks.len())] }
    }

    pub fn from_dbm(clocks: &Clocks, dbm: Dbm) -> Federation {
        assert_eq!(dbm.dim(), clocks.len() + 1, "dbm dimension does not match clocks");
        Federation { clocks: clocks.clone(), zones: vec![dbm] }
    }

    pub fn from_zones(clocks: &Clocks, zones: Vec<Dbm>) -> Federation {
        let mut f = Federation { clocks: clocks.clone(), zones };
        f.reduce();
        f
    }

    /// `clock ≺ value` style atom. `upper` selects `x - 0` versus `0 - x`.
    pub fn bound(clocks: &Clocks, clock: usize, upper: bool, b: Bound) -> Federation {
        let (i, j) = if upper { (clock + 1, 0) } else { (0, clock + 1) };
        match Dbm::from_constraints(clocks.len(), [(i, j, b)]) {
            Some(d) => Federation::from_dbm(clocks, d),
            None => Federation::empty(clocks),
        }
    }

    pub fn clocks(&self) -> &Clocks {
        &self.clocks
    }

    pub fn zones(&self) -> &[Dbm] {
        &self.zones
    }

    pub fn clock_index(&self, name: &str) -> Result<usize, ZoneError> {
        self.clocks
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ZoneError::UnknownClock(name.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn check_clocks(&self, o: &Federation) -> Result<(), ZoneError> {
        if same_clocks(&self.clocks, &o.clocks) {
            Ok(())
        } else {
            Err(ZoneError::ClockMismatch { left: self.clocks.join(","), right: o.clocks.join(",") })
        }
    }

    fn assert_clocks(&self, o: &Federation) {
        if let Err(e) = self.check_clocks(o) {
            panic!("{e}");
        }
    }

    /// Drop zones contained in another zone of the list.
    pub fn reduce(&mut self) {
        if self.zones.len() < 2 {
            return;
        }
        let mut keep: Vec<Dbm> = Vec::with_capacity(self.zones.len());
        for z in std::mem::take(&mut self.zones) {
            if keep.iter().any(|k| z.is_subset(k)) {
                continue;
            }
            keep.retain(|k| !k.is_subset(&z));
            keep.push(z);
        }
        self.zones = keep;
    }

    pub fn add_zone(&mut self, z: Dbm) {
        if self.zones.iter().any(|k| z.is_subset(k)) {
            return;
        }
        self.zones.retain(|k| !k.is_subset(&z));
        self.zones.push(z);
    }

    /// Union.
    ///
    /// # Panics
    /// On differing clock lists; see [`Federation::try_union`].
    pub fn union(&self, o: &Federation) -> Federation {
        self.assert_clocks(o);
        let mut r = self.clone();
        for z in &o.zones {
            r.add_zone(z.clone());
        }
        r
    }

    pub fn try_union(&self, o: &Federation) -> Result<Federation, ZoneError> {
        self.check_clocks(o)?;
        Ok(self.union(o))
    }

    /// Intersection.
    ///
    /// # Panics
    /// On differing clock lists; see [`Federation::try_intersect`].
    pub fn intersect(&self, o: &Federation) -> Federation {
        self.assert_clocks(o);
        let mut r = Federation::empty(&self.clocks);
        for a in &self.zones {
            for b in &o.zones {
                if let Some(z) = a.intersect(b) {
                    r.add_zone(z);
                }
            }
        }
        r
    }

    pub fn try_intersect(&self, o: &Federation) -> Result<Federation, ZoneError> {
        self.check_clocks(o)?;
        Ok(self.intersect(o))
    }

    pub fn intersect_dbm(&self, d: &Dbm) -> Federation {
        let mut r = Federation::empty(&self.clocks);
        for a in &self.zones {
            if let Some(z) = a.intersect(d) {
                r.add_zone(z);
            }
        }
        r
    }

    /// Set difference.
    ///
    /// # Panics
    /// On differing clock lists; see [`Federation::try_subtract`].
    pub fn subtract(&self, o: &Federation) -> Federation {
        self.assert_clocks(o);
        let mut cur = self.zones.clone();
        for b in &o.zones {
            let mut next = Vec::new();
            for a in &cur {
                next.extend(a.subtract(b));
            }
            cur = next;
            if cur.is_empty() {
                break;
            }
        }
        Federation::from_zones(&self.clocks, cur)
    }

    pub fn try_subtract(&self, o: &Federation) -> Result<Federation, ZoneError> {
        self.check_clocks(o)?;
        Ok(self.subtract(o))
    }

    pub fn complement(&self) -> Federation {
        Federation::universe(&self.clocks).subtract(self)
    }

    pub fn is_subset(&self, o: &Federation) -> bool {
        self.assert_clocks(o);
        if self.zones.iter().all(|a| o.zones.iter().any(|b| a.is_subset(b))) {
            return true;
        }
        self.subtract(o).is_empty()
    }

    pub fn equals(&self, o: &Federation) -> bool {
        self.is_subset(o) && o.is_subset(self)
    }

    pub fn relation(&self, o: &Federation) -> Relation {
        match (self.is_subset(o), o.is_subset(self)) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::Subset,
            (false, true) => Relation::Superset,
            (false, false) => Relation::Incomparable,
        }
    }

    pub fn try_relation(&self, o: &Federation) -> Result<Relation, ZoneError> {
        self.check_clocks(o)?;
        Ok(self.relation(o))
    }

    pub fn intersects(&self, o: &Federation) -> bool {
        self.assert_clocks(o);
        self.zones.iter().any(|a| o.zones.iter().any(|b| a.intersect(b).is_some()))
    }

    fn map_zones(&self, f: impl Fn(&mut Dbm)) -> Federation {
        let zones = self
            .zones
            .iter()
            .map(|z| {
                let mut z = z.clone();
                f(&mut z);
                z
            })
            .collect();
        Federation::from_zones(&self.clocks, zones)
    }

    pub fn up(&self) -> Federation {
        self.map_zones(Dbm::up)
    }

    pub fn down(&self) -> Federation {
        self.map_zones(Dbm::down)
    }

    /// Points strictly after (forward) or strictly before some point of the set.
    pub fn shift_strict(&self, forward: bool) -> Federation {
        let zones = self.zones.iter().filter_map(|z| z.shift(forward, true)).collect();
        Federation::from_zones(&self.clocks, zones)
    }

    pub fn reset_idx(&self, idx: &[usize]) -> Federation {
        self.map_zones(|z| {
            for &k in idx {
                z.reset(k + 1);
            }
        })
    }

    pub fn free_idx(&self, idx: &[usize]) -> Federation {
        self.map_zones(|z| {
            for &k in idx {
                z.free(k + 1);
            }
        })
    }

    pub fn indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, ZoneError> {
        names.iter().map(|n| self.clock_index(n.as_ref())).collect()
    }

    /// Set the named clocks to 0.
    pub fn reset<S: AsRef<str>>(&self, names: &[S]) -> Result<Federation, ZoneError> {
        Ok(self.reset_idx(&self.indices(names)?))
    }

    pub fn free<S: AsRef<str>>(&self, names: &[S]) -> Result<Federation, ZoneError> {
        Ok(self.free_idx(&self.indices(names)?))
    }

    /// `{ v | v[r := 0] in self }`.
    pub fn reset_preimage_idx(&self, idx: &[usize]) -> Federation {
        if idx.is_empty() {
            return self.clone();
        }
        let mut zero = Dbm::universe(self.clocks.len());
        for &k in idx {
            zero.constrain(k + 1, 0, Bound::LE_ZERO);
        }
        self.intersect_dbm(&zero).free_idx(idx)
    }

    pub fn extrapolate(&self, max: &[i32]) -> Federation {
        self.map_zones(|z| z.extrapolate(max))
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.zones.iter().any(|z| z.contains(v))
    }

    pub fn contains_zero(&self) -> bool {
        let v = vec![Q::zero(); self.clocks.len()];
        self.contains(&v)
    }

    /// Valuations that can delay into `self` without touching `bad` on the way,
    /// where the endpoint itself may lie in `bad`.
    ///
    /// # Panics
    /// On differing clock lists; see [`Federation::try_pred_t`].
    pub fn pred_t(&self, bad: &Federation) -> Federation {
        self.pred_t_impl(bad, false)
    }

    pub fn try_pred_t(&self, bad: &Federation) -> Result<Federation, ZoneError> {
        self.check_clocks(bad)?;
        Ok(self.pred_t(bad))
    }

    /// As [`Federation::pred_t`] but the delay must be strictly positive.
    pub fn pred_t_strict(&self, bad: &Federation) -> Federation {
        self.pred_t_impl(bad, true)
    }

    fn pred_t_impl(&self, bad: &Federation, strict: bool) -> Federation {
        self.assert_clocks(bad);
        let clocks = &self.clocks;
        let past = |f: &Federation| if strict { f.shift_strict(false) } else { f.down() };
        let mut out = Federation::empty(clocks);
        for g in &self.zones {
            let gf = Federation::from_dbm(clocks, g.clone());
            let mut acc: Option<Federation> = None;
            for b in &bad.zones {
                let bf = Federation::from_dbm(clocks, b.clone());
                let mut p = past(&gf).subtract(&bf.down());
                let after = bf.shift_strict(true);
                p = p.union(&past(&gf.subtract(&after)).subtract(&bf));
                if !strict {
                    p = p.union(&gf);
                }
                acc = Some(match acc {
                    None => p,
                    Some(a) => a.intersect(&p),
                });
            }
            let piece = acc.unwrap_or_else(|| past(&gf));
            out = out.union(&piece);
        }
        out
    }

    /// Valuations reachable from `self` by delaying without touching `bad`
    /// (start and end included).
    pub fn post_avoiding(&self, bad: &Federation) -> Federation {
        self.assert_clocks(bad);
        let clocks = &self.clocks;
        let mut out = Federation::empty(clocks);
        for d in &self.zones {
            let df = Federation::from_dbm(clocks, d.clone());
            let mut acc: Option<Federation> = None;
            for b in &bad.zones {
                let bf = Federation::from_dbm(clocks, b.clone());
                let bu = bf.up();
                let p = df.up().subtract(&bu).union(&df.intersect(&bu).subtract(&bf).up());
                acc = Some(match acc {
                    None => p,
                    Some(a) => a.intersect(&p),
                });
            }
            out = out.union(&acc.unwrap_or_else(|| df.up()));
        }
        out
    }

    /// Delays from `v` that land in the set, as disjoint-or-overlapping intervals.
    pub fn delay_intervals(&self, v: &[Q]) -> Vec<Interval> {
        self.zones.iter().filter_map(|z| z.delay_interval(v)).collect()
    }

    /// Embed into a larger clock list. `map[k]` is the new position of clock `k`.
    pub fn lift(&self, map: &[usize], target: &Clocks) -> Federation {
        let n = target.len();
        let mut zones = Vec::new();
        for z in &self.zones {
            let idx = |i: usize| if i == 0 { 0 } else { map[i - 1] + 1 };
            let cons = (0..z.dim())
                .flat_map(|i| (0..z.dim()).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j)
                .map(|(i, j)| (idx(i), idx(j), z.get(i, j)));
            if let Some(d) = Dbm::from_constraints(n, cons) {
                zones.push(d);
            }
        }
        Federation::from_zones(target, zones)
    }

    /// Largest absolute constant per clock (index 0 is the reference, always 0).
    pub fn max_constants(&self, acc: &mut [i32]) {
        for z in &self.zones {
            for i in 0..z.dim() {
                for j in 0..z.dim() {
                    if i == j {
                        continue;
                    }
                    if let Some(c) = z.get(i, j).value() {
                        let c = c.abs();
                        if i > 0 {
                            acc[i] = acc[i].max(c);
                        }
                        if j > 0 {
                            acc[j] = acc[j].max(c);
                        }
                    }
                }
            }
        }
    }
}

impl fmt::Display for Federation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zones.is_empty() {
            return write!(f, "false");
        }
        for (k, z) in self.zones.iter().enumerate() {
            if k > 0 {
                write!(f, " || ")?;
            }
            if self.zones.len() > 1 {
                write!(f, "(")?;
                z.fmt_with(&self.clocks, f)?;
                write!(f, ")")?;
            } else {
                z.fmt_with(&self.clocks, f)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Federation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Federation[{}]{{{}}}", self.clocks.join(","), self)
    }
}

/// Merge intervals into their union and return the maximal interval that
/// starts at 0, if 0 is covered.
pub fn interval_from_zero(mut ivs: Vec<Interval>) -> Option<Interval> {
    ivs.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.lo_open.cmp(&b.lo_open)));
    let first = ivs.first()?;
    if first.lo != Q::zero() || first.lo_open {
        return None;
    }
    let mut cur = first.clone();
    for iv in &ivs[1..] {
        let touches = match &cur.hi {
            None => true,
            Some((h, open)) => iv.lo < *h || (iv.lo == *h && !(*open && iv.lo_open)),
        };
        if !touches {
            break;
        }
        cur.hi = match (&cur.hi, &iv.hi) {
            (None, _) | (_, None) => None,
            (Some((a, ao)), Some((b, bo))) => match a.cmp(b) {
                Ordering::Less => Some((*b, *bo)),
                Ordering::Greater => Some((*a, *ao)),
                Ordering::Equal => Some((*a, *ao && *bo)),
            },
        };
    }
    Some(cur)
}

/// Infimum of a union of intervals and whether it is attained.
pub fn interval_inf(ivs: &[Interval]) -> Option<(Q, bool)> {
    let mut best: Option<(Q, bool)> = None;
    for iv in ivs {
        let cand = (iv.lo, !iv.lo_open);
        best = Some(match best {
            None => cand,
            Some(b) if cand.0 < b.0 => cand,
            Some(b) if cand.0 == b.0 => (b.0, b.1 || cand.1),
            Some(b) => b,
        });
    }
    best
}

/// Pick a delay `d` from `v` with `v + d` in `target` and `[v, v + d)` disjoint
/// from `avoid`.
pub fn choose_delay(v: &[Q], target: &Federation, avoid: &Federation) -> Option<Q> {
    let cap = interval_inf(&avoid.delay_intervals(v));
    let mut best: Option<Q> = None;
    for mut iv in target.delay_intervals(v) {
        if let Some((t, _)) = cap {
            let tighter = match &iv.hi {
                None => true,
                Some((h, _)) => t <= *h,
            };
            if tighter {
                let open = iv.hi.as_ref().map(|(h, o)| *h == t && *o).unwrap_or(false);
                iv.hi = Some((t, open));
            }
        }
        if let Some(d) = iv.simplest() {
            best = Some(match best {
                None => d,
                Some(b) => {
                    if (d.denom(), d) < (b.denom(), b) {
                        d
                    } else {
                        b
                    }
                }
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ck(names: &[&str]) -> Clocks {
        clocks_of(names)
    }

    fn le(c: &Clocks, x: usize, v: i32) -> Federation {
        Federation::bound(c, x, true, Bound::le(v))
    }
    fn lt(c: &Clocks, x: usize, v: i32) -> Federation {
        Federation::bound(c, x, true, Bound::lt(v))
    }
    fn ge(c: &Clocks, x: usize, v: i32) -> Federation {
        Federation::bound(c, x, false, Bound::le(-v))
    }
    fn gt(c: &Clocks, x: usize, v: i32) -> Federation {
        Federation::bound(c, x, false, Bound::lt(-v))
    }
    fn eq(c: &Clocks, x: usize, v: i32) -> Federation {
        le(c, x, v).intersect(&ge(c, x, v))
    }
    fn diag(c: &Clocks, i: usize, j: usize, b: Bound) -> Federation {
        Federation::from_dbm(c, Dbm::from_constraints(c.len(), [(i + 1, j + 1, b)]).unwrap())
    }

    #[test]
    fn bound_order_and_add() {
        assert!(Bound::lt(3) < Bound::le(3));
        assert!(Bound::le(2) < Bound::lt(3));
        assert!(Bound::le(100) < Bound::INF);
        assert_eq!(Bound::le(2).add(Bound::lt(3)), Bound::lt(5));
        assert_eq!(Bound::le(-2).add(Bound::le(3)), Bound::le(1));
        assert_eq!(Bound::le(2).add(Bound::INF), Bound::INF);
        assert_eq!(Bound::le(2).complement(), Bound::lt(-2));
        assert_eq!(Bound::lt(-4).complement(), Bound::le(4));
        assert_eq!(Bound::lt(-3).value(), Some(-3));
    }

    #[test]
    fn contradictory_bounds_are_empty() {
        let c = ck(&["x"]);
        assert!(le(&c, 0, 5).intersect(&ge(&c, 0, 6)).is_empty());
    }

    #[test]
    fn closure_derives_diagonals() {
        let c = ck(&["x", "y"]);
        let f = le(&c, 0, 2).intersect(&le(&c, 1, 3));
        let z = &f.zones()[0];
        assert_eq!(z.get(1, 2), Bound::le(2));
        assert_eq!(z.get(2, 1), Bound::le(3));
    }

    #[test]
    fn up_examples() {
        let c = ck(&["x", "y"]);
        let up = Federation::zero(&c).up();
        let expect = diag(&c, 0, 1, Bound::le(0)).intersect(&diag(&c, 1, 0, Bound::le(0)));
        assert!(up.equals(&expect));

        let f = ge(&c, 0, 1)
            .intersect(&le(&c, 0, 2))
            .intersect(&diag(&c, 0, 1, Bound::le(0)))
            .intersect(&diag(&c, 1, 0, Bound::le(0)));
        let expect = ge(&c, 0, 1)
            .intersect(&diag(&c, 0, 1, Bound::le(0)))
            .intersect(&diag(&c, 1, 0, Bound::le(0)));
        assert!(f.up().equals(&expect));
    }

    #[test]
    fn down_examples() {
        let c = ck(&["x", "y"]);
        let f = eq(&c, 0, 3).intersect(&eq(&c, 1, 3));
        let expect = le(&c, 0, 3)
            .intersect(&diag(&c, 0, 1, Bound::le(0)))
            .intersect(&diag(&c, 1, 0, Bound::le(0)));
        assert!(f.down().equals(&expect));

        let f = diag(&c, 0, 1, Bound::le(2)).intersect(&diag(&c, 1, 0, Bound::le(-2))).intersect(&ge(&c, 0, 5));
        let expect = diag(&c, 0, 1, Bound::le(2)).intersect(&diag(&c, 1, 0, Bound::le(-2)));
        assert!(f.down().equals(&expect));
    }

    #[test]
    fn reset_examples() {
        let c = ck(&["x", "y"]);
        let f = ge(&c, 0, 3).intersect(&le(&c, 0, 5)).intersect(&eq(&c, 1, 1));
        let r = f.reset(&["x"]).unwrap();
        assert!(r.equals(&eq(&c, 0, 0).intersect(&eq(&c, 1, 1))));

        let f = diag(&c, 0, 1, Bound::le(-2));
        let r = f.reset(&["y"]).unwrap();
        assert!(r.equals(&eq(&c, 1, 0)));
        assert_eq!(f.reset(&["z"]).unwrap_err(), ZoneError::UnknownClock("z".into()));
    }

    #[test]
    fn intersection_examples() {
        let c = ck(&["x"]);
        let r = ge(&c, 0, 4).intersect(&le(&c, 0, 6));
        assert_eq!(r.zones().len(), 1);
        assert!(r.contains(&[Q::from_integer(4)]) && r.contains(&[Q::from_integer(6)]));
        let u = lt(&c, 0, 2).union(&gt(&c, 0, 5));
        assert!(u.intersect(&le(&c, 0, 5)).equals(&lt(&c, 0, 2)));
        let other = ck(&["y"]);
        assert!(matches!(
            ge(&c, 0, 1).try_intersect(&ge(&other, 0, 1)),
            Err(ZoneError::ClockMismatch { .. })
        ));
    }

    #[test]
    fn subtraction_examples() {
        let c = ck(&["x"]);
        let f = le(&c, 0, 4);
        assert!(f.subtract(&ge(&c, 0, 5)).equals(&f));
        let hole = gt(&c, 0, 2).intersect(&lt(&c, 0, 3));
        let r = f.subtract(&hole);
        let expect = le(&c, 0, 2).union(&ge(&c, 0, 3).intersect(&le(&c, 0, 4)));
        assert!(r.equals(&expect));
        assert!(r.contains(&[Q::from_integer(2)]) && r.contains(&[Q::from_integer(3)]));
        assert!(!r.contains(&[Q::new(5, 2)]));
    }

    #[test]
    fn relation_examples() {
        let c = ck(&["x", "y"]);
        let a = lt(&c, 0, 2).union(&ge(&c, 0, 2));
        assert_eq!(a.relation(&ge(&c, 0, 0)), Relation::Equal);
        assert_eq!(eq(&c, 0, 1).relation(&le(&c, 0, 3)), Relation::Subset);
        assert_eq!(le(&c, 0, 1).relation(&le(&c, 1, 1)), Relation::Incomparable);
        assert_eq!(le(&c, 0, 3).relation(&eq(&c, 0, 1)), Relation::Superset);
    }

    #[test]
    fn pred_t_examples() {
        let c = ck(&["x"]);
        let g = ge(&c, 0, 3).intersect(&le(&c, 0, 7));
        assert!(g.pred_t(&Federation::empty(&c)).equals(&g.down()));
        assert!(g.is_subset(&g.pred_t(&g)));
        let bad = gt(&c, 0, 2).intersect(&lt(&c, 0, 3));
        let r = eq(&c, 0, 5).pred_t(&bad);
        assert!(r.equals(&ge(&c, 0, 3).intersect(&le(&c, 0, 5))));
    }

    #[test]
    fn pred_t_endpoint_in_bad_is_allowed() {
        let c = ck(&["x"]);
        // reaching x = 3 exactly where bad starts is fine, the open interval excludes it
        let bad = ge(&c, 0, 3);
        let r = eq(&c, 0, 3).pred_t(&bad);
        assert!(r.equals(&le(&c, 0, 3)));
        let r = eq(&c, 0, 3).pred_t(&gt(&c, 0, 3).union(&eq(&c, 0, 1)));
        assert!(r.equals(&gt(&c, 0, 1).intersect(&le(&c, 0, 3))));
    }

    #[test]
    fn delay_post_examples() {
        let c = ck(&["y"]);
        let inv = le(&c, 0, 6);
        let r = Federation::zero(&c).post_avoiding(&inv.complement());
        assert!(r.equals(&inv));
        let c = ck(&["x"]);
        let inv = le(&c, 0, 2).union(&ge(&c, 0, 3));
        let r = eq(&c, 0, 1).post_avoiding(&inv.complement());
        assert!(r.equals(&ge(&c, 0, 1).intersect(&le(&c, 0, 2))));
    }

    #[test]
    fn shift_strict_examples() {
        let c = ck(&["x"]);
        let f = ge(&c, 0, 2).intersect(&le(&c, 0, 4));
        assert!(f.shift_strict(true).equals(&gt(&c, 0, 2)));
        assert!(f.shift_strict(false).equals(&lt(&c, 0, 4)));
        assert!(Federation::zero(&c).shift_strict(false).is_empty());
    }

    #[test]
    fn extrapolation_drops_large_bounds() {
        let c = ck(&["x"]);
        let f = ge(&c, 0, 9).intersect(&le(&c, 0, 12));
        let e = f.extrapolate(&[0, 5]);
        assert!(e.equals(&gt(&c, 0, 5)));
    }

    #[test]
    fn lift_reorders_clocks() {
        let c = ck(&["x"]);
        let t = ck(&["a", "x"]);
        let f = le(&c, 0, 3).lift(&[1], &t);
        assert!(f.equals(&le(&t, 1, 3)));
    }

    #[test]
    fn reset_preimage_matches_reset() {
        let c = ck(&["x", "y"]);
        let target = le(&c, 1, 2).intersect(&eq(&c, 0, 0));
        let pre = target.reset_preimage_idx(&[0]);
        assert!(pre.equals(&le(&c, 1, 2)));
    }

    #[test]
    fn simplest_rational() {
        let iv = Interval { lo: Q::new(1, 3), lo_open: true, hi: Some((Q::new(1, 2), true)) };
        assert_eq!(iv.simplest(), Some(Q::new(2, 5)));
        let iv = Interval { lo: Q::from_integer(2), lo_open: true, hi: None };
        assert_eq!(iv.simplest(), Some(Q::from_integer(3)));
        let iv = Interval { lo: Q::from_integer(2), lo_open: true, hi: Some((Q::from_integer(3), true)) };
        assert_eq!(iv.simplest(), Some(Q::new(5, 2)));
    }

    #[test]
    fn choose_delay_respects_avoid() {
        let c = ck(&["x"]);
        let v = [Q::from_integer(0)];
        let target = ge(&c, 0, 5);
        let avoid = gt(&c, 0, 2).intersect(&lt(&c, 0, 3));
        assert_eq!(choose_delay(&v, &target, &avoid), None);
        let avoid = gt(&c, 0, 6);
        assert_eq!(choose_delay(&v, &target, &avoid), Some(Q::from_integer(5)));
    }
}
