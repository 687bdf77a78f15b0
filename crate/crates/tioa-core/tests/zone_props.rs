//! Federation operations against pointwise evaluation of guards on a
//! half-integer grid.

use proptest::prelude::*;
use tioa_core::model::{Guard, Rel};
use tioa_core::zones::clocks_of;
use tioa_core::{Clocks, Federation, Q};

const MAXC: i32 = 5;

fn clocks() -> Clocks {
    clocks_of(&["x", "y"])
}

fn atom() -> impl Strategy<Value = Guard> {
    let rel = prop_oneof![Just(Rel::Lt), Just(Rel::Le), Just(Rel::Gt), Just(Rel::Ge), Just(Rel::Eq)];
    (prop_oneof![Just("x"), Just("y")], rel, 0..=MAXC).prop_map(|(c, r, k)| Guard::atom(c, r, k))
}

fn guard() -> impl Strategy<Value = Guard> {
    let leaf = prop_oneof![4 => atom(), 1 => Just(Guard::True), 1 => Just(Guard::False)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Guard::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Guard::or(a, b)),
            inner.prop_map(|a| a.negate()),
        ]
    })
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn holds(g: &Guard, v: &[Q]) -> bool {
    g.eval(&|c| match c {
        "x" => Some(v[0]),
        "y" => Some(v[1]),
        _ => None,
    })
}

/// Grid points with coordinates in `{0, 1/2, ..., MAXC + 1}`.
fn grid() -> Vec<[Q; 2]> {
    let n = 2 * (MAXC as i64 + 1);
    (0..=n).flat_map(|a| (0..=n).map(move |b| [q(a, 2), q(b, 2)])).collect()
}

/// Delays `0, step, 2 step, ...` up to `MAXC + 2`.
fn delays(step: i64) -> impl Iterator<Item = Q> {
    (0..=(MAXC as i64 + 2) * step).map(move |k| q(k, step))
}

fn shift(v: &[Q; 2], d: Q) -> [Q; 2] {
    [v[0] + d, v[1] + d]
}

fn fed(g: &Guard) -> Federation {
    g.compile(&clocks()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boolean_operations(a in guard(), b in guard()) {
        let (fa, fb) = (fed(&a), fed(&b));
        let (i, u, s, c) = (fa.intersect(&fb), fa.union(&fb), fa.subtract(&fb), fa.complement());
        for v in grid() {
            let (ia, ib) = (holds(&a, &v), holds(&b, &v));
            prop_assert_eq!(fa.contains(&v), ia);
            prop_assert_eq!(i.contains(&v), ia && ib);
            prop_assert_eq!(u.contains(&v), ia || ib);
            prop_assert_eq!(s.contains(&v), ia && !ib);
            prop_assert_eq!(c.contains(&v), !ia);
        }
        prop_assert_eq!(fa.is_subset(&fb), fa.subtract(&fb).is_empty());
    }

    #[test]
    fn time_and_reset(a in guard()) {
        let fa = fed(&a);
        let (up, down) = (fa.up(), fa.down());
        let reset = fa.reset(&["x"]).unwrap();
        for v in grid() {
            let past = delays(4).filter(|d| *d <= v[0] && *d <= v[1]).any(|d| holds(&a, &[v[0] - d, v[1] - d]));
            prop_assert_eq!(up.contains(&v), past, "up at {:?}", v);
            let future = delays(4).any(|d| holds(&a, &shift(&v, d)));
            prop_assert_eq!(down.contains(&v), future, "down at {:?}", v);
            let r = v[0] == Q::from_integer(0) && delays(4).any(|t| holds(&a, &[t, v[1]]));
            prop_assert_eq!(reset.contains(&v), r, "reset at {:?}", v);
        }
    }

    #[test]
    fn pred_t_pointwise(g in guard(), b in guard()) {
        let p = fed(&g).pred_t(&fed(&b));
        for v in grid() {
            // membership of the bad set along the ray, on an eighth grid
            let bad: Vec<bool> = delays(8).map(|d| holds(&b, &shift(&v, d))).collect();
            let expect = delays(4).enumerate().any(|(k, d)| holds(&g, &shift(&v, d)) && !bad[..2 * k].iter().any(|x| *x));
            prop_assert_eq!(p.contains(&v), expect, "pred_t at {:?}", v);
        }
    }

    #[test]
    fn pred_t_contains_good_and_bad(g in guard(), b in guard()) {
        let (fg, fb) = (fed(&g), fed(&b));
        prop_assert!(fg.intersect(&fb).is_subset(&fg.pred_t(&fb)));
        prop_assert!(fg.is_subset(&fg.pred_t(&fb)));
    }

    #[test]
    fn guard_printing_round_trips(a in guard()) {
        let back = Guard::parse(&a.to_string()).unwrap();
        prop_assert!(fed(&back).equals(&fed(&a)), "{} reparsed as {}", a, back);
        prop_assert!(fed(&a).complement().equals(&fed(&a.negate())));
    }
}
