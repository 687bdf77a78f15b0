use super::*;
use crate::model::{parse_models, Tioa};
use crate::operators::{composition, conjunction, quotient, OpOptions};

const CORPUS: &str = include_str!("../../../../corpus/university.json");

fn tioa(name: &str) -> Tioa {
    parse_models(CORPUS).unwrap().into_iter().find(|t| t.name == name).unwrap()
}

fn sem(name: &str) -> TioaSem<crate::model::Guard> {
    TioaSem::new(tioa(name))
}

const X: Limits = Limits::EXTENDED;

#[test]
fn region_counts() {
    assert_eq!(Region::all(&[2]).len(), 6);
    assert_eq!(Region::all(&[]).len(), 1);
    // 4 shapes per clock, three orderings when both fractions are nonzero
    assert_eq!(Region::all(&[1, 1]).len(), 18);
}

#[test]
fn canonical_points() {
    let h = Q::new(1, 2);
    let third = Q::new(1, 3);
    let r = Region::of(&[h, Q::from_integer(5), third], &[2, 3, 2]);
    assert_eq!(r, Region(vec![(0, 2), (4, 0), (0, 1)]));
    assert_eq!(r.point(), vec![Q::new(2, 3), Q::from_integer(4), third]);
    assert_eq!(Region::of(&r.point(), &[2, 3, 2]), r);
}

#[test]
fn samples_cover_regions() {
    let s = delay_samples(&[Q::new(1, 2)], &[2]);
    let ts: Vec<Q> = s.iter().map(|(t, _)| *t).collect();
    assert_eq!(ts, vec![Q::zero(), Q::new(1, 4), Q::new(1, 2), Q::one(), Q::new(3, 2), Q::new(5, 2)]);
}

#[test]
fn corpus_consistency() {
    assert!(!consistent(&sem("Inconsistent"), X).unwrap());
    assert!(consistent(&sem("PartiallyInconsistent"), X).unwrap());
    for n in ["Machine", "Machine2", "Researcher", "Administration", "Spec", "HalfAdm1", "HalfAdm2"] {
        assert!(consistent(&sem(n), X).unwrap(), "{n}");
        assert!(locally_consistent(&sem(n), X).unwrap(), "{n}");
    }
}

#[test]
fn fig7_error_closure() {
    let g = reachable_graph(&sem("Urgent"), X).unwrap();
    let im = immediate_errors(&g);
    let e = g.err(&im);
    let locs = |v: &[bool]| -> BTreeSet<String> { g.nodes.iter().zip(v).filter(|(_, b)| **b).map(|(n, _)| n.key.0.clone()).collect() };
    assert_eq!(locs(&im), ["q3".to_string()].into_iter().collect());
    assert_eq!(locs(&e), ["q2".to_string(), "q3".to_string()].into_iter().collect());
}

#[test]
fn corpus_refinement() {
    assert!(refines(&sem("Machine2"), &sem("Machine"), X).unwrap());
    assert!(!refines(&sem("Machine"), &sem("Machine2"), X).unwrap());
    assert!(refines(&sem("Machine"), &sem("Machine"), X).unwrap());
    let halves = Product::new(sem("HalfAdm1"), sem("HalfAdm2"), ProductKind::Conjunction).unwrap();
    // neither direction holds for the corpus models
    assert!(!refines(&sem("Administration"), &halves, X).unwrap());
    assert!(!refines(&halves, &sem("Administration"), X).unwrap());
}

#[test]
fn fig8_pruning_does_not_distribute() {
    let s = sem("PruneLeft");
    let t = sem("PruneRight");
    let left = Product::new(Pruned::new(s.clone(), X).unwrap(), Pruned::new(t.clone(), X).unwrap(), ProductKind::Composition).unwrap();
    let right = Pruned::new(Product::new(s, t, ProductKind::Composition).unwrap(), X).unwrap();
    assert!(!bisimilar(&left, &right, X).unwrap());
    assert!(bisimilar(&left, &left, X).unwrap());
}

#[test]
fn conjunction_theorem() {
    for (a, b) in [("A1", "A2"), ("HalfAdm1", "HalfAdm2")] {
        let syn = conjunction(&tioa(a), &tioa(b), OpOptions::default()).unwrap();
        let x = Pruned::new(TioaSem::new(syn), X).unwrap();
        let y = Pruned::new(Product::new(sem(a), sem(b), ProductKind::Conjunction).unwrap(), X).unwrap();
        assert!(bisimilar(&x, &y, X).unwrap(), "{a} {b}");
    }
    let syn = conjunction(&tioa("A1"), &tioa("A2"), OpOptions { reach_prune: false }).unwrap();
    let px = action_projection(&full_graph(&TioaSem::new(syn), X).unwrap());
    let py = action_projection(&full_graph(&Product::new(sem("A1"), sem("A2"), ProductKind::Conjunction).unwrap(), X).unwrap());
    let diff: Vec<_> = py.difference(&px).cloned().collect();
    assert_eq!(diff, vec![("(1,4)".to_string(), "a".to_string(), "(2,4)".to_string())]);
    assert!(px.is_subset(&py));
}

#[test]
fn quotient_matches_tiots_quotient() {
    let small = parse_models(include_str!("../../../../corpus/small.json")).unwrap();
    let (t, s) = (small[0].clone(), small[1].clone());
    let syn = quotient(&t, &s, OpOptions::default()).unwrap();
    let x = Pruned::new(TioaSem::new(syn), X).unwrap();
    let y = Pruned::new(Quotient::new(TioaSem::new(t.clone()), TioaSem::new(s.clone())).unwrap(), X).unwrap();
    assert!(bisimilar(&x, &y, X).unwrap());
}

#[test]
fn composition_alphabet() {
    let c = composition(&tioa("Machine"), &tioa("Researcher"), OpOptions::default()).unwrap();
    let p = Product::new(sem("Machine"), sem("Researcher"), ProductKind::Composition).unwrap();
    assert_eq!(&c.alphabet, p.alphabet());
    assert!(bisimilar(&TioaSem::new(c), &p, X).unwrap());
}

#[test]
fn size_guards() {
    let err = region_graph(&sem("Spec")).unwrap_err();
    assert!(matches!(err, OracleError::SizeGuard(_)));
    assert!(region_graph(&sem("Machine")).is_ok());
    let tight = Limits { max_nodes: 3, ..Limits::EXTENDED };
    assert!(matches!(reachable_graph(&sem("Administration"), tight), Err(OracleError::SizeGuard(_))));
}
