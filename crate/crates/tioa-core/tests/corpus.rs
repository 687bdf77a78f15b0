//! Corpus-level properties of the analyses and operators.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tioa_core::analysis::{
    consistency, error_states, immediate_errors, inconsistent_states, is_consistent, is_implementation,
    is_locally_consistent, pi, prune_adversarial, refinement, StateSet,
};
use tioa_core::model::{parse_models, serialize_models, Guard, ModelErrorKind, Rel};
use tioa_core::operators::{composition, conjunction, OpOptions};
use tioa_core::oracle::{region_graph, TioaSem};
use tioa_core::semantics::reachable;
use tioa_core::{Federation, System, Tioa};

const CORPUS: &str = include_str!("../../../corpus/university.json");

fn corpus() -> Vec<Tioa> {
    parse_models(CORPUS).unwrap()
}

fn tioa(name: &str) -> Tioa {
    corpus().into_iter().find(|t| t.name == name).unwrap()
}

fn sys(name: &str) -> System {
    tioa(name).compile().unwrap()
}

fn holds(s: &System, t: &System) -> bool {
    refinement(s, t).unwrap().holds
}

fn random_set(rng: &mut ChaCha8Rng, s: &System) -> StateSet {
    let rels = [Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge];
    let mut x = StateSet::empty(s);
    for f in &mut x.sets {
        let mut acc = Federation::empty(&s.clocks);
        for _ in 0..rng.gen_range(0..3) {
            let mut g = Guard::True;
            for c in s.clocks.iter() {
                if rng.gen_bool(0.7) {
                    g = Guard::and(g, Guard::atom(c.as_str(), rels[rng.gen_range(0..4)], rng.gen_range(0..=21)));
                }
            }
            acc = acc.union(&g.compile(&s.clocks).unwrap());
        }
        *f = acc;
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn pi_is_monotone(seed in any::<u64>(), pick in 0usize..15) {
        let ts = corpus();
        let s = ts[pick % ts.len()].compile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_set(&mut rng, &s);
        let y = x.union(&random_set(&mut rng, &s));
        prop_assert!(pi(&s, &x).is_subset(&pi(&s, &y)));
        prop_assert!(error_states(&s, &x).is_subset(&error_states(&s, &y)));
    }
}

#[test]
fn fixpoint_sanity() {
    for t in corpus() {
        let s = t.compile().unwrap();
        let inc = inconsistent_states(&s);
        assert!(pi(&s, &inc.set).equals(&inc.set), "{}", t.name);
        let im = immediate_errors(&s);
        let err = error_states(&s, &inc.set);
        assert!(im.is_subset(&err) && err.is_subset(&inc.set), "{}", t.name);
        assert!(inc.levels.windows(2).all(|w| w[0].is_subset(&w[1])));
    }
}

#[test]
fn local_consistency_implies_consistency() {
    for t in corpus() {
        let s = t.compile().unwrap();
        if is_locally_consistent(&s) {
            assert!(is_consistent(&s), "{}", t.name);
        }
        if is_consistent(&s) {
            let p = prune_adversarial(&s).unwrap().system();
            assert!(is_locally_consistent(&p), "pruned {}", t.name);
            assert!(consistency(&p).holds);
        }
    }
    assert!(is_locally_consistent(&sys("Machine")));
    assert!(!is_locally_consistent(&sys("Inconsistent")));
}

#[test]
fn trivial_automata() {
    let src = r#"{"automata":[{"name":"Idle","clocks":["x"],"inputs":["a"],"outputs":[],
        "locations":[{"id":"l","initial":true}],"edges":[{"source":"l","action":"a","target":"l"}]}]}"#;
    let s = parse_models(src).unwrap()[0].compile().unwrap();
    assert!(is_locally_consistent(&s));
    assert!(is_implementation(&s).is_implementation());
    assert!(holds(&s, &s));
}

#[test]
fn conjunction_refines_its_operands() {
    let opts = OpOptions::default();
    let mut checked = 0;
    let ts = corpus();
    for a in &ts {
        for b in &ts {
            if a.name == b.name || a.alphabet != b.alphabet {
                continue;
            }
            let c = conjunction(a, b, opts).unwrap().compile().unwrap();
            if !is_consistent(&c) {
                continue;
            }
            let p = prune_adversarial(&c).unwrap().system();
            assert!(holds(&p, &a.compile().unwrap()), "{} && {} <= {}", a.name, b.name, a.name);
            assert!(holds(&p, &b.compile().unwrap()), "{} && {} <= {}", a.name, b.name, b.name);
            checked += 1;
        }
    }
    assert!(checked >= 4);
}

#[test]
fn composition_is_a_precongruence_instance() {
    let o = OpOptions::default();
    assert!(holds(&sys("Machine2"), &sys("Machine")));
    let left = composition(&tioa("Machine2"), &tioa("Researcher"), o).unwrap().compile().unwrap();
    let right = composition(&tioa("Machine"), &tioa("Researcher"), o).unwrap().compile().unwrap();
    assert!(holds(&left, &right));
}

fn shuffled(t: &Tioa, rng: &mut ChaCha8Rng) -> Tioa {
    let mut perm: Vec<usize> = (0..t.locations.len()).collect();
    perm.shuffle(rng);
    let mut r = t.clone();
    for (old, &new) in perm.iter().enumerate() {
        r.locations[new] = t.locations[old].clone();
    }
    r.initial = perm[t.initial];
    for e in &mut r.edges {
        e.source = perm[e.source];
        e.target = perm[e.target];
    }
    r.edges.shuffle(rng);
    r
}

#[test]
fn verdicts_do_not_depend_on_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs = [("Machine2", "Machine"), ("Machine", "Machine2"), ("MachineImpl", "Machine"), ("Machine", "Machine")];
    for _ in 0..5 {
        for (a, b) in pairs {
            let (sa, sb) = (sys(a), sys(b));
            let ra = shuffled(&tioa(a), &mut rng).compile().unwrap();
            let rb = shuffled(&tioa(b), &mut rng).compile().unwrap();
            assert_eq!(holds(&sa, &sb), holds(&ra, &rb), "{a} <= {b}");
        }
        for t in corpus() {
            let r = shuffled(&t, &mut rng).compile().unwrap();
            let s = t.compile().unwrap();
            assert_eq!(is_consistent(&s), is_consistent(&r), "{}", t.name);
            assert_eq!(is_locally_consistent(&s), is_locally_consistent(&r), "{}", t.name);
        }
    }
}

#[test]
fn serialization_round_trips() {
    let ts = corpus();
    let once = serialize_models(&ts);
    let back = parse_models(&once).unwrap();
    assert_eq!(serialize_models(&back), once);
    for (a, b) in ts.iter().zip(&back) {
        assert!(holds(&a.compile().unwrap(), &b.compile().unwrap()) && holds(&b.compile().unwrap(), &a.compile().unwrap()));
    }
}

#[test]
fn nondeterministic_mutant_is_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(CORPUS).unwrap();
    let m = v["automata"].as_array_mut().unwrap().iter_mut().find(|a| a["name"] == "Machine").unwrap();
    let edges = m["edges"].as_array_mut().unwrap();
    let coin = edges.iter().find(|e| e["source"] == "busy" && e["action"] == "coin").unwrap().clone();
    let mut twin = coin.clone();
    twin["target"] = if coin["target"] == "idle" { "busy".into() } else { "idle".into() };
    edges.push(twin);
    let err = parse_models(&v.to_string()).unwrap_err();
    assert_eq!(err.kind, ModelErrorKind::Nondeterminism);
    assert!(err.location.unwrap().contains("Machine"));
}

#[test]
fn machine_region_graph_matches_reachability() {
    let t = tioa("Machine");
    let g = region_graph(&TioaSem::new(t.clone())).unwrap();
    let oracle: BTreeSet<String> = g.nodes.iter().map(|n| n.key.0.clone()).collect();
    let s = t.compile().unwrap();
    let symbolic: BTreeSet<String> = reachable(&s).locations().into_iter().map(|l| s.location_id(l).to_string()).collect();
    assert_eq!(oracle, symbolic);
    assert_eq!(oracle, ["busy".to_string(), "idle".to_string()].into_iter().collect());
}
