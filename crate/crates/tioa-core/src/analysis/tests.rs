use super::*;
use crate::model::parse_models;
use crate::operators::{composition, conjunction, OpOptions};

const CORPUS: &str = include_str!("../../../../corpus/university.json");

fn sys(name: &str) -> System {
    parse_models(CORPUS).unwrap().into_iter().find(|t| t.name == name).unwrap().compile().unwrap()
}

fn holds(s: &System, t: &System) -> bool {
    refinement(s, t).unwrap().holds
}

#[test]
fn figure_errors() {
    let urgent = sys("Urgent");
    let im = immediate_errors(&urgent);
    assert_eq!(im.locations(), vec!["q3"]);
    let e = error_states(&urgent, &im);
    assert_eq!(e.locations(), vec!["q2", "q3"]);
    assert!(error_states(&urgent, &StateSet::empty(&urgent)).equals(&im));

    let f5 = sys("Inconsistent");
    let im = immediate_errors(&f5);
    assert!(im.get("2").unwrap().equals(f5.inv(1)));
    assert!(im.get("1").unwrap().is_empty());
}

#[test]
fn consistency_verdicts() {
    assert!(!is_consistent(&sys("Inconsistent")));
    assert!(is_consistent(&sys("PartiallyInconsistent")));
    for name in ["Machine", "Machine2", "Researcher", "Administration", "Spec", "HalfAdm1", "HalfAdm2"] {
        assert!(is_consistent(&sys(name)), "{name}");
        assert!(is_locally_consistent(&sys(name)), "{name}");
    }
    let p = sys("PartiallyInconsistent");
    let inc = inconsistent_states(&p).set;
    assert!(inc.get("3").unwrap().equals(p.inv(2)));
    assert!(inc.get("1").unwrap().is_empty());
    assert!(!is_locally_consistent(&sys("Inconsistent")));
}

#[test]
fn inconsistency_trace_ends_in_trap() {
    let v = consistency(&sys("Inconsistent"));
    assert!(!v.holds);
    let cex = v.counterexample.unwrap();
    assert_eq!(cex.steps.last(), Some(&Step::Action { name: "coin".into(), output: false }));
    assert!(cex.state.starts_with("(2)"), "{}", cex.state);
}

#[test]
fn pruning() {
    let p = prune_adversarial(&sys("PartiallyInconsistent")).unwrap();
    assert!(p.cons[2].is_empty());
    assert!(is_locally_consistent(&p.system()));
    assert!(prune_adversarial(&sys("Inconsistent")).is_err());
    let s = prune_adversarial(&sys("PruneLeft")).unwrap();
    assert!(s.cons[1].is_empty() && s.cons[2].is_empty());
}

#[test]
fn implementations() {
    let r = is_implementation(&sys("Machine"));
    assert!(!r.is_implementation());
    assert!(r.violations.iter().any(|v| v.location == "busy" && v.kind == ViolationKind::OutputUrgency { action: "cof".into() }));
    assert!(is_implementation(&sys("MachineImpl")).is_implementation());
}

#[test]
fn machine_refinements() {
    let (m, m2) = (sys("Machine"), sys("Machine2"));
    assert!(holds(&m2, &m));
    let v = refinement(&m, &m2).unwrap();
    assert!(!v.holds);
    assert!(v.counterexample.is_some());
    assert!(holds(&m, &m));
    assert!(holds(&sys("MachineImpl"), &m));
}

#[test]
fn administration_and_halves() {
    let adm = sys("Administration");
    let halves = conjunction(&sys("HalfAdm1"), &sys("HalfAdm2"), OpOptions::default()).unwrap();
    // Administration ignores pub? in location 2 and then idles in location 3,
    // while HalfAdm2 owes news! within 2 time units of every pub?.
    let v = refinement(&adm, &halves).unwrap();
    assert!(!v.holds);
    let cex = v.counterexample.unwrap();
    assert!(cex.steps.contains(&Step::Action { name: "pub".into(), output: false }));
    assert!(cex.reason.contains("delay"));
    assert!(!holds(&halves, &adm));
}

#[test]
fn delay_counterexample() {
    // Machine's busy location allows y up to 6; Machine2 stops at 5.
    let src = CORPUS.replace(r#""cof", "guard": "y >= 4", "target": "idle"},
        {"source": "idle", "action": "tea", "guard": "y >= 2", "target": "idle"},
        {"source": "busy", "action": "coin", "target": "busy"}"#, r#""cof", "guard": "y >= 6", "target": "idle"},
        {"source": "idle", "action": "tea", "guard": "y >= 2", "target": "idle"},
        {"source": "busy", "action": "coin", "target": "busy"}"#);
    assert_ne!(src, CORPUS);
    let ts = parse_models(&src).unwrap();
    let find = |n: &str| ts.iter().find(|t| t.name == n).unwrap().compile().unwrap();
    let v = refinement(&find("Machine"), &find("Machine2")).unwrap();
    assert!(!v.holds);
    let cex = v.counterexample.unwrap();
    assert!(cex.reason.contains("delay"), "{}", cex.reason);
}

#[test]
fn alphabet_errors() {
    assert!(matches!(refinement(&sys("Machine"), &sys("Researcher")), Err(AnalysisError::Alphabet(_))));
}

#[test]
fn bisimulations() {
    let m = sys("Machine");
    assert!(bisimilar(&m, &m).holds);
    assert!(!bisimilar(&m, &sys("Machine2")).holds);
    let o = OpOptions::default();
    let s = sys("PruneLeft");
    let t = sys("PruneRight");
    let left = composition(&prune_adversarial(&s).unwrap().system(), &prune_adversarial(&t).unwrap().system(), o).unwrap();
    let right = prune_adversarial(&composition(&s, &t, o).unwrap()).unwrap().system();
    assert!(!bisimilar(&left, &right).holds);
}

#[test]
fn pi_is_monotone_on_levels() {
    let p = sys("PartiallyInconsistent");
    let inc = inconsistent_states(&p);
    for w in inc.levels.windows(2) {
        assert!(w[0].is_subset(&w[1]));
        assert!(pi(&p, &w[0]).is_subset(&pi(&p, &w[1])));
    }
    assert!(pi(&p, &inc.set).equals(&inc.set));
}
