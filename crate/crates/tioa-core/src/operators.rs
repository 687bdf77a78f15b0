//! Conjunction, parallel composition and quotient of timed I/O automata.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Alphabet, Automaton, Edge, Formula, Guard, Location, Rel, System};
use crate::semantics::{reachable, restrict_to_reachable};
use crate::zones::{clocks_of, Bound, Clocks, Federation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("alphabet mismatch: {0}")]
    Alphabet(String),
}

#[derive(Debug, Clone, Copy)]
pub struct OpOptions {
    /// Drop product locations (and edges) that are not reachable.
    pub reach_prune: bool,
}

impl Default for OpOptions {
    fn default() -> Self {
        OpOptions { reach_prune: true }
    }
}

/// Guard representations that can be compiled for reachability pruning.
pub trait Compilable: Formula {
    fn to_federation(&self, clocks: &Clocks) -> Federation;
    /// `clocks[x] <= 0`.
    fn le_zero(clocks: &Clocks, x: usize) -> Self;
}

impl Compilable for Guard {
    fn to_federation(&self, clocks: &Clocks) -> Federation {
        self.compile(clocks).expect("operator output refers to unknown clocks")
    }
    fn le_zero(clocks: &Clocks, x: usize) -> Self {
        Guard::atom(&clocks[x], Rel::Le, 0)
    }
}

impl Compilable for Federation {
    fn to_federation(&self, _: &Clocks) -> Federation {
        self.clone()
    }
    fn le_zero(clocks: &Clocks, x: usize) -> Self {
        Federation::bound(clocks, x, true, Bound::le(0))
    }
}

fn to_system<G: Compilable>(a: &Automaton<G>) -> System {
    Automaton {
        name: a.name.clone(),
        clocks: a.clocks.clone(),
        alphabet: a.alphabet.clone(),
        locations: a
            .locations
            .iter()
            .map(|l| Location { id: l.id.clone(), invariant: l.invariant.to_federation(&a.clocks) })
            .collect(),
        initial: a.initial,
        edges: a
            .edges
            .iter()
            .map(|e| Edge {
                source: e.source,
                action: e.action.clone(),
                guard: e.guard.to_federation(&a.clocks),
                resets: e.resets.clone(),
                target: e.target,
            })
            .collect(),
    }
}

/// Remove unreachable locations and edges that never fire.
pub fn prune_unreachable<G: Compilable>(a: &Automaton<G>) -> Automaton<G> {
    let reach = reachable(&to_system(a));
    restrict_to_reachable(a, &reach)
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    let mut k = 1;
    while taken.contains(&name) {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}

/// Joint clock list; colliding names get `left.`/`right.` prefixes.
pub(crate) fn join_clocks(a: &Clocks, b: &Clocks) -> (Clocks, Vec<String>, Vec<String>) {
    let clash: BTreeSet<&String> = a.iter().filter(|c| b.contains(c)).collect();
    let mut taken: BTreeSet<String> = a.iter().chain(b.iter()).filter(|c| !clash.contains(c)).cloned().collect();
    let rename = |c: &String, side: &str, taken: &mut BTreeSet<String>| {
        if clash.contains(c) {
            let n = fresh(&format!("{side}.{c}"), taken);
            taken.insert(n.clone());
            n
        } else {
            c.clone()
        }
    };
    let ra: Vec<String> = a.iter().map(|c| rename(c, "left", &mut taken)).collect();
    let rb: Vec<String> = b.iter().map(|c| rename(c, "right", &mut taken)).collect();
    let joint = ra.iter().chain(rb.iter()).cloned().collect::<Vec<_>>();
    (clocks_of(&joint), ra, rb)
}

struct Side<'a, G> {
    aut: &'a Automaton<G>,
    names: Vec<String>,
}

impl<G: Formula> Side<'_, G> {
    fn rename(&self) -> impl Fn(&str) -> String + '_ {
        move |c: &str| {
            let k = self.aut.clocks.iter().position(|x| x == c).expect("unknown clock");
            self.names[k].clone()
        }
    }

    fn lift(&self, g: &G, target: &Clocks) -> G {
        let r = self.rename();
        g.embed(&r, target)
    }

    fn resets(&self, e: &Edge<G>) -> Vec<String> {
        let r = self.rename();
        e.resets.iter().map(|c| r(c)).collect()
    }
}

fn union_resets(a: Vec<String>, b: Vec<String>) -> Vec<String> {
    let mut out = a;
    for c in b {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn product<G: Formula>(a: &Automaton<G>, b: &Automaton<G>, name: String, alphabet: Alphabet) -> Automaton<G> {
    let (clocks, ra, rb) = join_clocks(&a.clocks, &b.clocks);
    let sa = Side { aut: a, names: ra };
    let sb = Side { aut: b, names: rb };
    let nb = b.locations.len();
    let idx = |i: usize, j: usize| i * nb + j;
    let mut locations = Vec::new();
    for la in &a.locations {
        for lb in &b.locations {
            locations.push(Location {
                id: format!("({},{})", la.id, lb.id),
                invariant: sa.lift(&la.invariant, &clocks).conj(&sb.lift(&lb.invariant, &clocks)),
            });
        }
    }
    let act_a = a.alphabet.actions();
    let act_b = b.alphabet.actions();
    let adj_a = a.adjacency();
    let adj_b = b.adjacency();
    let mut edges = Vec::new();
    for i in 0..a.locations.len() {
        for j in 0..nb {
            for &ka in &adj_a[i] {
                let ea = &a.edges[ka];
                if act_b.contains(&ea.action) {
                    for &kb in &adj_b[j] {
                        let eb = &b.edges[kb];
                        if eb.action != ea.action {
                            continue;
                        }
                        edges.push(Edge {
                            source: idx(i, j),
                            action: ea.action.clone(),
                            guard: sa.lift(&ea.guard, &clocks).conj(&sb.lift(&eb.guard, &clocks)),
                            resets: union_resets(sa.resets(ea), sb.resets(eb)),
                            target: idx(ea.target, eb.target),
                        });
                    }
                } else {
                    edges.push(Edge {
                        source: idx(i, j),
                        action: ea.action.clone(),
                        guard: sa.lift(&ea.guard, &clocks),
                        resets: sa.resets(ea),
                        target: idx(ea.target, j),
                    });
                }
            }
            for &kb in &adj_b[j] {
                let eb = &b.edges[kb];
                if !act_a.contains(&eb.action) {
                    edges.push(Edge {
                        source: idx(i, j),
                        action: eb.action.clone(),
                        guard: sb.lift(&eb.guard, &clocks),
                        resets: sb.resets(eb),
                        target: idx(i, eb.target),
                    });
                }
            }
        }
    }
    edges.retain(|e| !e.guard.is_bottom());
    Automaton { name, clocks, alphabet, locations, initial: idx(a.initial, b.initial), edges }
}

fn finish<G: Compilable>(a: Automaton<G>, opts: OpOptions) -> Automaton<G> {
    if opts.reach_prune {
        prune_unreachable(&a)
    } else {
        a
    }
}

/// `a1 ∧ a2`.
pub fn conjunction<G: Compilable>(a1: &Automaton<G>, a2: &Automaton<G>, opts: OpOptions) -> Result<Automaton<G>, OpError> {
    let (x, y) = (&a1.alphabet, &a2.alphabet);
    if let Some(a) = x.inputs.intersection(&y.outputs).chain(x.outputs.intersection(&y.inputs)).next() {
        return Err(OpError::Alphabet(format!("`{a}` is an input of one operand and an output of the other")));
    }
    let alphabet = Alphabet {
        inputs: x.inputs.union(&y.inputs).cloned().collect(),
        outputs: x.outputs.union(&y.outputs).cloned().collect(),
    };
    let name = format!("({} && {})", a1.name, a2.name);
    Ok(finish(product(a1, a2, name, alphabet), opts))
}

/// `a1 ∥ a2`.
pub fn composition<G: Compilable>(a1: &Automaton<G>, a2: &Automaton<G>, opts: OpOptions) -> Result<Automaton<G>, OpError> {
    let (x, y) = (&a1.alphabet, &a2.alphabet);
    if let Some(a) = x.outputs.intersection(&y.outputs).next() {
        return Err(OpError::Alphabet(format!("`{a}` is an output of both operands")));
    }
    let alphabet = Alphabet {
        inputs: x
            .inputs
            .difference(&y.outputs)
            .chain(y.inputs.difference(&x.outputs))
            .cloned()
            .collect(),
        outputs: x.outputs.union(&y.outputs).cloned().collect(),
    };
    let name = format!("({} || {})", a1.name, a2.name);
    Ok(finish(product(a1, a2, name, alphabet), opts))
}

/// Reserved names used by the quotient construction, freshened on clashes.
#[derive(Debug, Clone)]
pub struct QuotientNames {
    pub universal: String,
    pub error: String,
    pub new_input: String,
    pub new_clock: String,
}

/// `t \\ s`: the most general specification whose composition with `s`
/// refines `t`.
pub fn quotient<G: Compilable>(t: &Automaton<G>, s: &Automaton<G>, opts: OpOptions) -> Result<Automaton<G>, OpError> {
    Ok(finish(quotient_with_names(t, s)?.0, opts))
}

pub fn quotient_with_names<G: Compilable>(
    t: &Automaton<G>,
    s: &Automaton<G>,
) -> Result<(Automaton<G>, QuotientNames), OpError> {
    let (at, asp) = (&t.alphabet, &s.alphabet);
    if let Some(a) = asp.outputs.intersection(&at.inputs).next() {
        return Err(OpError::Alphabet(format!("`{a}` is an output of the divisor and an input of the dividend")));
    }
    let (base_clocks, rt, rs) = join_clocks(&t.clocks, &s.clocks);
    let taken_clocks: BTreeSet<String> = base_clocks.iter().cloned().collect();
    let x_new = fresh("x_new", &taken_clocks);
    let mut all = base_clocks.to_vec();
    all.push(x_new.clone());
    let clocks = clocks_of(&all);
    let act_t = at.actions();
    let act_s = asp.actions();
    let taken_actions: BTreeSet<String> = act_t.union(&act_s).cloned().collect();
    let i_new = fresh("i_new", &taken_actions);
    let ids: BTreeSet<String> = t
        .locations
        .iter()
        .flat_map(|lt| s.locations.iter().map(move |ls| format!("({},{})", lt.id, ls.id)))
        .collect();
    let l_univ = fresh("l_univ", &ids);
    let l_err = fresh("l_err", &ids);

    let inputs: BTreeSet<String> =
        at.inputs.iter().chain(asp.outputs.iter()).cloned().chain([i_new.clone()]).collect();
    let outputs: BTreeSet<String> = at
        .outputs
        .difference(&asp.outputs)
        .chain(asp.inputs.difference(&at.inputs))
        .cloned()
        .collect();
    let alphabet = Alphabet { inputs: inputs.clone(), outputs: outputs.clone() };

    let st = Side { aut: t, names: rt };
    let ss = Side { aut: s, names: rs };
    let tt = G::top(&clocks);
    let ns = s.locations.len();
    let idx = |i: usize, j: usize| i * ns + j;
    let u = t.locations.len() * ns;
    let e = u + 1;

    let mut locations = Vec::new();
    for lt in &t.locations {
        for ls in &s.locations {
            locations.push(Location { id: format!("({},{})", lt.id, ls.id), invariant: tt.clone() });
        }
    }
    locations.push(Location { id: l_univ.clone(), invariant: tt.clone() });
    let x_idx = clocks.len() - 1;
    let xnew_zero = G::le_zero(&clocks, x_idx);
    locations.push(Location { id: l_err.clone(), invariant: xnew_zero.clone() });

    let inv_t = |l: usize| st.lift(&t.locations[l].invariant, &clocks);
    let inv_s = |l: usize| ss.lift(&s.locations[l].invariant, &clocks);
    // Inv(l2)[r := 0] for an edge of either side, in joint clock names.
    let tgt_t = |ed: &Edge<G>| inv_t(ed.target).zero_subst(&st.resets(ed), &clocks);
    let tgt_s = |ed: &Edge<G>| inv_s(ed.target).zero_subst(&ss.resets(ed), &clocks);
    let adj_t = t.adjacency();
    let adj_s = s.adjacency();
    let mut edges: Vec<Edge<G>> = Vec::new();
    let push = |edges: &mut Vec<Edge<G>>, source: usize, action: &str, guard: G, resets: Vec<String>, target: usize| {
        if !guard.is_bottom() {
            edges.push(Edge { source, action: action.to_string(), guard, resets, target });
        }
    };

    for i in 0..t.locations.len() {
        for j in 0..ns {
            let src = idx(i, j);
            let not_inv_s = inv_s(j).negation(&clocks);
            // rule 1: shared actions
            for &kt in &adj_t[i] {
                let et = &t.edges[kt];
                if !act_s.contains(&et.action) {
                    continue;
                }
                for &ks in &adj_s[j] {
                    let es = &s.edges[ks];
                    if es.action != et.action {
                        continue;
                    }
                    let g = st
                        .lift(&et.guard, &clocks)
                        .conj(&tgt_t(et))
                        .conj(&ss.lift(&es.guard, &clocks))
                        .conj(&inv_s(j))
                        .conj(&tgt_s(es));
                    push(&mut edges, src, &et.action, g, union_resets(st.resets(et), ss.resets(es)), idx(et.target, es.target));
                }
            }
            // rule 2: actions of S only
            for &ks in &adj_s[j] {
                let es = &s.edges[ks];
                if act_t.contains(&es.action) {
                    continue;
                }
                let g = ss.lift(&es.guard, &clocks).conj(&inv_s(j)).conj(&tgt_s(es));
                push(&mut edges, src, &es.action, g, ss.resets(es), idx(i, es.target));
            }
            // rule 3: outputs S cannot take
            for a in &asp.outputs {
                let gs = adj_s[j]
                    .iter()
                    .map(|&k| &s.edges[k])
                    .filter(|es| &es.action == a)
                    .fold(G::bottom(&clocks), |acc, es| acc.disj(&ss.lift(&es.guard, &clocks).conj(&tgt_s(es))));
                push(&mut edges, src, a, gs.negation(&clocks), vec![], u);
            }
            // rule 4: S invariant violated; i_new is left to rule 7
            for a in &alphabet.actions() {
                if *a == i_new {
                    continue;
                }
                push(&mut edges, src, a, not_inv_s.clone(), vec![], u);
            }
            // rule 5: shared outputs T cannot take
            for a in asp.outputs.intersection(&at.outputs) {
                let gt = adj_t[i]
                    .iter()
                    .map(|&k| &t.edges[k])
                    .filter(|et| &et.action == a)
                    .fold(G::bottom(&clocks), |acc, et| acc.disj(&st.lift(&et.guard, &clocks).conj(&tgt_t(et))));
                let not_gt = gt.negation(&clocks);
                for &ks in &adj_s[j] {
                    let es = &s.edges[ks];
                    if &es.action != a {
                        continue;
                    }
                    let g = ss.lift(&es.guard, &clocks).conj(&inv_s(j)).conj(&tgt_s(es)).conj(&not_gt);
                    push(&mut edges, src, a, g, vec![x_new.clone()], e);
                }
            }
            // rules 6 and 7: the fresh input
            let g6 = inv_t(i).negation(&clocks).conj(&inv_s(j));
            push(&mut edges, src, &i_new, g6, vec![x_new.clone()], e);
            let g7 = inv_t(i).disj(&not_inv_s);
            push(&mut edges, src, &i_new, g7, vec![], src);
            // rule 8: actions of T only
            for &kt in &adj_t[i] {
                let et = &t.edges[kt];
                if act_s.contains(&et.action) {
                    continue;
                }
                let g = st.lift(&et.guard, &clocks).conj(&tgt_t(et)).conj(&inv_s(j));
                push(&mut edges, src, &et.action, g, st.resets(et), idx(et.target, j));
            }
        }
    }
    // rules 9 and 10
    for a in alphabet.actions() {
        push(&mut edges, u, &a, tt.clone(), vec![], u);
    }
    for a in &inputs {
        push(&mut edges, e, a, xnew_zero.clone(), vec![], e);
    }
    let aut = Automaton {
        name: format!("({} \\\\ {})", t.name, s.name),
        clocks,
        alphabet,
        locations,
        initial: idx(t.initial, s.initial),
        edges,
    };
    Ok((aut, QuotientNames { universal: l_univ, error: l_err, new_input: i_new, new_clock: x_new }))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_models, Tioa};
    use crate::zones::Q;

    const CORPUS: &str = include_str!("../../../corpus/university.json");

    fn tioa(name: &str) -> Tioa {
        parse_models(CORPUS).unwrap().into_iter().find(|t| t.name == name).unwrap()
    }

    fn ids<G>(a: &Automaton<G>) -> Vec<&str> {
        a.locations.iter().map(|l| l.id.as_str()).collect()
    }

    const FULL: OpOptions = OpOptions { reach_prune: false };

    #[test]
    fn conjunction_of_halves() {
        let c = conjunction(&tioa("HalfAdm1"), &tioa("HalfAdm2"), OpOptions::default()).unwrap();
        assert_eq!(c.locations.len(), 4);
        assert_eq!(c.alphabet, Alphabet::new(&["grant", "pub"], &["coin", "news"]));
        assert_eq!(c.name, "(HalfAdm1 && HalfAdm2)");
        let err = conjunction(&tioa("Machine"), &tioa("Researcher"), FULL).unwrap_err();
        assert!(matches!(err, OpError::Alphabet(m) if m.contains("cof")));
    }

    #[test]
    fn composition_alphabet_and_clash() {
        let c = composition(&tioa("Machine"), &tioa("Researcher"), FULL).unwrap();
        assert_eq!(c.alphabet, Alphabet::new(&["coin"], &["cof", "pub", "tea"]));
        assert_eq!(c.locations.len(), 8);
        assert!(composition(&tioa("Machine"), &tioa("Machine2"), FULL).is_err());
    }

    #[test]
    fn clashing_clocks_are_prefixed() {
        let c = conjunction(&tioa("Machine2"), &tioa("Machine"), FULL).unwrap();
        assert_eq!(c.clocks.to_vec(), ["left.y", "right.y"]);
    }

    #[test]
    fn reachability_pruning() {
        let full = conjunction(&tioa("A1"), &tioa("A2"), FULL).unwrap();
        let reach = conjunction(&tioa("A1"), &tioa("A2"), OpOptions::default()).unwrap();
        assert_eq!(full.locations.len(), 4);
        assert!(reach.locations.len() < full.locations.len());
        assert_eq!(ids(&reach)[reach.initial], "(1,3)");
    }

    #[test]
    fn quotient_structure() {
        let (q, names) = quotient_with_names(&tioa("Spec"), &tioa("Administration")).unwrap();
        assert_eq!(q.locations.len(), 3 * 4 + 2);
        assert_eq!(names.universal, "l_univ");
        assert_eq!(names.error, "l_err");
        assert_eq!(q.alphabet, Alphabet::new(&["coin", "grant", "i_new", "news"], &["pub"]));
        assert_eq!(q.clocks.last().unwrap(), "x_new");
        let e = q.location_index("l_err").unwrap();
        assert_eq!(q.locations[e].invariant.to_string(), "x_new <= 0");
        // the error is reached on i_new once Spec's deadline has passed
        let src = q.location_index("(2,2)").unwrap();
        let edge = q.edges.iter().find(|ed| ed.source == src && ed.action == "i_new" && ed.target == e).unwrap();
        let at = |u: i64, z: i64| {
            move |c: &str| match c {
                "u" => Some(Q::from_integer(u)),
                "z" => Some(Q::from_integer(z)),
                _ => Some(Q::from_integer(0)),
            }
        };
        assert!(edge.guard.eval(&at(21, 1)));
        assert!(!edge.guard.eval(&at(20, 1)));
        assert!(!edge.guard.eval(&at(21, 3)));
        assert!(quotient(&tioa("Researcher"), &tioa("Machine"), FULL).is_err());
    }

    #[test]
    fn quotient_names_are_freshened() {
        let src = r#"{"automata":[
            {"name":"T","clocks":["x_new"],"inputs":["i_new"],"outputs":["o"],
             "locations":[{"id":"l_univ","initial":true}],
             "edges":[{"source":"l_univ","action":"i_new","target":"l_univ"}]},
            {"name":"S","clocks":[],"inputs":[],"outputs":[],
             "locations":[{"id":"s","initial":true}],"edges":[]}]}"#;
        let ms = parse_models(src).unwrap();
        let (q, names) = quotient_with_names(&ms[0], &ms[1]).unwrap();
        assert_eq!(names.new_input, "i_new_1");
        assert_eq!(names.new_clock, "x_new_1");
        assert_eq!(names.universal, "l_univ");
        assert!(q.alphabet.inputs.contains("i_new") && q.alphabet.inputs.contains("i_new_1"));
    }

    #[test]
    fn federation_operands() {
        let a = tioa("HalfAdm1").compile().unwrap();
        let b = tioa("HalfAdm2").compile().unwrap();
        let c = conjunction(&a, &b, OpOptions::default()).unwrap();
        let g = conjunction(&tioa("HalfAdm1"), &tioa("HalfAdm2"), OpOptions::default()).unwrap().compile().unwrap();
        assert_eq!(ids(&c), ids(&g));
        assert_eq!(c.edges.len(), g.edges.len());
    }
}
