//! Graphviz rendering of automata.

use std::fmt::{Display, Write};

use tioa_core::Automaton;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// `digraph` with one node per location and one edge per transition.
/// Output follows the order of locations and edges in the automaton.
pub fn to_dot<G: Display>(a: &Automaton<G>) -> String {
    let mut s = String::new();
    writeln!(s, "digraph {} {{", quote(&a.name)).unwrap();
    writeln!(s, "  rankdir=LR;").unwrap();
    for (i, l) in a.locations.iter().enumerate() {
        let inv = l.invariant.to_string();
        let label = if inv == "true" { l.id.clone() } else { format!("{}\n{}", l.id, inv) };
        let shape = if i == a.initial { ", peripheries=2" } else { "" };
        writeln!(s, "  {} [shape=ellipse, label={}{}];", quote(&l.id), quote(&label), shape).unwrap();
    }
    for e in &a.edges {
        let dir = if a.alphabet.is_output(&e.action) { '!' } else { '?' };
        let mut label = format!("{}{}", e.action, dir);
        let guard = e.guard.to_string();
        if guard != "true" {
            write!(label, " {guard}").unwrap();
        }
        if !e.resets.is_empty() {
            write!(label, " / {}", e.resets.join(", ")).unwrap();
        }
        let style = if dir == '?' { ", style=dashed" } else { "" };
        writeln!(
            s,
            "  {} -> {} [label={}{}];",
            quote(a.location_id(e.source)),
            quote(a.location_id(e.target)),
            quote(&label),
            style
        )
        .unwrap();
    }
    s.push_str("}\n");
    s
}

/// Nodes and edges of a rendering, as counted from its text.
pub fn count(dot: &str) -> (usize, usize) {
    let edges = dot.lines().filter(|l| l.contains(" -> ")).count();
    let nodes = dot.lines().filter(|l| l.contains("[shape=")).count();
    (nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tioa_core::model::parse_models;

    #[test]
    fn machine_shape() {
        let ms = parse_models(include_str!("../../../corpus/university.json")).unwrap();
        let m = ms.iter().find(|t| t.name == "Machine").unwrap();
        let d = to_dot(m);
        assert_eq!(count(&d), (2, 5));
        assert!(d.contains("coin?"));
        assert!(d.contains("cof!"));
        assert!(d.contains("peripheries=2"));
        assert_eq!(d, to_dot(m));
    }

    #[test]
    fn escaping() {
        assert_eq!(quote("a\"b\\c\nd"), "\"a\\\"b\\\\c\\nd\"");
    }
}
