//! Seeded generator of small random automata.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tioa_core::model::Rel;
use tioa_core::zones::clocks_of;
use tioa_core::{Alphabet, Automaton, Edge, Guard, Location, Tioa};

/// Default seed of the property suites; `TIOA_SEED` overrides it.
pub const DEFAULT_SEED: u64 = 0x7104;

pub fn seed_from_env() -> u64 {
    std::env::var("TIOA_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_locations: usize,
    pub max_clocks: usize,
    pub max_constant: i32,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_locations: 3, max_clocks: 2, max_constant: 6 }
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    shape: Shape,
    count: usize,
}

const CLOCKS: [&str; 4] = ["x", "y", "z", "w"];

impl Generator {
    pub fn new(seed: u64, shape: Shape) -> Self {
        Generator { rng: ChaCha8Rng::seed_from_u64(seed), shape, count: 0 }
    }

    fn atom(&mut self, clocks: &[&str], upper_only: bool) -> Guard {
        let c = *clocks.choose(&mut self.rng).unwrap();
        let k = self.rng.gen_range(0..=self.shape.max_constant);
        let rel = if upper_only {
            *[Rel::Le, Rel::Lt].choose(&mut self.rng).unwrap()
        } else {
            *[Rel::Le, Rel::Lt, Rel::Ge, Rel::Gt, Rel::Eq].choose(&mut self.rng).unwrap()
        };
        let k = if rel == Rel::Lt && upper_only { k.max(1) } else { k };
        Guard::atom(c, rel, k)
    }

    fn guard(&mut self, clocks: &[&str]) -> Guard {
        if clocks.is_empty() || self.rng.gen_bool(0.3) {
            return Guard::True;
        }
        let g = self.atom(clocks, false);
        if self.rng.gen_bool(0.3) {
            Guard::and(g, self.atom(clocks, false))
        } else {
            g
        }
    }

    fn resets(&mut self, clocks: &[&str]) -> Vec<String> {
        clocks.iter().filter(|_| self.rng.gen_bool(0.4)).map(|c| c.to_string()).collect()
    }

    /// An automaton over the given alphabet; inputs and outputs are given
    /// without suffixes.
    pub fn automaton(&mut self, inputs: &[&str], outputs: &[&str]) -> Tioa {
        self.count += 1;
        let n_loc = self.rng.gen_range(1..=self.shape.max_locations);
        let n_clk = self.rng.gen_range(0..=self.shape.max_clocks);
        let clocks: Vec<&str> = CLOCKS[..n_clk].to_vec();
        let locations = (0..n_loc)
            .map(|l| {
                let invariant = if clocks.is_empty() || self.rng.gen_bool(0.5) {
                    Guard::True
                } else {
                    self.atom(&clocks, true)
                };
                Location { id: format!("l{l}"), invariant }
            })
            .collect();
        let mut edges = Vec::new();
        let actions: Vec<&str> = inputs.iter().chain(outputs).copied().collect();
        for l in 0..n_loc {
            for &a in &actions {
                let pick = self.rng.gen_range(0..10);
                let edge = |rng: &mut Self, guard: Guard| Edge {
                    source: l,
                    action: a.to_string(),
                    guard,
                    resets: rng.resets(&clocks),
                    target: rng.rng.gen_range(0..n_loc),
                };
                match pick {
                    0..=2 => {}
                    3..=7 => {
                        let g = self.guard(&clocks);
                        edges.push(edge(self, g));
                    }
                    _ if !clocks.is_empty() => {
                        // two edges with complementary guards
                        let c = *clocks.choose(&mut self.rng).unwrap();
                        let k = self.rng.gen_range(0..=self.shape.max_constant);
                        edges.push(edge(self, Guard::atom(c, Rel::Le, k)));
                        edges.push(edge(self, Guard::atom(c, Rel::Gt, k)));
                    }
                    _ => edges.push(edge(self, Guard::True)),
                }
            }
        }
        Automaton {
            name: format!("R{}", self.count),
            clocks: clocks_of(&clocks),
            alphabet: Alphabet::new(inputs, outputs),
            locations,
            initial: 0,
            edges,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_models() {
        let mut a = Generator::new(5, Shape::default());
        let mut b = Generator::new(5, Shape::default());
        for _ in 0..20 {
            let (x, y) = (a.automaton(&["i"], &["o"]), b.automaton(&["i"], &["o"]));
            assert_eq!(tioa_core::model::serialize_models(&[x]), tioa_core::model::serialize_models(&[y]));
        }
    }

    #[test]
    fn generated_models_are_valid() {
        let mut g = Generator::new(11, Shape::default());
        for _ in 0..100 {
            let t = g.automaton(&["i"], &["o", "p"]);
            assert!(t.locations.len() <= 3 && t.clocks.len() <= 2);
            let s = t.compile().expect("compiles");
            s.check_determinism().expect("deterministic");
        }
    }
}
