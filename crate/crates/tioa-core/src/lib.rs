//! Timed I/O automata: zones, models, symbolic semantics, specification
//! operators, consistency and refinement checking, and a region-graph oracle.

pub mod analysis;
pub mod model;
pub mod operators;
pub mod oracle;
pub mod semantics;
pub mod zones;

pub use model::{Alphabet, Automaton, Edge, Guard, Location, ModelError, System, Tioa};
pub use zones::{Bound, Clocks, Dbm, Federation, Relation, Q};
