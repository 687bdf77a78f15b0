//! Query language, evaluation and reporting behind the `tioa-kit` binary.

pub mod dot;
pub mod eval;
pub mod expr;
pub mod gen;
pub mod query;
pub mod report;
